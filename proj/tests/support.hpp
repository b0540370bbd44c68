#pragma once

#include <cstdint>
#include <string>

#include "slope/experiments.hpp"
#include "slope/numerics.hpp"
#include "slope/pattern.hpp"
#include "slope/recovery.hpp"
#include "slope/solver.hpp"
#include "slope/sorted_l1.hpp"

namespace slope::testing {

/// 2x2 design with X'X = [[1, .6], [.6, 1]].
Matrix toy_design();
TuningSequence toy_lambda();  // (4, 2)

/// Standard normal CDF from the power series 1/2 + phi(x) sum x^(2n+1)/(2n+1)!!,
/// independent of the library's implementation.
double series_normal_cdf(double x);

/// P(m + W / alpha in the unit ball of J*_Lambda) for W ~ N(0, I_2), by
/// adaptive Simpson on the exact inner interval.
double quadrature_ball_probability(const Vector& m, const Vector& lambda, double alpha);

/// Uniformly random pattern of length p with k clusters.
SlopePattern random_pattern(SeededRng& rng, int p, int k);
/// k strictly decreasing positive values with gaps in [gap_lo, gap_hi].
Vector random_cluster_values(SeededRng& rng, int k, double gap_lo, double gap_hi);
/// Strictly decreasing positive sequence of length p.
TuningSequence random_strict_lambda(SeededRng& rng, int p);

struct PropertyResult {
    int cases = 0;
    int failures = 0;
    std::string first_failure;
    bool ok() const { return failures == 0 && cases > 0; }
    void fail(const std::string& what) {
        if (failures++ == 0) first_failure = what;
    }
};

PropertyResult prop_norm_axioms(int cases, std::uint64_t seed);
PropertyResult prop_holder(int cases, std::uint64_t seed);
PropertyResult prop_prox_certified(int cases, std::uint64_t seed);
PropertyResult prop_membership_agreement(int cases, std::uint64_t seed);
PropertyResult prop_lemma_a1(int cases, std::uint64_t seed);
PropertyResult prop_penrose(int cases, std::uint64_t seed);
/// mc_recovery and calibrate_alpha give identical output on 1 and 4 threads.
PropertyResult prop_parallel_determinism(int reps, std::uint64_t seed);

/// Smallest distance between distinct sorted magnitudes of b, zero included.
double pattern_gap(const Vector& b);

struct EquivalenceOutcome {
    int instances = 0;
    int agree = 0;
    int disagree_explained = 0;
    int disagree_unexplained = 0;
    int recovered = 0;
};

/// Certificate verdict against the solver's fitted pattern on random
/// instances (p <= 8, n in [p, 3p]).
EquivalenceOutcome theorem_equivalence(int instances, std::uint64_t seed);

}  // namespace slope::testing
