#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "slope/lambda_seq.hpp"
#include "slope/numerics.hpp"
#include "slope/pattern.hpp"
#include "slope/recovery.hpp"
#include "slope/solver.hpp"

namespace slope {

/// Runs fn(i) for i in [0, count) on up to `threads` workers (0 = hardware
/// concurrency). Exceptions are rethrown on the calling thread.
void parallel_for(std::size_t count, const std::function<void(std::size_t)>& fn, unsigned threads = 0);

struct DesignSpec {
    enum class Kind { orthogonal, gaussian_iid, markov_genetic, fixed };
    Kind kind = Kind::gaussian_iid;
    int n = 0;
    int p = 0;
    double flip_prob = 0.0476;
    bool standardize = true;
    Matrix fixed;  // used when kind == fixed
};

/// orthogonal: Q factor of a Gaussian n x p draw (throws InvalidDesign if n < p);
/// gaussian_iid: N(0,1) entries; markov_genetic: rows are +-1 chains with a
/// fair start and the given flip probability, columns standardized to mean 0
/// and population variance 1 when requested (a constant column is left centred).
Matrix gen_design(const DesignSpec& spec, SeededRng& rng);

std::string design_kind_name(DesignSpec::Kind kind);
/// Throws InputError on an unknown name.
DesignSpec::Kind parse_design_kind(const std::string& name);

struct ProbEstimate {
    double prob = 0.0;
    double se = 0.0;
    int reps = 0;
};

/// Gaussian law of the vector whose dual norm decides the upper bound:
/// pi/alpha ~ N(mean, cov / alpha^2).
struct PiLaw {
    Vector mean;
    Matrix cov;
    TuningSequence lambda;
    bool lambda_in_col = true;
};

/// Finite design: mean X'(X_tilde')^+ Lambda_tilde, covariance sigma^2 X'(I - P_tilde)X.
PiLaw pi_law(const RecoveryContext& ctx, double sigma);
/// Limit n^{-1} X'X -> C.
PiLaw pi_law(const AsymptoticSpec& spec);

/// Monte-Carlo estimate of P(J*_Lambda(pi_alpha) <= 1). Sample j uses stream
/// (seed, j). Returns 0 at once when Lambda_tilde is outside col(X_tilde').
ProbEstimate upper_bound_probability(const PiLaw& law, double alpha, int mc_reps, std::uint64_t seed,
                                     const Tolerances& tol = {});

struct Calibration {
    double alpha = 0.0;
    ProbEstimate achieved;  // upper-bound probability at alpha on the same samples
    double ceiling = 0.0;   // limit of the probability as alpha grows
};

/// Smallest alpha whose upper-bound probability reaches eta. Each sample
/// contributes the threshold scale above which its event holds (the event
/// set in 1/alpha is an interval containing 0 when irrepresentability
/// holds), so the answer is an empirical quantile on common random numbers.
/// Throws CalibrationFailed when eta exceeds the attainable ceiling.
Calibration calibrate_alpha(const PiLaw& law, double eta, int mc_reps, std::uint64_t seed,
                            const Tolerances& tol = {});

struct RepRecord {
    int rep = 0;
    double alpha = 0.0;  // effective penalty scale used in the fit
    bool positivity = false;
    bool subdiff = false;
    bool recovered = false;
    bool upper_event = false;  // J*_{alpha Lambda}(pi) <= 1
    double dual_value = 0.0;
    std::uint64_t seed = 0;
    int solver_checked = 0;    // 1 if the solver cross-check ran
    int solver_agrees = 0;
    bool near_boundary = false;
};

struct ExperimentConfig {
    DesignSpec design;
    bool redraw_design = true;
    std::optional<Vector> beta;           // explicit coefficients, or
    SlopePattern pattern;                 // pattern with
    Vector cluster_values;                // strictly decreasing positive s
    double sigma = 1.0;
    LambdaRecipe lambda;
    std::optional<double> alpha;          // fixed scale, or
    std::optional<double> target_eta;     // calibrate on the first design
    int calibration_reps = 100000;
    int reps = 1000;
    std::uint64_t master_seed = 1;
    bool scale_penalty_by_sqrt_n = false; // penalty alpha * sqrt(n) * Lambda
    int solver_checks = 100;              // solver cross-check on the first min(reps, this)
    unsigned threads = 0;
    Tolerances tol{};

    Vector resolve_beta() const;
};

struct ExperimentResult {
    int reps = 0;
    double alpha = 0.0;  // alpha before any sqrt(n) factor
    double recovery_freq = 0.0;
    double positivity_freq = 0.0;
    double subdiff_freq = 0.0;
    double both_freq = 0.0;
    double upper_event_freq = 0.0;
    double se = 0.0;
    int solver_checked = 0;
    int solver_agree = 0;
    int solver_disagree_near_boundary = 0;
    std::vector<RepRecord> records;
};

ExperimentResult mc_recovery(const ExperimentConfig& cfg);

struct CompareConfig {
    int n = 100;
    int p = 200;
    int k = 30;
    double signal = 40.0;
    double sigma = 5.0;
    double flip_prob = 0.0476;
    std::uint64_t seed = 1;
    /// "adaptive": Lambda built from the realized design so that SLOPE
    /// irrepresentability holds in the open sense, when the design allows it;
    /// otherwise `fallback_lambda`. Any other value is a LambdaRecipe string.
    std::string slope_lambda = "gauss-os";
    std::string fallback_lambda = "gauss-os";
    Tolerances tol{};
};

struct MethodFit {
    std::optional<double> min_alpha;  // certified minimal recovering scale
    double alpha_used = 0.0;
    bool fallback = false;            // scale chosen by the zero-false-positive rule
    Vector beta_hat;
    double squared_error = 0.0;
    bool pattern_recovered = false;
    int false_positives = 0;
};

struct CompareResult {
    std::uint64_t seed = 0;
    Vector beta;
    TuningSequence slope_lambda;
    bool adaptive_lambda_used = false;
    bool slope_ir = false;
    bool lasso_ir = false;
    MethodFit lasso;
    MethodFit slope;
};

/// LASSO and SLOPE with their minimal recovering tuning on one realization
/// of the Markov design. When no scale recovers, falls back to the smallest
/// scale on the scan grid at which no null coefficient is selected.
CompareResult compare_lasso_slope(const CompareConfig& cfg);

/// Strictly decreasing Lambda under which the single-cluster target M meets
/// the open irrepresentability condition. With w = X'(X_tilde')^+ 1 this is
/// possible iff the k largest |w_i| sit exactly on the support with w > 0
/// there; absent otherwise. `share` in (0, 1) sets how much of the available
/// slack is used. Throws InvalidPattern unless M has one cluster.
std::optional<TuningSequence> irrepresentable_lambda(const Matrix& X, const SlopePattern& M, double share = 0.5,
                                                     const Tolerances& tol = {});

/// Rejects equal magnitudes when the SLOPE fit at alpha_eta is not a single
/// cluster. X must satisfy X'X = I (else InvalidDesign).
bool test_constant_magnitude(const Vector& Y, const Matrix& X, const TuningSequence& lambda, double alpha_eta,
                             const Tolerances& tol = {});

/// Monte-Carlo rejection rate of test_constant_magnitude for Y = X beta + N(0, I).
ProbEstimate constant_magnitude_rejection_rate(const Matrix& X, const Vector& beta, const TuningSequence& lambda,
                                               double alpha_eta, int reps, std::uint64_t seed,
                                               const Tolerances& tol = {}, unsigned threads = 0);

}  // namespace slope
