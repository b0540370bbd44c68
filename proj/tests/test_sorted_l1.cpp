#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "slope/errors.hpp"
#include "slope/sorted_l1.hpp"
#include "support.hpp"

using namespace slope;
using slope::testing::toy_lambda;

namespace {
Vector vec(std::initializer_list<double> xs) {
    Vector v(static_cast<Eigen::Index>(xs.size()));
    Eigen::Index i = 0;
    for (double x : xs) v(i++) = x;
    return v;
}
SlopePattern pat(std::initializer_list<int> xs) { return SlopePattern(std::vector<int>(xs)); }

// Brute-force minimizer of 0.5||y - z||^2 + J(z) on a grid, p <= 2.
Vector grid_prox(const Vector& y, const TuningSequence& lam, double h) {
    const double lo = -y.cwiseAbs().maxCoeff() - 1, hi = -lo;
    double best = INFINITY;
    Vector arg = Vector::Zero(y.size());
    if (y.size() == 1) {
        for (double z = lo; z <= hi; z += h) {
            const Vector zz = vec({z});
            const double f = 0.5 * (y - zz).squaredNorm() + sorted_l1_norm(zz, lam);
            if (f < best) best = f, arg = zz;
        }
        return arg;
    }
    for (double z1 = lo; z1 <= hi; z1 += h)
        for (double z2 = lo; z2 <= hi; z2 += h) {
            const Vector zz = vec({z1, z2});
            const double f = 0.5 * (y - zz).squaredNorm() + sorted_l1_norm(zz, lam);
            if (f < best) best = f, arg = zz;
        }
    return arg;
}
// Point of the relative interior of the subdifferential at a: cluster
// averages of Lambda with the signs of a, shrunk slightly on the zero block.
Vector interior_subgradient(const Vector& a, const TuningSequence& lam) {
    const auto p = static_cast<int>(a.size());
    std::vector<int> order(static_cast<std::size_t>(p));
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int i, int j) { return std::abs(a(i)) > std::abs(a(j)); });
    Vector v = Vector::Zero(p);
    int start = 0;
    while (start < p) {
        const double level = std::abs(a(order[static_cast<std::size_t>(start)]));
        int end = start;
        while (end < p && std::abs(a(order[static_cast<std::size_t>(end)])) == level) ++end;
        const double mean = lam.lambdas().segment(start, end - start).mean();
        for (int t = start; t < end; ++t) {
            const int i = order[static_cast<std::size_t>(t)];
            v(i) = a(i) > 0 ? mean : (a(i) < 0 ? -mean : 0.999 * mean);
        }
        start = end;
    }
    return v;
}

}  // namespace

TEST_SUITE("sorted_l1") {

TEST_CASE("tuning sequence validation") {
    CHECK_THROWS_AS(TuningSequence(vec({1, 2})), InvalidTuning);
    CHECK_THROWS_AS(TuningSequence(vec({1, -1})), InvalidTuning);
    CHECK_THROWS_AS(TuningSequence(vec({0, 0})), InvalidTuning);
    CHECK_NOTHROW(TuningSequence(vec({2, 2, 0})));
    CHECK_FALSE(TuningSequence(vec({2, 2, 1})).is_strict());
    CHECK_THROWS_AS(TuningSequence(vec({2, 2, 1})).require_strict(), InvalidTuning);
    CHECK(toy_lambda().is_strict());
    CHECK(toy_lambda().scaled(0.5).lambdas() == vec({2, 1}));
}

TEST_CASE("norm and dual norm examples") {
    CHECK(sorted_l1_norm(Vector::Zero(2), toy_lambda()) == 0.0);
    CHECK(sorted_l1_norm(vec({5, 3}), toy_lambda()) == 26.0);
    CHECK(sorted_l1_norm(vec({3, -5}), toy_lambda()) == 26.0);
    CHECK(std::abs(dual_sorted_l1_norm(vec({4, 2.4}), toy_lambda()) - 6.4 / 6) < 1e-15);
    CHECK(dual_sorted_l1_norm(vec({4, 2}), toy_lambda()) == 1.0);
    CHECK(dual_sorted_l1_norm(Vector::Zero(2), toy_lambda()) == 0.0);
    CHECK_THROWS_AS(sorted_l1_norm(vec({1, 2, 3}), toy_lambda()), DimensionError);
    CHECK_THROWS_AS(dual_sorted_l1_norm(vec({1}), toy_lambda()), DimensionError);
}

TEST_CASE("prox examples") {
    CHECK(prox_sorted_l1(Vector::Zero(2), toy_lambda()) == Vector::Zero(2));
    CHECK(prox_sorted_l1(vec({5}), TuningSequence(vec({2}))) == vec({3}));
    const Vector z = prox_sorted_l1(vec({5, 5}), toy_lambda());
    CHECK(z(0) == doctest::Approx(2.0).epsilon(1e-14));
    CHECK(z(1) == z(0));
    CHECK_THROWS_AS(prox_sorted_l1(vec({1, 2}), vec({1, 2})), InvalidTuning);
}

TEST_CASE("prox matches a brute-force grid minimizer for p in {1, 2}") {
    const double h = 2e-3;
    for (std::uint64_t c = 0; c < 40; ++c) {
        SeededRng rng(31, c);
        const int p = 1 + static_cast<int>(c % 2);
        const TuningSequence lam = testing::random_strict_lambda(rng, p);
        const Vector y = 3.0 * rng.normal_vector(p);
        const Vector z = prox_sorted_l1(y, lam);
        CHECK((z - grid_prox(y, lam, h)).cwiseAbs().maxCoeff() <= 2 * h);
    }
}

TEST_CASE("subdifferential membership examples") {
    const TuningSequence lam(vec({5, 3, 1}));
    CHECK(subdiff_membership(lam.lambdas(), Vector(vec({3, 2, 2})), lam).member);
    CHECK_FALSE(subdiff_membership(vec({4, 2.4}), pat({1, 0}), toy_lambda()).member);
    CHECK(subdiff_membership(vec({4, 2}), pat({2, 1}), toy_lambda()).member);
    const SubdiffQuery q = subdiff_membership(vec({4, 2}), pat({2, 1}), toy_lambda());
    CHECK(q.dual_value == 1.0);
    CHECK(q.tight_indices == std::vector<int>{1, 2});
    CHECK_THROWS_AS(subdiff_membership(vec({1, 1}), pat({1, 0}), TuningSequence(vec({2, 2}))), InvalidTuning);
    // zero pattern: the dual ball
    CHECK(subdiff_membership(vec({3, 2}), SlopePattern::zeros(2), toy_lambda()).member);
    CHECK_FALSE(subdiff_membership(vec({5, 0}), SlopePattern::zeros(2), toy_lambda()).member);
}

TEST_CASE("Prop A.2 form examples") {
    const TuningSequence lam(vec({5, 3, 1}));
    CHECK_FALSE(subdiff_membership_prop_a2(vec({5, 3, 0}), vec({3, 2, 1}), lam));
    CHECK_FALSE(subdiff_membership(vec({5, 3, 0}), Vector(vec({3, 2, 1})), lam).member);
    CHECK(subdiff_membership_prop_a2(lam.lambdas(), vec({2, 2, 0}), lam));
}

TEST_CASE("relative interior") {
    CHECK(in_relative_interior(vec({4, 2}), pat({2, 1}), toy_lambda()));
    CHECK_FALSE(in_relative_interior(vec({4, 1.9}), pat({2, 1}), toy_lambda()));
    // p = 3, k = 2, v with all three cumulative sums tight
    const TuningSequence lam(vec({5, 3, 1}));
    CHECK(subdiff_membership(lam.lambdas(), pat({2, 1, 1}), lam).member);
    CHECK_FALSE(in_relative_interior(lam.lambdas(), pat({2, 1, 1}), lam));
    CHECK(in_relative_interior(vec({5, 2, 2}), pat({2, 1, 1}), lam));
}

TEST_CASE("affine span residual") {
    CHECK(affine_span_residual(vec({4, 2}), pat({2, 1}), toy_lambda()) == 0.0);
    CHECK(affine_span_residual(vec({4, 99}), pat({1, 0}), toy_lambda()) == 0.0);
    CHECK(affine_span_residual(vec({5, 0}), pat({1, 0}), toy_lambda()) == 1.0);
}

TEST_CASE("tight cumulative indices") {
    CHECK(tight_cumulative_indices(vec({4, 2}), vec({4, 2}), 1e-9) == std::vector<int>{1, 2});
    CHECK(tight_cumulative_indices(vec({1, 5}), vec({4, 2}), 1e-9) == std::vector<int>{2});
}

TEST_CASE("norm axioms on random vectors") {
    const auto r = testing::prop_norm_axioms(10000, 1);
    INFO(r.first_failure);
    CHECK(r.ok());
}

TEST_CASE("generalized Holder inequality") {
    const auto r = testing::prop_holder(10000, 2);
    INFO(r.first_failure);
    CHECK(r.ok());
}

TEST_CASE("prox is certified and nonexpansive") {
    const auto r = testing::prop_prox_certified(10000, 3);
    INFO(r.first_failure);
    CHECK(r.ok());
}

TEST_CASE("the two membership characterizations agree") {
    const auto r = testing::prop_membership_agreement(10000, 4);
    INFO(r.first_failure);
    CHECK(r.ok());
}

TEST_CASE("Lambda in the subdifferential exactly at sorted nonnegative b") {
    const auto r = testing::prop_lemma_a1(10000, 5);
    INFO(r.first_failure);
    CHECK(r.ok());
}

TEST_CASE("membership depends on b only through its pattern") {
    for (std::uint64_t c = 0; c < 2000; ++c) {
        SeededRng rng(41, c);
        const int p = 1 + static_cast<int>(rng.uniform() * 5);
        const int k = 1 + static_cast<int>(rng.uniform() * p);
        const SlopePattern M = testing::random_pattern(rng, p, k);
        const TuningSequence lam = testing::random_strict_lambda(rng, p);
        const Vector a = synthesize(M, testing::random_cluster_values(rng, k, 0.1, 2.0));
        const Vector b = synthesize(M, testing::random_cluster_values(rng, k, 0.1, 2.0));
        // member candidate from the pattern's face plus random points
        const Vector y = a + lam.lambdas()(0) * rng.normal_vector(p);
        const Vector v1 = y - prox_sorted_l1(y, lam);
        const Vector v2 = lam.lambdas()(0) * rng.normal_vector(p);
        for (const Vector& v : {v1, v2}) {
            CHECK(subdiff_membership(v, Vector(a), lam).member == subdiff_membership(v, Vector(b), lam).member);
        }
    }
}

TEST_CASE("different patterns are separated by some subgradient") {
    // For patt(a) != patt(b) a vector in the subdifferential at a lies outside the one at b.
    int separated = 0, pairs = 0;
    for (std::uint64_t c = 0; c < 2000; ++c) {
        SeededRng rng(43, c);
        const int p = 2 + static_cast<int>(rng.uniform() * 4);
        const TuningSequence lam = testing::random_strict_lambda(rng, p);
        const SlopePattern Ma = testing::random_pattern(rng, p, 1 + static_cast<int>(rng.uniform() * p));
        const SlopePattern Mb = testing::random_pattern(rng, p, 1 + static_cast<int>(rng.uniform() * p));
        if (Ma == Mb) continue;
        ++pairs;
        const Vector a = synthesize(Ma, testing::random_cluster_values(rng, Ma.k(), 0.5, 1.0));
        const Vector b = synthesize(Mb, testing::random_cluster_values(rng, Mb.k(), 0.5, 1.0));
        const Vector va = interior_subgradient(a, lam), vb = interior_subgradient(b, lam);
        REQUIRE(subdiff_membership(va, Vector(a), lam).member);
        REQUIRE(subdiff_membership(vb, Vector(b), lam).member);
        // faces may be nested, so one of the two directions separates
        separated += !subdiff_membership(va, Vector(b), lam).member || !subdiff_membership(vb, Vector(a), lam).member;
    }
    CHECK(pairs > 0);
    CHECK(separated == pairs);
}

}
