#include <doctest.h>

#include <cmath>

#include "slope/experiments.hpp"
#include "slope/lambda_seq.hpp"
#include "slope/solver.hpp"
#include "support.hpp"

using namespace slope;
using testing::toy_design;
using testing::toy_lambda;

namespace {
Vector vec(std::initializer_list<double> xs) {
    Vector v(static_cast<Eigen::Index>(xs.size()));
    Eigen::Index i = 0;
    for (double x : xs) v(i++) = x;
    return v;
}
SlopePattern pat(std::initializer_list<int> xs) { return SlopePattern(std::vector<int>(xs)); }

Matrix random_orthogonal(SeededRng& rng, int n, int p) {
    DesignSpec spec;
    spec.kind = DesignSpec::Kind::orthogonal;
    spec.n = n;
    spec.p = p;
    return gen_design(spec, rng);
}
}  // namespace

TEST_SUITE("solver") {

TEST_CASE("zero response gives zero") {
    const SolverResult r = solve({toy_design(), Vector::Zero(2), toy_lambda(), 0.7});
    CHECK(r.converged);
    CHECK(r.beta_hat.isZero(0.0));
    const SolverResult l = solve_lasso(toy_design(), Vector::Zero(2), 1.0);
    CHECK(l.beta_hat.isZero(0.0));
}

TEST_CASE("scalar soft threshold") {
    const Matrix X = Matrix::Ones(1, 1);
    const SolverResult r = solve_lasso(X, vec({5}), 2.0);
    CHECK(r.converged);
    CHECK(std::abs(r.beta_hat(0) - 3.0) < 1e-12);
}

TEST_CASE("noiseless toy instance at alpha = 0.2 has pattern (2,1)") {
    const Vector Y = toy_design() * vec({5, 3});
    const SolverResult r = solve({toy_design(), Y, toy_lambda(), 0.2});
    CHECK(r.converged);
    CHECK(patt_with_tol(r.beta_hat, 1e-4) == pat({2, 1}));
    CHECK((r.beta_hat - vec({4.125, 3.125})).cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("orthogonal design: solver equals prox of X'Y") {
    for (std::uint64_t c = 0; c < 60; ++c) {
        SeededRng rng(51, c);
        const int p = 1 + static_cast<int>(rng.uniform() * 50);
        const int n = p + static_cast<int>(rng.uniform() * 10);
        const Matrix X = random_orthogonal(rng, n, p);
        const TuningSequence lam = testing::random_strict_lambda(rng, p);
        const Vector Y = X * (3.0 * rng.normal_vector(p)) + rng.normal_vector(n);
        const double alpha = 0.05 + rng.uniform();
        const SolverResult r = solve({X, Y, lam, alpha});
        CHECK(r.converged);
        const Vector z = prox_sorted_l1(X.transpose() * Y, lam.scaled(alpha));
        CHECK((r.beta_hat - z).cwiseAbs().maxCoeff() < 1e-8);
    }
}

TEST_CASE("orthogonal design: LASSO is coordinatewise soft thresholding") {
    SeededRng rng(52, 0);
    const Matrix X = random_orthogonal(rng, 12, 8);
    const Vector Y = X * (2.0 * rng.normal_vector(8)) + rng.normal_vector(12);
    const SolverResult r = solve_lasso(X, Y, 0.8);
    const Vector g = X.transpose() * Y;
    for (int i = 0; i < 8; ++i) {
        const double st = std::copysign(std::max(std::abs(g(i)) - 0.8, 0.0), g(i));
        CHECK(std::abs(r.beta_hat(i) - st) < 1e-9);
    }
}

TEST_CASE("KKT certification, objective bounds and LASSO-as-SLOPE on random problems") {
    for (std::uint64_t c = 0; c < 150; ++c) {
        SeededRng rng(53, c);
        const int p = 1 + static_cast<int>(rng.uniform() * 10);
        const int n = 1 + static_cast<int>(rng.uniform() * 15);
        Matrix X(n, p);
        for (int i = 0; i < X.size(); ++i) X.data()[i] = rng.normal();
        const Vector Y = 3.0 * rng.normal_vector(n);
        const TuningSequence lam = testing::random_strict_lambda(rng, p);
        const double alpha = 0.02 + rng.uniform();
        SlopeFitter fitter(X, Y, lam);
        const SolverResult r = fitter.fit(alpha);
        REQUIRE(r.converged);
        CHECK(r.kkt_residual <= fitter.kkt_threshold());
        const Vector g = X.transpose() * (Y - X * r.beta_hat);
        const SubdiffQuery q = subdiff_membership(g, patt_with_tol(r.beta_hat, 1e-4), lam.scaled(alpha),
                                                  Tolerances{1e-9, 1e-10, 1e-4, fitter.kkt_threshold()});
        CHECK(q.member);
        CHECK(r.objective <= fitter.objective(Vector::Zero(p), alpha) + 1e-12);
        if (n >= p) {
            const Vector ls = pinv(X) * Y;
            CHECK(r.objective <= fitter.objective(ls, alpha) + 1e-9);
        }
        const double lasso_level = 0.1 + rng.uniform();
        const SolverResult a = solve_lasso(X, Y, lasso_level);
        const SolverResult b = solve({X, Y, constant_lambda(p, 1.0), lasso_level});
        CHECK((a.beta_hat - b.beta_hat).cwiseAbs().maxCoeff() < 1e-8);
    }
}

TEST_CASE("non-convergence raises NotConverged carrying the last iterate") {
    SeededRng rng(54, 0);
    Matrix X(20, 10);
    for (int i = 0; i < X.size(); ++i) X.data()[i] = rng.normal();
    X.col(1) = X.col(0) * 1.0001 + 1e-3 * rng.normal_vector(20);
    SolverOptions opts;
    opts.max_iter = 1;
    opts.polish = false;
    const SlopeFitter fitter(X, X * Vector::LinSpaced(10, 1, 10), gaussian_order_stat_lambda(10), opts);
    CHECK_THROWS_AS(fitter.fit(0.01), NotConverged);
    try {
        fitter.fit(0.01);
    } catch (const NotConverged& e) {
        CHECK(e.last().beta_hat.size() == 10);
        CHECK_FALSE(e.last().converged);
    }
}

TEST_CASE("solution path on the toy instance with beta = (5, 0)") {
    const Vector Y = toy_design() * vec({5, 0});
    const auto grid = linear_grid(0.02, 2.0, 100);
    const auto path = solution_path(toy_design(), Y, toy_lambda(), grid);
    REQUIRE(path.size() == grid.size());
    bool zero_seen = false;
    for (const PathPoint& pt : path) {
        CHECK(pt.result.converged);
        if (pt.alpha < 0.99) CHECK(pt.pattern == pat({2, 1}));
        else if (pt.alpha > 1.01 && pt.alpha < 4.0 / 3 - 0.01) CHECK(pt.pattern == pat({1, 1}));
        else if (pt.alpha > 4.0 / 3 + 0.01) CHECK(pt.pattern.is_zero());
        if (zero_seen) CHECK(pt.pattern.is_zero());
        zero_seen = zero_seen || pt.pattern.is_zero();
    }
    const auto bps = locate_breakpoints(toy_design(), Y, toy_lambda(), grid, 1e-4);
    REQUIRE(bps.size() == 2);
    CHECK(std::abs(bps[0].alpha() - 1.0) < 1e-3);
    CHECK(bps[0].after == pat({1, 1}));
    CHECK(std::abs(bps[1].alpha() - 4.0 / 3) < 1e-3);
    CHECK(bps[1].after.is_zero());
}

TEST_CASE("solution path on the toy instance with beta = (5, 3)") {
    const Vector Y = toy_design() * vec({5, 3});
    const auto grid = linear_grid(0.01, 1.0, 100);
    const auto bps = locate_breakpoints(toy_design(), Y, toy_lambda(), grid, 1e-4);
    REQUIRE_FALSE(bps.empty());
    CHECK(bps[0].before == pat({2, 1}));
    CHECK(std::abs(bps[0].alpha() - 0.4) < 1e-3);
}

TEST_CASE("zero pattern exactly beyond the dual-norm threshold") {
    SeededRng rng(55, 0);
    Matrix X(8, 5);
    for (int i = 0; i < X.size(); ++i) X.data()[i] = rng.normal();
    const Vector Y = rng.normal_vector(8);
    const TuningSequence lam = gaussian_order_stat_lambda(5);
    const double a0 = dual_sorted_l1_norm(X.transpose() * Y, lam);
    const auto path = solution_path(X, Y, lam, {0.5 * a0, 0.99 * a0, 1.01 * a0, 3 * a0});
    CHECK_FALSE(path[1].pattern.is_zero());
    CHECK(path[2].pattern.is_zero());
    CHECK(path[3].pattern.is_zero());
}

TEST_CASE("grids") {
    const auto g = log_grid(0.01, 100, 5);
    REQUIRE(g.size() == 5);
    CHECK(std::abs(g[2] - 1.0) < 1e-12);
    CHECK(g.front() == 0.01);
    CHECK(g.back() == 100);
    const auto l = linear_grid(0, 1, 3);
    CHECK(l[1] == 0.5);
}

}
