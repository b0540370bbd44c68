#include "slope/solver.hpp"

#include <algorithm>
#include <cmath>

#include "slope/errors.hpp"

namespace slope {

namespace {

double power_iteration(const Matrix& G, int iters) {
    const Eigen::Index p = G.rows();
    if (p == 0) return 0.0;
    Vector v(p);
    for (Eigen::Index i = 0; i < p; ++i) v(i) = 1.0 + 0.01 * static_cast<double>(i % 7);
    v.normalize();
    double est = 0.0;
    for (int it = 0; it < iters; ++it) {
        Vector w = G * v;
        const double nw = w.norm();
        if (nw == 0.0) return 0.0;
        v = w / nw;
        est = v.dot(G * v);
    }
    return est;
}

}  // namespace

SlopeFitter::SlopeFitter(Matrix X, Vector Y, TuningSequence lambda, SolverOptions opts)
    : X_(std::move(X)), Y_(std::move(Y)), lambda_(std::move(lambda)), opts_(opts) {
    opts_.tol.validate();
    require_finite(X_, "X");
    require_finite(Y_, "Y");
    if (X_.rows() != Y_.size()) throw DimensionError("solver: X rows and Y length differ");
    if (lambda_.size() != X_.cols()) throw DimensionError("solver: lambda length differs from X columns");
    if (opts_.max_iter < 1) throw DomainError("solver: max_iter must be positive");
    gram_ = X_.transpose() * X_;
    xty_ = X_.transpose() * Y_;
    yty_ = Y_.squaredNorm();
    lipschitz_ = power_iteration(gram_, opts_.power_iterations);
    if (!(lipschitz_ > 0.0)) lipschitz_ = 1.0;
}

Vector SlopeFitter::gradient(const Vector& beta) const {
    return gram_ * beta - xty_;
}

double SlopeFitter::smooth_part(const Vector& beta, const Vector& gram_beta) const {
    return 0.5 * yty_ - beta.dot(xty_) + 0.5 * beta.dot(gram_beta);
}

double SlopeFitter::objective(const Vector& beta, double alpha) const {
    return smooth_part(beta, gram_ * beta) + alpha * sorted_l1_norm(beta, lambda_);
}

double SlopeFitter::kkt_threshold() const {
    const double scale = xty_.size() ? xty_.cwiseAbs().maxCoeff() : 0.0;
    return opts_.tol.membership_tol * (1.0 + scale);
}

double SlopeFitter::kkt_residual(const Vector& beta, double alpha) const {
    const Vector g = xty_ - gram_ * beta;
    const Vector lam = alpha * lambda_.lambdas();
    const SlopePattern M = patt_with_tol(beta, opts_.tol.pattern_tol);
    const SubdiffQuery q = detail::subdiff_membership_unchecked(g, M, lam, opts_.tol);
    const double excess = std::max(q.dual_value - 1.0, 0.0) * lam(0);
    return std::max(excess, q.affine_residual);
}

std::optional<Vector> SlopeFitter::polish(const Vector& beta, double alpha) const {
    const double threshold = kkt_threshold();
    std::vector<SlopePattern> candidates{patt(beta), patt_with_tol(beta, opts_.tol.pattern_tol)};
    if (candidates[1] == candidates[0]) candidates.pop_back();
    for (const SlopePattern& M : candidates) {
        Vector trial;
        if (M.is_zero()) {
            trial = Vector::Zero(beta.size());
        } else {
            const Matrix U = pattern_matrix(M);
            const Matrix Gt = U.transpose() * gram_ * U;
            const Vector rhs = U.transpose() * xty_ - alpha * clustered_lambda(M, lambda_.lambdas());
            const Vector s = pinv(Gt, opts_.tol) * rhs;
            trial = U * s;
        }
        if (kkt_residual(trial, alpha) <= threshold) return trial;
    }
    return std::nullopt;
}

SolverResult SlopeFitter::fit_nothrow(double alpha, const std::optional<Vector>& warm_start) const {
    if (!(alpha > 0.0) || !std::isfinite(alpha)) throw DomainError("solver: alpha must be positive");
    const Eigen::Index p = X_.cols();
    const Vector lam = alpha * lambda_.lambdas();
    const double threshold = kkt_threshold();

    auto finish = [&](Vector beta, int iters) {
        SolverResult r;
        r.objective = objective(beta, alpha);
        r.kkt_residual = kkt_residual(beta, alpha);
        r.converged = r.kkt_residual <= threshold;
        r.iterations = iters;
        r.beta_hat = std::move(beta);
        return r;
    };

    // Zero is optimal iff X'Y lies in the dual ball of radius one.
    if (dual_sorted_l1_norm(xty_, TuningSequence(lam)) <= 1.0) return finish(Vector::Zero(p), 0);

    Vector x = Vector::Zero(p);
    if (warm_start) {
        if (warm_start->size() != p) throw DimensionError("solver: warm start has wrong length");
        x = *warm_start;
    }
    double L = lipschitz_;
    Vector y = x;
    double t = 1.0;
    double fx = objective(x, alpha);

    for (int it = 1; it <= opts_.max_iter; ++it) {
        const Vector grad = gradient(y);
        Vector x_new;
        for (;;) {
            x_new = prox_sorted_l1(y - grad / L, lam / L);
            const Vector d = x_new - y;
            const double curvature = d.dot(gram_ * d);
            if (curvature <= L * d.squaredNorm() * (1.0 + 1e-12)) break;
            L *= 2.0;
        }
        const double f_new = objective(x_new, alpha);
        if (f_new > fx + 1e-15 * (1.0 + std::abs(fx))) {
            // Momentum overshot; restart from the last accepted point.
            y = x;
            t = 1.0;
            continue;
        }
        const double step = (x_new - x).norm();
        const double t_new = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
        y = x_new + ((t - 1.0) / t_new) * (x_new - x);
        t = t_new;
        x = std::move(x_new);
        fx = f_new;

        const bool small_step = step <= opts_.rel_tol * (1.0 + x.norm());
        if (small_step || it % opts_.kkt_check_every == 0) {
            if (kkt_residual(x, alpha) <= threshold) return finish(x, it);
            if (opts_.polish) {
                if (auto polished = polish(x, alpha)) return finish(std::move(*polished), it);
            }
        }
    }
    if (opts_.polish) {
        if (auto polished = polish(x, alpha)) return finish(std::move(*polished), opts_.max_iter);
    }
    return finish(x, opts_.max_iter);
}

SolverResult SlopeFitter::fit(double alpha, const std::optional<Vector>& warm_start) const {
    SolverResult r = fit_nothrow(alpha, warm_start);
    if (!r.converged) throw NotConverged(std::move(r));
    return r;
}

SolverResult solve(const Problem& prob, const SolverOptions& opts) {
    return SlopeFitter(prob.X, prob.Y, prob.lambda, opts).fit(prob.alpha);
}

SolverResult solve_lasso(const Matrix& X, const Vector& Y, double lambda_alpha, const SolverOptions& opts) {
    if (!(lambda_alpha > 0.0) || !std::isfinite(lambda_alpha)) {
        throw DomainError("solve_lasso: penalty must be positive");
    }
    TuningSequence flat(Vector::Constant(X.cols(), lambda_alpha));
    return SlopeFitter(X, Y, std::move(flat), opts).fit(1.0);
}

namespace {

void check_grid(const std::vector<double>& alphas) {
    if (alphas.empty()) throw DomainError("alpha grid is empty");
    for (std::size_t i = 0; i < alphas.size(); ++i) {
        if (!(alphas[i] > 0.0) || !std::isfinite(alphas[i])) throw DomainError("alpha grid must be positive");
        if (i && !(alphas[i] > alphas[i - 1])) throw DomainError("alpha grid must be increasing");
    }
}

}  // namespace

std::vector<PathPoint> solution_path(const Matrix& X, const Vector& Y, const TuningSequence& lambda,
                                     const std::vector<double>& alphas, const SolverOptions& opts) {
    check_grid(alphas);
    const SlopeFitter fitter(X, Y, lambda, opts);
    std::vector<PathPoint> path;
    path.reserve(alphas.size());
    std::optional<Vector> warm;
    for (double a : alphas) {
        SolverResult r = fitter.fit(a, warm);
        warm = r.beta_hat;
        SlopePattern M = patt_with_tol(r.beta_hat, opts.tol.pattern_tol);
        path.push_back({a, std::move(r), std::move(M)});
    }
    return path;
}

std::vector<Breakpoint> locate_breakpoints(const Matrix& X, const Vector& Y, const TuningSequence& lambda,
                                           const std::vector<double>& alphas, double alpha_tol,
                                           const SolverOptions& opts) {
    if (!(alpha_tol > 0.0)) throw DomainError("locate_breakpoints: alpha_tol must be positive");
    const std::vector<PathPoint> path = solution_path(X, Y, lambda, alphas, opts);
    const SlopeFitter fitter(X, Y, lambda, opts);
    std::vector<Breakpoint> out;
    for (std::size_t i = 0; i + 1 < path.size(); ++i) {
        if (path[i].pattern == path[i + 1].pattern) continue;
        double lo = path[i].alpha, hi = path[i + 1].alpha;
        SlopePattern before = path[i].pattern, after = path[i + 1].pattern;
        Vector warm = path[i].result.beta_hat;
        while (hi - lo > alpha_tol) {
            const double mid = 0.5 * (lo + hi);
            const SolverResult r = fitter.fit(mid, warm);
            SlopePattern Mm = patt_with_tol(r.beta_hat, opts.tol.pattern_tol);
            if (Mm == before) {
                lo = mid;
                warm = r.beta_hat;
            } else {
                hi = mid;
                after = std::move(Mm);
            }
        }
        out.push_back({lo, hi, std::move(before), std::move(after)});
    }
    return out;
}

std::vector<double> log_grid(double lo, double hi, int count) {
    if (!(lo > 0.0) || !(hi > lo) || count < 2) throw DomainError("log_grid: need 0 < lo < hi and count >= 2");
    std::vector<double> g(static_cast<std::size_t>(count));
    const double a = std::log(lo), b = std::log(hi);
    for (int i = 0; i < count; ++i) g[static_cast<std::size_t>(i)] = std::exp(a + (b - a) * i / (count - 1));
    g.front() = lo;
    g.back() = hi;
    return g;
}

std::vector<double> linear_grid(double lo, double hi, int count) {
    if (!(hi > lo) || count < 2) throw DomainError("linear_grid: need lo < hi and count >= 2");
    std::vector<double> g(static_cast<std::size_t>(count));
    for (int i = 0; i < count; ++i) g[static_cast<std::size_t>(i)] = lo + (hi - lo) * i / (count - 1);
    g.back() = hi;
    return g;
}

}  // namespace slope
