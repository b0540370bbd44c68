#include "slope/recovery.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "slope/errors.hpp"
#include "slope/lp.hpp"
#include "slope/solver.hpp"

namespace slope {

namespace {

// Rows encode s_1 - s_2, ..., s_{k-1} - s_k, s_k.
Matrix gap_operator(Eigen::Index k) {
    Matrix D = Matrix::Identity(k, k);
    for (Eigen::Index i = 0; i + 1 < k; ++i) D(i, i + 1) = -1.0;
    return D;
}

double inf_norm(const Vector& v) {
    return v.size() ? v.cwiseAbs().maxCoeff() : 0.0;
}

// Solve G s = rhs (G = A'A, kernel basis N of A) and look for the point of
// the solution set with the largest margin under D.
PositivityResult positive_solution(const Matrix& G, const Matrix& G_pinv, const Matrix& N, const Matrix& D,
                                   const Vector& rhs, const Tolerances& tol) {
    PositivityResult out;
    out.kernel_trivial = N.cols() == 0;
    const Vector s0 = G_pinv * rhs;
    if (!out.kernel_trivial) {
        const double miss = inf_norm(G * s0 - rhs);
        if (miss > tol.eq_tol * (1.0 + inf_norm(rhs))) return out;
    }
    const MarginResult mr = max_affine_margin(s0, N, D, 1.0 + 2.0 * inf_norm(s0));
    out.s = mr.point;
    out.margin = mr.margin;
    out.ok = mr.margin > tol.eq_tol;
    out.near_boundary = std::abs(mr.margin) <= 10.0 * tol.eq_tol * (1.0 + inf_norm(mr.point));
    return out;
}

}  // namespace

// ---------------------------------------------------------------------------

std::string RecoveryCertificate::csv_header() {
    return "pattern,k,kernel_trivial,positivity,positivity_margin,subdiff,dual_value,affine_residual,"
           "tight_count,open_ir,recovered,near_boundary";
}

std::string RecoveryCertificate::csv_row() const {
    std::ostringstream os;
    os.precision(17);
    os << '"' << M.to_string() << '"' << ',' << M.k() << ',' << kernel_trivial << ',' << positivity_ok << ','
       << positivity_margin << ',' << subdiff_ok << ',' << dual_value << ',' << affine_residual << ','
       << tight_count << ',' << open_ir_ok << ',' << recovered << ',' << near_boundary;
    return os.str();
}

RecoveryContext::RecoveryContext(const Matrix& X, const SlopePattern& M, const TuningSequence& lambda,
                                 const Tolerances& tol)
    : X_(X), lambda_(lambda), tol_(tol) {
    tol_.validate();
    require_finite(X_, "X");
    lambda_.require_strict();
    if (M.is_zero()) throw EmptyPattern("recovery: the target pattern is zero");
    red_ = reduce(X_, lambda_.lambdas(), M, tol_, false);
    XtXt_ = X_.transpose() * red_.X_tilde;
    Xt_plus_ = red_.Xt_pinv.transpose();
    Gt_ = red_.X_tilde.transpose() * red_.X_tilde;
    Gt_pinv_ = pinv(Gt_, tol_);
    kernel_ = kernel_basis(red_.X_tilde, tol_);
    pi_bar_ = X_.transpose() * (red_.Xt_pinv * red_.Lambda_tilde);
    lambda_in_col_ = in_col_space(red_.Lambda_tilde, red_.X_tilde.transpose(), tol_);
}

Matrix RecoveryContext::residual_gram() const {
    Matrix R = X_.transpose() * X_ - XtXt_ * (Xt_plus_ * X_);
    return 0.5 * (R + R.transpose());
}

Vector RecoveryContext::residual_from_xty(const Vector& xty, const Vector& Y) const {
    return xty - XtXt_ * (Xt_plus_ * Y);
}

Vector RecoveryContext::residual_term(const Vector& Y) const {
    if (Y.size() != X_.rows()) throw DimensionError("recovery: Y length differs from X rows");
    return residual_from_xty(X_.transpose() * Y, Y);
}

Vector RecoveryContext::pi(const Vector& Y, double alpha) const {
    return alpha * pi_bar_ + residual_term(Y);
}

PositivityResult RecoveryContext::positivity_from_rhs(const Vector& rhs) const {
    return positive_solution(Gt_, Gt_pinv_, kernel_, gap_operator(red_.U.cols()), rhs, tol_);
}

PositivityResult RecoveryContext::positivity(const Vector& Y, double alpha) const {
    if (Y.size() != X_.rows()) throw DimensionError("recovery: Y length differs from X rows");
    const Vector xty = X_.transpose() * Y;
    return positivity_from_rhs(red_.U.transpose() * xty - alpha * red_.Lambda_tilde);
}

RecoveryCertificate RecoveryContext::check(const Vector& Y, double alpha) const {
    if (Y.size() != X_.rows()) throw DimensionError("recovery: Y length differs from X rows");
    if (!(alpha > 0.0) || !std::isfinite(alpha)) throw DomainError("recovery: alpha must be positive");
    require_finite(Y, "Y");
    const Vector xty = X_.transpose() * Y;

    RecoveryCertificate c;
    c.M = red_.pattern;
    c.kernel_trivial = kernel_.cols() == 0;

    const PositivityResult pos = positivity_from_rhs(red_.U.transpose() * xty - alpha * red_.Lambda_tilde);
    c.s = pos.s;
    c.positivity_ok = pos.ok;
    c.positivity_margin = pos.margin;

    c.pi = alpha * pi_bar_ + residual_from_xty(xty, Y);
    const Vector lam = alpha * lambda_.lambdas();
    const SubdiffQuery q = detail::subdiff_membership_unchecked(c.pi, c.M, lam, tol_);
    c.subdiff_ok = q.member;
    c.dual_value = q.dual_value;
    c.affine_residual = q.affine_residual;
    c.tight_count = static_cast<int>(q.tight_indices.size());
    c.open_ir_ok = q.member && c.tight_count == c.M.k();
    c.recovered = c.positivity_ok && c.subdiff_ok;

    const double affine_scale = tol_.membership_tol * (1.0 + inf_norm(alpha * red_.Lambda_tilde));
    c.near_boundary = pos.near_boundary || std::abs(c.dual_value - 1.0) <= 10.0 * tol_.membership_tol ||
                      (c.affine_residual > affine_scale && c.affine_residual <= 10.0 * affine_scale);

    if (c.recovered) {
        c.beta_hat = red_.U * *c.s;
        const Vector grad = xty - XtXt_ * *c.s;
        const double scale = 1.0 + inf_norm(xty) + inf_norm(c.pi);
        c.pi_consistent = inf_norm(grad - c.pi) <= 1e3 * tol_.eq_tol * scale;
    }
    return c;
}

// ---------------------------------------------------------------------------

Vector pi_vector(const Matrix& X, const Vector& Y, const SlopePattern& M, const TuningSequence& lambda,
                 double alpha, const Tolerances& tol) {
    return RecoveryContext(X, M, lambda, tol).pi(Y, alpha);
}

PositivityResult positivity_condition(const Matrix& X, const Vector& Y, const SlopePattern& M,
                                      const TuningSequence& lambda, double alpha, const Tolerances& tol) {
    return RecoveryContext(X, M, lambda, tol).positivity(Y, alpha);
}

RecoveryCertificate check_recovery(const Matrix& X, const Vector& Y, const VectorOrPattern& beta_or_M,
                                   const TuningSequence& lambda, double alpha, const Tolerances& tol) {
    SlopePattern M;
    if (std::holds_alternative<Vector>(beta_or_M)) {
        const Vector& b = std::get<Vector>(beta_or_M);
        if (b.size() != X.cols()) throw DimensionError("check_recovery: beta length differs from X columns");
        M = patt(b);
    } else {
        M = std::get<SlopePattern>(beta_or_M);
    }
    return RecoveryContext(X, M, lambda, tol).check(Y, alpha);
}

bool zero_pattern_recovered(const Matrix& X, const Vector& Y, const TuningSequence& lambda, double alpha,
                            const Tolerances& tol) {
    if (Y.size() != X.rows() || lambda.size() != X.cols()) throw DimensionError("zero_pattern_recovered: dims");
    return dual_sorted_l1_norm(X.transpose() * Y, lambda.scaled(alpha)) <= 1.0 + tol.membership_tol;
}

IrrepresentabilityResult irrepresentability(const Matrix& X, const SlopePattern& M, const TuningSequence& lambda,
                                            const Tolerances& tol) {
    const RecoveryContext ctx(X, M, lambda, tol);
    IrrepresentabilityResult r;
    r.dual_value = dual_sorted_l1_norm(ctx.pi_bar(), lambda);
    r.col_ok = ctx.lambda_in_colspace();
    r.tight_count = static_cast<int>(tight_cumulative_indices(ctx.pi_bar(), lambda.lambdas(), tol.eq_tol).size());
    r.holds = r.col_ok && r.dual_value <= 1.0 + tol.membership_tol;
    return r;
}

bool open_irrepresentability(const Matrix& X, const SlopePattern& M, const TuningSequence& lambda,
                             const Tolerances& tol) {
    const IrrepresentabilityResult r = irrepresentability(X, M, lambda, tol);
    return r.holds && r.tight_count == M.k();
}

NoiselessResult noiseless_recovery(const Matrix& X, const Vector& beta, const TuningSequence& lambda,
                                   const Tolerances& tol) {
    if (beta.size() != X.cols()) throw DimensionError("noiseless_recovery: beta length differs from X columns");
    const SlopePattern M = patt(beta);
    const RecoveryContext ctx(X, M, lambda, tol);
    NoiselessResult out;
    out.recovers = ctx.lambda_in_colspace() &&
                   dual_sorted_l1_norm(ctx.pi_bar(), lambda) <= 1.0 + tol.membership_tol;
    if (!out.recovers) return out;

    const Vector Y = X * beta;
    auto ok = [&](double a) { return ctx.positivity(Y, a).ok; };
    double lo = 1.0, hi = 1.0;
    if (ok(1.0)) {
        while (ok(hi)) {
            lo = hi;
            hi *= 2.0;
            if (hi > 1e15) {
                out.alpha0 = std::numeric_limits<double>::infinity();
                return out;
            }
        }
    } else {
        while (!ok(lo)) {
            hi = lo;
            lo *= 0.5;
            if (lo < 1e-15) {
                out.alpha0 = 0.0;
                return out;
            }
        }
    }
    while (hi - lo > 1e-12 * hi) {
        const double mid = 0.5 * (lo + hi);
        (ok(mid) ? lo : hi) = mid;
    }
    out.alpha0 = 0.5 * (lo + hi);
    return out;
}

// ---------------------------------------------------------------------------

LassoContext::LassoContext(const Matrix& X, const std::vector<int>& S, const Tolerances& tol)
    : X_(X), tol_(tol), S_(S) {
    tol_.validate();
    require_finite(X_, "X");
    if (static_cast<Eigen::Index>(S_.size()) != X_.cols()) throw DimensionError("lasso: sign vector length");
    std::vector<Eigen::Index> support;
    for (std::size_t i = 0; i < S_.size(); ++i) {
        if (S_[i] < -1 || S_[i] > 1) throw InvalidPattern("lasso: sign entries must be -1, 0 or 1");
        if (S_[i] != 0) support.push_back(static_cast<Eigen::Index>(i));
    }
    if (support.empty()) throw EmptyPattern("lasso: the target sign vector is zero");
    Xs_.resize(X_.rows(), static_cast<Eigen::Index>(support.size()));
    for (std::size_t j = 0; j < support.size(); ++j) {
        Xs_.col(static_cast<Eigen::Index>(j)) = S_[static_cast<std::size_t>(support[j])] * X_.col(support[j]);
    }
    Xs_plus_ = pinv(Xs_, tol_);
    const Matrix Gs = Xs_.transpose() * Xs_;
    Gs_pinv_ = pinv(Gs, tol_);
    kernel_ = kernel_basis(Xs_, tol_);
    v_bar_ = X_.transpose() * (Xs_plus_.transpose() * Vector::Ones(Xs_.cols()));
    XtXs_ = X_.transpose() * Xs_;
}

LassoCertificate LassoContext::check(const Vector& Y, double lambda_scaled) const {
    if (Y.size() != X_.rows()) throw DimensionError("lasso: Y length differs from X rows");
    if (!(lambda_scaled > 0.0) || !std::isfinite(lambda_scaled)) throw DomainError("lasso: penalty must be positive");
    const Vector xty = X_.transpose() * Y;
    const Eigen::Index m = Xs_.cols();

    LassoCertificate c;
    const Vector rhs = Xs_.transpose() * Y - lambda_scaled * Vector::Ones(m);
    const Matrix Gs = Xs_.transpose() * Xs_;
    const PositivityResult pos = positive_solution(Gs, Gs_pinv_, kernel_, Matrix::Identity(m, m), rhs, tol_);
    c.kappa = pos.s;
    c.positivity_ok = pos.ok;
    c.positivity_margin = pos.margin;
    c.kernel_trivial = pos.kernel_trivial;

    c.v = v_bar_ + (xty - XtXs_ * (Xs_plus_ * Y)) / lambda_scaled;
    c.sup_norm = inf_norm(c.v);
    bool ok = c.sup_norm <= 1.0 + tol_.membership_tol;
    for (std::size_t i = 0; ok && i < S_.size(); ++i) {
        if (S_[i] != 0 && std::abs(c.v(static_cast<Eigen::Index>(i)) - S_[i]) > tol_.membership_tol) ok = false;
    }
    c.subdiff_ok = ok;
    c.recovered = c.positivity_ok && c.subdiff_ok;
    return c;
}

LassoCertificate lasso_sign_conditions(const Matrix& X, const Vector& Y, const std::vector<int>& S,
                                       double lambda_scaled, const Tolerances& tol) {
    return LassoContext(X, S, tol).check(Y, lambda_scaled);
}

// ---------------------------------------------------------------------------

namespace {

template <class Recovers>
std::optional<double> first_recovering_scale(double alpha_max, const MinAlphaOptions& opts, Recovers recovers) {
    if (!(alpha_max > 0.0) || !std::isfinite(alpha_max)) return std::nullopt;
    const std::vector<double> grid = log_grid(alpha_max * opts.grid_span, alpha_max, opts.grid_points);
    std::size_t first = grid.size();
    for (std::size_t i = 0; i < grid.size(); ++i) {
        if (recovers(grid[i])) {
            first = i;
            break;
        }
    }
    if (first == grid.size()) return std::nullopt;

    double lo, hi;
    if (first > 0) {
        lo = grid[first - 1];
        hi = grid[first];
    } else {
        // Recovery already at the bottom of the grid: walk further down.
        hi = grid[0];
        const double floor = alpha_max * 1e-15;
        while (hi / 10.0 > floor && recovers(hi / 10.0)) hi /= 10.0;
        lo = hi / 10.0;
        if (lo <= floor) return hi;
    }
    while (hi / lo - 1.0 > opts.rel_precision) {
        const double mid = std::sqrt(lo * hi);
        (recovers(mid) ? hi : lo) = mid;
    }
    return hi;
}

}  // namespace

std::optional<double> min_alpha_for_recovery(const Matrix& X, const Vector& Y, const Vector& beta, Method method,
                                             const TuningSequence& lambda, const Tolerances& tol,
                                             const MinAlphaOptions& opts) {
    if (beta.size() != X.cols() || Y.size() != X.rows()) throw DimensionError("min_alpha_for_recovery: dims");
    const Vector xty = X.transpose() * Y;
    if (method == Method::slope) {
        const RecoveryContext ctx(X, patt(beta), lambda, tol);
        return first_recovering_scale(dual_sorted_l1_norm(xty, lambda), opts,
                                      [&](double a) { return ctx.check(Y, a).recovered; });
    }
    std::vector<int> S(static_cast<std::size_t>(beta.size()));
    for (Eigen::Index i = 0; i < beta.size(); ++i) S[static_cast<std::size_t>(i)] = (beta(i) > 0) - (beta(i) < 0);
    const LassoContext ctx(X, S, tol);
    return first_recovering_scale(inf_norm(xty), opts, [&](double a) { return ctx.check(Y, a).recovered; });
}

PiBarGeometry geometric_pi_bar(const Matrix& X, const SlopePattern& M, const TuningSequence& lambda,
                               const Tolerances& tol) {
    const RecoveryContext ctx(X, M, lambda, tol);
    const ClusterReduction& red = ctx.reduction();
    PiBarGeometry g;
    g.pi_bar = ctx.pi_bar();
    const double resid = inf_norm(red.U.transpose() * g.pi_bar - red.Lambda_tilde);
    g.in_affine = ctx.lambda_in_colspace() && resid <= tol.eq_tol * (1.0 + inf_norm(red.Lambda_tilde));
    g.in_colspace = in_col_space(g.pi_bar, X.transpose() * red.X_tilde, tol);
    g.in_subdifferential = subdiff_membership(g.pi_bar, M, lambda, tol).member;
    return g;
}

AsymptoticSpec make_asymptotic_spec(const Matrix& C, const SlopePattern& M, const TuningSequence& lambda,
                                    double sigma, const Tolerances& tol) {
    require_finite(C, "C");
    if (C.rows() != C.cols() || static_cast<std::size_t>(C.rows()) != M.size() || lambda.size() != C.rows()) {
        throw DimensionError("asymptotic spec: C, pattern and lambda dimensions disagree");
    }
    if (!(sigma >= 0.0)) throw DomainError("asymptotic spec: sigma must be nonnegative");
    if ((C - C.transpose()).cwiseAbs().maxCoeff() > tol.eq_tol * (1.0 + C.cwiseAbs().maxCoeff())) {
        throw InvalidCovariance("asymptotic spec: C must be symmetric");
    }
    lambda.require_strict();
    AsymptoticSpec a;
    a.C = C;
    a.M = M;
    a.lambda = lambda;
    const Matrix U = pattern_matrix(M);
    const Matrix CU = C * U;
    const Matrix inv = pinv(U.transpose() * CU, tol);
    a.Z_mean = CU * (inv * clustered_lambda(M, lambda.lambdas()));
    Matrix cov = C - CU * inv * CU.transpose();
    a.Z_cov = sigma * sigma * 0.5 * (cov + cov.transpose());
    return a;
}

}  // namespace slope
