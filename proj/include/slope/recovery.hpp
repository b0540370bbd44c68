#pragma once

#include <optional>
#include <string>

#include "slope/numerics.hpp"
#include "slope/pattern.hpp"
#include "slope/sorted_l1.hpp"

namespace slope {

struct PositivityResult {
    bool ok = false;
    std::optional<Vector> s;   // cluster values; present when the normal equations are solvable
    double margin = 0.0;       // min(s_1 - s_2, ..., s_{k-1} - s_k, s_k)
    bool kernel_trivial = true;
    bool near_boundary = false;
};

struct RecoveryCertificate {
    SlopePattern M;
    std::optional<Vector> s;
    bool positivity_ok = false;
    double positivity_margin = 0.0;
    Vector pi;
    bool subdiff_ok = false;
    double dual_value = 0.0;      // J*_{alpha Lambda}(pi)
    double affine_residual = 0.0; // ||U' pi - alpha Lambda_tilde||_inf
    int tight_count = 0;
    bool open_ir_ok = false;
    bool kernel_trivial = true;
    bool recovered = false;
    std::optional<Vector> beta_hat;  // U s when recovered
    bool pi_consistent = true;       // pi == X'(Y - X beta_hat) when recovered
    bool near_boundary = false;      // a condition margin within 10x tolerance

    static std::string csv_header();
    std::string csv_row() const;
};

/// Everything that depends on (X, M, Lambda) only, so certificates for many
/// responses and penalty scales reuse one reduction.
class RecoveryContext {
public:
    /// Throws EmptyPattern for M = 0 and InvalidTuning unless Lambda is strict.
    RecoveryContext(const Matrix& X, const SlopePattern& M, const TuningSequence& lambda,
                    const Tolerances& tol = {});

    const ClusterReduction& reduction() const noexcept { return red_; }
    const SlopePattern& pattern() const noexcept { return red_.pattern; }
    const TuningSequence& lambda() const noexcept { return lambda_; }
    const Tolerances& tolerances() const noexcept { return tol_; }
    /// X'(X_tilde')^+ Lambda_tilde.
    const Vector& pi_bar() const noexcept { return pi_bar_; }
    /// Lambda_tilde in col(X_tilde').
    bool lambda_in_colspace() const noexcept { return lambda_in_col_; }
    /// Covariance X'(I - P_tilde)X of the noise part of pi per unit noise variance.
    Matrix residual_gram() const;

    /// X'(I - P_tilde) Y
    Vector residual_term(const Vector& Y) const;
    Vector pi(const Vector& Y, double alpha) const;
    PositivityResult positivity(const Vector& Y, double alpha) const;
    RecoveryCertificate check(const Vector& Y, double alpha) const;

private:
    PositivityResult positivity_from_rhs(const Vector& rhs) const;
    Vector residual_from_xty(const Vector& xty, const Vector& Y) const;

    Matrix X_;
    TuningSequence lambda_;
    Tolerances tol_;
    ClusterReduction red_;
    Matrix XtXt_;       // X' X_tilde  (p x k)
    Matrix Xt_plus_;    // X_tilde^+   (k x n)
    Matrix Gt_;         // X_tilde' X_tilde
    Matrix Gt_pinv_;
    Matrix kernel_;     // basis of ker(X_tilde)
    Vector pi_bar_;
    bool lambda_in_col_ = false;
};

Vector pi_vector(const Matrix& X, const Vector& Y, const SlopePattern& M, const TuningSequence& lambda,
                 double alpha, const Tolerances& tol = {});

PositivityResult positivity_condition(const Matrix& X, const Vector& Y, const SlopePattern& M,
                                      const TuningSequence& lambda, double alpha, const Tolerances& tol = {});

/// Pattern taken as patt(beta) when a vector is given. Throws EmptyPattern for M = 0.
RecoveryCertificate check_recovery(const Matrix& X, const Vector& Y, const VectorOrPattern& beta_or_M,
                                   const TuningSequence& lambda, double alpha, const Tolerances& tol = {});

/// The zero pattern is recovered iff J*_{alpha Lambda}(X'Y) <= 1.
bool zero_pattern_recovered(const Matrix& X, const Vector& Y, const TuningSequence& lambda, double alpha,
                            const Tolerances& tol = {});

struct IrrepresentabilityResult {
    bool holds = false;
    double dual_value = 0.0;  // J*_Lambda(pi_bar)
    bool col_ok = false;      // Lambda_tilde in col(X_tilde')
    int tight_count = 0;
};

IrrepresentabilityResult irrepresentability(const Matrix& X, const SlopePattern& M, const TuningSequence& lambda,
                                            const Tolerances& tol = {});
/// Irrepresentability with exactly k tight cumulative sums.
bool open_irrepresentability(const Matrix& X, const SlopePattern& M, const TuningSequence& lambda,
                             const Tolerances& tol = {});

struct NoiselessResult {
    bool recovers = false;
    std::optional<double> alpha0;  // sup of recovering scales; +inf if positivity never fails
};

NoiselessResult noiseless_recovery(const Matrix& X, const Vector& beta, const TuningSequence& lambda,
                                   const Tolerances& tol = {});

struct LassoCertificate {
    std::optional<Vector> kappa;
    bool positivity_ok = false;
    double positivity_margin = 0.0;
    Vector v;                 // candidate l1 subgradient
    bool subdiff_ok = false;
    double sup_norm = 0.0;    // ||v||_inf
    bool recovered = false;
    bool kernel_trivial = true;
};

/// Sign recovery by the LASSO with penalty lambda_scaled * ||b||_1. S has
/// entries in {-1, 0, 1} and must be nonzero.
LassoCertificate lasso_sign_conditions(const Matrix& X, const Vector& Y, const std::vector<int>& S,
                                       double lambda_scaled, const Tolerances& tol = {});

/// Reusable LASSO counterpart of RecoveryContext.
class LassoContext {
public:
    LassoContext(const Matrix& X, const std::vector<int>& S, const Tolerances& tol = {});
    LassoCertificate check(const Vector& Y, double lambda_scaled) const;

private:
    Matrix X_;
    Tolerances tol_;
    std::vector<int> S_;
    Matrix Xs_;        // X_I diag(S_I)
    Matrix Xs_plus_;
    Matrix Gs_pinv_;
    Matrix kernel_;
    Vector v_bar_;     // X'(Xs')^+ 1
    Matrix XtXs_;
};

enum class Method { slope, lasso };

struct MinAlphaOptions {
    int grid_points = 400;
    double grid_span = 1e-6;   // grid runs from alpha_max * span to alpha_max
    double rel_precision = 1e-4;
};

/// Smallest recovering penalty scale (alpha for SLOPE, lambda for LASSO):
/// a log-grid scan up to the scale where the fit becomes zero, then bisection
/// below the first recovering grid point. Absent if nothing on the grid recovers.
/// For LASSO the target is sign(beta); `lambda` is ignored.
std::optional<double> min_alpha_for_recovery(const Matrix& X, const Vector& Y, const Vector& beta, Method method,
                                             const TuningSequence& lambda, const Tolerances& tol = {},
                                             const MinAlphaOptions& opts = {});

struct PiBarGeometry {
    Vector pi_bar;
    bool in_affine = false;
    bool in_colspace = false;
    bool in_subdifferential = false;
};

PiBarGeometry geometric_pi_bar(const Matrix& X, const SlopePattern& M, const TuningSequence& lambda,
                               const Tolerances& tol = {});

/// Limiting Gaussian of pi for n^{-1} X'X -> C.
struct AsymptoticSpec {
    Matrix C;
    SlopePattern M;
    TuningSequence lambda;
    Vector Z_mean;  // C U (U'CU)^{-1} Lambda_tilde
    Matrix Z_cov;   // sigma^2 [C - C U (U'CU)^{-1} U'C]
};

AsymptoticSpec make_asymptotic_spec(const Matrix& C, const SlopePattern& M, const TuningSequence& lambda,
                                    double sigma, const Tolerances& tol = {});

}  // namespace slope
