#pragma once

#include <optional>
#include <vector>

#include "slope/errors.hpp"
#include "slope/numerics.hpp"
#include "slope/pattern.hpp"
#include "slope/sorted_l1.hpp"

namespace slope {

/// minimize 0.5 ||Y - X b||^2 + J_{alpha Lambda}(b)
struct Problem {
    Matrix X;
    Vector Y;
    TuningSequence lambda;
    double alpha = 1.0;
};

struct SolverOptions {
    int max_iter = 50000;
    double rel_tol = 1e-10;
    int power_iterations = 100;
    int kkt_check_every = 25;
    /// Re-fit on the iterate's pattern and keep the result when it certifies.
    bool polish = true;
    Tolerances tol{};
};

struct SolverResult {
    Vector beta_hat;
    int iterations = 0;
    double kkt_residual = 0.0;
    double objective = 0.0;
    bool converged = false;
};

class NotConverged : public Error {
public:
    explicit NotConverged(SolverResult last)
        : Error("solver did not reach the KKT tolerance"), last_(std::move(last)) {}
    const SolverResult& last() const noexcept { return last_; }

private:
    SolverResult last_;
};

/// Problem data with the Gram matrix and step size cached, so one design can
/// be fitted at many penalty scales.
class SlopeFitter {
public:
    SlopeFitter(Matrix X, Vector Y, TuningSequence lambda, SolverOptions opts = {});

    /// Throws NotConverged if the KKT residual stays above tolerance.
    SolverResult fit(double alpha, const std::optional<Vector>& warm_start = std::nullopt) const;
    /// Like fit, but returns the last iterate with converged == false instead of throwing.
    SolverResult fit_nothrow(double alpha, const std::optional<Vector>& warm_start = std::nullopt) const;

    double objective(const Vector& beta, double alpha) const;
    /// max(dual-norm excess * alpha * lambda_1, affine residual) of X'(Y - X beta)
    /// against the subdifferential at patt_with_tol(beta).
    double kkt_residual(const Vector& beta, double alpha) const;
    double kkt_threshold() const;

    const Matrix& X() const noexcept { return X_; }
    const Vector& Y() const noexcept { return Y_; }
    const TuningSequence& lambda() const noexcept { return lambda_; }
    const SolverOptions& options() const noexcept { return opts_; }
    double lipschitz() const noexcept { return lipschitz_; }

private:
    Vector gradient(const Vector& beta) const;  // X'(X beta - Y)
    double smooth_part(const Vector& beta, const Vector& gram_beta) const;
    std::optional<Vector> polish(const Vector& beta, double alpha) const;

    Matrix X_;
    Vector Y_;
    TuningSequence lambda_;
    SolverOptions opts_;
    Matrix gram_;
    Vector xty_;
    double yty_ = 0.0;
    double lipschitz_ = 0.0;
};

SolverResult solve(const Problem& prob, const SolverOptions& opts = {});

/// LASSO with penalty lambda_alpha * ||b||_1.
SolverResult solve_lasso(const Matrix& X, const Vector& Y, double lambda_alpha,
                         const SolverOptions& opts = {});

struct PathPoint {
    double alpha;
    SolverResult result;
    SlopePattern pattern;
};

/// Warm-started fits along an increasing grid of scales.
std::vector<PathPoint> solution_path(const Matrix& X, const Vector& Y, const TuningSequence& lambda,
                                     const std::vector<double>& alphas, const SolverOptions& opts = {});

struct Breakpoint {
    double alpha_lo;  // last scale seen with `before`
    double alpha_hi;  // first scale seen with `after`
    SlopePattern before;
    SlopePattern after;
    double alpha() const noexcept { return 0.5 * (alpha_lo + alpha_hi); }
};

/// Pattern changes along the grid, each refined by bisection to width alpha_tol.
std::vector<Breakpoint> locate_breakpoints(const Matrix& X, const Vector& Y, const TuningSequence& lambda,
                                           const std::vector<double>& alphas, double alpha_tol = 1e-4,
                                           const SolverOptions& opts = {});

std::vector<double> log_grid(double lo, double hi, int count);
std::vector<double> linear_grid(double lo, double hi, int count);

}  // namespace slope
