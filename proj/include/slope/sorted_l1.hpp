#pragma once

#include <variant>
#include <vector>

#include "slope/numerics.hpp"
#include "slope/pattern.hpp"

namespace slope {

/// Penalty weights lambda_1 >= ... >= lambda_p >= 0 with lambda_1 > 0.
/// Pattern and subdifferential operations further require strict decrease
/// and positivity, checked through `require_strict`.
class TuningSequence {
public:
    TuningSequence() = default;
    /// Throws InvalidTuning unless nonincreasing, nonnegative, lambda_1 > 0.
    explicit TuningSequence(Vector lambdas);

    const Vector& lambdas() const noexcept { return lambdas_; }
    Eigen::Index size() const noexcept { return lambdas_.size(); }
    double operator[](Eigen::Index i) const { return lambdas_(i); }

    bool is_strict() const;
    /// Throws InvalidTuning unless lambda_1 > ... > lambda_p > 0.
    const TuningSequence& require_strict() const;

    TuningSequence scaled(double alpha) const;

private:
    Vector lambdas_;
};

double sorted_l1_norm(const Vector& b, const TuningSequence& lambda);
double dual_sorted_l1_norm(const Vector& b, const TuningSequence& lambda);

/// argmin_z 0.5 ||y - z||^2 + J_lambda(z); lambda nonincreasing and nonnegative.
/// Stack-based pool-adjacent-violators on |y| sorted minus lambda.
Vector prox_sorted_l1(const Vector& y, const Vector& lambda);
Vector prox_sorted_l1(const Vector& y, const TuningSequence& lambda);

/// 1-based indices j with sum_{i<=j} |v|_(i) == sum_{i<=j} lambda_i
/// (relative tolerance eq_tol).
std::vector<int> tight_cumulative_indices(const Vector& v, const Vector& lambda, double eq_tol);

struct SubdiffQuery {
    bool member = false;
    double dual_value = 0.0;
    double affine_residual = 0.0;  // ||U_M' v - Lambda_tilde||_inf, 0 for M = 0
    std::vector<int> tight_indices;
};

using VectorOrPattern = std::variant<Vector, SlopePattern>;

/// Membership of v in the subdifferential at b (or at any vector with pattern M).
SubdiffQuery subdiff_membership(const Vector& v, const VectorOrPattern& b_or_M,
                                const TuningSequence& lambda, const Tolerances& tol = {});

/// Same verdict through the sign / order / cumulative-equality characterization.
bool subdiff_membership_prop_a2(const Vector& v, const Vector& b, const TuningSequence& lambda,
                                const Tolerances& tol = {});

/// Membership plus exactly k tight cumulative sums.
bool in_relative_interior(const Vector& v, const SlopePattern& M, const TuningSequence& lambda,
                          const Tolerances& tol = {});

/// Distance-to-affine-hull diagnostic ||U_M' v - Lambda_tilde||_inf.
double affine_span_residual(const Vector& v, const SlopePattern& M, const TuningSequence& lambda);

namespace detail {
/// Membership test without the strict-tuning precondition (the solver uses
/// it for constant LASSO weights, where the same formula holds).
SubdiffQuery subdiff_membership_unchecked(const Vector& v, const SlopePattern& M,
                                          const Vector& lambda, const Tolerances& tol);
}  // namespace detail

}  // namespace slope
