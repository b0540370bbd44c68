#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "slope/numerics.hpp"

namespace slope {

/// Signed-rank vector: sign of each coefficient times the rank of its
/// absolute value among the distinct nonzero magnitudes (0 for zeros).
class SlopePattern {
public:
    SlopePattern() = default;
    /// Throws InvalidPattern unless the nonzero magnitudes are exactly {1,...,k}.
    explicit SlopePattern(std::vector<int> values);

    static SlopePattern zeros(std::size_t p);
    /// Parses comma-separated signed integers, e.g. "2,-2,0,1".
    static SlopePattern parse(std::string_view text);

    std::size_t size() const noexcept { return values_.size(); }
    /// Number of nonzero clusters, ||M||_inf.
    int k() const noexcept { return k_; }
    bool is_zero() const noexcept { return k_ == 0; }
    int operator[](std::size_t i) const { return values_[i]; }
    const std::vector<int>& values() const noexcept { return values_; }

    /// Number of coordinates with |M_i| >= level.
    std::size_t count_at_least(int level) const;
    std::size_t support_size() const { return count_at_least(1); }

    std::string to_string() const;

    friend bool operator==(const SlopePattern&, const SlopePattern&) = default;

private:
    std::vector<int> values_;
    int k_ = 0;
};

/// Exact pattern of b (no tolerance). Throws InvalidVector on non-finite input.
SlopePattern patt(const Vector& b);

/// Pattern of a numerically computed vector: |b_i| <= tol is zero and sorted
/// magnitudes split into a new cluster whenever the gap exceeds tol.
SlopePattern patt_with_tol(const Vector& b, double tol);

/// p x k matrix with (U)_{ij} = sign(M_i) 1(|M_i| = k + 1 - j).
/// Throws EmptyPattern for M = 0.
Matrix pattern_matrix(const SlopePattern& M);

/// Pattern matrix of |M| sorted nonincreasingly, U_{|M|(down)}.
Matrix sorted_abs_pattern_matrix(const SlopePattern& M);

/// Blockwise sums of lambda over the cluster ranks of M, U_{|M|(down)}' lambda.
Vector clustered_lambda(const SlopePattern& M, const Vector& lambda);

/// Dimension reduction of a regression problem along a pattern.
struct ClusterReduction {
    SlopePattern pattern;
    Matrix U;             // p x k
    Matrix U_abs_sorted;  // p x k
    Matrix X_tilde;       // n x k, X U
    Vector Lambda_tilde;  // k
    Matrix P_tilde;       // n x n projector onto col(X_tilde); empty unless requested
    Matrix Xt_pinv;       // n x k, (X_tilde')^+
    Eigen::Index rank = 0;
    bool kernel_trivial = false;
};

ClusterReduction reduce(const Matrix& X, const Vector& lambda, const SlopePattern& M,
                        const Tolerances& tol = {}, bool with_projector = true);

/// U_M s for strictly decreasing positive cluster values s (length k).
Vector synthesize(const SlopePattern& M, const Vector& s);

/// True iff s_1 > ... > s_k > 0 with every gap larger than margin.
bool strictly_decreasing_positive(const Vector& s, double margin = 0.0);

}  // namespace slope
