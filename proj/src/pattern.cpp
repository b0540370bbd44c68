#include "slope/pattern.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <numeric>
#include <sstream>

#include "slope/errors.hpp"

namespace slope {

SlopePattern::SlopePattern(std::vector<int> values) : values_(std::move(values)) {
    int k = 0;
    for (int v : values_) k = std::max(k, std::abs(v));
    std::vector<bool> seen(static_cast<std::size_t>(k) + 1, false);
    for (int v : values_) seen[static_cast<std::size_t>(std::abs(v))] = true;
    for (int level = 1; level <= k; ++level) {
        if (!seen[static_cast<std::size_t>(level)]) {
            throw InvalidPattern("pattern magnitudes must be exactly {1,...,k}; missing " +
                                 std::to_string(level));
        }
    }
    k_ = k;
}

SlopePattern SlopePattern::zeros(std::size_t p) {
    return SlopePattern(std::vector<int>(p, 0));
}

SlopePattern SlopePattern::parse(std::string_view text) {
    std::vector<int> values;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        std::size_t end = text.find(',', pos);
        if (end == std::string_view::npos) end = text.size();
        std::string_view tok = text.substr(pos, end - pos);
        while (!tok.empty() && std::isspace(static_cast<unsigned char>(tok.front()))) tok.remove_prefix(1);
        while (!tok.empty() && std::isspace(static_cast<unsigned char>(tok.back()))) tok.remove_suffix(1);
        if (!tok.empty() && tok.front() == '+') tok.remove_prefix(1);
        int v = 0;
        auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
        if (tok.empty() || ec != std::errc() || ptr != tok.data() + tok.size()) {
            throw InputError("cannot parse pattern entry '" + std::string(tok) + "'");
        }
        values.push_back(v);
        pos = end + 1;
    }
    return SlopePattern(std::move(values));
}

std::size_t SlopePattern::count_at_least(int level) const {
    return static_cast<std::size_t>(std::count_if(values_.begin(), values_.end(),
                                                  [level](int v) { return std::abs(v) >= level; }));
}

std::string SlopePattern::to_string() const {
    std::ostringstream os;
    for (std::size_t i = 0; i < values_.size(); ++i) {
        if (i) os << ',';
        os << values_[i];
    }
    return os.str();
}

namespace {

int sign_of(double x) { return (x > 0) - (x < 0); }

// Ranks grouped magnitudes: `group_start(prev, cur)` says whether the sorted
// magnitude `cur` opens a new cluster after `prev`.
template <class NewCluster>
SlopePattern rank_pattern(const Vector& b, double zero_cut, NewCluster new_cluster) {
    const auto p = static_cast<std::size_t>(b.size());
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < p; ++i) {
        if (std::abs(b(i)) > zero_cut) idx.push_back(i);
    }
    std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t c) {
        return std::abs(b(a)) < std::abs(b(c));
    });
    std::vector<int> values(p, 0);
    int rank = 0;
    for (std::size_t j = 0; j < idx.size(); ++j) {
        if (j == 0 || new_cluster(std::abs(b(idx[j - 1])), std::abs(b(idx[j])))) ++rank;
        values[idx[j]] = sign_of(b(idx[j])) * rank;
    }
    return SlopePattern(std::move(values));
}

}  // namespace

SlopePattern patt(const Vector& b) {
    require_finite(b, "patt");
    return rank_pattern(b, 0.0, [](double prev, double cur) { return cur != prev; });
}

SlopePattern patt_with_tol(const Vector& b, double tol) {
    require_finite(b, "patt_with_tol");
    if (!(tol > 0)) throw DomainError("patt_with_tol: tolerance must be positive");
    return rank_pattern(b, tol, [tol](double prev, double cur) { return cur - prev > tol; });
}

Matrix pattern_matrix(const SlopePattern& M) {
    if (M.is_zero()) throw EmptyPattern("pattern matrix of the zero pattern is undefined");
    const int k = M.k();
    Matrix U = Matrix::Zero(static_cast<Eigen::Index>(M.size()), k);
    for (std::size_t i = 0; i < M.size(); ++i) {
        const int m = M[i];
        if (m != 0) U(static_cast<Eigen::Index>(i), k - std::abs(m)) = sign_of(m);
    }
    return U;
}

Matrix sorted_abs_pattern_matrix(const SlopePattern& M) {
    std::vector<int> sorted(M.size());
    std::transform(M.values().begin(), M.values().end(), sorted.begin(),
                   [](int v) { return std::abs(v); });
    std::sort(sorted.begin(), sorted.end(), std::greater<>());
    return pattern_matrix(SlopePattern(std::move(sorted)));
}

Vector clustered_lambda(const SlopePattern& M, const Vector& lambda) {
    if (static_cast<std::size_t>(lambda.size()) != M.size()) {
        throw DimensionError("clustered_lambda: lambda length does not match pattern");
    }
    return sorted_abs_pattern_matrix(M).transpose() * lambda;
}

ClusterReduction reduce(const Matrix& X, const Vector& lambda, const SlopePattern& M,
                        const Tolerances& tol, bool with_projector) {
    if (static_cast<std::size_t>(X.cols()) != M.size() || lambda.size() != X.cols()) {
        throw DimensionError("reduce: X, lambda and pattern dimensions disagree");
    }
    ClusterReduction r;
    r.pattern = M;
    r.U = pattern_matrix(M);
    r.U_abs_sorted = sorted_abs_pattern_matrix(M);
    r.X_tilde = X * r.U;
    r.Lambda_tilde = r.U_abs_sorted.transpose() * lambda;
    r.Xt_pinv = pinv(r.X_tilde.transpose(), tol);
    r.rank = numerical_rank(r.X_tilde, tol);
    r.kernel_trivial = r.rank == r.X_tilde.cols();
    if (with_projector) {
        Matrix P = r.X_tilde * r.Xt_pinv.transpose();
        r.P_tilde = 0.5 * (P + P.transpose());
    }
    return r;
}

bool strictly_decreasing_positive(const Vector& s, double margin) {
    if (s.size() == 0) return false;
    for (Eigen::Index i = 0; i + 1 < s.size(); ++i) {
        if (!(s(i) - s(i + 1) > margin)) return false;
    }
    return s(s.size() - 1) > margin;
}

Vector synthesize(const SlopePattern& M, const Vector& s) {
    if (s.size() != M.k()) throw DimensionError("synthesize: need one value per cluster");
    if (!strictly_decreasing_positive(s)) {
        throw InvalidClusterValues("synthesize: cluster values must be strictly decreasing and positive");
    }
    return pattern_matrix(M) * s;
}

}  // namespace slope
