#include "slope/sorted_l1.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "slope/errors.hpp"

namespace slope {

TuningSequence::TuningSequence(Vector lambdas) : lambdas_(std::move(lambdas)) {
    if (lambdas_.size() == 0) throw InvalidTuning("tuning sequence is empty");
    if (!lambdas_.allFinite()) throw InvalidTuning("tuning sequence has non-finite entries");
    if (!(lambdas_(0) > 0.0)) throw InvalidTuning("lambda_1 must be positive");
    for (Eigen::Index i = 0; i + 1 < lambdas_.size(); ++i) {
        if (lambdas_(i + 1) > lambdas_(i)) throw InvalidTuning("tuning sequence must be nonincreasing");
    }
    if (lambdas_(lambdas_.size() - 1) < 0.0) throw InvalidTuning("tuning sequence must be nonnegative");
}

bool TuningSequence::is_strict() const {
    return strictly_decreasing_positive(lambdas_);
}

const TuningSequence& TuningSequence::require_strict() const {
    if (!is_strict()) throw InvalidTuning("lambda must be strictly decreasing and positive");
    return *this;
}

TuningSequence TuningSequence::scaled(double alpha) const {
    if (!(alpha > 0.0) || !std::isfinite(alpha)) throw DomainError("scale alpha must be positive");
    return TuningSequence(alpha * lambdas_);
}

namespace {

void check_dims(const Vector& b, const Vector& lambda, const char* what) {
    if (b.size() != lambda.size()) {
        throw DimensionError(std::string(what) + ": vector and lambda lengths differ");
    }
}

Vector sorted_abs_desc(const Vector& v) {
    Vector a = v.cwiseAbs();
    std::sort(a.data(), a.data() + a.size(), std::greater<>());
    return a;
}

double dual_norm(const Vector& b, const Vector& lambda) {
    const Vector a = sorted_abs_desc(b);
    double num = 0.0, den = 0.0, best = 0.0;
    for (Eigen::Index j = 0; j < a.size(); ++j) {
        num += a(j);
        den += lambda(j);
        if (den > 0.0) best = std::max(best, num / den);
    }
    return best;
}

}  // namespace

double sorted_l1_norm(const Vector& b, const TuningSequence& lambda) {
    check_dims(b, lambda.lambdas(), "sorted_l1_norm");
    return sorted_abs_desc(b).dot(lambda.lambdas());
}

double dual_sorted_l1_norm(const Vector& b, const TuningSequence& lambda) {
    check_dims(b, lambda.lambdas(), "dual_sorted_l1_norm");
    return dual_norm(b, lambda.lambdas());
}

Vector prox_sorted_l1(const Vector& y, const Vector& lambda) {
    check_dims(y, lambda, "prox_sorted_l1");
    const Eigen::Index p = y.size();
    for (Eigen::Index i = 0; i + 1 < p; ++i) {
        if (lambda(i + 1) > lambda(i)) throw InvalidTuning("prox: lambda must be nonincreasing");
    }
    if (p > 0 && lambda(p - 1) < 0.0) throw InvalidTuning("prox: lambda must be nonnegative");

    std::vector<Eigen::Index> order(static_cast<std::size_t>(p));
    std::iota(order.begin(), order.end(), Eigen::Index{0});
    std::sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) {
        return std::abs(y(a)) > std::abs(y(b));
    });

    // Blocks of the nonincreasing least-squares fit to |y|_(i) - lambda_i.
    std::vector<Eigen::Index> start(static_cast<std::size_t>(p));
    std::vector<double> sum(static_cast<std::size_t>(p));
    std::vector<double> mean(static_cast<std::size_t>(p));
    std::size_t blocks = 0;
    for (Eigen::Index i = 0; i < p; ++i) {
        start[blocks] = i;
        sum[blocks] = std::abs(y(order[static_cast<std::size_t>(i)])) - lambda(i);
        mean[blocks] = sum[blocks];
        while (blocks > 0 && mean[blocks - 1] <= mean[blocks]) {
            --blocks;
            sum[blocks] += sum[blocks + 1];
            mean[blocks] = sum[blocks] / static_cast<double>(i - start[blocks] + 1);
        }
        ++blocks;
    }

    Vector x(p);
    for (std::size_t blk = 0; blk < blocks; ++blk) {
        const Eigen::Index end = blk + 1 < blocks ? start[blk + 1] : p;
        const double value = std::max(mean[blk], 0.0);
        for (Eigen::Index i = start[blk]; i < end; ++i) {
            const Eigen::Index j = order[static_cast<std::size_t>(i)];
            x(j) = y(j) < 0 ? -value : value;
        }
    }
    return x;
}

Vector prox_sorted_l1(const Vector& y, const TuningSequence& lambda) {
    return prox_sorted_l1(y, lambda.lambdas());
}

std::vector<int> tight_cumulative_indices(const Vector& v, const Vector& lambda, double eq_tol) {
    check_dims(v, lambda, "tight_cumulative_indices");
    const Vector a = sorted_abs_desc(v);
    std::vector<int> tight;
    double cv = 0.0, cl = 0.0;
    for (Eigen::Index j = 0; j < a.size(); ++j) {
        cv += a(j);
        cl += lambda(j);
        if (std::abs(cv - cl) <= eq_tol * (1.0 + cl)) tight.push_back(static_cast<int>(j + 1));
    }
    return tight;
}

namespace detail {

SubdiffQuery subdiff_membership_unchecked(const Vector& v, const SlopePattern& M,
                                          const Vector& lambda, const Tolerances& tol) {
    check_dims(v, lambda, "subdiff_membership");
    if (static_cast<std::size_t>(v.size()) != M.size()) {
        throw DimensionError("subdiff_membership: pattern length differs");
    }
    SubdiffQuery q;
    q.dual_value = dual_norm(v, lambda);
    q.tight_indices = tight_cumulative_indices(v, lambda, tol.eq_tol);
    bool affine_ok = true;
    if (!M.is_zero()) {
        const Matrix U = pattern_matrix(M);
        const Vector lt = clustered_lambda(M, lambda);
        q.affine_residual = (U.transpose() * v - lt).cwiseAbs().maxCoeff();
        affine_ok = q.affine_residual <= tol.membership_tol * (1.0 + lt.cwiseAbs().maxCoeff());
    }
    q.member = q.dual_value <= 1.0 + tol.membership_tol && affine_ok;
    return q;
}

}  // namespace detail

SubdiffQuery subdiff_membership(const Vector& v, const VectorOrPattern& b_or_M,
                                const TuningSequence& lambda, const Tolerances& tol) {
    lambda.require_strict();
    const SlopePattern M = std::holds_alternative<Vector>(b_or_M)
                               ? patt(std::get<Vector>(b_or_M))
                               : std::get<SlopePattern>(b_or_M);
    return detail::subdiff_membership_unchecked(v, M, lambda.lambdas(), tol);
}

bool subdiff_membership_prop_a2(const Vector& v, const Vector& b, const TuningSequence& lambda,
                                const Tolerances& tol) {
    lambda.require_strict();
    check_dims(v, lambda.lambdas(), "subdiff_membership_prop_a2");
    check_dims(b, lambda.lambdas(), "subdiff_membership_prop_a2");
    if (dual_norm(v, lambda.lambdas()) > 1.0 + tol.membership_tol) return false;

    const Eigen::Index p = v.size();
    const double vscale = 1.0 + lambda[0];
    const double slack = tol.membership_tol * vscale;
    // Sign agreement on the support.
    for (Eigen::Index i = 0; i < p; ++i) {
        if (b(i) > 0 && v(i) < -slack) return false;
        if (b(i) < 0 && v(i) > slack) return false;
        if (b(i) != 0 && std::abs(v(i)) <= slack) return false;
    }
    // Larger coefficients carry at least as large subgradient entries.
    for (Eigen::Index i = 0; i < p; ++i) {
        for (Eigen::Index j = 0; j < p; ++j) {
            if (std::abs(b(i)) > std::abs(b(j)) && std::abs(v(i)) < std::abs(v(j)) - slack) return false;
        }
    }
    // Cumulative equalities at n_1 < ... < n_k.
    const SlopePattern M = patt(b);
    const Vector a = sorted_abs_desc(v);
    Vector cum_v(p), cum_l(p);
    double cv = 0.0, cl = 0.0;
    for (Eigen::Index j = 0; j < p; ++j) {
        cv += a(j);
        cl += lambda[j];
        cum_v(j) = cv;
        cum_l(j) = cl;
    }
    const int k = M.k();
    for (int j = 1; j <= k; ++j) {
        const auto nj = static_cast<Eigen::Index>(M.count_at_least(k + 1 - j));
        if (std::abs(cum_v(nj - 1) - cum_l(nj - 1)) > tol.membership_tol * (1.0 + cum_l(nj - 1))) {
            return false;
        }
    }
    return true;
}

bool in_relative_interior(const Vector& v, const SlopePattern& M, const TuningSequence& lambda,
                          const Tolerances& tol) {
    const SubdiffQuery q = subdiff_membership(v, M, lambda, tol);
    return q.member && static_cast<int>(q.tight_indices.size()) == M.k();
}

double affine_span_residual(const Vector& v, const SlopePattern& M, const TuningSequence& lambda) {
    check_dims(v, lambda.lambdas(), "affine_span_residual");
    const Matrix U = pattern_matrix(M);
    return (U.transpose() * v - clustered_lambda(M, lambda.lambdas())).cwiseAbs().maxCoeff();
}

}  // namespace slope
