#include "slope/numerics.hpp"

#include <cmath>
#include <numbers>

#include "slope/errors.hpp"

namespace slope {

void Tolerances::validate() const {
    if (!(eq_tol > 0) || !(rank_tol > 0) || !(pattern_tol > 0) || !(membership_tol > 0)) {
        throw DomainError("tolerances must be strictly positive");
    }
}

void require_finite(const Matrix& A, const char* what) {
    if (A.rows() < 1 || A.cols() < 1) {
        throw InvalidMatrix(std::string(what) + ": empty matrix");
    }
    if (!A.allFinite()) {
        throw InvalidMatrix(std::string(what) + ": non-finite entry");
    }
}

void require_finite(const Vector& v, const char* what) {
    if (!v.allFinite()) {
        throw InvalidVector(std::string(what) + ": non-finite entry");
    }
}

namespace {

// Thin SVD is enough for pinv; the kernel needs the full V.
double cutoff(const Vector& sv, const Tolerances& tol) {
    const double smax = sv.size() > 0 ? sv(0) : 0.0;
    return tol.rank_tol * smax;
}

}  // namespace

Matrix pinv(const Matrix& A, const Tolerances& tol) {
    require_finite(A, "pinv");
    Eigen::BDCSVD<Matrix> svd(A, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const Vector& sv = svd.singularValues();
    const double cut = cutoff(sv, tol);
    Vector inv = Vector::Zero(sv.size());
    for (Eigen::Index i = 0; i < sv.size(); ++i) {
        if (sv(i) > cut && sv(i) > 0.0) inv(i) = 1.0 / sv(i);
    }
    return svd.matrixV() * inv.asDiagonal() * svd.matrixU().transpose();
}

Eigen::Index numerical_rank(const Matrix& A, const Tolerances& tol) {
    require_finite(A, "rank");
    Eigen::BDCSVD<Matrix> svd(A);
    const Vector& sv = svd.singularValues();
    const double cut = cutoff(sv, tol);
    Eigen::Index r = 0;
    for (Eigen::Index i = 0; i < sv.size(); ++i) {
        if (sv(i) > cut && sv(i) > 0.0) ++r;
    }
    return r;
}

Matrix kernel_basis(const Matrix& A, const Tolerances& tol) {
    require_finite(A, "kernel");
    Eigen::JacobiSVD<Matrix> svd(A, Eigen::ComputeFullV);
    const Vector& sv = svd.singularValues();
    const double cut = cutoff(sv, tol);
    Eigen::Index r = 0;
    for (Eigen::Index i = 0; i < sv.size(); ++i) {
        if (sv(i) > cut && sv(i) > 0.0) ++r;
    }
    return svd.matrixV().rightCols(A.cols() - r);
}

Matrix projector(const Matrix& A, const Tolerances& tol) {
    Matrix P = A * pinv(A, tol);
    // Symmetrize away rounding so callers can rely on P' == P exactly.
    return 0.5 * (P + P.transpose());
}

bool in_col_space(const Vector& v, const Matrix& A, const Tolerances& tol) {
    if (v.size() != A.rows()) {
        throw DimensionError("in_col_space: vector length does not match matrix rows");
    }
    require_finite(v, "in_col_space");
    const Vector residual = v - A * (pinv(A, tol) * v);
    const double scale = 1.0 + (v.size() ? v.cwiseAbs().maxCoeff() : 0.0);
    return residual.size() == 0 || residual.cwiseAbs().maxCoeff() <= tol.eq_tol * scale;
}

double std_normal_cdf(double x) {
    return 0.5 * std::erfc(-x / std::numbers::sqrt2);
}

double std_normal_quantile(double u) {
    if (!(u > 0.0 && u < 1.0)) {
        throw DomainError("std_normal_quantile: probability must lie in (0, 1)");
    }
    // Acklam's rational approximation followed by one Halley step.
    static constexpr double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                                   -2.759285104469687e+02, 1.383577518672690e+02,
                                   -3.066479806614716e+01, 2.506628277459239e+00};
    static constexpr double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                                   -1.556989798598866e+02, 6.680131188771972e+01,
                                   -1.328068155288572e+01};
    static constexpr double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                                   -2.400758277161838e+00, -2.549732539343734e+00,
                                   4.374664141464968e+00,  2.938163982698783e+00};
    static constexpr double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                                   2.445134137142996e+00, 3.754408661907416e+00};
    constexpr double p_low = 0.02425;

    double x;
    if (u < p_low) {
        const double q = std::sqrt(-2.0 * std::log(u));
        x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
            ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    } else if (u <= 1.0 - p_low) {
        const double q = u - 0.5;
        const double r = q * q;
        x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
            (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
    } else {
        const double q = std::sqrt(-2.0 * std::log1p(-u));
        x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
            ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    }

    // Refine in whichever tail keeps the residual well conditioned.
    double e;
    if (u < 0.5) {
        e = std_normal_cdf(x) - u;
    } else {
        e = (1.0 - u) - 0.5 * std::erfc(x / std::numbers::sqrt2);
    }
    const double g = e * std::sqrt(2.0 * std::numbers::pi) * std::exp(0.5 * x * x);
    x = x - g / (1.0 + 0.5 * x * g);
    return x;
}

namespace {

constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ULL;

std::uint64_t mix64(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

}  // namespace

SeededRng::SeededRng(std::uint64_t master_seed, std::uint64_t stream_id)
    : seed_(master_seed),
      stream_(stream_id),
      key_(mix64(master_seed + kGolden) ^ mix64(mix64(stream_id + 0x632be59bd9b4e019ULL))) {}

SeededRng::result_type SeededRng::operator()() {
    ++counter_;
    return mix64(key_ + counter_ * kGolden);
}

double SeededRng::uniform() {
    return static_cast<double>((*this)() >> 11) * 0x1.0p-53;
}

double SeededRng::normal() {
    return gauss_(*this);
}

Vector SeededRng::normal_vector(Eigen::Index n) {
    Vector z(n);
    for (Eigen::Index i = 0; i < n; ++i) z(i) = normal();
    return z;
}

MvnSampler::MvnSampler(Vector mean, const Matrix& cov, const Tolerances& tol)
    : mean_(std::move(mean)) {
    if (cov.rows() != cov.cols() || cov.rows() != mean_.size()) {
        throw DimensionError("mvn: covariance must be square and match the mean");
    }
    require_finite(cov, "covariance");
    require_finite(mean_, "mean");
    const double scale = 1.0 + cov.cwiseAbs().maxCoeff();
    if ((cov - cov.transpose()).cwiseAbs().maxCoeff() > tol.eq_tol * scale) {
        throw InvalidCovariance("mvn: covariance is not symmetric");
    }
    Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (cov + cov.transpose()));
    // eigenvalues at roundoff level are zero; their square roots are not small
    const double cutoff = tol.rank_tol * std::max(es.eigenvalues().cwiseAbs().maxCoeff(), 0.0);
    const Vector ev = es.eigenvalues().unaryExpr([cutoff](double e) { return e > cutoff ? std::sqrt(e) : 0.0; });
    root_ = es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose();
}

Vector MvnSampler::draw_centered(SeededRng& rng) const {
    return root_ * rng.normal_vector(mean_.size());
}

Vector MvnSampler::draw(SeededRng& rng) const {
    return mean_ + draw_centered(rng);
}

Vector mvn_sample(const Vector& mean, const Matrix& cov, SeededRng& rng, const Tolerances& tol) {
    return MvnSampler(mean, cov, tol).draw(rng);
}

}  // namespace slope
