#pragma once

#include <cstdint>
#include <random>

#include <Eigen/Dense>

namespace slope {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Numerical thresholds shared by every module.
struct Tolerances {
    double eq_tol = 1e-9;          // relative equality of reals
    double rank_tol = 1e-10;       // SVD cutoff, relative to the largest singular value
    double pattern_tol = 1e-4;     // cluster / zero detection on solver output
    double membership_tol = 1e-8;  // slack in subdifferential membership

    /// Throws DomainError unless every field is strictly positive.
    void validate() const;
};

/// Throws InvalidMatrix if A is empty or holds a non-finite entry.
void require_finite(const Matrix& A, const char* what = "matrix");
void require_finite(const Vector& v, const char* what = "vector");

/// Moore-Penrose pseudo-inverse via SVD; singular values below
/// rank_tol * sigma_max are treated as zero.
Matrix pinv(const Matrix& A, const Tolerances& tol = {});

/// Numerical rank with the same cutoff pinv uses.
Eigen::Index numerical_rank(const Matrix& A, const Tolerances& tol = {});

/// Orthonormal basis (columns) of ker(A); empty (cols()==0) when trivial.
Matrix kernel_basis(const Matrix& A, const Tolerances& tol = {});

/// Orthogonal projector A A^+ onto col(A).
Matrix projector(const Matrix& A, const Tolerances& tol = {});

/// ||(I - A A^+) v||_inf <= eq_tol * (1 + ||v||_inf).
bool in_col_space(const Vector& v, const Matrix& A, const Tolerances& tol = {});

double std_normal_cdf(double x);

/// Inverse standard normal CDF, accurate to ~1e-15 after refinement.
/// Throws DomainError unless 0 < u < 1.
double std_normal_quantile(double u);

/// Counter-based generator: draw k of stream (seed, stream) is a pure function
/// of (seed, stream, k), so replications can be scheduled in any order.
class SeededRng {
public:
    using result_type = std::uint64_t;

    SeededRng(std::uint64_t master_seed, std::uint64_t stream_id);

    static constexpr result_type min() { return 0; }
    static constexpr result_type max() { return ~result_type{0}; }
    result_type operator()();

    std::uint64_t master_seed() const noexcept { return seed_; }
    std::uint64_t stream_id() const noexcept { return stream_; }
    std::uint64_t key() const noexcept { return key_; }

    double uniform();  // [0, 1)
    double normal();   // N(0, 1)
    Vector normal_vector(Eigen::Index n);

private:
    std::uint64_t seed_;
    std::uint64_t stream_;
    std::uint64_t key_;
    std::uint64_t counter_ = 0;
    std::normal_distribution<double> gauss_{0.0, 1.0};
};

/// Multivariate normal sampler with a cached symmetric square root of the
/// covariance (eigendecomposition, negative eigenvalues clamped to zero).
class MvnSampler {
public:
    MvnSampler(Vector mean, const Matrix& cov, const Tolerances& tol = {});

    Vector draw(SeededRng& rng) const;
    /// Zero-mean draw L z.
    Vector draw_centered(SeededRng& rng) const;

    const Vector& mean() const noexcept { return mean_; }
    const Matrix& root() const noexcept { return root_; }

private:
    Vector mean_;
    Matrix root_;
};

Vector mvn_sample(const Vector& mean, const Matrix& cov, SeededRng& rng,
                  const Tolerances& tol = {});

}  // namespace slope
