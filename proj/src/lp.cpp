#include "slope/lp.hpp"

#include <algorithm>
#include <limits>

#include "slope/errors.hpp"

namespace slope {

LpResult maximize_lp(const Vector& c, const Matrix& A, const Vector& b, int max_pivots) {
    const Eigen::Index m = A.rows();
    const Eigen::Index n = A.cols();
    if (c.size() != n || b.size() != m) throw DimensionError("maximize_lp: shape mismatch");
    if (m > 0 && b.minCoeff() < 0.0) throw DomainError("maximize_lp: b must be nonnegative");

    // Tableau rows 0..m-1 are constraints, row m is the objective (reduced costs).
    Matrix T = Matrix::Zero(m + 1, n + m + 1);
    T.topLeftCorner(m, n) = A;
    T.block(0, n, m, m).setIdentity();
    T.col(n + m).head(m) = b;
    T.row(m).head(n) = -c.transpose();
    std::vector<Eigen::Index> basis(m);
    for (Eigen::Index i = 0; i < m; ++i) basis[i] = n + i;

    constexpr double eps = 1e-12;
    for (int pivot = 0; pivot < max_pivots; ++pivot) {
        Eigen::Index enter = -1;
        for (Eigen::Index j = 0; j < n + m; ++j) {
            if (T(m, j) < -eps) { enter = j; break; }
        }
        if (enter < 0) break;

        Eigen::Index leave = -1;
        double best = std::numeric_limits<double>::infinity();
        for (Eigen::Index i = 0; i < m; ++i) {
            if (T(i, enter) > eps) {
                const double ratio = T(i, n + m) / T(i, enter);
                if (ratio < best - eps || (ratio <= best + eps && leave >= 0 && basis[i] < basis[leave])) {
                    best = ratio;
                    leave = i;
                }
            }
        }
        if (leave < 0) return {LpResult::Status::unbounded, Vector::Zero(n), 0.0};

        T.row(leave) /= T(leave, enter);
        for (Eigen::Index i = 0; i <= m; ++i) {
            if (i != leave && T(i, enter) != 0.0) T.row(i) -= T(i, enter) * T.row(leave);
        }
        basis[leave] = enter;
    }

    Vector x = Vector::Zero(n);
    for (Eigen::Index i = 0; i < m; ++i) {
        if (basis[i] < n) x(basis[i]) = T(i, n + m);
    }
    return {LpResult::Status::optimal, x, T(m, n + m)};
}

MarginResult max_affine_margin(const Vector& s0, const Matrix& N, const Matrix& D, double cap) {
    const Vector base = D * s0;
    if (N.cols() == 0) {
        return {base.size() ? base.minCoeff() : cap, s0};
    }
    // Variables: z+ (d), z- (d), t' >= 0 with t = t' - shift.
    // Rows: t - (D N) z <= D s0   and   t <= cap.
    const Eigen::Index d = N.cols();
    const Eigen::Index m = D.rows();
    const Matrix DN = D * N;
    const double shift = std::max(0.0, -base.minCoeff()) + 1.0;

    Matrix A = Matrix::Zero(m + 1, 2 * d + 1);
    A.block(0, 0, m, d) = -DN;
    A.block(0, d, m, d) = DN;
    A.block(0, 2 * d, m, 1).setOnes();
    A(m, 2 * d) = 1.0;
    Vector b(m + 1);
    b.head(m) = base.array() + shift;
    b(m) = cap + shift;
    Vector c = Vector::Zero(2 * d + 1);
    c(2 * d) = 1.0;

    const LpResult lp = maximize_lp(c, A, b);
    const Vector z = lp.x.head(d) - lp.x.segment(d, d);
    const Vector point = s0 + N * z;
    const Vector achieved = D * point;
    return {achieved.minCoeff(), point};
}

}  // namespace slope
