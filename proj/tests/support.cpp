#include "support.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <sstream>

#include "slope/lambda_seq.hpp"

namespace slope::testing {

Matrix toy_design() {
    Matrix X(2, 2);
    X << 1.0, 0.6, 0.0, 0.8;
    return X;
}

TuningSequence toy_lambda() { return TuningSequence((Vector(2) << 4.0, 2.0).finished()); }

double series_normal_cdf(double x) {
    long double term = x, sum = x;
    const long double x2 = static_cast<long double>(x) * x;
    for (int k = 1; k < 500; ++k) {
        term *= x2 / (2 * k + 1);
        sum += term;
        if (std::fabs(term) < 1e-30L * std::fabs(sum)) break;
    }
    const long double pdf = std::exp(-x2 / 2) / std::sqrt(2 * 3.14159265358979323846L);
    return static_cast<double>(0.5L + pdf * sum);
}

namespace {

double cdf_erfc(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

double simpson(const std::function<double(double)>& f, double a, double b, int intervals) {
    if (intervals % 2) ++intervals;
    const double h = (b - a) / intervals;
    double s = f(a) + f(b);
    for (int i = 1; i < intervals; ++i) s += f(a + i * h) * (i % 2 ? 4.0 : 2.0);
    return s * h / 3.0;
}

}  // namespace

double quadrature_ball_probability(const Vector& m, const Vector& lambda, double alpha) {
    const double l1 = lambda(0), l2 = lambda(1);
    auto inner = [&](double v1) {
        const double c = std::min(l1, l1 + l2 - std::abs(v1));
        const double density = alpha * std::exp(-0.5 * std::pow(alpha * (v1 - m(0)), 2)) / std::sqrt(2.0 * M_PI);
        return density * (cdf_erfc(alpha * (c - m(1))) - cdf_erfc(alpha * (-c - m(1))));
    };
    // c(v1) has kinks at |v1| = l2.
    return simpson(inner, -l1, -l2, 4000) + simpson(inner, -l2, l2, 8000) + simpson(inner, l2, l1, 4000);
}

SlopePattern random_pattern(SeededRng& rng, int p, int k) {
    std::vector<int> vals(static_cast<std::size_t>(p), 0);
    std::vector<int> idx(static_cast<std::size_t>(p));
    std::iota(idx.begin(), idx.end(), 0);
    std::shuffle(idx.begin(), idx.end(), rng);
    auto sign = [&] { return rng.uniform() < 0.5 ? -1 : 1; };
    for (int c = 0; c < k; ++c) vals[static_cast<std::size_t>(idx[static_cast<std::size_t>(c)])] = sign() * (c + 1);
    for (int i = k; i < p; ++i) {
        const int level = static_cast<int>(rng.uniform() * (k + 1));  // 0..k
        vals[static_cast<std::size_t>(idx[static_cast<std::size_t>(i)])] = level == 0 ? 0 : sign() * level;
    }
    return SlopePattern(std::move(vals));
}

Vector random_cluster_values(SeededRng& rng, int k, double gap_lo, double gap_hi) {
    Vector s(k);
    double acc = 0.0;
    for (int i = k - 1; i >= 0; --i) {
        acc += gap_lo + (gap_hi - gap_lo) * rng.uniform();
        s(i) = acc;
    }
    return s;
}

TuningSequence random_strict_lambda(SeededRng& rng, int p) {
    Vector lam(p);
    double acc = 0.0;
    for (int i = p - 1; i >= 0; --i) {
        acc += 0.05 + rng.uniform();
        lam(i) = acc;
    }
    return TuningSequence(lam);
}

namespace {

std::string describe(int c, const std::string& what) {
    std::ostringstream os;
    os << "case " << c << ": " << what;
    return os.str();
}

// Vector with ties and zeros so that clustered inputs are exercised.
Vector tied_vector(SeededRng& rng, int p) {
    Vector b(p);
    const bool integer = rng.uniform() < 0.5;
    for (int i = 0; i < p; ++i) b(i) = integer ? std::round(6.0 * rng.uniform() - 3.0) : 2.0 * rng.normal();
    return b;
}

TuningSequence random_weak_lambda(SeededRng& rng, int p) {
    Vector lam(p);
    double acc = 0.0;
    for (int i = p - 1; i >= 0; --i) {
        acc += rng.uniform() < 0.3 ? 0.0 : rng.uniform();
        lam(i) = acc;
    }
    lam(0) += 0.1;
    return TuningSequence(lam);
}

}  // namespace

PropertyResult prop_norm_axioms(int cases, std::uint64_t seed) {
    PropertyResult r;
    for (int c = 0; c < cases; ++c) {
        SeededRng rng(seed, static_cast<std::uint64_t>(c));
        const int p = 1 + static_cast<int>(rng.uniform() * 10);
        const TuningSequence lam = random_weak_lambda(rng, p);
        const Vector a = tied_vector(rng, p), b = rng.normal_vector(p);
        const double ja = sorted_l1_norm(a, lam), jb = sorted_l1_norm(b, lam);
        const double scale = 1e-12 * (1.0 + ja + jb);
        ++r.cases;
        if (sorted_l1_norm(a + b, lam) > ja + jb + scale) r.fail(describe(c, "triangle inequality"));
        const double t = 3.0 * rng.normal();
        if (std::abs(sorted_l1_norm(t * b, lam) - std::abs(t) * jb) > 1e-12 * (1.0 + std::abs(t) * jb))
            r.fail(describe(c, "homogeneity"));
        if (sorted_l1_norm(Vector::Zero(p), lam) != 0.0) r.fail(describe(c, "J(0) != 0"));
        if (!b.isZero(0.0) && !(jb > 0.0)) r.fail(describe(c, "definiteness"));
        std::vector<int> perm(static_cast<std::size_t>(p));
        std::iota(perm.begin(), perm.end(), 0);
        std::shuffle(perm.begin(), perm.end(), rng);
        Vector psi(p);
        for (int i = 0; i < p; ++i) psi(i) = (rng.uniform() < 0.5 ? -1.0 : 1.0) * b(perm[static_cast<std::size_t>(i)]);
        if (std::abs(sorted_l1_norm(psi, lam) - jb) > 1e-12 * (1.0 + jb)) r.fail(describe(c, "signed permutation"));
    }
    return r;
}

PropertyResult prop_holder(int cases, std::uint64_t seed) {
    PropertyResult r;
    for (int c = 0; c < cases; ++c) {
        SeededRng rng(seed, static_cast<std::uint64_t>(c));
        const int p = 1 + static_cast<int>(rng.uniform() * 10);
        const TuningSequence lam = random_weak_lambda(rng, p);
        const Vector v = rng.normal_vector(p), b = tied_vector(rng, p);
        ++r.cases;
        const double bound = sorted_l1_norm(b, lam) * dual_sorted_l1_norm(v, lam);
        if (std::abs(v.dot(b)) > bound * (1.0 + 1e-12) + 1e-300) r.fail(describe(c, "Holder bound"));
    }
    return r;
}

PropertyResult prop_prox_certified(int cases, std::uint64_t seed) {
    PropertyResult r;
    for (int c = 0; c < cases; ++c) {
        SeededRng rng(seed, static_cast<std::uint64_t>(c));
        const int p = 1 + static_cast<int>(rng.uniform() * 10);
        const TuningSequence lam = random_strict_lambda(rng, p);
        const Vector y = 3.0 * tied_vector(rng, p);
        const Vector y2 = y + rng.normal_vector(p);
        const Vector z = prox_sorted_l1(y, lam);
        ++r.cases;
        const SubdiffQuery q = subdiff_membership(y - z, Vector(z), lam);
        if (!q.member) r.fail(describe(c, "y - prox(y) outside the subdifferential"));
        if ((prox_sorted_l1(y2, lam) - z).norm() > (y2 - y).norm() * (1.0 + 1e-12) + 1e-12)
            r.fail(describe(c, "prox expands distances"));
    }
    return r;
}

PropertyResult prop_membership_agreement(int cases, std::uint64_t seed) {
    PropertyResult r;
    for (int c = 0; c < cases; ++c) {
        SeededRng rng(seed, static_cast<std::uint64_t>(c));
        const int p = 1 + static_cast<int>(rng.uniform() * 6);
        const TuningSequence lam = random_strict_lambda(rng, p);
        Vector b, v;
        const double kind = rng.uniform();
        if (kind < 0.4) {
            // member by construction: v = y - prox(y), b = prox(y)
            const Vector y = 3.0 * tied_vector(rng, p);
            b = prox_sorted_l1(y, lam);
            v = y - b;
        } else if (kind < 0.7) {
            const Vector y = 3.0 * tied_vector(rng, p);
            b = prox_sorted_l1(y, lam);
            v = y - b + 0.3 * rng.normal_vector(p);
        } else {
            b = tied_vector(rng, p);
            v = lam.lambdas()(0) * 0.7 * rng.normal_vector(p);
        }
        ++r.cases;
        const bool a = subdiff_membership(v, Vector(b), lam).member;
        const bool a2 = subdiff_membership_prop_a2(v, b, lam);
        if (a != a2) r.fail(describe(c, std::string("verdicts differ, kind ") + std::to_string(kind)));
    }
    return r;
}

PropertyResult prop_lemma_a1(int cases, std::uint64_t seed) {
    PropertyResult r;
    for (int c = 0; c < cases; ++c) {
        SeededRng rng(seed, static_cast<std::uint64_t>(c));
        const int p = 1 + static_cast<int>(rng.uniform() * 8);
        const TuningSequence lam = random_strict_lambda(rng, p);
        Vector b = tied_vector(rng, p);
        const bool compliant = rng.uniform() < 0.5;
        if (compliant) {
            b = b.cwiseAbs();
            std::sort(b.data(), b.data() + p, std::greater<>());
        }
        ++r.cases;
        const bool member = subdiff_membership(lam.lambdas(), Vector(b), lam).member;
        bool sorted_nonneg = b.minCoeff() >= 0.0;
        for (int i = 0; i + 1 < p; ++i) sorted_nonneg = sorted_nonneg && b(i) >= b(i + 1);
        if (member && !sorted_nonneg) r.fail(describe(c, "Lambda in the subdifferential at an unsorted b"));
        if (sorted_nonneg && !member) r.fail(describe(c, "Lambda missing from the subdifferential at a sorted b"));
    }
    return r;
}

PropertyResult prop_penrose(int cases, std::uint64_t seed) {
    PropertyResult r;
    const double tol = Tolerances{}.eq_tol;
    for (int c = 0; c < cases; ++c) {
        SeededRng rng(seed, static_cast<std::uint64_t>(c));
        const int m = 1 + static_cast<int>(rng.uniform() * 8);
        const int n = 1 + static_cast<int>(rng.uniform() * 8);
        const int rank = static_cast<int>(rng.uniform() * (std::min(m, n) + 1));
        Matrix A = Matrix::Zero(m, n);
        if (rank > 0) {
            Matrix B(m, rank), C(rank, n);
            for (int i = 0; i < B.size(); ++i) B.data()[i] = rng.normal();
            for (int i = 0; i < C.size(); ++i) C.data()[i] = rng.normal();
            A = B * C;
        }
        const Matrix P = pinv(A);
        ++r.cases;
        auto rel = [](const Matrix& E, const Matrix& ref) {
            return E.cwiseAbs().maxCoeff() / (1.0 + ref.cwiseAbs().maxCoeff());
        };
        const Matrix AP = A * P, PA = P * A;
        if (rel(AP * A - A, A) > tol) r.fail(describe(c, "A A+ A != A"));
        if (rel(PA * P - P, P) > tol) r.fail(describe(c, "A+ A A+ != A+"));
        if (rel(AP - AP.transpose(), AP) > tol) r.fail(describe(c, "A A+ not symmetric"));
        if (rel(PA - PA.transpose(), PA) > tol) r.fail(describe(c, "A+ A not symmetric"));
        if (numerical_rank(A) != rank) r.fail(describe(c, "rank mismatch"));
    }
    return r;
}

PropertyResult prop_parallel_determinism(int reps, std::uint64_t seed) {
    PropertyResult r;
    ExperimentConfig cfg;
    cfg.design.kind = DesignSpec::Kind::gaussian_iid;
    cfg.design.n = 12;
    cfg.design.p = 5;
    cfg.pattern = SlopePattern::parse("2,-1,0,1,2");
    cfg.cluster_values = (Vector(2) << 3.0, 1.5).finished();
    cfg.sigma = 1.0;
    cfg.alpha = 0.3;
    cfg.reps = reps;
    cfg.master_seed = seed;
    cfg.solver_checks = 200;
    cfg.threads = 1;
    const ExperimentResult a = mc_recovery(cfg);
    cfg.threads = 4;
    const ExperimentResult b = mc_recovery(cfg);
    for (int i = 0; i < reps; ++i) {
        const RepRecord &x = a.records[static_cast<std::size_t>(i)], &y = b.records[static_cast<std::size_t>(i)];
        ++r.cases;
        if (x.rep != y.rep || x.alpha != y.alpha || x.positivity != y.positivity || x.subdiff != y.subdiff ||
            x.recovered != y.recovered || x.upper_event != y.upper_event || x.dual_value != y.dual_value ||
            x.solver_agrees != y.solver_agrees)
            r.fail(describe(i, "mc_recovery record differs across thread counts"));
    }
    if (a.recovery_freq != b.recovery_freq || a.solver_agree != b.solver_agree)
        r.fail("mc_recovery aggregate differs across thread counts");

    SeededRng drng(seed, 99);
    DesignSpec orth;
    orth.kind = DesignSpec::Kind::orthogonal;
    orth.n = 8;
    orth.p = 6;
    const Matrix X = gen_design(orth, drng);
    const Vector beta = Vector::Constant(6, 2.0);
    const TuningSequence lam = gaussian_order_stat_lambda(6);
    const ProbEstimate e1 = constant_magnitude_rejection_rate(X, beta, lam, 1.0, reps, seed, {}, 1);
    const ProbEstimate e4 = constant_magnitude_rejection_rate(X, beta, lam, 1.0, reps, seed, {}, 4);
    ++r.cases;
    if (e1.prob != e4.prob) r.fail("rejection rate differs across thread counts");
    return r;
}

double pattern_gap(const Vector& b) {
    std::vector<double> a(static_cast<std::size_t>(b.size()));
    for (Eigen::Index i = 0; i < b.size(); ++i) a[static_cast<std::size_t>(i)] = std::abs(b(i));
    a.push_back(0.0);
    std::sort(a.begin(), a.end());
    double gap = std::numeric_limits<double>::infinity();
    for (std::size_t i = 1; i < a.size(); ++i) {
        const double d = a[i] - a[i - 1];
        if (d > 1e-12) gap = std::min(gap, d);
    }
    return gap;
}

EquivalenceOutcome theorem_equivalence(int instances, std::uint64_t seed) {
    EquivalenceOutcome out;
    const Tolerances tol;
    for (int c = 0; c < instances; ++c) {
        SeededRng rng(seed, static_cast<std::uint64_t>(c));
        const int p = 1 + static_cast<int>(rng.uniform() * 8);
        const int n = p + static_cast<int>(rng.uniform() * (2 * p + 1));
        const int k = 1 + static_cast<int>(rng.uniform() * p);
        Matrix X(n, p);
        for (int i = 0; i < X.size(); ++i) X.data()[i] = rng.normal();
        const SlopePattern M = random_pattern(rng, p, k);
        const Vector s = random_cluster_values(rng, k, 0.5, 3.0);
        const TuningSequence lam = random_strict_lambda(rng, p);
        const Vector Y = X * synthesize(M, s) + rng.normal_vector(n);
        const double alpha = std::exp(std::log(0.005) + rng.uniform() * std::log(400.0));

        const RecoveryCertificate cert = check_recovery(X, Y, M, lam, alpha, tol);
        const SolverResult fit = SlopeFitter(X, Y, lam).fit_nothrow(alpha);
        const bool solver_recovers = patt_with_tol(fit.beta_hat, tol.pattern_tol) == M;
        ++out.instances;
        out.recovered += cert.recovered;
        if (solver_recovers == cert.recovered && fit.converged) {
            ++out.agree;
        } else if (cert.near_boundary || pattern_gap(fit.beta_hat) <= 10.0 * tol.pattern_tol) {
            ++out.disagree_explained;
        } else {
            ++out.disagree_unexplained;
        }
    }
    return out;
}

}  // namespace slope::testing
