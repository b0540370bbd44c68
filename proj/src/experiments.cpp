#include "slope/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <limits>
#include <mutex>
#include <thread>

#include "slope/errors.hpp"

namespace slope {

void parallel_for(std::size_t count, const std::function<void(std::size_t)>& fn, unsigned threads) {
    if (count == 0) return;
    if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
    threads = static_cast<unsigned>(std::min<std::size_t>(threads, count));
    if (threads <= 1) {
        for (std::size_t i = 0; i < count; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    auto worker = [&] {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= count) return;
            try {
                fn(i);
            } catch (...) {
                std::lock_guard<std::mutex> lock(failure_mutex);
                if (!failure) failure = std::current_exception();
                next.store(count);
                return;
            }
        }
    };
    std::vector<std::thread> pool;
    pool.reserve(threads);
    for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
    if (failure) std::rethrow_exception(failure);
}

// ---------------------------------------------------------------------------

Matrix gen_design(const DesignSpec& spec, SeededRng& rng) {
    if (spec.kind == DesignSpec::Kind::fixed) {
        require_finite(spec.fixed, "design");
        return spec.fixed;
    }
    if (spec.n < 1 || spec.p < 1) throw InvalidDesign("design: n and p must be positive");
    const Eigen::Index n = spec.n, p = spec.p;
    switch (spec.kind) {
        case DesignSpec::Kind::orthogonal: {
            if (n < p) throw InvalidDesign("orthogonal design needs n >= p");
            Matrix G(n, p);
            for (Eigen::Index j = 0; j < p; ++j)
                for (Eigen::Index i = 0; i < n; ++i) G(i, j) = rng.normal();
            Eigen::HouseholderQR<Matrix> qr(G);
            return qr.householderQ() * Matrix::Identity(n, p);
        }
        case DesignSpec::Kind::gaussian_iid: {
            Matrix X(n, p);
            for (Eigen::Index j = 0; j < p; ++j)
                for (Eigen::Index i = 0; i < n; ++i) X(i, j) = rng.normal();
            return X;
        }
        case DesignSpec::Kind::markov_genetic: {
            if (!(spec.flip_prob >= 0.0 && spec.flip_prob <= 1.0)) {
                throw InvalidDesign("markov design: flip probability must lie in [0, 1]");
            }
            Matrix X(n, p);
            for (Eigen::Index i = 0; i < n; ++i) {
                double state = rng.uniform() < 0.5 ? 1.0 : -1.0;
                for (Eigen::Index j = 0; j < p; ++j) {
                    if (j > 0 && rng.uniform() < spec.flip_prob) state = -state;
                    X(i, j) = state;
                }
            }
            if (spec.standardize) {
                for (Eigen::Index j = 0; j < p; ++j) {
                    const double mean = X.col(j).mean();
                    X.col(j).array() -= mean;
                    const double sd = std::sqrt(X.col(j).squaredNorm() / static_cast<double>(n));
                    if (sd > 0.0) X.col(j) /= sd;
                }
            }
            return X;
        }
        case DesignSpec::Kind::fixed: break;
    }
    throw InvalidDesign("design: unknown kind");
}

std::string design_kind_name(DesignSpec::Kind kind) {
    switch (kind) {
        case DesignSpec::Kind::orthogonal: return "orthogonal";
        case DesignSpec::Kind::gaussian_iid: return "gaussian_iid";
        case DesignSpec::Kind::markov_genetic: return "markov_genetic";
        case DesignSpec::Kind::fixed: return "fixed";
    }
    return "unknown";
}

DesignSpec::Kind parse_design_kind(const std::string& name) {
    if (name == "orthogonal") return DesignSpec::Kind::orthogonal;
    if (name == "gaussian_iid") return DesignSpec::Kind::gaussian_iid;
    if (name == "markov_genetic") return DesignSpec::Kind::markov_genetic;
    if (name == "fixed") return DesignSpec::Kind::fixed;
    throw InputError("unknown design kind '" + name + "'");
}

// ---------------------------------------------------------------------------

PiLaw pi_law(const RecoveryContext& ctx, double sigma) {
    if (!(sigma >= 0.0)) throw DomainError("pi_law: sigma must be nonnegative");
    PiLaw law;
    law.mean = ctx.pi_bar();
    law.cov = sigma * sigma * ctx.residual_gram();
    law.lambda = ctx.lambda();
    law.lambda_in_col = ctx.lambda_in_colspace();
    return law;
}

PiLaw pi_law(const AsymptoticSpec& spec) {
    PiLaw law;
    law.mean = spec.Z_mean;
    law.cov = spec.Z_cov;
    law.lambda = spec.lambda;
    law.lambda_in_col = true;
    return law;
}

namespace {

ProbEstimate estimate(std::size_t hits, int reps) {
    ProbEstimate e;
    e.reps = reps;
    e.prob = static_cast<double>(hits) / reps;
    e.se = std::sqrt(e.prob * (1.0 - e.prob) / reps);
    return e;
}

std::vector<Vector> draw_noise(const PiLaw& law, int reps, std::uint64_t seed, const Tolerances& tol) {
    const MvnSampler sampler(Vector::Zero(law.mean.size()), law.cov, tol);
    std::vector<Vector> out(static_cast<std::size_t>(reps));
    parallel_for(out.size(), [&](std::size_t j) {
        SeededRng rng(seed, j);
        out[j] = sampler.draw_centered(rng);
    });
    return out;
}

}  // namespace

ProbEstimate upper_bound_probability(const PiLaw& law, double alpha, int mc_reps, std::uint64_t seed,
                                     const Tolerances& tol) {
    if (mc_reps < 1) throw DomainError("upper_bound_probability: mc_reps must be positive");
    if (!(alpha > 0.0)) throw DomainError("upper_bound_probability: alpha must be positive");
    if (!law.lambda_in_col) return estimate(0, mc_reps);
    const std::vector<Vector> noise = draw_noise(law, mc_reps, seed, tol);
    std::vector<char> hit(noise.size(), 0);
    parallel_for(noise.size(), [&](std::size_t j) {
        hit[j] = dual_sorted_l1_norm(law.mean + noise[j] / alpha, law.lambda) <= 1.0 + tol.membership_tol;
    });
    return estimate(static_cast<std::size_t>(std::count(hit.begin(), hit.end(), 1)), mc_reps);
}

namespace {

// Largest t with J*(m + t w) <= bound; the feasible t form an interval
// containing 0 because J* is convex and J*(m) <= bound.
double feasible_radius(const Vector& m, const Vector& w, const TuningSequence& lambda, double bound) {
    auto ok = [&](double t) { return dual_sorted_l1_norm(m + t * w, lambda) <= bound; };
    double lo = 0.0, hi = 1.0;
    if (ok(hi)) {
        do {
            lo = hi;
            hi *= 2.0;
            if (hi > 1e15) return std::numeric_limits<double>::infinity();
        } while (ok(hi));
    }
    for (int it = 0; it < 200 && hi - lo > 1e-13 * hi; ++it) {
        const double mid = 0.5 * (lo + hi);
        (ok(mid) ? lo : hi) = mid;
    }
    return lo;
}

}  // namespace

Calibration calibrate_alpha(const PiLaw& law, double eta, int mc_reps, std::uint64_t seed, const Tolerances& tol) {
    if (!(eta > 0.0 && eta < 1.0)) throw DomainError("calibrate_alpha: eta must lie in (0, 1)");
    if (mc_reps < 1) throw DomainError("calibrate_alpha: mc_reps must be positive");
    if (!law.lambda_in_col) throw CalibrationFailed("clustered lambda is outside col(X_tilde')", 0.0);
    const double bound = 1.0 + tol.membership_tol;
    if (dual_sorted_l1_norm(law.mean, law.lambda) > bound) {
        // Without irrepresentability the event is no longer monotone in alpha;
        // report the best value seen on a coarse scan.
        double best = 0.0;
        for (double a : log_grid(1e-2, 1e3, 41)) {
            best = std::max(best, upper_bound_probability(law, a, std::min(mc_reps, 10000), seed, tol).prob);
        }
        throw CalibrationFailed("irrepresentability fails; the target level is not attainable", best);
    }

    const std::vector<Vector> noise = draw_noise(law, mc_reps, seed, tol);
    std::vector<double> threshold(noise.size());
    parallel_for(noise.size(), [&](std::size_t j) {
        const double r = feasible_radius(law.mean, noise[j], law.lambda, bound);
        threshold[j] = r > 0.0 ? 1.0 / r : std::numeric_limits<double>::infinity();
    });
    std::sort(threshold.begin(), threshold.end());
    const auto finite = static_cast<std::size_t>(
        std::count_if(threshold.begin(), threshold.end(), [](double a) { return std::isfinite(a); }));
    Calibration cal;
    cal.ceiling = static_cast<double>(finite) / mc_reps;
    const auto need = static_cast<std::size_t>(std::ceil(eta * mc_reps - 1e-9));
    if (need == 0 || need > finite) {
        throw CalibrationFailed("target probability exceeds the attainable ceiling", cal.ceiling);
    }
    cal.alpha = std::max(threshold[need - 1], std::numeric_limits<double>::min());
    const auto hits = static_cast<std::size_t>(
        std::upper_bound(threshold.begin(), threshold.end(), cal.alpha) - threshold.begin());
    cal.achieved = estimate(hits, mc_reps);
    return cal;
}

// ---------------------------------------------------------------------------

Vector ExperimentConfig::resolve_beta() const {
    if (beta) return *beta;
    if (pattern.size() == 0) throw InputError("experiment: need beta or pattern with cluster values");
    if (pattern.is_zero()) return Vector::Zero(static_cast<Eigen::Index>(pattern.size()));
    return synthesize(pattern, cluster_values);
}

ExperimentResult mc_recovery(const ExperimentConfig& cfg) {
    if (cfg.reps < 1) throw InputError("experiment: reps must be at least 1");
    if (!(cfg.sigma >= 0.0)) throw InputError("experiment: sigma must be nonnegative");
    cfg.tol.validate();
    const Vector beta = cfg.resolve_beta();
    const auto p = static_cast<int>(beta.size());
    const SlopePattern M = patt(beta);
    const TuningSequence lambda = cfg.lambda.make(p);

    DesignSpec design = cfg.design;
    if (design.kind != DesignSpec::Kind::fixed && design.p != p) {
        throw InputError("experiment: design p differs from the length of beta");
    }
    // Stream reserved for a shared design, disjoint from the replication streams.
    constexpr std::uint64_t shared_stream = ~std::uint64_t{0};
    SeededRng shared_rng(cfg.master_seed, shared_stream);
    const Matrix X0 = gen_design(design, shared_rng);
    if (X0.cols() != p) throw InputError("experiment: design columns differ from the length of beta");
    const bool redraw = cfg.redraw_design && design.kind != DesignSpec::Kind::fixed;
    const double penalty_factor = cfg.scale_penalty_by_sqrt_n ? std::sqrt(static_cast<double>(X0.rows())) : 1.0;

    std::optional<RecoveryContext> shared_ctx;
    if (!M.is_zero()) shared_ctx.emplace(X0, M, lambda, cfg.tol);

    ExperimentResult res;
    res.reps = cfg.reps;
    if (cfg.alpha) {
        res.alpha = *cfg.alpha;
    } else if (cfg.target_eta) {
        if (!shared_ctx) throw InputError("experiment: calibration needs a nonzero pattern");
        const Calibration cal = calibrate_alpha(pi_law(*shared_ctx, cfg.sigma), *cfg.target_eta,
                                                cfg.calibration_reps, cfg.master_seed, cfg.tol);
        res.alpha = cal.alpha / penalty_factor;
    } else {
        throw InputError("experiment: need alpha or target_eta");
    }
    if (!(res.alpha > 0.0)) throw InputError("experiment: alpha must be positive");
    const double scale = res.alpha * penalty_factor;

    res.records.resize(static_cast<std::size_t>(cfg.reps));
    parallel_for(res.records.size(), [&](std::size_t r) {
        SeededRng rng(cfg.master_seed, r);
        const Matrix X = redraw ? gen_design(design, rng) : X0;
        const Vector Y = X * beta + cfg.sigma * rng.normal_vector(X.rows());
        RepRecord rec;
        rec.rep = static_cast<int>(r);
        rec.alpha = scale;
        rec.seed = cfg.master_seed;
        if (M.is_zero()) {
            rec.dual_value = dual_sorted_l1_norm(X.transpose() * Y, lambda.scaled(scale));
            rec.recovered = rec.dual_value <= 1.0 + cfg.tol.membership_tol;
            rec.positivity = true;
            rec.subdiff = rec.recovered;
            rec.upper_event = rec.recovered;
        } else {
            std::optional<RecoveryContext> local;
            if (redraw) local.emplace(X, M, lambda, cfg.tol);
            const RecoveryContext& ctx = redraw ? *local : *shared_ctx;
            const RecoveryCertificate cert = ctx.check(Y, scale);
            rec.positivity = cert.positivity_ok;
            rec.subdiff = cert.subdiff_ok;
            rec.recovered = cert.recovered;
            rec.dual_value = cert.dual_value;
            rec.upper_event = ctx.lambda_in_colspace() && cert.dual_value <= 1.0 + cfg.tol.membership_tol;
            rec.near_boundary = cert.near_boundary;
        }
        if (static_cast<int>(r) < cfg.solver_checks) {
            SolverOptions opts;
            opts.tol = cfg.tol;
            const SolverResult fit = SlopeFitter(X, Y, lambda, opts).fit_nothrow(scale);
            rec.solver_checked = 1;
            const bool solver_recovers = patt_with_tol(fit.beta_hat, cfg.tol.pattern_tol) == M;
            rec.solver_agrees = fit.converged && solver_recovers == rec.recovered;
        }
        res.records[r] = rec;
    }, cfg.threads);

    std::size_t rec_n = 0, pos_n = 0, sub_n = 0, both_n = 0, up_n = 0;
    for (const RepRecord& rec : res.records) {
        rec_n += rec.recovered;
        pos_n += rec.positivity;
        sub_n += rec.subdiff;
        both_n += rec.positivity && rec.subdiff;
        up_n += rec.upper_event;
        res.solver_checked += rec.solver_checked;
        res.solver_agree += rec.solver_agrees;
        if (rec.solver_checked && !rec.solver_agrees && rec.near_boundary) ++res.solver_disagree_near_boundary;
    }
    const double reps = cfg.reps;
    res.recovery_freq = rec_n / reps;
    res.positivity_freq = pos_n / reps;
    res.subdiff_freq = sub_n / reps;
    res.both_freq = both_n / reps;
    res.upper_event_freq = up_n / reps;
    res.se = std::sqrt(res.recovery_freq * (1.0 - res.recovery_freq) / reps);
    return res;
}

// ---------------------------------------------------------------------------

std::optional<TuningSequence> irrepresentable_lambda(const Matrix& X, const SlopePattern& M, double share,
                                                     const Tolerances& tol) {
    if (M.k() != 1) throw InvalidPattern("irrepresentable_lambda: needs a single-cluster pattern");
    if (!(share > 0.0 && share < 1.0)) throw DomainError("irrepresentable_lambda: share must lie in (0, 1)");
    const Eigen::Index p = X.cols();
    const auto k = static_cast<Eigen::Index>(M.support_size());
    const ClusterReduction red = reduce(X, Vector::Ones(p), M, tol, false);
    if (red.rank == 0) return std::nullopt;
    // pi_bar = S w for Lambda_tilde = S; the support entries of w sum to one.
    const Vector w = X.transpose() * (red.Xt_pinv * Vector::Ones(1));
    std::vector<Eigen::Index> order(static_cast<std::size_t>(p));
    for (Eigen::Index i = 0; i < p; ++i) order[static_cast<std::size_t>(i)] = i;
    std::sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) {
        return std::abs(w(a)) > std::abs(w(b));
    });
    for (Eigen::Index j = 0; j < k; ++j) {
        const Eigen::Index i = order[static_cast<std::size_t>(j)];
        if (M[static_cast<std::size_t>(i)] == 0 || M[static_cast<std::size_t>(i)] * w(i) <= 0.0) return std::nullopt;
    }
    Vector a(p);
    for (Eigen::Index j = 0; j < p; ++j) a(j) = std::abs(w(order[static_cast<std::size_t>(j)]));
    for (Eigen::Index j = 0; j + 1 < p; ++j) {
        if (!(a(j) > a(j + 1))) return std::nullopt;
    }
    if (!(a(p - 1) > 0.0)) return std::nullopt;

    // Head: mix |w| with a point mass on the first weight, which leaves every
    // partial sum before k slack and the k-th sum tight. Tail: |w| inflated by
    // (1 + gamma), which leaves the partial sums after k slack.
    const double head_gap = k < p ? 1.0 - a(k) / a(k - 1) : 0.5;
    const double theta = share * head_gap;
    Vector lam(p);
    lam.head(k) = (1.0 - theta) * a.head(k);
    lam(0) += theta * a.head(k).sum();
    if (k < p) {
        const double gamma = share * ((1.0 - theta) * a(k - 1) / a(k) - 1.0);
        lam.tail(p - k) = (1.0 + gamma) * a.tail(p - k);
    }
    return TuningSequence(lam / lam(0));
}

namespace {

struct Fitted {
    Vector beta;
    double alpha;
};

int count_false_positives(const Vector& beta_hat, const Vector& beta, double tol) {
    int fp = 0;
    for (Eigen::Index i = 0; i < beta.size(); ++i) {
        if (beta(i) == 0.0 && std::abs(beta_hat(i)) > tol) ++fp;
    }
    return fp;
}

// Smallest scale on the grid whose fit selects no null coefficient.
Fitted zero_fp_fallback(const SlopeFitter& fitter, const Vector& beta, double alpha_max, double tol) {
    const std::vector<double> grid = log_grid(alpha_max * 1e-3, alpha_max, 80);
    Fitted best{Vector::Zero(beta.size()), alpha_max};
    std::optional<Vector> warm;
    for (auto it = grid.rbegin(); it != grid.rend(); ++it) {
        const SolverResult r = fitter.fit_nothrow(*it, warm);
        warm = r.beta_hat;
        if (count_false_positives(r.beta_hat, beta, tol) == 0) best = {r.beta_hat, *it};
    }
    return best;
}

MethodFit fit_method(const Matrix& X, const Vector& Y, const Vector& beta, const TuningSequence& lambda,
                     Method method, const Tolerances& tol) {
    MethodFit out;
    out.min_alpha = min_alpha_for_recovery(X, Y, beta, method, lambda, tol);
    SolverOptions opts;
    opts.tol = tol;
    const TuningSequence weights = method == Method::slope ? lambda : constant_lambda(static_cast<int>(beta.size()), 1.0);
    const SlopeFitter fitter(X, Y, weights, opts);
    if (out.min_alpha) {
        out.alpha_used = *out.min_alpha;
        out.beta_hat = fitter.fit_nothrow(out.alpha_used).beta_hat;
    } else {
        const Vector xty = X.transpose() * Y;
        const double alpha_max = dual_sorted_l1_norm(xty, weights);
        const Fitted f = zero_fp_fallback(fitter, beta, alpha_max, tol.pattern_tol);
        out.fallback = true;
        out.alpha_used = f.alpha;
        out.beta_hat = f.beta;
    }
    out.squared_error = (out.beta_hat - beta).squaredNorm();
    out.false_positives = count_false_positives(out.beta_hat, beta, tol.pattern_tol);
    const SlopePattern fitted = patt_with_tol(out.beta_hat, tol.pattern_tol);
    if (method == Method::slope) {
        out.pattern_recovered = fitted == patt(beta);
    } else {
        bool same = true;
        for (Eigen::Index i = 0; i < beta.size(); ++i) {
            const int s = (beta(i) > 0) - (beta(i) < 0);
            const int f = std::abs(out.beta_hat(i)) <= tol.pattern_tol ? 0 : (out.beta_hat(i) > 0 ? 1 : -1);
            same = same && s == f;
        }
        out.pattern_recovered = same;
    }
    return out;
}

}  // namespace

CompareResult compare_lasso_slope(const CompareConfig& cfg) {
    if (cfg.k < 1 || cfg.k > cfg.p) throw InputError("compare: need 1 <= k <= p");
    DesignSpec spec;
    spec.kind = DesignSpec::Kind::markov_genetic;
    spec.n = cfg.n;
    spec.p = cfg.p;
    spec.flip_prob = cfg.flip_prob;
    spec.standardize = true;
    SeededRng rng(cfg.seed, 0);
    const Matrix X = gen_design(spec, rng);
    CompareResult res;
    res.seed = cfg.seed;
    res.beta = Vector::Zero(cfg.p);
    res.beta.head(cfg.k).setConstant(cfg.signal);
    const Vector Y = X * res.beta + cfg.sigma * rng.normal_vector(cfg.n);
    const SlopePattern M = patt(res.beta);

    if (cfg.slope_lambda == "adaptive") {
        if (auto lam = irrepresentable_lambda(X, M, 0.5, cfg.tol)) {
            res.slope_lambda = *lam;
            res.adaptive_lambda_used = true;
        } else {
            res.slope_lambda = LambdaRecipe::parse(cfg.fallback_lambda).make(cfg.p);
        }
    } else {
        res.slope_lambda = LambdaRecipe::parse(cfg.slope_lambda).make(cfg.p);
    }
    res.slope_ir = irrepresentability(X, M, res.slope_lambda, cfg.tol).holds;
    std::vector<int> S(static_cast<std::size_t>(cfg.p), 0);
    for (int i = 0; i < cfg.k; ++i) S[static_cast<std::size_t>(i)] = 1;
    res.lasso_ir = LassoContext(X, S, cfg.tol).check(Vector::Zero(cfg.n), 1.0).subdiff_ok;

    res.lasso = fit_method(X, Y, res.beta, res.slope_lambda, Method::lasso, cfg.tol);
    res.slope = fit_method(X, Y, res.beta, res.slope_lambda, Method::slope, cfg.tol);
    return res;
}

// ---------------------------------------------------------------------------

namespace {

void require_orthogonal(const Matrix& X) {
    require_finite(X, "X");
    const Matrix G = X.transpose() * X;
    if ((G - Matrix::Identity(G.rows(), G.cols())).cwiseAbs().maxCoeff() > 1e-8) {
        throw InvalidDesign("constant magnitude test: X'X must be the identity");
    }
}

// With an orthogonal design the SLOPE fit is the prox of X'Y.
bool reject_constant(const Vector& xty, const TuningSequence& scaled, const Tolerances& tol) {
    const Vector mag = prox_sorted_l1(xty, scaled).cwiseAbs();
    return mag.maxCoeff() - mag.minCoeff() > tol.pattern_tol;
}

}  // namespace

bool test_constant_magnitude(const Vector& Y, const Matrix& X, const TuningSequence& lambda, double alpha_eta,
                             const Tolerances& tol) {
    if (Y.size() != X.rows() || lambda.size() != X.cols()) throw DimensionError("constant magnitude test: dims");
    require_orthogonal(X);
    return reject_constant(X.transpose() * Y, lambda.scaled(alpha_eta), tol);
}

ProbEstimate constant_magnitude_rejection_rate(const Matrix& X, const Vector& beta, const TuningSequence& lambda,
                                               double alpha_eta, int reps, std::uint64_t seed,
                                               const Tolerances& tol, unsigned threads) {
    if (reps < 1) throw DomainError("rejection rate: reps must be positive");
    if (beta.size() != X.cols() || lambda.size() != X.cols()) throw DimensionError("rejection rate: dims");
    require_orthogonal(X);
    const TuningSequence scaled = lambda.scaled(alpha_eta);
    const Vector mean = X * beta;
    std::vector<char> reject(static_cast<std::size_t>(reps), 0);
    parallel_for(reject.size(), [&](std::size_t r) {
        SeededRng rng(seed, r);
        const Vector Y = mean + rng.normal_vector(X.rows());
        reject[r] = reject_constant(X.transpose() * Y, scaled, tol);
    }, threads);
    return estimate(static_cast<std::size_t>(std::count(reject.begin(), reject.end(), 1)), reps);
}

}  // namespace slope
