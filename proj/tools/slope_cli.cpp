// slope: command-line front end for the pattern-recovery library.
//
// Exit codes: 0 ok / recovered, 1 negative verdict, 2 input error,
// 3 numerical failure.

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "slope/errors.hpp"
#include "slope/experiments.hpp"
#include "slope/io.hpp"
#include "slope/lambda_seq.hpp"
#include "slope/pattern.hpp"
#include "slope/recovery.hpp"
#include "slope/solver.hpp"
#include "slope/sorted_l1.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;
using namespace slope;

namespace {

enum Exit : int { kOk = 0, kNegative = 1, kInput = 2, kNumeric = 3 };

struct Common {
    double eq_tol = Tolerances{}.eq_tol;
    double rank_tol = Tolerances{}.rank_tol;
    double pattern_tol = Tolerances{}.pattern_tol;
    double membership_tol = Tolerances{}.membership_tol;

    Tolerances tol() const {
        Tolerances t{eq_tol, rank_tol, pattern_tol, membership_tol};
        t.validate();
        return t;
    }
};

void add_tolerance_flags(CLI::App* cmd, Common& c) {
    cmd->add_option("--eq-tol", c.eq_tol, "relative equality tolerance");
    cmd->add_option("--rank-tol", c.rank_tol, "SVD rank cutoff");
    cmd->add_option("--pattern-tol", c.pattern_tol, "cluster/zero detection on solver output");
    cmd->add_option("--membership-tol", c.membership_tol, "subdifferential slack");
}

std::string join_path(const std::string& dir, const std::string& name) {
    return (fs::path(dir) / name).string();
}

void ensure_dir(const std::string& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw InputError("cannot create directory " + dir);
}

Vector load_response(const std::string& path, const Matrix& X) {
    Vector Y = read_vector_csv(path);
    if (Y.size() != X.rows()) {
        throw DimensionError("Y has " + std::to_string(Y.size()) + " entries but X has " +
                             std::to_string(X.rows()) + " rows");
    }
    return Y;
}

TuningSequence lambda_for(const std::string& recipe, Eigen::Index p) {
    return LambdaRecipe::parse(recipe).make(static_cast<int>(p));
}

std::string kv(const std::string& key, double v) { return key + ": " + format_double(v); }
std::string kv(const std::string& key, bool v) { return key + ": " + (v ? "true" : "false"); }
std::string kv(const std::string& key, const std::string& v) { return key + ": " + v; }

// ---------------------------------------------------------------------------
// solve

struct SolveArgs {
    std::string X, Y, lambda = "gauss-os", out = ".";
    double alpha = 1.0;
    bool lasso = false;
    int max_iter = SolverOptions{}.max_iter;
    Common common;
};

int cmd_solve(const SolveArgs& a) {
    const Tolerances tol = a.common.tol();
    const Matrix X = read_matrix_csv(a.X);
    const Vector Y = load_response(a.Y, X);
    if (!(a.alpha > 0.0)) throw InputError("--alpha must be positive");
    const TuningSequence lambda = a.lasso ? constant_lambda(static_cast<int>(X.cols()), 1.0)
                                          : lambda_for(a.lambda, X.cols());
    SolverOptions opts;
    opts.tol = tol;
    opts.max_iter = a.max_iter;
    const SlopeFitter fitter(X, Y, lambda, opts);
    const SolverResult res = fitter.fit_nothrow(a.alpha);
    const SlopePattern M = patt_with_tol(res.beta_hat, tol.pattern_tol);

    ensure_dir(a.out);
    RunManifest man;
    man.command = std::string("solve") + (a.lasso ? " --lasso" : "");
    man.tol = tol;
    man.outputs = {join_path(a.out, "beta_hat.csv"), join_path(a.out, "pattern.csv"), join_path(a.out, "kkt.txt")};
    man.extra = {kv("X", a.X), kv("Y", a.Y), kv("lambda", a.lasso ? std::string("const:1") : a.lambda),
                 kv("alpha", a.alpha)};
    write_vector_csv(man.outputs[0], res.beta_hat, &man);
    write_text(man.outputs[1], M.to_string() + "\n", &man);
    std::ostringstream kkt;
    kkt << kv("converged", res.converged) << '\n'
        << "iterations: " << res.iterations << '\n'
        << kv("kkt_residual", res.kkt_residual) << '\n'
        << kv("kkt_threshold", fitter.kkt_threshold()) << '\n'
        << kv("objective", res.objective) << '\n'
        << kv("pattern", M.to_string()) << '\n';
    write_text(man.outputs[2], kkt.str(), &man);
    std::cout << kkt.str();
    if (!res.converged) {
        std::cerr << "slope solve: solver did not reach the KKT tolerance\n";
        return kNumeric;
    }
    return kOk;
}

// ---------------------------------------------------------------------------
// check

struct CheckArgs {
    std::string X, Y, beta, pattern, lambda = "gauss-os", out;
    double alpha = 1.0;
    Common common;
};

int cmd_check(const CheckArgs& a) {
    const Tolerances tol = a.common.tol();
    const Matrix X = read_matrix_csv(a.X);
    const Vector Y = load_response(a.Y, X);
    if (!(a.alpha > 0.0)) throw InputError("--alpha must be positive");
    if (a.beta.empty() == a.pattern.empty()) throw InputError("give exactly one of --beta and --pattern");
    SlopePattern M = a.pattern.empty() ? patt(read_vector_csv(a.beta)) : SlopePattern::parse(a.pattern);
    if (static_cast<Eigen::Index>(M.size()) != X.cols()) throw DimensionError("pattern length differs from p");
    const TuningSequence lambda = lambda_for(a.lambda, X.cols());

    std::string header = "recovered";
    std::string row;
    bool recovered = false;
    if (M.is_zero()) {
        recovered = zero_pattern_recovered(X, Y, lambda, a.alpha, tol);
        header = "pattern,recovered,dual_value";
        row = "\"" + M.to_string() + "\"," + (recovered ? "1" : "0") + "," +
              format_double(dual_sorted_l1_norm(X.transpose() * Y, lambda.scaled(a.alpha)));
    } else {
        const RecoveryCertificate cert = check_recovery(X, Y, M, lambda, a.alpha, tol);
        recovered = cert.recovered;
        header = RecoveryCertificate::csv_header();
        row = cert.csv_row();
    }
    RunManifest man;
    man.command = "check";
    man.tol = tol;
    man.extra = {kv("X", a.X), kv("Y", a.Y), kv("lambda", a.lambda), kv("alpha", a.alpha)};
    if (!a.out.empty()) {
        man.outputs = {a.out};
        write_text(a.out, header + "\n" + row + "\n", &man);
    }
    std::cout << header << '\n' << row << '\n';
    return recovered ? kOk : kNegative;
}

// ---------------------------------------------------------------------------
// diagnose

struct DiagnoseArgs {
    std::string X, pattern, lambda = "gauss-os", out;
    Common common;
};

int cmd_diagnose(const DiagnoseArgs& a) {
    const Tolerances tol = a.common.tol();
    const Matrix X = read_matrix_csv(a.X);
    const SlopePattern M = SlopePattern::parse(a.pattern);
    if (static_cast<Eigen::Index>(M.size()) != X.cols()) throw DimensionError("pattern length differs from p");
    const TuningSequence lambda = lambda_for(a.lambda, X.cols());
    const IrrepresentabilityResult ir = irrepresentability(X, M, lambda, tol);
    const bool open = open_irrepresentability(X, M, lambda, tol);
    const PiBarGeometry geo = geometric_pi_bar(X, M, lambda, tol);

    std::ostringstream rep;
    rep << kv("pattern", M.to_string()) << '\n'
        << kv("dual_value", ir.dual_value) << '\n'
        << kv("lambda_in_colspace", ir.col_ok) << '\n'
        << "tight_count: " << ir.tight_count << '\n'
        << kv("irrepresentability", ir.holds) << '\n'
        << kv("open_irrepresentability", open) << '\n'
        << kv("pi_bar_in_affine", geo.in_affine) << '\n'
        << kv("pi_bar_in_colspace", geo.in_colspace) << '\n'
        << kv("pi_bar_in_subdifferential", geo.in_subdifferential) << '\n'
        << "pi_bar:";
    for (Eigen::Index i = 0; i < geo.pi_bar.size(); ++i) rep << (i ? "," : " ") << format_double(geo.pi_bar(i));
    rep << '\n';
    if (!a.out.empty()) {
        RunManifest man;
        man.command = "diagnose";
        man.tol = tol;
        man.outputs = {a.out};
        man.extra = {kv("X", a.X), kv("lambda", a.lambda)};
        write_text(a.out, rep.str(), &man);
    }
    std::cout << rep.str();
    return ir.holds ? kOk : kNegative;
}

// ---------------------------------------------------------------------------
// path

struct PathArgs {
    std::string X, Y, lambda = "gauss-os", grid, out, breakpoints;
    bool log_spacing = false;
    double alpha_tol = 1e-4;
    Common common;
};

std::vector<double> parse_grid(const std::string& text, bool log_spacing) {
    std::vector<std::string> parts;
    std::stringstream ss(text);
    for (std::string tok; std::getline(ss, tok, ':');) parts.push_back(tok);
    if (parts.size() != 3) throw InputError("--alpha-grid expects lo:hi:n");
    double lo = 0.0, hi = 0.0;
    int n = 0;
    try {
        lo = std::stod(parts[0]);
        hi = std::stod(parts[1]);
        n = std::stoi(parts[2]);
    } catch (const std::exception&) {
        throw InputError("--alpha-grid: bad number in '" + text + "'");
    }
    if (!(lo > 0.0) || !(hi > lo) || n < 2) throw InputError("--alpha-grid needs 0 < lo < hi and n >= 2");
    return log_spacing ? log_grid(lo, hi, n) : linear_grid(lo, hi, n);
}

int cmd_path(const PathArgs& a) {
    const Tolerances tol = a.common.tol();
    const Matrix X = read_matrix_csv(a.X);
    const Vector Y = load_response(a.Y, X);
    const TuningSequence lambda = lambda_for(a.lambda, X.cols());
    const std::vector<double> grid = parse_grid(a.grid, a.log_spacing);
    SolverOptions opts;
    opts.tol = tol;
    const std::vector<PathPoint> path = solution_path(X, Y, lambda, grid, opts);

    std::ostringstream csv;
    csv << "alpha,pattern,objective,kkt_residual,converged\n";
    bool all_converged = true;
    for (const PathPoint& pt : path) {
        all_converged = all_converged && pt.result.converged;
        csv << format_double(pt.alpha) << ",\"" << pt.pattern.to_string() << "\","
            << format_double(pt.result.objective) << ',' << format_double(pt.result.kkt_residual) << ','
            << (pt.result.converged ? 1 : 0) << '\n';
    }
    RunManifest man;
    man.command = "path";
    man.tol = tol;
    man.extra = {kv("X", a.X), kv("Y", a.Y), kv("lambda", a.lambda), kv("alpha_grid", a.grid)};
    if (!a.out.empty()) man.outputs.push_back(a.out);
    if (!a.breakpoints.empty()) man.outputs.push_back(a.breakpoints);
    if (!a.out.empty()) write_text(a.out, csv.str(), &man);
    else std::cout << csv.str();

    if (!a.breakpoints.empty()) {
        std::ostringstream bp;
        bp << "alpha_lo,alpha_hi,before,after\n";
        for (const Breakpoint& b : locate_breakpoints(X, Y, lambda, grid, a.alpha_tol, opts)) {
            bp << format_double(b.alpha_lo) << ',' << format_double(b.alpha_hi) << ",\"" << b.before.to_string()
               << "\",\"" << b.after.to_string() << "\"\n";
        }
        write_text(a.breakpoints, bp.str(), &man);
    }
    return all_converged ? kOk : kNumeric;
}

// ---------------------------------------------------------------------------
// experiment

template <class T>
T get_or(const json& j, const char* key, T fallback) {
    return j.contains(key) ? j.at(key).get<T>() : fallback;
}

Tolerances tolerances_from(const json& cfg) {
    Tolerances t;
    if (cfg.contains("tolerances")) {
        const json& j = cfg.at("tolerances");
        t.eq_tol = get_or(j, "eq_tol", t.eq_tol);
        t.rank_tol = get_or(j, "rank_tol", t.rank_tol);
        t.pattern_tol = get_or(j, "pattern_tol", t.pattern_tol);
        t.membership_tol = get_or(j, "membership_tol", t.membership_tol);
    }
    t.validate();
    return t;
}

DesignSpec design_from(const json& j, const std::string& base_dir) {
    DesignSpec d;
    d.kind = parse_design_kind(j.at("kind").get<std::string>());
    if (d.kind == DesignSpec::Kind::fixed) {
        fs::path file = j.at("file").get<std::string>();
        if (file.is_relative()) file = fs::path(base_dir) / file;
        d.fixed = read_matrix_csv(file.string());
        d.n = static_cast<int>(d.fixed.rows());
        d.p = static_cast<int>(d.fixed.cols());
    } else {
        d.n = j.at("n").get<int>();
        d.p = j.at("p").get<int>();
        if (d.n < 1 || d.p < 1) throw InputError("design: n and p must be positive");
    }
    d.flip_prob = get_or(j, "flip_prob", d.flip_prob);
    d.standardize = get_or(j, "standardize", d.standardize);
    return d;
}

// "beta": [..] | {"constant": c} | {"pattern": "2,1,0", "cluster_values": [..]}
void beta_from(const json& j, int p, ExperimentConfig& cfg) {
    if (j.is_array()) {
        const auto v = j.get<std::vector<double>>();
        cfg.beta = Eigen::Map<const Vector>(v.data(), static_cast<Eigen::Index>(v.size()));
    } else if (j.contains("constant")) {
        cfg.beta = Vector::Constant(p, j.at("constant").get<double>());
    } else {
        cfg.pattern = SlopePattern::parse(j.at("pattern").get<std::string>());
        const auto s = get_or(j, "cluster_values", std::vector<double>{});
        cfg.cluster_values = Eigen::Map<const Vector>(s.data(), static_cast<Eigen::Index>(s.size()));
    }
}

ExperimentConfig experiment_from(const json& j, const std::string& base_dir) {
    ExperimentConfig cfg;
    cfg.design = design_from(j.at("design"), base_dir);
    cfg.redraw_design = get_or(j, "redraw_design", cfg.redraw_design);
    beta_from(j.at("beta"), cfg.design.p, cfg);
    cfg.sigma = get_or(j, "sigma", cfg.sigma);
    cfg.lambda = LambdaRecipe::parse(get_or<std::string>(j, "lambda", "gauss-os"));
    if (j.contains("alpha")) cfg.alpha = j.at("alpha").get<double>();
    if (j.contains("target_eta")) cfg.target_eta = j.at("target_eta").get<double>();
    cfg.calibration_reps = get_or(j, "calibration_reps", cfg.calibration_reps);
    cfg.reps = get_or(j, "reps", cfg.reps);
    cfg.master_seed = get_or<std::uint64_t>(j, "seed", cfg.master_seed);
    cfg.scale_penalty_by_sqrt_n = get_or(j, "scale_penalty_by_sqrt_n", cfg.scale_penalty_by_sqrt_n);
    cfg.solver_checks = get_or(j, "solver_checks", cfg.solver_checks);
    cfg.tol = tolerances_from(j);
    return cfg;
}

struct ExperimentArgs {
    std::string config, out = ".";
    unsigned threads = 0;
};

RunManifest experiment_manifest(const ExperimentArgs& a, const std::string& task, std::uint64_t seed,
                                const Tolerances& tol) {
    RunManifest man;
    man.command = "experiment " + task;
    man.config_path = a.config;
    man.seed = seed;
    man.tol = tol;
    return man;
}

std::string summary_header() {
    return "sweep,value,alpha,reps,recovery_freq,se,positivity_freq,subdiff_freq,both_freq,upper_event_freq,"
           "solver_checked,solver_agree,solver_disagree_near_boundary\n";
}

std::string summary_row(const std::string& sweep, double value, const ExperimentResult& r) {
    std::ostringstream os;
    os << sweep << ',' << format_double(value) << ',' << format_double(r.alpha) << ',' << r.reps << ','
       << format_double(r.recovery_freq) << ',' << format_double(r.se) << ',' << format_double(r.positivity_freq)
       << ',' << format_double(r.subdiff_freq) << ',' << format_double(r.both_freq) << ','
       << format_double(r.upper_event_freq) << ',' << r.solver_checked << ',' << r.solver_agree << ','
       << r.solver_disagree_near_boundary << '\n';
    return os.str();
}

void append_records(std::ostringstream& os, double value, const ExperimentResult& r) {
    for (const RepRecord& rec : r.records) {
        os << format_double(value) << ',' << rec.rep << ',' << format_double(rec.alpha) << ',' << rec.positivity
           << ',' << rec.subdiff << ',' << rec.recovered << ',' << format_double(rec.dual_value) << ',' << rec.seed
           << '\n';
    }
}

// Optional sweeps: "signal_scales" multiplies beta, "n_values" replaces design.n.
int task_mc_recovery(const json& j, const ExperimentArgs& a, const std::string& base_dir) {
    ExperimentConfig base = experiment_from(j, base_dir);
    base.threads = a.threads;
    std::string sweep = "none";
    std::vector<double> values{1.0};
    if (j.contains("signal_scales")) {
        sweep = "signal_scale";
        values = j.at("signal_scales").get<std::vector<double>>();
    } else if (j.contains("n_values")) {
        sweep = "n";
        values = j.at("n_values").get<std::vector<double>>();
    }
    const Vector beta0 = base.resolve_beta();
    std::ostringstream summary, records;
    summary << summary_header();
    records << "value,rep,alpha,positivity,subdiff,recovered,dual_value,seed\n";
    for (double v : values) {
        ExperimentConfig cfg = base;
        if (sweep == "signal_scale") {
            cfg.beta = v * beta0;
        } else if (sweep == "n") {
            cfg.design.n = static_cast<int>(v);
        }
        const ExperimentResult r = mc_recovery(cfg);
        summary << summary_row(sweep, v, r);
        append_records(records, v, r);
        std::cout << sweep << "=" << format_double(v) << " recovery_freq=" << format_double(r.recovery_freq)
                  << " se=" << format_double(r.se) << " upper=" << format_double(r.upper_event_freq) << '\n';
    }
    ensure_dir(a.out);
    RunManifest man = experiment_manifest(a, "mc_recovery", base.master_seed, base.tol);
    man.outputs = {join_path(a.out, "summary.csv"), join_path(a.out, "records.csv")};
    man.extra = {kv("lambda", base.lambda.to_string()), kv("design", design_kind_name(base.design.kind)),
                 "standardization: population"};
    write_text(man.outputs[0], summary.str(), &man);
    write_text(man.outputs[1], records.str(), &man);
    return kOk;
}

int task_calibrate(const json& j, const ExperimentArgs& a, const std::string& base_dir) {
    const ExperimentConfig cfg = experiment_from(j, base_dir);
    const double eta = j.at("target_eta").get<double>();
    if (!(eta > 0.0 && eta < 1.0)) throw InputError("target_eta must lie in (0, 1)");
    const Vector beta = cfg.resolve_beta();
    const SlopePattern M = patt(beta);
    const TuningSequence lambda = cfg.lambda.make(static_cast<int>(beta.size()));
    PiLaw law;
    std::string mode = get_or<std::string>(j, "mode", "design");
    if (mode == "asymptotic") {
        // n^{-1} X'X -> identity unless a limit matrix file is given.
        Matrix C = Matrix::Identity(beta.size(), beta.size());
        if (j.contains("limit_file")) {
            fs::path file = j.at("limit_file").get<std::string>();
            if (file.is_relative()) file = fs::path(base_dir) / file;
            C = read_matrix_csv(file.string());
        }
        law = pi_law(make_asymptotic_spec(C, M, lambda, cfg.sigma, cfg.tol));
    } else if (mode == "design") {
        SeededRng rng(cfg.master_seed, ~std::uint64_t{0});
        const Matrix X = gen_design(cfg.design, rng);
        law = pi_law(RecoveryContext(X, M, lambda, cfg.tol), cfg.sigma);
    } else {
        throw InputError("calibrate: mode must be 'design' or 'asymptotic'");
    }
    ensure_dir(a.out);
    RunManifest man = experiment_manifest(a, "calibrate", cfg.master_seed, cfg.tol);
    man.outputs = {join_path(a.out, "calibration.csv")};
    man.extra = {kv("lambda", cfg.lambda.to_string()), kv("mode", mode)};
    try {
        const Calibration cal = calibrate_alpha(law, eta, cfg.calibration_reps, cfg.master_seed, cfg.tol);
        std::ostringstream csv;
        csv << "eta,alpha,achieved,se,ceiling,mc_reps\n"
            << format_double(eta) << ',' << format_double(cal.alpha) << ',' << format_double(cal.achieved.prob)
            << ',' << format_double(cal.achieved.se) << ',' << format_double(cal.ceiling) << ','
            << cal.achieved.reps << '\n';
        write_text(man.outputs[0], csv.str(), &man);
        std::cout << "alpha=" << format_double(cal.alpha) << " achieved=" << format_double(cal.achieved.prob)
                  << " ceiling=" << format_double(cal.ceiling) << '\n';
        return kOk;
    } catch (const CalibrationFailed& e) {
        std::ostringstream csv;
        csv << "eta,alpha,achieved,se,ceiling,mc_reps\n"
            << format_double(eta) << ",,,," << format_double(e.ceiling()) << ',' << cfg.calibration_reps << '\n';
        write_text(man.outputs[0], csv.str(), &man);
        std::cerr << "slope experiment: " << e.what() << " (ceiling " << format_double(e.ceiling()) << ")\n";
        return kNegative;
    }
}

int task_compare(const json& j, const ExperimentArgs& a) {
    CompareConfig base;
    base.n = get_or(j, "n", base.n);
    base.p = get_or(j, "p", base.p);
    base.k = get_or(j, "k", base.k);
    base.signal = get_or(j, "signal", base.signal);
    base.sigma = get_or(j, "sigma", base.sigma);
    base.flip_prob = get_or(j, "flip_prob", base.flip_prob);
    base.slope_lambda = get_or(j, "slope_lambda", base.slope_lambda);
    base.fallback_lambda = get_or(j, "fallback_lambda", base.fallback_lambda);
    base.tol = tolerances_from(j);
    const auto first = get_or<std::uint64_t>(j, "seed", 1);
    const int count = get_or(j, "seeds", 1);
    if (count < 1) throw InputError("compare: seeds must be at least 1");

    std::vector<CompareResult> results(static_cast<std::size_t>(count));
    parallel_for(results.size(), [&](std::size_t i) {
        CompareConfig cfg = base;
        cfg.seed = first + i;
        results[i] = compare_lasso_slope(cfg);
    }, a.threads);

    std::ostringstream csv, coef;
    csv << "seed,slope_ir,lasso_ir,adaptive_lambda,lasso_min_alpha,lasso_alpha,lasso_fallback,lasso_recovered,"
           "lasso_false_positives,lasso_se,slope_min_alpha,slope_alpha,slope_fallback,slope_recovered,"
           "slope_false_positives,slope_se,slope_wins\n";
    int wins = 0;
    auto opt = [](const std::optional<double>& v) { return v ? format_double(*v) : std::string(); };
    for (const CompareResult& r : results) {
        const bool win = r.slope.squared_error < r.lasso.squared_error;
        wins += win;
        csv << r.seed << ',' << r.slope_ir << ',' << r.lasso_ir << ',' << r.adaptive_lambda_used << ','
            << opt(r.lasso.min_alpha) << ',' << format_double(r.lasso.alpha_used) << ',' << r.lasso.fallback << ','
            << r.lasso.pattern_recovered << ',' << r.lasso.false_positives << ','
            << format_double(r.lasso.squared_error) << ',' << opt(r.slope.min_alpha) << ','
            << format_double(r.slope.alpha_used) << ',' << r.slope.fallback << ',' << r.slope.pattern_recovered
            << ',' << r.slope.false_positives << ',' << format_double(r.slope.squared_error) << ',' << win << '\n';
    }
    coef << "index,beta,lasso,slope\n";
    const CompareResult& r0 = results.front();
    for (Eigen::Index i = 0; i < r0.beta.size(); ++i) {
        coef << i + 1 << ',' << format_double(r0.beta(i)) << ',' << format_double(r0.lasso.beta_hat(i)) << ','
             << format_double(r0.slope.beta_hat(i)) << '\n';
    }
    ensure_dir(a.out);
    RunManifest man = experiment_manifest(a, "compare", first, base.tol);
    man.outputs = {join_path(a.out, "compare.csv"), join_path(a.out, "coefficients.csv")};
    man.extra = {kv("slope_lambda", base.slope_lambda), kv("fallback_lambda", base.fallback_lambda),
                 "seeds: " + std::to_string(count), "coefficients_seed: " + std::to_string(first)};
    write_text(man.outputs[0], csv.str(), &man);
    write_text(man.outputs[1], coef.str(), &man);
    std::cout << "slope_wins=" << wins << "/" << count << '\n';
    return kOk;
}

// Type-I error (or power) of the equal-magnitude test across signal levels.
// alpha_eta is calibrated so that the single-cluster event has probability 1 - level.
int task_constant_magnitude(const json& j, const ExperimentArgs& a) {
    const int p = j.at("p").get<int>();
    const int n = get_or(j, "n", p);
    const double level = get_or(j, "level", 0.05);
    if (!(level > 0.0 && level < 1.0)) throw InputError("constant_magnitude: level must lie in (0, 1)");
    const auto seed = get_or<std::uint64_t>(j, "seed", 1);
    const int reps = get_or(j, "reps", 10000);
    const int cal_reps = get_or(j, "calibration_reps", 100000);
    const Tolerances tol = tolerances_from(j);
    const TuningSequence lambda = LambdaRecipe::parse(get_or<std::string>(j, "lambda", "gauss-os")).make(p);
    const auto magnitudes = get_or(j, "magnitudes", std::vector<double>{0, 1, 3, 5, 7});
    // "alternative": beta = m * (1 + bump e_1); bump 0 is the null.
    const double bump = get_or(j, "bump", 0.0);

    DesignSpec spec;
    spec.kind = DesignSpec::Kind::orthogonal;
    spec.n = n;
    spec.p = p;
    SeededRng design_rng(seed, ~std::uint64_t{0});
    const Matrix X = gen_design(spec, design_rng);
    const SlopePattern ones(std::vector<int>(static_cast<std::size_t>(p), 1));
    const RecoveryContext ctx(X, ones, lambda, tol);
    double alpha_eta = 0.0;
    if (j.contains("alpha")) {
        alpha_eta = j.at("alpha").get<double>();
    } else {
        alpha_eta = calibrate_alpha(pi_law(ctx, 1.0), 1.0 - level, cal_reps, seed, tol).alpha;
    }

    std::ostringstream csv;
    csv << "magnitude,bump,alpha_eta,rejection_rate,se,reps\n";
    for (std::size_t m = 0; m < magnitudes.size(); ++m) {
        Vector beta = Vector::Constant(p, magnitudes[m]);
        beta(0) *= 1.0 + bump;
        const ProbEstimate est =
            constant_magnitude_rejection_rate(X, beta, lambda, alpha_eta, reps, seed + 1 + m, tol, a.threads);
        csv << format_double(magnitudes[m]) << ',' << format_double(bump) << ',' << format_double(alpha_eta) << ','
            << format_double(est.prob) << ',' << format_double(est.se) << ',' << est.reps << '\n';
        std::cout << "magnitude=" << format_double(magnitudes[m]) << " rejection=" << format_double(est.prob)
                  << " se=" << format_double(est.se) << '\n';
    }
    ensure_dir(a.out);
    RunManifest man = experiment_manifest(a, "constant_magnitude", seed, tol);
    man.outputs = {join_path(a.out, "constant_magnitude.csv")};
    man.extra = {kv("level", level), kv("alpha_eta", alpha_eta)};
    write_text(man.outputs[0], csv.str(), &man);
    return kOk;
}

// Upper-bound probability and the Monte-Carlo recovery frequency on an alpha grid.
int task_upper_bound(const json& j, const ExperimentArgs& a, const std::string& base_dir) {
    ExperimentConfig cfg = experiment_from(j, base_dir);
    cfg.threads = a.threads;
    cfg.redraw_design = false;
    const auto alphas = j.at("alphas").get<std::vector<double>>();
    const int mc_reps = get_or(j, "mc_reps", cfg.reps);
    const Vector beta = cfg.resolve_beta();
    const SlopePattern M = patt(beta);
    const TuningSequence lambda = cfg.lambda.make(static_cast<int>(beta.size()));
    SeededRng rng(cfg.master_seed, ~std::uint64_t{0});
    const Matrix X = gen_design(cfg.design, rng);
    const PiLaw law = pi_law(RecoveryContext(X, M, lambda, cfg.tol), cfg.sigma);

    std::ostringstream csv;
    csv << "alpha,upper_bound,upper_se,recovery_freq,recovery_se,dominated\n";
    bool all_dominated = true;
    for (double alpha : alphas) {
        cfg.alpha = alpha;
        const ExperimentResult r = mc_recovery(cfg);
        const ProbEstimate ub = upper_bound_probability(law, alpha, mc_reps, cfg.master_seed, cfg.tol);
        const bool dominated = r.both_freq <= ub.prob + 3.0 * std::hypot(ub.se, r.se);
        all_dominated = all_dominated && dominated;
        csv << format_double(alpha) << ',' << format_double(ub.prob) << ',' << format_double(ub.se) << ','
            << format_double(r.recovery_freq) << ',' << format_double(r.se) << ',' << dominated << '\n';
    }
    ensure_dir(a.out);
    RunManifest man = experiment_manifest(a, "upper_bound", cfg.master_seed, cfg.tol);
    man.outputs = {join_path(a.out, "upper_bound.csv")};
    man.extra = {kv("lambda", cfg.lambda.to_string())};
    write_text(man.outputs[0], csv.str(), &man);
    std::cout << csv.str();
    return all_dominated ? kOk : kNegative;
}

int cmd_experiment(const ExperimentArgs& a) {
    std::ifstream in(a.config);
    if (!in) throw InputError("cannot read " + a.config);
    json j;
    try {
        j = json::parse(in);
    } catch (const json::exception& e) {
        throw InputError(a.config + ": " + e.what());
    }
    const std::string base_dir = fs::path(a.config).parent_path().string();
    try {
        const std::string task = j.at("task").get<std::string>();
        if (task == "mc_recovery") return task_mc_recovery(j, a, base_dir);
        if (task == "calibrate") return task_calibrate(j, a, base_dir);
        if (task == "compare") return task_compare(j, a);
        if (task == "constant_magnitude") return task_constant_magnitude(j, a);
        if (task == "upper_bound") return task_upper_bound(j, a, base_dir);
        throw InputError("unknown task '" + task + "'");
    } catch (const json::exception& e) {
        throw InputError(a.config + ": " + e.what());
    }
}

int exit_code_for(const Error& e) {
    if (dynamic_cast<const NotConverged*>(&e)) return kNumeric;
    if (dynamic_cast<const CalibrationFailed*>(&e)) return kNegative;
    if (dynamic_cast<const InputError*>(&e) || dynamic_cast<const DimensionError*>(&e) ||
        dynamic_cast<const InvalidMatrix*>(&e) || dynamic_cast<const InvalidVector*>(&e) ||
        dynamic_cast<const InvalidPattern*>(&e) || dynamic_cast<const EmptyPattern*>(&e) ||
        dynamic_cast<const InvalidTuning*>(&e) || dynamic_cast<const InvalidDesign*>(&e) ||
        dynamic_cast<const InvalidClusterValues*>(&e) || dynamic_cast<const DomainError*>(&e)) {
        return kInput;
    }
    return kNumeric;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"SLOPE pattern recovery: solver, certificates and experiments"};
    app.set_version_flag("--version", std::string(kToolVersion));
    app.require_subcommand(1);

    SolveArgs solve_a;
    auto* solve = app.add_subcommand("solve", "fit SLOPE (or LASSO) and write beta_hat, pattern and KKT report");
    solve->add_option("--X", solve_a.X, "design matrix CSV")->required();
    solve->add_option("--Y", solve_a.Y, "response CSV")->required();
    solve->add_option("--lambda", solve_a.lambda, "gauss-os | oscar:a,b | const:l");
    solve->add_option("--alpha", solve_a.alpha, "penalty scale")->required();
    solve->add_flag("--lasso", solve_a.lasso, "LASSO with penalty alpha * ||b||_1");
    solve->add_option("--out", solve_a.out, "output directory");
    solve->add_option("--max-iter", solve_a.max_iter, "iteration cap");
    add_tolerance_flags(solve, solve_a.common);

    CheckArgs check_a;
    auto* check = app.add_subcommand("check", "recovery certificate for a target pattern");
    check->add_option("--X", check_a.X)->required();
    check->add_option("--Y", check_a.Y)->required();
    check->add_option("--beta", check_a.beta, "coefficient CSV whose pattern is the target");
    check->add_option("--pattern", check_a.pattern, "target pattern, e.g. 2,1");
    check->add_option("--lambda", check_a.lambda);
    check->add_option("--alpha", check_a.alpha)->required();
    check->add_option("--out", check_a.out, "certificate CSV path");
    add_tolerance_flags(check, check_a.common);

    DiagnoseArgs diag_a;
    auto* diag = app.add_subcommand("diagnose", "irrepresentability and pi_bar geometry for a pattern");
    diag->add_option("--X", diag_a.X)->required();
    diag->add_option("--pattern", diag_a.pattern)->required();
    diag->add_option("--lambda", diag_a.lambda);
    diag->add_option("--out", diag_a.out, "report path");
    add_tolerance_flags(diag, diag_a.common);

    PathArgs path_a;
    auto* path = app.add_subcommand("path", "solution path over a grid of penalty scales");
    path->add_option("--X", path_a.X)->required();
    path->add_option("--Y", path_a.Y)->required();
    path->add_option("--lambda", path_a.lambda);
    path->add_option("--alpha-grid", path_a.grid, "lo:hi:n")->required();
    path->add_flag("--log", path_a.log_spacing, "log-spaced grid");
    path->add_option("--out", path_a.out, "path CSV (stdout if absent)");
    path->add_option("--breakpoints", path_a.breakpoints, "breakpoint CSV");
    path->add_option("--alpha-tol", path_a.alpha_tol, "breakpoint bisection width");
    add_tolerance_flags(path, path_a.common);

    ExperimentArgs exp_a;
    auto* exp = app.add_subcommand("experiment", "run a configured experiment");
    exp->add_option("--config", exp_a.config, "JSON config")->required();
    exp->add_option("--out", exp_a.out, "output directory");
    exp->add_option("--threads", exp_a.threads, "worker threads (0 = all cores)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kOk : kInput;
    }

    try {
        if (*solve) return cmd_solve(solve_a);
        if (*check) return cmd_check(check_a);
        if (*diag) return cmd_diagnose(diag_a);
        if (*path) return cmd_path(path_a);
        if (*exp) return cmd_experiment(exp_a);
    } catch (const Error& e) {
        std::cerr << "slope: " << e.what() << '\n';
        return exit_code_for(e);
    } catch (const std::exception& e) {
        std::cerr << "slope: " << e.what() << '\n';
        return kNumeric;
    }
    return kOk;
}
