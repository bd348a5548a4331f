// martpost: posterior sampling by predictive resampling for parametric
// models, plus the companion diagnostics, coverage experiments, and
// posterior summaries.
//
// Subcommands:
//   sample       draw posterior samples for a model fitted to a CSV dataset
//   coverage     frequentist coverage experiment from a scenario file
//   check        martingale / fourth-moment diagnostics on a parameter grid
//   prequential  one-step-ahead log-score selection of degrees of freedom
//   kde          kernel density estimate of a column of posterior draws
//
// Exit codes: 0 success, 2 usage/config, 3 data, 4 model, 5 numerical.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "martpost/martpost.hpp"

namespace mp = martpost;
using nlohmann::json;

namespace {

struct FamilyFlags {
    double sigma2 = 1.0;
    double nu = 5.0;
    double kappa = 0.001;
};

constexpr const char* kIidFamilies =
    "exponential|normal_mean|normal_var|student_t|normal_meanvar|mvnormal";
constexpr const char* kRegFamilies = "normal_linear|robust_t|logistic";

std::vector<double> parse_number_list(const std::string& text, const char* what) {
    std::vector<double> out;
    std::string cur;
    auto flush = [&] {
        if (cur.empty()) return;
        char* end = nullptr;
        const double v = std::strtod(cur.c_str(), &end);
        if (end != cur.c_str() + cur.size())
            throw mp::ConfigError(std::string(what) + ": bad number '" + cur + "'");
        out.push_back(v);
        cur.clear();
    };
    for (const char c : text) {
        if (c == ',' || c == ' ')
            flush();
        else
            cur += c;
    }
    flush();
    if (out.empty()) throw mp::ConfigError(std::string(what) + ": empty list");
    return out;
}

json meta_common(const mp::PosteriorDraws& d) {
    json j;
    j["mode"] = mp::to_string(d.mode);
    j["n"] = d.n;
    j["end_N"] = d.end_N;
    j["draws_requested"] = d.requested_B;
    j["draws_returned"] = d.draws.rows();
    j["seed"] = d.master_seed;
    j["threads"] = d.threads;
    j["temper"] = d.temper_is_matrix ? json("matrix") : json(d.temper_a);
    j["aborted_chains"] = d.aborted;
    j["retried_chains"] = d.retried;
    j["out_of_domain_draws"] = d.out_of_domain;
    j["wall_seconds"] = d.wall_seconds;
    j["param_names"] = d.names;
    j["theta_start"] = std::vector<double>(d.theta_start.begin(), d.theta_start.end());
    return j;
}

void write_meta(const std::string& out_csv, const json& j) {
    std::ofstream f(out_csv + ".meta.json", std::ios::binary);
    if (!f) throw mp::DataError("cannot write " + out_csv + ".meta.json");
    f << j.dump(2) << '\n';
}

mp::Temper load_temper(double a, const std::string& matrix_csv) {
    mp::Temper t;
    t.a = a;
    if (!matrix_csv.empty()) {
        const mp::Csv csv = mp::read_csv(matrix_csv);
        t.A = csv.values;
    }
    return t;
}

// ---------------------------------------------------------------- sample --

int run_sample(const std::string& family, const std::string& data_path,
               const std::string& out_path, std::uint64_t seed, const std::string& mode,
               int draws, std::uint64_t trunc_extra, std::uint64_t exact_extra,
               double temper_a, const std::string& temper_matrix, int threads,
               const std::string& estimator, const std::string& theta0_text,
               bool no_intercept, bool standardize_flag, bool track_variance,
               const FamilyFlags& ff) {
    mp::ResampleConfig cfg;
    cfg.mode = mp::mode_from_string(mode);
    cfg.draws_B = draws;
    cfg.master_seed = seed;
    cfg.threads = threads;
    cfg.temper = load_temper(temper_a, temper_matrix);
    cfg.track_variance = track_variance;

    const mp::Csv csv = mp::read_csv(data_path);
    json meta;
    meta["command"] = "sample";
    meta["family"] = family;
    meta["data"] = data_path;
    meta["intercept"] = !no_intercept;
    meta["standardize"] = standardize_flag;

    mp::PosteriorDraws result;
    if (mp::is_regression_family(family)) {
        mp::DesignMatrix d = mp::design_from_csv(csv);
        if (!no_intercept) d = mp::with_intercept(d);
        if (standardize_flag) {
            const mp::Standardization st = mp::standardize(d);
            meta["standardization"] = {{"x_mean", st.x_mean},
                                       {"x_sd", st.x_sd},
                                       {"y_mean", st.y_mean},
                                       {"y_sd", st.y_sd}};
        }
        mp::RegressionOptions opts;
        opts.nu = ff.nu;
        opts.kappa = ff.kappa;
        const auto fam = mp::make_regression_family(family, std::move(d), opts);
        if (family == "robust_t") meta["nu"] = ff.nu;
        if (family == "logistic") meta["kappa"] = ff.kappa;

        mp::Vec theta0;
        std::string est = estimator.empty() ? "default" : estimator;
        if (!theta0_text.empty()) {
            const auto v = parse_number_list(theta0_text, "--theta0");
            theta0 = Eigen::Map<const mp::Vec>(v.data(),
                                               static_cast<Eigen::Index>(v.size()));
            est = "fixed";
        } else {
            mp::EstimatorSpec espec;
            espec.seed = mp::derive_seed(seed, 0xE57);
            if (est == "default") {
                theta0 = mp::estimate_regression_default(*fam, espec);
            } else if (est == "moments") {
                if (family != "normal_linear")
                    throw mp::ConfigError("estimator 'moments' only fits normal_linear");
                theta0 = mp::ols_fit(fam->design());
            } else if (est == "irls_t") {
                if (family != "robust_t")
                    throw mp::ConfigError("estimator 'irls_t' only fits robust_t");
                theta0 = mp::estimate_irls_t(fam->design(), ff.nu, espec).theta;
            } else if (est == "logistic_newton") {
                if (family != "logistic")
                    throw mp::ConfigError("estimator 'logistic_newton' only fits logistic");
                theta0 = mp::estimate_logistic_newton(fam->design(), espec);
            } else {
                throw mp::ConfigError("unknown estimator '" + est + "' for " + family);
            }
        }
        meta["estimator"] = est;

        const auto n = static_cast<std::uint64_t>(fam->design().n());
        cfg.trunc_N = trunc_extra ? n + trunc_extra : 0;
        cfg.exact_N = exact_extra ? n + exact_extra : 0;
        mp::RegressionChain chain(*fam);
        result = mp::batch_sample(chain, theta0, n, cfg);
    } else {
        mp::FamilyOptions opts;
        opts.sigma2 = ff.sigma2;
        opts.nu = ff.nu;
        if (family == "mvnormal") opts.dim = static_cast<int>(csv.values.cols());
        const auto fam = mp::make_family(family, opts);
        if (family == "normal_mean") meta["sigma2"] = ff.sigma2;
        if (family == "student_t") meta["nu"] = ff.nu;
        if (family == "mvnormal") meta["dim"] = opts.dim;
        const mp::Mat data = mp::iid_data_from_csv(csv, fam->obs_dim());

        mp::Vec theta0;
        std::string est = estimator.empty() ? "moments" : estimator;
        if (!theta0_text.empty()) {
            const auto v = parse_number_list(theta0_text, "--theta0");
            theta0 = Eigen::Map<const mp::Vec>(v.data(),
                                               static_cast<Eigen::Index>(v.size()));
            if (est == "sgd_onepass")
                theta0 = mp::estimate_sgd_onepass(*fam, data, theta0);
            else
                est = "fixed";
        } else if (est == "moments" || est == "default") {
            est = "moments";
            theta0 = mp::estimate_moments(*fam, data);
        } else if (est == "sgd_onepass") {
            throw mp::ConfigError("estimator 'sgd_onepass' needs --theta0");
        } else {
            throw mp::ConfigError("unknown estimator '" + est + "' for " + family);
        }
        meta["estimator"] = est;

        const auto n = static_cast<std::uint64_t>(data.rows());
        cfg.trunc_N = trunc_extra ? n + trunc_extra : 0;
        cfg.exact_N = exact_extra ? n + exact_extra : 0;
        mp::IidChain chain(*fam);
        result = mp::batch_sample(chain, theta0, n, cfg);
    }

    mp::write_csv(out_path, result.names, result.draws);
    json m = meta_common(result);
    m.update(meta);
    write_meta(out_path, m);
    std::printf("wrote %lld draws (%s) to %s; aborted %d, retried %d, "
                "out-of-domain %d; %.2fs\n",
                static_cast<long long>(result.draws.rows()),
                mp::to_string(result.mode).c_str(), out_path.c_str(), result.aborted,
                result.retried, result.out_of_domain, result.wall_seconds);
    return 0;
}

// -------------------------------------------------------------- coverage --

int run_coverage(const std::string& scenario_path, std::uint64_t seed,
                 const std::string& out_path, int threads) {
    const mp::ConfigMap cfg = mp::ConfigMap::parse_file(scenario_path);
    cfg.restrict_to({"family", "theta_star", "n", "repeats", "draws", "mode",
                     "trunc_extra", "exact_extra", "level", "temper", "estimator",
                     "sigma2", "nu", "dim"});
    cfg.require({"family", "theta_star", "n", "repeats"});

    mp::CoverageScenario sc;
    sc.family = cfg.text("family");
    const auto tstar = cfg.array("theta_star");
    sc.theta_star = Eigen::Map<const mp::Vec>(tstar.data(),
                                              static_cast<Eigen::Index>(tstar.size()));
    sc.n = static_cast<std::uint64_t>(cfg.number("n"));
    sc.repeats = static_cast<int>(cfg.number("repeats"));
    sc.level = cfg.number_or("level", 0.95);
    sc.estimator = cfg.text_or("estimator", "moments");
    sc.options.sigma2 = cfg.number_or("sigma2", 1.0);
    sc.options.nu = cfg.number_or("nu", 5.0);
    sc.options.dim = static_cast<int>(cfg.number_or("dim", 0));
    if (sc.family == "mvnormal" && sc.options.dim == 0) {
        // infer d from the packed parameter length d + d(d+1)/2
        int d = 1;
        while (d + d * (d + 1) / 2 < static_cast<int>(tstar.size())) ++d;
        sc.options.dim = d;
    }
    sc.resample.mode = mp::mode_from_string(cfg.text_or("mode", "hybrid"));
    sc.resample.draws_B = static_cast<int>(cfg.number_or("draws", 1000));
    const auto trunc_extra = static_cast<std::uint64_t>(cfg.number_or("trunc_extra", 0));
    const auto exact_extra = static_cast<std::uint64_t>(cfg.number_or("exact_extra", 0));
    sc.resample.trunc_N = trunc_extra ? sc.n + trunc_extra : 0;
    sc.resample.exact_N = exact_extra ? sc.n + exact_extra : 0;
    sc.resample.temper.a = cfg.number_or("temper", 1.0);
    sc.resample.master_seed = seed;
    sc.threads = threads;

    const mp::CoverageResult res = mp::coverage_experiment(sc);

    mp::Mat table(static_cast<Eigen::Index>(res.rows.size()), 4);
    std::vector<std::string> names;
    for (std::size_t i = 0; i < res.rows.size(); ++i) {
        const auto& r = res.rows[i];
        table(static_cast<Eigen::Index>(i), 0) = r.coverage;
        table(static_cast<Eigen::Index>(i), 1) = r.coverage_se;
        table(static_cast<Eigen::Index>(i), 2) = r.mean_length;
        table(static_cast<Eigen::Index>(i), 3) = r.length_se;
        names.push_back(r.param);
    }
    // parameter names form the first column; write manually
    {
        std::ofstream f(out_path, std::ios::binary);
        if (!f) throw mp::DataError("cannot write " + out_path);
        f << "parameter,coverage,coverage_se,mean_length,length_se\n";
        for (std::size_t i = 0; i < res.rows.size(); ++i) {
            const auto& r = res.rows[i];
            f << r.param << ',' << mp::format_double(r.coverage) << ','
              << mp::format_double(r.coverage_se) << ','
              << mp::format_double(r.mean_length) << ','
              << mp::format_double(r.length_se) << '\n';
        }
    }
    json meta;
    meta["command"] = "coverage";
    meta["scenario"] = scenario_path;
    meta["seed"] = seed;
    meta["threads"] = threads;
    meta["repeats_total"] = res.repeats_total;
    meta["repeats_failed"] = res.repeats_failed;
    meta["level"] = sc.level;
    meta["wall_seconds"] = res.wall_seconds;
    write_meta(out_path, meta);
    for (const auto& r : res.rows)
        std::printf("%-12s coverage %.3f (se %.3f)  mean length %.4f (se %.4f)\n",
                    r.param.c_str(), r.coverage, r.coverage_se, r.mean_length,
                    r.length_se);
    std::printf("repeats %d (failed %d), %.2fs\n", res.repeats_total,
                res.repeats_failed, res.wall_seconds);
    return 0;
}

// ----------------------------------------------------------------- check --

int run_check(const std::string& family, const std::string& data_path, int mc_n,
              std::uint64_t seed, const std::string& json_path, const FamilyFlags& ff,
              bool no_intercept) {
    std::unique_ptr<mp::Family> iid;
    std::unique_ptr<mp::RegressionFamily> reg;
    std::unique_ptr<mp::ChainModel> chain;
    std::vector<mp::Vec> grid;

    if (mp::is_regression_family(family)) {
        if (data_path.empty())
            throw mp::ConfigError("check: regression families need --data for the design");
        mp::DesignMatrix d = mp::design_from_csv(mp::read_csv(data_path));
        if (!no_intercept) d = mp::with_intercept(d);
        mp::RegressionOptions opts;
        opts.nu = ff.nu;
        opts.kappa = ff.kappa;
        reg = mp::make_regression_family(family, std::move(d), opts);
        grid = mp::default_grid(*reg);
        chain = std::make_unique<mp::RegressionChain>(*reg);
    } else {
        mp::FamilyOptions opts;
        opts.sigma2 = ff.sigma2;
        opts.nu = ff.nu;
        if (family == "mvnormal" && !data_path.empty())
            opts.dim = static_cast<int>(mp::read_csv(data_path).values.cols());
        iid = mp::make_family(family, opts);
        grid = mp::default_grid(*iid);
        chain = std::make_unique<mp::IidChain>(*iid);
    }

    const auto mart = mp::check_martingale(*chain, grid, mc_n, seed);
    const auto mom = mp::check_moment_bound(*chain, grid, mc_n, seed + 1);

    json out;
    out["family"] = family;
    out["mc_n"] = mc_n;
    out["seed"] = seed;
    out["martingale_pass"] = mart.pass;
    out["moment_bound_pass"] = mom.pass;
    out["moment_bound_claimed"] = mom.any_claimed;
    json jm = json::array();
    for (std::size_t i = 0; i < mart.points.size(); ++i) {
        const auto& p = mart.points[i];
        json e;
        e["theta"] = std::vector<double>(p.theta.begin(), p.theta.end());
        e["max_abs_t"] = p.max_abs_t;
        e["pass"] = p.pass;
        jm.push_back(e);
        std::printf("martingale  theta[0]=%-8.3g max|t|=%5.2f  %s\n", p.theta[0],
                    p.max_abs_t, p.pass ? "ok" : "FAIL");
    }
    out["martingale"] = jm;
    json jb = json::array();
    for (const auto& p : mom.points) {
        json e;
        e["theta"] = std::vector<double>(p.theta.begin(), p.theta.end());
        e["claimed"] = p.claimed;
        if (p.claimed) {
            e["mean_z4"] = p.mean_z4;
            e["se"] = p.se;
            e["bound"] = p.bound;
            e["exact"] = p.exact;
        }
        e["pass"] = p.pass;
        jb.push_back(e);
        if (p.claimed)
            std::printf("moment      theta[0]=%-8.3g mean|Z|^4=%-10.4g bound=%-10.4g %s\n",
                        p.theta[0], p.mean_z4, p.bound, p.pass ? "ok" : "FAIL");
        else
            std::printf("moment      theta[0]=%-8.3g (no bound claimed)\n", p.theta[0]);
    }
    out["moment_bound"] = jb;
    const bool all = mart.pass && mom.pass;
    std::printf("%s\n", all ? "ALL CHECKS PASSED" : "CHECK FAILURES PRESENT");
    if (!json_path.empty()) {
        std::ofstream f(json_path, std::ios::binary);
        if (!f) throw mp::DataError("cannot write " + json_path);
        f << out.dump(2) << '\n';
    }
    return 0;
}

// ----------------------------------------------------------- prequential --

int run_prequential(const std::string& family, const std::string& data_path,
                    const std::string& nu_grid_text, std::size_t window,
                    std::uint64_t seed, const std::string& json_path,
                    const FamilyFlags&, bool no_intercept) {
    const auto nu_grid = parse_number_list(nu_grid_text, "--nu-grid");
    mp::HyperparamSelection sel;
    if (family == "robust_t") {
        mp::DesignMatrix d = mp::design_from_csv(mp::read_csv(data_path));
        if (!no_intercept) d = mp::with_intercept(d);
        mp::EstimatorSpec espec;
        espec.seed = seed;
        sel = mp::select_nu_robust_t(d, nu_grid, window, espec);
    } else if (family == "student_t") {
        const mp::Mat data = mp::iid_data_from_csv(mp::read_csv(data_path), 1);
        sel = mp::select_nu_student_t(data, nu_grid, window);
    } else {
        throw mp::ConfigError(
            "prequential: --family must be student_t or robust_t, got " + family);
    }
    for (std::size_t i = 0; i < sel.grid.size(); ++i)
        std::printf("nu=%-8g prequential log-lik = %.6f%s\n", sel.grid[i],
                    sel.scores[i], sel.grid[i] == sel.best ? "   <- best" : "");
    std::printf("selected nu = %g (warm-start window %zu)\n", sel.best, sel.window);
    if (!json_path.empty()) {
        json out;
        out["family"] = family;
        out["window"] = sel.window;
        out["nu_grid"] = sel.grid;
        out["scores"] = sel.scores;
        out["best_nu"] = sel.best;
        std::ofstream f(json_path, std::ios::binary);
        if (!f) throw mp::DataError("cannot write " + json_path);
        f << out.dump(2) << '\n';
    }
    return 0;
}

// ------------------------------------------------------------------- kde --

int run_kde(const std::string& draws_path, const std::string& param, int points,
            double from, double to, const std::string& out_path) {
    const mp::Csv csv = mp::read_csv(draws_path);
    Eigen::Index col = 0;
    if (!param.empty()) {
        col = -1;
        for (std::size_t j = 0; j < csv.header.size(); ++j)
            if (csv.header[j] == param) col = static_cast<Eigen::Index>(j);
        if (col < 0)
            throw mp::DataError("kde: no column named '" + param + "' in " + draws_path);
    }
    const mp::Vec draws = csv.values.col(col);
    mp::Vec grid;
    if (from < to) {
        grid.resize(points);
        for (int i = 0; i < points; ++i)
            grid[i] = from + (to - from) * i / static_cast<double>(points - 1);
    } else {
        grid = mp::kde_default_grid(draws, points);
    }
    const mp::Vec density = mp::kde(draws, grid);
    mp::Mat table(grid.size(), 2);
    table.col(0) = grid;
    table.col(1) = density;
    mp::write_csv(out_path, {"x", "density"}, table);
    std::printf("wrote %d-point density of %s to %s\n", points,
                csv.header[static_cast<std::size_t>(col)].c_str(), out_path.c_str());
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"posterior sampling by predictive resampling"};
    app.require_subcommand(1);

    FamilyFlags ff;

    // ---- sample
    auto* sample = app.add_subcommand("sample", "draw posterior samples");
    std::string s_family, s_data, s_out, s_mode = "hybrid", s_temper_matrix;
    std::string s_estimator, s_theta0;
    std::uint64_t s_seed = 0, s_trunc_extra = 0, s_exact_extra = 0;
    int s_draws = 1000, s_threads = 1;
    double s_temper = 1.0;
    bool s_no_intercept = false, s_standardize = false, s_track = false;
    sample->add_option("--family", s_family,
                       std::string(kIidFamilies) + "|" + kRegFamilies)
        ->required();
    sample->add_option("--data", s_data, "input CSV (header row; regression: column 'y')")
        ->required();
    sample->add_option("--out", s_out, "output draws CSV (sidecar: <out>.meta.json)")
        ->required();
    sample->add_option("--seed", s_seed, "master seed (required for reproducibility)")
        ->required();
    sample->add_option("--mode", s_mode, "exact|truncated|hybrid (default hybrid)");
    sample->add_option("--draws", s_draws, "number of posterior draws (default 1000)");
    sample->add_option("--trunc-extra", s_trunc_extra,
                       "truncation point minus n (default 100 x parameter dim)");
    sample->add_option("--exact-extra", s_exact_extra,
                       "exact-mode endpoint minus n (default 20000)");
    sample->add_option("--temper", s_temper, "scalar learning-rate multiplier");
    sample->add_option("--temper-matrix", s_temper_matrix,
                       "CSV with a PD matrix learning-rate multiplier");
    sample->add_option("--threads", s_threads, "worker threads (never changes output)");
    sample->add_option("--estimator", s_estimator,
                       "moments|sgd_onepass|irls_t|logistic_newton|default");
    sample->add_option("--theta0", s_theta0,
                       "comma-separated start estimate (skips estimation; with "
                       "--estimator sgd_onepass: the recursion's starting value)");
    sample->add_flag("--no-intercept", s_no_intercept,
                     "regression: do not prepend an intercept column");
    sample->add_flag("--standardize", s_standardize,
                     "regression: standardize continuous covariates and response");
    sample->add_flag("--track-variance", s_track,
                     "accumulate per-chain conditional variances (diagnostics)");
    sample->add_option("--sigma2", ff.sigma2, "normal_mean: known variance");
    sample->add_option("--nu", ff.nu, "student_t / robust_t: degrees of freedom");
    sample->add_option("--kappa", ff.kappa, "logistic: information truncation");

    // ---- coverage
    auto* coverage = app.add_subcommand("coverage", "frequentist coverage experiment");
    std::string c_scenario, c_out;
    std::uint64_t c_seed = 0;
    int c_threads = 1;
    coverage->add_option("--scenario", c_scenario, "scenario config file")->required();
    coverage->add_option("--out", c_out, "output coverage CSV")->required();
    coverage->add_option("--seed", c_seed, "master seed")->required();
    coverage->add_option("--threads", c_threads, "parallel repeats (never changes output)");

    // ---- check
    auto* check = app.add_subcommand("check", "model assumption diagnostics");
    std::string k_family, k_data, k_json;
    int k_mc = 100000;
    std::uint64_t k_seed = 12345;
    bool k_no_intercept = false;
    check->add_option("--family", k_family, "family to check")->required();
    check->add_option("--data", k_data, "CSV (design for regression families)");
    check->add_option("--mc-n", k_mc, "Monte-Carlo draws per grid point");
    check->add_option("--seed", k_seed, "stream seed");
    check->add_option("--json", k_json, "also write a JSON report here");
    check->add_flag("--no-intercept", k_no_intercept, "regression: no intercept column");
    check->add_option("--sigma2", ff.sigma2, "normal_mean: known variance");
    check->add_option("--nu", ff.nu, "student_t / robust_t: degrees of freedom");
    check->add_option("--kappa", ff.kappa, "logistic: information truncation");

    // ---- prequential
    auto* preq = app.add_subcommand("prequential",
                                    "select degrees of freedom by one-step log score");
    std::string p_family, p_data, p_grid = "3,5,10,30", p_json;
    std::size_t p_window = 0;
    std::uint64_t p_seed = 0;
    bool p_no_intercept = false;
    preq->add_option("--family", p_family, "student_t|robust_t")->required();
    preq->add_option("--data", p_data, "input CSV")->required();
    preq->add_option("--nu-grid", p_grid, "comma-separated grid (default 3,5,10,30)");
    preq->add_option("--window", p_window,
                     "warm-start rows (default max(20, 5 x parameter dim))");
    preq->add_option("--seed", p_seed, "stream seed for the warm-start fit");
    preq->add_option("--json", p_json, "also write a JSON report here");
    preq->add_flag("--no-intercept", p_no_intercept, "regression: no intercept column");

    // ---- kde
    auto* kde_cmd = app.add_subcommand("kde", "kernel density estimate of draws");
    std::string d_draws, d_param, d_out;
    int d_points = 512;
    double d_from = 0.0, d_to = 0.0;
    kde_cmd->add_option("--draws", d_draws, "draws CSV (from 'sample')")->required();
    kde_cmd->add_option("--out", d_out, "output CSV with columns x,density")->required();
    kde_cmd->add_option("--param", d_param, "column name (default: first column)");
    kde_cmd->add_option("--points", d_points, "grid size (default 512)");
    kde_cmd->add_option("--from", d_from, "grid start (default: data - 3 bandwidths)");
    kde_cmd->add_option("--to", d_to, "grid end (default: data + 3 bandwidths)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        if (*sample)
            return run_sample(s_family, s_data, s_out, s_seed, s_mode, s_draws,
                              s_trunc_extra, s_exact_extra, s_temper, s_temper_matrix,
                              s_threads, s_estimator, s_theta0, s_no_intercept,
                              s_standardize, s_track, ff);
        if (*coverage) return run_coverage(c_scenario, c_seed, c_out, c_threads);
        if (*check)
            return run_check(k_family, k_data, k_mc, k_seed, k_json, ff, k_no_intercept);
        if (*preq)
            return run_prequential(p_family, p_data, p_grid, p_window, p_seed, p_json,
                                   ff, p_no_intercept);
        if (*kde_cmd) return run_kde(d_draws, d_param, d_points, d_from, d_to, d_out);
    } catch (const mp::ConfigError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return 2;
    } catch (const mp::DataError& e) {
        std::fprintf(stderr, "data error: %s\n", e.what());
        return 3;
    } catch (const mp::ModelError& e) {
        std::fprintf(stderr, "model error: %s\n", e.what());
        return 4;
    } catch (const mp::NumericalError& e) {
        std::fprintf(stderr, "numerical error: %s\n", e.what());
        return 5;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
