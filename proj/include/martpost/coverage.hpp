#pragma once

#include <string>
#include <thread>
#include <vector>

#include "martpost/diagnostics.hpp"
#include "martpost/stats.hpp"

namespace martpost {

/// A frequentist coverage scenario: simulate `repeats` datasets of size n
/// from the family at theta_star, run the full estimate-then-resample
/// pipeline on each, and record how often the equal-tailed credible
/// intervals cover the truth.
struct CoverageScenario {
    std::string family;
    FamilyOptions options;
    Vec theta_star;
    std::uint64_t n = 0;
    int repeats = 0;
    double level = 0.95;
    ResampleConfig resample;        // master_seed seeds the whole experiment
    std::string estimator = "moments";
    int threads = 1;                // parallelism across repeats
};

struct CoverageRow {
    std::string param;
    double coverage = 0.0;
    double coverage_se = 0.0;
    double mean_length = 0.0;
    double length_se = 0.0;
};

struct CoverageResult {
    std::vector<CoverageRow> rows;
    int repeats_total = 0;
    int repeats_failed = 0;  // estimation failures, excluded from the rates
    double wall_seconds = 0.0;
};

/// Runs the scenario.  Repeat r derives its own master seed
/// derive_seed(master_seed, r), so results do not depend on `threads` or on
/// how repeats are scheduled.
inline CoverageResult coverage_experiment(const CoverageScenario& sc) {
    const auto t0 = std::chrono::steady_clock::now();
    if (sc.repeats < 1) throw ConfigError("coverage: repeats must be >= 1");
    if (sc.n < 2) throw ConfigError("coverage: n must be >= 2");
    if (!(sc.level > 0.0 && sc.level < 1.0))
        throw ConfigError("coverage: level must be in (0, 1)");
    if (is_regression_family(sc.family))
        throw ConfigError(
            "coverage: regression families need a design-generation scheme, which "
            "scenarios do not define; only i.i.d. families are supported");
    const auto family = make_family(sc.family, sc.options);
    family->require_domain(sc.theta_star);
    if (sc.estimator != "moments")
        throw ConfigError("coverage: only the closed-form 'moments' estimator is "
                          "supported in scenarios");

    const int p = family->param_dim();
    const int R = sc.repeats;
    Mat hit(R, p), length(R, p);
    std::vector<std::uint8_t> okay(R, 0);
    std::vector<std::exception_ptr> hard_errors(R);

    auto run_repeat = [&](int r) {
        const std::uint64_t seed_r = derive_seed(sc.resample.master_seed,
                                                 static_cast<std::uint64_t>(r));
        Rng data_rng(seed_r, 0, StreamClass::data);
        Mat data(sc.n, family->obs_dim());
        Vec y(family->obs_dim());
        for (std::uint64_t i = 0; i < sc.n; ++i) {
            family->simulate(sc.theta_star, data_rng, y);
            data.row(static_cast<Eigen::Index>(i)) = y.transpose();
        }
        Vec theta_hat;
        try {
            theta_hat = estimate_moments(*family, data);
        } catch (const ModelError&) {
            return;  // recorded as a failed repeat
        }
        ResampleConfig cfg = sc.resample;
        cfg.master_seed = seed_r;
        cfg.threads = 1;  // parallelism lives at the repeat level
        IidChain chain(*family);
        const PosteriorDraws draws = batch_sample(chain, theta_hat, sc.n, cfg);
        for (int j = 0; j < p; ++j) {
            const Interval ci = credible_interval(Vec(draws.draws.col(j)), sc.level);
            hit(r, j) = ci.contains(sc.theta_star[j]) ? 1.0 : 0.0;
            length(r, j) = ci.length();
        }
        okay[r] = 1;
    };

    auto worker = [&](int lo, int hi) {
        for (int r = lo; r < hi; ++r) {
            try {
                run_repeat(r);
            } catch (...) {
                hard_errors[r] = std::current_exception();
            }
        }
    };

    const int T = std::max(1, std::min(sc.threads, R));
    if (T == 1) {
        worker(0, R);
    } else {
        std::vector<std::thread> pool;
        const int chunk = (R + T - 1) / T;
        for (int t = 0; t < T; ++t) {
            const int lo = t * chunk, hi = std::min(R, lo + chunk);
            if (lo >= hi) break;
            pool.emplace_back(worker, lo, hi);
        }
        for (auto& th : pool) th.join();
    }
    for (int r = 0; r < R; ++r)
        if (hard_errors[r]) std::rethrow_exception(hard_errors[r]);

    CoverageResult res;
    res.repeats_total = R;
    int kept = 0;
    for (int r = 0; r < R; ++r) kept += okay[r];
    res.repeats_failed = R - kept;
    if (kept == 0) throw ModelError("coverage: estimation failed in every repeat");

    const auto names = family->param_names();
    for (int j = 0; j < p; ++j) {
        CoverageRow row;
        row.param = names[static_cast<std::size_t>(j)];
        double hits = 0.0, len_sum = 0.0;
        for (int r = 0; r < R; ++r)
            if (okay[r]) {
                hits += hit(r, j);
                len_sum += length(r, j);
            }
        row.coverage = hits / kept;
        row.coverage_se = std::sqrt(row.coverage * (1.0 - row.coverage) / kept);
        row.mean_length = len_sum / kept;
        double ss = 0.0;
        for (int r = 0; r < R; ++r)
            if (okay[r]) ss += std::pow(length(r, j) - row.mean_length, 2);
        row.length_se = kept > 1 ? std::sqrt(ss / (kept - 1.0) / kept) : 0.0;
        res.rows.push_back(std::move(row));
    }
    res.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return res;
}

}  // namespace martpost
