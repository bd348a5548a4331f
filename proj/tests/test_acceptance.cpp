// End-to-end acceptance checks for the posterior resampling library.
// Each numbered criterion prints exactly one PASS/FAIL line; the process
// exit code is the number of failed criteria.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "fixtures.hpp"
#include "martpost/martpost.hpp"

namespace mp = martpost;

namespace {

int failures = 0;

void report(int idx, const char* name, bool pass, const std::string& detail) {
    std::printf("criterion %2d  %-34s %s  %s\n", idx, name, pass ? "PASS" : "FAIL",
                detail.c_str());
    std::fflush(stdout);
    if (!pass) ++failures;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
        .count();
}

std::string scratch(const std::string& name) {
    const auto dir =
        std::filesystem::temp_directory_path() / "martpost_acceptance";
    std::filesystem::create_directories(dir);
    return (dir / name).string();
}

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

/// Componentwise |mean - theta_n| <= 4 sd / sqrt(B).
bool mean_anchored(const mp::PosteriorDraws& d, const mp::Vec& theta_n,
                   double* worst) {
    const double B = static_cast<double>(d.draws.rows());
    bool ok = true;
    for (Eigen::Index j = 0; j < d.draws.cols(); ++j) {
        const auto s = mp::summarize(mp::Vec(d.draws.col(j)));
        const double t = std::abs(s.mean - theta_n[j]) / (s.sd / std::sqrt(B));
        *worst = std::max(*worst, t);
        ok = ok && t <= 4.0;
    }
    return ok;
}

char buf[512];

}  // namespace

int main() {
    // ---------------------------------------------------------------------
    // Shared small-n exponential setup for criteria 1, 2, 5, 9, 10.
    mp::ExponentialScale expo;
    mp::Mat exp_data(10, 1);
    {
        mp::Rng rng(101, 0, mp::StreamClass::data);
        mp::Vec y(1);
        for (int i = 0; i < 10; ++i) {
            expo.simulate(mp::Vec::Constant(1, 1.0), rng, y);
            exp_data(i, 0) = y[0];
        }
    }
    const mp::Vec theta10 = mp::estimate_moments(expo, exp_data);
    mp::IidChain expo_chain(expo);

    mp::ResampleConfig small;
    small.draws_B = 50000;
    small.master_seed = 777;

    const auto t_c1 = std::chrono::steady_clock::now();
    mp::ResampleConfig hyb_cfg = small;
    hyb_cfg.mode = mp::Mode::hybrid;
    hyb_cfg.trunc_N = 30;  // n + 20
    const mp::PosteriorDraws hyb = mp::batch_sample(expo_chain, theta10, 10, hyb_cfg);

    mp::ResampleConfig exact_cfg = small;
    exact_cfg.mode = mp::Mode::exact;
    exact_cfg.exact_N = 20010;  // n + 20000
    const mp::PosteriorDraws exact =
        mp::batch_sample(expo_chain, theta10, 10, exact_cfg);
    const double c1_time = seconds_since(t_c1);

    const auto sum_h = mp::summarize(mp::Vec(hyb.draws.col(0)));
    const auto sum_e = mp::summarize(mp::Vec(exact.draws.col(0)));
    const double ks_he = mp::ks_two_sample(mp::Vec(hyb.draws.col(0)),
                                           mp::Vec(exact.draws.col(0)));
    const double mean_rel = std::abs(sum_h.mean - sum_e.mean) / sum_e.mean;
    const double sd_rel = std::abs(sum_h.sd - sum_e.sd) / sum_e.sd;
    std::snprintf(buf, sizeof buf,
                  "(KS %.4f < 0.02, mean rel %.4f, sd rel %.4f, %.1fs expected < 30s)",
                  ks_he, mean_rel, sd_rel, c1_time);
    report(1, "hybrid matches exact sampling", ks_he < 0.02 && mean_rel < 0.02 && sd_rel < 0.02,
           buf);

    mp::ResampleConfig tr_cfg = small;
    tr_cfg.mode = mp::Mode::truncated;
    tr_cfg.trunc_N = 30;
    const mp::PosteriorDraws trunc = mp::batch_sample(expo_chain, theta10, 10, tr_cfg);
    const double ks_te = mp::ks_two_sample(mp::Vec(trunc.draws.col(0)),
                                           mp::Vec(exact.draws.col(0)));
    std::snprintf(buf, sizeof buf, "(KS %.4f > 0.05: early truncation is visibly narrow)",
                  ks_te);
    report(2, "truncation-bias negative control", ks_te > 0.05, buf);

    // ---------------------------------------------------------------------
    // Criterion 3: multivariate-normal coverage at 1000 repeats.
    mp::MultivariateNormal mvn(2);
    mp::Vec theta_star(5);
    theta_star << -0.5, 1.0, 1.0, 0.5, 0.7;  // mu1, mu2, s11, s22, s12

    mp::CoverageScenario sc;
    sc.family = "mvnormal";
    sc.options.dim = 2;
    sc.theta_star = theta_star;
    sc.n = 100;
    sc.repeats = 1000;
    sc.level = 0.95;
    sc.resample.mode = mp::Mode::hybrid;
    sc.resample.draws_B = 2000;
    sc.resample.trunc_N = 150;  // n + 50
    sc.resample.master_seed = 909;
    sc.threads = 1;

    const auto t_c3 = std::chrono::steady_clock::now();
    const mp::CoverageResult cov = mp::coverage_experiment(sc);
    const double c3_time = seconds_since(t_c3);

    auto row_of = [&](const std::string& name) -> const mp::CoverageRow& {
        for (const auto& r : cov.rows)
            if (r.param == name) return r;
        std::fprintf(stderr, "missing coverage row %s\n", name.c_str());
        std::exit(99);
    };
    const auto& r_mu1 = row_of("mu1");
    const auto& r_s11 = row_of("s11");
    const auto& r_s12 = row_of("s12");
    const bool c3_cov = std::abs(r_mu1.coverage - 0.933) <= 0.02 &&
                        std::abs(r_s11.coverage - 0.944) <= 0.02 &&
                        std::abs(r_s12.coverage - 0.941) <= 0.02;
    const bool c3_len = std::abs(r_mu1.mean_length / 0.39 - 1.0) <= 0.10 &&
                        std::abs(r_s11.mean_length / 0.55 - 1.0) <= 0.10 &&
                        std::abs(r_s12.mean_length / 0.38 - 1.0) <= 0.10;
    std::snprintf(buf, sizeof buf,
                  "(cov mu1/s11/s12 %.3f/%.3f/%.3f vs .933/.944/.941; len "
                  "%.3f/%.3f/%.3f vs .39/.55/.38; %.0fs expected < 600s)",
                  r_mu1.coverage, r_s11.coverage, r_s12.coverage, r_mu1.mean_length,
                  r_s11.mean_length, r_s12.mean_length, c3_time);
    report(3, "multivariate coverage and lengths", c3_cov && c3_len, buf);

    // one batch with the same configuration feeds the mean invariant below
    mp::PosteriorDraws c3_batch;
    mp::Vec c3_theta_hat;
    {
        mp::Rng rng(mp::derive_seed(909, 0), 0, mp::StreamClass::data);
        mp::Mat data(100, 2);
        mp::Vec y(2);
        for (int i = 0; i < 100; ++i) {
            mvn.simulate(theta_star, rng, y);
            data.row(i) = y.transpose();
        }
        c3_theta_hat = mp::estimate_moments(mvn, data);
        mp::IidChain chain(mvn);
        mp::ResampleConfig cfg = sc.resample;
        c3_batch = mp::batch_sample(chain, c3_theta_hat, 100, cfg);
    }

    // ---------------------------------------------------------------------
    // Criterion 4: limiting-normal shape at n = 5000 (and the tempering
    // ratio for criterion 7 reuses the same run).
    mp::Mat big_data(5000, 1);
    {
        mp::Rng rng(404, 1, mp::StreamClass::data);
        mp::Vec y(1);
        for (int i = 0; i < 5000; ++i) {
            expo.simulate(mp::Vec::Constant(1, 1.0), rng, y);
            big_data(i, 0) = y[0];
        }
    }
    const mp::Vec theta5000 = mp::estimate_moments(expo, big_data);

    mp::ResampleConfig big_cfg;
    big_cfg.mode = mp::Mode::hybrid;
    big_cfg.draws_B = 50000;
    big_cfg.master_seed = 11;

    const auto t_c4 = std::chrono::steady_clock::now();
    const mp::PosteriorDraws big =
        mp::batch_sample(expo_chain, theta5000, 5000, big_cfg);
    const double c4_time = seconds_since(t_c4);

    const auto sum_big = mp::summarize(mp::Vec(big.draws.col(0)));
    const double sd_ref = theta5000[0] * std::sqrt(mp::tail_weight_sq(5000));
    const double shape = sum_big.sd / sd_ref;
    const bool c4_ok = shape >= 0.97 && shape <= 1.03 &&
                       std::abs(sum_big.skewness) < 0.05 && c4_time < 10.0;
    std::snprintf(buf, sizeof buf, "(sd ratio %.4f in [0.97,1.03], |skew| %.4f < 0.05, %.1fs < 10s)",
                  shape, std::abs(sum_big.skewness), c4_time);
    report(4, "large-n limiting normal shape", c4_ok, buf);

    // ---------------------------------------------------------------------
    // Criterion 5: posterior mean pinned to the starting estimate in every
    // batch drawn for criteria 1-4.
    double worst_t = 0.0;
    bool anchored = true;
    anchored &= mean_anchored(hyb, theta10, &worst_t);
    anchored &= mean_anchored(exact, theta10, &worst_t);
    anchored &= mean_anchored(trunc, theta10, &worst_t);
    anchored &= mean_anchored(big, theta5000, &worst_t);
    anchored &= mean_anchored(c3_batch, c3_theta_hat, &worst_t);
    std::snprintf(buf, sizeof buf, "(worst |mean-start|/(sd/sqrt(B)) = %.2f <= 4)",
                  worst_t);
    report(5, "posterior mean anchors the start", anchored, buf);

    // ---------------------------------------------------------------------
    // Criterion 6: fourth-moment bound suite with a negative control.
    const auto t_c6 = std::chrono::steady_clock::now();
    bool c6_ok = true;
    std::string c6_detail;
    {
        const int mc = 100000;
        const mp::ExponentialScale fe;
        const mp::NormalVarianceOnly fv;
        const mp::StudentTLocation ft(5.0);
        struct Case {
            const mp::Family* fam;
            bool exact;
        };
        for (const auto&[fam, exact_claim] :
             std::initializer_list<Case>{{&fe, true}, {&fv, true}, {&ft, false}}) {
            mp::IidChain chain(*fam);
            const auto rep =
                mp::check_moment_bound(chain, mp::default_grid(*fam), mc, 606);
            c6_ok = c6_ok && rep.pass && rep.any_claimed;
            for (const auto& pt : rep.points) {
                c6_ok = c6_ok && pt.claimed && pt.exact == exact_claim;
                if (fam == &ft)
                    c6_ok = c6_ok && std::abs(pt.bound - 10.24) < 1e-12;
            }
            if (!rep.pass) c6_detail += " " + fam->name() + " failed;";
        }
        fixtures::TamperedExponential bad(0.0, 2.0);
        mp::IidChain bad_chain(bad);
        std::vector<mp::Vec> grid{mp::Vec::Constant(1, 0.5), mp::Vec::Constant(1, 1.0)};
        const auto neg = mp::check_moment_bound(bad_chain, grid, mc, 607);
        c6_ok = c6_ok && !neg.pass;
        if (neg.pass) c6_detail += " negative control passed;";
    }
    const double c6_time = seconds_since(t_c6);
    c6_ok = c6_ok && c6_time < 60.0;
    std::snprintf(buf, sizeof buf, "(three bounded families ok, control flagged,%s %.1fs < 60s)",
                  c6_detail.c_str(), c6_time);
    report(6, "fourth-moment bound suite", c6_ok, buf);

    // ---------------------------------------------------------------------
    // Criterion 7: tempering doubles the posterior spread at a = 2.
    mp::ResampleConfig hot_cfg = big_cfg;
    hot_cfg.temper.a = 2.0;
    const mp::PosteriorDraws hot = mp::batch_sample(expo_chain, theta5000, 5000, hot_cfg);
    const double temper_ratio =
        mp::summarize(mp::Vec(hot.draws.col(0))).sd / sum_big.sd;
    std::snprintf(buf, sizeof buf, "(sd ratio a=2 vs a=1: %.4f in [1.94, 2.06])",
                  temper_ratio);
    report(7, "tempering rescales the spread", temper_ratio >= 1.94 && temper_ratio <= 2.06,
           buf);

    // ---------------------------------------------------------------------
    // Criterion 8: robust regression end to end.
    const auto t_c8 = std::chrono::steady_clock::now();
    bool c8_ok = true;
    std::string c8_detail;
    {
        mp::Vec beta_true(4);
        beta_true << 1.0, 0.5, -0.5, 0.0;
        auto make_design = [&](std::uint64_t stream) {
            mp::DesignMatrix d;
            d.X.resize(2000, 4);
            d.y.resize(2000);
            d.covariate_names = {"intercept", "x1", "x2", "x3"};
            mp::Rng rng(321, stream, mp::StreamClass::data);
            for (int i = 0; i < 2000; ++i) {
                d.X(i, 0) = 1.0;
                for (int j = 1; j < 4; ++j) d.X(i, j) = rng.normal();
                d.y[i] = d.X.row(i).dot(beta_true) + rng.student_t(5.0);
            }
            return d;
        };

        const mp::DesignMatrix d = make_design(0);
        const auto fit = mp::estimate_irls_t(d, 5.0);
        double beta_err = 0.0;
        for (int j = 0; j < 4; ++j)
            beta_err = std::max(beta_err, std::abs(fit.theta[j] - beta_true[j]));
        c8_ok = c8_ok && beta_err < 0.1;

        mp::RobustTLinear fam(d, 5.0);
        mp::RegressionChain chain(fam);
        mp::ResampleConfig cfg;
        cfg.mode = mp::Mode::hybrid;
        cfg.draws_B = 2000;
        cfg.trunc_N = 2100;  // n + 100
        cfg.master_seed = 8;
        const mp::PosteriorDraws draws = mp::batch_sample(chain, fit.theta, 2000, cfg);
        const bool paths_ok = draws.aborted == 0 && draws.retried == 0;
        bool tau_ok = true;
        for (Eigen::Index b = 0; b < draws.draws.rows(); ++b)
            tau_ok = tau_ok && draws.draws(b, 4) > 0.0;
        c8_ok = c8_ok && paths_ok && tau_ok;

        int picks = 0;
        for (int rep = 0; rep < 50; ++rep) {
            const mp::DesignMatrix dr = make_design(1 + static_cast<std::uint64_t>(rep));
            const auto sel = mp::select_nu_robust_t(dr, {3.0, 5.0, 10.0, 30.0});
            if (sel.best == 5.0) ++picks;
        }
        c8_ok = c8_ok && picks >= 30;
        std::snprintf(buf, sizeof buf,
                      "(max |beta err| %.3f < 0.1, scale paths clean %s, nu=5 picked "
                      "%d/50 >= 30, %.0fs < 300s)",
                      beta_err, paths_ok && tau_ok ? "yes" : "NO", picks,
                      seconds_since(t_c8));
        c8_detail = buf;
    }
    const double c8_time = seconds_since(t_c8);
    c8_ok = c8_ok && c8_time < 300.0;
    report(8, "robust regression end to end", c8_ok, c8_detail);

    // ---------------------------------------------------------------------
    // Criterion 9: exact-mode cost is roughly proportional to the chain length.
    mp::ResampleConfig short_cfg;
    short_cfg.mode = mp::Mode::exact;
    short_cfg.draws_B = 2000;
    short_cfg.exact_N = 510;  // n + 500
    short_cfg.master_seed = 31;
    mp::ResampleConfig long_cfg = short_cfg;
    long_cfg.exact_N = 50010;  // n + 50000

    const mp::PosteriorDraws run_short =
        mp::batch_sample(expo_chain, theta10, 10, short_cfg);
    const mp::PosteriorDraws run_long =
        mp::batch_sample(expo_chain, theta10, 10, long_cfg);
    const double ratio = run_long.wall_seconds / run_short.wall_seconds;
    std::snprintf(buf, sizeof buf, "(100x steps took %.0fx the time; in [50, 200])",
                  ratio);
    report(9, "runtime linear in chain length", ratio >= 50.0 && ratio <= 200.0, buf);

    // ---------------------------------------------------------------------
    // Criterion 10: byte-identical outputs under 1 vs 8 worker threads for
    // the criterion-1 batches and the criterion-3 experiment.
    bool c10_ok = true;
    {
        auto draws_file = [&](const mp::PosteriorDraws& d, const std::string& name) {
            const std::string path = scratch(name);
            mp::write_csv(path, d.names, d.draws);
            return path;
        };
        const std::string h1 = draws_file(hyb, "c1_hybrid_t1.csv");
        const std::string e1 = draws_file(exact, "c1_exact_t1.csv");

        mp::ResampleConfig cfg8 = hyb_cfg;
        cfg8.threads = 8;
        const std::string h8 =
            draws_file(mp::batch_sample(expo_chain, theta10, 10, cfg8), "c1_hybrid_t8.csv");
        cfg8 = exact_cfg;
        cfg8.threads = 8;
        const std::string e8 =
            draws_file(mp::batch_sample(expo_chain, theta10, 10, cfg8), "c1_exact_t8.csv");
        c10_ok = c10_ok && slurp(h1) == slurp(h8) && slurp(e1) == slurp(e8);

        auto coverage_file = [&](const mp::CoverageResult& r, const std::string& name) {
            mp::Mat t(static_cast<Eigen::Index>(r.rows.size()), 4);
            std::vector<std::string> names;
            for (std::size_t i = 0; i < r.rows.size(); ++i) {
                t(static_cast<Eigen::Index>(i), 0) = r.rows[i].coverage;
                t(static_cast<Eigen::Index>(i), 1) = r.rows[i].coverage_se;
                t(static_cast<Eigen::Index>(i), 2) = r.rows[i].mean_length;
                t(static_cast<Eigen::Index>(i), 3) = r.rows[i].length_se;
                names.push_back(r.rows[i].param);
            }
            const std::string path = scratch(name);
            mp::write_csv(path, {"coverage", "coverage_se", "mean_length", "length_se"}, t);
            return path;
        };
        const std::string cov1 = coverage_file(cov, "c3_threads1.csv");
        mp::CoverageScenario sc8 = sc;
        sc8.threads = 8;
        const std::string cov8 = coverage_file(mp::coverage_experiment(sc8), "c3_threads8.csv");
        c10_ok = c10_ok && slurp(cov1) == slurp(cov8);
    }
    report(10, "thread-count determinism", c10_ok,
           "(criterion-1 draws and criterion-3 tables byte-identical at 1 vs 8 threads)");

    std::printf("%d of 10 criteria failed\n", failures);
    return failures;
}
