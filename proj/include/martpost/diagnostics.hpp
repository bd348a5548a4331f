#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "martpost/estimators.hpp"
#include "martpost/resampler.hpp"

namespace martpost {

/// Default diagnostic grids: 5 parameter points spanning two orders of
/// magnitude in the scale-like coordinates (location-like coordinates span
/// sign and magnitude instead).
inline std::vector<Vec> default_grid(const Family& family) {
    const std::string f = family.name();
    auto v1 = [](double a) { return Vec::Constant(1, a); };
    if (f == "exponential" || f == "normal_var")
        return {v1(0.1), v1(0.5), v1(1.0), v1(3.0), v1(10.0)};
    if (f == "normal_mean" || f == "student_t")
        return {v1(-10.0), v1(-1.0), v1(0.0), v1(1.0), v1(10.0)};
    if (f == "normal_meanvar") {
        std::vector<Vec> g;
        const double pts[5][2] = {
            {0.0, 0.1}, {0.0, 1.0}, {1.0, 1.0}, {-3.0, 3.0}, {5.0, 10.0}};
        for (const auto& p : pts) {
            Vec t(2);
            t << p[0], p[1];
            g.push_back(t);
        }
        return g;
    }
    if (f == "mvnormal") {
        const auto& mvn = dynamic_cast<const MultivariateNormal&>(family);
        const int d = mvn.dim();
        std::vector<Vec> g;
        for (const double scale : {0.1, 1.0, 10.0}) {
            Vec mu = Vec::Zero(d);
            Mat sigma = scale * Mat::Identity(d, d);
            g.push_back(mvn.pack(mu, sigma));
        }
        {
            // strong positive equicorrelation
            Vec mu = Vec::Constant(d, 1.0);
            Mat sigma = Mat::Constant(d, d, 0.7);
            sigma.diagonal().setConstant(1.0);
            g.push_back(mvn.pack(mu, sigma));
        }
        {
            Vec mu = Vec::Constant(d, -0.5);
            Mat sigma = Mat::Constant(d, d, -0.2);
            sigma.diagonal().setConstant(2.0);
            g.push_back(mvn.pack(mu, sigma));
        }
        return g;
    }
    throw ConfigError("no default grid for family " + f);
}

/// Default grid for a regression family: coefficient patterns at several
/// magnitudes with a unit-ish scale parameter where the family has one.
inline std::vector<Vec> default_grid(const RegressionFamily& family) {
    const int p = family.param_dim();
    const int k = family.n_covariates();
    std::vector<Vec> g;
    for (const double scale : {0.1, 0.5, 1.0, 3.0, 10.0}) {
        Vec t = Vec::Zero(p);
        for (int j = 0; j < k; ++j) t[j] = ((j % 2) ? -1.0 : 1.0) * scale * 0.3;
        if (p > k) t[p - 1] = scale;  // variance-like last coordinate
        g.push_back(t);
    }
    return g;
}

struct MartingalePoint {
    Vec theta;
    Vec mean_z;
    Vec se;
    double max_abs_t = 0.0;
    bool pass = true;
};

struct MartingaleReport {
    std::vector<MartingalePoint> points;
    int mc_n = 0;
    bool pass = true;
};

/// Monte-Carlo check of the conditional mean-zero property E[Z | theta] = 0:
/// at each grid point, the sample mean of mc_n natural-gradient increments
/// must lie within 4 standard errors of zero, componentwise.
inline MartingaleReport check_martingale(const ChainModel& cm,
                                         const std::vector<Vec>& grid, int mc_n,
                                         std::uint64_t seed) {
    if (mc_n < 100) throw ConfigError("check_martingale: mc_n must be >= 100");
    MartingaleReport rep;
    rep.mc_n = mc_n;
    const int p = cm.dim();
    auto ws = cm.make_workspace();
    std::uint64_t stream = 0;
    for (const Vec& theta : grid) {
        if (!cm.in_domain(theta))
            throw DomainError("check_martingale: grid point outside the domain");
        Rng rng(seed, stream++, StreamClass::misc);
        Vec sum = Vec::Zero(p), sumsq = Vec::Zero(p);
        for (int i = 0; i < mc_n; ++i) {
            cm.draw_increment(theta, rng, ws);
            sum += ws.z;
            sumsq += ws.z.cwiseProduct(ws.z);
        }
        MartingalePoint pt;
        pt.theta = theta;
        pt.mean_z = sum / mc_n;
        pt.se.resize(p);
        for (int j = 0; j < p; ++j) {
            const double var =
                (sumsq[j] - mc_n * pt.mean_z[j] * pt.mean_z[j]) / (mc_n - 1.0);
            pt.se[j] = std::sqrt(std::max(var, 0.0) / mc_n);
        }
        for (int j = 0; j < p; ++j) {
            const double t = pt.se[j] > 0.0
                                 ? std::abs(pt.mean_z[j]) / pt.se[j]
                                 : (pt.mean_z[j] == 0.0 ? 0.0 : 1e18);
            pt.max_abs_t = std::max(pt.max_abs_t, t);
        }
        pt.pass = pt.max_abs_t <= 4.0;
        rep.pass = rep.pass && pt.pass;
        rep.points.push_back(std::move(pt));
    }
    return rep;
}

struct MomentBoundPoint {
    Vec theta;
    double mean_z4 = 0.0;
    double se = 0.0;
    double bound = 0.0;
    bool exact = false;
    bool claimed = true;
    bool pass = true;
};

struct MomentBoundReport {
    std::vector<MomentBoundPoint> points;
    int mc_n = 0;
    bool any_claimed = false;
    bool pass = true;
};

/// Monte-Carlo check of the documented fourth-moment bound
/// E||Z||^4 <= B + C ||theta||^4: the sample mean of ||Z||^4 must not
/// exceed the bound by more than 4 standard errors; for bounds documented
/// as exact it must also not fall below it by more than 4 standard errors.
/// Families that claim no bound yield "claimed = false" points that pass
/// vacuously.
inline MomentBoundReport check_moment_bound(const ChainModel& cm,
                                            const std::vector<Vec>& grid, int mc_n,
                                            std::uint64_t seed) {
    if (mc_n < 100) throw ConfigError("check_moment_bound: mc_n must be >= 100");
    MomentBoundReport rep;
    rep.mc_n = mc_n;
    auto ws = cm.make_workspace();
    std::uint64_t stream = 1000000;  // disjoint from check_martingale streams
    for (const Vec& theta : grid) {
        if (!cm.in_domain(theta))
            throw DomainError("check_moment_bound: grid point outside the domain");
        MomentBoundPoint pt;
        pt.theta = theta;
        const auto mb = cm.moment_bound(theta);
        if (!mb) {
            pt.claimed = false;
            rep.points.push_back(std::move(pt));
            ++stream;
            continue;
        }
        rep.any_claimed = true;
        pt.bound = mb->at(theta);
        pt.exact = mb->exact;
        Rng rng(seed, stream++, StreamClass::misc);
        double sum = 0.0, sumsq = 0.0;
        for (int i = 0; i < mc_n; ++i) {
            cm.draw_increment(theta, rng, ws);
            const double z2 = ws.z.squaredNorm();
            sum += z2 * z2;
            sumsq += z2 * z2 * z2 * z2;
        }
        pt.mean_z4 = sum / mc_n;
        const double var = (sumsq - mc_n * pt.mean_z4 * pt.mean_z4) / (mc_n - 1.0);
        pt.se = std::sqrt(std::max(var, 0.0) / mc_n);
        pt.pass = pt.mean_z4 <= pt.bound + 4.0 * pt.se;
        if (pt.exact) pt.pass = pt.pass && (pt.mean_z4 >= pt.bound - 4.0 * pt.se);
        rep.pass = rep.pass && pt.pass;
        rep.points.push_back(std::move(pt));
    }
    return rep;
}

struct VarianceRatioCheckpoint {
    std::uint64_t N = 0;
    Vec mean_ratio;       // mean over chains of diag(Vhat_N) / realized tail
    Vec sd_ratio;         // cross-chain sd of that ratio
    Vec dispersion;       // cross-chain sd of Vhat_N normalized by its mean
};

struct VarianceRatioReport {
    std::vector<VarianceRatioCheckpoint> checkpoints;
    int chains = 0;
    std::uint64_t exact_N = 0;
    bool pass = true;  // |mean_ratio - 1| <= 0.05 at the last checkpoint
};

/// Compares the plug-in posterior-variance proxy Vhat_N = r_N^2 I^{-1}(theta_N)
/// against the realized remaining conditional variance
/// sum_{i>N} i^{-2} I^{-1}(theta_{i-1}) along long exact chains
/// (componentwise, diagonal only).  As N grows the two converge for a
/// correctly specified family; the check passes if the cross-chain mean
/// ratio is within 5% of 1 at the last checkpoint.  Requires >= 1000 chains.
inline VarianceRatioReport track_variance_ratio(const ChainModel& cm,
                                                const Vec& theta_n, std::uint64_t n,
                                                std::vector<std::uint64_t> checkpoints,
                                                std::uint64_t exact_N, int chains,
                                                std::uint64_t seed) {
    if (chains < 1000)
        throw InsufficientChainsError(
            "track_variance_ratio: at least 1000 chains required");
    if (checkpoints.empty())
        throw ConfigError("track_variance_ratio: no checkpoints");
    std::sort(checkpoints.begin(), checkpoints.end());
    if (checkpoints.front() <= n)
        throw ConfigError("track_variance_ratio: checkpoints must exceed n");
    if (checkpoints.back() >= exact_N)
        throw ConfigError("track_variance_ratio: exact_N must exceed the last checkpoint");
    if (!cm.in_domain(theta_n))
        throw DomainError("track_variance_ratio: starting estimate outside the domain");

    const int p = cm.dim();
    const auto C = checkpoints.size();
    const Temper no_temper;
    auto ws = cm.make_workspace();

    // Per chain and checkpoint: diag Vhat and the accumulated conditional
    // variance up to the checkpoint; plus the total accumulation at exact_N.
    Mat vhat(static_cast<Eigen::Index>(chains * C), p);
    Mat acc_at(static_cast<Eigen::Index>(chains * C), p);
    Mat acc_end(chains, p);

    Vec theta(p);
    Mat fi(p, p);
    for (int c = 0; c < chains; ++c) {
        Rng rng(seed, static_cast<std::uint64_t>(c), StreamClass::chain);
        theta = theta_n;
        Vec accum = Vec::Zero(p);
        std::size_t next = 0;
        for (std::uint64_t i = n + 1; i <= exact_N; ++i) {
            while (next < C && checkpoints[next] == i - 1) {
                cm.fisher_inverse(theta, fi);
                const double r2 = tail_weight_sq(i - 1);
                vhat.row(static_cast<Eigen::Index>(c * C + next)) =
                    (r2 * fi.diagonal()).transpose();
                acc_at.row(static_cast<Eigen::Index>(c * C + next)) = accum.transpose();
                ++next;
            }
            cm.fisher_inverse(theta, fi);
            const auto x = static_cast<double>(i);
            accum += fi.diagonal() / (x * x);
            cm.draw_increment(theta, rng, ws);
            update_step(theta, ws.z, i, no_temper);
            if (!cm.in_domain(theta))
                throw DomainError("track_variance_ratio: chain left the domain");
        }
        cm.fisher_inverse(theta, fi);
        // beyond exact_N the remaining mass is approximated by the plug-in
        acc_end.row(c) =
            (accum + tail_weight_sq(exact_N) * fi.diagonal()).transpose();
    }

    VarianceRatioReport rep;
    rep.chains = chains;
    rep.exact_N = exact_N;
    for (std::size_t k = 0; k < C; ++k) {
        VarianceRatioCheckpoint cp;
        cp.N = checkpoints[k];
        Mat ratio(chains, p);
        for (int c = 0; c < chains; ++c) {
            const auto row = static_cast<Eigen::Index>(c * C + k);
            for (int j = 0; j < p; ++j) {
                const double realized = acc_end(c, j) - acc_at(row, j);
                ratio(c, j) = vhat(row, j) / realized;
            }
        }
        cp.mean_ratio = ratio.colwise().mean().transpose();
        cp.sd_ratio.resize(p);
        cp.dispersion.resize(p);
        for (int j = 0; j < p; ++j) {
            const double m = cp.mean_ratio[j];
            cp.sd_ratio[j] = std::sqrt(
                (ratio.col(j).array() - m).square().sum() / (chains - 1.0));
            // dispersion of the plug-in itself around its cross-chain mean
            double vm = 0.0;
            for (int c = 0; c < chains; ++c)
                vm += vhat(static_cast<Eigen::Index>(c * C + k), j);
            vm /= chains;
            double s = 0.0;
            for (int c = 0; c < chains; ++c) {
                const double dv =
                    vhat(static_cast<Eigen::Index>(c * C + k), j) / vm - 1.0;
                s += dv * dv;
            }
            cp.dispersion[j] = std::sqrt(s / (chains - 1.0));
        }
        rep.checkpoints.push_back(std::move(cp));
    }
    const auto& last = rep.checkpoints.back();
    for (int j = 0; j < p; ++j)
        rep.pass = rep.pass && std::abs(last.mean_ratio[j] - 1.0) <= 0.05;
    return rep;
}

struct PrequentialResult {
    double total = 0.0;
    int scored = 0;
    Vec theta_final;
};

/// Accumulated one-step-ahead log score of the natural-gradient recursion
/// over observed i.i.d. data:
///   sum_{i = start+1}^{n} log p_{theta_{i-1}}(Y_i),
/// where theta_i = theta_{i-1} + i^{-1} Z(theta_{i-1}, Y_i) and
/// theta_start = theta0 (an estimate based on the first `start` rows, or a
/// prior guess with start = 0).  Starting from 0 uses learning rate 1 on
/// the first row, which can step scale-like parameters out of their domain;
/// that surfaces as DomainError.
inline PrequentialResult prequential_loglik(const Family& family, const Mat& data,
                                            const Vec& theta0, std::size_t start = 0) {
    family.require_domain(theta0);
    if (data.cols() != family.obs_dim())
        throw DataError("prequential_loglik: wrong observation dimension");
    if (start >= static_cast<std::size_t>(data.rows()))
        throw DataError("prequential_loglik: nothing left to score after the warm start");
    PrequentialResult out;
    Vec theta = theta0;
    Vec y(family.obs_dim()), z(family.param_dim());
    for (Eigen::Index i = static_cast<Eigen::Index>(start); i < data.rows(); ++i) {
        y = data.row(i).transpose();
        out.total += family.log_pdf(theta, y);
        ++out.scored;
        family.natural_gradient(theta, y, z);
        theta += z / static_cast<double>(i + 1);
        if (!family.in_domain(theta))
            throw DomainError("prequential_loglik: update left the domain at row " +
                              std::to_string(i + 1));
    }
    out.theta_final = theta;
    return out;
}

/// Fixed-design version; the empirical information is taken over the full
/// design (covariates are not modeled).
inline PrequentialResult prequential_loglik(const RegressionFamily& family,
                                            const Vec& theta0, std::size_t start = 0) {
    family.require_domain(theta0);
    const DesignMatrix& d = family.design();
    if (start >= static_cast<std::size_t>(d.n()))
        throw DataError("prequential_loglik: nothing left to score after the warm start");
    PrequentialResult out;
    Vec theta = theta0;
    Vec x(d.p()), z(family.param_dim());
    for (Eigen::Index i = static_cast<Eigen::Index>(start); i < d.n(); ++i) {
        x = d.X.row(i).transpose();
        out.total += family.log_pdf(theta, d.y[i], x);
        ++out.scored;
        family.natural_gradient(theta, d.y[i], x, z);
        theta += z / static_cast<double>(i + 1);
        if (!family.in_domain(theta))
            throw DomainError("prequential_loglik: update left the domain at row " +
                              std::to_string(i + 1));
    }
    out.theta_final = theta;
    return out;
}

/// Default prequential warm-start window.
inline std::size_t default_prequential_window(int param_dim) {
    return std::max<std::size_t>(20, 5 * static_cast<std::size_t>(param_dim));
}

struct HyperparamSelection {
    std::vector<double> grid;
    std::vector<double> scores;
    std::size_t window = 0;
    double best = 0.0;
};

/// Scores a grid of degrees-of-freedom values for the robust-t regression
/// family by prequential log-likelihood.  Each candidate gets the same
/// treatment: IRLS fit on the first `window` rows (0 = default window),
/// then the one-pass score over the remaining rows at learning rates
/// 1/(window+1), 1/(window+2), ...  Rates bounded away from 1 keep the
/// scale update inside tau2 > 0 for every nu on the grid.
inline HyperparamSelection select_nu_robust_t(const DesignMatrix& d,
                                              const std::vector<double>& nu_grid,
                                              std::size_t window = 0,
                                              const EstimatorSpec& spec = {}) {
    if (nu_grid.empty()) throw ConfigError("select_nu_robust_t: empty grid");
    HyperparamSelection sel;
    sel.window = window ? window : default_prequential_window(static_cast<int>(d.p()) + 1);
    if (static_cast<Eigen::Index>(sel.window) >= d.n())
        throw DataError("select_nu_robust_t: warm-start window uses all the data");
    DesignMatrix head;
    head.X = d.X.topRows(static_cast<Eigen::Index>(sel.window));
    head.y = d.y.head(static_cast<Eigen::Index>(sel.window));
    head.covariate_names = d.covariate_names;
    double best_score = -std::numeric_limits<double>::infinity();
    for (const double nu : nu_grid) {
        RobustTLinear fam(d, nu);
        const Vec theta0 = estimate_irls_t(head, nu, spec).theta;
        const double score = prequential_loglik(fam, theta0, sel.window).total;
        sel.grid.push_back(nu);
        sel.scores.push_back(score);
        if (score > best_score) {
            best_score = score;
            sel.best = nu;
        }
    }
    return sel;
}

/// Same selection for the i.i.d. Student-t location family; the warm start
/// is the median of the window.
inline HyperparamSelection select_nu_student_t(const Mat& data,
                                               const std::vector<double>& nu_grid,
                                               std::size_t window = 0) {
    if (nu_grid.empty()) throw ConfigError("select_nu_student_t: empty grid");
    HyperparamSelection sel;
    sel.window = window ? window : default_prequential_window(1);
    if (static_cast<Eigen::Index>(sel.window) >= data.rows())
        throw DataError("select_nu_student_t: warm-start window uses all the data");
    std::vector<double> head(data.col(0).begin(),
                             data.col(0).begin() + static_cast<Eigen::Index>(sel.window));
    const Vec theta0 = Vec::Constant(1, median_of(std::move(head)));
    double best_score = -std::numeric_limits<double>::infinity();
    for (const double nu : nu_grid) {
        StudentTLocation fam(nu);
        const double score = prequential_loglik(fam, data, theta0, sel.window).total;
        sel.grid.push_back(nu);
        sel.scores.push_back(score);
        if (score > best_score) {
            best_score = score;
            sel.best = nu;
        }
    }
    return sel;
}

}  // namespace martpost
