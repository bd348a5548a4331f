#pragma once

#include <atomic>
#include <chrono>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "martpost/families.hpp"
#include "martpost/regression.hpp"
#include "martpost/tail_weight.hpp"

namespace martpost {

enum class Mode { exact, truncated, hybrid };

inline std::string to_string(Mode m) {
    switch (m) {
        case Mode::exact: return "exact";
        case Mode::truncated: return "truncated";
        case Mode::hybrid: return "hybrid";
    }
    return "?";
}

inline Mode mode_from_string(const std::string& s) {
    if (s == "exact") return Mode::exact;
    if (s == "truncated") return Mode::truncated;
    if (s == "hybrid") return Mode::hybrid;
    throw ConfigError("unknown sampling mode: " + s + " (exact|truncated|hybrid)");
}

/// Tempering of the learning-rate sequence: step i uses a/i (scalar) or
/// A/i (PD matrix) in place of 1/i.  Draw variance scales as a^2 (resp.
/// A I^{-1} A^T against I^{-1}).
struct Temper {
    double a = 1.0;
    std::optional<Mat> A;

    bool is_matrix() const { return A.has_value(); }

    void validate(int dim) const {
        if (A) {
            if (A->rows() != dim || A->cols() != dim)
                throw ConfigError("temper matrix must be " + std::to_string(dim) + "x" +
                                  std::to_string(dim));
            if (!A->isApprox(A->transpose(), 1e-10))
                throw ConfigError("temper matrix must be symmetric");
            if (!is_positive_definite(*A))
                throw ConfigError("temper matrix must be positive definite");
        } else if (!(a > 0.0) || !std::isfinite(a)) {
            throw ConfigError("temper factor must be a positive real");
        }
    }
};

struct ResampleConfig {
    Mode mode = Mode::hybrid;
    int draws_B = 1000;
    std::uint64_t trunc_N = 0;  // 0: defaults to n + 100 * param_dim
    std::uint64_t exact_N = 0;  // 0: defaults to n + 20000
    Temper temper;
    std::uint64_t master_seed = 0;
    int threads = 1;
    bool track_variance = false;   // accumulate per-chain conditional variance
    double abort_budget = 0.001;   // max tolerated fraction of aborted chains
};

/// What predictive resampling needs from a model: the parameter dimension,
/// the domain test, one simulate-and-natural-gradient draw per step, and
/// the (inverse) information for the Gaussian tail and variance tracking.
/// Adapters bind the i.i.d. and fixed-design regression families.
class ChainModel {
  public:
    struct Workspace {
        Vec y, z, x, tmp;
        Mat fi;
    };

    virtual ~ChainModel() = default;
    virtual int dim() const = 0;
    virtual std::vector<std::string> param_names() const = 0;
    virtual bool in_domain(const Vec& theta) const = 0;

    /// Draws the next pseudo-observation at theta and writes
    /// Z = I^{-1} s into ws.z.
    virtual void draw_increment(const Vec& theta, Rng& rng, Workspace& ws) const = 0;

    virtual void fisher_inverse(const Vec& theta, Mat& out) const = 0;

    virtual std::optional<MomentBound> moment_bound(const Vec& theta) const = 0;

    Workspace make_workspace() const {
        Workspace ws;
        ws.y.resize(1);
        ws.z.resize(dim());
        ws.x.resize(1);
        ws.tmp.resize(dim());
        ws.fi.resize(dim(), dim());
        return ws;
    }
};

class IidChain final : public ChainModel {
  public:
    explicit IidChain(const Family& f) : fam_(f) {}

    int dim() const override { return fam_.param_dim(); }
    std::vector<std::string> param_names() const override { return fam_.param_names(); }
    bool in_domain(const Vec& theta) const override { return fam_.in_domain(theta); }

    void draw_increment(const Vec& theta, Rng& rng, Workspace& ws) const override {
        fam_.simulate(theta, rng, ws.y);
        fam_.natural_gradient(theta, ws.y, ws.z);
    }

    void fisher_inverse(const Vec& theta, Mat& out) const override {
        fam_.fisher_inverse(theta, out);
    }

    std::optional<MomentBound> moment_bound(const Vec& theta) const override {
        return fam_.moment_bound(theta);
    }

    const Family& family() const { return fam_; }

  private:
    const Family& fam_;
};

class RegressionChain final : public ChainModel {
  public:
    explicit RegressionChain(const RegressionFamily& f) : fam_(f) {}

    int dim() const override { return fam_.param_dim(); }
    std::vector<std::string> param_names() const override { return fam_.param_names(); }
    bool in_domain(const Vec& theta) const override { return fam_.in_domain(theta); }

    void draw_increment(const Vec& theta, Rng& rng, Workspace& ws) const override {
        const auto row = static_cast<Eigen::Index>(fam_.resample_row(rng));
        ws.x = fam_.design().X.row(row).transpose();
        const double y = fam_.simulate_response(theta, ws.x, rng);
        fam_.natural_gradient(theta, y, ws.x, ws.z);
    }

    void fisher_inverse(const Vec& theta, Mat& out) const override {
        fam_.empirical_fisher_inverse(theta, out);
    }

    std::optional<MomentBound> moment_bound(const Vec& theta) const override {
        return fam_.moment_bound(theta);
    }

    const RegressionFamily& family() const { return fam_; }

  private:
    const RegressionFamily& fam_;
};

/// One recursion update: theta += (a/i) z  or  theta += (1/i) A z.
inline void update_step(Vec& theta, const Vec& z, std::uint64_t i, const Temper& t) {
    const double inv = 1.0 / static_cast<double>(i);
    if (t.is_matrix())
        theta.noalias() += inv * (*t.A * z);
    else
        theta += (t.a * inv) * z;
}

/// Adds w * (tempered conditional variance at theta) into accum:
/// a^2 w I^{-1}(theta) or w A I^{-1}(theta) A^T.
inline void add_cond_var(const ChainModel& cm, const Vec& theta, double w,
                         const Temper& t, ChainModel::Workspace& ws, Mat& accum) {
    cm.fisher_inverse(theta, ws.fi);
    if (t.is_matrix())
        accum.noalias() += w * (*t.A * ws.fi * t.A->transpose());
    else
        accum.noalias() += (w * t.a * t.a) * ws.fi;
}

/// Runs the chain from theta (at time from_n) through step to_N, in place.
/// If track is non-null, accumulates sum_i i^{-2} (tempered I^{-1}) there.
/// Throws DomainError the moment an update leaves the parameter space.
inline void run_chain(const ChainModel& cm, Vec& theta, std::uint64_t from_n,
                      std::uint64_t to_N, const Temper& temper, Rng& rng,
                      ChainModel::Workspace& ws, Mat* track = nullptr) {
    for (std::uint64_t i = from_n + 1; i <= to_N; ++i) {
        if (track) {
            const auto x = static_cast<double>(i);
            add_cond_var(cm, theta, 1.0 / (x * x), temper, ws, *track);
        }
        cm.draw_increment(theta, rng, ws);
        update_step(theta, ws.z, i, temper);
        if (!cm.in_domain(theta))
            throw DomainError("chain left the parameter space at step " +
                              std::to_string(i));
    }
}

/// Gaussian tail completion at truncation point N: adds
/// (r_N^2 * tempered I^{-1}(theta))^{1/2} epsilon to theta.  The result may
/// land outside the parameter space; the caller flags it (it is reported,
/// not an error).
inline void hybrid_tail(const ChainModel& cm, Vec& theta, std::uint64_t N,
                        const Temper& temper, Rng& rng, ChainModel::Workspace& ws) {
    const double r2 = tail_weight_sq(N);
    cm.fisher_inverse(theta, ws.fi);
    Mat cov;
    if (temper.is_matrix())
        cov = r2 * (*temper.A * ws.fi * temper.A->transpose());
    else
        cov = (r2 * temper.a * temper.a) * ws.fi;
    const Mat root = principal_sqrt(cov);
    Vec eps(cm.dim());
    for (int j = 0; j < cm.dim(); ++j) eps[j] = rng.normal();
    theta.noalias() += root * eps;
}

/// A batch of posterior draws plus everything needed to reproduce and audit
/// them.
struct PosteriorDraws {
    Mat draws;  // one row per surviving chain, in chain order
    std::vector<std::string> names;
    Mode mode = Mode::hybrid;
    std::uint64_t n = 0;
    std::uint64_t end_N = 0;  // final chain step (trunc_N or exact_N)
    int requested_B = 0;
    std::uint64_t master_seed = 0;
    int threads = 1;
    double temper_a = 1.0;
    bool temper_is_matrix = false;
    int aborted = 0;         // chains that exited the domain twice
    int retried = 0;         // chains that needed a retry
    int out_of_domain = 0;   // hybrid draws outside the parameter space
    double wall_seconds = 0.0;
    Vec theta_start;
    std::optional<Mat> mean_cond_var;  // mean accumulated conditional variance
};

/// Draws `cfg.draws_B` independent posterior samples by predictive
/// resampling from theta_n (the estimate after n real observations).
///
/// Chain b consumes the dedicated stream (master_seed, chain b); a chain
/// whose update exits the parameter space is retried once on the stream
/// class `chain_retry`, and dropped (counted in `aborted`) if the retry
/// also exits.  If more than `abort_budget` of the chains abort, the batch
/// raises NumericalError.  Results are bit-identical for a given
/// master_seed regardless of `threads`.
inline PosteriorDraws batch_sample(const ChainModel& cm, const Vec& theta_n,
                                   std::uint64_t n, const ResampleConfig& cfg) {
    const auto t0 = std::chrono::steady_clock::now();
    const int p = cm.dim();
    if (theta_n.size() != p)
        throw ConfigError("batch_sample: theta_n has dimension " +
                          std::to_string(theta_n.size()) + ", model needs " +
                          std::to_string(p));
    if (!cm.in_domain(theta_n))
        throw DomainError("batch_sample: starting estimate outside the parameter space");
    if (cfg.draws_B < 1) throw ConfigError("batch_sample: draws_B must be >= 1");
    if (n < 1) throw ConfigError("batch_sample: n must be >= 1");
    cfg.temper.validate(p);

    std::uint64_t end_N = 0;
    if (cfg.mode == Mode::exact) {
        end_N = cfg.exact_N ? cfg.exact_N : n + 20000;
        if (end_N <= n) throw ConfigError("batch_sample: exact_N must exceed n");
    } else {
        end_N = cfg.trunc_N ? cfg.trunc_N : n + 100 * static_cast<std::uint64_t>(p);
        if (end_N <= n) throw ConfigError("batch_sample: trunc_N must exceed n");
    }

    const int B = cfg.draws_B;
    Mat draws(B, p);
    std::vector<Mat> cond(cfg.track_variance ? B : 0);
    std::vector<std::uint8_t> ok(B, 0), ood(B, 0), retr(B, 0);
    std::vector<std::exception_ptr> errors(B);

    auto worker = [&](int lo, int hi) {
        auto ws = cm.make_workspace();
        Vec theta(p);
        Mat track;
        for (int b = lo; b < hi; ++b) {
            try {
                for (int attempt = 0; attempt < 2; ++attempt) {
                    Rng rng(cfg.master_seed, static_cast<std::uint64_t>(b),
                            attempt == 0 ? StreamClass::chain : StreamClass::chain_retry);
                    theta = theta_n;
                    if (cfg.track_variance) track.setZero(p, p);
                    try {
                        run_chain(cm, theta, n, end_N, cfg.temper, rng, ws,
                                  cfg.track_variance ? &track : nullptr);
                    } catch (const DomainError&) {
                        if (attempt == 0) {
                            retr[b] = 1;
                            continue;
                        }
                        break;  // aborted: ok[b] stays 0
                    }
                    if (cfg.mode == Mode::hybrid) {
                        hybrid_tail(cm, theta, end_N, cfg.temper, rng, ws);
                        if (!cm.in_domain(theta)) ood[b] = 1;
                    }
                    draws.row(b) = theta.transpose();
                    if (cfg.track_variance) cond[b] = track;
                    ok[b] = 1;
                    break;
                }
            } catch (...) {
                errors[b] = std::current_exception();
            }
        }
    };

    const int T = std::max(1, std::min(cfg.threads, B));
    if (T == 1) {
        worker(0, B);
    } else {
        std::vector<std::thread> pool;
        pool.reserve(T);
        const int chunk = (B + T - 1) / T;
        for (int t = 0; t < T; ++t) {
            const int lo = t * chunk, hi = std::min(B, lo + chunk);
            if (lo >= hi) break;
            pool.emplace_back(worker, lo, hi);
        }
        for (auto& th : pool) th.join();
    }

    for (int b = 0; b < B; ++b)
        if (errors[b]) std::rethrow_exception(errors[b]);

    PosteriorDraws out;
    out.names = cm.param_names();
    out.mode = cfg.mode;
    out.n = n;
    out.end_N = end_N;
    out.requested_B = B;
    out.master_seed = cfg.master_seed;
    out.threads = cfg.threads;
    out.temper_a = cfg.temper.a;
    out.temper_is_matrix = cfg.temper.is_matrix();
    out.theta_start = theta_n;

    int kept = 0;
    for (int b = 0; b < B; ++b) {
        out.retried += retr[b];
        out.out_of_domain += (ok[b] && ood[b]) ? 1 : 0;
        kept += ok[b];
    }
    out.aborted = B - kept;
    if (static_cast<double>(out.aborted) > cfg.abort_budget * B)
        throw NumericalError("batch_sample: " + std::to_string(out.aborted) + " of " +
                             std::to_string(B) + " chains aborted (budget " +
                             std::to_string(cfg.abort_budget) + ")");

    out.draws.resize(kept, p);
    int row = 0;
    Mat cv_sum = Mat::Zero(p, p);
    for (int b = 0; b < B; ++b) {
        if (!ok[b]) continue;
        out.draws.row(row++) = draws.row(b);
        if (cfg.track_variance) cv_sum += cond[b];
    }
    if (cfg.track_variance && kept > 0)
        out.mean_cond_var = cv_sum / static_cast<double>(kept);

    out.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return out;
}

}  // namespace martpost
