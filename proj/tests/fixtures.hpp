// Deliberately broken models for negative-control tests: the library's
// checks must catch these, and the retry/abort machinery in the batch
// sampler needs a model that actually exits its parameter space (the real
// families are algebraically domain-preserving).
#pragma once

#include <optional>
#include <string>
#include <vector>

#include "martpost/families.hpp"
#include "martpost/resampler.hpp"

namespace fixtures {

using martpost::Mat;
using martpost::MomentBound;
using martpost::Rng;
using martpost::Vec;

/// Exponential-scale family whose increment is tampered with: Z is scaled
/// by `inflate` and shifted by `bias`, while every advertised property
/// (information, moment bound) still describes the clean family.  With
/// bias != 0 the conditional-mean-zero check must fail; with inflate != 1
/// the fourth-moment check must fail.
class TamperedExponential final : public martpost::Family {
  public:
    TamperedExponential(double bias, double inflate)
        : bias_(bias), inflate_(inflate) {}

    std::string name() const override { return "tampered_exponential"; }
    int param_dim() const override { return 1; }
    int obs_dim() const override { return 1; }
    std::vector<std::string> param_names() const override { return {"theta"}; }

    bool in_domain(const Vec& theta) const override { return base_.in_domain(theta); }

    void require_support(const Vec& y) const override { base_.require_support(y); }

    void score(const Vec& theta, const Vec& y, Vec& out) const override {
        base_.score(theta, y, out);
    }

    void fisher_inverse(const Vec& theta, Mat& out) const override {
        base_.fisher_inverse(theta, out);
    }

    void natural_gradient(const Vec& theta, const Vec& y, Vec& out) const override {
        base_.natural_gradient(theta, y, out);
        out[0] = inflate_ * out[0] + bias_;
    }

    void simulate(const Vec& theta, Rng& rng, Vec& y) const override {
        base_.simulate(theta, rng, y);
    }

    double log_pdf(const Vec& theta, const Vec& y) const override {
        return base_.log_pdf(theta, y);
    }

    std::optional<MomentBound> moment_bound(const Vec& theta) const override {
        return base_.moment_bound(theta);
    }

  private:
    martpost::ExponentialScale base_;
    double bias_;
    double inflate_;
};

/// One-parameter chain model with a controllable chance of leaving its
/// parameter space (theta > 0) on the very first update: while theta still
/// equals `start`, a uniform draw below `fail_p` produces a catastrophic
/// negative increment.  Successful steps add 0.01 u / i, so the whole
/// trajectory is an exact function of the chain's random stream and can be
/// replayed by tests.
class FlakyChain final : public martpost::ChainModel {
  public:
    FlakyChain(double fail_p, double start) : fail_p_(fail_p), start_(start) {}

    int dim() const override { return 1; }
    std::vector<std::string> param_names() const override { return {"theta"}; }

    bool in_domain(const Vec& theta) const override {
        return theta.size() == 1 && theta[0] > 0.0;
    }

    void draw_increment(const Vec& theta, Rng& rng, Workspace& ws) const override {
        const double u = rng.uniform01();
        if (theta[0] == start_ && u < fail_p_)
            ws.z[0] = -1e9;
        else
            ws.z[0] = 0.01 * u;
    }

    void fisher_inverse(const Vec&, Mat& out) const override {
        out.resize(1, 1);
        out(0, 0) = 1.0;
    }

    std::optional<MomentBound> moment_bound(const Vec&) const override {
        return std::nullopt;
    }

    double start() const { return start_; }
    double fail_p() const { return fail_p_; }

  private:
    double fail_p_;
    double start_;
};

}  // namespace fixtures
