#pragma once

#include <cmath>
#include <memory>
#include <numbers>
#include <string>
#include <vector>

#include "martpost/model.hpp"

namespace martpost {

/// Exponential with scale theta > 0 (mean theta): p(y) = theta^{-1} e^{-y/theta}.
/// Z = Y - theta; E Z^4 = 9 theta^4 exactly, so the moment bound
/// (B = 0, C = 9) is exact.
class ExponentialScale final : public Family {
  public:
    using Family::score;
    using Family::fisher_inverse;
    using Family::natural_gradient;
    std::string name() const override { return "exponential"; }
    int param_dim() const override { return 1; }
    int obs_dim() const override { return 1; }
    std::vector<std::string> param_names() const override { return {"theta"}; }

    bool in_domain(const Vec& theta) const override {
        return theta.size() == 1 && std::isfinite(theta[0]) && theta[0] > 0.0;
    }

    void require_support(const Vec& y) const override {
        Family::require_support(y);
        if (!(y[0] >= 0.0) || !std::isfinite(y[0]))
            throw SupportError("exponential: observation must be >= 0");
    }

    void score(const Vec& theta, const Vec& y, Vec& out) const override {
        require_domain(theta);
        require_support(y);
        const double t = theta[0];
        out.resize(1);
        out[0] = (y[0] - t) / (t * t);
    }

    void fisher_inverse(const Vec& theta, Mat& out) const override {
        require_domain(theta);
        out.resize(1, 1);
        out(0, 0) = theta[0] * theta[0];
    }

    void natural_gradient(const Vec& theta, const Vec& y, Vec& out) const override {
        require_domain(theta);
        require_support(y);
        out.resize(1);
        out[0] = y[0] - theta[0];
    }

    void simulate(const Vec& theta, Rng& rng, Vec& y) const override {
        require_domain(theta);
        y.resize(1);
        y[0] = rng.exponential(theta[0]);
    }

    double log_pdf(const Vec& theta, const Vec& y) const override {
        require_domain(theta);
        require_support(y);
        return -std::log(theta[0]) - y[0] / theta[0];
    }

    std::optional<MomentBound> moment_bound(const Vec&) const override {
        return MomentBound{0.0, 9.0, true};
    }
};

/// Normal location with known variance sigma2: theta is the mean.
/// Z = Y - theta ~ N(0, sigma2), so E Z^4 = 3 sigma2^2 exactly
/// (B = 3 sigma2^2, C = 0).
class NormalKnownVar final : public Family {
  public:
    using Family::score;
    using Family::fisher_inverse;
    using Family::natural_gradient;
    explicit NormalKnownVar(double sigma2 = 1.0) : sigma2_(sigma2) {
        if (!(sigma2 > 0.0) || !std::isfinite(sigma2))
            throw ConfigError("normal_mean: sigma2 must be positive");
    }

    std::string name() const override { return "normal_mean"; }
    int param_dim() const override { return 1; }
    int obs_dim() const override { return 1; }
    std::vector<std::string> param_names() const override { return {"mu"}; }
    double sigma2() const { return sigma2_; }

    bool in_domain(const Vec& theta) const override {
        return theta.size() == 1 && std::isfinite(theta[0]);
    }

    void require_support(const Vec& y) const override {
        Family::require_support(y);
        if (!std::isfinite(y[0])) throw SupportError("normal_mean: non-finite observation");
    }

    void score(const Vec& theta, const Vec& y, Vec& out) const override {
        require_domain(theta);
        require_support(y);
        out.resize(1);
        out[0] = (y[0] - theta[0]) / sigma2_;
    }

    void fisher_inverse(const Vec& theta, Mat& out) const override {
        require_domain(theta);
        out.resize(1, 1);
        out(0, 0) = sigma2_;
    }

    void natural_gradient(const Vec& theta, const Vec& y, Vec& out) const override {
        require_domain(theta);
        require_support(y);
        out.resize(1);
        out[0] = y[0] - theta[0];
    }

    void simulate(const Vec& theta, Rng& rng, Vec& y) const override {
        require_domain(theta);
        y.resize(1);
        y[0] = theta[0] + std::sqrt(sigma2_) * rng.normal();
    }

    double log_pdf(const Vec& theta, const Vec& y) const override {
        require_domain(theta);
        require_support(y);
        const double r = y[0] - theta[0];
        return -0.5 * std::log(2.0 * std::numbers::pi * sigma2_) - r * r / (2.0 * sigma2_);
    }

    std::optional<MomentBound> moment_bound(const Vec&) const override {
        return MomentBound{3.0 * sigma2_ * sigma2_, 0.0, true};
    }

  private:
    double sigma2_;
};

/// Normal with known mean 0 and unknown variance theta > 0.
/// Z = Y^2 - theta; Y^2/theta ~ chi^2_1, so E Z^4 = 60 theta^4 exactly
/// (B = 0, C = 60).
class NormalVarianceOnly final : public Family {
  public:
    using Family::score;
    using Family::fisher_inverse;
    using Family::natural_gradient;
    std::string name() const override { return "normal_var"; }
    int param_dim() const override { return 1; }
    int obs_dim() const override { return 1; }
    std::vector<std::string> param_names() const override { return {"sigma2"}; }

    bool in_domain(const Vec& theta) const override {
        return theta.size() == 1 && std::isfinite(theta[0]) && theta[0] > 0.0;
    }

    void require_support(const Vec& y) const override {
        Family::require_support(y);
        if (!std::isfinite(y[0])) throw SupportError("normal_var: non-finite observation");
    }

    void score(const Vec& theta, const Vec& y, Vec& out) const override {
        require_domain(theta);
        require_support(y);
        const double t = theta[0];
        out.resize(1);
        out[0] = (y[0] * y[0] - t) / (2.0 * t * t);
    }

    void fisher_inverse(const Vec& theta, Mat& out) const override {
        require_domain(theta);
        out.resize(1, 1);
        out(0, 0) = 2.0 * theta[0] * theta[0];
    }

    void natural_gradient(const Vec& theta, const Vec& y, Vec& out) const override {
        require_domain(theta);
        require_support(y);
        out.resize(1);
        out[0] = y[0] * y[0] - theta[0];
    }

    void simulate(const Vec& theta, Rng& rng, Vec& y) const override {
        require_domain(theta);
        y.resize(1);
        y[0] = std::sqrt(theta[0]) * rng.normal();
    }

    double log_pdf(const Vec& theta, const Vec& y) const override {
        require_domain(theta);
        require_support(y);
        return -0.5 * std::log(2.0 * std::numbers::pi * theta[0]) -
               y[0] * y[0] / (2.0 * theta[0]);
    }

    std::optional<MomentBound> moment_bound(const Vec&) const override {
        return MomentBound{0.0, 60.0, true};
    }
};

/// Student-t location with nu > 1 degrees of freedom and unit scale.
/// Z = (nu+3)(Y-theta) / (nu + (Y-theta)^2) is bounded:
/// |Z| <= (nu+3)/(2 sqrt(nu)), so E Z^4 <= (nu+3)^4/(16 nu^2)
/// deterministically (B = (nu+3)^4/(16 nu^2), C = 0, not exact).
class StudentTLocation final : public Family {
  public:
    using Family::score;
    using Family::fisher_inverse;
    using Family::natural_gradient;
    explicit StudentTLocation(double nu = 5.0) : nu_(nu) {
        if (!(nu > 1.0) || !std::isfinite(nu))
            throw ConfigError("student_t: nu must be > 1");
    }

    std::string name() const override { return "student_t"; }
    int param_dim() const override { return 1; }
    int obs_dim() const override { return 1; }
    std::vector<std::string> param_names() const override { return {"theta"}; }
    double nu() const { return nu_; }

    bool in_domain(const Vec& theta) const override {
        return theta.size() == 1 && std::isfinite(theta[0]);
    }

    void require_support(const Vec& y) const override {
        Family::require_support(y);
        if (!std::isfinite(y[0])) throw SupportError("student_t: non-finite observation");
    }

    void score(const Vec& theta, const Vec& y, Vec& out) const override {
        require_domain(theta);
        require_support(y);
        const double r = y[0] - theta[0];
        out.resize(1);
        out[0] = (nu_ + 1.0) * r / (nu_ + r * r);
    }

    void fisher_inverse(const Vec& theta, Mat& out) const override {
        require_domain(theta);
        out.resize(1, 1);
        out(0, 0) = (nu_ + 3.0) / (nu_ + 1.0);
    }

    void natural_gradient(const Vec& theta, const Vec& y, Vec& out) const override {
        require_domain(theta);
        require_support(y);
        const double r = y[0] - theta[0];
        out.resize(1);
        out[0] = (nu_ + 3.0) * r / (nu_ + r * r);
    }

    void simulate(const Vec& theta, Rng& rng, Vec& y) const override {
        require_domain(theta);
        y.resize(1);
        y[0] = theta[0] + rng.student_t(nu_);
    }

    double log_pdf(const Vec& theta, const Vec& y) const override {
        require_domain(theta);
        require_support(y);
        const double r = y[0] - theta[0];
        return std::lgamma(0.5 * (nu_ + 1.0)) - std::lgamma(0.5 * nu_) -
               0.5 * std::log(nu_ * std::numbers::pi) -
               0.5 * (nu_ + 1.0) * std::log1p(r * r / nu_);
    }

    std::optional<MomentBound> moment_bound(const Vec&) const override {
        const double b = (nu_ + 3.0) * (nu_ + 3.0) * (nu_ + 3.0) * (nu_ + 3.0) /
                         (16.0 * nu_ * nu_);
        return MomentBound{b, 0.0, false};
    }

  private:
    double nu_;
};

/// Normal with unknown mean and variance: theta = (mu, sigma2), sigma2 > 0.
/// Z = (Y - mu, (Y - mu)^2 - sigma2).  E||Z||^4 is known in closed form but
/// is a polynomial in sigma2 of mixed degrees, not of the B + C||theta||^4
/// shape, so moment_bound() is not claimed.
class NormalMeanVar final : public Family {
  public:
    using Family::score;
    using Family::fisher_inverse;
    using Family::natural_gradient;
    std::string name() const override { return "normal_meanvar"; }
    int param_dim() const override { return 2; }
    int obs_dim() const override { return 1; }
    std::vector<std::string> param_names() const override { return {"mu", "sigma2"}; }

    bool in_domain(const Vec& theta) const override {
        return theta.size() == 2 && theta.allFinite() && theta[1] > 0.0;
    }

    void require_support(const Vec& y) const override {
        Family::require_support(y);
        if (!std::isfinite(y[0]))
            throw SupportError("normal_meanvar: non-finite observation");
    }

    void score(const Vec& theta, const Vec& y, Vec& out) const override {
        require_domain(theta);
        require_support(y);
        const double r = y[0] - theta[0];
        const double s2 = theta[1];
        out.resize(2);
        out[0] = r / s2;
        out[1] = (r * r - s2) / (2.0 * s2 * s2);
    }

    void fisher_inverse(const Vec& theta, Mat& out) const override {
        require_domain(theta);
        const double s2 = theta[1];
        out.setZero(2, 2);
        out(0, 0) = s2;
        out(1, 1) = 2.0 * s2 * s2;
    }

    void natural_gradient(const Vec& theta, const Vec& y, Vec& out) const override {
        require_domain(theta);
        require_support(y);
        const double r = y[0] - theta[0];
        out.resize(2);
        out[0] = r;
        out[1] = r * r - theta[1];
    }

    void simulate(const Vec& theta, Rng& rng, Vec& y) const override {
        require_domain(theta);
        y.resize(1);
        y[0] = theta[0] + std::sqrt(theta[1]) * rng.normal();
    }

    double log_pdf(const Vec& theta, const Vec& y) const override {
        require_domain(theta);
        require_support(y);
        const double r = y[0] - theta[0];
        return -0.5 * std::log(2.0 * std::numbers::pi * theta[1]) -
               r * r / (2.0 * theta[1]);
    }
};

/// Multivariate normal in d dimensions with unknown mean and covariance.
///
/// Parameter layout (param_dim = d + d(d+1)/2):
///   theta = (mu_1..mu_d,  s_11, s_22, .., s_dd,  s_12, s_13, .., s_{d-1,d})
/// i.e. means, then variances, then the upper-triangular covariances in
/// row-major order.
///
/// Z_mu = Y - mu;  Z_{s_jk} = (Y_j - mu_j)(Y_k - mu_k) - s_jk.
/// I(theta)^{-1} = blockdiag(Sigma, J) with
/// J_{(jk),(lm)} = s_jm s_kl + s_jl s_km over the packed s-components.
/// No B + C||theta||^4 moment bound is claimed (the exact fourth moment has
/// mixed polynomial degrees, as in NormalMeanVar).
///
/// The parameter space is {Sigma symmetric positive definite}; the packed
/// update (1-1/N) Sigma + (1/N)(Y-mu)(Y-mu)^T keeps it PD for N > 1, so
/// resampling chains never exit the domain (up to floating-point rounding,
/// which the per-step check still guards).
class MultivariateNormal final : public Family {
  public:
    using Family::score;
    using Family::fisher_inverse;
    using Family::natural_gradient;
    explicit MultivariateNormal(int d) : d_(d) {
        if (d < 1) throw ConfigError("mvnormal: dimension must be >= 1");
    }

    std::string name() const override { return "mvnormal"; }
    int param_dim() const override { return d_ + d_ * (d_ + 1) / 2; }
    int obs_dim() const override { return d_; }
    int dim() const { return d_; }

    std::vector<std::string> param_names() const override {
        std::vector<std::string> names;
        const bool wide = d_ > 9;
        for (int j = 0; j < d_; ++j) names.push_back("mu" + std::to_string(j + 1));
        for (int j = 0; j < d_; ++j)
            names.push_back(pair_name(j, j, wide));
        for (int j = 0; j < d_; ++j)
            for (int k = j + 1; k < d_; ++k) names.push_back(pair_name(j, k, wide));
        return names;
    }

    /// Packed index of s_jk (j <= k) within the covariance block.
    int s_index(int j, int k) const {
        if (j > k) std::swap(j, k);
        if (j == k) return j;
        return d_ + j * d_ - j * (j + 1) / 2 + (k - j - 1);
    }

    void unpack(const Vec& theta, Vec& mu, Mat& sigma) const {
        mu = theta.head(d_);
        sigma.resize(d_, d_);
        for (int j = 0; j < d_; ++j)
            for (int k = j; k < d_; ++k)
                sigma(j, k) = sigma(k, j) = theta[d_ + s_index(j, k)];
    }

    Vec pack(const Vec& mu, const Mat& sigma) const {
        Vec theta(param_dim());
        theta.head(d_) = mu;
        for (int j = 0; j < d_; ++j)
            for (int k = j; k < d_; ++k) theta[d_ + s_index(j, k)] = sigma(j, k);
        return theta;
    }

    bool in_domain(const Vec& theta) const override {
        if (theta.size() != param_dim() || !theta.allFinite()) return false;
        Vec mu;
        Mat sigma;
        unpack(theta, mu, sigma);
        return is_positive_definite(sigma);
    }

    void require_support(const Vec& y) const override {
        Family::require_support(y);
        if (!y.allFinite()) throw SupportError("mvnormal: non-finite observation");
    }

    void score(const Vec& theta, const Vec& y, Vec& out) const override {
        require_domain(theta);
        require_support(y);
        Vec mu;
        Mat sigma;
        unpack(theta, mu, sigma);
        Eigen::LLT<Mat> llt(sigma);
        const Vec r = y - mu;
        const Vec si_r = llt.solve(r);
        const Mat si = llt.solve(Mat::Identity(d_, d_));
        // d/dSigma log p = (Sigma^{-1} r r^T Sigma^{-1} - Sigma^{-1}) / 2 as a
        // symmetric-matrix derivative; packed components pick up a factor 2
        // off the diagonal because s_jk appears in two matrix cells.
        const Mat a = si_r * si_r.transpose() - si;
        out.resize(param_dim());
        out.head(d_) = si_r;
        for (int j = 0; j < d_; ++j)
            for (int k = j; k < d_; ++k)
                out[d_ + s_index(j, k)] = (j == k) ? 0.5 * a(j, j) : a(j, k);
    }

    void fisher_inverse(const Vec& theta, Mat& out) const override {
        require_domain(theta);
        Vec mu;
        Mat sigma;
        unpack(theta, mu, sigma);
        const int q = d_ * (d_ + 1) / 2;
        out.setZero(param_dim(), param_dim());
        out.topLeftCorner(d_, d_) = sigma;
        auto s = [&](int j, int k) { return sigma(j, k); };
        for (int j = 0; j < d_; ++j)
            for (int k = j; k < d_; ++k)
                for (int l = 0; l < d_; ++l)
                    for (int m = l; m < d_; ++m) {
                        const int row = s_index(j, k), col = s_index(l, m);
                        if (row > col) continue;
                        const double v = s(j, m) * s(k, l) + s(j, l) * s(k, m);
                        out(d_ + row, d_ + col) = v;
                        out(d_ + col, d_ + row) = v;
                    }
        (void)q;
    }

    void natural_gradient(const Vec& theta, const Vec& y, Vec& out) const override {
        require_domain(theta);
        require_support(y);
        out.resize(param_dim());
        const auto mu = theta.head(d_);
        out.head(d_) = y - mu;
        for (int j = 0; j < d_; ++j)
            for (int k = j; k < d_; ++k)
                out[d_ + s_index(j, k)] =
                    (y[j] - mu[j]) * (y[k] - mu[k]) - theta[d_ + s_index(j, k)];
    }

    void simulate(const Vec& theta, Rng& rng, Vec& y) const override {
        require_domain(theta);
        Vec mu;
        Mat sigma;
        unpack(theta, mu, sigma);
        Eigen::LLT<Mat> llt(sigma);
        if (llt.info() != Eigen::Success)
            throw NonPDCovarianceError("mvnormal: covariance not positive definite");
        Vec u(d_);
        for (int j = 0; j < d_; ++j) u[j] = rng.normal();
        y = mu + llt.matrixL() * u;
    }

    double log_pdf(const Vec& theta, const Vec& y) const override {
        require_domain(theta);
        require_support(y);
        Vec mu;
        Mat sigma;
        unpack(theta, mu, sigma);
        Eigen::LLT<Mat> llt(sigma);
        const Vec r = y - mu;
        double log_det = 0.0;
        for (int j = 0; j < d_; ++j) log_det += std::log(llt.matrixL()(j, j));
        return -0.5 * d_ * std::log(2.0 * std::numbers::pi) - log_det -
               0.5 * r.dot(llt.solve(r));
    }

  private:
    static std::string pair_name(int j, int k, bool wide) {
        if (wide)
            return "s" + std::to_string(j + 1) + "_" + std::to_string(k + 1);
        return "s" + std::to_string(j + 1) + std::to_string(k + 1);
    }

    int d_;
};

/// Options consumed by make_family; unused fields are ignored.
struct FamilyOptions {
    double sigma2 = 1.0;  // normal_mean
    double nu = 5.0;      // student_t
    int dim = 2;          // mvnormal
};

inline std::unique_ptr<Family> make_family(const std::string& name,
                                           const FamilyOptions& opts = {}) {
    if (name == "exponential") return std::make_unique<ExponentialScale>();
    if (name == "normal_mean") return std::make_unique<NormalKnownVar>(opts.sigma2);
    if (name == "normal_var") return std::make_unique<NormalVarianceOnly>();
    if (name == "student_t") return std::make_unique<StudentTLocation>(opts.nu);
    if (name == "normal_meanvar") return std::make_unique<NormalMeanVar>();
    if (name == "mvnormal") return std::make_unique<MultivariateNormal>(opts.dim);
    throw ConfigError("unknown model family: " + name);
}

}  // namespace martpost
