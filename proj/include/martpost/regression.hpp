#pragma once

#include <cmath>
#include <memory>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "martpost/model.hpp"

namespace martpost {

/// Fixed-design regression data: X is n x p (covariates in column order,
/// including any intercept column), y is the response.
struct DesignMatrix {
    Mat X;
    Vec y;
    std::vector<std::string> covariate_names;

    Eigen::Index n() const { return X.rows(); }
    Eigen::Index p() const { return X.cols(); }

    void validate() const {
        if (X.rows() != y.size())
            throw DataError("design: X has " + std::to_string(X.rows()) +
                            " rows but y has " + std::to_string(y.size()));
        if (X.rows() == 0) throw DataError("design: no rows");
        if (!X.allFinite() || !y.allFinite())
            throw DataError("design: non-finite values");
    }
};

/// Prepends a column of ones.
inline DesignMatrix with_intercept(const DesignMatrix& d) {
    DesignMatrix out;
    out.X.resize(d.X.rows(), d.X.cols() + 1);
    out.X.col(0).setOnes();
    out.X.rightCols(d.X.cols()) = d.X;
    out.y = d.y;
    out.covariate_names.reserve(d.covariate_names.size() + 1);
    out.covariate_names.push_back("intercept");
    out.covariate_names.insert(out.covariate_names.end(), d.covariate_names.begin(),
                               d.covariate_names.end());
    return out;
}

/// Result of standardizing a design: continuous covariate columns (not
/// {0,1}-valued, not constant) and the response are centered and scaled to
/// mean 0, sd 1.  The recorded constants allow mapping estimates back.
struct Standardization {
    std::vector<double> x_mean, x_sd;  // per column; sd = 1, mean = 0 if untouched
    double y_mean = 0.0, y_sd = 1.0;
    std::vector<bool> column_transformed;
};

inline Standardization standardize(DesignMatrix& d) {
    d.validate();
    const auto n = static_cast<double>(d.n());
    Standardization s;
    s.x_mean.assign(d.p(), 0.0);
    s.x_sd.assign(d.p(), 1.0);
    s.column_transformed.assign(d.p(), false);
    for (Eigen::Index j = 0; j < d.p(); ++j) {
        bool binary = true;
        for (Eigen::Index i = 0; i < d.n(); ++i) {
            const double v = d.X(i, j);
            if (v != 0.0 && v != 1.0) {
                binary = false;
                break;
            }
        }
        if (binary) continue;
        const double mean = d.X.col(j).mean();
        const double sd =
            std::sqrt((d.X.col(j).array() - mean).square().sum() / (n - 1.0));
        if (!(sd > 0.0)) continue;  // constant column (e.g. intercept)
        d.X.col(j) = (d.X.col(j).array() - mean) / sd;
        s.x_mean[j] = mean;
        s.x_sd[j] = sd;
        s.column_transformed[j] = true;
    }
    const double ym = d.y.mean();
    const double ysd = std::sqrt((d.y.array() - ym).square().sum() / (n - 1.0));
    if (ysd > 0.0) {
        d.y = (d.y.array() - ym) / ysd;
        s.y_mean = ym;
        s.y_sd = ysd;
    }
    return s;
}

/// Parametric regression family over a fixed design.  Observations are
/// (covariate row X, response Y); predictive resampling redraws X uniformly
/// from the observed rows and Y from p_theta(. | X).
///
/// The role of the Fisher information is played by its design-averaged
/// version Ihat_n(theta) = n^{-1} sum_i I(theta; X_i); for the normal and
/// robust-t families this depends on theta only through scalar factors, so
/// the design moments are precomputed once; the logistic family recomputes
/// the (kappa-truncated) average at every step.
class RegressionFamily {
  public:
    virtual ~RegressionFamily() = default;

    virtual std::string name() const = 0;
    /// Total parameter dimension (p coefficients + any extras).
    virtual int param_dim() const = 0;
    virtual int n_covariates() const = 0;
    virtual std::vector<std::string> param_names() const = 0;

    virtual bool in_domain(const Vec& theta) const = 0;

    void require_domain(const Vec& theta) const {
        if (theta.size() != param_dim())
            throw DomainError(name() + ": parameter dimension " +
                              std::to_string(theta.size()) + ", expected " +
                              std::to_string(param_dim()));
        if (!in_domain(theta))
            throw DomainError(name() + ": parameter outside the parameter space");
    }

    virtual void require_support(double y) const {
        if (!std::isfinite(y)) throw SupportError(name() + ": non-finite response");
    }

    /// Score of log p_theta(y | x) in theta.
    virtual void score(const Vec& theta, double y, const Vec& x, Vec& out) const = 0;

    /// Inverse of the design-averaged information Ihat_n(theta).
    virtual void empirical_fisher_inverse(const Vec& theta, Mat& out) const = 0;

    /// Z = Ihat_n(theta)^{-1} s(theta, y, x), closed form where available.
    virtual void natural_gradient(const Vec& theta, double y, const Vec& x,
                                  Vec& out) const {
        Vec s(param_dim());
        score(theta, y, x, s);
        Mat fi(param_dim(), param_dim());
        empirical_fisher_inverse(theta, fi);
        out = fi * s;
    }

    void natural_gradient_generic(const Vec& theta, double y, const Vec& x,
                                  Vec& out) const {
        Vec s(param_dim());
        score(theta, y, x, s);
        Mat fi(param_dim(), param_dim());
        empirical_fisher_inverse(theta, fi);
        out = fi * s;
    }

    virtual double simulate_response(const Vec& theta, const Vec& x, Rng& rng) const = 0;

    virtual double log_pdf(const Vec& theta, double y, const Vec& x) const = 0;

    virtual std::optional<MomentBound> moment_bound(const Vec& theta) const {
        (void)theta;
        return std::nullopt;
    }

    /// The design this family was bound to.
    const DesignMatrix& design() const { return design_; }

    /// Uniform draw of an observed covariate row index.
    std::size_t resample_row(Rng& rng) const {
        return rng.index(static_cast<std::size_t>(design_.n()));
    }

  protected:
    explicit RegressionFamily(DesignMatrix design) : design_(std::move(design)) {
        design_.validate();
        const Eigen::Index n = design_.n(), p = design_.p();
        if (n < p) throw DataError(name_for_errors() + ": fewer rows than covariates");
        sigma_nx_ = design_.X.transpose() * design_.X / static_cast<double>(n);
        Eigen::LLT<Mat> llt(sigma_nx_);
        if (llt.info() != Eigen::Success)
            throw NonPDCovarianceError(
                "design second-moment matrix is singular; drop collinear columns");
        sigma_nx_inv_ = llt.solve(Mat::Identity(p, p));
        // max_i || Sigma_nx^{-1} X_i ||^2 and max_i ||X_i||^2, used by the
        // documented fourth-moment bounds.
        s_max_ = 0.0;
        k_max_ = 0.0;
        for (Eigen::Index i = 0; i < n; ++i) {
            s_max_ = std::max(s_max_, (sigma_nx_inv_ * design_.X.row(i).transpose())
                                          .squaredNorm());
            k_max_ = std::max(k_max_, design_.X.row(i).squaredNorm());
        }
    }

    virtual std::string name_for_errors() const { return "regression"; }

    DesignMatrix design_;
    Mat sigma_nx_;      // n^{-1} X^T X
    Mat sigma_nx_inv_;  // its inverse
    double s_max_ = 0.0;
    double k_max_ = 0.0;
};

/// Gaussian linear regression: theta = (beta_1..beta_p, sigma2), sigma2 > 0.
/// Z = ((Y - beta^T X) Sigma_nx^{-1} X,  (Y - beta^T X)^2 - sigma2);
/// Ihat_n(theta) = blockdiag(Sigma_nx / sigma2, 1/(2 sigma2^2)).
class NormalLinear final : public RegressionFamily {
  public:
    explicit NormalLinear(DesignMatrix design) : RegressionFamily(std::move(design)) {}

    std::string name() const override { return "normal_linear"; }
    int param_dim() const override { return static_cast<int>(design_.p()) + 1; }
    int n_covariates() const override { return static_cast<int>(design_.p()); }

    std::vector<std::string> param_names() const override {
        std::vector<std::string> names;
        for (Eigen::Index j = 0; j < design_.p(); ++j)
            names.push_back(coef_name(j));
        names.push_back("sigma2");
        return names;
    }

    bool in_domain(const Vec& theta) const override {
        return theta.size() == param_dim() && theta.allFinite() &&
               theta[theta.size() - 1] > 0.0;
    }

    void score(const Vec& theta, double y, const Vec& x, Vec& out) const override {
        require_domain(theta);
        require_support(y);
        const Eigen::Index p = design_.p();
        const double s2 = theta[p];
        const double r = y - theta.head(p).dot(x);
        out.resize(p + 1);
        out.head(p) = (r / s2) * x;
        out[p] = (r * r - s2) / (2.0 * s2 * s2);
    }

    void empirical_fisher_inverse(const Vec& theta, Mat& out) const override {
        require_domain(theta);
        const Eigen::Index p = design_.p();
        const double s2 = theta[p];
        out.setZero(p + 1, p + 1);
        out.topLeftCorner(p, p) = s2 * sigma_nx_inv_;
        out(p, p) = 2.0 * s2 * s2;
    }

    void natural_gradient(const Vec& theta, double y, const Vec& x,
                          Vec& out) const override {
        require_domain(theta);
        require_support(y);
        const Eigen::Index p = design_.p();
        const double r = y - theta.head(p).dot(x);
        out.resize(p + 1);
        out.head(p) = r * (sigma_nx_inv_ * x);
        out[p] = r * r - theta[p];
    }

    double simulate_response(const Vec& theta, const Vec& x, Rng& rng) const override {
        require_domain(theta);
        const Eigen::Index p = design_.p();
        return theta.head(p).dot(x) + std::sqrt(theta[p]) * rng.normal();
    }

    double log_pdf(const Vec& theta, double y, const Vec& x) const override {
        require_domain(theta);
        require_support(y);
        const Eigen::Index p = design_.p();
        const double s2 = theta[p];
        const double r = y - theta.head(p).dot(x);
        return -0.5 * std::log(2.0 * std::numbers::pi * s2) - r * r / (2.0 * s2);
    }

  private:
    std::string coef_name(Eigen::Index j) const {
        if (static_cast<std::size_t>(j) < design_.covariate_names.size() &&
            !design_.covariate_names[j].empty())
            return "beta_" + design_.covariate_names[j];
        return "beta" + std::to_string(j + 1);
    }
};

/// Student-t linear regression with fixed nu > 1 (robust errors):
/// theta = (beta_1..beta_p, tau2), tau2 > 0, and R = (Y - beta^T X)/tau.
///
///   Z_beta = tau (nu+3) R / (nu + R^2) * Sigma_nx^{-1} X
///   Z_tau2 = tau2 (nu+3) (R^2 - 1) / (nu + R^2)
///   Ihat_n = blockdiag( (nu+1) / ((nu+3) tau2) * Sigma_nx,
///                       nu / (2 (nu+3) tau2^2) ).
///
/// One-step tau2 multiplier: 1 + (1/N)(nu+3)(R^2-1)/(nu+R^2) is at least
/// 1 - (nu+3)/(nu N), which is positive for every N >= 2 whenever nu > 3
/// (and in general for N > 1 + 3/nu), so resampling chains started after a
/// few observations keep tau2 > 0; the per-step domain check still guards
/// the general case.
///
/// Documented fourth-moment bound: with S = max_i ||Sigma_nx^{-1} X_i||^2,
/// |R/(nu+R^2)| <= 1/(2 sqrt(nu)) and ((R^2-1)/(nu+R^2))^2 <= 1 give
/// ||Z||^4 <= (nu+3)^4 [ S^2 tau2^2/(16 nu^2) + tau2^4 + S tau2^3/(2 nu) ],
/// and tau2^2, tau2^3 <= 1 + tau2^4 <= 1 + ||theta||^4 yields the
/// B + C ||theta||^4 form with
///   B = (nu+3)^4 (S^2/(16 nu^2) + S/(2 nu)),  C = B + (nu+3)^4.
class RobustTLinear final : public RegressionFamily {
  public:
    RobustTLinear(DesignMatrix design, double nu)
        : RegressionFamily(std::move(design)), nu_(nu) {
        if (!(nu > 1.0) || !std::isfinite(nu))
            throw ConfigError("robust_t: nu must be > 1");
    }

    std::string name() const override { return "robust_t"; }
    int param_dim() const override { return static_cast<int>(design_.p()) + 1; }
    int n_covariates() const override { return static_cast<int>(design_.p()); }
    double nu() const { return nu_; }

    std::vector<std::string> param_names() const override {
        std::vector<std::string> names;
        for (Eigen::Index j = 0; j < design_.p(); ++j) {
            if (static_cast<std::size_t>(j) < design_.covariate_names.size() &&
                !design_.covariate_names[j].empty())
                names.push_back("beta_" + design_.covariate_names[j]);
            else
                names.push_back("beta" + std::to_string(j + 1));
        }
        names.push_back("tau2");
        return names;
    }

    bool in_domain(const Vec& theta) const override {
        return theta.size() == param_dim() && theta.allFinite() &&
               theta[theta.size() - 1] > 0.0;
    }

    void score(const Vec& theta, double y, const Vec& x, Vec& out) const override {
        require_domain(theta);
        require_support(y);
        const Eigen::Index p = design_.p();
        const double t2 = theta[p];
        const double tau = std::sqrt(t2);
        const double r = (y - theta.head(p).dot(x)) / tau;
        const double denom = nu_ + r * r;
        out.resize(p + 1);
        out.head(p) = ((nu_ + 1.0) * r / (tau * denom)) * x;
        out[p] = nu_ * (r * r - 1.0) / (2.0 * t2 * denom);
    }

    void empirical_fisher_inverse(const Vec& theta, Mat& out) const override {
        require_domain(theta);
        const Eigen::Index p = design_.p();
        const double t2 = theta[p];
        out.setZero(p + 1, p + 1);
        out.topLeftCorner(p, p) = ((nu_ + 3.0) * t2 / (nu_ + 1.0)) * sigma_nx_inv_;
        out(p, p) = 2.0 * (nu_ + 3.0) * t2 * t2 / nu_;
    }

    void natural_gradient(const Vec& theta, double y, const Vec& x,
                          Vec& out) const override {
        require_domain(theta);
        require_support(y);
        const Eigen::Index p = design_.p();
        const double t2 = theta[p];
        const double tau = std::sqrt(t2);
        const double r = (y - theta.head(p).dot(x)) / tau;
        const double denom = nu_ + r * r;
        out.resize(p + 1);
        out.head(p) = (tau * (nu_ + 3.0) * r / denom) * (sigma_nx_inv_ * x);
        out[p] = t2 * (nu_ + 3.0) * (r * r - 1.0) / denom;
    }

    double simulate_response(const Vec& theta, const Vec& x, Rng& rng) const override {
        require_domain(theta);
        const Eigen::Index p = design_.p();
        return theta.head(p).dot(x) + std::sqrt(theta[p]) * rng.student_t(nu_);
    }

    double log_pdf(const Vec& theta, double y, const Vec& x) const override {
        require_domain(theta);
        require_support(y);
        const Eigen::Index p = design_.p();
        const double t2 = theta[p];
        const double r2 = std::pow(y - theta.head(p).dot(x), 2) / t2;
        return std::lgamma(0.5 * (nu_ + 1.0)) - std::lgamma(0.5 * nu_) -
               0.5 * std::log(nu_ * std::numbers::pi * t2) -
               0.5 * (nu_ + 1.0) * std::log1p(r2 / nu_);
    }

    std::optional<MomentBound> moment_bound(const Vec&) const override {
        const double c4 = std::pow(nu_ + 3.0, 4);
        const double b =
            c4 * (s_max_ * s_max_ / (16.0 * nu_ * nu_) + s_max_ / (2.0 * nu_));
        return MomentBound{b, b + c4, false};
    }

  private:
    double nu_;
};

/// Logistic regression with a kappa-truncated empirical information:
/// theta = beta, s = (Y - sigmoid(beta^T X)) X, and
///   Ihat_{n,kappa}(theta) = n^{-1} sum_i max(p_i (1-p_i), kappa) X_i X_i^T,
/// recomputed at each theta (an O(n p^2) pass per step).  The truncation
/// keeps the inverse bounded: ||Z|| <= sqrt(K_max) / (kappa delta_min) with
/// K_max = max_i ||X_i||^2 and delta_min the smallest eigenvalue of
/// Sigma_nx, giving the documented bound B = K_max^2/(kappa delta_min)^4,
/// C = 0.
class LogisticTruncated final : public RegressionFamily {
  public:
    explicit LogisticTruncated(DesignMatrix design, double kappa = 0.001)
        : RegressionFamily(std::move(design)), kappa_(kappa) {
        if (!(kappa > 0.0) || kappa >= 0.25)
            throw ConfigError("logistic: kappa must be in (0, 0.25)");
        for (Eigen::Index i = 0; i < design_.n(); ++i)
            if (design_.y[i] != 0.0 && design_.y[i] != 1.0)
                throw DataError("logistic: responses must be 0 or 1");
        delta_min_ = min_eigenvalue(sigma_nx_);
    }

    std::string name() const override { return "logistic"; }
    int param_dim() const override { return static_cast<int>(design_.p()); }
    int n_covariates() const override { return static_cast<int>(design_.p()); }
    double kappa() const { return kappa_; }

    std::vector<std::string> param_names() const override {
        std::vector<std::string> names;
        for (Eigen::Index j = 0; j < design_.p(); ++j) {
            if (static_cast<std::size_t>(j) < design_.covariate_names.size() &&
                !design_.covariate_names[j].empty())
                names.push_back("beta_" + design_.covariate_names[j]);
            else
                names.push_back("beta" + std::to_string(j + 1));
        }
        return names;
    }

    bool in_domain(const Vec& theta) const override {
        return theta.size() == param_dim() && theta.allFinite();
    }

    void require_support(double y) const override {
        if (y != 0.0 && y != 1.0)
            throw SupportError("logistic: response must be 0 or 1");
    }

    void score(const Vec& theta, double y, const Vec& x, Vec& out) const override {
        require_domain(theta);
        require_support(y);
        out = (y - sigmoid(theta.dot(x))) * x;
    }

    void empirical_fisher_inverse(const Vec& theta, Mat& out) const override {
        require_domain(theta);
        const Eigen::Index n = design_.n(), p = design_.p();
        Mat info = Mat::Zero(p, p);
        for (Eigen::Index i = 0; i < n; ++i) {
            const double pi = sigmoid(design_.X.row(i).dot(theta));
            const double w = std::max(pi * (1.0 - pi), kappa_);
            info.noalias() += w * design_.X.row(i).transpose() * design_.X.row(i);
        }
        info /= static_cast<double>(n);
        Eigen::LLT<Mat> llt(info);
        if (llt.info() != Eigen::Success)
            throw NonPDCovarianceError("logistic: truncated information not PD");
        out = llt.solve(Mat::Identity(p, p));
    }

    double simulate_response(const Vec& theta, const Vec& x, Rng& rng) const override {
        require_domain(theta);
        return rng.bernoulli(sigmoid(theta.dot(x))) ? 1.0 : 0.0;
    }

    double log_pdf(const Vec& theta, double y, const Vec& x) const override {
        require_domain(theta);
        require_support(y);
        // log p = y eta - log(1 + e^eta), computed stably.
        const double eta = theta.dot(x);
        const double log1pe = eta > 0.0 ? eta + std::log1p(std::exp(-eta))
                                        : std::log1p(std::exp(eta));
        return y * eta - log1pe;
    }

    std::optional<MomentBound> moment_bound(const Vec&) const override {
        const double z_cap = std::sqrt(k_max_) / (kappa_ * delta_min_);
        return MomentBound{std::pow(z_cap, 4), 0.0, false};
    }

    static double sigmoid(double eta) {
        if (eta >= 0.0) return 1.0 / (1.0 + std::exp(-eta));
        const double e = std::exp(eta);
        return e / (1.0 + e);
    }

  private:
    double kappa_;
    double delta_min_ = 0.0;
};

/// Options consumed by make_regression_family; unused fields are ignored.
struct RegressionOptions {
    double nu = 5.0;        // robust_t
    double kappa = 0.001;   // logistic
};

inline std::unique_ptr<RegressionFamily> make_regression_family(
    const std::string& name, DesignMatrix design, const RegressionOptions& opts = {}) {
    if (name == "normal_linear") return std::make_unique<NormalLinear>(std::move(design));
    if (name == "robust_t")
        return std::make_unique<RobustTLinear>(std::move(design), opts.nu);
    if (name == "logistic")
        return std::make_unique<LogisticTruncated>(std::move(design), opts.kappa);
    throw ConfigError("unknown regression family: " + name);
}

inline bool is_regression_family(const std::string& name) {
    return name == "normal_linear" || name == "robust_t" || name == "logistic";
}

}  // namespace martpost
