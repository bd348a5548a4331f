#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "martpost/families.hpp"
#include "martpost/regression.hpp"

namespace martpost {

/// Shared knobs for the iterative estimators.
struct EstimatorSpec {
    int restarts = 10;     // total optimizations for multistart methods
    double tol = 1e-8;     // convergence tolerance (max-norm of the step)
    int max_iter = 200;
    std::uint64_t seed = 0;  // stream for restart perturbations
};

inline double median_of(std::vector<double> v) {
    if (v.empty()) throw DataError("median: no data");
    const std::size_t m = v.size() / 2;
    std::nth_element(v.begin(), v.begin() + m, v.end());
    double hi = v[m];
    if (v.size() % 2 == 1) return hi;
    const double lo = *std::max_element(v.begin(), v.begin() + m);
    return 0.5 * (lo + hi);
}

/// Closed-form / method-of-moments estimates for the i.i.d. families.
/// Data is an n x obs_dim matrix.  Uses the unbiased covariance for the
/// normal families with unknown mean, the MLE elsewhere, and the sample
/// median for the Student-t location (its mean may not even exist).
inline Vec estimate_moments(const Family& family, const Mat& data) {
    const auto n = data.rows();
    if (n < 1) throw DataError("estimate_moments: no data");
    if (data.cols() != family.obs_dim())
        throw DataError("estimate_moments: data has " + std::to_string(data.cols()) +
                        " columns, family expects " + std::to_string(family.obs_dim()));
    const std::string f = family.name();
    if (f == "exponential") {
        const double m = data.col(0).mean();
        if (!(m > 0.0)) throw ModelError("exponential: sample mean must be positive");
        return Vec::Constant(1, m);
    }
    if (f == "normal_mean") return Vec::Constant(1, data.col(0).mean());
    if (f == "normal_var") {
        const double m2 = data.col(0).squaredNorm() / static_cast<double>(n);
        if (!(m2 > 0.0)) throw ModelError("normal_var: mean square must be positive");
        return Vec::Constant(1, m2);
    }
    if (f == "student_t") {
        std::vector<double> v(data.col(0).begin(), data.col(0).end());
        return Vec::Constant(1, median_of(std::move(v)));
    }
    if (f == "normal_meanvar") {
        if (n < 2) throw DataError("normal_meanvar: need at least 2 observations");
        const double mu = data.col(0).mean();
        const double s2 =
            (data.col(0).array() - mu).square().sum() / static_cast<double>(n - 1);
        if (!(s2 > 0.0)) throw ModelError("normal_meanvar: zero sample variance");
        Vec theta(2);
        theta << mu, s2;
        return theta;
    }
    if (f == "mvnormal") {
        const auto& mvn = dynamic_cast<const MultivariateNormal&>(family);
        const int d = mvn.dim();
        if (n < 2) throw DataError("mvnormal: need at least 2 observations");
        const Vec mu = data.colwise().mean().transpose();
        const Mat centered = data.rowwise() - mu.transpose();
        const Mat sigma = centered.transpose() * centered / static_cast<double>(n - 1);
        if (!is_positive_definite(sigma))
            throw NonPDCovarianceError(
                "mvnormal: sample covariance not positive definite");
        (void)d;
        return mvn.pack(mu, sigma);
    }
    throw ConfigError("estimate_moments: no closed-form estimator for " + f);
}

/// Single streaming pass of the natural-gradient recursion
/// theta_i = theta_{i-1} + i^{-1} Z(theta_{i-1}, Y_i) over the observed
/// data, starting from theta0.  With this learning-rate schedule the
/// exponential family telescopes to the running mean regardless of theta0.
/// Throws DomainError if an update leaves the parameter space.
inline Vec estimate_sgd_onepass(const Family& family, const Mat& data,
                                const Vec& theta0) {
    family.require_domain(theta0);
    if (data.cols() != family.obs_dim())
        throw DataError("estimate_sgd_onepass: wrong observation dimension");
    Vec theta = theta0;
    Vec z(family.param_dim()), y(family.obs_dim());
    for (Eigen::Index i = 0; i < data.rows(); ++i) {
        y = data.row(i).transpose();
        family.natural_gradient(theta, y, z);
        theta += z / static_cast<double>(i + 1);
        if (!family.in_domain(theta))
            throw DomainError(family.name() +
                              ": one-pass update left the parameter space at row " +
                              std::to_string(i + 1));
    }
    return theta;
}

/// Ordinary least squares; returns (beta, sigma2_mle).
inline Vec ols_fit(const DesignMatrix& d) {
    d.validate();
    const Eigen::Index n = d.n(), p = d.p();
    if (n <= p) throw DataError("ols: need more rows than covariates");
    Eigen::LLT<Mat> llt(d.X.transpose() * d.X);
    if (llt.info() != Eigen::Success)
        throw NonPDCovarianceError("ols: X^T X is singular; drop collinear columns");
    const Vec beta = llt.solve(d.X.transpose() * d.y);
    const double s2 = (d.y - d.X * beta).squaredNorm() / static_cast<double>(n);
    Vec theta(p + 1);
    theta.head(p) = beta;
    theta[p] = s2;
    return theta;
}

namespace detail {

inline double robust_t_loglik(const DesignMatrix& d, double nu, const Vec& beta,
                              double tau2) {
    const double c = std::lgamma(0.5 * (nu + 1.0)) - std::lgamma(0.5 * nu) -
                     0.5 * std::log(nu * std::numbers::pi * tau2);
    const Vec r = d.y - d.X * beta;
    double total = static_cast<double>(d.n()) * c;
    for (Eigen::Index i = 0; i < d.n(); ++i)
        total -= 0.5 * (nu + 1.0) * std::log1p(r[i] * r[i] / (tau2 * nu));
    return total;
}

struct IrlsRun {
    Vec theta;
    double loglik = -std::numeric_limits<double>::infinity();
    bool converged = false;
    int iterations = 0;
    bool monotone = true;
};

/// One IRLS (EM) optimization of the t-regression likelihood from the given
/// start.  E-step weights w_i = (nu+1)/(nu + R_i^2); M-step: weighted least
/// squares for beta, then tau2 = n^{-1} sum w_i r_i^2.  Each sweep cannot
/// decrease the likelihood.
inline IrlsRun irls_t_once(const DesignMatrix& d, double nu, Vec beta, double tau2,
                           const EstimatorSpec& spec) {
    const Eigen::Index n = d.n(), p = d.p();
    IrlsRun run;
    double ll = robust_t_loglik(d, nu, beta, tau2);
    Vec w(n), r(n);
    for (int it = 1; it <= spec.max_iter; ++it) {
        r = d.y - d.X * beta;
        for (Eigen::Index i = 0; i < n; ++i) {
            const double R2 = r[i] * r[i] / tau2;
            w[i] = (nu + 1.0) / (nu + R2);
        }
        const Mat Xw = d.X.array().colwise() * w.array();
        Eigen::LLT<Mat> llt(Xw.transpose() * d.X);
        if (llt.info() != Eigen::Success)
            throw NonPDCovarianceError("irls_t: weighted normal equations singular");
        const Vec beta_new = llt.solve(Xw.transpose() * d.y);
        r = d.y - d.X * beta_new;
        const double tau2_new =
            (w.array() * r.array().square()).sum() / static_cast<double>(n);
        if (!(tau2_new > 0.0) || !std::isfinite(tau2_new))
            throw ConvergenceError("irls_t: scale collapsed to zero");
        const double ll_new = robust_t_loglik(d, nu, beta_new, tau2_new);
        if (ll_new < ll - 1e-8 * (1.0 + std::abs(ll))) run.monotone = false;
        const double step = std::max((beta_new - beta).cwiseAbs().maxCoeff(),
                                     std::abs(tau2_new - tau2));
        const double scale = std::max(beta_new.cwiseAbs().maxCoeff(),
                                      std::max(tau2_new, 1.0));
        beta = beta_new;
        tau2 = tau2_new;
        ll = ll_new;
        run.iterations = it;
        if (step <= spec.tol * scale) {
            run.converged = true;
            break;
        }
    }
    run.theta.resize(p + 1);
    run.theta.head(p) = beta;
    run.theta[p] = tau2;
    run.loglik = ll;
    return run;
}

}  // namespace detail

struct IrlsResult {
    Vec theta;
    double loglik = 0.0;
    int restarts_converged = 0;
    bool monotone = true;  // no likelihood decrease observed in any sweep
};

/// Multistart IRLS for Student-t regression with fixed nu.  The first start
/// is OLS; the remaining `restarts - 1` starts perturb each OLS coordinate
/// with sd = 0.5 x its scale (|coefficient| floored at 0.1) and the scale
/// parameter log-normally.  The best converged run by log-likelihood wins.
inline IrlsResult estimate_irls_t(const DesignMatrix& d, double nu,
                                  const EstimatorSpec& spec = {}) {
    if (!(nu > 1.0)) throw ConfigError("irls_t: nu must be > 1");
    if (spec.restarts < 1) throw ConfigError("irls_t: restarts must be >= 1");
    const Vec ols = ols_fit(d);
    const Eigen::Index p = d.p();
    Rng rng(spec.seed, 0, StreamClass::estimator);
    IrlsResult best;
    bool have = false;
    for (int s = 0; s < spec.restarts; ++s) {
        Vec beta = ols.head(p);
        double tau2 = std::max(ols[p], 1e-12);
        if (s > 0) {
            for (Eigen::Index j = 0; j < p; ++j)
                beta[j] += 0.5 * std::max(std::abs(ols[j]), 0.1) * rng.normal();
            tau2 *= std::exp(0.5 * rng.normal());
        }
        detail::IrlsRun run;
        try {
            run = detail::irls_t_once(d, nu, beta, tau2, spec);
        } catch (const ModelError&) {
            continue;  // a perturbed start may be unusable; others still count
        }
        if (!run.monotone) best.monotone = false;
        if (!run.converged) continue;
        ++best.restarts_converged;
        if (!have || run.loglik > best.loglik) {
            best.theta = run.theta;
            best.loglik = run.loglik;
            have = true;
        }
    }
    if (!have)
        throw ConvergenceError("irls_t: no restart converged within " +
                               std::to_string(spec.max_iter) + " iterations");
    return best;
}

/// Newton-Raphson for logistic regression.  The log-likelihood is concave;
/// complete or quasi-complete separation is reported as SeparationError,
/// detected when every fitted probability reaches its label (or, as a
/// backstop, when the iterates leave ||beta|| <= 1e6).
inline Vec estimate_logistic_newton(const DesignMatrix& d,
                                    const EstimatorSpec& spec = {}) {
    d.validate();
    for (Eigen::Index i = 0; i < d.n(); ++i)
        if (d.y[i] != 0.0 && d.y[i] != 1.0)
            throw DataError("logistic: responses must be 0 or 1");
    const Eigen::Index n = d.n(), p = d.p();
    Vec beta = Vec::Zero(p);
    Vec eta(n), prob(n), w(n);
    for (int it = 1; it <= spec.max_iter; ++it) {
        eta = d.X * beta;
        bool all_fitted = true;
        for (Eigen::Index i = 0; i < n; ++i) {
            prob[i] = LogisticTruncated::sigmoid(eta[i]);
            w[i] = prob[i] * (1.0 - prob[i]);
            const double miss = d.y[i] == 1.0 ? 1.0 - prob[i] : prob[i];
            all_fitted = all_fitted && miss < 1e-8;
        }
        // On separated data the iterates diverge at a roughly constant step,
        // so a norm cap alone fires far too late; every fitted probability
        // pinned to its label is the reliable signal.
        if (all_fitted)
            throw SeparationError(
                "logistic: every fitted probability reached its label; data are "
                "separated and the maximum likelihood estimate does not exist");
        const Vec grad = d.X.transpose() * (d.y - prob);
        const Mat hess =
            (d.X.array().colwise() * w.array()).matrix().transpose() * d.X;
        Eigen::LLT<Mat> llt(hess);
        if (llt.info() != Eigen::Success)
            throw SeparationError(
                "logistic: singular information matrix (separated or collinear data)");
        const Vec step = llt.solve(grad);
        beta += step;
        if (!beta.allFinite() || beta.cwiseAbs().maxCoeff() > 1e6 ||
            step.cwiseAbs().maxCoeff() > 1e6)
            throw SeparationError(
                "logistic: estimate diverged; data are likely separated");
        if (step.cwiseAbs().maxCoeff() <= spec.tol) return beta;
    }
    throw ConvergenceError("logistic: Newton did not converge within " +
                           std::to_string(spec.max_iter) + " iterations");
}

/// Default plug-in estimate for a regression family.
inline Vec estimate_regression_default(const RegressionFamily& fam,
                                       const EstimatorSpec& spec = {}) {
    const std::string f = fam.name();
    if (f == "normal_linear") return ols_fit(fam.design());
    if (f == "robust_t") {
        const auto& rt = dynamic_cast<const RobustTLinear&>(fam);
        return estimate_irls_t(fam.design(), rt.nu(), spec).theta;
    }
    if (f == "logistic") return estimate_logistic_newton(fam.design(), spec);
    throw ConfigError("no default estimator for regression family " + f);
}

}  // namespace martpost
