#pragma once

#include <optional>
#include <string>
#include <vector>

#include "martpost/errors.hpp"
#include "martpost/linalg.hpp"
#include "martpost/rng.hpp"

namespace martpost {

/// A documented bound E||Z(theta, Y)||^4 <= B + C * ||theta||^4 under
/// Y ~ p_theta, where Z is the natural-gradient increment.  `exact` means
/// the bound holds with equality at every theta (the family's fourth moment
/// is known in closed form), so diagnostics may test it two-sided.
struct MomentBound {
    double B = 0.0;
    double C = 0.0;
    bool exact = false;

    double at(const Vec& theta) const {
        const double t2 = theta.squaredNorm();
        return B + C * t2 * t2;
    }
};

/// Parametric family of i.i.d. observations, exposing exactly what
/// predictive resampling needs: score, inverse Fisher information, the
/// natural-gradient increment Z = I(theta)^{-1} s(theta, y), simulation
/// from p_theta, and the log density.
///
/// Conventions:
///  - theta is the full parameter vector (dimension param_dim());
///  - observations are vectors of dimension obs_dim() (1 for scalar
///    families);
///  - methods that receive theta outside the parameter space throw
///    DomainError; observations outside the support throw SupportError.
///    Values are never clamped.
class Family {
  public:
    virtual ~Family() = default;

    virtual std::string name() const = 0;
    virtual int param_dim() const = 0;
    virtual int obs_dim() const = 0;
    virtual std::vector<std::string> param_names() const = 0;

    virtual bool in_domain(const Vec& theta) const = 0;

    /// Throws DomainError unless theta is inside the parameter space.
    void require_domain(const Vec& theta) const {
        if (theta.size() != param_dim())
            throw DomainError(name() + ": parameter dimension " +
                              std::to_string(theta.size()) + ", expected " +
                              std::to_string(param_dim()));
        if (!in_domain(theta))
            throw DomainError(name() + ": parameter outside the parameter space");
    }

    /// Throws SupportError unless y is inside the support.
    virtual void require_support(const Vec& y) const {
        if (y.size() != obs_dim())
            throw SupportError(name() + ": observation dimension " +
                               std::to_string(y.size()) + ", expected " +
                               std::to_string(obs_dim()));
    }

    /// Score s(theta, y) = grad_theta log p_theta(y).
    virtual void score(const Vec& theta, const Vec& y, Vec& out) const = 0;

    /// Inverse Fisher information I(theta)^{-1}.
    virtual void fisher_inverse(const Vec& theta, Mat& out) const = 0;

    /// Natural-gradient increment Z = I(theta)^{-1} s(theta, y), in closed
    /// form.  The default composes the generic path; families override it
    /// with their simplified expressions (tests pin the two paths together).
    virtual void natural_gradient(const Vec& theta, const Vec& y, Vec& out) const {
        natural_gradient_generic(theta, y, out);
    }

    /// Reference path: literally I(theta)^{-1} s(theta, y).
    void natural_gradient_generic(const Vec& theta, const Vec& y, Vec& out) const {
        Vec s(param_dim());
        score(theta, y, s);
        Mat fi(param_dim(), param_dim());
        fisher_inverse(theta, fi);
        out = fi * s;
    }

    /// Draws y ~ p_theta into `y` (resized to obs_dim()).
    virtual void simulate(const Vec& theta, Rng& rng, Vec& y) const = 0;

    virtual double log_pdf(const Vec& theta, const Vec& y) const = 0;

    /// The family's documented fourth-moment bound, if it admits one of the
    /// form B + C ||theta||^4 (possibly theta-dependent constants are not
    /// supported; families without such a bound return nullopt and say so
    /// in their class comment).
    virtual std::optional<MomentBound> moment_bound(const Vec& theta) const {
        (void)theta;
        return std::nullopt;
    }

    // Allocating conveniences (tests, CLI glue; hot paths use the
    // out-parameter forms above).
    Vec score(const Vec& theta, const Vec& y) const {
        Vec out(param_dim());
        score(theta, y, out);
        return out;
    }
    Mat fisher_inverse(const Vec& theta) const {
        Mat out(param_dim(), param_dim());
        fisher_inverse(theta, out);
        return out;
    }
    Vec natural_gradient(const Vec& theta, const Vec& y) const {
        Vec out(param_dim());
        natural_gradient(theta, y, out);
        return out;
    }
    Vec simulate(const Vec& theta, Rng& rng) const {
        Vec y(obs_dim());
        simulate(theta, rng, y);
        return y;
    }
};

}  // namespace martpost
