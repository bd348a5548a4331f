#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <memory>

#include "martpost/families.hpp"
#include "martpost/rng.hpp"
#include "test_util.hpp"

using martpost::Family;
using martpost::make_family;
using martpost::Mat;
using martpost::MultivariateNormal;
using martpost::Rng;
using martpost::StreamClass;
using martpost::Vec;

namespace {

Vec v1(double a) { return (Vec(1) << a).finished(); }
Vec v2(double a, double b) { return (Vec(2) << a, b).finished(); }

/// Monte-Carlo check that E[Z | theta] = 0 and E[Z Z^T | theta] = I^{-1}
/// under Y ~ p_theta, each entry within 4 standard errors.
void check_increment_moments(const Family& fam, const Vec& theta, int n,
                             std::uint64_t seed) {
    const int p = fam.param_dim();
    Rng rng(seed, 0, StreamClass::misc);
    Vec y(fam.obs_dim()), z(p);
    Vec mean = Vec::Zero(p);
    Mat outer = Mat::Zero(p, p);
    Mat outer_sq = Mat::Zero(p, p);  // second moment of the products
    Vec z_sq = Vec::Zero(p);
    for (int i = 0; i < n; ++i) {
        fam.simulate(theta, rng, y);
        fam.natural_gradient(theta, y, z);
        mean += z;
        z_sq += z.cwiseProduct(z);
        const Mat zz = z * z.transpose();
        outer += zz;
        outer_sq += zz.cwiseProduct(zz);
    }
    mean /= n;
    z_sq /= n;
    outer /= n;
    outer_sq /= n;

    const Mat fi = fam.fisher_inverse(theta);
    for (int j = 0; j < p; ++j) {
        const double se_mean = std::sqrt(std::max(z_sq[j], 1e-30) / n);
        INFO("family " << fam.name() << " component " << j);
        CHECK(std::abs(mean[j]) <= 4.0 * se_mean);
        for (int k = 0; k < p; ++k) {
            const double var_jk =
                std::max(outer_sq(j, k) - outer(j, k) * outer(j, k), 0.0);
            const double se = std::sqrt(var_jk / n) + 1e-12;
            INFO("entry (" << j << "," << k << "): mc " << outer(j, k) << " vs "
                           << fi(j, k));
            CHECK(std::abs(outer(j, k) - fi(j, k)) <= 4.0 * se);
        }
    }
}

/// Closed-form natural gradient must equal I^{-1} s computed generically.
void check_closed_form_matches_generic(const Family& fam, const Vec& theta,
                                       std::uint64_t seed) {
    Rng rng(seed, 1, StreamClass::misc);
    Vec y(fam.obs_dim()), a(fam.param_dim()), b(fam.param_dim());
    for (int i = 0; i < 50; ++i) {
        fam.simulate(theta, rng, y);
        fam.natural_gradient(theta, y, a);
        fam.natural_gradient_generic(theta, y, b);
        REQUIRE((a - b).cwiseAbs().maxCoeff() < 1e-10);
    }
}

}  // namespace

// ------------------------------------------------------------ exponential --

TEST_CASE("exponential scale: pinned values", "[families]") {
    const auto fam = make_family("exponential");
    CHECK(fam->param_dim() == 1);
    CHECK(fam->obs_dim() == 1);

    CHECK_THAT(fam->score(v1(2.0), v1(2.0))[0], Catch::Matchers::WithinAbs(0.0, 1e-15));
    CHECK_THAT(fam->score(v1(2.0), v1(4.0))[0], Catch::Matchers::WithinAbs(0.5, 1e-15));
    CHECK_THAT(fam->fisher_inverse(v1(2.0))(0, 0),
               Catch::Matchers::WithinAbs(4.0, 1e-15));
    CHECK_THAT(fam->natural_gradient(v1(2.0), v1(3.5))[0],
               Catch::Matchers::WithinAbs(1.5, 1e-15));
    CHECK_THAT(fam->log_pdf(v1(2.0), v1(2.0)),
               Catch::Matchers::WithinAbs(-1.6931471805599453, 1e-15));

    const auto bound = fam->moment_bound(v1(2.0));
    REQUIRE(bound.has_value());
    CHECK(bound->exact);
    CHECK_THAT(bound->at(v1(2.0)), Catch::Matchers::WithinAbs(9.0 * 16.0, 1e-12));
}

TEST_CASE("exponential scale: quadrature oracle for the information", "[families]") {
    const auto fam = make_family("exponential");
    const Vec theta = v1(2.0);
    // I(theta) = int s(theta,y)^2 p_theta(y) dy; the inverse must match
    // fisher_inverse.  Also pins the density's normalization.
    const auto density = [&](double y) { return std::exp(fam->log_pdf(theta, v1(y))); };
    const auto integrand = [&](double y) {
        const double s = fam->score(theta, v1(y))[0];
        return s * s * density(y);
    };
    const double info = testutil::simpson(integrand, 0.0, 80.0, 4000);
    CHECK_THAT(1.0 / info, Catch::Matchers::WithinAbs(4.0, 1e-6));
    CHECK_THAT(testutil::simpson(density, 0.0, 80.0, 4000),
               Catch::Matchers::WithinAbs(1.0, 1e-9));
}

TEST_CASE("exponential scale: domain and support errors", "[families]") {
    const auto fam = make_family("exponential");
    CHECK_THROWS_AS(fam->score(v1(0.0), v1(1.0)), martpost::DomainError);
    CHECK_THROWS_AS(fam->score(v1(-1.0), v1(1.0)), martpost::DomainError);
    CHECK_THROWS_AS(fam->fisher_inverse(v2(1.0, 1.0)), martpost::DomainError);
    CHECK_THROWS_AS(fam->score(v1(1.0), v1(-0.5)), martpost::SupportError);
    CHECK(fam->in_domain(v1(1e-12)));
    CHECK_FALSE(fam->in_domain(v1(std::numeric_limits<double>::infinity())));
}

// -------------------------------------------------------- normal, known var --

TEST_CASE("normal location: pinned values and options", "[families]") {
    martpost::FamilyOptions opts;
    opts.sigma2 = 2.0;
    const auto fam = make_family("normal_mean", opts);
    CHECK_THAT(fam->score(v1(1.0), v1(2.0))[0], Catch::Matchers::WithinAbs(0.5, 1e-15));
    CHECK_THAT(fam->fisher_inverse(v1(0.0))(0, 0),
               Catch::Matchers::WithinAbs(2.0, 1e-15));
    CHECK_THAT(fam->natural_gradient(v1(1.0), v1(4.0))[0],
               Catch::Matchers::WithinAbs(3.0, 1e-15));
    const auto bound = fam->moment_bound(v1(0.0));
    REQUIRE(bound.has_value());
    CHECK(bound->exact);
    CHECK_THAT(bound->at(v1(123.0)), Catch::Matchers::WithinAbs(12.0, 1e-12));

    martpost::FamilyOptions bad;
    bad.sigma2 = 0.0;
    CHECK_THROWS_AS(make_family("normal_mean", bad), martpost::ConfigError);
}

// ----------------------------------------------------------- variance only --

TEST_CASE("normal variance: pinned values", "[families]") {
    const auto fam = make_family("normal_var");
    CHECK_THAT(fam->score(v1(2.0), v1(3.0))[0],
               Catch::Matchers::WithinAbs(0.875, 1e-15));
    CHECK_THAT(fam->natural_gradient(v1(2.0), v1(3.0))[0],
               Catch::Matchers::WithinAbs(7.0, 1e-15));
    CHECK_THAT(fam->fisher_inverse(v1(2.0))(0, 0),
               Catch::Matchers::WithinAbs(8.0, 1e-15));
    CHECK_THROWS_AS(fam->score(v1(-2.0), v1(1.0)), martpost::DomainError);
    const auto bound = fam->moment_bound(v1(1.0));
    REQUIRE(bound.has_value());
    CHECK(bound->exact);
    CHECK_THAT(bound->at(v1(1.0)), Catch::Matchers::WithinAbs(60.0, 1e-12));
}

// -------------------------------------------------------- student-t location --

TEST_CASE("heavy-tail location: pinned values", "[families]") {
    const auto fam = make_family("student_t");  // nu = 5 default
    CHECK_THAT(fam->natural_gradient(v1(0.0), v1(1.0))[0],
               Catch::Matchers::WithinAbs(4.0 / 3.0, 1e-15));
    CHECK_THAT(fam->fisher_inverse(v1(0.0))(0, 0),
               Catch::Matchers::WithinAbs(4.0 / 3.0, 1e-15));
    const auto bound = fam->moment_bound(v1(0.0));
    REQUIRE(bound.has_value());
    CHECK_FALSE(bound->exact);
    CHECK_THAT(bound->B, Catch::Matchers::WithinAbs(10.24, 1e-12));

    martpost::FamilyOptions bad;
    bad.nu = 1.0;
    CHECK_THROWS_AS(make_family("student_t", bad), martpost::ConfigError);
}

TEST_CASE("heavy-tail location: increment is uniformly bounded", "[families]") {
    const double nu = 5.0;
    const auto fam = make_family("student_t");
    const double cap = (nu + 3.0) / (2.0 * std::sqrt(nu));
    double max_seen = 0.0;
    for (double r = -50.0; r <= 50.0; r += 0.001) {
        const double z = fam->natural_gradient(v1(0.0), v1(r))[0];
        REQUIRE(std::abs(z) <= cap + 1e-12);
        max_seen = std::max(max_seen, std::abs(z));
    }
    // The cap is attained at r = sqrt(nu).
    CHECK_THAT(fam->natural_gradient(v1(0.0), v1(std::sqrt(nu)))[0],
               Catch::Matchers::WithinAbs(cap, 1e-12));
    CHECK_THAT(max_seen, Catch::Matchers::WithinAbs(cap, 1e-5));
}

TEST_CASE("heavy-tail location: quadrature oracle for the information", "[families]") {
    const auto fam = make_family("student_t");
    const Vec theta = v1(0.5);
    const auto density = [&](double y) { return std::exp(fam->log_pdf(theta, v1(y))); };
    const auto integrand = [&](double y) {
        const double s = fam->score(theta, v1(y))[0];
        return s * s * density(y);
    };
    const double info = testutil::simpson(integrand, -400.0, 400.0, 200000);
    CHECK_THAT(1.0 / info, Catch::Matchers::WithinAbs(4.0 / 3.0, 1e-5));
    CHECK_THAT(testutil::simpson(density, -400.0, 400.0, 200000),
               Catch::Matchers::WithinAbs(1.0, 1e-5));
    // Density value pinned against the closed form at one point.
    const double c = std::exp(std::lgamma(3.0) - std::lgamma(2.5)) /
                     std::sqrt(5.0 * std::acos(-1.0));
    CHECK_THAT(density(0.5), Catch::Matchers::WithinAbs(c, 1e-12));
}

// ------------------------------------------------------- normal mean + var --

TEST_CASE("normal mean and variance: pinned values", "[families]") {
    const auto fam = make_family("normal_meanvar");
    const Vec z = fam->natural_gradient(v2(0.0, 1.0), v1(2.0));
    CHECK_THAT(z[0], Catch::Matchers::WithinAbs(2.0, 1e-15));
    CHECK_THAT(z[1], Catch::Matchers::WithinAbs(3.0, 1e-15));

    const Vec s = fam->score(v2(0.0, 1.0), v1(2.0));
    CHECK_THAT(s[0], Catch::Matchers::WithinAbs(2.0, 1e-15));
    CHECK_THAT(s[1], Catch::Matchers::WithinAbs(1.5, 1e-15));

    const Mat fi = fam->fisher_inverse(v2(0.0, 2.0));
    CHECK_THAT(fi(0, 0), Catch::Matchers::WithinAbs(2.0, 1e-15));
    CHECK_THAT(fi(1, 1), Catch::Matchers::WithinAbs(8.0, 1e-15));
    CHECK_THAT(fi(0, 1), Catch::Matchers::WithinAbs(0.0, 1e-15));

    CHECK_FALSE(fam->moment_bound(v2(0.0, 1.0)).has_value());
    CHECK_THROWS_AS(fam->score(v2(0.0, 0.0), v1(1.0)), martpost::DomainError);
}

// ------------------------------------------------------ multivariate normal --

TEST_CASE("multivariate normal: packing layout", "[families]") {
    MultivariateNormal fam(3);
    CHECK(fam.param_dim() == 9);
    CHECK(fam.s_index(0, 0) == 0);
    CHECK(fam.s_index(1, 1) == 1);
    CHECK(fam.s_index(2, 2) == 2);
    CHECK(fam.s_index(0, 1) == 3);
    CHECK(fam.s_index(0, 2) == 4);
    CHECK(fam.s_index(1, 2) == 5);
    CHECK(fam.s_index(2, 1) == 5);  // symmetric access
    CHECK(fam.param_names() ==
          std::vector<std::string>{"mu1", "mu2", "mu3", "s11", "s22", "s33", "s12",
                                   "s13", "s23"});

    // pack/unpack round-trip.
    Mat sigma(3, 3);
    sigma << 2.0, 0.3, 0.1,  //
        0.3, 1.5, -0.2,      //
        0.1, -0.2, 1.0;
    const Vec mu = (Vec(3) << 1.0, -1.0, 0.5).finished();
    const Vec theta = fam.pack(mu, sigma);
    Vec mu2;
    Mat sigma2;
    fam.unpack(theta, mu2, sigma2);
    CHECK((mu2 - mu).cwiseAbs().maxCoeff() == 0.0);
    CHECK((sigma2 - sigma).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("multivariate normal: pinned values at the identity", "[families]") {
    MultivariateNormal fam(2);
    const Vec theta = (Vec(5) << 0.0, 0.0, 1.0, 1.0, 0.0).finished();

    const Mat fi = fam.fisher_inverse(theta);
    Mat expected = Mat::Zero(5, 5);
    expected(0, 0) = expected(1, 1) = 1.0;  // mean block = Sigma
    expected(2, 2) = 2.0;                   // var(s11) block: 2 s11^2
    expected(3, 3) = 2.0;
    expected(4, 4) = 1.0;  // s12 block: s12^2 + s11 s22
    CHECK((fi - expected).cwiseAbs().maxCoeff() < 1e-14);

    const Vec y = (Vec(2) << 1.0, 2.0).finished();
    const Vec z = fam.natural_gradient(theta, y);
    CHECK_THAT(z[0], Catch::Matchers::WithinAbs(1.0, 1e-15));
    CHECK_THAT(z[1], Catch::Matchers::WithinAbs(2.0, 1e-15));
    CHECK_THAT(z[2], Catch::Matchers::WithinAbs(0.0, 1e-15));
    CHECK_THAT(z[3], Catch::Matchers::WithinAbs(3.0, 1e-15));
    CHECK_THAT(z[4], Catch::Matchers::WithinAbs(2.0, 1e-15));

    const Vec zero = Vec::Zero(2);
    CHECK_THAT(fam.log_pdf(theta, zero),
               Catch::Matchers::WithinAbs(-std::log(2.0 * std::acos(-1.0)) - 0.0,
                                          1e-14));
    CHECK_FALSE(fam.moment_bound(theta).has_value());
}

TEST_CASE("multivariate normal: domain is positive definiteness", "[families]") {
    MultivariateNormal fam(2);
    CHECK(fam.in_domain((Vec(5) << 0.0, 0.0, 1.0, 1.0, 0.5).finished()));
    CHECK_FALSE(fam.in_domain((Vec(5) << 0.0, 0.0, 1.0, 1.0, 1.0).finished()));
    CHECK_FALSE(fam.in_domain((Vec(5) << 0.0, 0.0, -1.0, 1.0, 0.0).finished()));
    CHECK_THROWS_AS(
        fam.score((Vec(5) << 0.0, 0.0, 1.0, 1.0, 2.0).finished(), Vec::Zero(2)),
        martpost::DomainError);
}

TEST_CASE("multivariate normal: one-step covariance update stays PD", "[families]") {
    // The packed increment theta + Z/N applied to (mu, Sigma) is the convex
    // combination (1 - 1/N) Sigma + (1/N) r r^T on the covariance, so the
    // chain cannot leave the parameter space for N >= 2.
    MultivariateNormal fam(3);
    Rng rng(404, 0, StreamClass::misc);
    Mat sigma(3, 3);
    sigma << 1.0, 0.7, 0.7,  //
        0.7, 1.0, 0.7,       //
        0.7, 0.7, 1.0;
    Vec theta = fam.pack(Vec::Zero(3), sigma);
    Vec y(3), z(9);
    for (std::uint64_t n = 2; n < 300; ++n) {
        fam.simulate(theta, rng, y);
        fam.natural_gradient(theta, y, z);
        theta += z / static_cast<double>(n);
        REQUIRE(fam.in_domain(theta));
    }
}

// ----------------------------------------------------- cross-family checks --

TEST_CASE("closed-form increments match the generic path", "[families]") {
    check_closed_form_matches_generic(*make_family("exponential"), v1(2.5), 11);
    check_closed_form_matches_generic(*make_family("normal_mean"), v1(-1.0), 12);
    check_closed_form_matches_generic(*make_family("normal_var"), v1(0.7), 13);
    check_closed_form_matches_generic(*make_family("student_t"), v1(3.0), 14);
    check_closed_form_matches_generic(*make_family("normal_meanvar"), v2(1.0, 2.0), 15);

    MultivariateNormal mvn(3);
    Mat sigma(3, 3);
    sigma << 2.0, 0.3, 0.1,  //
        0.3, 1.5, -0.2,      //
        0.1, -0.2, 1.0;
    const Vec theta = mvn.pack((Vec(3) << 1.0, -1.0, 0.5).finished(), sigma);
    check_closed_form_matches_generic(mvn, theta, 16);
}

TEST_CASE("increment mean is zero and covariance matches the information",
          "[families]") {
    check_increment_moments(*make_family("exponential"), v1(2.0), 200000, 21);
    check_increment_moments(*make_family("normal_mean"), v1(1.0), 200000, 22);
    check_increment_moments(*make_family("normal_var"), v1(2.0), 200000, 23);
    check_increment_moments(*make_family("student_t"), v1(0.0), 200000, 24);
    check_increment_moments(*make_family("normal_meanvar"), v2(1.0, 2.0), 200000, 25);

    MultivariateNormal mvn(2);
    Mat sigma(2, 2);
    sigma << 2.0, 0.6, 0.6, 1.0;
    check_increment_moments(mvn, mvn.pack(v2(1.0, -1.0), sigma), 200000, 26);
}

TEST_CASE("exact fourth-moment values are reproduced by Monte Carlo", "[families]") {
    struct Case {
        const char* family;
        Vec theta;
    };
    for (const auto& c : {Case{"exponential", v1(2.0)}, Case{"normal_mean", v1(3.0)},
                          Case{"normal_var", v1(1.5)}}) {
        const auto fam = make_family(c.family);
        const auto bound = fam->moment_bound(c.theta);
        REQUIRE(bound.has_value());
        REQUIRE(bound->exact);
        Rng rng(31, 2, StreamClass::misc);
        const int n = 400000;
        double acc = 0.0, acc2 = 0.0;
        Vec y(1), z(1);
        for (int i = 0; i < n; ++i) {
            fam->simulate(c.theta, rng, y);
            fam->natural_gradient(c.theta, y, z);
            const double z4 = z[0] * z[0] * z[0] * z[0];
            acc += z4;
            acc2 += z4 * z4;
        }
        const double mean = acc / n;
        const double se = std::sqrt((acc2 / n - mean * mean) / n);
        INFO(c.family << ": mc " << mean << " target " << bound->at(c.theta) << " se "
                      << se);
        CHECK(std::abs(mean - bound->at(c.theta)) <= 4.0 * se);
    }
}

TEST_CASE("family registry", "[families]") {
    for (const char* name : {"exponential", "normal_mean", "normal_var", "student_t",
                             "normal_meanvar", "mvnormal"}) {
        const auto fam = make_family(name);
        CHECK(fam->name() == name);
        CHECK(fam->param_names().size() == static_cast<std::size_t>(fam->param_dim()));
    }
    CHECK_THROWS_AS(make_family("weibull"), martpost::ConfigError);
}

TEST_CASE("simulated observations satisfy their own support checks", "[families]") {
    for (const char* name :
         {"exponential", "normal_mean", "normal_var", "student_t", "normal_meanvar"}) {
        const auto fam = make_family(name);
        const Vec theta = fam->param_dim() == 2 ? v2(0.5, 1.5) : v1(1.5);
        Rng rng(77, 3, StreamClass::misc);
        Vec y(1);
        for (int i = 0; i < 1000; ++i) {
            fam->simulate(theta, rng, y);
            REQUIRE_NOTHROW(fam->require_support(y));
        }
    }
}
