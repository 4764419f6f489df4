#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "fracback/bounds.hpp"
#include "fracback/errors.hpp"
#include "fracback/mlf.hpp"
#include "fracback/observe.hpp"
#include "fracback/regularize.hpp"

#include <boost/math/special_functions/zeta.hpp>

#include <cmath>
#include <numbers>

using namespace fracback;

namespace {

constexpr double kPi = std::numbers::pi;

BoundParams rect_params() {
    BoundParams p;
    p.dim = 2;
    p.alpha = 0.5;
    p.T = 1.0;
    p.eps_max = 0.015;
    p.n = {50, 50};
    p.N = {3, 3};
    p.theta = 3.0;
    p.phi_norm = [](double s) { return (kPi / 2.0) * std::pow(2.0, s / 2.0); };
    p.u_sup_norm = p.phi_norm;
    p.u0_norm = [](double) { return 0.0; };
    return p;
}

}  // namespace

TEST_CASE("C(mu) against an independent zeta") {
    const std::vector<double> mu{0.75, 1.5};
    double prod = 1.0;
    for (double m : mu) prod *= 1.0 + (1.0 - std::pow(2.0, -2 * m)) * boost::math::zeta(2 * m);
    CHECK(c_mu(mu) == doctest::Approx(std::pow(2.0, -0.75) * (prod - 1.0)).epsilon(1e-10));
    CHECK_THROWS_AS(c_mu({0.5}), DomainError);
}

TEST_CASE("rectangle estimator bound formula") {
    const auto p = rect_params();
    const double c0 = 2 * boost::math::zeta(3.0) + 4 * std::pow(boost::math::zeta(1.5), 2);
    const double phi2 = std::pow(p.phi_norm(3.0), 2);
    const double ratio = 9.0 / 2500.0;
    const double bias = 2 * std::pow(4.0, -6.0);
    const double expected = (2 * kPi * kPi * 0.015 * 0.015 + 2 * c0 * c0 * phi2) * ratio + 2 * bias * phi2;
    CHECK(theoretical_bound(BoundKind::EstimatorRect, p).value == doctest::Approx(expected).epsilon(1e-10));
}

TEST_CASE("rectangle estimator bound dominates the Monte-Carlo risk") {
    auto p = rect_params();
    const GridSpec g(p.n);
    SpectralField phi(make_rectangle({1, 1}), {kPi / 2.0});
    const auto risk = empirical_risk(phi, RiskConfig{g, NoiseScale::scalar(p.eps_max), EstimatorSpec{RectangleShape{p.N}}},
                                     60, 3);
    CHECK(risk.mean + risk.ci_halfwidth <= theoretical_bound(BoundKind::EstimatorRect, p).value);
}

TEST_CASE("time-resolved truncation bound never exceeds the uniform one") {
    auto p = rect_params();
    const double uniform = theoretical_bound(BoundKind::TruncationUniform, p).value;
    for (double t : {0.0, 0.3, 0.8, 1.0}) {
        p.time = t;
        CHECK(theoretical_bound(BoundKind::TruncationAtTime, p).value <= uniform);
    }
}

TEST_CASE("time-resolved truncation bound decreases along the log schedule") {
    double prev = 1e300;
    for (int n : {25, 50, 100, 200}) {
        BoundParams p;
        p.dim = 1;
        p.alpha = 0.3;
        p.T = 1.0;
        p.eps_max = 0.01;
        p.n = {n};
        p.N = {log_schedule(n)};
        p.theta = 3.0;
        p.time = 0.3;
        p.phi_norm = [](double) { return std::sqrt(kPi / 2.0); };
        p.u_sup_norm = p.phi_norm;
        const double b = theoretical_bound(BoundKind::TruncationAtTime, p).value;
        CHECK(b < prev);
        prev = b;
    }
}

TEST_CASE("nonlinear bounds use the contraction margin") {
    auto p = rect_params();
    const double linear = theoretical_bound(BoundKind::TruncationUniform, p).value;
    const double Q = q_constant(p.alpha, p.T);
    p.lipschitz_K = 0.5 / Q;
    CHECK(theoretical_bound(BoundKind::TruncationUniform, p).value == doctest::Approx(linear / 0.75));
    p.lipschitz_K = 1.0 / Q;
    CHECK_THROWS_AS(theoretical_bound(BoundKind::TruncationUniform, p), UnsupportedError);
}

TEST_CASE("quasi-boundary bound formula") {
    auto p = rect_params();
    p.gamma = 9.0;
    p.qbv_theta = 0.05;
    p.mu = {0.75, 0.75};
    p.mu_circ = 1.5;
    const auto& env = mlf::default_envelope(0.5, mlf::EnvelopeFamily::AlphaOne);
    const double vol = kPi;  // area of the unit disc
    const double g = std::pow(9.0, 1.0);
    const double cm = c_mu(p.mu);
    const double est = 2 * vol * g * kPi * kPi * 0.015 * 0.015 / 2500.0 +
                       2 * vol * g * cm * cm * std::pow(p.phi_norm(1.5), 2) * std::pow(50.0, -6.0) +
                       std::pow(9.0, -1.5) * std::pow(p.phi_norm(1.5), 2);
    const double expected = 4 * env.m2 * env.m2 / (0.05 * 0.05) * est;
    CHECK(theoretical_bound(BoundKind::QuasiBoundaryL2, p).value == doctest::Approx(expected).epsilon(1e-10));
}

TEST_CASE("hypothesis violations are reported") {
    auto p = rect_params();
    p.theta = 2.0;
    CHECK_THROWS_AS(theoretical_bound(BoundKind::EstimatorRect, p), UnsupportedError);
    p = rect_params();
    p.N = {50, 3};
    CHECK_THROWS_AS(theoretical_bound(BoundKind::EstimatorRect, p), UnsupportedError);
    p = rect_params();
    p.phi_norm = nullptr;
    CHECK_THROWS_AS(theoretical_bound(BoundKind::EstimatorRect, p), UnsupportedError);
    p = rect_params();
    p.gamma = 9.0;
    p.mu = {0.5, 0.75};
    p.mu_circ = 1.5;
    CHECK_THROWS_AS(theoretical_bound(BoundKind::EstimatorBall, p), UnsupportedError);
}
