#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "fracback/errors.hpp"
#include "fracback/mlf.hpp"
#include "fracback/regularize.hpp"

#include <cmath>
#include <numbers>

using namespace fracback;

namespace {

constexpr double kPi = std::numbers::pi;

ProblemSpec base_spec(int dim, double alpha, SpectralField phi) {
    ProblemSpec s;
    s.dim = dim;
    s.alpha = alpha;
    s.T = 1.0;
    s.phi_hat = std::move(phi);
    return s;
}

/// Source for u = t sin x, so that u_t - D^{1-a} u_xx = f.
SourceTerm manufactured_1d(double alpha, double K) {
    SourceTerm st;
    const double g = 1.0 / std::tgamma(1.0 + alpha);
    st.f = [alpha, K, g](double t, std::span<const double> x, double u) {
        const double s = std::sin(x[0]);
        return s * (1.0 + std::pow(t, alpha) * g) + K * (std::sin(u) - std::sin(t * s));
    };
    st.depends_on_u = K != 0.0;
    return st;
}

double exact_coeff(double t) { return t * std::sqrt(kPi / 2.0); }

}  // namespace

TEST_CASE("composite time weights integrate cubics exactly") {
    for (int m = 2; m <= 9; ++m) {
        const auto w = simpson_weights(m);
        REQUIRE(w.size() == static_cast<std::size_t>(m + 1));
        const double h = 0.3;
        double s = 0.0;
        for (int k = 0; k <= m; ++k) {
            const double t = k * h;
            s += h * w[k] * (t * t * t - 2.0 * t + 1.0);
        }
        const double b = m * h;
        CHECK(s == doctest::Approx(b * b * b * b / 4.0 - b * b + b).epsilon(1e-13));
    }
    const auto w1 = simpson_weights(1);
    CHECK(w1[0] == doctest::Approx(0.5));
    CHECK(w1[1] == doctest::Approx(0.5));
}

TEST_CASE("time grid lookup") {
    const auto g = TimeGrid::uniform(1.0, 11);
    CHECK(g.index_of(0.3) == 3);
    CHECK(g.index_of(1.0) == 10);
    CHECK_THROWS_AS(g.index_of(0.35), NodeMismatchError);
    CHECK_THROWS_AS(TimeGrid::uniform(1.0, 10), DomainError);
}

TEST_CASE("filter factors") {
    const ModeIndex j{2};
    const auto kept = make_rectangle({3});
    CHECK(filter_factor(FilterSpec::truncation(kept), j, 0.4, 0.2) == doctest::Approx(2.0));
    CHECK(filter_factor(FilterSpec::truncation(kept), ModeIndex{4}, 0.4, 0.2) == 0.0);
    CHECK(filter_factor(FilterSpec::quasi_boundary(0.1), j, 0.4, 0.2) == doctest::Approx(0.4 / 0.3));
}

TEST_CASE("op_A on a single mode is the Mittag-Leffler ratio") {
    const double a = 0.4;
    SpectralField phi(make_rectangle({2, 2}), {1.0, 0.0, 0.0, 2.0});
    const auto spec = base_spec(2, a, phi);
    const auto out = op_A(0.25, phi, spec, FilterSpec::truncation(phi.modes_ptr()));
    const double r = mlf::ml_eval(a, 1.0, -8.0 * std::pow(0.25, a)) / mlf::ml_eval(a, 1.0, -8.0);
    CHECK(out.coeff(ModeIndex{2, 2}) == doctest::Approx(2.0 * r).epsilon(1e-13));
}

TEST_CASE("zero source backward solve is exact per mode") {
    const double a = 0.6;
    SpectralField phi(make_rectangle({3}), {0.5, -0.2, 0.1});
    const auto spec = base_spec(1, a, phi);
    const auto res = solve_backward(spec, FilterSpec::truncation(phi.modes_ptr()), TimeGrid::uniform(1.0, 21));
    CHECK(res.iterations == 1);
    for (int j = 1; j <= 3; ++j) {
        const double lam = j * j;
        const double e = mlf::ml_eval(a, 1.0, -lam * std::pow(0.4, a)) / mlf::ml_eval(a, 1.0, -lam);
        CHECK(res.at(0.4).coeff(ModeIndex{j}) == doctest::Approx(phi.coeff(ModeIndex{j}) * e).epsilon(1e-12));
    }
}

TEST_CASE("round trip forward then backward with f = 0") {
    SpectralField u0(make_rectangle({1, 1}), {1.0});
    auto spec = base_spec(2, 0.5, u0);
    const auto grid = TimeGrid::uniform(1.0, 41);
    const auto fwd = solve_forward(u0, spec, grid);
    spec.phi_hat = fwd.trajectory.back();
    const auto back = solve_backward(spec, FilterSpec::truncation(spec.phi_hat.modes_ptr()), grid);
    CHECK(std::abs(back.trajectory.front()[0] - 1.0) < 1e-8);
}

TEST_CASE("heat equation limit alpha = 1") {
    SpectralField u0(make_rectangle({2}), {1.0, 1.0});
    auto spec = base_spec(1, 1.0, u0);
    spec.allow_alpha_one = true;
    const auto fwd = solve_forward(u0, spec, TimeGrid::uniform(1.0, 11));
    CHECK(fwd.at(0.5).coeff(ModeIndex{2}) == doctest::Approx(std::exp(-2.0)).epsilon(1e-13));
    spec.allow_alpha_one = false;
    CHECK_THROWS_AS(solve_forward(u0, spec, TimeGrid::uniform(1.0, 11)), DomainError);
}

TEST_CASE("manufactured solution is recovered and the time error decreases with refinement") {
    const double a = 0.3;
    SpectralField phi(make_rectangle({3}), {exact_coeff(1.0), 0.0, 0.0});
    auto spec = base_spec(1, a, phi);
    spec.source = manufactured_1d(a, 0.0);
    std::vector<double> errs;
    for (int nt : {21, 81, 321}) {
        const auto res = solve_backward(spec, FilterSpec::truncation(phi.modes_ptr()), TimeGrid::uniform(1.0, nt));
        double err = 0.0;
        for (int m = 0; m < res.grid.size(); ++m) {
            const double t = res.grid[m];
            SpectralField ex(make_rectangle({3}), {exact_coeff(t), 0.0, 0.0});
            err = std::max(err, distance(res.trajectory[static_cast<std::size_t>(m)], ex));
        }
        errs.push_back(err);
    }
    // quadrupling the node count must gain at least a factor 4 (first order or better)
    CHECK(errs[0] / errs[1] > 4.0);
    CHECK(errs[1] / errs[2] > 4.0);
    CHECK(errs[2] < 5e-4);
}

TEST_CASE("Lipschitz reaction converges with contraction ratios below one") {
    const double a = 0.3;
    const double K = 0.1;
    REQUIRE(K * q_constant(a, 1.0) < 1.0);
    SpectralField phi(make_rectangle({3}), {exact_coeff(1.0), 0.0, 0.0});
    auto spec = base_spec(1, a, phi);
    spec.source = manufactured_1d(a, K);
    spec.lipschitz_K = K;
    SolverOptions opts;
    opts.tol = 1e-10;
    const auto res = solve_backward(spec, FilterSpec::truncation(phi.modes_ptr()), TimeGrid::uniform(1.0, 101), opts);
    CHECK(res.iterations <= 50);
    CHECK(res.residual <= 1e-10);
    for (double q : res.contraction_ratios) CHECK(q < 1.0);
    CHECK(res.warnings.empty());
    CHECK(res.at(0.5).coeff(ModeIndex{1}) == doctest::Approx(exact_coeff(0.5)).epsilon(1e-3));
}

TEST_CASE("strong reaction is rejected") {
    SpectralField phi(make_rectangle({2}), {1.0, 0.5});
    auto spec = base_spec(1, 0.5, phi);
    const double K = 40.0;
    spec.source.f = [K](double, std::span<const double>, double u) { return K * u; };
    spec.lipschitz_K = K;
    SolverOptions opts;
    opts.max_iter = 60;
    CHECK_THROWS_AS(solve_backward(spec, FilterSpec::quasi_boundary(1e-3), TimeGrid::uniform(1.0, 21), opts), Error);
}

TEST_CASE("quasi-boundary tends to truncation as theta shrinks") {
    SpectralField phi(make_rectangle({3}), {1.0, 0.3, -0.2});
    const auto spec = base_spec(1, 0.5, phi);
    const auto grid = TimeGrid::uniform(1.0, 11);
    const auto tr = solve_backward(spec, FilterSpec::truncation(phi.modes_ptr()), grid);
    double prev = 1e9;
    for (double th : {1e-2, 1e-4, 1e-6}) {
        const auto q = solve_backward(spec, FilterSpec::quasi_boundary(th), grid);
        const double gap = distance(q.trajectory.front(), tr.trajectory.front());
        CHECK(gap < prev);
        prev = gap;
    }
    CHECK(prev < 1e-3);
}

TEST_CASE("contraction constant formula") {
    const double a = 0.4, T = 2.0, m1 = 0.5, m2 = 1.5;
    const double expected = 2 * m2 * T * std::sqrt(2 * (m1 * m1 * 0.36 + m2 * m2)) / (m1 * 0.6);
    CHECK(q_constant(a, T, m1, m2) == doctest::Approx(expected));
}

TEST_CASE("filter verification") {
    SpectralField phi(make_rectangle({4}), {1.0, 0.0, 0.0, 0.0});
    const auto spec = base_spec(1, 0.5, phi);
    const auto grid = TimeGrid::uniform(1.0, 11);
    const auto modes = ModeSet::rectangle({4});
    const auto tik = FilterSpec::tikhonov(1e-2, 0.5, 1.0);
    const auto rep = verify_filter(tik, spec, modes, grid, 2.0);
    CHECK(rep.ok);
    GeneralFilter bad{"identity", [](const ModeIndex&) { return 1.0; }, 0.1, 0.0, 1.0};
    CHECK_FALSE(verify_filter(FilterSpec{bad}, spec, modes, grid, 1.0).ok);
}
