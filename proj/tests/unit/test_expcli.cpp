#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "fracback/errors.hpp"
#include "fracback/experiment.hpp"
#include "fracback/report.hpp"
#include "fracback/scenario.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <sstream>

using namespace fracback;
namespace fs = std::filesystem;

namespace {

constexpr double kPi = std::numbers::pi;

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

fs::path scratch(const std::string& name) {
    auto p = fs::temp_directory_path() / ("fracback_test_" + name);
    fs::remove_all(p);
    return p;
}

Scenario small_case() {
    Scenario s = builtin_scenario("case1");
    s.n = {20};
    s.nt = 21;
    s.seed_count = 4;
    s.times = {0.3, 0.5};
    return s;
}

/// Trajectory holding the given field at every node.
SolveResult constant_trajectory(const SpectralField& f, int nt) {
    SolveResult r;
    r.grid = TimeGrid::uniform(1.0, nt);
    r.trajectory.assign(static_cast<std::size_t>(nt), f);
    return r;
}

}  // namespace

TEST_CASE("scenario parsing") {
    std::istringstream in(R"(# comment
name = demo
alpha = 0.4   # trailing comment
n = 30
dim = 2
N = 2, 3
seeds = 3, 7-9
times = 0.2,0.6
method = qbv
)");
    const auto s = parse_scenario(in);
    CHECK(s.name == "demo");
    CHECK(s.dim == 2);
    CHECK(s.n == std::vector<int>{30, 30});
    CHECK(s.N == std::vector<int>{2, 3});
    CHECK(s.seed_list() == std::vector<std::uint64_t>{3, 7, 8, 9});
    CHECK(s.method == Method::QuasiBoundary);

    std::stringstream out;
    write_scenario(out, s);
    const auto back = parse_scenario(out);
    CHECK(back.to_map() == s.to_map());
}

TEST_CASE("scenario errors") {
    std::istringstream bad_key("colour = red\n");
    CHECK_THROWS_AS(parse_scenario(bad_key), ScenarioError);
    std::istringstream bad_num("alpha = fast\n");
    CHECK_THROWS_AS(parse_scenario(bad_num), ScenarioError);
    std::istringstream bad_alpha("alpha = 1.5\n");
    CHECK_THROWS_AS(parse_scenario(bad_alpha), ScenarioError);
    std::istringstream bad_reps("replications = 0\n");
    CHECK_THROWS_AS(parse_scenario(bad_reps), ScenarioError);
    CHECK_THROWS_AS(builtin_scenario("case9"), ScenarioError);
}

TEST_CASE("built-in cases") {
    const auto c1 = builtin_scenario("case1");
    CHECK(c1.alpha == 0.3);
    CHECK(c1.cutoffs() == std::vector<int>{3});
    const auto c2 = builtin_scenario("case2");
    CHECK(c2.n == std::vector<int>{50, 50});
    CHECK(c2.eps == 0.015);
}

TEST_CASE("manufactured solution and its spectral form agree") {
    const auto s = builtin_scenario("case2");
    const ManufacturedProblem mp(s);
    const double x[2] = {0.4, 2.2};
    CHECK(mp.exact_field(0.7).evaluate(x) == doctest::Approx(mp.exact(0.7, x)).epsilon(1e-14));
    CHECK(mp.norm(0.7, 1.0) == doctest::Approx(mp.exact_field(0.7).sobolev_norm(1.0)));
}

TEST_CASE("metric oracles") {
    const auto s = small_case();
    const ManufacturedProblem mp(s);
    const auto exact = exact_solution(mp);
    const auto modes = make_rectangle({1});

    SUBCASE("exact trajectory gives zero error") {
        SolveResult r;
        r.grid = TimeGrid::uniform(1.0, 21);
        for (double t : r.grid.nodes()) r.trajectory.push_back(mp.exact_field(t));
        for (const auto& m : compute_metrics(r, exact, s, {0.3, 1.0})) {
            CHECK(m.err_rms < 1e-15);
            CHECK(m.err_L2 < 1e-15);
        }
    }
    SUBCASE("constant grid offset gives err_rms = |c|") {
        const double c = 0.125;
        ExactSolution shifted = exact;
        shifted.point = [&](double t, std::span<const double> x) { return mp.exact(t, x) + c; };
        SolveResult r;
        r.grid = TimeGrid::uniform(1.0, 21);
        for (double t : r.grid.nodes()) r.trajectory.push_back(mp.exact_field(t));
        CHECK(compute_metrics(r, shifted, s, {0.5})[0].err_rms == doctest::Approx(c));
    }
    SUBCASE("single-mode discrepancy in two dimensions") {
        auto s2 = builtin_scenario("case2");
        s2.sigma = 1.0;
        const ManufacturedProblem mp2(s2);
        const double delta = 0.01;
        auto f = mp2.exact_field(0.5);
        f[0] += delta;
        const auto m = compute_metrics(constant_trajectory(f, 21), exact_solution(mp2), s2, {0.5})[0];
        CHECK(m.err_L2 == doctest::Approx(delta));
        CHECK(*m.err_Hsigma == doctest::Approx(std::sqrt(2.0) * delta));
        // prod_k sin^2 over the midpoint grid sums to (n/2)^2, so err_rms = delta (2/pi) / 2
        CHECK(m.err_rms == doctest::Approx(delta / kPi));
    }
    SUBCASE("projected exact solution when no spectral form is given") {
        ExactSolution point_only{exact.point, {}};
        SolveResult r;
        r.grid = TimeGrid::uniform(1.0, 21);
        for (double t : r.grid.nodes()) r.trajectory.push_back(mp.exact_field(t));
        CHECK(compute_metrics(r, point_only, s, {0.5})[0].err_L2 < 1e-10);
    }
    SUBCASE("times off the grid") {
        SolveResult r = constant_trajectory(SpectralField(modes, {0.0}), 21);
        CHECK_THROWS_AS(compute_metrics(r, exact, s, {0.33}), NodeMismatchError);
    }
}

TEST_CASE("zero-noise case 1 is limited by discretization only") {
    auto s = builtin_scenario("case1");
    s.eps = 0.0;
    s.seed_count = 1;
    const auto res = run_scenario(s);
    REQUIRE(res.failures == 0);
    for (const auto& r : res.summary) CHECK(r.mean_err_rms <= 1e-3);
}

TEST_CASE("identical seeds give byte-identical outputs") {
    const auto s = small_case();
    const auto a = scratch("det_a");
    const auto b = scratch("det_b");
    run_scenario(s, {a.string(), true, true, 2});
    run_scenario(s, {b.string(), false, false, 1});
    CHECK(slurp(a / "metrics.csv") == slurp(b / "metrics.csv"));
    CHECK(slurp(a / "summary.csv") == slurp(b / "summary.csv"));
    CHECK(slurp(a / "errors.svg").find("<svg") != std::string::npos);
    CHECK(fs::exists(a / "manifest.json"));
    CHECK_FALSE(fs::exists(a / "metrics.csv.tmp"));
    CHECK(slurp(a / "metrics.csv").rfind("scenario,seed,t,err_rms,err_L2,err_Hsigma,bound\n", 0) == 0);
    fs::remove_all(a);
    fs::remove_all(b);
}

TEST_CASE("failing seeds are recorded, not thrown") {
    auto s = small_case();
    s.N = {25};
    const auto dir = scratch("fail");
    const auto res = run_scenario(s, {dir.string(), false, false, 1});
    CHECK(res.failures == 4);
    CHECK(slurp(dir / "manifest.txt").find("failures = 4") != std::string::npos);
    fs::remove_all(dir);
}

TEST_CASE("log-log slope and convergence preconditions") {
    CHECK(loglog_slope({1, 2, 4, 8}, {3, 1.5, 0.75, 0.375}) == doctest::Approx(-1.0));
    CHECK_THROWS_AS(convergence_study(small_case(), {20, 40}), DomainError);
}

TEST_CASE("ill-posedness demo data term") {
    const auto res = illposed_demo({8, 16}, 0.3, 1, 30);
    REQUIRE(res.rows.size() == 2);
    CHECK(res.rows[1].expected_phi_sq == doctest::Approx(kPi * kPi * 225.0 / 4096.0));
    for (const auto& r : res.rows) CHECK(std::abs(r.mean_phi_sq - r.expected_phi_sq) < 3.0 * r.ci_phi_sq);
    CHECK(res.rows[1].mean_u0 > res.rows[0].mean_u0);
    CHECK(res.rows[1].top_amplification > res.rows[0].top_amplification);
    CHECK_THROWS_AS(illposed_demo({8}, 0.6, 1, 5), DomainError);
}

TEST_CASE("csv table and svg emitter") {
    CsvTable t{{"a", "b"}, {}};
    t.add({"1", "2"});
    CHECK(t.str() == "a,b\n1,2\n");
    CHECK_THROWS_AS(t.add({"1"}), ShapeError);
    CHECK(format_double(0.3) == "0.3");
    const auto svg = svg_line_plot({{"s", {1, 2, 3}, {1, 4, 9}}}, {"title <x>", "x", "y", false, true});
    CHECK(svg.find("title &lt;x&gt;") != std::string::npos);
    CHECK(svg.find("<polyline") != std::string::npos);
}
