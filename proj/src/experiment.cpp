#include "fracback/experiment.hpp"

#include "fracback/bounds.hpp"
#include "fracback/errors.hpp"
#include "fracback/mlf.hpp"
#include "fracback/observe.hpp"
#include "fracback/report.hpp"
#include "parallel.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <numbers>
#include <numeric>
#include <sstream>

namespace fracback {

namespace {

constexpr double kPi = std::numbers::pi;

std::vector<int> square(int d, int n) { return std::vector<int>(static_cast<std::size_t>(d), n); }

std::string opt(const std::optional<double>& v) { return v ? format_double(*v) : ""; }

struct Stats {
    double mean = 0.0;
    double ci = 0.0;
};

Stats stats(const std::vector<double>& v) {
    Stats s;
    if (v.empty()) return s;
    s.mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
    if (v.size() > 1) {
        double ss = 0.0;
        for (double x : v) ss += (x - s.mean) * (x - s.mean);
        s.ci = 1.96 * std::sqrt(ss / static_cast<double>(v.size() - 1)) / std::sqrt(static_cast<double>(v.size()));
    }
    return s;
}

FilterSpec make_filter(const Scenario& s, const SpectralField& phi_hat) {
    switch (s.method) {
        case Method::Truncation: return FilterSpec::truncation(phi_hat.modes_ptr());
        case Method::QuasiBoundary: return FilterSpec::quasi_boundary(s.theta_or_default());
        case Method::Filter: return FilterSpec::tikhonov(s.theta_or_default(), s.alpha, s.T);
    }
    throw DomainError("unknown method");
}

EstimatorSpec make_estimator(const Scenario& s) {
    if (s.method == Method::Truncation) return EstimatorSpec{RectangleShape{s.cutoffs()}};
    return EstimatorSpec{BallShape{s.gamma_or_default()}};
}

BoundParams bound_params(const Scenario& s) {
    const ManufacturedProblem mp(s);
    BoundParams p;
    p.dim = s.dim;
    p.alpha = s.alpha;
    p.T = s.T;
    p.lipschitz_K = s.lipschitz_K;
    p.eps_max = s.eps;
    p.n = s.n;
    p.N = s.cutoffs();
    p.theta = s.smoothness;
    p.gamma = s.gamma_or_default();
    p.qbv_theta = s.theta_or_default();
    p.mu = s.mu_or_default();
    p.mu_circ = s.mu_circ_or_default();
    p.sigma = s.sigma;
    const double T = s.T;
    p.phi_norm = [mp, T](double k) { return mp.norm(T, k); };
    p.u0_norm = [mp](double k) { return mp.norm(0.0, k); };
    p.u_sup_norm = [mp, T](double k) { return mp.norm(T, k); };
    if (s.method == Method::Filter) {
        const auto f = FilterSpec::tikhonov(s.theta_or_default(), s.alpha, s.T);
        const auto& g = std::get<GeneralFilter>(f.kind);
        p.c_dagger = g.c_dagger;
        p.c_ddagger = g.c_ddagger;
        p.q = g.q;
    }
    return p;
}

std::optional<double> try_bound(BoundKind kind, const BoundParams& p) {
    try {
        return std::sqrt(theoretical_bound(kind, p).value);
    } catch (const UnsupportedError&) {
        return std::nullopt;
    }
}

}  // namespace

ExactSolution exact_solution(const ManufacturedProblem& p) {
    ExactSolution e;
    e.point = [p](double t, std::span<const double> x) { return p.exact(t, x); };
    e.field = [p](double t) { return p.exact_field(t); };
    return e;
}

std::vector<MetricRecord> compute_metrics(const SolveResult& traj, const ExactSolution& exact, const Scenario& s,
                                          const std::vector<double>& times) {
    const GridSpec grid(s.n);
    std::vector<double> x(static_cast<std::size_t>(s.dim));
    std::vector<MetricRecord> out;
    for (double t : times) {
        const auto& u = traj.at(t);
        MetricRecord r;
        r.t = traj.grid[traj.grid.index_of(t)];
        const auto vals = evaluate_on_grid(u, grid);
        double ss = 0.0;
        for (std::size_t k = 0; k < grid.size(); ++k) {
            grid.point(k, x);
            const double d = vals[k] - exact.point(r.t, x);
            ss += d * d;
        }
        r.err_rms = std::sqrt(ss / static_cast<double>(grid.size()));
        SpectralField ex;
        if (exact.field) {
            ex = exact.field(r.t);
        } else {
            const double tt = r.t;
            const auto rule = QuadratureRule::simpson(
                s.dim, std::max(QuadratureRule::default_nodes(s.dim), 2 * u.modes().max_frequency() + 1) | 1);
            ex = project([&](std::span<const double> p) { return exact.point(tt, p); }, u.modes_ptr(), rule);
        }
        r.err_L2 = distance(u, ex, 0.0);
        if (s.sigma > 0.0) r.err_Hsigma = distance(u, ex, s.sigma);
        out.push_back(r);
    }
    return out;
}

std::optional<double> scenario_bound(const Scenario& s, double t) {
    BoundParams p = bound_params(s);
    p.time = t;
    switch (s.method) {
        case Method::Truncation: return try_bound(BoundKind::TruncationAtTime, p);
        case Method::QuasiBoundary: return try_bound(BoundKind::QuasiBoundaryL2, p);
        case Method::Filter: return try_bound(BoundKind::FilterSobolev, p);
    }
    return std::nullopt;
}

std::optional<double> scenario_uniform_bound(const Scenario& s) {
    if (s.method != Method::Truncation) return scenario_bound(s, s.T);
    return try_bound(BoundKind::TruncationUniform, bound_params(s));
}

double RunResult::xt_error() const {
    double best = 0.0;
    for (const auto& r : summary) best = std::max(best, r.rms_err_L2);
    return best;
}

SolveResult solve_realization(const Scenario& s, std::uint64_t seed, std::uint64_t stream, const SolverOptions& solver) {
    const ManufacturedProblem mp(s);
    const GridSpec grid(s.n);
    std::vector<double> x(static_cast<std::size_t>(s.dim));
    std::vector<double> exact(grid.size());
    for (std::size_t k = 0; k < grid.size(); ++k) {
        grid.point(k, x);
        exact[k] = mp.exact(s.T, x);
    }
    const auto obs = observe_values(std::move(exact), grid, NoiseScale::scalar(s.eps), SeedRecord{seed, stream, {}});
    ProblemSpec spec;
    spec.dim = s.dim;
    spec.alpha = s.alpha;
    spec.T = s.T;
    spec.source = mp.source();
    spec.lipschitz_K = s.lipschitz_K;
    spec.phi_hat = estimate(obs, make_estimator(s));
    return solve_backward(spec, make_filter(s, spec.phi_hat), TimeGrid::uniform(s.T, s.nt), solver);
}

RunResult run_scenario(const Scenario& s, const RunOptions& opts) {
    s.validate();
    RunResult res;
    res.scenario = s;
    const auto seeds = s.seed_list();
    res.seeds.resize(seeds.size());
    const ExactSolution exact = exact_solution(ManufacturedProblem(s));
    const TimeGrid tgrid = TimeGrid::uniform(s.T, s.nt);
    res.nodes = tgrid.nodes();
    SolverOptions solver;
    solver.tol = s.tol;
    solver.max_iter = s.max_iter;
    solver.quad_nodes = s.quad_nodes;
    solver.threads = 1;
    std::vector<std::optional<double>> bounds;
    for (double t : s.times) bounds.push_back(scenario_bound(s, t));

    detail::parallel_for(seeds.size(), [&](std::size_t i) {
        SeedOutcome& o = res.seeds[i];
        o.seed = seeds[i];
        try {
            std::vector<std::vector<MetricRecord>> reps;
            std::vector<double> curve(static_cast<std::size_t>(s.nt), 0.0);
            for (int r = 0; r < s.replications; ++r) {
                const auto sol = solve_realization(s, o.seed, static_cast<std::uint64_t>(r), solver);
                o.iterations = std::max(o.iterations, sol.iterations);
                for (double q : sol.contraction_ratios) o.max_ratio = std::max(o.max_ratio, q);
                for (const auto& w : sol.warnings) o.warnings.push_back(w);
                auto m = compute_metrics(sol, exact, s, s.times);
                for (std::size_t k = 0; k < m.size(); ++k) m[k].bound = bounds[k];
                reps.push_back(std::move(m));
                const auto all = compute_metrics(sol, exact, s, tgrid.nodes());
                for (std::size_t k = 0; k < all.size(); ++k) curve[k] += all[k].err_rms / s.replications;
            }
            o.metrics = reps[0];
            for (std::size_t k = 0; k < o.metrics.size(); ++k) {
                double a = 0.0, b = 0.0, c = 0.0;
                for (const auto& rep : reps) {
                    a += rep[k].err_rms;
                    b += rep[k].err_L2;
                    c += rep[k].err_Hsigma.value_or(0.0);
                }
                const double R = static_cast<double>(reps.size());
                o.metrics[k].err_rms = a / R;
                o.metrics[k].err_L2 = b / R;
                if (o.metrics[k].err_Hsigma) o.metrics[k].err_Hsigma = c / R;
            }
            o.curve = std::move(curve);
            o.ok = true;
        } catch (const std::exception& e) {
            o.ok = false;
            o.error = e.what();
            o.metrics.clear();
        }
    }, opts.threads);

    for (const auto& o : res.seeds) res.failures += o.ok ? 0 : 1;
    for (std::size_t k = 0; k < s.times.size(); ++k) {
        SummaryRow row;
        row.t = tgrid[tgrid.index_of(s.times[k])];
        row.bound = bounds[k];
        std::vector<double> rms;
        double l2 = 0.0, l2sq = 0.0;
        for (const auto& o : res.seeds) {
            if (!o.ok) continue;
            rms.push_back(o.metrics[k].err_rms);
            l2 += o.metrics[k].err_L2;
            l2sq += o.metrics[k].err_L2 * o.metrics[k].err_L2;
        }
        row.seeds_ok = static_cast<int>(rms.size());
        const auto st = stats(rms);
        row.mean_err_rms = st.mean;
        row.ci_err_rms = st.ci;
        if (row.seeds_ok > 0) {
            row.mean_err_L2 = l2 / row.seeds_ok;
            row.rms_err_L2 = std::sqrt(l2sq / row.seeds_ok);
        }
        res.summary.push_back(row);
    }

    if (opts.out.empty()) return res;
    namespace fs = std::filesystem;
    const fs::path dir(opts.out);

    CsvTable metrics{{"scenario", "seed", "t", "err_rms", "err_L2", "err_Hsigma", "bound"}, {}};
    for (const auto& o : res.seeds) {
        for (const auto& m : o.metrics) {
            metrics.add({s.name, std::to_string(o.seed), format_double(m.t), format_double(m.err_rms),
                         format_double(m.err_L2), opt(m.err_Hsigma), opt(m.bound)});
        }
    }
    write_file_atomic((dir / "metrics.csv").string(), metrics.str());

    CsvTable summary{{"scenario", "t", "mean_err_rms", "ci95_err_rms", "mean_err_L2", "rms_err_L2", "bound", "seeds_ok"},
                     {}};
    for (const auto& r : res.summary) {
        summary.add({s.name, format_double(r.t), format_double(r.mean_err_rms), format_double(r.ci_err_rms),
                     format_double(r.mean_err_L2), format_double(r.rms_err_L2), opt(r.bound),
                     std::to_string(r.seeds_ok)});
    }
    write_file_atomic((dir / "summary.csv").string(), summary.str());

    std::vector<double> mean_curve(res.nodes.size(), 0.0);
    int ok = 0;
    for (const auto& o : res.seeds) {
        if (!o.ok) continue;
        ++ok;
        for (std::size_t k = 0; k < mean_curve.size(); ++k) mean_curve[k] += o.curve[k];
    }
    CsvTable curve{{"t", "mean_err_rms"}, {}};
    for (std::size_t k = 0; k < mean_curve.size(); ++k) {
        if (ok > 0) mean_curve[k] /= ok;
        curve.add({format_double(res.nodes[k]), format_double(mean_curve[k])});
    }
    write_file_atomic((dir / "curve.csv").string(), curve.str());

    auto manifest = s.to_map();
    manifest["seeds_run"] = std::to_string(seeds.size());
    manifest["failures"] = std::to_string(res.failures);
    manifest["rng"] = SeedRecord{}.generator;
    manifest["estimator"] = s.method == Method::Truncation ? "rectangle" : "ball";
    manifest["cutoffs"] = [&] {
        std::ostringstream os;
        if (s.method == Method::Truncation) {
            const auto N = s.cutoffs();
            for (std::size_t i = 0; i < N.size(); ++i) os << (i ? "," : "") << N[i];
        } else {
            os << "gamma=" << format_double(s.gamma_or_default()) << ";theta=" << format_double(s.theta_or_default());
        }
        return os.str();
    }();
    for (const auto& o : res.seeds) {
        if (!o.ok) manifest["failure." + std::to_string(o.seed)] = o.error;
    }
    int warned = 0;
    for (const auto& o : res.seeds) warned += o.warnings.empty() ? 0 : 1;
    manifest["seeds_with_warnings"] = std::to_string(warned);
    write_file_atomic((dir / "manifest.txt").string(), manifest_text(manifest));
    if (opts.json_manifest) write_file_atomic((dir / "manifest.json").string(), manifest_json(manifest));

    if (opts.svg) {
        PlotSpec ps{s.name + ": mean Err(t) over seeds", "t", "Err", false, true};
        std::vector<double> xs(res.nodes.begin() + 1, res.nodes.end());
        std::vector<double> ys(mean_curve.begin() + 1, mean_curve.end());
        write_file_atomic((dir / "errors.svg").string(), svg_line_plot({{"mean Err", xs, ys}}, ps));
    }
    return res;
}

double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size() || x.size() < 2) throw DomainError("slope fit needs matching samples");
    double mx = 0.0, my = 0.0;
    const double n = static_cast<double>(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (!(x[i] > 0.0 && y[i] > 0.0)) throw DomainError("log-log fit needs positive values");
        mx += std::log(x[i]) / n;
        my += std::log(y[i]) / n;
    }
    double sxy = 0.0, sxx = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double dx = std::log(x[i]) - mx;
        sxy += dx * (std::log(y[i]) - my);
        sxx += dx * dx;
    }
    if (sxx == 0.0) throw DomainError("log-log fit needs distinct sizes");
    return sxy / sxx;
}

ConvergenceResult convergence_study(const Scenario& base, const std::vector<int>& ns, const RunOptions& opts) {
    if (ns.size() < 3) throw DomainError("insufficient points: a convergence study needs at least 3 grid sizes");
    ConvergenceResult res;
    RunOptions inner = opts;
    inner.out.clear();
    for (int n : ns) {
        Scenario s = base;
        s.n = square(s.dim, n);
        s.N.clear();
        s.gamma = 0.0;
        if (s.method == Method::Truncation) s.theta = 0.0;
        const auto run = run_scenario(s, inner);
        ConvergenceRow row;
        row.n = n;
        std::ostringstream sched;
        if (s.method == Method::Truncation) {
            sched << "N=" << s.cutoffs()[0];
        } else {
            sched << "gamma=" << format_double(s.gamma_or_default()) << ";theta=" << format_double(s.theta_or_default());
        }
        row.schedule = sched.str();
        row.err_xt = run.xt_error();
        for (const auto& r : run.summary) row.mean_err_rms = std::max(row.mean_err_rms, r.mean_err_rms);
        for (const auto& r : run.summary) {
            if (!r.bound) {
                row.bound.reset();
                break;
            }
            row.bound = std::max(row.bound.value_or(0.0), *r.bound);
        }
        row.bound_uniform = scenario_uniform_bound(s);
        row.failures = run.failures;
        res.rows.push_back(row);
    }
    std::vector<double> x, e, b;
    bool have_bound = true;
    for (const auto& r : res.rows) {
        x.push_back(r.n);
        e.push_back(r.err_xt);
        if (r.bound) b.push_back(*r.bound);
        else have_bound = false;
    }
    res.slope_error = loglog_slope(x, e);
    if (have_bound) res.slope_bound = loglog_slope(x, b);

    if (!opts.out.empty()) {
        const std::filesystem::path dir(opts.out);
        CsvTable t{{"n", "schedule", "err_xt", "max_mean_err_rms", "bound", "bound_uniform", "failures"}, {}};
        for (const auto& r : res.rows) {
            t.add({std::to_string(r.n), r.schedule, format_double(r.err_xt), format_double(r.mean_err_rms),
                   opt(r.bound), opt(r.bound_uniform), std::to_string(r.failures)});
        }
        write_file_atomic((dir / "convergence.csv").string(), t.str());
        auto m = base.to_map();
        m["study"] = "convergence";
        m["slope_error"] = format_double(res.slope_error);
        m["slope_bound"] = opt(res.slope_bound);
        write_file_atomic((dir / "manifest.txt").string(), manifest_text(m));
        if (opts.json_manifest) write_file_atomic((dir / "manifest.json").string(), manifest_json(m));
        if (opts.svg) {
            PlotSeries emp{"empirical X_T", x, e};
            std::vector<PlotSeries> series{emp};
            if (have_bound) series.push_back({"bound", x, b});
            write_file_atomic((dir / "convergence.svg").string(),
                              svg_line_plot(series, {base.name + ": convergence", "n", "error", true, true}));
        }
    }
    return res;
}

std::vector<QbvGapRow> qbv_limit_study(const Scenario& base, const std::vector<double>& thetas, std::uint64_t seed,
                                       const RunOptions& opts) {
    Scenario s = base;
    s.validate();
    const ManufacturedProblem mp(s);
    const GridSpec grid(s.n);
    std::vector<double> x(static_cast<std::size_t>(s.dim));
    std::vector<double> exact(grid.size());
    for (std::size_t k = 0; k < grid.size(); ++k) {
        grid.point(k, x);
        exact[k] = mp.exact(s.T, x);
    }
    const auto obs = observe_values(std::move(exact), grid, NoiseScale::scalar(s.eps), SeedRecord{seed, 0, {}});
    ProblemSpec spec;
    spec.dim = s.dim;
    spec.alpha = s.alpha;
    spec.T = s.T;
    spec.source = mp.source();
    spec.lipschitz_K = s.lipschitz_K;
    spec.phi_hat = estimate_rect(obs, s.cutoffs());
    SolverOptions solver;
    solver.tol = s.tol;
    solver.max_iter = s.max_iter;
    solver.quad_nodes = s.quad_nodes;
    solver.threads = opts.threads;
    const TimeGrid tg = TimeGrid::uniform(s.T, s.nt);
    const auto trunc = solve_backward(spec, FilterSpec::truncation(spec.phi_hat.modes_ptr()), tg, solver);
    std::vector<QbvGapRow> rows;
    for (double th : thetas) {
        const auto q = solve_backward(spec, FilterSpec::quasi_boundary(th), tg, solver);
        QbvGapRow r{th, 0.0};
        for (int m = 0; m < tg.size(); ++m) {
            r.gap = std::max(r.gap, distance(q.trajectory[static_cast<std::size_t>(m)],
                                             trunc.trajectory[static_cast<std::size_t>(m)]));
        }
        rows.push_back(r);
    }
    if (!opts.out.empty()) {
        CsvTable t{{"theta", "gap"}, {}};
        for (const auto& r : rows) t.add({format_double(r.theta), format_double(r.gap)});
        write_file_atomic((std::filesystem::path(opts.out) / "qbv_limit.csv").string(), t.str());
    }
    return rows;
}

IllposedResult illposed_demo(const std::vector<int>& ns, double alpha, std::uint64_t seed, int reps,
                             const RunOptions& opts) {
    if (!(alpha > 0.0 && alpha < 0.5)) throw DomainError("the ill-posedness example needs alpha < 1/2");
    if (reps < 2) throw DomainError("the ill-posedness demo needs at least 2 seeds");
    IllposedResult res;
    res.alpha = alpha;
    res.T = 1.0;
    const auto& env = mlf::default_envelope(alpha, mlf::EnvelopeFamily::AlphaOne);
    const double m1 = env.m1, m2 = env.m2, T = res.T;
    res.source_K = m1 * std::sqrt(1.0 - 2.0 * alpha) /
                   (2.0 * m2 * T * std::sqrt((1.0 - 2.0 * alpha) * m1 * m1 + m2 * m2));

    for (int n : ns) {
        if (n < 2) throw DomainError("grid sizes must be at least 2");
        const GridSpec grid({n, n});
        const auto full = make_rectangle({n - 1, n - 1});
        ProblemSpec spec;
        spec.dim = 2;
        spec.alpha = alpha;
        spec.T = T;
        const double K = res.source_K;
        spec.source.f = [K](double, std::span<const double>, double u) { return K * u; };
        spec.lipschitz_K = K;
        const FilterSpec filter = FilterSpec::truncation(full);
        const double scale = std::pow(static_cast<double>(n) * n, -0.25);

        std::vector<double> phi_sq(static_cast<std::size_t>(reps)), u0(static_cast<std::size_t>(reps));
        detail::parallel_for(static_cast<std::size_t>(reps), [&](std::size_t r) {
            const auto obs = observe_values(std::vector<double>(grid.size(), 0.0), grid, NoiseScale::scalar(scale),
                                            SeedRecord{seed + r, 0, {}});
            ProblemSpec local = spec;
            local.phi_hat = estimate_modes(obs, full);
            const double p = local.phi_hat.l2_norm();
            phi_sq[r] = p * p;
            u0[r] = op_A(0.0, local.phi_hat, local, filter).l2_norm();
        }, opts.threads);

        IllposedRow row;
        row.n = n;
        const auto sp = stats(phi_sq);
        const auto su = stats(u0);
        row.mean_phi_sq = sp.mean;
        row.ci_phi_sq = sp.ci;
        row.expected_phi_sq = kPi * kPi * (n - 1.0) * (n - 1.0) / (static_cast<double>(n) * n * n);
        row.mean_u0 = su.mean;
        row.ci_u0 = su.ci;
        const double lam = 2.0 * (n - 1.0) * (n - 1.0);
        row.top_amplification = 1.0 / mlf::decay_kernel(alpha, lam, T);
        res.rows.push_back(row);
    }

    if (!opts.out.empty()) {
        const std::filesystem::path dir(opts.out);
        CsvTable t{{"n", "mean_phi_sq", "ci95_phi_sq", "expected_phi_sq", "mean_u0_L2", "ci95_u0_L2",
                    "top_mode_amplification"},
                   {}};
        for (const auto& r : res.rows) {
            t.add({std::to_string(r.n), format_double(r.mean_phi_sq), format_double(r.ci_phi_sq),
                   format_double(r.expected_phi_sq), format_double(r.mean_u0), format_double(r.ci_u0),
                   format_double(r.top_amplification)});
        }
        write_file_atomic((dir / "illposed.csv").string(), t.str());
        std::map<std::string, std::string> m{{"study", "illposed"},
                                             {"alpha", format_double(alpha)},
                                             {"T", format_double(T)},
                                             {"source_K", format_double(res.source_K)},
                                             {"seed", std::to_string(seed)},
                                             {"reps", std::to_string(reps)},
                                             {"rng", SeedRecord{}.generator}};
        write_file_atomic((dir / "manifest.txt").string(), manifest_text(m));
        if (opts.json_manifest) write_file_atomic((dir / "manifest.json").string(), manifest_json(m));
        if (opts.svg) {
            std::vector<double> x, a, b;
            for (const auto& r : res.rows) {
                x.push_back(r.n);
                a.push_back(r.mean_phi_sq);
                b.push_back(r.mean_u0);
            }
            write_file_atomic((dir / "illposed.svg").string(),
                              svg_line_plot({{"E||phi||^2", x, a}, {"mean ||u(0)||", x, b}},
                                            {"ill-posedness", "n", "value", true, true}));
        }
    }
    return res;
}

}  // namespace fracback
