#include "fracback/regularize.hpp"

#include "fracback/errors.hpp"
#include "fracback/mlf.hpp"
#include "parallel.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <unordered_map>

namespace fracback {

namespace {

double alpha_power(double alpha, double t) { return t == 0.0 ? 0.0 : std::pow(t, alpha); }

/// E_{alpha,1}(-lambda (m h)^alpha) for m = 0..M, memoized by eigenvalue.
class KernelTables {
public:
    KernelTables(double alpha, const TimeGrid& grid) : alpha_(alpha), grid_(grid) {}

    const std::vector<double>& get(double lambda) {
        auto it = cache_.find(lambda);
        if (it != cache_.end()) return it->second;
        std::vector<double> e(static_cast<std::size_t>(grid_.size()));
        for (int m = 0; m < grid_.size(); ++m) {
            e[m] = m == 0 ? 1.0 : mlf::ml_eval(alpha_, 1.0, -lambda * alpha_power(alpha_, m * grid_.h()));
        }
        return cache_.emplace(lambda, std::move(e)).first->second;
    }

private:
    double alpha_;
    const TimeGrid& grid_;
    std::unordered_map<double, std::vector<double>> cache_;
};

/// Pseudo-spectral projection of f(t, x, u(x)) onto a mode set.
class SourceProjector {
public:
    SourceProjector(const SourceTerm& source, ModeSetPtr modes, int quad_nodes)
        : source_(source), modes_(std::move(modes)) {
        const int d = modes_->dim();
        int nodes = quad_nodes;
        if (nodes == 0) {
            nodes = std::max(QuadratureRule::default_nodes(d), 2 * modes_->max_frequency() + 1);
            if (nodes % 2 == 0) ++nodes;
        }
        rule_ = QuadratureRule::simpson(d, nodes);
        if (modes_->max_frequency() > rule_.max_resolved_frequency()) {
            throw ResolutionError("source quadrature cannot resolve the active modes");
        }
        points_.resize(rule_.total_points() * static_cast<std::size_t>(d));
        for (std::size_t p = 0; p < rule_.total_points(); ++p) {
            rule_.point(p, std::span<double>(points_.data() + p * d, static_cast<std::size_t>(d)));
        }
    }

    std::vector<double> project(double t, const SpectralField* u) const {
        const int d = modes_->dim();
        std::vector<double> uvals;
        if (u && source_.depends_on_u) uvals = synthesize(*u, rule_);
        std::vector<double> values(rule_.total_points());
        for (std::size_t p = 0; p < values.size(); ++p) {
            const std::span<const double> x(points_.data() + p * d, static_cast<std::size_t>(d));
            values[p] = source_.f(t, x, uvals.empty() ? 0.0 : uvals[p]);
        }
        const auto field = project_values(values, modes_, rule_);
        return {field.coeffs().begin(), field.coeffs().end()};
    }

private:
    const SourceTerm& source_;
    ModeSetPtr modes_;
    QuadratureRule rule_;
    std::vector<double> points_;
};

struct ModeTables {
    std::vector<const std::vector<double>*> kernel;
    std::vector<std::vector<double>> weights;
};

ModeTables build_tables(const ModeSet& modes, KernelTables& kt, int intervals) {
    ModeTables t;
    for (const auto& j : modes) t.kernel.push_back(&kt.get(j.eigenvalue()));
    for (int m = 0; m <= intervals; ++m) t.weights.push_back(simpson_weights(m));
    return t;
}

/// h sum_{k<=m} w_k E(t_m - t_k) F_k for one mode.
double duhamel(const std::vector<double>& e, const std::vector<double>& w, const std::vector<std::vector<double>>& F,
               std::size_t mode, int m, double h) {
    double s = 0.0;
    for (int k = 0; k <= m; ++k) s += w[k] * e[m - k] * F[k][mode];
    return h * s;
}

struct Picard {
    const ProblemSpec& spec;
    ModeSetPtr modes;
    const TimeGrid& grid;
    const SolverOptions& opts;

    /// Iterates u = base(m, i, H_i) + G, where H_i is the full-horizon Duhamel integral.
    template <class Affine>
    SolveResult run(std::vector<std::vector<double>> u, Affine&& affine, const ModeTables& tables) {
        const int M = grid.size() - 1;
        const std::size_t nm = modes->size();
        const double h = grid.h();
        SolveResult res;
        res.grid = grid;

        if (spec.lipschitz_K > 0.0 && spec.alpha < 1.0) {
            const double kq = spec.lipschitz_K * q_constant(spec.alpha, spec.T);
            if (kq >= 1.0) {
                std::ostringstream os;
                os << "K*Q = " << kq << " >= 1: contraction is not certified";
                res.warnings.push_back(os.str());
            }
        }

        std::vector<std::vector<double>> F(static_cast<std::size_t>(M + 1), std::vector<double>(nm, 0.0));
        std::optional<SourceProjector> projector;
        if (!spec.source.is_zero()) projector.emplace(spec.source, modes, opts.quad_nodes);
        const bool fixed_source = spec.source.is_zero() || !spec.source.depends_on_u;
        bool source_ready = false;

        int above_one = 0;
        for (int iter = 1; iter <= opts.max_iter; ++iter) {
            if (projector && !(fixed_source && source_ready)) {
                detail::parallel_for(
                    static_cast<std::size_t>(M + 1),
                    [&](std::size_t k) {
                        const SpectralField uk(modes, u[k]);
                        F[k] = projector->project(grid[static_cast<int>(k)], &uk);
                    },
                    opts.threads);
                source_ready = true;
            }
            std::vector<std::vector<double>> next(u.size(), std::vector<double>(nm, 0.0));
            for (std::size_t i = 0; i < nm; ++i) {
                const auto& e = *tables.kernel[i];
                const double H = duhamel(e, tables.weights[M], F, i, M, h);
                for (int m = 0; m <= M; ++m) {
                    next[m][i] = affine(m, i, H) + duhamel(e, tables.weights[m], F, i, m, h);
                }
            }
            double delta = 0.0;
            for (int m = 0; m <= M; ++m) {
                double s = 0.0;
                for (std::size_t i = 0; i < nm; ++i) s += std::pow(next[m][i] - u[m][i], 2);
                delta = std::max(delta, std::sqrt(s));
            }
            u = std::move(next);
            res.iterations = iter;
            if (!res.update_norms.empty() && res.update_norms.back() > 0.0) {
                const double r = delta / res.update_norms.back();
                res.contraction_ratios.push_back(r);
                above_one = (r > 1.0 && res.update_norms.back() > opts.tol) ? above_one + 1 : 0;
                if (above_one >= 3) throw NonContractionError("Picard updates grew for 3 consecutive iterations");
            }
            res.update_norms.push_back(delta);
            res.residual = delta;
            if (fixed_source || delta <= opts.tol) {
                if (fixed_source) res.residual = 0.0;
                for (int m = 0; m <= M; ++m) res.trajectory.emplace_back(modes, u[m]);
                return res;
            }
        }
        throw MaxIterError("Picard iteration did not reach tolerance within " + std::to_string(opts.max_iter) +
                           " iterations");
    }
};

ModeSetPtr active_modes(const ProblemSpec& spec, const FilterSpec& filter) {
    if (const auto* t = std::get_if<TruncationFilter>(&filter.kind)) {
        if (!t->kept || t->kept->dim() != spec.dim) throw ShapeError("truncation set does not match the problem dimension");
        return t->kept;
    }
    return spec.phi_hat.modes_ptr();
}

}  // namespace

void ProblemSpec::validate() const {
    if (dim < 1 || dim > kMaxDim) throw DomainError("problem dimension must be between 1 and 4");
    const bool alpha_ok = (alpha > 0.0 && alpha < 1.0) || (allow_alpha_one && alpha == 1.0);
    if (!alpha_ok) throw DomainError("alpha must lie in (0,1)");
    if (!(T > 0.0)) throw DomainError("horizon T must be positive");
    if (!(lipschitz_K >= 0.0)) throw DomainError("Lipschitz constant must be nonnegative");
    if (!phi_hat.modes_ptr() || phi_hat.dim() != dim) throw ShapeError("final data does not match the problem dimension");
}

FilterSpec FilterSpec::truncation(ModeSetPtr kept) { return FilterSpec{TruncationFilter{std::move(kept)}}; }

FilterSpec FilterSpec::quasi_boundary(double theta) {
    if (!(theta > 0.0)) throw DomainError("quasi-boundary parameter must be positive");
    return FilterSpec{QuasiBoundaryFilter{theta}};
}

FilterSpec FilterSpec::tikhonov(double theta, double alpha, double T) {
    if (!(theta > 0.0)) throw DomainError("filter parameter must be positive");
    GeneralFilter g;
    g.name = "tikhonov";
    g.multiplier = [theta, alpha, T](const ModeIndex& j) {
        const double eT = mlf::decay_kernel(alpha, j.eigenvalue(), T);
        return eT * eT / (theta + eT * eT);
    };
    // E_t E_T / (theta + E_T^2) <= E_t / (2 sqrt(theta)) <= 1 / (2 sqrt(theta)).
    g.c_dagger = 0.5 / std::sqrt(theta);
    const double m1 = mlf::default_envelope(alpha, mlf::EnvelopeFamily::AlphaOne).m1;
    const double c = (1.0 + std::pow(T, alpha)) / m1;
    g.c_ddagger = theta * c * c;
    g.q = 2.0;
    return FilterSpec{g};
}

std::string FilterSpec::describe() const {
    std::ostringstream os;
    os << std::setprecision(17);
    if (const auto* t = std::get_if<TruncationFilter>(&kind)) {
        os << "truncation(" << (t->kept ? t->kept->size() : 0) << " modes)";
    } else if (const auto* q = std::get_if<QuasiBoundaryFilter>(&kind)) {
        os << "quasi-boundary(theta=" << q->theta << ")";
    } else {
        const auto& g = std::get<GeneralFilter>(kind);
        os << "general(" << g.name << ", C_dagger=" << g.c_dagger << ", C_ddagger=" << g.c_ddagger << ", q=" << g.q << ")";
    }
    return os.str();
}

double filter_factor(const FilterSpec& filter, const ModeIndex& j, double e_t, double e_T) {
    auto ratio = [&] {
        if (!(e_T >= 1e-300)) throw OverflowError("mode " + j.to_string() + " overflows; it must be filtered");
        return e_t / e_T;
    };
    if (const auto* t = std::get_if<TruncationFilter>(&filter.kind)) return t->kept->contains(j) ? ratio() : 0.0;
    if (const auto* q = std::get_if<QuasiBoundaryFilter>(&filter.kind)) return e_t / (q->theta + e_T);
    const auto& g = std::get<GeneralFilter>(filter.kind);
    const double L = g.multiplier(j);
    return L == 0.0 ? 0.0 : L * ratio();
}

TimeGrid TimeGrid::uniform(double T, int n_nodes) {
    if (!(T > 0.0)) throw DomainError("time horizon must be positive");
    if (n_nodes < 3 || n_nodes % 2 == 0) throw DomainError("time grid needs an odd node count of at least 3");
    TimeGrid g;
    g.h_ = T / (n_nodes - 1);
    g.nodes_.resize(static_cast<std::size_t>(n_nodes));
    for (int i = 0; i < n_nodes; ++i) g.nodes_[i] = i * g.h_;
    g.nodes_.back() = T;
    return g;
}

int TimeGrid::index_of(double t) const {
    const double pos = t / h_;
    const long i = std::lround(pos);
    if (i < 0 || i >= size() || std::abs(pos - static_cast<double>(i)) > 1e-9 * std::max(1.0, pos)) {
        throw NodeMismatchError("time " + std::to_string(t) + " is not a grid node");
    }
    return static_cast<int>(i);
}

std::vector<double> simpson_weights(int intervals) {
    std::vector<double> w(static_cast<std::size_t>(intervals + 1), 0.0);
    if (intervals == 0) return w;
    if (intervals == 1) {
        w[0] = w[1] = 0.5;
        return w;
    }
    const int simpson_part = intervals % 2 == 0 ? intervals : intervals - 3;
    for (int k = 0; k < simpson_part; k += 2) {
        w[k] += 1.0 / 3.0;
        w[k + 1] += 4.0 / 3.0;
        w[k + 2] += 1.0 / 3.0;
    }
    if (intervals % 2 == 1) {
        const int s = simpson_part;
        w[s] += 3.0 / 8.0;
        w[s + 1] += 9.0 / 8.0;
        w[s + 2] += 9.0 / 8.0;
        w[s + 3] += 3.0 / 8.0;
    }
    return w;
}

SpectralField op_B(double t, const SpectralField& g, const ProblemSpec& spec) {
    if (!(t >= 0.0 && t <= spec.T)) throw DomainError("op_B time outside [0, T]");
    SpectralField out = g;
    for (std::size_t i = 0; i < out.size(); ++i) out[i] *= mlf::decay_kernel(spec.alpha, g.modes()[i].eigenvalue(), t);
    return out;
}

SpectralField op_A(double t, const SpectralField& g, const ProblemSpec& spec, const FilterSpec& filter) {
    if (!(t >= 0.0 && t <= spec.T)) throw DomainError("op_A time outside [0, T]");
    SpectralField out = g;
    for (std::size_t i = 0; i < out.size(); ++i) {
        const auto& j = g.modes()[i];
        const double lam = j.eigenvalue();
        out[i] *= filter_factor(filter, j, mlf::decay_kernel(spec.alpha, lam, t), mlf::decay_kernel(spec.alpha, lam, spec.T));
    }
    return out;
}

SpectralField op_D(double t, double s, const SpectralField& g, const ProblemSpec& spec, const FilterSpec& filter) {
    return op_A(t, op_B(s, g, spec), spec, filter);
}

SolveResult solve_backward(const ProblemSpec& spec, const FilterSpec& filter, const TimeGrid& grid,
                           const SolverOptions& opts) {
    spec.validate();
    if (std::abs(grid.T() - spec.T) > 1e-12 * spec.T) throw DomainError("time grid does not end at T");
    const ModeSetPtr modes = active_modes(spec, filter);
    const SpectralField phi = spec.phi_hat.restricted_to(modes);
    const int M = grid.size() - 1;
    const std::size_t nm = modes->size();

    KernelTables kt(spec.alpha, grid);
    const ModeTables tables = build_tables(*modes, kt, M);
    std::vector<std::vector<double>> A(nm, std::vector<double>(static_cast<std::size_t>(M + 1)));
    for (std::size_t i = 0; i < nm; ++i) {
        const auto& e = *tables.kernel[i];
        for (int m = 0; m <= M; ++m) A[i][m] = filter_factor(filter, (*modes)[i], e[m], e[M]);
    }
    std::vector<std::vector<double>> u(static_cast<std::size_t>(M + 1), std::vector<double>(nm));
    for (int m = 0; m <= M; ++m) {
        for (std::size_t i = 0; i < nm; ++i) u[m][i] = A[i][m] * phi[i];
    }
    Picard picard{spec, modes, grid, opts};
    return picard.run(
        std::move(u), [&](int m, std::size_t i, double H) { return A[i][m] * (phi[i] - H); }, tables);
}

SolveResult solve_forward(const SpectralField& u0, const ProblemSpec& spec, const TimeGrid& grid,
                          const SolverOptions& opts) {
    ProblemSpec s = spec;
    s.phi_hat = u0;
    s.validate();
    if (std::abs(grid.T() - spec.T) > 1e-12 * spec.T) throw DomainError("time grid does not end at T");
    const ModeSetPtr modes = u0.modes_ptr();
    const int M = grid.size() - 1;
    const std::size_t nm = modes->size();
    KernelTables kt(spec.alpha, grid);
    const ModeTables tables = build_tables(*modes, kt, M);
    std::vector<std::vector<double>> u(static_cast<std::size_t>(M + 1), std::vector<double>(nm));
    for (int m = 0; m <= M; ++m) {
        for (std::size_t i = 0; i < nm; ++i) u[m][i] = (*tables.kernel[i])[m] * u0[i];
    }
    Picard picard{s, modes, grid, opts};
    return picard.run(
        std::move(u), [&](int m, std::size_t i, double) { return (*tables.kernel[i])[m] * u0[i]; }, tables);
}

double q_constant(double alpha, double T, double m1, double m2) {
    if (!(alpha > 0.0 && alpha < 1.0)) throw DomainError("Q needs alpha in (0,1)");
    const double a = 1.0 - alpha;
    return 2.0 * m2 * T * std::sqrt(2.0 * (m1 * m1 * a * a + m2 * m2)) / (m1 * a);
}

double q_constant(double alpha, double T) {
    const auto& env = mlf::default_envelope(alpha, mlf::EnvelopeFamily::AlphaOne);
    return q_constant(alpha, T, env.m1, env.m2);
}

FilterReport verify_filter(const FilterSpec& filter, const ProblemSpec& spec, const ModeSet& modes,
                           const TimeGrid& grid, double q) {
    FilterReport rep;
    rep.q = q;
    const int M = grid.size() - 1;
    KernelTables kt(spec.alpha, grid);
    const auto* general = std::get_if<GeneralFilter>(&filter.kind);
    const auto* qbv = std::get_if<QuasiBoundaryFilter>(&filter.kind);
    const mlf::EnvelopeConstants* env = nullptr;
    if (qbv && spec.alpha < 1.0) env = &mlf::default_envelope(spec.alpha, mlf::EnvelopeFamily::AlphaOne);

    auto violation = [&](const ModeIndex& j, double t, const std::string& what) {
        std::ostringstream os;
        os << "mode " << j.to_string() << " t=" << t << ": " << what;
        rep.violations.push_back(os.str());
    };

    for (const auto& j : modes) {
        const double lam = j.eigenvalue();
        const auto& e = kt.get(lam);
        double L;
        if (const auto* t = std::get_if<TruncationFilter>(&filter.kind)) {
            L = t->kept->contains(j) ? 1.0 : 0.0;
        } else if (qbv) {
            L = e[M] / (qbv->theta + e[M]);
        } else {
            L = general->multiplier(j);
        }
        if (!(L >= 0.0 && L <= 1.0)) {
            violation(j, 0.0, "multiplier " + std::to_string(L) + " outside [0,1]");
            continue;
        }
        const double slack = (1.0 - L) / std::pow(lam, q);
        rep.c_ddagger = std::max(rep.c_ddagger, slack);
        if (general && slack > general->c_ddagger * (1.0 + 1e-12)) violation(j, 0.0, "1 - L exceeds C_ddagger lambda^q");
        for (int m = 0; m <= M; ++m) {
            const double f = filter_factor(filter, j, e[m], e[M]);
            rep.c_dagger = std::max(rep.c_dagger, f);
            if (general && f > general->c_dagger * (1.0 + 1e-12)) violation(j, grid[m], "L ratio exceeds C_dagger");
            if (env) {
                if (f > env->m2 / qbv->theta) violation(j, grid[m], "operator bound M2/theta violated");
                for (int k = 1; k <= M; ++k) {
                    const double bound = env->m2 * env->m2 * std::pow(spec.T, spec.alpha) /
                                         (env->m1 * std::pow(grid[k], spec.alpha));
                    if (f * e[k] > bound) violation(j, grid[m], "composed operator bound violated");
                }
            }
        }
    }
    rep.ok = rep.violations.empty();
    return rep;
}

void write_solve_result(const SolveResult& result, const std::string& dir,
                        const std::map<std::string, std::string>& manifest) {
    namespace fs = std::filesystem;
    fs::create_directories(dir);
    for (std::size_t m = 0; m < result.trajectory.size(); ++m) {
        char name[32];
        std::snprintf(name, sizeof name, "node_%05zu.csv", m);
        std::ofstream os(fs::path(dir) / name);
        if (!os) throw IoError("cannot write trajectory into " + dir);
        write_csv(os, result.trajectory[m]);
    }
    std::ofstream os(fs::path(dir) / "manifest.txt");
    if (!os) throw IoError("cannot write manifest into " + dir);
    os << std::setprecision(17);
    for (const auto& [k, v] : manifest) os << k << " = " << v << "\n";
    os << "iterations = " << result.iterations << "\n";
    os << "residual = " << result.residual << "\n";
    os << "nodes = " << result.trajectory.size() << "\n";
    os << "T = " << result.grid.T() << "\n";
}

}  // namespace fracback
