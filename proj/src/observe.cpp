#include "fracback/observe.hpp"

#include "fracback/errors.hpp"
#include "fracback/rng.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <map>
#include <numbers>
#include <sstream>

namespace fracback {

namespace {

constexpr double kPi = std::numbers::pi;

std::vector<double> grid_matrix(int max_j, const GridSpec& grid, int axis, double scale) {
    const auto x = grid.axis_coords(axis);
    auto m = detail::sine_matrix(max_j, x, {});
    for (double& v : m) v *= scale;
    return m;
}

std::size_t rect_offset(const ModeIndex& j, const std::vector<int>& extent) {
    std::size_t off = 0;
    for (std::size_t i = 0; i < extent.size(); ++i) off = off * extent[i] + (j[static_cast<int>(i)] - 1);
    return off;
}

}  // namespace

GridSpec::GridSpec(std::vector<int> n) : n_(std::move(n)) {
    if (n_.empty() || n_.size() > static_cast<std::size_t>(kMaxDim)) throw ShapeError("grid dimension must be between 1 and 4");
    for (int v : n_) {
        if (v < 1) throw ShapeError("grid sizes must be positive");
    }
}

std::size_t GridSpec::size() const {
    std::size_t s = 1;
    for (int v : n_) s *= static_cast<std::size_t>(v);
    return s;
}

double GridSpec::coord(int axis, int k) const { return (2.0 * k + 1.0) / (2.0 * n_[axis]) * kPi; }

std::vector<double> GridSpec::axis_coords(int axis) const {
    std::vector<double> x(static_cast<std::size_t>(n_[axis]));
    for (int k = 0; k < n_[axis]; ++k) x[k] = coord(axis, k);
    return x;
}

void GridSpec::point(std::size_t flat, std::span<double> x) const {
    for (int i = dim() - 1; i >= 0; --i) {
        const auto ni = static_cast<std::size_t>(n_[i]);
        x[i] = coord(i, static_cast<int>(flat % ni));
        flat /= ni;
    }
}

double GridSpec::cell_volume() const {
    double v = 1.0;
    for (int ni : n_) v *= kPi / ni;
    return v;
}

GridSpec make_grid(std::vector<int> n) { return GridSpec(std::move(n)); }

double NoiseScale::max() const { return eps.empty() ? 0.0 : *std::max_element(eps.begin(), eps.end()); }

ObservationSet observe_values(std::vector<double> exact, const GridSpec& grid, const NoiseScale& eps,
                              const SeedRecord& seed) {
    if (exact.size() != grid.size()) throw ShapeError("exact values do not match the grid");
    if (eps.eps.size() != 1 && eps.eps.size() != grid.size()) throw ShapeError("noise scales do not match the grid");
    for (double e : eps.eps) {
        if (!(e >= 0.0)) throw DomainError("noise scales must be nonnegative");
    }
    ObservationSet obs;
    obs.grid = grid;
    obs.seed = seed;
    obs.values = std::move(exact);
    obs.eps.resize(grid.size());
    const NormalStream normal(seed.seed, seed.stream);
    for (std::size_t k = 0; k < grid.size(); ++k) {
        obs.eps[k] = eps.at(k);
        if (obs.eps[k] != 0.0) obs.values[k] += obs.eps[k] * normal(k);
    }
    obs.eps_max = eps.max();
    return obs;
}

ObservationSet observe(const PointFunction& phi, const GridSpec& grid, const NoiseScale& eps, const SeedRecord& seed) {
    std::vector<double> exact(grid.size());
    std::vector<double> x(static_cast<std::size_t>(grid.dim()));
    for (std::size_t k = 0; k < exact.size(); ++k) {
        grid.point(k, x);
        exact[k] = phi(x);
    }
    return observe_values(std::move(exact), grid, eps, seed);
}

std::vector<double> evaluate_on_grid(const SpectralField& f, const GridSpec& grid) {
    if (f.dim() != grid.dim()) throw ShapeError("field and grid dimensions differ");
    if (f.size() == 0) return std::vector<double>(grid.size(), 0.0);
    const auto extent = f.modes().max_per_axis();
    detail::Tensor t;
    std::size_t total = 1;
    for (int e : extent) {
        t.shape.push_back(static_cast<std::size_t>(e));
        total *= static_cast<std::size_t>(e);
    }
    t.data.assign(total, 0.0);
    for (std::size_t i = 0; i < f.size(); ++i) t.data[rect_offset(f.modes()[i], extent)] = f[i];
    for (int axis = 0; axis < grid.dim(); ++axis) {
        const auto n = static_cast<std::size_t>(grid.n(axis));
        const auto s = grid_matrix(extent[axis], grid, axis, 1.0);
        std::vector<double> st(s.size());
        for (int j = 0; j < extent[axis]; ++j) {
            for (std::size_t k = 0; k < n; ++k) st[k * extent[axis] + j] = s[j * n + k];
        }
        t = detail::contract_axis(t, axis, st, n);
    }
    return t.data;
}

void write_observations(const ObservationSet& obs, const std::string& csv_path) {
    std::ofstream os(csv_path);
    if (!os) throw IoError("cannot write " + csv_path);
    const int d = obs.grid.dim();
    for (int i = 1; i <= d; ++i) os << "k_" << i << ",";
    for (int i = 1; i <= d; ++i) os << "x_" << i << ",";
    os << "phi_obs,eps\n" << std::setprecision(17);
    std::vector<double> x(static_cast<std::size_t>(d));
    for (std::size_t p = 0; p < obs.grid.size(); ++p) {
        std::size_t rem = p;
        std::vector<int> k(static_cast<std::size_t>(d));
        for (int i = d - 1; i >= 0; --i) {
            k[i] = static_cast<int>(rem % obs.grid.n(i)) + 1;
            rem /= obs.grid.n(i);
        }
        obs.grid.point(p, x);
        for (int i = 0; i < d; ++i) os << k[i] << ",";
        for (int i = 0; i < d; ++i) os << x[i] << ",";
        os << obs.values[p] << "," << obs.eps[p] << "\n";
    }
    std::ofstream meta(csv_path + ".meta");
    if (!meta) throw IoError("cannot write " + csv_path + ".meta");
    meta << "n =";
    for (int ni : obs.grid.n()) meta << " " << ni;
    meta << "\nseed = " << obs.seed.seed << "\nstream = " << obs.seed.stream << "\ngenerator = " << obs.seed.generator
         << "\neps_max = " << std::setprecision(17) << obs.eps_max << "\n";
}

ObservationSet read_observations(const std::string& csv_path) {
    std::ifstream meta(csv_path + ".meta");
    if (!meta) throw IoError("missing sidecar " + csv_path + ".meta");
    std::map<std::string, std::string> kv;
    std::string line;
    while (std::getline(meta, line)) {
        const auto eq = line.find('=');
        if (eq == std::string::npos) continue;
        auto trim = [](std::string s) {
            s.erase(0, s.find_first_not_of(" \t"));
            s.erase(s.find_last_not_of(" \t\r") + 1);
            return s;
        };
        kv[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
    }
    std::vector<int> n;
    {
        std::istringstream ns(kv["n"]);
        int v;
        while (ns >> v) n.push_back(v);
    }
    ObservationSet obs;
    obs.grid = GridSpec(n);
    obs.seed.seed = std::stoull(kv.at("seed"));
    obs.seed.stream = std::stoull(kv.at("stream"));
    obs.seed.generator = kv.at("generator");
    obs.eps_max = std::stod(kv.at("eps_max"));
    std::ifstream is(csv_path);
    if (!is) throw IoError("cannot read " + csv_path);
    std::getline(is, line);
    obs.values.assign(obs.grid.size(), 0.0);
    obs.eps.assign(obs.grid.size(), 0.0);
    const int d = obs.grid.dim();
    std::size_t rows = 0;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        std::vector<std::string> cells;
        std::stringstream ss(line);
        std::string c;
        while (std::getline(ss, c, ',')) cells.push_back(c);
        if (static_cast<int>(cells.size()) != 2 * d + 2) throw IoError("malformed observation row: " + line);
        std::size_t flat = 0;
        for (int i = 0; i < d; ++i) flat = flat * obs.grid.n(i) + (std::stoul(cells[i]) - 1);
        obs.values[flat] = std::stod(cells[2 * d]);
        obs.eps[flat] = std::stod(cells[2 * d + 1]);
        ++rows;
    }
    if (rows != obs.grid.size()) throw IoError("observation file has the wrong number of rows");
    return obs;
}

double aliasing_coefficient(const ModeIndex& j, const ModeIndex& m, const GridSpec& grid) {
    if (j.dim() != grid.dim() || m.dim() != grid.dim()) throw ShapeError("mode and grid dimensions differ");
    std::vector<double> x(static_cast<std::size_t>(grid.dim()));
    double s = 0.0;
    for (std::size_t p = 0; p < grid.size(); ++p) {
        grid.point(p, x);
        s += eigenfunction(j, x) * eigenfunction(m, x);
    }
    return s;
}

double aliasing_closed_form(const ModeIndex& j, const ModeIndex& m, const GridSpec& grid) {
    if (j.dim() != grid.dim() || m.dim() != grid.dim()) throw ShapeError("mode and grid dimensions differ");
    double v = 1.0;
    for (int i = 0; i < grid.dim(); ++i) {
        const int n2 = 2 * grid.n(i);
        const int diff = j[i] - m[i];
        const int sum = j[i] + m[i];
        double axis = 0.0;
        if (diff % n2 == 0) axis += ((diff / n2) % 2 == 0) ? 1.0 : -1.0;
        if (sum % n2 == 0) axis -= ((sum / n2) % 2 == 0) ? 1.0 : -1.0;
        v *= grid.n(i) / kPi * axis;
    }
    return v;
}

SpectralField estimate_modes(const ObservationSet& obs, ModeSetPtr modes) {
    const auto& grid = obs.grid;
    if (modes->dim() != grid.dim()) throw ShapeError("mode set and grid dimensions differ");
    SpectralField out(modes);
    if (modes->empty()) return out;
    const auto extent = modes->max_per_axis();
    detail::Tensor t;
    for (int ni : grid.n()) t.shape.push_back(static_cast<std::size_t>(ni));
    t.data = obs.values;
    for (int axis = 0; axis < grid.dim(); ++axis) {
        const auto m = grid_matrix(extent[axis], grid, axis, kPi / grid.n(axis));
        t = detail::contract_axis(t, axis, m, static_cast<std::size_t>(extent[axis]));
    }
    for (std::size_t i = 0; i < modes->size(); ++i) out[i] = t.data[rect_offset((*modes)[i], extent)];
    return out;
}

SpectralField estimate_rect(const ObservationSet& obs, const std::vector<int>& N) {
    if (static_cast<int>(N.size()) != obs.grid.dim()) throw ShapeError("truncation rank does not match grid dimension");
    for (int i = 0; i < obs.grid.dim(); ++i) {
        if (N[i] >= obs.grid.n(i)) throw ShapeError("truncation N_i must be smaller than n_i");
    }
    return estimate_modes(obs, make_rectangle(N));
}

SpectralField estimate_ball(const ObservationSet& obs, double gamma) {
    return estimate_modes(obs, make_ball(obs.grid.dim(), gamma));
}

SpectralField estimate(const ObservationSet& obs, const EstimatorSpec& spec) {
    if (const auto* r = std::get_if<RectangleShape>(&spec.shape)) return estimate_rect(obs, r->N);
    return estimate_ball(obs, std::get<BallShape>(spec.shape).gamma);
}

int log_schedule(int n) {
    if (n < 2) throw DomainError("log schedule needs n >= 2");
    const double l = std::log(static_cast<double>(n));
    int N = static_cast<int>(std::floor(l));
    if (N == l) --N;
    return std::max(N, 1);
}

std::vector<int> log_schedule(const std::vector<int>& n) {
    std::vector<int> N;
    for (int v : n) N.push_back(log_schedule(v));
    return N;
}

double default_ball_gamma(const std::vector<int>& n) {
    const auto N = log_schedule(n);
    std::size_t target = 1;
    for (int v : N) target *= static_cast<std::size_t>(v);
    const int d = static_cast<int>(n.size());
    double gamma = d;
    while (ModeSet::ball(d, gamma).size() < target) gamma += 1.0;
    return gamma;
}

RiskEstimate empirical_risk(const SpectralField& phi_true, const RiskConfig& config, int replications,
                            std::uint64_t seed) {
    if (replications < 30) throw DomainError("empirical risk needs at least 30 replications");
    const auto exact = evaluate_on_grid(phi_true, config.grid);
    double sum = 0.0;
    double sum_sq = 0.0;
    for (int r = 0; r < replications; ++r) {
        const auto obs = observe_values(exact, config.grid, config.noise, SeedRecord{seed, static_cast<std::uint64_t>(r)});
        const auto est = estimate(obs, config.estimator);
        const double e = std::pow(distance(est, phi_true), 2);
        sum += e;
        sum_sq += e * e;
    }
    RiskEstimate out;
    out.replications = replications;
    out.mean = sum / replications;
    const double var = std::max(0.0, (sum_sq - replications * out.mean * out.mean) / (replications - 1));
    out.ci_halfwidth = 1.96 * std::sqrt(var / replications);
    return out;
}

double zeta(double s) {
    if (!(s > 1.0)) throw DomainError("zeta needs s > 1");
    constexpr int K = 1000;
    double sum = 0.0;
    for (int k = K - 1; k >= 1; --k) sum += std::pow(static_cast<double>(k), -s);
    const double Kd = K;
    // Euler-Maclaurin tail for sum_{k >= K} k^{-s}.
    const double tail = std::pow(Kd, 1.0 - s) / (s - 1.0) + 0.5 * std::pow(Kd, -s) + s / 12.0 * std::pow(Kd, -s - 1.0) -
                        s * (s + 1.0) * (s + 2.0) / 720.0 * std::pow(Kd, -s - 3.0);
    return sum + tail;
}

double c0_constant(double theta) {
    if (!(theta > 2.0)) throw DomainError("the aliasing constant needs smoothness theta > 2");
    const double zh = zeta(theta / 2.0);
    return 2.0 * zeta(theta) + 4.0 * zh * zh;
}

}  // namespace fracback
