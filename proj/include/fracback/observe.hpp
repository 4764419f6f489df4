#pragma once

#include "fracback/spectral.hpp"

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <variant>
#include <vector>

namespace fracback {

/// Midpoint grid x_k = (2k-1) pi / (2n) per axis.
class GridSpec {
public:
    GridSpec() = default;
    explicit GridSpec(std::vector<int> n);

    int dim() const { return static_cast<int>(n_.size()); }
    const std::vector<int>& n() const { return n_; }
    int n(int axis) const { return n_[static_cast<std::size_t>(axis)]; }
    std::size_t size() const;
    /// Coordinate of 0-based index k on an axis.
    double coord(int axis, int k) const;
    std::vector<double> axis_coords(int axis) const;
    /// Row-major flat index, axis 0 slowest.
    void point(std::size_t flat, std::span<double> x) const;
    double cell_volume() const;

    friend bool operator==(const GridSpec&, const GridSpec&) = default;

private:
    std::vector<int> n_;
};

GridSpec make_grid(std::vector<int> n);

/// Scalar (broadcast) or per-point noise scales.
struct NoiseScale {
    std::vector<double> eps;

    static NoiseScale scalar(double e) { return NoiseScale{{e}}; }
    double at(std::size_t k) const { return eps.size() == 1 ? eps[0] : eps[k]; }
    double max() const;
};

struct SeedRecord {
    std::uint64_t seed = 0;
    std::uint64_t stream = 0;
    std::string generator = "philox4x32-10/box-muller";
};

struct ObservationSet {
    GridSpec grid;
    std::vector<double> values;
    std::vector<double> eps;
    double eps_max = 0.0;
    SeedRecord seed;
};

using PointFunction = std::function<double(std::span<const double>)>;

/// phi(x_k) + eps_k W_k; W_k is the draw at index k of substream seed.stream.
ObservationSet observe(const PointFunction& phi, const GridSpec& grid, const NoiseScale& eps, const SeedRecord& seed);
/// Same with the exact values already tabulated on the grid.
ObservationSet observe_values(std::vector<double> exact, const GridSpec& grid, const NoiseScale& eps,
                              const SeedRecord& seed);

/// Values of a spectral field at every grid point.
std::vector<double> evaluate_on_grid(const SpectralField& f, const GridSpec& grid);

/// CSV with columns k_1..k_d, x_1..x_d, phi_obs, eps plus a key=value sidecar.
void write_observations(const ObservationSet& obs, const std::string& csv_path);
ObservationSet read_observations(const std::string& csv_path);

/// Sum over grid points of xi_j(x_k) xi_m(x_k), by direct summation.
double aliasing_coefficient(const ModeIndex& j, const ModeIndex& m, const GridSpec& grid);
/// Closed form of the same sum: per axis (n/pi)[(-1)^l [j-m = 2ln] - (-1)^l' [j+m = 2l'n]].
double aliasing_closed_form(const ModeIndex& j, const ModeIndex& m, const GridSpec& grid);

struct RectangleShape {
    std::vector<int> N;
};
struct BallShape {
    double gamma = 0.0;
};
struct EstimatorSpec {
    std::variant<RectangleShape, BallShape> shape;
};

/// (pi^d / prod n) sum_k Phi_k xi_j(x_k) for every j in the mode set.
SpectralField estimate_modes(const ObservationSet& obs, ModeSetPtr modes);
SpectralField estimate_rect(const ObservationSet& obs, const std::vector<int>& N);
SpectralField estimate_ball(const ObservationSet& obs, double gamma);
SpectralField estimate(const ObservationSet& obs, const EstimatorSpec& spec);

/// Greatest natural number below log n (at least 1).
int log_schedule(int n);
std::vector<int> log_schedule(const std::vector<int>& n);
/// Smallest gamma whose ball holds at least prod floor(log n_i) modes.
double default_ball_gamma(const std::vector<int>& n);

struct RiskConfig {
    GridSpec grid;
    NoiseScale noise;
    EstimatorSpec estimator;
};

struct RiskEstimate {
    double mean = 0.0;
    double ci_halfwidth = 0.0;
    int replications = 0;
};

/// Monte-Carlo E||phi_hat - phi||^2 with a 95% normal confidence halfwidth.
RiskEstimate empirical_risk(const SpectralField& phi_true, const RiskConfig& config, int replications,
                            std::uint64_t seed);

/// Riemann zeta for s > 1 by direct summation with an Euler-Maclaurin tail.
double zeta(double s);
/// Aliasing constant 2 zeta(theta) + 4 zeta(theta/2)^2; needs theta > 2.
double c0_constant(double theta);

}  // namespace fracback
