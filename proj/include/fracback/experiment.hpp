#pragma once

#include "fracback/regularize.hpp"
#include "fracback/scenario.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace fracback {

struct MetricRecord {
    double t = 0.0;
    double err_rms = 0.0;
    double err_L2 = 0.0;
    std::optional<double> err_Hsigma;
    /// Root of the mean-square bound, when the hypotheses of the bound hold.
    std::optional<double> bound;
};

struct ExactSolution {
    std::function<double(double, std::span<const double>)> point;
    /// Spectral form; when empty the point function is projected on the trajectory modes.
    std::function<SpectralField(double)> field;
};

ExactSolution exact_solution(const ManufacturedProblem& p);

/// Err-RMS on the observation grid plus spectral L2 and H^sigma errors at each requested node.
std::vector<MetricRecord> compute_metrics(const SolveResult& traj, const ExactSolution& exact, const Scenario& s,
                                          const std::vector<double>& times);

/// Root-mean-square theoretical bound at time t for the scenario's method, if applicable.
std::optional<double> scenario_bound(const Scenario& s, double t);
/// Uniform-in-time truncation bound (root mean square), if applicable.
std::optional<double> scenario_uniform_bound(const Scenario& s);

struct RunOptions {
    /// Output directory; nothing is written when empty.
    std::string out;
    bool svg = false;
    bool json_manifest = false;
    /// Concurrent seeds (0 = hardware concurrency).
    unsigned threads = 0;
};

struct SeedOutcome {
    std::uint64_t seed = 0;
    bool ok = false;
    std::string error;
    std::vector<MetricRecord> metrics;
    /// Err-RMS at every time node.
    std::vector<double> curve;
    int iterations = 0;
    double max_ratio = 0.0;
    std::vector<std::string> warnings;
};

struct SummaryRow {
    double t = 0.0;
    double mean_err_rms = 0.0;
    double ci_err_rms = 0.0;
    double mean_err_L2 = 0.0;
    /// sqrt of the seed mean of err_L2^2.
    double rms_err_L2 = 0.0;
    std::optional<double> bound;
    int seeds_ok = 0;
};

struct RunResult {
    Scenario scenario;
    std::vector<SeedOutcome> seeds;
    std::vector<SummaryRow> summary;
    std::vector<double> nodes;
    int failures = 0;

    /// Largest rms_err_L2 over the reported times.
    double xt_error() const;
};

/// One solve per seed and replication; failing seeds are recorded, not rethrown.
RunResult run_scenario(const Scenario& s, const RunOptions& opts = {});

/// Solves one observation realization and returns the trajectory.
SolveResult solve_realization(const Scenario& s, std::uint64_t seed, std::uint64_t stream,
                              const SolverOptions& solver = {});

struct ConvergenceRow {
    int n = 0;
    std::string schedule;
    double err_xt = 0.0;
    double mean_err_rms = 0.0;
    std::optional<double> bound;
    std::optional<double> bound_uniform;
    int failures = 0;
};

struct ConvergenceResult {
    std::vector<ConvergenceRow> rows;
    double slope_error = 0.0;
    std::optional<double> slope_bound;
};

/// Least-squares slope of log y against log x.
double loglog_slope(const std::vector<double>& x, const std::vector<double>& y);

/// Runs the scenario on n x ... x n grids with the default cutoff schedules.
ConvergenceResult convergence_study(const Scenario& base, const std::vector<int>& ns, const RunOptions& opts = {});

struct QbvGapRow {
    double theta = 0.0;
    /// max over time nodes of ||u_qbv(t) - u_trunc(t)||.
    double gap = 0.0;
};

/// Quasi-boundary trajectories against the truncation trajectory on the same estimated modes.
std::vector<QbvGapRow> qbv_limit_study(const Scenario& base, const std::vector<double>& thetas, std::uint64_t seed,
                                       const RunOptions& opts = {});

struct IllposedRow {
    int n = 0;
    double mean_phi_sq = 0.0;
    double ci_phi_sq = 0.0;
    /// pi^2 (n-1)^2 / n^3.
    double expected_phi_sq = 0.0;
    double mean_u0 = 0.0;
    double ci_u0 = 0.0;
    /// 1 / E(-lambda T^a) for the top mode (n-1, n-1).
    double top_amplification = 0.0;
};

struct IllposedResult {
    double alpha = 0.0;
    double T = 1.0;
    /// Source coefficient with 2 K^2 M2^2 T^2 (1 + M2^2 / ((1-2a) M1^2)) = 1/2.
    double source_K = 0.0;
    std::vector<IllposedRow> rows;
};

/// Unregularized full-rectangle reconstruction from pure-noise data with exact solution u = 0.
IllposedResult illposed_demo(const std::vector<int>& ns, double alpha, std::uint64_t seed, int reps,
                             const RunOptions& opts = {});

}  // namespace fracback
