#pragma once

#include "fracback/spectral.hpp"

#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

namespace fracback {

/// f(t, x, u); an empty callable means f = 0.
struct SourceTerm {
    std::function<double(double, std::span<const double>, double)> f;
    bool depends_on_u = true;

    bool is_zero() const { return !f; }
    static SourceTerm zero() { return {}; }
};

struct ProblemSpec {
    int dim = 1;
    double alpha = 0.5;
    double T = 1.0;
    SourceTerm source;
    double lipschitz_K = 0.0;
    SpectralField phi_hat;
    /// alpha = 1 (classical heat kernel) is only meant for sanity tests.
    bool allow_alpha_one = false;

    void validate() const;
};

struct TruncationFilter {
    ModeSetPtr kept;
};

struct QuasiBoundaryFilter {
    double theta = 0.0;
};

/// Multiplier L_j in [0,1] applied on top of the exact ratio.
struct GeneralFilter {
    std::string name;
    std::function<double(const ModeIndex&)> multiplier;
    double c_dagger = 0.0;
    double c_ddagger = 0.0;
    double q = 1.0;
};

struct FilterSpec {
    std::variant<TruncationFilter, QuasiBoundaryFilter, GeneralFilter> kind;

    static FilterSpec truncation(ModeSetPtr kept);
    static FilterSpec quasi_boundary(double theta);
    /// L_j = E_T^2 / (theta + E_T^2) with E_T = E_{alpha,1}(-lambda_j T^alpha).
    static FilterSpec tikhonov(double theta, double alpha, double T);

    std::string describe() const;
};

/// Per-mode factor of op_A given E(-lambda t^a) and E(-lambda T^a).
double filter_factor(const FilterSpec& filter, const ModeIndex& j, double e_t, double e_T);

class TimeGrid {
public:
    static TimeGrid uniform(double T, int n_nodes);

    int size() const { return static_cast<int>(nodes_.size()); }
    double T() const { return nodes_.back(); }
    double h() const { return h_; }
    double operator[](int i) const { return nodes_[static_cast<std::size_t>(i)]; }
    const std::vector<double>& nodes() const { return nodes_; }
    /// Index of the node equal to t up to 1e-9 relative; NodeMismatchError otherwise.
    int index_of(double t) const;

private:
    std::vector<double> nodes_;
    double h_ = 0.0;
};

/// Composite Simpson weights (in units of h) over the first m intervals; an odd
/// interval count closes with the 3/8 rule, a single interval with the trapezoid rule.
std::vector<double> simpson_weights(int intervals);

struct SolverOptions {
    double tol = 1e-10;
    int max_iter = 200;
    /// Physical quadrature nodes per axis for the source projection (0 = default).
    int quad_nodes = 0;
    /// Workers for the per-node source projection (0 = hardware concurrency).
    unsigned threads = 1;
};

struct SolveResult {
    TimeGrid grid;
    std::vector<SpectralField> trajectory;
    int iterations = 0;
    std::vector<double> update_norms;
    std::vector<double> contraction_ratios;
    double residual = 0.0;
    std::vector<std::string> warnings;

    const SpectralField& at(double t) const { return trajectory[static_cast<std::size_t>(grid.index_of(t))]; }
};

SpectralField op_A(double t, const SpectralField& g, const ProblemSpec& spec, const FilterSpec& filter);
SpectralField op_B(double t, const SpectralField& g, const ProblemSpec& spec);
SpectralField op_D(double t, double s, const SpectralField& g, const ProblemSpec& spec, const FilterSpec& filter);

/// Picard iteration for the regularized integral equation.
SolveResult solve_backward(const ProblemSpec& spec, const FilterSpec& filter, const TimeGrid& grid,
                           const SolverOptions& opts = {});
/// Picard iteration for the direct problem from u(0).
SolveResult solve_forward(const SpectralField& u0, const ProblemSpec& spec, const TimeGrid& grid,
                          const SolverOptions& opts = {});

/// 2 M2 T sqrt(2 (M1^2 (1-a)^2 + M2^2)) / (M1 (1-a)).
double q_constant(double alpha, double T, double m1, double m2);
/// Same with the cached envelope of E_{alpha,1}.
double q_constant(double alpha, double T);

struct FilterReport {
    bool ok = true;
    double c_dagger = 0.0;
    double c_ddagger = 0.0;
    double q = 1.0;
    std::vector<std::string> violations;
};

/// Checks L_j ratio <= C_dagger and 0 <= 1 - L_j <= C_ddagger lambda^q on the modes and time nodes.
FilterReport verify_filter(const FilterSpec& filter, const ProblemSpec& spec, const ModeSet& modes,
                           const TimeGrid& grid, double q = 1.0);

/// One SpectralField CSV per node plus manifest.txt.
void write_solve_result(const SolveResult& result, const std::string& dir,
                        const std::map<std::string, std::string>& manifest);

}  // namespace fracback
