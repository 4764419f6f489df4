#pragma once

#include "fracback/observe.hpp"
#include "fracback/regularize.hpp"
#include "fracback/spectral.hpp"

#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

namespace fracback {

enum class Method { Truncation, QuasiBoundary, Filter };

std::string to_string(Method m);

/// Flat experiment description; every field maps to one `key = value` line.
struct Scenario {
    std::string name = "custom";
    int dim = 1;
    double alpha = 0.3;
    double T = 1.0;
    /// Manufactured solution u = t prod sin(x_i).
    std::string exact = "tsin";
    /// Extra Lipschitz reaction K r(u) folded into the source: none | linear | sine.
    std::string reaction = "none";
    double lipschitz_K = 0.0;

    std::vector<int> n = {50};
    double eps = 0.01;

    Method method = Method::Truncation;
    /// Rectangle cutoffs; empty means the log schedule.
    std::vector<int> N;
    /// Ball radius and filter parameter; zero means the default schedule.
    double gamma = 0.0;
    double theta = 0.0;
    std::vector<double> mu;
    double mu_circ = 0.0;
    double sigma = 1.0;
    /// Smoothness index assumed by the rectangle bounds.
    double smoothness = 3.0;

    int nt = 201;
    std::vector<double> times = {0.3, 0.5, 0.8};
    std::uint64_t seed = 1;
    int seed_count = 20;
    /// Noise realizations per seed (substreams 0..R-1), averaged into that seed's row.
    int replications = 1;
    /// Explicit seed list; overrides seed/seed_count when non-empty.
    std::vector<std::uint64_t> seeds;

    int quad_nodes = 0;
    double tol = 1e-10;
    int max_iter = 200;

    void validate() const;
    std::vector<std::uint64_t> seed_list() const;
    std::vector<int> cutoffs() const;
    std::vector<double> mu_or_default() const;
    double mu_circ_or_default() const;
    /// QBV schedule gamma = (prod n)^(1/(mu_circ + d)), theta = gamma^(-mu_circ/3) unless overridden.
    double gamma_or_default() const;
    double theta_or_default() const;

    std::map<std::string, std::string> to_map() const;
};

Scenario parse_scenario(std::istream& is);
Scenario load_scenario(const std::string& path);
void write_scenario(std::ostream& os, const Scenario& s);
/// "case1" (d=1, alpha=0.3, n=50, eps=0.01) and "case2" (d=2, alpha=0.5, n=50x50, eps=0.015).
Scenario builtin_scenario(const std::string& name);
bool is_builtin(const std::string& name);

/// Exact solution, source and spectral form of the manufactured problem.
class ManufacturedProblem {
public:
    explicit ManufacturedProblem(const Scenario& s);

    double exact(double t, std::span<const double> x) const;
    /// Exact solution at time t expressed on the single mode (1,...,1).
    SpectralField exact_field(double t) const;
    SourceTerm source() const;
    /// ||u(t)||_{H^s} for the manufactured solution.
    double norm(double t, double s) const;

private:
    int dim_;
    double alpha_;
    double K_;
    std::string reaction_;
    ModeSetPtr base_;
};

}  // namespace fracback
