#pragma once

#include <functional>
#include <string>
#include <utility>
#include <vector>

namespace fracback {

enum class BoundKind {
    /// E||phi_tilde - phi||^2 for the rectangle estimator.
    EstimatorRect,
    /// E||phi_hat - phi||^2 in H^sigma (sigma = 0 gives L2) for the ball estimator.
    EstimatorBall,
    /// Truncation method, sup over t.
    TruncationUniform,
    /// Truncation method at a single time, using the exact norm of the truncated operator.
    TruncationAtTime,
    QuasiBoundaryL2,
    QuasiBoundarySobolev,
    FilterSobolev,
};

struct BoundParams {
    int dim = 1;
    double alpha = 0.5;
    double T = 1.0;
    double lipschitz_K = 0.0;
    double eps_max = 0.0;
    std::vector<int> n;

    std::vector<int> N;
    double time = 0.0;

    double gamma = 0.0;
    double qbv_theta = 0.0;
    double c_dagger = 0.0;
    double c_ddagger = 0.0;
    double q = 1.0;

    /// Smoothness index for the rectangle estimator (needs > 2).
    double theta = 0.0;
    std::vector<double> mu;
    double mu_circ = 0.0;
    double sigma = 0.0;

    /// Sobolev norms by index: final data, initial state and sup over t of the solution.
    std::function<double(double)> phi_norm;
    std::function<double(double)> u0_norm;
    std::function<double(double)> u_sup_norm;
};

struct BoundReport {
    /// Bound on the mean-square error.
    double value = 0.0;
    std::vector<std::pair<std::string, double>> constants;
    std::vector<std::string> assumptions;
};

BoundReport theoretical_bound(BoundKind kind, const BoundParams& p);

/// d^(-max mu / 2) [prod_i (1 + (1 - 2^{-2 mu_i}) zeta(2 mu_i)) - 1].
double c_mu(const std::vector<double>& mu);

}  // namespace fracback
