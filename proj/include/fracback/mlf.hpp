#pragma once

#include <string_view>

namespace fracback::mlf {

struct MlQuery {
    double alpha = 1.0;
    double beta = 1.0;
    double z = 0.0;

    /// Throws DomainError unless alpha in (0,1], beta > 0 and z <= 0.
    void validate() const;
};

enum class MlBranch { Series, SeriesExtended, Integral, Asymptotic, Exponential };

std::string_view to_string(MlBranch b);

struct MlOptions {
    /// Switch point on the scale s = |z|^(1/alpha); the asymptotic remainder decays like exp(-s).
    double z_switch = 36.0;
    int asymptotic_order = 200;
    /// Relative accuracy demanded from the double precision series before a slower branch is used.
    double series_tolerance = 1e-13;
};

struct MlValue {
    double value = 0.0;
    MlBranch branch = MlBranch::Series;
};

MlValue ml_evaluate(const MlQuery& q, const MlOptions& opts = {});

double ml_eval(const MlQuery& q);
double ml_eval(double alpha, double beta, double z);

/// 1/Gamma(x), zero at the poles.
double rgamma(double x);

/// Individual branches, exposed so they can be compared against each other.
struct BranchResult {
    double value = 0.0;
    double error_estimate = 0.0;
};
BranchResult series_double(const MlQuery& q);
/// Taylor series in 60-digit arithmetic.
BranchResult series_extended(const MlQuery& q);
BranchResult asymptotic(const MlQuery& q, int max_terms);
/// Real integral representation on the negative axis, valid for alpha < 1.
double integral_representation(const MlQuery& q);

enum class EnvelopeFamily { AlphaAlpha, AlphaOne };

struct EnvelopeConstants {
    double m1 = 0.0;
    double m2 = 0.0;
    double alpha = 0.0;
    double grid_max = 0.0;
    EnvelopeFamily family = EnvelopeFamily::AlphaAlpha;

    double beta() const { return family == EnvelopeFamily::AlphaAlpha ? alpha : 1.0; }
};

/// Samples E_{alpha,beta}(-z)(1+z) at z = 0 and log-spaced z in [1e-4, grid_max].
EnvelopeConstants estimate_envelope(double alpha, double grid_max, int n_samples,
                                    EnvelopeFamily family = EnvelopeFamily::AlphaAlpha);

/// Cached envelope with grid_max = 1e4 and 2000 samples, shared across threads.
const EnvelopeConstants& default_envelope(double alpha, EnvelopeFamily family);

/// E_{alpha,1}(-lambda t^alpha).
double decay_kernel(double alpha, double lambda, double t);

/// E_{alpha,1}(-lambda t^alpha) / E_{alpha,1}(-lambda T^alpha).
double kernel_ratio(double alpha, double lambda, double t, double T);

}  // namespace fracback::mlf
