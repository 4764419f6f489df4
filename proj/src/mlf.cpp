#include "fracback/mlf.hpp"

#include "fracback/errors.hpp"

#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>
#include <boost/multiprecision/mpfr.hpp>

#include <cmath>
#include <complex>
#include <limits>
#include <map>
#include <mutex>
#include <numbers>
#include <utility>

namespace fracback::mlf {

namespace {

using Mp = boost::multiprecision::number<boost::multiprecision::mpfr_float_backend<60>,
                                         boost::multiprecision::et_off>;

constexpr double kEps = std::numeric_limits<double>::epsilon();
constexpr double kPi = std::numbers::pi;

bool is_nonpositive_integer(double x) { return x <= 0.0 && x == std::floor(x); }

/// log|1/Gamma(y)| and its sign; y must not be a pole.
std::pair<double, int> log_rgamma(double y) {
    int sign = 1;
    if (y < 0.0 && static_cast<long long>(std::floor(y)) % 2 != 0) sign = -1;
    return {-std::lgamma(y), sign};
}

double sinpi(double v) {
    const double r = v - 2.0 * std::round(v / 2.0);
    if (r == 0.0 || r == 1.0 || r == -1.0) return 0.0;
    return std::sin(kPi * r);
}

double cospi(double v) {
    const double r = v - 2.0 * std::round(v / 2.0);
    if (r == 0.5 || r == -0.5) return 0.0;
    return std::cos(kPi * r);
}

struct Neumaier {
    double sum = 0.0;
    double comp = 0.0;
    void add(double v) {
        const double t = sum + v;
        if (std::abs(sum) >= std::abs(v)) {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    double value() const { return sum + comp; }
};

}  // namespace

void MlQuery::validate() const {
    if (!(alpha > 0.0 && alpha <= 1.0)) throw DomainError("Mittag-Leffler alpha must lie in (0,1]");
    if (!(beta > 0.0)) throw DomainError("Mittag-Leffler beta must be positive");
    if (!(z <= 0.0)) throw DomainError("Mittag-Leffler argument must be nonpositive");
}

std::string_view to_string(MlBranch b) {
    switch (b) {
        case MlBranch::Series: return "series";
        case MlBranch::SeriesExtended: return "series-extended";
        case MlBranch::Integral: return "integral";
        case MlBranch::Asymptotic: return "asymptotic";
        case MlBranch::Exponential: return "exponential";
    }
    return "unknown";
}

double rgamma(double x) {
    if (is_nonpositive_integer(x)) return 0.0;
    if (x > 0.0 && x < 170.0) return 1.0 / std::tgamma(x);
    auto [lg, sign] = log_rgamma(x);
    return sign * std::exp(lg);
}

BranchResult series_double(const MlQuery& q) {
    const double x = -q.z;
    if (x == 0.0) return {rgamma(q.beta), 0.0};
    const double lx = std::log(x);
    Neumaier acc;
    double abs_sum = 0.0;
    double prev = std::numeric_limits<double>::infinity();
    double last = 0.0;
    double max_log = 0.0;
    bool converged = false;
    for (int k = 0; k < 100000; ++k) {
        const double lm = k * lx - std::lgamma(q.alpha * k + q.beta);
        const double mag = std::exp(lm);
        max_log = std::max(max_log, std::abs(lm));
        acc.add((k % 2 == 0) ? mag : -mag);
        abs_sum += mag;
        last = mag;
        if (!std::isfinite(abs_sum)) break;
        if (k > 0 && mag < prev && mag <= 1e-17 * abs_sum) {
            converged = true;
            break;
        }
        prev = mag;
    }
    if (!converged) return {acc.value(), std::numeric_limits<double>::infinity()};
    return {acc.value(), (max_log + 8.0) * kEps * abs_sum + last};
}

BranchResult series_extended(const MlQuery& q) {
    const Mp x = -q.z;
    if (q.z == 0.0) return {rgamma(q.beta), 0.0};
    Mp sum = 0;
    Mp abs_sum = 0;
    Mp prev = std::numeric_limits<double>::max();
    Mp term;
    const Mp tiny("1e-45");
    bool converged = false;
    if (q.alpha == 1.0) {
        term = 1 / boost::multiprecision::tgamma(Mp(q.beta));
        for (int k = 0; k < 200000; ++k) {
            sum += term;
            const Mp mag = abs(term);
            abs_sum += mag;
            if (k > 0 && mag < prev && mag <= tiny * abs_sum) {
                converged = true;
                break;
            }
            prev = mag;
            term *= -x / (k + Mp(q.beta));
        }
    } else {
        Mp xpow = 1;
        for (int k = 0; k < 50000; ++k) {
            term = xpow / boost::multiprecision::tgamma(Mp(q.alpha) * k + Mp(q.beta));
            if (k % 2 == 1) term = -term;
            sum += term;
            const Mp mag = abs(term);
            abs_sum += mag;
            if (k > 0 && mag < prev && mag <= tiny * abs_sum) {
                converged = true;
                break;
            }
            prev = mag;
            xpow *= x;
        }
    }
    const double v = static_cast<double>(sum);
    if (!converged) return {v, std::numeric_limits<double>::infinity()};
    const double err = static_cast<double>(abs_sum * Mp("1e-58") + abs(term));
    return {v, err + std::abs(v) * kEps};
}

BranchResult asymptotic(const MlQuery& q, int max_terms) {
    const double x = -q.z;
    if (x == 0.0) throw DomainError("asymptotic expansion needs a nonzero argument");
    const double lx = std::log(x);
    const double s = std::pow(x, 1.0 / q.alpha);
    double sum = 0.0;
    double best_sum = 0.0;
    double min_mag = std::numeric_limits<double>::infinity();
    double omitted = std::numeric_limits<double>::infinity();
    for (int k = 1; k <= max_terms; ++k) {
        const double y = q.beta - q.alpha * k;
        // Truncation decisions use |1/Gamma(y)| <= Gamma(1-y)/pi, which has no dips near the poles.
        const double env = y > 0.5 ? std::exp(-k * lx - std::lgamma(y))
                                   : std::exp(-k * lx + std::lgamma(1.0 - y)) / std::numbers::pi;
        if (env > 1e3 * min_mag) break;
        if (env < min_mag) {
            min_mag = env;
            best_sum = sum;
            omitted = env;
        }
        if (!is_nonpositive_integer(y)) {
            auto [lg, sign] = log_rgamma(y);
            sum += ((k % 2 == 1) ? 1.0 : -1.0) * sign * std::exp(-k * lx + lg);
        }
        if (env <= 1e-17 * std::abs(sum)) {
            best_sum = sum;
            omitted = env;
            break;
        }
    }
    const double tail = std::exp(-s) * std::pow(1.0 + s, 2.0 + std::abs(1.0 - q.beta) / q.alpha) / q.alpha;
    return {best_sum, omitted + tail + 4.0 * kEps * std::abs(best_sum)};
}

double integral_representation(const MlQuery& q) {
    if (q.alpha >= 1.0) throw DomainError("integral representation requires alpha < 1");
    const double a = q.alpha;
    const double b = q.beta;
    const double x = -q.z;
    if (x == 0.0) return rgamma(b);
    const double p = (1.0 - b) / a;
    const double s1 = sinpi(1.0 - b);
    const double s2 = sinpi(1.0 - b + a);
    const double ca = cospi(a);

    auto kernel = [=](double chi) {
        const double e = std::pow(chi, 1.0 / a);
        if (e > 700.0) return 0.0;
        const double den = chi * chi + 2.0 * chi * x * ca + x * x;
        const double num = chi * s1 + x * s2;
        return std::pow(chi, p) * std::exp(-e) * num / den / (a * kPi);
    };

    thread_local boost::math::quadrature::tanh_sinh<double> ts;
    thread_local boost::math::quadrature::exp_sinh<double> es;
    constexpr double tol = 1e-15;

    const double lo = (b <= 1.0) ? 0.0 : 1.0;
    double result = 0.0;
    const double peak = -x * ca;
    if (peak > lo) {
        result += ts.integrate(kernel, lo, peak, tol);
        result += es.integrate(kernel, peak, std::numeric_limits<double>::infinity(), tol);
    } else {
        result += es.integrate(kernel, lo, std::numeric_limits<double>::infinity(), tol);
    }

    if (lo > 0.0) {
        const double eps = lo;
        const double e1a = std::pow(eps, 1.0 / a);
        auto arc = [=](double phi) {
            const double omega = e1a * std::sin(phi / a) + phi * (1.0 + p);
            const std::complex<double> num(std::cos(omega), std::sin(omega));
            const std::complex<double> den(eps * std::cos(phi) + x, eps * std::sin(phi));
            return std::pow(eps, 1.0 + p) * std::exp(e1a * std::cos(phi / a)) * (num / den).real() /
                   (2.0 * a * kPi);
        };
        // The arc integrand is conjugate-symmetric in phi.
        result += 2.0 * boost::math::quadrature::gauss_kronrod<double, 31>::integrate(arc, 0.0, a * kPi, 15,
                                                                                       1e-15);
    }
    return result;
}

MlValue ml_evaluate(const MlQuery& q, const MlOptions& opts) {
    q.validate();
    if (q.z == 0.0) return {rgamma(q.beta), MlBranch::Series};
    const double x = -q.z;
    const double s = std::pow(x, 1.0 / q.alpha);
    const double tol = opts.series_tolerance;
    auto acceptable = [tol](const BranchResult& r) {
        return std::isfinite(r.value) && r.error_estimate <= tol * std::abs(r.value);
    };
    constexpr double extended_alpha = 0.98;
    constexpr double extended_reach = 100.0;

    if (s <= opts.z_switch) {
        if (s <= 40.0) {
            const auto r = series_double(q);
            if (acceptable(r)) return {r.value, MlBranch::Series};
        }
        if (q.alpha < extended_alpha) return {integral_representation(q), MlBranch::Integral};
        const auto r = series_extended(q);
        if (acceptable(r)) return {r.value, MlBranch::SeriesExtended};
        throw AccuracyError("Mittag-Leffler series did not reach tolerance");
    }

    if (q.alpha == 1.0 && q.beta == 1.0) return {std::exp(-x), MlBranch::Exponential};
    const auto r = asymptotic(q, opts.asymptotic_order);
    if (acceptable(r)) return {r.value, MlBranch::Asymptotic};
    if (q.alpha < extended_alpha) return {integral_representation(q), MlBranch::Integral};
    if (s <= extended_reach) {
        const auto e = series_extended(q);
        if (acceptable(e)) return {e.value, MlBranch::SeriesExtended};
    }
    throw AccuracyError("neither Mittag-Leffler branch converged to tolerance");
}

double ml_eval(const MlQuery& q) { return ml_evaluate(q).value; }

double ml_eval(double alpha, double beta, double z) { return ml_eval(MlQuery{alpha, beta, z}); }

EnvelopeConstants estimate_envelope(double alpha, double grid_max, int n_samples, EnvelopeFamily family) {
    if (!(alpha > 0.0 && alpha <= 1.0)) throw DomainError("envelope alpha must lie in (0,1]");
    if (!(grid_max > 1e-4)) throw DomainError("envelope grid_max must exceed 1e-4");
    if (n_samples < 100) throw DomainError("envelope needs at least 100 samples");
    EnvelopeConstants env;
    env.alpha = alpha;
    env.grid_max = grid_max;
    env.family = family;
    const double beta = env.beta();

    double lo = rgamma(beta);
    double hi = lo;
    const double l0 = std::log(1e-4);
    const double l1 = std::log(grid_max);
    for (int i = 0; i < n_samples - 1; ++i) {
        const double z = std::exp(l0 + (l1 - l0) * i / (n_samples - 2));
        const double v = ml_eval(alpha, beta, -z) * (1.0 + z);
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    env.m1 = 0.99 * lo;
    env.m2 = 1.01 * hi;
    if (!(env.m1 > 0.0)) throw AccuracyError("envelope lower constant is not positive");
    return env;
}

const EnvelopeConstants& default_envelope(double alpha, EnvelopeFamily family) {
    static std::mutex mu;
    static std::map<std::pair<double, int>, EnvelopeConstants> cache;
    const auto key = std::make_pair(alpha, static_cast<int>(family));
    {
        std::lock_guard lock(mu);
        auto it = cache.find(key);
        if (it != cache.end()) return it->second;
    }
    EnvelopeConstants env = estimate_envelope(alpha, 1e4, 2000, family);
    std::lock_guard lock(mu);
    return cache.emplace(key, env).first->second;
}

double decay_kernel(double alpha, double lambda, double t) {
    if (t == 0.0) return 1.0;
    return ml_eval(alpha, 1.0, -lambda * std::pow(t, alpha));
}

double kernel_ratio(double alpha, double lambda, double t, double T) {
    if (!(lambda > 0.0)) throw DomainError("kernel_ratio needs a positive eigenvalue");
    if (!(t >= 0.0 && t <= T)) throw DomainError("kernel_ratio needs 0 <= t <= T");
    const double den = decay_kernel(alpha, lambda, T);
    if (!(den >= 1e-300)) throw OverflowError("kernel denominator underflows; mode must be filtered");
    return decay_kernel(alpha, lambda, t) / den;
}

}  // namespace fracback::mlf
