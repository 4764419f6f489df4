#include "fracback/bounds.hpp"

#include "fracback/errors.hpp"
#include "fracback/mlf.hpp"
#include "fracback/observe.hpp"
#include "fracback/regularize.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

namespace fracback {

namespace {

constexpr double kPi = std::numbers::pi;

double prod_n(const std::vector<int>& n) {
    double p = 1.0;
    for (int v : n) p *= v;
    return p;
}

double need(const std::function<double(double)>& norm, double s, const char* what) {
    if (!norm) throw UnsupportedError(std::string("bound needs the norm of ") + what);
    return norm(s);
}

/// 1 - K^2 Q^2 with the beta = 1 envelope, or 1 when there is no nonlinearity.
double contraction_margin(const BoundParams& p, BoundReport& rep) {
    if (p.lipschitz_K == 0.0) return 1.0;
    const auto& env = mlf::default_envelope(p.alpha, mlf::EnvelopeFamily::AlphaOne);
    const double Q = q_constant(p.alpha, p.T, env.m1, env.m2);
    rep.constants.emplace_back("Q", Q);
    const double kq = p.lipschitz_K * Q;
    if (kq >= 1.0) throw UnsupportedError("K*Q >= 1: the convergence estimates do not apply");
    return 1.0 - kq * kq;
}

struct EstimatorRectTerms {
    double variance = 0.0;
    double bias_factor = 0.0;
};

/// E E1 = (2 pi^d eps^2 + 2 C0^2 ||phi||^2) prod N / prod n and the factor sum (N_i+1)^(-2 theta).
EstimatorRectTerms rect_terms(const BoundParams& p, BoundReport& rep) {
    if (static_cast<int>(p.N.size()) != p.dim || static_cast<int>(p.n.size()) != p.dim) {
        throw UnsupportedError("rectangle bounds need N and n per axis");
    }
    for (int i = 0; i < p.dim; ++i) {
        if (p.N[i] < 1 || p.N[i] >= p.n[i]) throw UnsupportedError("rectangle bounds need 1 <= N_i < n_i");
    }
    if (!(p.theta > 2.0)) throw UnsupportedError("the aliasing constant C0 needs smoothness theta > 2");
    const double c0 = c0_constant(p.theta);
    const double phi2 = std::pow(need(p.phi_norm, p.theta, "phi"), 2);
    double ratio = 1.0;
    double bias = 0.0;
    for (int i = 0; i < p.dim; ++i) {
        ratio *= static_cast<double>(p.N[i]) / p.n[i];
        bias += std::pow(p.N[i] + 1.0, -2.0 * p.theta);
    }
    rep.constants.emplace_back("C0", c0);
    rep.assumptions.push_back("smoothness theta = " + std::to_string(p.theta));
    if (p.dim != 2) rep.assumptions.push_back("C0 and the pi^d noise factor extend the two-dimensional aliasing estimate");
    return {(2.0 * std::pow(kPi, p.dim) * p.eps_max * p.eps_max + 2.0 * c0 * c0 * phi2) * ratio, bias};
}

/// sup over rectangle modes of E(-lambda t^a) / E(-lambda T^a).
double truncated_operator_norm(const BoundParams& p, double t) {
    const auto modes = ModeSet::rectangle(p.N);
    double best = 0.0;
    for (const auto& j : modes) best = std::max(best, mlf::kernel_ratio(p.alpha, j.eigenvalue(), t, p.T));
    return best;
}

/// Ball estimator risk in H^sigma, proof-level constants.
double ball_estimator(const BoundParams& p, double sigma, BoundReport& rep) {
    if (static_cast<int>(p.mu.size()) != p.dim) throw UnsupportedError("ball bounds need one mu per axis");
    const double mu_max = *std::max_element(p.mu.begin(), p.mu.end());
    for (double m : p.mu) {
        if (!(m > 0.5)) throw UnsupportedError("ball bounds need mu_i > 1/2");
    }
    if (p.mu_circ < p.dim * mu_max) throw UnsupportedError("ball bounds need mu_circ >= d max mu_i");
    if (!(p.gamma >= p.dim)) throw UnsupportedError("ball bounds need gamma >= d");
    const int jmax = static_cast<int>(std::floor(std::sqrt(p.gamma - (p.dim - 1))));
    for (int v : p.n) {
        if (jmax >= v) throw UnsupportedError("ball modes must stay below the grid size on every axis");
    }
    const double d = p.dim;
    const double vol = 2.0 * std::pow(kPi, d / 2.0) / (d * std::tgamma(d / 2.0));
    const double cm = c_mu(p.mu);
    const double pn = prod_n(p.n);
    double alias_decay = 1.0;
    for (int i = 0; i < p.dim; ++i) alias_decay *= std::pow(p.n[i], -4.0 * p.mu[i]);
    const double g = std::pow(p.gamma, sigma + d / 2.0);
    const double phi_mu = std::pow(need(p.phi_norm, p.mu_circ, "phi"), 2);
    const double phi_mu_sigma = std::pow(need(p.phi_norm, p.mu_circ + sigma, "phi"), 2);

    const double noise = 2.0 * vol * g * std::pow(kPi, d) * p.eps_max * p.eps_max / pn;
    const double alias = 2.0 * vol * g * cm * cm * phi_mu * alias_decay;
    const double bias = std::pow(p.gamma, -p.mu_circ) * phi_mu_sigma;
    rep.constants.emplace_back("C_mu", cm);
    rep.constants.emplace_back("noise_term", noise);
    rep.constants.emplace_back("aliasing_term", alias);
    rep.constants.emplace_back("bias_term", bias);
    rep.assumptions.push_back("noise variance scales with 1/prod(n); aliasing with prod n^(-4 mu)");
    return noise + alias + bias;
}

}  // namespace

double c_mu(const std::vector<double>& mu) {
    if (mu.empty()) throw DomainError("C(mu) needs at least one index");
    double prod = 1.0;
    double mu_max = 0.0;
    for (double m : mu) {
        if (!(m > 0.5)) throw DomainError("C(mu) needs mu_i > 1/2");
        prod *= 1.0 + (1.0 - std::pow(2.0, -2.0 * m)) * zeta(2.0 * m);
        mu_max = std::max(mu_max, m);
    }
    return std::pow(static_cast<double>(mu.size()), -mu_max / 2.0) * (prod - 1.0);
}

BoundReport theoretical_bound(BoundKind kind, const BoundParams& p) {
    BoundReport rep;
    if (!(p.alpha > 0.0 && p.alpha < 1.0)) throw UnsupportedError("bounds need alpha in (0,1)");
    if (static_cast<int>(p.n.size()) != p.dim) throw UnsupportedError("bounds need one grid size per axis");
    const auto& env = mlf::default_envelope(p.alpha, mlf::EnvelopeFamily::AlphaOne);
    const double m1 = env.m1;
    const double m2 = env.m2;
    const double Ta = std::pow(p.T, p.alpha);

    switch (kind) {
        case BoundKind::EstimatorRect: {
            const auto t = rect_terms(p, rep);
            const double phi2 = std::pow(need(p.phi_norm, p.theta, "phi"), 2);
            rep.value = t.variance + 2.0 * t.bias_factor * phi2;
            break;
        }
        case BoundKind::EstimatorBall: {
            rep.value = ball_estimator(p, p.sigma, rep);
            break;
        }
        case BoundKind::TruncationUniform:
        case BoundKind::TruncationAtTime: {
            const auto t = rect_terms(p, rep);
            const double margin = contraction_margin(p, rep);
            double lam_N = 0.0;
            for (int v : p.N) lam_N += static_cast<double>(v) * v;
            const double amp = m2 * (1.0 + lam_N * Ta) / m1;
            const double u2 = std::pow(need(p.u_sup_norm, p.theta, "u"), 2);
            const double bias = 4.0 * t.bias_factor * u2;
            const double uniform = (4.0 * amp * amp * t.variance + bias) / margin;
            rep.constants.emplace_back("M1", m1);
            rep.constants.emplace_back("M2", m2);
            if (kind == BoundKind::TruncationUniform) {
                rep.value = uniform;
            } else {
                if (!(p.time >= 0.0 && p.time <= p.T)) throw UnsupportedError("bound time outside [0, T]");
                const double a = truncated_operator_norm(p, p.time);
                rep.constants.emplace_back("operator_norm", a);
                const double kq2 = p.lipschitz_K == 0.0 ? 0.0 : 1.0 - margin;
                rep.value = 4.0 * a * a * t.variance + bias + kq2 * uniform;
                rep.assumptions.push_back("exact norm of the truncated operator at t replaces M2(1+lambda_N T^a)/M1");
            }
            break;
        }
        case BoundKind::QuasiBoundaryL2:
        case BoundKind::QuasiBoundarySobolev: {
            if (!(p.qbv_theta > 0.0)) throw UnsupportedError("quasi-boundary bound needs theta > 0");
            const bool sobolev = kind == BoundKind::QuasiBoundarySobolev;
            if (sobolev && !(p.sigma > 0.0)) throw UnsupportedError("H^sigma bound needs sigma > 0");
            const double margin = contraction_margin(p, rep);
            const double sigma = sobolev ? p.sigma : 0.0;
            const double est = ball_estimator(p, sigma, rep);
            const double u0 = std::pow(need(p.u0_norm, sigma + 1.0, "u(0)"), 2);
            const double th = p.qbv_theta;
            rep.value = (4.0 * m2 * m2 / (th * th) * est + 2.0 * th * m2 * m2 * (1.0 + Ta) / m1 * u0) / margin;
            rep.constants.emplace_back("M1", m1);
            rep.constants.emplace_back("M2", m2);
            break;
        }
        case BoundKind::FilterSobolev: {
            if (!(p.sigma > 0.0)) throw UnsupportedError("H^sigma bound needs sigma > 0");
            if (!(p.c_dagger > 0.0 && p.c_ddagger >= 0.0 && p.q > 0.0)) {
                throw UnsupportedError("filter bound needs C_dagger > 0, C_ddagger >= 0, q > 0");
            }
            const double margin = contraction_margin(p, rep);
            const double est = ball_estimator(p, p.sigma, rep);
            const double u0 = std::pow(need(p.u0_norm, p.sigma + 2.0 * p.q, "u(0)"), 2);
            rep.value = (4.0 * p.c_dagger * p.c_dagger * est + 2.0 * m2 * m2 * p.c_ddagger * p.c_ddagger * u0) / margin;
            rep.constants.emplace_back("M2", m2);
            break;
        }
    }
    return rep;
}

}  // namespace fracback
