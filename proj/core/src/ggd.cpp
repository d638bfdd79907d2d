#include "idcap/ggd.hpp"

#include <cmath>
#include <stdexcept>

#include "idcap/special_functions.hpp"

namespace idcap {

namespace {
constexpr double kModeEps = 1e-12;
}

GGDParams::GGDParams(double mu_in, double alpha_in, double beta_in)
    : mu(mu_in), alpha(alpha_in), beta(beta_in) {
    if (!std::isfinite(mu) || !std::isfinite(alpha) || !std::isfinite(beta)) {
        throw std::domain_error("GGDParams: parameters must be finite");
    }
    if (alpha <= 0.0 || beta <= 0.0) {
        throw std::domain_error("GGDParams: alpha and beta must be positive");
    }
}

double ggd_log_pdf(double y, const GGDParams& p) {
    const double r = std::abs(y - p.mu) / p.alpha;
    return std::log(p.beta) - std::log(2.0 * p.alpha) - log_gamma(1.0 / p.beta) -
           std::pow(r, p.beta);
}

double ggd_variance(double alpha, double beta) {
    if (!std::isfinite(alpha) || !std::isfinite(beta) || alpha <= 0.0 || beta <= 0.0) {
        throw std::domain_error("ggd_variance: alpha and beta must be positive and finite");
    }
    return std::exp(2.0 * std::log(alpha) + log_gamma(3.0 / beta) - log_gamma(1.0 / beta));
}

double ggd_sample(const GGDParams& p, Rng& rng) {
    const double g = rng.gamma(1.0 / p.beta);
    const double mag = p.alpha * std::pow(g, 1.0 / p.beta);
    const double sign = (rng.next_u64() & 1ull) ? 1.0 : -1.0;
    return p.mu + sign * mag;
}

double ggd_nll_term(double y, const GGDParams& p) {
    const double r = std::abs(y - p.mu) / p.alpha;
    return std::pow(r, p.beta) - std::log(p.beta / p.alpha) + log_gamma(1.0 / p.beta);
}

GGDGrad ggd_nll_grad(double y, const GGDParams& p) {
    GGDGrad g{};
    const double diff = y - p.mu;
    const double ad = std::abs(diff);
    const double inv_beta = 1.0 / p.beta;
    // d/dbeta of log Gamma(1/beta) = -psi(1/beta) / beta^2
    const double dbeta_gamma_term = -digamma(inv_beta) / (p.beta * p.beta);

    if (ad < kModeEps) {
        g.at_mode = true;
        g.d_mu = 0.0;  // subgradient at the non-differentiable mode point
        g.d_alpha = 1.0 / p.alpha;
        g.d_beta = -inv_beta + dbeta_gamma_term;  // r^beta ln r -> 0 as r -> 0
        return g;
    }
    const double r = ad / p.alpha;
    const double r_pow = std::pow(r, p.beta);
    g.at_mode = false;
    g.d_mu = -p.beta * std::pow(r, p.beta - 1.0) * ((diff > 0.0) ? 1.0 : -1.0) / p.alpha;
    g.d_alpha = (1.0 - p.beta * r_pow) / p.alpha;
    g.d_beta = r_pow * std::log(r) - inv_beta + dbeta_gamma_term;
    return g;
}

}  // namespace idcap
