#pragma once

#include "idcap/rng.hpp"

namespace idcap {

/// Parameters of a generalized Gaussian distribution with density
///   p(y) = beta / (2 alpha Gamma(1/beta)) * exp(-(|y - mu| / alpha)^beta).
/// beta = 2 recovers the Gaussian (alpha = sigma sqrt(2)), beta = 1 the Laplace.
struct GGDParams {
    double mu;
    double alpha;  // scale, > 0
    double beta;   // shape, > 0

    /// Throws std::domain_error if alpha or beta is not positive or any field
    /// is non-finite.
    GGDParams(double mu, double alpha, double beta);
};

/// Log density at y.
double ggd_log_pdf(double y, const GGDParams& p);

/// Variance alpha^2 Gamma(3/beta) / Gamma(1/beta), evaluated in log space.
double ggd_variance(double alpha, double beta);

/// One draw: mu + sign * alpha * G^(1/beta), G ~ Gamma(1/beta, 1), sign = +-1
/// with equal probability.
double ggd_sample(const GGDParams& p, Rng& rng);

/// Per-element negative log-likelihood term
///   (|y - mu| / alpha)^beta - log(beta / alpha) + log Gamma(1/beta),
/// i.e. -log pdf minus the constant ln 2.
double ggd_nll_term(double y, const GGDParams& p);

struct GGDGrad {
    double d_mu;
    double d_alpha;
    double d_beta;
    /// Set when |y - mu| < 1e-12; d_mu is then the subgradient 0 (the exact
    /// gradient is singular there for beta < 1).
    bool at_mode;
};

/// Analytic partials of ggd_nll_term with respect to (mu, alpha, beta).
GGDGrad ggd_nll_grad(double y, const GGDParams& p);

}  // namespace idcap
