#pragma once

namespace idcap {

/// ln Gamma(x) for x > 0 via the Lanczos approximation (g = 7, 9 coefficients),
/// with the reflection formula for x < 0.5. Relative error below 1e-12 on
/// [1e-3, 1e3]. Throws std::domain_error for x <= 0 or non-finite x.
double log_gamma(double x);

/// Digamma psi(x) for x > 0: recurrence up to x >= 6, then the asymptotic
/// Bernoulli series. Absolute/relative error below 1e-10 on [1e-3, 1e3].
/// Throws std::domain_error for x <= 0 or non-finite x.
double digamma(double x);

/// Regularized lower incomplete gamma P(a, x) = gamma(a, x) / Gamma(a),
/// a > 0, x >= 0. Series expansion for x < a + 1, continued fraction otherwise.
double reg_lower_inc_gamma(double a, double x);

/// Inverse of P(a, .) in x: smallest x with P(a, x) = p, p in [0, 1).
/// Bisection on a bracketing interval; used for distribution quantiles.
double inv_reg_lower_inc_gamma(double a, double p);

}  // namespace idcap
