#pragma once

#include <span>
#include <vector>

#include "idcap/model.hpp"
#include "idcap/tensor.hpp"

namespace idcap {

/// 10 log10(peak^2 / MSE) in dB; +infinity sentinel when MSE == 0.
double psnr(const Tensor& a, const Tensor& b, double peak = 1.0);

/// Mean structural similarity over all sliding window positions (uniform
/// window, stride 1), C1 = (0.01 peak)^2, C2 = (0.03 peak)^2. Single-channel
/// inputs; throws if the image is smaller than the window.
double ssim(const Tensor& a, const Tensor& b, std::size_t window = 8, double peak = 1.0);

struct BinStats {
    std::size_t bin = 0;
    std::size_t count = 0;
    double err = 0.0;    // mean squared error of members
    double uncer = 0.0;  // mean predicted variance of members
    double lo = 0.0;
    double hi = 0.0;
};

struct UceResult {
    double uce = 0.0;
    std::vector<BinStats> bins;
};

/// Uncertainty calibration error: bins uniform over [min var, max var],
/// sum over bins of |B|/N * |err(B) - uncer(B)|. Empty bins contribute 0.
UceResult uce(std::span<const double> sq_errors, std::span<const double> variances,
              std::size_t n_bins);

/// Pearson correlation; quiet NaN when either input has zero variance
/// (degenerate, never silently 0).
double pearson_corr(std::span<const double> a, std::span<const double> b);

/// Nominal central-coverage levels {0.1, ..., 0.9}.
std::vector<double> default_ece_levels();

/// Quantile-coverage calibration error: mean over levels p of
/// |empirical coverage of the central p-interval - p|, with per-pixel
/// interval bounds obtained by numerically inverting the incomplete-gamma
/// CDF of the predicted distribution. `residuals` are y - y_tilde.
double ece_quantile(const Tensor& residuals, const PredictiveMap& pred,
                    std::span<const double> levels);

/// Half width of the central p-interval of a zero-mean generalized Gaussian.
double ggd_central_interval_halfwidth(double alpha, double beta, double p);

/// Mean predicted variance.
double sharpness(std::span<const double> variances);

enum class NllConvention { ggd, gaussian };
const char* nll_convention_name(NllConvention c);

/// Mean negative log-likelihood of the targets under the predictive map.
/// The ggd convention uses the three-term generalized-Gaussian form (ln 2
/// constant dropped); the gaussian convention uses |e|^2/(2 s^2) + log(s^2)/2
/// on the variance map.
double nll_eval(const PredictiveMap& pred, const Tensor& y, NllConvention conv);

/// Optimal variance rescaling factor s* = sqrt(mean(e_i^2 / sigma_i^2));
/// rescaled variances are s*^2 sigma^2. Throws on a zero variance entry.
double variance_scaling_fit(std::span<const double> residuals, std::span<const double> sigmas2);

}  // namespace idcap
