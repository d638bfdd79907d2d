#include "idcap/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "idcap/ggd.hpp"
#include "idcap/special_functions.hpp"
#include "idcap/train.hpp"

namespace idcap {

double psnr(const Tensor& a, const Tensor& b, double peak) {
    const double mse = tensor_mse(a, b);
    if (mse == 0.0) {
        return std::numeric_limits<double>::infinity();
    }
    return 10.0 * std::log10(peak * peak / mse);
}

double ssim(const Tensor& a, const Tensor& b, std::size_t window, double peak) {
    if (!a.same_shape(b)) {
        throw std::invalid_argument("ssim: shape mismatch");
    }
    if (a.rank() != 3 || a.shape()[0] != 1) {
        throw std::invalid_argument("ssim: expected single-channel (1,H,W) images");
    }
    const std::size_t h = a.shape()[1], w = a.shape()[2];
    if (h < window || w < window) {
        throw std::invalid_argument("ssim: image smaller than the window");
    }
    const double c1 = (0.01 * peak) * (0.01 * peak);
    const double c2 = (0.03 * peak) * (0.03 * peak);
    const double inv_n = 1.0 / static_cast<double>(window * window);

    double total = 0.0;
    std::size_t windows = 0;
    for (std::size_t i0 = 0; i0 + window <= h; ++i0) {
        for (std::size_t j0 = 0; j0 + window <= w; ++j0) {
            double sa = 0, sb = 0, saa = 0, sbb = 0, sab = 0;
            for (std::size_t i = i0; i < i0 + window; ++i) {
                for (std::size_t j = j0; j < j0 + window; ++j) {
                    const double va = a.at(0, i, j);
                    const double vb = b.at(0, i, j);
                    sa += va;
                    sb += vb;
                    saa += va * va;
                    sbb += vb * vb;
                    sab += va * vb;
                }
            }
            const double mu_a = sa * inv_n;
            const double mu_b = sb * inv_n;
            const double var_a = saa * inv_n - mu_a * mu_a;
            const double var_b = sbb * inv_n - mu_b * mu_b;
            const double cov = sab * inv_n - mu_a * mu_b;
            total += ((2.0 * mu_a * mu_b + c1) * (2.0 * cov + c2)) /
                     ((mu_a * mu_a + mu_b * mu_b + c1) * (var_a + var_b + c2));
            ++windows;
        }
    }
    return total / static_cast<double>(windows);
}

UceResult uce(std::span<const double> sq_errors, std::span<const double> variances,
              std::size_t n_bins) {
    const std::size_t n = sq_errors.size();
    if (n == 0 || variances.size() != n) {
        throw std::invalid_argument("uce: inputs must be non-empty and of equal length");
    }
    if (n_bins == 0) {
        throw std::invalid_argument("uce: need at least one bin");
    }
    for (double v : variances) {
        if (!(v >= 0.0)) {
            throw std::invalid_argument("uce: variances must be nonnegative");
        }
    }
    const double lo = *std::min_element(variances.begin(), variances.end());
    const double hi = *std::max_element(variances.begin(), variances.end());
    const double range = hi - lo;

    UceResult result;
    result.bins.resize(n_bins);
    for (std::size_t m = 0; m < n_bins; ++m) {
        result.bins[m].bin = m;
        result.bins[m].lo = lo + range * static_cast<double>(m) / static_cast<double>(n_bins);
        result.bins[m].hi = lo + range * static_cast<double>(m + 1) / static_cast<double>(n_bins);
    }
    for (std::size_t i = 0; i < n; ++i) {
        std::size_t m = 0;
        if (range > 0.0) {
            m = std::min(static_cast<std::size_t>((variances[i] - lo) / range *
                                                  static_cast<double>(n_bins)),
                         n_bins - 1);
        }
        result.bins[m].count += 1;
        result.bins[m].err += sq_errors[i];
        result.bins[m].uncer += variances[i];
    }
    double total = 0.0;
    for (BinStats& b : result.bins) {
        if (b.count == 0) {
            continue;
        }
        b.err /= static_cast<double>(b.count);
        b.uncer /= static_cast<double>(b.count);
        total += static_cast<double>(b.count) / static_cast<double>(n) * std::abs(b.err - b.uncer);
    }
    result.uce = total;
    return result;
}

double pearson_corr(std::span<const double> a, std::span<const double> b) {
    const std::size_t n = a.size();
    if (n < 2 || b.size() != n) {
        throw std::invalid_argument("pearson_corr: need two equally sized inputs, n >= 2");
    }
    bool a_const = true, b_const = true;
    double ma = 0, mb = 0;
    for (std::size_t i = 0; i < n; ++i) {
        ma += a[i];
        mb += b[i];
        a_const = a_const && (a[i] == a[0]);
        b_const = b_const && (b[i] == b[0]);
    }
    if (a_const || b_const) {
        return std::numeric_limits<double>::quiet_NaN();
    }
    ma /= static_cast<double>(n);
    mb /= static_cast<double>(n);
    double saa = 0, sbb = 0, sab = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const double da = a[i] - ma;
        const double db = b[i] - mb;
        saa += da * da;
        sbb += db * db;
        sab += da * db;
    }
    if (saa == 0.0 || sbb == 0.0) {
        return std::numeric_limits<double>::quiet_NaN();
    }
    return sab / std::sqrt(saa * sbb);
}

std::vector<double> default_ece_levels() {
    return {0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9};
}

double ggd_central_interval_halfwidth(double alpha, double beta, double p) {
    // |Y - mu| = alpha G^(1/beta) with G ~ Gamma(1/beta, 1), so the central
    // p-quantile solves P(1/beta, (t/alpha)^beta) = p.
    const double x = inv_reg_lower_inc_gamma(1.0 / beta, p);
    return alpha * std::pow(x, 1.0 / beta);
}

double ece_quantile(const Tensor& residuals, const PredictiveMap& pred,
                    std::span<const double> levels) {
    if (!residuals.same_shape(pred.alpha)) {
        throw std::invalid_argument("ece_quantile: residuals do not match the predictive map");
    }
    if (levels.empty()) {
        throw std::invalid_argument("ece_quantile: need at least one level");
    }
    for (double p : levels) {
        if (!(p > 0.0) || !(p < 1.0)) {
            throw std::invalid_argument("ece_quantile: levels must lie strictly inside (0, 1)");
        }
    }
    const std::size_t n = residuals.size();
    double total = 0.0;
    for (double p : levels) {
        std::size_t covered = 0;
        for (std::size_t i = 0; i < n; ++i) {
            const double t = ggd_central_interval_halfwidth(pred.alpha[i], pred.beta[i], p);
            if (std::abs(residuals[i]) <= t) {
                ++covered;
            }
        }
        total += std::abs(static_cast<double>(covered) / static_cast<double>(n) - p);
    }
    return total / static_cast<double>(levels.size());
}

double sharpness(std::span<const double> variances) {
    if (variances.empty()) {
        throw std::invalid_argument("sharpness: empty input");
    }
    double acc = 0.0;
    for (double v : variances) acc += v;
    return acc / static_cast<double>(variances.size());
}

const char* nll_convention_name(NllConvention c) {
    return c == NllConvention::ggd ? "ggd" : "gaussian";
}

double nll_eval(const PredictiveMap& pred, const Tensor& y, NllConvention conv) {
    if (conv == NllConvention::ggd) {
        return ggd_nll_loss(pred, y);
    }
    return gaussian_nll_loss(pred.y_tilde, y, pred.variance);
}

double variance_scaling_fit(std::span<const double> residuals, std::span<const double> sigmas2) {
    const std::size_t n = residuals.size();
    if (n == 0 || sigmas2.size() != n) {
        throw std::invalid_argument("variance_scaling_fit: inputs must be non-empty, equal length");
    }
    double q = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        if (!(sigmas2[i] > 0.0)) {
            throw std::invalid_argument("variance_scaling_fit: zero variance entry");
        }
        q += residuals[i] * residuals[i] / sigmas2[i];
    }
    return std::sqrt(q / static_cast<double>(n));
}

}  // namespace idcap
