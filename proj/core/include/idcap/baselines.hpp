#pragma once

#include <cstdint>
#include <vector>

#include "idcap/nn.hpp"
#include "idcap/rng.hpp"
#include "idcap/tensor.hpp"

namespace idcap {

/// Test-time augmentation recipe. `passes` perturbed copies of the input are
/// pushed through the frozen model; the per-pixel spread of the outputs is
/// the uncertainty map.
struct AugmentSpec {
    enum class Kind { pixel_noise, affine, corrupt, combined };
    Kind kind = Kind::pixel_noise;
    std::size_t passes = 20;

    double noise_sigma = 0.05;  // pixel_noise / combined

    int shift_max = 2;          // affine: integer shifts, invertible on the grid
    bool flip_allowed = true;   // affine: horizontal flip

    double blur_max = 1.0;      // corrupt: blur sigma drawn from [0, blur_max]
    double contrast_lo = 0.8;   // corrupt: gain about mid-gray
    double contrast_hi = 1.2;
    double jitter = 0.1;        // corrupt: brightness offset in [-jitter, jitter]
};

/// Per-pixel aggregates across passes. Affine passes inverse-warp the output
/// back to target coordinates first; pixels that left the frame are excluded,
/// and `valid` counts the contributing passes per pixel.
struct UncertaintyMaps {
    Tensor mean;
    Tensor var;    // population variance over valid passes
    Tensor valid;  // pass count per pixel
};

/// Test-time-data-augmentation uncertainty for a frozen base model. The
/// reported point estimate stays base(x); only the variance map is derived.
UncertaintyMaps ttda(const Network& base, const Tensor& x, const AugmentSpec& spec, Rng& rng);

/// Copy of the network with a dropout site inserted before its last layer.
Network with_dropout_before_last(const Network& net, double p);

/// Stochastic forward passes with dropout masks active at inference.
UncertaintyMaps mc_dropout(const Network& net, const Tensor& x, std::size_t passes, double p,
                           Rng& rng);

/// Dropout combined with the full augmentation chain (per-pass perturbation
/// and masks both active).
UncertaintyMaps mc_dropout_ttda(const Network& net, const Tensor& x, const AugmentSpec& spec,
                                double p, Rng& rng);

/// Uniform variance map of value c >= 0.
Tensor constant_uncertainty(const std::vector<std::size_t>& shape, double c);

}  // namespace idcap
