#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "idcap/rng.hpp"
#include "idcap/tensor.hpp"

namespace idcap {

/// Generator families. A: band-limited sinusoid textures, B: random convex
/// polygon mosaics, C: i.i.d. uniform noise. Pairwise distinguishable; used
/// as in-distribution / shifted / severe OOD respectively.
enum class Family { A, B, C };

char family_letter(Family f);
Family family_from_letter(const std::string& s);

struct DegradationOp {
    enum class Kind { gauss_noise, gauss_blur, box_mask, downsample };
    Kind kind = Kind::gauss_noise;
    double noise_sigma = 0.1;               // gauss_noise
    int blur_radius = 2;                    // gauss_blur
    double blur_sigma = 1.0;                // gauss_blur
    std::size_t mask_w = 6, mask_h = 6;     // box_mask, random position per image
};

DegradationOp::Kind degradation_kind_from_name(const std::string& name);
const char* degradation_kind_name(DegradationOp::Kind k);

struct DatasetSpec {
    Family family = Family::A;
    std::size_t size = 16;  // images are 1 x size x size
    std::size_t count = 200;
    DegradationOp degradation;
    double train_frac = 0.7;
    double val_frac = 0.15;
    double test_frac = 0.15;
    uint64_t seed = 0;
};

/// Throws config_error when fractions do not sum to 1 or count < 10.
void validate_spec(const DatasetSpec& spec);

enum class Split { train, val, test };
const char* split_name(Split s);
Split split_from_name(const std::string& s);

struct Sample {
    std::size_t index = 0;
    Split split = Split::train;
    Family family = Family::A;
    Tensor x;  // degraded input
    Tensor y;  // clean target
};

struct Dataset {
    DatasetSpec spec;
    std::vector<Sample> samples;

    std::vector<std::size_t> positions_of(Split s) const;
};

/// Clean target image, a pure function of (seed, family, index), clamped to
/// [0, 1].
Tensor gen_clean(const DatasetSpec& spec, std::size_t index);

/// Degraded input of the same shape. Noise comes from `rng`; the downsample
/// op re-upsamples by nearest neighbor.
Tensor degrade(const Tensor& y, const DegradationOp& op, Rng& rng);

Split split_of_index(const DatasetSpec& spec, std::size_t index);

/// Generates all samples; degradation noise is drawn from a per-image stream
/// derived from the dataset seed.
Dataset generate_dataset(const DatasetSpec& spec);

/// Separable Gaussian blur with replicate padding, kernel normalized to unit
/// sum. sigma == 0 is the identity. Shared with the corruption baselines.
Tensor gauss_blur(const Tensor& img, int radius, double sigma);

/// Writes per-sample tensor files plus manifest.csv with columns
/// index,split,family,path_x,path_y (paths relative to `dir`).
void write_dataset(const std::string& dir, const Dataset& ds);

/// Reads a dataset back from a manifest produced by write_dataset.
Dataset load_dataset(const std::string& manifest_path);

}  // namespace idcap
