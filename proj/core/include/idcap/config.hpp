#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "idcap/synth_data.hpp"
#include "idcap/train.hpp"

namespace idcap {

struct MetricOptions {
    std::size_t bins = 100;
    std::size_t ssim_window = 8;
};

struct BaselineOptions {
    std::size_t passes = 20;
    double dropout_p = 0.2;
    double noise_sigma = 0.05;
    int shift_max = 2;
    bool flip = true;
    double blur_max = 1.0;
    double contrast_lo = 0.8;
    double contrast_hi = 1.2;
    double jitter = 0.1;
    double const_low = 0.015;
    double const_high = 0.95;
};

struct SweepOptions {
    std::vector<double> kappas = {0.0, 0.025, 0.05, 0.075, 0.1, 0.125, 0.15};
    std::vector<double> fractions = {0.1, 0.25, 0.5, 1.0};
};

struct OodOptions {
    std::size_t count = 60;        // per out-of-distribution family
    std::size_t bottleneck = 32;   // autoencoder feature width
};

/// Everything one run needs: dataset spec, per-role training configs, metric
/// options, sweep definitions, output directory and the master seed. All
/// randomized procedures derive their streams from the master seed plus a
/// role tag.
struct ExperimentConfig {
    uint64_t seed = 1234;
    DatasetSpec dataset;
    TrainConfig train_base_cfg;
    TrainConfig train_cap_cfg;
    TrainConfig train_scratch_cfg;
    TrainConfig train_ae_cfg;
    MetricOptions metrics;
    BaselineOptions baselines;
    SweepOptions sweep;
    OodOptions ood;
    std::string out_dir = "out";
    uint64_t config_hash = 0;  // FNV-1a of the config file bytes
};

ExperimentConfig default_config();

/// Parses the flat key=value grammar with [section] headers ('#' starts a
/// comment). Unknown sections or keys are config errors.
ExperimentConfig parse_config_text(const std::string& text);

/// Reads and parses a config file; fills config_hash from the raw bytes.
ExperimentConfig parse_config_file(const std::string& path);

uint64_t fnv1a64(const std::string& bytes);

}  // namespace idcap
