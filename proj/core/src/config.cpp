#include "idcap/config.hpp"

#include <algorithm>
#include <charconv>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "idcap/errors.hpp"

namespace idcap {

uint64_t fnv1a64(const std::string& bytes) {
    uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    return h;
}

ExperimentConfig default_config() {
    ExperimentConfig cfg;
    cfg.train_base_cfg.epochs = 40;
    cfg.train_cap_cfg.epochs = 60;
    cfg.train_scratch_cfg.epochs = 60;
    cfg.train_ae_cfg.epochs = 30;
    return cfg;
}

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

double to_double(const std::string& key, const std::string& v) {
    try {
        std::size_t used = 0;
        const double d = std::stod(v, &used);
        if (used != v.size()) throw std::invalid_argument(v);
        return d;
    } catch (const std::exception&) {
        throw config_error("config: '" + key + "' expects a number, got '" + v + "'");
    }
}

uint64_t to_u64(const std::string& key, const std::string& v) {
    uint64_t out = 0;
    const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc() || p != v.data() + v.size()) {
        throw config_error("config: '" + key + "' expects a nonnegative integer, got '" + v + "'");
    }
    return out;
}

bool to_bool(const std::string& key, const std::string& v) {
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    throw config_error("config: '" + key + "' expects a boolean, got '" + v + "'");
}

std::vector<double> to_list(const std::string& key, const std::string& v) {
    std::vector<double> out;
    std::stringstream ss(v);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (item.empty()) continue;
        out.push_back(to_double(key, item));
    }
    if (out.empty()) {
        throw config_error("config: '" + key + "' expects a comma-separated list");
    }
    return out;
}

void apply_train_key(TrainConfig& t, const std::string& section, const std::string& key,
                     const std::string& value) {
    if (key == "epochs") {
        t.epochs = to_u64(key, value);
    } else if (key == "batch_size") {
        t.batch_size = to_u64(key, value);
        if (t.batch_size == 0) throw config_error("config: batch_size must be positive");
    } else if (key == "lr") {
        t.lr = to_double(key, value);
    } else if (key == "lambda0") {
        t.lambda0 = to_double(key, value);
        if (t.lambda0 < 0) throw config_error("config: lambda0 must be nonnegative");
    } else if (key == "lambda_decay") {
        t.lambda_decay = to_double(key, value);
    } else if (key == "channels") {
        t.channels = to_u64(key, value);
        if (t.channels == 0) throw config_error("config: channels must be positive");
    } else if (key == "dropout_p") {
        t.dropout_p = to_double(key, value);
    } else {
        throw config_error("config: unknown key '" + key + "' in [" + section + "]");
    }
}

}  // namespace

ExperimentConfig parse_config_text(const std::string& text) {
    ExperimentConfig cfg = default_config();
    std::istringstream in(text);
    std::string raw;
    std::string section;
    std::size_t lineno = 0;
    while (std::getline(in, raw)) {
        ++lineno;
        std::string line = raw;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;

        if (line.front() == '[') {
            if (line.back() != ']') {
                throw config_error("config line " + std::to_string(lineno) +
                                   ": unterminated section header");
            }
            section = trim(line.substr(1, line.size() - 2));
            static const char* known[] = {"dataset",  "train-base", "train-cap",
                                          "train-scratch", "train-ae", "metrics",
                                          "baselines", "sweep", "ood", "output"};
            if (std::find_if(std::begin(known), std::end(known), [&](const char* k) {
                    return section == k;
                }) == std::end(known)) {
                throw config_error("config: unknown section [" + section + "]");
            }
            continue;
        }

        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw config_error("config line " + std::to_string(lineno) + ": expected key = value");
        }
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty() || value.empty()) {
            throw config_error("config line " + std::to_string(lineno) + ": empty key or value");
        }

        if (section.empty()) {
            if (key == "seed") {
                cfg.seed = to_u64(key, value);
            } else {
                throw config_error("config: unknown top-level key '" + key + "'");
            }
        } else if (section == "dataset") {
            if (key == "family") {
                cfg.dataset.family = family_from_letter(value);
            } else if (key == "size") {
                cfg.dataset.size = to_u64(key, value);
            } else if (key == "count") {
                cfg.dataset.count = to_u64(key, value);
            } else if (key == "degradation") {
                cfg.dataset.degradation.kind = degradation_kind_from_name(value);
            } else if (key == "noise_sigma") {
                cfg.dataset.degradation.noise_sigma = to_double(key, value);
            } else if (key == "blur_radius") {
                cfg.dataset.degradation.blur_radius = static_cast<int>(to_u64(key, value));
            } else if (key == "blur_sigma") {
                cfg.dataset.degradation.blur_sigma = to_double(key, value);
            } else if (key == "mask_w") {
                cfg.dataset.degradation.mask_w = to_u64(key, value);
            } else if (key == "mask_h") {
                cfg.dataset.degradation.mask_h = to_u64(key, value);
            } else if (key == "train_frac") {
                cfg.dataset.train_frac = to_double(key, value);
            } else if (key == "val_frac") {
                cfg.dataset.val_frac = to_double(key, value);
            } else if (key == "test_frac") {
                cfg.dataset.test_frac = to_double(key, value);
            } else {
                throw config_error("config: unknown key '" + key + "' in [dataset]");
            }
        } else if (section == "train-base") {
            apply_train_key(cfg.train_base_cfg, section, key, value);
        } else if (section == "train-cap") {
            apply_train_key(cfg.train_cap_cfg, section, key, value);
        } else if (section == "train-scratch") {
            apply_train_key(cfg.train_scratch_cfg, section, key, value);
        } else if (section == "train-ae") {
            if (key == "bottleneck") {
                cfg.ood.bottleneck = to_u64(key, value);
            } else {
                apply_train_key(cfg.train_ae_cfg, section, key, value);
            }
        } else if (section == "metrics") {
            if (key == "bins") {
                cfg.metrics.bins = to_u64(key, value);
                if (cfg.metrics.bins == 0) throw config_error("config: bins must be positive");
            } else if (key == "ssim_window") {
                cfg.metrics.ssim_window = to_u64(key, value);
                if (cfg.metrics.ssim_window == 0) {
                    throw config_error("config: ssim_window must be positive");
                }
            } else {
                throw config_error("config: unknown key '" + key + "' in [metrics]");
            }
        } else if (section == "baselines") {
            if (key == "passes") {
                cfg.baselines.passes = to_u64(key, value);
                if (cfg.baselines.passes == 0) {
                    throw config_error("config: passes must be positive");
                }
            } else if (key == "dropout_p") {
                cfg.baselines.dropout_p = to_double(key, value);
                if (cfg.baselines.dropout_p < 0.0 || cfg.baselines.dropout_p >= 1.0) {
                    throw config_error("config: dropout_p must lie in [0, 1)");
                }
            } else if (key == "noise_sigma") {
                cfg.baselines.noise_sigma = to_double(key, value);
            } else if (key == "shift_max") {
                cfg.baselines.shift_max = static_cast<int>(to_u64(key, value));
            } else if (key == "flip") {
                cfg.baselines.flip = to_bool(key, value);
            } else if (key == "blur_max") {
                cfg.baselines.blur_max = to_double(key, value);
            } else if (key == "contrast_lo") {
                cfg.baselines.contrast_lo = to_double(key, value);
            } else if (key == "contrast_hi") {
                cfg.baselines.contrast_hi = to_double(key, value);
            } else if (key == "jitter") {
                cfg.baselines.jitter = to_double(key, value);
            } else if (key == "const_low") {
                cfg.baselines.const_low = to_double(key, value);
            } else if (key == "const_high") {
                cfg.baselines.const_high = to_double(key, value);
            } else {
                throw config_error("config: unknown key '" + key + "' in [baselines]");
            }
        } else if (section == "sweep") {
            if (key == "kappas") {
                cfg.sweep.kappas = to_list(key, value);
                for (double k : cfg.sweep.kappas) {
                    if (k < 0) throw config_error("config: kappas must be nonnegative");
                }
            } else if (key == "fractions") {
                cfg.sweep.fractions = to_list(key, value);
                for (double f : cfg.sweep.fractions) {
                    if (!(f > 0.0) || f > 1.0) {
                        throw config_error("config: fractions must lie in (0, 1]");
                    }
                }
            } else {
                throw config_error("config: unknown key '" + key + "' in [sweep]");
            }
        } else if (section == "ood") {
            if (key == "count") {
                cfg.ood.count = to_u64(key, value);
                if (cfg.ood.count < 4) throw config_error("config: ood count must be >= 4");
            } else if (key == "bottleneck") {
                cfg.ood.bottleneck = to_u64(key, value);
            } else {
                throw config_error("config: unknown key '" + key + "' in [ood]");
            }
        } else if (section == "output") {
            if (key == "dir") {
                cfg.out_dir = value;
            } else {
                throw config_error("config: unknown key '" + key + "' in [output]");
            }
        }
    }
    validate_spec(cfg.dataset);
    return cfg;
}

ExperimentConfig parse_config_file(const std::string& path) {
    if (!std::filesystem::exists(path)) {
        throw config_error("config file not found: " + path);
    }
    std::ifstream f(path, std::ios::binary);
    if (!f) {
        throw config_error("config: cannot open " + path);
    }
    const std::string text((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
    ExperimentConfig cfg = parse_config_text(text);
    cfg.config_hash = fnv1a64(text);
    return cfg;
}

}  // namespace idcap
