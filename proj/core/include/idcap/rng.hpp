#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace idcap {

/// One step of the splitmix64 generator; advances `state` and returns the next value.
uint64_t splitmix64_next(uint64_t& state);

/// Derives an independent stream seed from a master seed and a role tag.
/// Different tags give statistically unrelated streams, so adding a new
/// consumer never perturbs existing ones.
uint64_t derive_seed(uint64_t master, std::string_view tag);

/// Deterministic random source. All samplers are hand-rolled on top of the
/// raw 64-bit engine output, so sequences are identical across platforms
/// and standard-library versions.
class Rng {
public:
    explicit Rng(uint64_t seed) : eng_(seed) {}

    uint64_t next_u64() { return eng_(); }

    /// Uniform in [0, 1), 53-bit resolution.
    double uniform01() {
        return static_cast<double>(eng_() >> 11) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

    /// Uniform index in [0, n). n must be positive.
    std::size_t uniform_index(std::size_t n) {
        return static_cast<std::size_t>(eng_() % n);
    }

    /// Standard normal via Box-Muller.
    double normal();

    /// Gamma(shape, scale=1) via Marsaglia-Tsang, with the power boost for shape < 1.
    double gamma(double shape);

private:
    std::mt19937_64 eng_;
};

}  // namespace idcap
