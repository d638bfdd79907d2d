#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "idcap/adam.hpp"
#include "idcap/model.hpp"

namespace idcap {

/// Serialized network topology + weights + optimizer state + RNG seed.
/// On-disk layout: magic "IDCAP1", u32 little-endian header length, JSON
/// header (layer specs, parameter shapes, seed, step, optimizer hyperparams),
/// then little-endian 64-bit float blocks in canonical parameter order,
/// followed by the Adam first/second moments in the same order when present.
/// Round trips are bit-exact.
struct Checkpoint {
    Model model;
    uint64_t seed = 0;
    uint64_t step = 0;
    std::optional<AdamState> adam;
};

void save_checkpoint(const std::string& path, const Checkpoint& ckpt);

/// Throws missing_artifact_error if the file does not exist and io_error on
/// bad magic or a truncated/inconsistent payload.
Checkpoint load_checkpoint(const std::string& path);

}  // namespace idcap
