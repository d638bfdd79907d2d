#pragma once

#include <string>

#include "idcap/tensor.hpp"

namespace idcap {

/// Tensor file format: magic "TNSR1", u32 rank, u32 dims[rank], then the
/// little-endian f64 payload. Round trips are bit-exact.
void save_tensor(const std::string& path, const Tensor& t);

/// Throws missing_artifact_error if absent; io_error on bad magic, truncated
/// payload or overflowing shape.
Tensor load_tensor(const std::string& path);

/// Binary P5 PGM, 8-bit, for a single-channel (1,H,W) tensor with values in
/// [0, 1]. Quantizes via floor(v * 255 + 0.5).
void export_pgm(const std::string& path, const Tensor& t);

}  // namespace idcap
