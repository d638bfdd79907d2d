#pragma once

#include <cstdint>
#include <vector>

#include "idcap/nn.hpp"
#include "idcap/tensor.hpp"

namespace idcap {

/// Clamp ranges applied by the distribution heads.
inline constexpr double kAlphaLo = 1e-4;
inline constexpr double kAlphaHi = 1e4;
inline constexpr double kBetaFloor = 0.2;
inline constexpr double kBetaCap = 10.0;
inline constexpr double kGaussVarLo = 1e-8;
inline constexpr double kGaussVarHi = 1e4;

/// Per-pixel distribution parameters (reconstruction, scale, shape) plus the
/// derived variance map. All four tensors share one shape.
struct PredictiveMap {
    Tensor y_tilde;
    Tensor alpha;
    Tensor beta;
    Tensor variance;
};

/// Builds the variance map elementwise from (alpha, beta).
PredictiveMap make_predictive_map(Tensor y_tilde, Tensor alpha, Tensor beta);

enum class ModelKind { base, cap, scratch_gauss, scratch_ggd, autoencoder };

const char* model_kind_name(ModelKind k);
ModelKind model_kind_from_name(const std::string& name);

/// A role-tagged bundle of networks. Single-net roles (base, autoencoder)
/// hold one entry; headed roles hold {trunk, heads...}.
struct Model {
    ModelKind kind = ModelKind::base;
    std::vector<Network> nets;

    Network& trunk() { return nets.at(0); }
    const Network& trunk() const { return nets.at(0); }
};

/// Point-estimate network: conv3(1->C) / leaky / conv3(C->C) / leaky / conv3(C->1).
Network make_base_net(std::size_t channels = 16);

/// Identity cap: conv trunk 1->C->C->C (leaky 0.1) and three 1x1-conv heads.
/// Reconstruction head is linear, the scale head is exp-clamped to
/// [kAlphaLo, kAlphaHi], the shape head is kBetaFloor + softplus capped at
/// kBetaCap.
Model make_cap_model(std::size_t channels = 16);

/// Scratch predictor with the same trunk. ggd_head: (y, alpha, beta) heads as
/// the cap; otherwise (y, variance) with an exp-clamped variance head.
Model make_scratch_model(bool ggd_head, std::size_t channels = 16);

/// Dense autoencoder image -> bottleneck -> image, used for feature-based
/// OOD scoring.
Model make_autoencoder_model(std::size_t h, std::size_t w, std::size_t bottleneck = 32);

/// He-uniform initialization of every net from a seed-derived stream.
void init_model(Model& model, uint64_t seed);

/// Parameter tensors in canonical order (net, layer, weights, bias),
/// skipping parameterless layers. The same order is used by the optimizer
/// and the checkpoint payload.
std::vector<Tensor*> model_params(Model& model);
std::vector<const Tensor*> model_params(const Model& model);

/// FNV-1a over the raw bytes of all parameters; used to assert the freeze
/// contract.
uint64_t weights_digest(const Model& model);

/// Deterministic point estimate of the frozen base network.
Tensor base_forward(const Network& base, const Tensor& x);

/// Runs the cap on a base output. The cap never sees the task input, only
/// the point estimate.
PredictiveMap cap_forward(const Model& cap, const Tensor& y_hat);

/// Runs a scratch model on the task input. Gaussian-head models are mapped
/// onto the shared parameterization as beta = 2, alpha = sqrt(2 variance).
PredictiveMap scratch_forward(const Model& scratch, const Tensor& x);

/// Autoencoder reconstruction (flattened image in, image out).
Tensor autoencoder_forward(const Model& ae, const Tensor& image);

}  // namespace idcap
