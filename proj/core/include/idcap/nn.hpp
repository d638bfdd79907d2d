#pragma once

#include <cstddef>
#include <limits>
#include <variant>
#include <vector>

#include "idcap/rng.hpp"
#include "idcap/tensor.hpp"

namespace idcap {

struct DenseSpec {
    std::size_t in = 0;
    std::size_t out = 0;
};

/// Stride-1 convolution with replicate padding. kernel is 1 or 3.
struct ConvSpec {
    int kernel = 3;
    std::size_t cin = 0;
    std::size_t cout = 0;
};

struct LeakyReluSpec {
    double slope = 0.1;
};

/// y = min(shift + softplus(x), cap). Output is strictly positive whenever
/// shift >= 0 (floored at the smallest normal double against underflow).
struct SoftplusSpec {
    double shift = 0.0;
    double cap = std::numeric_limits<double>::infinity();
};

/// y = clamp(exp(x), lo, hi). Gradient is zero where the clamp is active.
struct ExpSpec {
    double lo = 0.0;
    double hi = std::numeric_limits<double>::infinity();
};

/// Inverted dropout: kept activations are scaled by 1/(1-p) at sample time,
/// so the eval-mode forward is the identity.
struct DropoutSpec {
    double p = 0.0;
};

using LayerSpec = std::variant<DenseSpec, ConvSpec, LeakyReluSpec, SoftplusSpec, ExpSpec, DropoutSpec>;

struct Layer {
    LayerSpec spec;
    Tensor weights;  // dense: {out, in}; conv: {cout, cin, k, k}; otherwise empty
    Tensor bias;     // dense/conv: {out|cout}; otherwise empty
};

Layer make_dense(std::size_t in, std::size_t out);
Layer make_conv(int kernel, std::size_t cin, std::size_t cout);
Layer make_leaky_relu(double slope);
Layer make_softplus(double shift, double cap);
Layer make_exp_clamped(double lo, double hi);
Layer make_dropout(double p);

/// A plain sequential stack. Copyable value; training mutates a single
/// owner's copy, eval-mode forward on shared frozen weights is pure.
struct Network {
    std::vector<Layer> layers;

    std::size_t param_count() const;
};

/// He-uniform weights, zero biases, drawn from `rng` in layer order.
void init_params(Network& net, Rng& rng);

/// Activation record of one forward pass; required by backward().
struct Tape {
    std::vector<Tensor> inputs;  // input seen by each layer
    std::vector<Tensor> masks;   // dropout masks (empty entries elsewhere)
    Tensor output;
};

/// Runs the network. Dropout masks are drawn from `rng` only when
/// `stochastic` is set (training or MC sampling); eval mode ignores rng.
/// Records activations into `tape` when given.
Tensor forward(const Network& net, const Tensor& x, bool stochastic = false,
               Rng* rng = nullptr, Tape* tape = nullptr);

struct Gradients {
    std::vector<Tensor> weights;
    std::vector<Tensor> bias;
    Tensor input;
};

Gradients zero_gradients(const Network& net);

/// Exact reverse-mode gradients of the recorded computation. `grad_out` is
/// d(loss)/d(output); returns parameter gradients plus d(loss)/d(input).
Gradients backward(const Network& net, const Tape& tape, const Tensor& grad_out);

/// Sums `g` into `into` (elementwise, including the input gradient).
void accumulate_gradients(Gradients& into, const Gradients& g);
void scale_gradients(Gradients& g, double s);

/// Central finite-difference check of backward() on f = sum of outputs.
/// Returns the maximum relative error over all parameters and input
/// elements. When `stochastic` is set, every forward pass reuses a fresh
/// Rng(seed) so dropout masks are frozen across perturbations.
double finite_diff_check(Network& net, const Tensor& x, double h,
                         bool stochastic = false, uint64_t seed = 0);

}  // namespace idcap
