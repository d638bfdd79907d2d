#pragma once

#include <cstdint>
#include <vector>

#include "idcap/tensor.hpp"

namespace idcap {

struct AdamHyper {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

/// First/second moment estimates per parameter tensor, plus the shared step
/// count. Moment shapes mirror the parameter shapes.
struct AdamState {
    AdamHyper hyper;
    uint64_t step = 0;
    std::vector<Tensor> m;
    std::vector<Tensor> v;

    static AdamState for_params(const std::vector<const Tensor*>& params, AdamHyper hyper);
};

/// Standard Adam update with bias correction. `params` and `grads` must
/// mirror the state's moment layout.
void adam_step(const std::vector<Tensor*>& params, const std::vector<const Tensor*>& grads,
               AdamState& state);

}  // namespace idcap
