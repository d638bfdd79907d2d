#include "idcap/adam.hpp"

#include <cmath>
#include <stdexcept>

namespace idcap {

AdamState AdamState::for_params(const std::vector<const Tensor*>& params, AdamHyper hyper) {
    AdamState s;
    s.hyper = hyper;
    s.m.reserve(params.size());
    s.v.reserve(params.size());
    for (const Tensor* p : params) {
        s.m.push_back(p->empty() ? Tensor() : Tensor(p->shape()));
        s.v.push_back(p->empty() ? Tensor() : Tensor(p->shape()));
    }
    return s;
}

void adam_step(const std::vector<Tensor*>& params, const std::vector<const Tensor*>& grads,
               AdamState& state) {
    if (params.size() != grads.size() || params.size() != state.m.size()) {
        throw std::invalid_argument("adam_step: parameter/gradient/state count mismatch");
    }
    state.step += 1;
    const double b1 = state.hyper.beta1;
    const double b2 = state.hyper.beta2;
    const double bc1 = 1.0 - std::pow(b1, static_cast<double>(state.step));
    const double bc2 = 1.0 - std::pow(b2, static_cast<double>(state.step));
    for (std::size_t n = 0; n < params.size(); ++n) {
        Tensor& p = *params[n];
        const Tensor& g = *grads[n];
        if (!p.same_shape(g) || !p.same_shape(state.m[n])) {
            throw std::invalid_argument("adam_step: shape mismatch");
        }
        for (std::size_t i = 0; i < p.size(); ++i) {
            double& m = state.m[n][i];
            double& v = state.v[n][i];
            m = b1 * m + (1.0 - b1) * g[i];
            v = b2 * v + (1.0 - b2) * g[i] * g[i];
            const double m_hat = m / bc1;
            const double v_hat = v / bc2;
            p[i] -= state.hyper.lr * m_hat / (std::sqrt(v_hat) + state.hyper.eps);
        }
    }
}

}  // namespace idcap
