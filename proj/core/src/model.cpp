#include "idcap/model.hpp"

#include <cmath>
#include <cstring>
#include <stdexcept>

#include "idcap/ggd.hpp"
#include "idcap/rng.hpp"

namespace idcap {

PredictiveMap make_predictive_map(Tensor y_tilde, Tensor alpha, Tensor beta) {
    if (!y_tilde.same_shape(alpha) || !y_tilde.same_shape(beta)) {
        throw std::invalid_argument("make_predictive_map: shape mismatch");
    }
    Tensor variance(y_tilde.shape());
    for (std::size_t i = 0; i < variance.size(); ++i) {
        variance[i] = ggd_variance(alpha[i], beta[i]);
    }
    PredictiveMap map;
    map.y_tilde = std::move(y_tilde);
    map.alpha = std::move(alpha);
    map.beta = std::move(beta);
    map.variance = std::move(variance);
    return map;
}

const char* model_kind_name(ModelKind k) {
    switch (k) {
        case ModelKind::base: return "base";
        case ModelKind::cap: return "cap";
        case ModelKind::scratch_gauss: return "scratch_gauss";
        case ModelKind::scratch_ggd: return "scratch_ggd";
        case ModelKind::autoencoder: return "autoencoder";
    }
    return "?";
}

ModelKind model_kind_from_name(const std::string& name) {
    if (name == "base") return ModelKind::base;
    if (name == "cap") return ModelKind::cap;
    if (name == "scratch_gauss") return ModelKind::scratch_gauss;
    if (name == "scratch_ggd") return ModelKind::scratch_ggd;
    if (name == "autoencoder") return ModelKind::autoencoder;
    throw std::invalid_argument("unknown model kind: " + name);
}

Network make_base_net(std::size_t channels) {
    Network net;
    net.layers.push_back(make_conv(3, 1, channels));
    net.layers.push_back(make_leaky_relu(0.1));
    net.layers.push_back(make_conv(3, channels, channels));
    net.layers.push_back(make_leaky_relu(0.1));
    net.layers.push_back(make_conv(3, channels, 1));
    return net;
}

namespace {

Network make_conv_trunk(std::size_t channels) {
    Network net;
    net.layers.push_back(make_conv(3, 1, channels));
    net.layers.push_back(make_leaky_relu(0.1));
    net.layers.push_back(make_conv(3, channels, channels));
    net.layers.push_back(make_leaky_relu(0.1));
    net.layers.push_back(make_conv(3, channels, channels));
    net.layers.push_back(make_leaky_relu(0.1));
    return net;
}

Network make_linear_head(std::size_t channels) {
    Network net;
    net.layers.push_back(make_conv(1, channels, 1));
    return net;
}

Network make_alpha_head(std::size_t channels) {
    Network net;
    net.layers.push_back(make_conv(1, channels, 1));
    net.layers.push_back(make_exp_clamped(kAlphaLo, kAlphaHi));
    return net;
}

Network make_beta_head(std::size_t channels) {
    Network net;
    net.layers.push_back(make_conv(1, channels, 1));
    net.layers.push_back(make_softplus(kBetaFloor, kBetaCap));
    return net;
}

Network make_gauss_var_head(std::size_t channels) {
    Network net;
    net.layers.push_back(make_conv(1, channels, 1));
    net.layers.push_back(make_exp_clamped(kGaussVarLo, kGaussVarHi));
    return net;
}

}  // namespace

Model make_cap_model(std::size_t channels) {
    Model m;
    m.kind = ModelKind::cap;
    m.nets = {make_conv_trunk(channels), make_linear_head(channels), make_alpha_head(channels),
              make_beta_head(channels)};
    return m;
}

Model make_scratch_model(bool ggd_head, std::size_t channels) {
    Model m;
    if (ggd_head) {
        m.kind = ModelKind::scratch_ggd;
        m.nets = {make_conv_trunk(channels), make_linear_head(channels),
                  make_alpha_head(channels), make_beta_head(channels)};
    } else {
        m.kind = ModelKind::scratch_gauss;
        m.nets = {make_conv_trunk(channels), make_linear_head(channels),
                  make_gauss_var_head(channels)};
    }
    return m;
}

Model make_autoencoder_model(std::size_t h, std::size_t w, std::size_t bottleneck) {
    Model m;
    m.kind = ModelKind::autoencoder;
    Network net;
    net.layers.push_back(make_dense(h * w, bottleneck));
    net.layers.push_back(make_leaky_relu(0.1));
    net.layers.push_back(make_dense(bottleneck, h * w));
    m.nets = {std::move(net)};
    return m;
}

void init_model(Model& model, uint64_t seed) {
    Rng rng(seed);
    for (Network& net : model.nets) {
        init_params(net, rng);
    }
}

std::vector<Tensor*> model_params(Model& model) {
    std::vector<Tensor*> out;
    for (Network& net : model.nets) {
        for (Layer& l : net.layers) {
            if (!l.weights.empty()) {
                out.push_back(&l.weights);
                out.push_back(&l.bias);
            }
        }
    }
    return out;
}

std::vector<const Tensor*> model_params(const Model& model) {
    std::vector<const Tensor*> out;
    for (const Network& net : model.nets) {
        for (const Layer& l : net.layers) {
            if (!l.weights.empty()) {
                out.push_back(&l.weights);
                out.push_back(&l.bias);
            }
        }
    }
    return out;
}

uint64_t weights_digest(const Model& model) {
    uint64_t h = 0xcbf29ce484222325ull;
    const auto mix = [&h](const Tensor& t) {
        for (double v : t.values()) {
            uint64_t bits;
            std::memcpy(&bits, &v, 8);
            for (int i = 0; i < 8; ++i) {
                h ^= (bits >> (8 * i)) & 0xff;
                h *= 0x100000001b3ull;
            }
        }
    };
    for (const Tensor* p : model_params(model)) {
        mix(*p);
    }
    return h;
}

Tensor base_forward(const Network& base, const Tensor& x) {
    return forward(base, x);
}

PredictiveMap cap_forward(const Model& cap, const Tensor& y_hat) {
    if (cap.kind != ModelKind::cap) {
        throw std::invalid_argument("cap_forward: model is not a cap");
    }
    const Tensor t = forward(cap.trunk(), y_hat);
    return make_predictive_map(forward(cap.nets[1], t), forward(cap.nets[2], t),
                               forward(cap.nets[3], t));
}

PredictiveMap scratch_forward(const Model& scratch, const Tensor& x) {
    if (scratch.kind == ModelKind::scratch_ggd) {
        const Tensor t = forward(scratch.trunk(), x);
        return make_predictive_map(forward(scratch.nets[1], t), forward(scratch.nets[2], t),
                                   forward(scratch.nets[3], t));
    }
    if (scratch.kind == ModelKind::scratch_gauss) {
        const Tensor t = forward(scratch.trunk(), x);
        Tensor y = forward(scratch.nets[1], t);
        Tensor s2 = forward(scratch.nets[2], t);
        Tensor alpha(s2.shape());
        Tensor beta(s2.shape(), 2.0);
        for (std::size_t i = 0; i < s2.size(); ++i) {
            alpha[i] = std::sqrt(2.0 * s2[i]);
        }
        return make_predictive_map(std::move(y), std::move(alpha), std::move(beta));
    }
    throw std::invalid_argument("scratch_forward: model is not a scratch predictor");
}

Tensor autoencoder_forward(const Model& ae, const Tensor& image) {
    if (ae.kind != ModelKind::autoencoder) {
        throw std::invalid_argument("autoencoder_forward: wrong model kind");
    }
    Tensor flat = image.reshaped({image.size()});
    Tensor out = forward(ae.nets[0], flat);
    return out.reshaped(image.shape());
}

}  // namespace idcap
