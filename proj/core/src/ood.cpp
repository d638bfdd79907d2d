#include "idcap/ood.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>

#include "idcap/tensor.hpp"

namespace idcap {

Tensor layer_activation(const Network& net, const Tensor& x, std::size_t layer_index) {
    if (layer_index >= net.layers.size()) {
        throw std::invalid_argument("layer_activation: layer index out of range");
    }
    Network prefix;
    prefix.layers.assign(net.layers.begin(), net.layers.begin() + layer_index + 1);
    Tensor act = forward(prefix, x);
    return act.reshaped({act.size()});
}

Tensor feature_mean(const Network& net, std::size_t layer_index,
                    std::span<const Tensor> inputs) {
    if (inputs.empty()) {
        throw std::invalid_argument("feature_mean: empty validation set");
    }
    Tensor mean = layer_activation(net, inputs[0], layer_index);
    for (std::size_t k = 1; k < inputs.size(); ++k) {
        const Tensor f = layer_activation(net, inputs[k], layer_index);
        for (std::size_t i = 0; i < mean.size(); ++i) {
            mean[i] += f[i];
        }
    }
    const double inv = 1.0 / static_cast<double>(inputs.size());
    for (std::size_t i = 0; i < mean.size(); ++i) {
        mean[i] *= inv;
    }
    return mean;
}

double feature_distance_score(const Network& net, std::size_t layer_index, const Tensor& mean,
                              const Tensor& x) {
    const Tensor f = layer_activation(net, x, layer_index);
    if (!f.same_shape(mean)) {
        throw std::invalid_argument("feature_distance_score: feature shape mismatch");
    }
    double d2 = 0.0;
    for (std::size_t i = 0; i < f.size(); ++i) {
        const double d = f[i] - mean[i];
        d2 += d * d;
    }
    return d2;
}

Tensor ae_bottleneck(const Model& ae, const Tensor& image) {
    if (ae.kind != ModelKind::autoencoder) {
        throw std::invalid_argument("ae_bottleneck: wrong model kind");
    }
    // dense -> leaky_relu is the bottleneck stage; take the post-activation.
    return layer_activation(ae.nets[0], image.reshaped({image.size()}), 1);
}

Tensor ae_feature_mean(const Model& ae, std::span<const Tensor> images) {
    if (images.empty()) {
        throw std::invalid_argument("ae_feature_mean: empty validation set");
    }
    Tensor mean = ae_bottleneck(ae, images[0]);
    for (std::size_t k = 1; k < images.size(); ++k) {
        const Tensor f = ae_bottleneck(ae, images[k]);
        for (std::size_t i = 0; i < mean.size(); ++i) {
            mean[i] += f[i];
        }
    }
    const double inv = 1.0 / static_cast<double>(images.size());
    for (std::size_t i = 0; i < mean.size(); ++i) {
        mean[i] *= inv;
    }
    return mean;
}

double ae_feature_score(const Model& ae, const Tensor& mean, const Tensor& image) {
    const Tensor f = ae_bottleneck(ae, image);
    if (!f.same_shape(mean)) {
        throw std::invalid_argument("ae_feature_score: feature shape mismatch");
    }
    double d2 = 0.0;
    for (std::size_t i = 0; i < f.size(); ++i) {
        const double d = f[i] - mean[i];
        d2 += d * d;
    }
    return d2;
}

double ae_recon_mse(const Model& ae, const Tensor& image) {
    return tensor_mse(autoencoder_forward(ae, image), image);
}

double mean_uncertainty_score(const Network& base, const Model& cap, const Tensor& x) {
    const PredictiveMap map = cap_forward(cap, base_forward(base, x));
    return tensor_mean(map.variance);
}

RocCurve roc_auroc(std::span<const double> scores, std::span<const int> labels) {
    const std::size_t n = scores.size();
    if (n == 0 || labels.size() != n) {
        throw std::invalid_argument("roc_auroc: inputs must be non-empty and of equal length");
    }
    std::size_t n_pos = 0;
    for (int l : labels) {
        n_pos += (l != 0) ? 1 : 0;
    }
    const std::size_t n_neg = n - n_pos;
    if (n_pos == 0 || n_neg == 0) {
        throw std::invalid_argument("roc_auroc: both classes must be present");
    }

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });

    RocCurve curve;
    curve.points.push_back({0.0, 0.0});
    std::size_t tp = 0, fp = 0;
    double auroc = 0.0;
    double prev_fpr = 0.0, prev_tpr = 0.0;
    std::size_t i = 0;
    while (i < n) {
        // group ties into one threshold step
        std::size_t j = i;
        while (j < n && scores[order[j]] == scores[order[i]]) {
            tp += (labels[order[j]] != 0) ? 1 : 0;
            fp += (labels[order[j]] == 0) ? 1 : 0;
            ++j;
        }
        const double fpr = static_cast<double>(fp) / static_cast<double>(n_neg);
        const double tpr = static_cast<double>(tp) / static_cast<double>(n_pos);
        curve.points.push_back({fpr, tpr});
        auroc += (fpr - prev_fpr) * (tpr + prev_tpr) * 0.5;
        prev_fpr = fpr;
        prev_tpr = tpr;
        i = j;
    }
    curve.auroc = auroc;
    return curve;
}

}  // namespace idcap
