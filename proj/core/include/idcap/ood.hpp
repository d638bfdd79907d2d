#pragma once

#include <span>
#include <string>
#include <vector>

#include "idcap/model.hpp"

namespace idcap {

/// Eval-mode activation after layer `layer_index` (inclusive), flattened.
Tensor layer_activation(const Network& net, const Tensor& x, std::size_t layer_index);

/// Arithmetic mean of intermediate activations over a validation set.
Tensor feature_mean(const Network& net, std::size_t layer_index,
                    std::span<const Tensor> inputs);

/// Squared L2 distance between the sample's features and the validation mean.
double feature_distance_score(const Network& net, std::size_t layer_index, const Tensor& mean,
                              const Tensor& x);

/// Bottleneck activation of the dense autoencoder (post-activation),
/// computed on an image (a base output).
Tensor ae_bottleneck(const Model& ae, const Tensor& image);

Tensor ae_feature_mean(const Model& ae, std::span<const Tensor> images);

double ae_feature_score(const Model& ae, const Tensor& mean, const Tensor& image);

/// Autoencoder reconstruction error; diagnostic for in- vs out-of-distribution.
double ae_recon_mse(const Model& ae, const Tensor& image);

/// Mean of the cap's per-pixel variance map on base(x). Higher = more OOD.
double mean_uncertainty_score(const Network& base, const Model& cap, const Tensor& x);

struct OODScore {
    std::size_t id = 0;
    double score = 0.0;
    std::string detector;
    bool is_ood = false;
};

struct RocPoint {
    double fpr = 0.0;
    double tpr = 0.0;
};

struct RocCurve {
    std::vector<RocPoint> points;
    double auroc = 0.0;
};

/// ROC by descending-score threshold sweep with equal scores grouped into a
/// single step; AUROC by trapezoid. `labels` are 1 for OOD (positive).
/// Throws if only one class is present.
RocCurve roc_auroc(std::span<const double> scores, std::span<const int> labels);

}  // namespace idcap
