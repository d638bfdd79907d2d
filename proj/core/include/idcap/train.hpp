#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "idcap/checkpoint.hpp"
#include "idcap/model.hpp"
#include "idcap/synth_data.hpp"

namespace idcap {

struct TrainConfig {
    std::size_t epochs = 60;
    std::size_t batch_size = 8;
    double lr = 1e-3;
    double lambda0 = 10.0;       // identity-term weight at epoch 0
    double lambda_decay = 0.85;  // per-epoch exponential factor, in (0, 1)
    uint64_t seed = 0;
    double dropout_p = 0.2;      // used when a dropout site is requested
    std::size_t channels = 16;
};

/// lambda0 * decay^epoch.
double anneal_lambda(std::size_t epoch, const TrainConfig& cfg);

/// Mean over pixels of |y_hat - y|^2 / (2 sigma^2) + log(sigma^2) / 2.
double gaussian_nll_loss(const Tensor& y_hat, const Tensor& y, const Tensor& sigma2);

/// Mean over pixels of the generalized-Gaussian NLL term.
double ggd_nll_loss(const PredictiveMap& pred, const Tensor& y);

/// lambda * mean|y_tilde - y_hat|^2 + ggd_nll_loss(pred, y). The identity
/// term ties the cap's reconstruction to the frozen model's output.
double cap_loss(const PredictiveMap& pred, const Tensor& y_hat, const Tensor& y, double lambda);

struct EpochLogRow {
    std::size_t epoch = 0;
    double lambda = 0.0;
    double loss = 0.0;
    double identity_term = 0.0;
    double nll_term = 0.0;
};
using TrainLog = std::vector<EpochLogRow>;

/// CSV with columns epoch,lambda,loss,identity_term,nll_term.
void write_train_log_csv(const std::string& path, const TrainLog& log);

struct TrainResult {
    Checkpoint checkpoint;
    TrainLog log;
};

/// The cap consumes only (base output, target) pairs.
struct OutputPair {
    Tensor y_hat;
    Tensor y;
};

/// Point model minimizing mean squared error against the clean targets.
/// Throws numeric_error if the loss diverges.
TrainResult train_base(const Dataset& data, const TrainConfig& cfg);

/// Optimizes the composite cap objective with per-epoch annealed lambda.
/// The base checkpoint is read-only; its weights are byte-compared before
/// and after as the freeze contract.
TrainResult train_cap(const Checkpoint& base, const Dataset& data, const TrainConfig& cfg);

/// Same, but on an explicit (y_hat, y) stream; cap quality is a function of
/// the base outputs only.
TrainResult train_cap_on_outputs(const std::vector<OutputPair>& pairs, const TrainConfig& cfg);

/// Single network trained by the corresponding NLL from the task input:
/// (y, variance) heads for the Gaussian likelihood, (y, alpha, beta) for the
/// generalized Gaussian.
TrainResult train_scratch(const Dataset& data, const TrainConfig& cfg, bool ggd_head);

/// Dense autoencoder trained by MSE on the given images (base outputs).
TrainResult train_autoencoder(const std::vector<Tensor>& images, std::size_t bottleneck,
                              const TrainConfig& cfg);

/// Share of the gradient norm carried by each cap head for one pass over
/// `pairs` at a fixed lambda. Diagnostic behind the annealing rationale: at
/// extreme lambda the distribution heads stop learning.
struct HeadGradShares {
    double y_share = 0.0;
    double alpha_share = 0.0;
    double beta_share = 0.0;
};
HeadGradShares cap_gradient_shares(const Model& cap, const std::vector<OutputPair>& pairs,
                                   double lambda);

}  // namespace idcap
