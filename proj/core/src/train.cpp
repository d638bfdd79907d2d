#include "idcap/train.hpp"

#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "idcap/adam.hpp"
#include "idcap/errors.hpp"
#include "idcap/format.hpp"
#include "idcap/ggd.hpp"

namespace idcap {

double anneal_lambda(std::size_t epoch, const TrainConfig& cfg) {
    return cfg.lambda0 * std::pow(cfg.lambda_decay, static_cast<double>(epoch));
}

double gaussian_nll_loss(const Tensor& y_hat, const Tensor& y, const Tensor& sigma2) {
    if (!y_hat.same_shape(y) || !y_hat.same_shape(sigma2)) {
        throw std::invalid_argument("gaussian_nll_loss: shape mismatch");
    }
    double acc = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) {
        if (!(sigma2[i] > 0.0)) {
            throw std::invalid_argument("gaussian_nll_loss: non-positive variance");
        }
        const double e = y_hat[i] - y[i];
        acc += e * e / (2.0 * sigma2[i]) + 0.5 * std::log(sigma2[i]);
    }
    return acc / static_cast<double>(y.size());
}

double ggd_nll_loss(const PredictiveMap& pred, const Tensor& y) {
    if (!pred.y_tilde.same_shape(y)) {
        throw std::invalid_argument("ggd_nll_loss: shape mismatch");
    }
    double acc = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) {
        acc += ggd_nll_term(y[i], GGDParams(pred.y_tilde[i], pred.alpha[i], pred.beta[i]));
    }
    return acc / static_cast<double>(y.size());
}

double cap_loss(const PredictiveMap& pred, const Tensor& y_hat, const Tensor& y, double lambda) {
    if (lambda < 0.0) {
        throw std::invalid_argument("cap_loss: lambda must be nonnegative");
    }
    if (!pred.y_tilde.same_shape(y_hat)) {
        throw std::invalid_argument("cap_loss: shape mismatch");
    }
    double id = 0.0;
    for (std::size_t i = 0; i < y_hat.size(); ++i) {
        const double d = pred.y_tilde[i] - y_hat[i];
        id += d * d;
    }
    id /= static_cast<double>(y_hat.size());
    return lambda * id + ggd_nll_loss(pred, y);
}

void write_train_log_csv(const std::string& path, const TrainLog& log) {
    std::ostringstream out;
    out << "epoch,lambda,loss,identity_term,nll_term\n";
    for (const EpochLogRow& r : log) {
        out << r.epoch << ',' << fmt_double(r.lambda) << ',' << fmt_double(r.loss) << ','
            << fmt_double(r.identity_term) << ',' << fmt_double(r.nll_term) << '\n';
    }
    std::ofstream f(path, std::ios::trunc);
    if (!f) {
        throw io_error("write_train_log_csv: cannot open '" + path + "'");
    }
    f << out.str();
}

namespace {

struct SampleStats {
    double loss = 0.0;
    double identity = 0.0;  // unweighted mean squared reconstruction gap
    double nll = 0.0;
};

void shuffle_indices(std::vector<std::size_t>& v, Rng& rng) {
    for (std::size_t i = v.size(); i > 1; --i) {
        std::swap(v[i - 1], v[rng.uniform_index(i)]);
    }
}

std::vector<Gradients> zero_model_gradients(const Model& model) {
    std::vector<Gradients> gs;
    gs.reserve(model.nets.size());
    for (const Network& net : model.nets) {
        gs.push_back(zero_gradients(net));
    }
    return gs;
}

std::vector<const Tensor*> gather_grad_ptrs(const Model& model, const std::vector<Gradients>& gs) {
    std::vector<const Tensor*> out;
    for (std::size_t n = 0; n < model.nets.size(); ++n) {
        for (std::size_t l = 0; l < model.nets[n].layers.size(); ++l) {
            if (!model.nets[n].layers[l].weights.empty()) {
                out.push_back(&gs[n].weights[l]);
                out.push_back(&gs[n].bias[l]);
            }
        }
    }
    return out;
}

/// Shared mini-batch loop. `per_sample` accumulates gradients for one sample
/// into the per-net gradient buffers and returns its loss terms.
template <typename PerSample>
TrainResult run_training(Model model, std::size_t n_samples, const TrainConfig& cfg,
                         bool use_lambda, PerSample&& per_sample) {
    if (n_samples == 0) {
        throw config_error("training: empty sample set");
    }
    if (cfg.batch_size == 0) {
        throw config_error("training: batch size must be positive");
    }
    if (use_lambda && (cfg.lambda_decay <= 0.0 || cfg.lambda_decay >= 1.0)) {
        throw config_error("training: lambda decay must lie in (0, 1)");
    }
    AdamState adam = AdamState::for_params(model_params(std::as_const(model)),
                                           AdamHyper{cfg.lr, 0.9, 0.999, 1e-8});
    auto params = model_params(model);
    Rng shuffle_rng(derive_seed(cfg.seed, "shuffle"));
    std::vector<std::size_t> order(n_samples);
    std::iota(order.begin(), order.end(), std::size_t{0});

    TrainLog log;
    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        const double lambda = use_lambda ? anneal_lambda(epoch, cfg) : 0.0;
        shuffle_indices(order, shuffle_rng);
        SampleStats epoch_stats;
        for (std::size_t b0 = 0; b0 < n_samples; b0 += cfg.batch_size) {
            const std::size_t bsz = std::min(cfg.batch_size, n_samples - b0);
            std::vector<Gradients> acc = zero_model_gradients(model);
            for (std::size_t bi = 0; bi < bsz; ++bi) {
                const SampleStats s = per_sample(model, order[b0 + bi], lambda, acc);
                epoch_stats.loss += s.loss;
                epoch_stats.identity += s.identity;
                epoch_stats.nll += s.nll;
            }
            for (Gradients& g : acc) {
                scale_gradients(g, 1.0 / static_cast<double>(bsz));
            }
            adam_step(params, gather_grad_ptrs(model, acc), adam);
        }
        const double inv_n = 1.0 / static_cast<double>(n_samples);
        EpochLogRow row{epoch, lambda, epoch_stats.loss * inv_n, epoch_stats.identity * inv_n,
                        epoch_stats.nll * inv_n};
        if (!std::isfinite(row.loss)) {
            throw numeric_error("training diverged at epoch " + std::to_string(epoch) +
                                " (loss=" + fmt_double(row.loss) + ")");
        }
        log.push_back(row);
    }

    TrainResult result;
    result.checkpoint.model = std::move(model);
    result.checkpoint.seed = cfg.seed;
    result.checkpoint.step = adam.step;
    result.checkpoint.adam = std::move(adam);
    result.log = std::move(log);
    return result;
}

/// Gradient contribution of the generalized-Gaussian heads for one sample.
/// Shared by the cap (with identity target) and the GGD scratch model.
SampleStats ggd_head_sample(Model& model, const Tensor& input, const Tensor& target,
                            const Tensor* identity_target, double lambda,
                            std::vector<Gradients>& acc) {
    Tape trunk_tape, y_tape, a_tape, b_tape;
    const Tensor t = forward(model.nets[0], input, false, nullptr, &trunk_tape);
    const Tensor y_tilde = forward(model.nets[1], t, false, nullptr, &y_tape);
    const Tensor alpha = forward(model.nets[2], t, false, nullptr, &a_tape);
    const Tensor beta = forward(model.nets[3], t, false, nullptr, &b_tape);

    const std::size_t n = y_tilde.size();
    const double inv_n = 1.0 / static_cast<double>(n);
    Tensor gy(y_tilde.shape());
    Tensor ga(alpha.shape());
    Tensor gb(beta.shape());
    SampleStats stats;
    for (std::size_t i = 0; i < n; ++i) {
        double g_identity = 0.0;
        if (identity_target) {
            const double d = y_tilde[i] - (*identity_target)[i];
            stats.identity += d * d * inv_n;
            g_identity = 2.0 * lambda * d;
        }
        const GGDParams p(y_tilde[i], alpha[i], beta[i]);
        stats.nll += ggd_nll_term(target[i], p) * inv_n;
        const GGDGrad gr = ggd_nll_grad(target[i], p);
        gy[i] = (g_identity + gr.d_mu) * inv_n;
        ga[i] = gr.d_alpha * inv_n;
        gb[i] = gr.d_beta * inv_n;
    }
    stats.loss = lambda * stats.identity + stats.nll;

    const Gradients g_y = backward(model.nets[1], y_tape, gy);
    const Gradients g_a = backward(model.nets[2], a_tape, ga);
    const Gradients g_b = backward(model.nets[3], b_tape, gb);
    accumulate_gradients(acc[1], g_y);
    accumulate_gradients(acc[2], g_a);
    accumulate_gradients(acc[3], g_b);

    Tensor grad_t = g_y.input;
    for (std::size_t i = 0; i < grad_t.size(); ++i) {
        grad_t[i] += g_a.input[i] + g_b.input[i];
    }
    accumulate_gradients(acc[0], backward(model.nets[0], trunk_tape, grad_t));
    return stats;
}

}  // namespace

TrainResult train_base(const Dataset& data, const TrainConfig& cfg) {
    const auto train_pos = data.positions_of(Split::train);
    if (train_pos.empty()) {
        throw config_error("train_base: train split is empty");
    }
    Model model;
    model.kind = ModelKind::base;
    model.nets = {make_base_net(cfg.channels)};
    init_model(model, derive_seed(cfg.seed, "init-base"));

    return run_training(
        std::move(model), train_pos.size(), cfg, false,
        [&](Model& m, std::size_t i, double, std::vector<Gradients>& acc) {
            const Sample& s = data.samples[train_pos[i]];
            Tape tape;
            const Tensor y_hat = forward(m.nets[0], s.x, false, nullptr, &tape);
            const std::size_t n = y_hat.size();
            Tensor grad(y_hat.shape());
            double mse = 0.0;
            for (std::size_t k = 0; k < n; ++k) {
                const double e = y_hat[k] - s.y[k];
                mse += e * e;
                grad[k] = 2.0 * e / static_cast<double>(n);
            }
            accumulate_gradients(acc[0], backward(m.nets[0], tape, grad));
            SampleStats st;
            st.loss = mse / static_cast<double>(n);
            return st;
        });
}

TrainResult train_cap_on_outputs(const std::vector<OutputPair>& pairs, const TrainConfig& cfg) {
    if (pairs.empty()) {
        throw config_error("train_cap: no training pairs");
    }
    Model model = make_cap_model(cfg.channels);
    init_model(model, derive_seed(cfg.seed, "init-cap"));
    return run_training(std::move(model), pairs.size(), cfg, true,
                        [&](Model& m, std::size_t i, double lambda, std::vector<Gradients>& acc) {
                            const OutputPair& p = pairs[i];
                            return ggd_head_sample(m, p.y_hat, p.y, &p.y_hat, lambda, acc);
                        });
}

TrainResult train_cap(const Checkpoint& base, const Dataset& data, const TrainConfig& cfg) {
    if (base.model.kind != ModelKind::base) {
        throw std::invalid_argument("train_cap: checkpoint is not a base model");
    }
    const auto train_pos = data.positions_of(Split::train);
    if (train_pos.empty()) {
        throw config_error("train_cap: train split is empty");
    }
    const uint64_t digest_before = weights_digest(base.model);
    std::vector<OutputPair> pairs;
    pairs.reserve(train_pos.size());
    for (std::size_t pos : train_pos) {
        const Sample& s = data.samples[pos];
        pairs.push_back(OutputPair{base_forward(base.model.trunk(), s.x), s.y});
    }
    TrainResult result = train_cap_on_outputs(pairs, cfg);
    if (weights_digest(base.model) != digest_before) {
        throw std::logic_error("train_cap: frozen base weights changed");
    }
    return result;
}

TrainResult train_scratch(const Dataset& data, const TrainConfig& cfg, bool ggd_head) {
    const auto train_pos = data.positions_of(Split::train);
    if (train_pos.empty()) {
        throw config_error("train_scratch: train split is empty");
    }
    Model model = make_scratch_model(ggd_head, cfg.channels);
    init_model(model, derive_seed(cfg.seed, ggd_head ? "init-scratch-ggd" : "init-scratch-gauss"));

    if (ggd_head) {
        return run_training(std::move(model), train_pos.size(), cfg, false,
                            [&](Model& m, std::size_t i, double, std::vector<Gradients>& acc) {
                                const Sample& s = data.samples[train_pos[i]];
                                return ggd_head_sample(m, s.x, s.y, nullptr, 0.0, acc);
                            });
    }
    return run_training(
        std::move(model), train_pos.size(), cfg, false,
        [&](Model& m, std::size_t i, double, std::vector<Gradients>& acc) {
            const Sample& s = data.samples[train_pos[i]];
            Tape trunk_tape, y_tape, v_tape;
            const Tensor t = forward(m.nets[0], s.x, false, nullptr, &trunk_tape);
            const Tensor y_hat = forward(m.nets[1], t, false, nullptr, &y_tape);
            const Tensor s2 = forward(m.nets[2], t, false, nullptr, &v_tape);
            const std::size_t n = y_hat.size();
            const double inv_n = 1.0 / static_cast<double>(n);
            Tensor gy(y_hat.shape());
            Tensor gv(s2.shape());
            SampleStats st;
            for (std::size_t k = 0; k < n; ++k) {
                const double e = y_hat[k] - s.y[k];
                const double v = s2[k];
                st.nll += (e * e / (2.0 * v) + 0.5 * std::log(v)) * inv_n;
                gy[k] = e / v * inv_n;
                gv[k] = (-e * e / (2.0 * v * v) + 0.5 / v) * inv_n;
            }
            st.loss = st.nll;
            const Gradients g_y = backward(m.nets[1], y_tape, gy);
            const Gradients g_v = backward(m.nets[2], v_tape, gv);
            accumulate_gradients(acc[1], g_y);
            accumulate_gradients(acc[2], g_v);
            Tensor grad_t = g_y.input;
            for (std::size_t k = 0; k < grad_t.size(); ++k) {
                grad_t[k] += g_v.input[k];
            }
            accumulate_gradients(acc[0], backward(m.nets[0], trunk_tape, grad_t));
            return st;
        });
}

TrainResult train_autoencoder(const std::vector<Tensor>& images, std::size_t bottleneck,
                              const TrainConfig& cfg) {
    if (images.empty()) {
        throw config_error("train_autoencoder: no images");
    }
    const std::size_t h = images.front().shape()[1], w = images.front().shape()[2];
    Model model = make_autoencoder_model(h, w, bottleneck);
    init_model(model, derive_seed(cfg.seed, "init-ae"));
    return run_training(
        std::move(model), images.size(), cfg, false,
        [&](Model& m, std::size_t i, double, std::vector<Gradients>& acc) {
            const Tensor flat = images[i].reshaped({images[i].size()});
            Tape tape;
            const Tensor rec = forward(m.nets[0], flat, false, nullptr, &tape);
            const std::size_t n = rec.size();
            Tensor grad(rec.shape());
            double mse = 0.0;
            for (std::size_t k = 0; k < n; ++k) {
                const double e = rec[k] - flat[k];
                mse += e * e;
                grad[k] = 2.0 * e / static_cast<double>(n);
            }
            accumulate_gradients(acc[0], backward(m.nets[0], tape, grad));
            SampleStats st;
            st.loss = mse / static_cast<double>(n);
            return st;
        });
}

HeadGradShares cap_gradient_shares(const Model& cap, const std::vector<OutputPair>& pairs,
                                   double lambda) {
    Model scratch_copy = cap;  // forwards need a mutable handle; weights untouched
    std::vector<Gradients> acc = zero_model_gradients(scratch_copy);
    for (const OutputPair& p : pairs) {
        ggd_head_sample(scratch_copy, p.y_hat, p.y, &p.y_hat, lambda, acc);
    }
    const auto norm_of = [](const Gradients& g) {
        double s = 0.0;
        for (const Tensor& t : g.weights) {
            for (double v : t.values()) s += v * v;
        }
        for (const Tensor& t : g.bias) {
            for (double v : t.values()) s += v * v;
        }
        return std::sqrt(s);
    };
    const double ny = norm_of(acc[1]);
    const double na = norm_of(acc[2]);
    const double nb = norm_of(acc[3]);
    const double total = ny + na + nb;
    HeadGradShares shares;
    if (total > 0.0) {
        shares.y_share = ny / total;
        shares.alpha_share = na / total;
        shares.beta_share = nb / total;
    }
    return shares;
}

}  // namespace idcap
