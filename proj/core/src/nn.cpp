#include "idcap/nn.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace idcap {

namespace {

constexpr double kTinyPositive = std::numeric_limits<double>::min();

double softplus_raw(double x) {
    return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

double sigmoid(double x) {
    return x > 0.0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x));
}

std::size_t clamp_index(long i, std::size_t n) {
    if (i < 0) return 0;
    if (i >= static_cast<long>(n)) return n - 1;
    return static_cast<std::size_t>(i);
}

void require_chw(const Tensor& x, const char* what) {
    if (x.rank() != 3) {
        throw std::invalid_argument(std::string(what) + ": expected a (C,H,W) tensor");
    }
}

}  // namespace

Layer make_dense(std::size_t in, std::size_t out) {
    Layer l;
    l.spec = DenseSpec{in, out};
    l.weights = Tensor({out, in});
    l.bias = Tensor({out});
    return l;
}

Layer make_conv(int kernel, std::size_t cin, std::size_t cout) {
    if (kernel != 1 && kernel != 3) {
        throw std::invalid_argument("make_conv: kernel must be 1 or 3");
    }
    Layer l;
    l.spec = ConvSpec{kernel, cin, cout};
    l.weights = Tensor({cout, cin, static_cast<std::size_t>(kernel), static_cast<std::size_t>(kernel)});
    l.bias = Tensor({cout});
    return l;
}

Layer make_leaky_relu(double slope) {
    Layer l;
    l.spec = LeakyReluSpec{slope};
    return l;
}

Layer make_softplus(double shift, double cap) {
    Layer l;
    l.spec = SoftplusSpec{shift, cap};
    return l;
}

Layer make_exp_clamped(double lo, double hi) {
    Layer l;
    l.spec = ExpSpec{lo, hi};
    return l;
}

Layer make_dropout(double p) {
    if (p < 0.0 || p >= 1.0) {
        throw std::invalid_argument("make_dropout: p must be in [0, 1)");
    }
    Layer l;
    l.spec = DropoutSpec{p};
    return l;
}

std::size_t Network::param_count() const {
    std::size_t n = 0;
    for (const Layer& l : layers) {
        n += l.weights.size() + l.bias.size();
    }
    return n;
}

void init_params(Network& net, Rng& rng) {
    for (Layer& l : net.layers) {
        if (l.weights.empty()) continue;
        std::size_t fan_in = 0;
        if (const auto* d = std::get_if<DenseSpec>(&l.spec)) {
            fan_in = d->in;
        } else if (const auto* c = std::get_if<ConvSpec>(&l.spec)) {
            fan_in = c->cin * static_cast<std::size_t>(c->kernel) * static_cast<std::size_t>(c->kernel);
        }
        const double limit = std::sqrt(6.0 / static_cast<double>(fan_in));
        for (std::size_t i = 0; i < l.weights.size(); ++i) {
            l.weights[i] = rng.uniform(-limit, limit);
        }
        l.bias.fill(0.0);
    }
}

namespace {

Tensor dense_forward(const DenseSpec& s, const Layer& l, const Tensor& x) {
    if (x.size() != s.in) {
        throw std::invalid_argument("dense: input size mismatch");
    }
    Tensor y({s.out});
    for (std::size_t o = 0; o < s.out; ++o) {
        double acc = l.bias[o];
        const double* w = l.weights.data() + o * s.in;
        for (std::size_t i = 0; i < s.in; ++i) {
            acc += w[i] * x[i];
        }
        y[o] = acc;
    }
    return y;
}

Tensor conv_forward(const ConvSpec& s, const Layer& l, const Tensor& x) {
    require_chw(x, "conv");
    if (x.shape()[0] != s.cin) {
        throw std::invalid_argument("conv: channel count mismatch");
    }
    const std::size_t h = x.shape()[1], w = x.shape()[2];
    const int k = s.kernel;
    const int off = k / 2;
    Tensor y({s.cout, h, w});
    for (std::size_t co = 0; co < s.cout; ++co) {
        for (std::size_t i = 0; i < h; ++i) {
            for (std::size_t j = 0; j < w; ++j) {
                double acc = l.bias[co];
                for (std::size_t ci = 0; ci < s.cin; ++ci) {
                    for (int di = 0; di < k; ++di) {
                        const std::size_t si = clamp_index(static_cast<long>(i) + di - off, h);
                        for (int dj = 0; dj < k; ++dj) {
                            const std::size_t sj = clamp_index(static_cast<long>(j) + dj - off, w);
                            acc += l.weights[((co * s.cin + ci) * k + di) * k + dj] * x.at(ci, si, sj);
                        }
                    }
                }
                y.at(co, i, j) = acc;
            }
        }
    }
    return y;
}

}  // namespace

Tensor forward(const Network& net, const Tensor& x, bool stochastic, Rng* rng, Tape* tape) {
    if (tape) {
        tape->inputs.clear();
        tape->masks.clear();
        tape->inputs.reserve(net.layers.size());
        tape->masks.resize(net.layers.size());
    }
    Tensor cur = x;
    for (std::size_t li = 0; li < net.layers.size(); ++li) {
        const Layer& l = net.layers[li];
        if (tape) tape->inputs.push_back(cur);
        if (const auto* d = std::get_if<DenseSpec>(&l.spec)) {
            cur = dense_forward(*d, l, cur);
        } else if (const auto* c = std::get_if<ConvSpec>(&l.spec)) {
            cur = conv_forward(*c, l, cur);
        } else if (const auto* lr = std::get_if<LeakyReluSpec>(&l.spec)) {
            Tensor y = cur;
            for (std::size_t i = 0; i < y.size(); ++i) {
                if (y[i] < 0.0) y[i] *= lr->slope;
            }
            cur = std::move(y);
        } else if (const auto* sp = std::get_if<SoftplusSpec>(&l.spec)) {
            Tensor y = cur;
            for (std::size_t i = 0; i < y.size(); ++i) {
                y[i] = std::min(std::max(sp->shift + softplus_raw(y[i]), kTinyPositive), sp->cap);
            }
            cur = std::move(y);
        } else if (const auto* ex = std::get_if<ExpSpec>(&l.spec)) {
            Tensor y = cur;
            const double lo = std::max(ex->lo, kTinyPositive);
            for (std::size_t i = 0; i < y.size(); ++i) {
                y[i] = std::min(std::max(std::exp(y[i]), lo), ex->hi);
            }
            cur = std::move(y);
        } else if (const auto* dp = std::get_if<DropoutSpec>(&l.spec)) {
            if (stochastic && dp->p > 0.0) {
                if (!rng) {
                    throw std::invalid_argument("forward: stochastic dropout needs an rng");
                }
                const double keep_scale = 1.0 / (1.0 - dp->p);
                Tensor mask(cur.shape());
                Tensor y = cur;
                for (std::size_t i = 0; i < y.size(); ++i) {
                    const double m = rng->uniform01() < dp->p ? 0.0 : keep_scale;
                    mask[i] = m;
                    y[i] *= m;
                }
                if (tape) tape->masks[li] = std::move(mask);
                cur = std::move(y);
            }
            // eval mode: identity (inverted dropout)
        }
    }
    cur.check_finite("forward");
    if (tape) tape->output = cur;
    return cur;
}

Gradients zero_gradients(const Network& net) {
    Gradients g;
    g.weights.reserve(net.layers.size());
    g.bias.reserve(net.layers.size());
    for (const Layer& l : net.layers) {
        g.weights.push_back(l.weights.empty() ? Tensor() : Tensor(l.weights.shape()));
        g.bias.push_back(l.bias.empty() ? Tensor() : Tensor(l.bias.shape()));
    }
    return g;
}

Gradients backward(const Network& net, const Tape& tape, const Tensor& grad_out) {
    if (tape.inputs.size() != net.layers.size()) {
        throw std::invalid_argument("backward: tape does not match network");
    }
    if (!grad_out.same_shape(tape.output)) {
        throw std::invalid_argument("backward: grad_out shape mismatch");
    }
    Gradients g = zero_gradients(net);
    Tensor grad = grad_out;
    for (std::size_t n = net.layers.size(); n-- > 0;) {
        const Layer& l = net.layers[n];
        const Tensor& x = tape.inputs[n];
        if (const auto* d = std::get_if<DenseSpec>(&l.spec)) {
            Tensor gx(x.shape());
            for (std::size_t o = 0; o < d->out; ++o) {
                const double go = grad[o];
                g.bias[n][o] += go;
                double* gw = g.weights[n].data() + o * d->in;
                const double* w = l.weights.data() + o * d->in;
                for (std::size_t i = 0; i < d->in; ++i) {
                    gw[i] += go * x[i];
                    gx[i] += w[i] * go;
                }
            }
            grad = std::move(gx);
        } else if (const auto* c = std::get_if<ConvSpec>(&l.spec)) {
            const std::size_t h = x.shape()[1], w = x.shape()[2];
            const int k = c->kernel;
            const int off = k / 2;
            Tensor gx(x.shape());
            for (std::size_t co = 0; co < c->cout; ++co) {
                for (std::size_t i = 0; i < h; ++i) {
                    for (std::size_t j = 0; j < w; ++j) {
                        const double go = grad.at(co, i, j);
                        g.bias[n][co] += go;
                        for (std::size_t ci = 0; ci < c->cin; ++ci) {
                            for (int di = 0; di < k; ++di) {
                                const std::size_t si = clamp_index(static_cast<long>(i) + di - off, h);
                                for (int dj = 0; dj < k; ++dj) {
                                    const std::size_t sj = clamp_index(static_cast<long>(j) + dj - off, w);
                                    const std::size_t wi = ((co * c->cin + ci) * k + di) * k + dj;
                                    g.weights[n][wi] += go * x.at(ci, si, sj);
                                    gx.at(ci, si, sj) += l.weights[wi] * go;
                                }
                            }
                        }
                    }
                }
            }
            grad = std::move(gx);
        } else if (const auto* lr = std::get_if<LeakyReluSpec>(&l.spec)) {
            Tensor gx = grad;
            for (std::size_t i = 0; i < gx.size(); ++i) {
                if (x[i] < 0.0) gx[i] *= lr->slope;
            }
            grad = std::move(gx);
        } else if (const auto* sp = std::get_if<SoftplusSpec>(&l.spec)) {
            Tensor gx = grad;
            for (std::size_t i = 0; i < gx.size(); ++i) {
                const double y = sp->shift + softplus_raw(x[i]);
                gx[i] *= (y < sp->cap) ? sigmoid(x[i]) : 0.0;
            }
            grad = std::move(gx);
        } else if (const auto* ex = std::get_if<ExpSpec>(&l.spec)) {
            Tensor gx = grad;
            const double lo = std::max(ex->lo, kTinyPositive);
            for (std::size_t i = 0; i < gx.size(); ++i) {
                const double e = std::exp(x[i]);
                gx[i] *= (e > lo && e < ex->hi) ? e : 0.0;
            }
            grad = std::move(gx);
        } else if (std::get_if<DropoutSpec>(&l.spec)) {
            if (!tape.masks[n].empty()) {
                Tensor gx = grad;
                const Tensor& mask = tape.masks[n];
                for (std::size_t i = 0; i < gx.size(); ++i) {
                    gx[i] *= mask[i];
                }
                grad = std::move(gx);
            }
        }
    }
    g.input = std::move(grad);
    return g;
}

void accumulate_gradients(Gradients& into, const Gradients& g) {
    for (std::size_t n = 0; n < into.weights.size(); ++n) {
        for (std::size_t i = 0; i < into.weights[n].size(); ++i) {
            into.weights[n][i] += g.weights[n][i];
        }
        for (std::size_t i = 0; i < into.bias[n].size(); ++i) {
            into.bias[n][i] += g.bias[n][i];
        }
    }
    if (into.input.empty()) {
        into.input = g.input;
    } else {
        for (std::size_t i = 0; i < into.input.size(); ++i) {
            into.input[i] += g.input[i];
        }
    }
}

void scale_gradients(Gradients& g, double s) {
    for (auto& t : g.weights) {
        for (std::size_t i = 0; i < t.size(); ++i) t[i] *= s;
    }
    for (auto& t : g.bias) {
        for (std::size_t i = 0; i < t.size(); ++i) t[i] *= s;
    }
    for (std::size_t i = 0; i < g.input.size(); ++i) g.input[i] *= s;
}

double finite_diff_check(Network& net, const Tensor& x, double h, bool stochastic, uint64_t seed) {
    const auto run = [&](const Tensor& input) {
        Rng rng(seed);
        Tensor y = forward(net, input, stochastic, &rng, nullptr);
        double s = 0.0;
        for (double v : y.values()) s += v;
        return s;
    };

    Tape tape;
    {
        Rng rng(seed);
        forward(net, x, stochastic, &rng, &tape);
    }
    Tensor ones(tape.output.shape(), 1.0);
    const Gradients g = backward(net, tape, ones);

    double max_rel = 0.0;
    const auto check = [&](double analytic, double* slot) {
        const double save = *slot;
        *slot = save + h;
        const double fp = run(x);
        *slot = save - h;
        const double fm = run(x);
        *slot = save;
        const double fd = (fp - fm) / (2.0 * h);
        const double rel = std::abs(analytic - fd) /
                           std::max({std::abs(analytic), std::abs(fd), 1e-6});
        max_rel = std::max(max_rel, rel);
    };

    Tensor xi = x;
    const auto run_x = [&](std::size_t i, double analytic) {
        const double save = xi[i];
        xi[i] = save + h;
        const double fp = run(xi);
        xi[i] = save - h;
        const double fm = run(xi);
        xi[i] = save;
        const double fd = (fp - fm) / (2.0 * h);
        const double rel = std::abs(analytic - fd) /
                           std::max({std::abs(analytic), std::abs(fd), 1e-6});
        max_rel = std::max(max_rel, rel);
    };

    for (std::size_t n = 0; n < net.layers.size(); ++n) {
        for (std::size_t i = 0; i < net.layers[n].weights.size(); ++i) {
            check(g.weights[n][i], &net.layers[n].weights[i]);
        }
        for (std::size_t i = 0; i < net.layers[n].bias.size(); ++i) {
            check(g.bias[n][i], &net.layers[n].bias[i]);
        }
    }
    for (std::size_t i = 0; i < x.size(); ++i) {
        run_x(i, g.input[i]);
    }
    return max_rel;
}

}  // namespace idcap
