#include "idcap/baselines.hpp"

#include <cmath>
#include <stdexcept>

#include "idcap/synth_data.hpp"

namespace idcap {

namespace {

struct AffineDraw {
    int dy = 0;
    int dx = 0;
    bool flip = false;
};

Tensor flip_horizontal(const Tensor& img) {
    const std::size_t c = img.shape()[0], h = img.shape()[1], w = img.shape()[2];
    Tensor out(img.shape());
    for (std::size_t ci = 0; ci < c; ++ci) {
        for (std::size_t i = 0; i < h; ++i) {
            for (std::size_t j = 0; j < w; ++j) {
                out.at(ci, i, j) = img.at(ci, i, w - 1 - j);
            }
        }
    }
    return out;
}

Tensor shift_replicate(const Tensor& img, int dy, int dx) {
    const std::size_t c = img.shape()[0], h = img.shape()[1], w = img.shape()[2];
    const auto clampi = [](long v, std::size_t n) {
        if (v < 0) return std::size_t{0};
        if (v >= static_cast<long>(n)) return n - 1;
        return static_cast<std::size_t>(v);
    };
    Tensor out(img.shape());
    for (std::size_t ci = 0; ci < c; ++ci) {
        for (std::size_t i = 0; i < h; ++i) {
            for (std::size_t j = 0; j < w; ++j) {
                out.at(ci, i, j) = img.at(ci, clampi(static_cast<long>(i) - dy, h),
                                          clampi(static_cast<long>(j) - dx, w));
            }
        }
    }
    return out;
}

void add_pixel_noise(Tensor& img, double sigma, Rng& rng) {
    if (sigma <= 0.0) return;
    for (std::size_t i = 0; i < img.size(); ++i) {
        img[i] += sigma * rng.normal();
    }
}

void apply_corrupt(Tensor& img, const AugmentSpec& spec, Rng& rng) {
    const double blur_sigma = rng.uniform(0.0, spec.blur_max);
    const double gain = rng.uniform(spec.contrast_lo, spec.contrast_hi);
    const double offset = rng.uniform(-spec.jitter, spec.jitter);
    if (blur_sigma > 1e-12) {
        img = gauss_blur(img, 2, blur_sigma);
    }
    for (std::size_t i = 0; i < img.size(); ++i) {
        img[i] = 0.5 + gain * (img[i] - 0.5) + offset;
    }
}

/// Shifted-data accumulation: deviations are taken against the first pass so
/// identical passes yield an exactly zero variance map.
struct PassAccumulator {
    Tensor offset;  // first contributing value per pixel
    Tensor sum_d;
    Tensor sum_dd;
    Tensor count;
    bool any = false;

    void init(const std::vector<std::size_t>& shape) {
        offset = Tensor(shape);
        sum_d = Tensor(shape);
        sum_dd = Tensor(shape);
        count = Tensor(shape);
        any = true;
    }

    void add(const Tensor& value, const Tensor* valid) {
        if (!any) init(value.shape());
        for (std::size_t i = 0; i < value.size(); ++i) {
            if (valid && (*valid)[i] == 0.0) continue;
            if (count[i] == 0.0) {
                offset[i] = value[i];
            }
            const double d = value[i] - offset[i];
            sum_d[i] += d;
            sum_dd[i] += d * d;
            count[i] += 1.0;
        }
    }

    UncertaintyMaps finish() const {
        UncertaintyMaps maps;
        maps.mean = Tensor(offset.shape());
        maps.var = Tensor(offset.shape());
        maps.valid = count;
        for (std::size_t i = 0; i < offset.size(); ++i) {
            const double c = count[i];
            if (c == 0.0) continue;
            const double md = sum_d[i] / c;
            maps.mean[i] = offset[i] + md;
            maps.var[i] = std::max(0.0, sum_dd[i] / c - md * md);
        }
        return maps;
    }
};

UncertaintyMaps run_passes(const Network& net, const Tensor& x, const AugmentSpec& spec,
                           bool stochastic, Rng& rng) {
    if (spec.passes == 0) {
        throw std::invalid_argument("ttda: need at least one pass");
    }
    if (spec.shift_max < 0) {
        throw std::invalid_argument("ttda: shift_max must be nonnegative");
    }
    const bool use_noise =
        spec.kind == AugmentSpec::Kind::pixel_noise || spec.kind == AugmentSpec::Kind::combined;
    const bool use_affine =
        spec.kind == AugmentSpec::Kind::affine || spec.kind == AugmentSpec::Kind::combined;
    const bool use_corrupt =
        spec.kind == AugmentSpec::Kind::corrupt || spec.kind == AugmentSpec::Kind::combined;

    PassAccumulator acc;
    for (std::size_t t = 0; t < spec.passes; ++t) {
        Tensor input = x;
        AffineDraw draw;
        if (use_noise) {
            add_pixel_noise(input, spec.noise_sigma, rng);
        }
        if (use_affine) {
            draw.dy = static_cast<int>(rng.uniform_index(2 * spec.shift_max + 1)) - spec.shift_max;
            draw.dx = static_cast<int>(rng.uniform_index(2 * spec.shift_max + 1)) - spec.shift_max;
            draw.flip = spec.flip_allowed && (rng.next_u64() & 1ull);
            if (draw.flip) {
                input = flip_horizontal(input);
            }
            if (draw.dy != 0 || draw.dx != 0) {
                input = shift_replicate(input, draw.dy, draw.dx);
            }
        }
        if (use_corrupt) {
            apply_corrupt(input, spec, rng);
        }

        Tensor out = forward(net, input, stochastic, &rng, nullptr);

        if (use_affine) {
            // invert the shift, tracking which target pixels stayed in frame
            const std::size_t c = out.shape()[0], h = out.shape()[1], w = out.shape()[2];
            Tensor warped(out.shape());
            Tensor valid(out.shape());
            for (std::size_t ci = 0; ci < c; ++ci) {
                for (std::size_t i = 0; i < h; ++i) {
                    for (std::size_t j = 0; j < w; ++j) {
                        const long si = static_cast<long>(i) + draw.dy;
                        const long sj = static_cast<long>(j) + draw.dx;
                        if (si < 0 || si >= static_cast<long>(h) || sj < 0 ||
                            sj >= static_cast<long>(w)) {
                            continue;
                        }
                        warped.at(ci, i, j) = out.at(ci, static_cast<std::size_t>(si),
                                                     static_cast<std::size_t>(sj));
                        valid.at(ci, i, j) = 1.0;
                    }
                }
            }
            if (draw.flip) {
                warped = flip_horizontal(warped);
                valid = flip_horizontal(valid);
            }
            acc.add(warped, &valid);
        } else {
            acc.add(out, nullptr);
        }
    }
    return acc.finish();
}

}  // namespace

UncertaintyMaps ttda(const Network& base, const Tensor& x, const AugmentSpec& spec, Rng& rng) {
    return run_passes(base, x, spec, false, rng);
}

Network with_dropout_before_last(const Network& net, double p) {
    if (net.layers.empty()) {
        throw std::invalid_argument("with_dropout_before_last: empty network");
    }
    Network out = net;
    out.layers.insert(out.layers.end() - 1, make_dropout(p));
    return out;
}

UncertaintyMaps mc_dropout(const Network& net, const Tensor& x, std::size_t passes, double p,
                           Rng& rng) {
    if (p < 0.0 || p >= 1.0) {
        throw std::invalid_argument("mc_dropout: p must be in [0, 1)");
    }
    if (passes == 0) {
        throw std::invalid_argument("mc_dropout: need at least one pass");
    }
    const Network with_do = with_dropout_before_last(net, p);
    PassAccumulator acc;
    for (std::size_t t = 0; t < passes; ++t) {
        acc.add(forward(with_do, x, true, &rng, nullptr), nullptr);
    }
    return acc.finish();
}

UncertaintyMaps mc_dropout_ttda(const Network& net, const Tensor& x, const AugmentSpec& spec,
                                double p, Rng& rng) {
    if (p < 0.0 || p >= 1.0) {
        throw std::invalid_argument("mc_dropout_ttda: p must be in [0, 1)");
    }
    const Network with_do = with_dropout_before_last(net, p);
    return run_passes(with_do, x, spec, true, rng);
}

Tensor constant_uncertainty(const std::vector<std::size_t>& shape, double c) {
    if (c < 0.0) {
        throw std::invalid_argument("constant_uncertainty: c must be nonnegative");
    }
    return Tensor(shape, c);
}

}  // namespace idcap
