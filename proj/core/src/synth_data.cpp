#include "idcap/synth_data.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <sstream>

#include "idcap/errors.hpp"
#include "idcap/tensor_io.hpp"

namespace idcap {

char family_letter(Family f) {
    switch (f) {
        case Family::A: return 'A';
        case Family::B: return 'B';
        case Family::C: return 'C';
    }
    return '?';
}

Family family_from_letter(const std::string& s) {
    if (s == "A" || s == "a") return Family::A;
    if (s == "B" || s == "b") return Family::B;
    if (s == "C" || s == "c") return Family::C;
    throw config_error("unknown family '" + s + "' (expected A, B or C)");
}

DegradationOp::Kind degradation_kind_from_name(const std::string& name) {
    if (name == "gauss_noise") return DegradationOp::Kind::gauss_noise;
    if (name == "gauss_blur") return DegradationOp::Kind::gauss_blur;
    if (name == "box_mask") return DegradationOp::Kind::box_mask;
    if (name == "downsample") return DegradationOp::Kind::downsample;
    throw config_error("unknown degradation '" + name + "'");
}

const char* degradation_kind_name(DegradationOp::Kind k) {
    switch (k) {
        case DegradationOp::Kind::gauss_noise: return "gauss_noise";
        case DegradationOp::Kind::gauss_blur: return "gauss_blur";
        case DegradationOp::Kind::box_mask: return "box_mask";
        case DegradationOp::Kind::downsample: return "downsample";
    }
    return "?";
}

void validate_spec(const DatasetSpec& spec) {
    if (spec.count < 10) {
        throw config_error("dataset count must be at least 10");
    }
    if (spec.size < 4) {
        throw config_error("dataset image size must be at least 4");
    }
    const double total = spec.train_frac + spec.val_frac + spec.test_frac;
    if (std::abs(total - 1.0) > 1e-9 || spec.train_frac < 0 || spec.val_frac < 0 ||
        spec.test_frac < 0) {
        throw config_error("split fractions must be nonnegative and sum to 1");
    }
    if (spec.degradation.noise_sigma < 0 || spec.degradation.blur_sigma < 0 ||
        spec.degradation.blur_radius < 0) {
        throw config_error("degradation parameters must be nonnegative");
    }
    if (spec.degradation.kind == DegradationOp::Kind::box_mask &&
        (spec.degradation.mask_w > spec.size || spec.degradation.mask_h > spec.size)) {
        throw config_error("box mask does not fit inside the image");
    }
}

const char* split_name(Split s) {
    switch (s) {
        case Split::train: return "train";
        case Split::val: return "val";
        case Split::test: return "test";
    }
    return "?";
}

Split split_from_name(const std::string& s) {
    if (s == "train") return Split::train;
    if (s == "val") return Split::val;
    if (s == "test") return Split::test;
    throw config_error("unknown split '" + s + "'");
}

std::vector<std::size_t> Dataset::positions_of(Split s) const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < samples.size(); ++i) {
        if (samples[i].split == s) out.push_back(i);
    }
    return out;
}

namespace {

Rng per_image_rng(const DatasetSpec& spec, std::size_t index, const char* purpose) {
    uint64_t state = derive_seed(spec.seed, purpose);
    state ^= 0x9e3779b97f4a7c15ull * (static_cast<uint64_t>(index) + 1) +
             static_cast<uint64_t>(family_letter(spec.family));
    splitmix64_next(state);
    return Rng(splitmix64_next(state));
}

void rescale_to_unit(Tensor& img) {
    const double lo = tensor_min(img);
    const double hi = tensor_max(img);
    if (hi - lo < 1e-12) {
        img.fill(0.5);
        return;
    }
    for (std::size_t i = 0; i < img.size(); ++i) {
        img[i] = (img[i] - lo) / (hi - lo);
    }
}

Tensor gen_family_a(std::size_t n, Rng& rng) {
    // Band-limited sinusoid texture under a smooth contrast envelope. The
    // envelope mixes near-flat and full-contrast zones, so local detail (and
    // with it restoration difficulty) varies across the image.
    Tensor img({1, n, n});
    struct Wave {
        double fx, fy, phase, amplitude;
    };
    Wave waves[3];
    for (Wave& w : waves) {
        const double f = rng.uniform(1.0, 4.0);
        const double theta = rng.uniform(0.0, 2.0 * std::numbers::pi);
        w.fx = f * std::cos(theta);
        w.fy = f * std::sin(theta);
        w.phase = rng.uniform(0.0, 2.0 * std::numbers::pi);
        w.amplitude = rng.uniform(0.25, 1.0);
    }
    const double env_f = rng.uniform(0.5, 1.2);
    const double env_theta = rng.uniform(0.0, 2.0 * std::numbers::pi);
    const double env_fx = env_f * std::cos(env_theta);
    const double env_fy = env_f * std::sin(env_theta);
    const double env_phase = rng.uniform(0.0, 2.0 * std::numbers::pi);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            const double u = static_cast<double>(i) / static_cast<double>(n);
            const double v = static_cast<double>(j) / static_cast<double>(n);
            double acc = 0.0;
            for (const Wave& w : waves) {
                acc += w.amplitude *
                       std::sin(2.0 * std::numbers::pi * (w.fx * u + w.fy * v) + w.phase);
            }
            const double envelope =
                0.575 + 0.425 * std::sin(2.0 * std::numbers::pi * (env_fx * u + env_fy * v) +
                                         env_phase);
            img.at(0, i, j) = envelope * acc;
        }
    }
    rescale_to_unit(img);
    return img;
}

struct Point {
    double x, y;
};

double cross(const Point& o, const Point& a, const Point& b) {
    return (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x);
}

// Andrew monotone chain; returns hull in counter-clockwise order.
std::vector<Point> convex_hull(std::vector<Point> pts) {
    std::sort(pts.begin(), pts.end(), [](const Point& a, const Point& b) {
        return a.x < b.x || (a.x == b.x && a.y < b.y);
    });
    const std::size_t n = pts.size();
    if (n < 3) return pts;
    std::vector<Point> hull(2 * n);
    std::size_t k = 0;
    for (std::size_t i = 0; i < n; ++i) {
        while (k >= 2 && cross(hull[k - 2], hull[k - 1], pts[i]) <= 0) --k;
        hull[k++] = pts[i];
    }
    const std::size_t lower = k + 1;
    for (std::size_t i = n - 1; i-- > 0;) {
        while (k >= lower && cross(hull[k - 2], hull[k - 1], pts[i]) <= 0) --k;
        hull[k++] = pts[i];
    }
    hull.resize(k - 1);
    return hull;
}

bool inside_hull(const std::vector<Point>& hull, double x, double y) {
    if (hull.size() < 3) return false;
    const Point p{x, y};
    for (std::size_t i = 0; i < hull.size(); ++i) {
        const Point& a = hull[i];
        const Point& b = hull[(i + 1) % hull.size()];
        if (cross(a, b, p) < 0) return false;
    }
    return true;
}

Tensor gen_family_b(std::size_t n, Rng& rng) {
    Tensor img({1, n, n}, rng.uniform01());
    const std::size_t polygons = 4 + rng.uniform_index(5);  // 4..8
    for (std::size_t pi = 0; pi < polygons; ++pi) {
        const double cx = rng.uniform(0.0, static_cast<double>(n));
        const double cy = rng.uniform(0.0, static_cast<double>(n));
        const double radius = rng.uniform(0.15, 0.45) * static_cast<double>(n);
        const std::size_t vertices = 3 + rng.uniform_index(4);  // 3..6
        std::vector<Point> pts(vertices);
        for (Point& p : pts) {
            const double ang = rng.uniform(0.0, 2.0 * std::numbers::pi);
            const double r = radius * rng.uniform(0.4, 1.0);
            p = {cx + r * std::cos(ang), cy + r * std::sin(ang)};
        }
        const std::vector<Point> hull = convex_hull(pts);
        const double gray = rng.uniform01();
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = 0; j < n; ++j) {
                if (inside_hull(hull, static_cast<double>(i) + 0.5,
                                static_cast<double>(j) + 0.5)) {
                    img.at(0, i, j) = gray;
                }
            }
        }
    }
    return img;
}

Tensor gen_family_c(std::size_t n, Rng& rng) {
    Tensor img({1, n, n});
    for (std::size_t i = 0; i < img.size(); ++i) {
        img[i] = rng.uniform01();
    }
    return img;
}

}  // namespace

Tensor gen_clean(const DatasetSpec& spec, std::size_t index) {
    if (index >= spec.count) {
        throw std::out_of_range("gen_clean: index beyond dataset count");
    }
    Rng rng = per_image_rng(spec, index, "gen-clean");
    Tensor img;
    switch (spec.family) {
        case Family::A: img = gen_family_a(spec.size, rng); break;
        case Family::B: img = gen_family_b(spec.size, rng); break;
        case Family::C: img = gen_family_c(spec.size, rng); break;
    }
    for (std::size_t i = 0; i < img.size(); ++i) {
        img[i] = std::clamp(img[i], 0.0, 1.0);
    }
    return img;
}

Tensor gauss_blur(const Tensor& img, int radius, double sigma) {
    if (img.rank() != 3) {
        throw std::invalid_argument("gauss_blur: expected (C,H,W)");
    }
    if (radius == 0 || sigma == 0.0) {
        return img;
    }
    std::vector<double> kernel(2 * radius + 1);
    double sum = 0.0;
    for (int d = -radius; d <= radius; ++d) {
        kernel[d + radius] = std::exp(-0.5 * d * d / (sigma * sigma));
        sum += kernel[d + radius];
    }
    for (double& k : kernel) k /= sum;

    const std::size_t c = img.shape()[0], h = img.shape()[1], w = img.shape()[2];
    const auto clampi = [](long i, std::size_t nn) {
        return static_cast<std::size_t>(std::clamp<long>(i, 0, static_cast<long>(nn) - 1));
    };
    Tensor tmp(img.shape());
    for (std::size_t ci = 0; ci < c; ++ci) {
        for (std::size_t i = 0; i < h; ++i) {
            for (std::size_t j = 0; j < w; ++j) {
                double acc = 0.0;
                for (int d = -radius; d <= radius; ++d) {
                    acc += kernel[d + radius] * img.at(ci, clampi(static_cast<long>(i) + d, h), j);
                }
                tmp.at(ci, i, j) = acc;
            }
        }
    }
    Tensor out(img.shape());
    for (std::size_t ci = 0; ci < c; ++ci) {
        for (std::size_t i = 0; i < h; ++i) {
            for (std::size_t j = 0; j < w; ++j) {
                double acc = 0.0;
                for (int d = -radius; d <= radius; ++d) {
                    acc += kernel[d + radius] * tmp.at(ci, i, clampi(static_cast<long>(j) + d, w));
                }
                out.at(ci, i, j) = acc;
            }
        }
    }
    return out;
}

Tensor degrade(const Tensor& y, const DegradationOp& op, Rng& rng) {
    if (y.rank() != 3) {
        throw std::invalid_argument("degrade: expected (C,H,W)");
    }
    const std::size_t h = y.shape()[1], w = y.shape()[2];
    switch (op.kind) {
        case DegradationOp::Kind::gauss_noise: {
            // clipped to the physical [0,1] intensity range, like a stored image
            Tensor x = y;
            if (op.noise_sigma > 0.0) {
                for (std::size_t i = 0; i < x.size(); ++i) {
                    x[i] = std::clamp(x[i] + op.noise_sigma * rng.normal(), 0.0, 1.0);
                }
            }
            return x;
        }
        case DegradationOp::Kind::gauss_blur:
            return gauss_blur(y, op.blur_radius, op.blur_sigma);
        case DegradationOp::Kind::box_mask: {
            if (op.mask_h > h || op.mask_w > w) {
                throw std::invalid_argument("degrade: mask exceeds image bounds");
            }
            Tensor x = y;
            const std::size_t ti = op.mask_h == h ? 0 : rng.uniform_index(h - op.mask_h + 1);
            const std::size_t tj = op.mask_w == w ? 0 : rng.uniform_index(w - op.mask_w + 1);
            for (std::size_t c = 0; c < y.shape()[0]; ++c) {
                for (std::size_t i = ti; i < ti + op.mask_h; ++i) {
                    for (std::size_t j = tj; j < tj + op.mask_w; ++j) {
                        x.at(c, i, j) = 0.0;
                    }
                }
            }
            return x;
        }
        case DegradationOp::Kind::downsample: {
            if (h % 2 != 0 || w % 2 != 0) {
                throw std::invalid_argument("degrade: downsample needs even dimensions");
            }
            Tensor x(y.shape());
            for (std::size_t c = 0; c < y.shape()[0]; ++c) {
                for (std::size_t i = 0; i < h; i += 2) {
                    for (std::size_t j = 0; j < w; j += 2) {
                        const double avg = 0.25 * (y.at(c, i, j) + y.at(c, i + 1, j) +
                                                   y.at(c, i, j + 1) + y.at(c, i + 1, j + 1));
                        x.at(c, i, j) = avg;
                        x.at(c, i + 1, j) = avg;
                        x.at(c, i, j + 1) = avg;
                        x.at(c, i + 1, j + 1) = avg;
                    }
                }
            }
            return x;
        }
    }
    throw std::invalid_argument("degrade: unknown op");
}

Split split_of_index(const DatasetSpec& spec, std::size_t index) {
    const auto n_train = static_cast<std::size_t>(std::llround(spec.train_frac * spec.count));
    auto n_val = static_cast<std::size_t>(std::llround(spec.val_frac * spec.count));
    if (n_train + n_val > spec.count) {
        n_val = spec.count - n_train;
    }
    if (index < n_train) return Split::train;
    if (index < n_train + n_val) return Split::val;
    return Split::test;
}

Dataset generate_dataset(const DatasetSpec& spec) {
    validate_spec(spec);
    Dataset ds;
    ds.spec = spec;
    ds.samples.reserve(spec.count);
    for (std::size_t i = 0; i < spec.count; ++i) {
        Sample s;
        s.index = i;
        s.split = split_of_index(spec, i);
        s.family = spec.family;
        s.y = gen_clean(spec, i);
        Rng rng = per_image_rng(spec, i, "degrade");
        s.x = degrade(s.y, spec.degradation, rng);
        ds.samples.push_back(std::move(s));
    }
    return ds;
}

void write_dataset(const std::string& dir, const Dataset& ds) {
    namespace fs = std::filesystem;
    fs::create_directories(fs::path(dir) / "data");
    std::ostringstream manifest;
    manifest << "index,split,family,path_x,path_y\n";
    for (const Sample& s : ds.samples) {
        std::ostringstream px, py;
        px << "data/" << s.index << "_x.tnsr";
        py << "data/" << s.index << "_y.tnsr";
        save_tensor((fs::path(dir) / px.str()).string(), s.x);
        save_tensor((fs::path(dir) / py.str()).string(), s.y);
        manifest << s.index << ',' << split_name(s.split) << ',' << family_letter(s.family)
                 << ',' << px.str() << ',' << py.str() << '\n';
    }
    std::ofstream f(fs::path(dir) / "manifest.csv", std::ios::trunc);
    if (!f) {
        throw io_error("write_dataset: cannot write manifest in " + dir);
    }
    f << manifest.str();
}

Dataset load_dataset(const std::string& manifest_path) {
    namespace fs = std::filesystem;
    if (!fs::exists(manifest_path)) {
        throw missing_artifact_error("dataset manifest not found: " + manifest_path);
    }
    std::ifstream f(manifest_path);
    if (!f) {
        throw io_error("load_dataset: cannot open " + manifest_path);
    }
    const fs::path base = fs::path(manifest_path).parent_path();
    Dataset ds;
    std::string line;
    if (!std::getline(f, line) || line != "index,split,family,path_x,path_y") {
        throw io_error("load_dataset: unexpected manifest header");
    }
    while (std::getline(f, line)) {
        if (line.empty()) continue;
        std::istringstream ss(line);
        std::string idx, split, family, px, py;
        if (!std::getline(ss, idx, ',') || !std::getline(ss, split, ',') ||
            !std::getline(ss, family, ',') || !std::getline(ss, px, ',') ||
            !std::getline(ss, py, ',')) {
            throw io_error("load_dataset: malformed manifest row: " + line);
        }
        Sample s;
        s.index = std::stoull(idx);
        s.split = split_from_name(split);
        s.family = family_from_letter(family);
        s.x = load_tensor((base / px).string());
        s.y = load_tensor((base / py).string());
        ds.samples.push_back(std::move(s));
    }
    if (!ds.samples.empty()) {
        ds.spec.family = ds.samples.front().family;
        ds.spec.count = ds.samples.size();
        ds.spec.size = ds.samples.front().y.shape()[1];
    }
    return ds;
}

}  // namespace idcap
