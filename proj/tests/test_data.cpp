#include <doctest.h>

#include <stdexcept>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <set>

#include "idcap/errors.hpp"
#include "idcap/synth_data.hpp"

using namespace idcap;

namespace {

DatasetSpec small_spec(Family fam, std::size_t size = 16, std::size_t count = 40) {
    DatasetSpec spec;
    spec.family = fam;
    spec.size = size;
    spec.count = count;
    spec.seed = 424242;
    return spec;
}

// Tiny 2-means on (mean, variance) image features; deterministic init at the
// extreme-variance points.
double two_means_accuracy(const std::vector<std::pair<double, double>>& features,
                          const std::vector<int>& labels) {
    const std::size_t n = features.size();
    // standardize
    double m0 = 0, m1 = 0;
    for (auto& [a, b] : features) {
        m0 += a;
        m1 += b;
    }
    m0 /= n;
    m1 /= n;
    double s0 = 0, s1 = 0;
    for (auto& [a, b] : features) {
        s0 += (a - m0) * (a - m0);
        s1 += (b - m1) * (b - m1);
    }
    s0 = std::sqrt(s0 / n) + 1e-12;
    s1 = std::sqrt(s1 / n) + 1e-12;
    std::vector<std::pair<double, double>> z(n);
    for (std::size_t i = 0; i < n; ++i) {
        z[i] = {(features[i].first - m0) / s0, (features[i].second - m1) / s1};
    }
    std::size_t lo = 0, hi = 0;
    for (std::size_t i = 0; i < n; ++i) {
        if (z[i].second < z[lo].second) lo = i;
        if (z[i].second > z[hi].second) hi = i;
    }
    std::pair<double, double> c0 = z[lo], c1 = z[hi];
    std::vector<int> assign(n, 0);
    for (int iter = 0; iter < 25; ++iter) {
        for (std::size_t i = 0; i < n; ++i) {
            const double d0 = (z[i].first - c0.first) * (z[i].first - c0.first) +
                              (z[i].second - c0.second) * (z[i].second - c0.second);
            const double d1 = (z[i].first - c1.first) * (z[i].first - c1.first) +
                              (z[i].second - c1.second) * (z[i].second - c1.second);
            assign[i] = d1 < d0;
        }
        double a0 = 0, b0 = 0, a1 = 0, b1 = 0;
        std::size_t n0 = 0, n1 = 0;
        for (std::size_t i = 0; i < n; ++i) {
            if (assign[i]) {
                a1 += z[i].first;
                b1 += z[i].second;
                ++n1;
            } else {
                a0 += z[i].first;
                b0 += z[i].second;
                ++n0;
            }
        }
        if (n0) c0 = {a0 / n0, b0 / n0};
        if (n1) c1 = {a1 / n1, b1 / n1};
    }
    std::size_t agree = 0;
    for (std::size_t i = 0; i < n; ++i) agree += (assign[i] == labels[i]);
    const double acc = static_cast<double>(agree) / n;
    return std::max(acc, 1.0 - acc);
}

}  // namespace

TEST_CASE("gen_clean: deterministic in (seed, family, index)") {
    const DatasetSpec spec = small_spec(Family::A);
    CHECK(gen_clean(spec, 3) == gen_clean(spec, 3));
    CHECK_FALSE(gen_clean(spec, 3) == gen_clean(spec, 4));
    DatasetSpec other = spec;
    other.family = Family::B;
    CHECK_FALSE(gen_clean(spec, 3) == gen_clean(other, 3));
}

TEST_CASE("gen_clean: outputs live in [0,1] for all families") {
    for (const Family fam : {Family::A, Family::B, Family::C}) {
        const DatasetSpec spec = small_spec(fam);
        for (std::size_t i = 0; i < 10; ++i) {
            const Tensor img = gen_clean(spec, i);
            CHECK(tensor_min(img) >= 0.0);
            CHECK(tensor_max(img) <= 1.0);
        }
    }
}

TEST_CASE("gen_clean: family C is approximately uniform (KS < 0.05 at 64x64)") {
    DatasetSpec spec = small_spec(Family::C, 64, 10);
    for (std::size_t idx = 0; idx < 3; ++idx) {
        std::vector<double> v = gen_clean(spec, idx).values();
        std::sort(v.begin(), v.end());
        double d = 0.0;
        const double n = static_cast<double>(v.size());
        for (std::size_t i = 0; i < v.size(); ++i) {
            d = std::max(d, std::abs(v[i] - static_cast<double>(i) / n));
            d = std::max(d, std::abs(static_cast<double>(i + 1) / n - v[i]));
        }
        CHECK(d < 0.05);
    }
}

TEST_CASE("degrade: noise with sigma 0 is the identity") {
    const DatasetSpec spec = small_spec(Family::A);
    const Tensor y = gen_clean(spec, 0);
    DegradationOp op;
    op.kind = DegradationOp::Kind::gauss_noise;
    op.noise_sigma = 0.0;
    Rng rng(1);
    CHECK(degrade(y, op, rng) == y);
}

TEST_CASE("degrade: blur preserves constant images") {
    Tensor y({1, 12, 12}, 0.37);
    DegradationOp op;
    op.kind = DegradationOp::Kind::gauss_blur;
    op.blur_radius = 2;
    op.blur_sigma = 1.1;
    Rng rng(2);
    const Tensor x = degrade(y, op, rng);
    for (double v : x.values()) {
        CHECK(v == doctest::Approx(0.37).epsilon(1e-12));
    }
}

TEST_CASE("degrade: box mask zeroes exactly the masked region") {
    const DatasetSpec spec = small_spec(Family::B);
    const Tensor y = gen_clean(spec, 1);
    DegradationOp op;
    op.kind = DegradationOp::Kind::box_mask;
    op.mask_w = 5;
    op.mask_h = 4;
    Rng rng(7);
    const Tensor x = degrade(y, op, rng);
    std::size_t zeroed = 0;
    for (std::size_t i = 0; i < 16; ++i) {
        for (std::size_t j = 0; j < 16; ++j) {
            if (x.at(0, i, j) == 0.0 && y.at(0, i, j) != 0.0) {
                ++zeroed;
            } else {
                CHECK(x.at(0, i, j) == y.at(0, i, j));
            }
        }
    }
    CHECK(zeroed <= 20);
    CHECK(zeroed >= 18);  // a couple of clean pixels may already be zero

    DegradationOp bad = op;
    bad.mask_w = 99;
    CHECK_THROWS_AS(degrade(y, bad, rng), std::invalid_argument);
}

TEST_CASE("degrade: downsample+upsample produces 2x2 constant blocks") {
    const DatasetSpec spec = small_spec(Family::A);
    const Tensor y = gen_clean(spec, 2);
    DegradationOp op;
    op.kind = DegradationOp::Kind::downsample;
    Rng rng(3);
    const Tensor x = degrade(y, op, rng);
    for (std::size_t i = 0; i < 16; i += 2) {
        for (std::size_t j = 0; j < 16; j += 2) {
            const double avg = 0.25 * (y.at(0, i, j) + y.at(0, i + 1, j) + y.at(0, i, j + 1) +
                                       y.at(0, i + 1, j + 1));
            CHECK(x.at(0, i, j) == doctest::Approx(avg).epsilon(1e-15));
            CHECK(x.at(0, i + 1, j + 1) == doctest::Approx(avg).epsilon(1e-15));
        }
    }
}

TEST_CASE("splits partition the index range") {
    DatasetSpec spec = small_spec(Family::A, 16, 53);
    spec.train_frac = 0.6;
    spec.val_frac = 0.25;
    spec.test_frac = 0.15;
    std::size_t n_train = 0, n_val = 0, n_test = 0;
    for (std::size_t i = 0; i < spec.count; ++i) {
        switch (split_of_index(spec, i)) {
            case Split::train: ++n_train; break;
            case Split::val: ++n_val; break;
            case Split::test: ++n_test; break;
        }
    }
    CHECK(n_train + n_val + n_test == spec.count);
    CHECK(n_train == 32);  // round(0.6 * 53)
    CHECK(n_val == 13);    // round(0.25 * 53)
    CHECK(n_test == 8);
}

TEST_CASE("spec validation") {
    DatasetSpec spec = small_spec(Family::A);
    spec.train_frac = 0.5;
    spec.val_frac = 0.1;
    spec.test_frac = 0.1;
    CHECK_THROWS_AS(validate_spec(spec), config_error);
    spec = small_spec(Family::A);
    spec.count = 5;
    CHECK_THROWS_AS(validate_spec(spec), config_error);
}

TEST_CASE("degradation determinism given the rng seed") {
    const DatasetSpec spec = small_spec(Family::A);
    const Tensor y = gen_clean(spec, 5);
    DegradationOp op;
    op.kind = DegradationOp::Kind::gauss_noise;
    op.noise_sigma = 0.1;
    Rng a(99), b(99), c(100);
    CHECK(degrade(y, op, a) == degrade(y, op, b));
    Rng a2(99);
    CHECK_FALSE(degrade(y, op, a2) == degrade(y, op, c));
}

TEST_CASE("family separability: 2-means on mean/variance features, A vs C") {
    const std::size_t per_family = 100;
    std::vector<std::pair<double, double>> features;
    std::vector<int> labels;
    for (const Family fam : {Family::A, Family::C}) {
        DatasetSpec spec = small_spec(fam, 32, per_family);
        for (std::size_t i = 0; i < per_family; ++i) {
            const Tensor img = gen_clean(spec, i);
            const double mean = tensor_mean(img);
            double var = 0.0;
            for (double v : img.values()) var += (v - mean) * (v - mean);
            var /= static_cast<double>(img.size());
            features.emplace_back(mean, var);
            labels.push_back(fam == Family::C);
        }
    }
    CHECK(two_means_accuracy(features, labels) >= 0.95);
}

TEST_CASE("dataset manifest round trip") {
    DatasetSpec spec = small_spec(Family::B, 16, 12);
    spec.train_frac = 0.5;
    spec.val_frac = 0.25;
    spec.test_frac = 0.25;
    const Dataset ds = generate_dataset(spec);
    const std::string dir = "data_test_tmp";
    write_dataset(dir, ds);
    const Dataset back = load_dataset(dir + "/manifest.csv");
    REQUIRE(back.samples.size() == ds.samples.size());
    for (std::size_t i = 0; i < ds.samples.size(); ++i) {
        CHECK(back.samples[i].x == ds.samples[i].x);
        CHECK(back.samples[i].y == ds.samples[i].y);
        CHECK(back.samples[i].split == ds.samples[i].split);
        CHECK(back.samples[i].family == ds.samples[i].family);
    }
    CHECK_THROWS_AS(load_dataset("no_such_dir/manifest.csv"), missing_artifact_error);
}
