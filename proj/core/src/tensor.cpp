#include "idcap/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "idcap/errors.hpp"

namespace idcap {

namespace {
std::size_t shape_numel(const std::vector<std::size_t>& shape) {
    std::size_t n = 1;
    for (std::size_t d : shape) {
        if (d == 0) {
            throw std::invalid_argument("Tensor: zero-sized dimension");
        }
        n *= d;
    }
    return n;
}
}  // namespace

Tensor::Tensor(std::vector<std::size_t> shape, double fill)
    : shape_(std::move(shape)), data_(shape_numel(shape_), fill) {}

Tensor::Tensor(std::vector<std::size_t> shape, std::vector<double> data)
    : shape_(std::move(shape)), data_(std::move(data)) {
    if (shape_numel(shape_) != data_.size()) {
        throw std::invalid_argument("Tensor: shape does not match data length");
    }
}

Tensor Tensor::reshaped(std::vector<std::size_t> new_shape) const {
    if (shape_numel(new_shape) != data_.size()) {
        throw std::invalid_argument("Tensor::reshaped: element count mismatch");
    }
    return Tensor(std::move(new_shape), data_);
}

void Tensor::check_finite(const char* context) const {
    for (double v : data_) {
        if (!std::isfinite(v)) {
            throw numeric_error(std::string(context) + ": non-finite tensor element");
        }
    }
}

void Tensor::fill(double v) {
    std::fill(data_.begin(), data_.end(), v);
}

double tensor_mse(const Tensor& a, const Tensor& b) {
    if (!a.same_shape(b)) {
        throw std::invalid_argument("tensor_mse: shape mismatch");
    }
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        acc += d * d;
    }
    return acc / static_cast<double>(a.size());
}

double tensor_mean(const Tensor& t) {
    double acc = 0.0;
    for (double v : t.values()) acc += v;
    return acc / static_cast<double>(t.size());
}

double tensor_min(const Tensor& t) {
    return *std::min_element(t.values().begin(), t.values().end());
}

double tensor_max(const Tensor& t) {
    return *std::max_element(t.values().begin(), t.values().end());
}

}  // namespace idcap
