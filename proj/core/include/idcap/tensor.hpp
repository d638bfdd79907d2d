#pragma once

#include <cstddef>
#include <vector>

namespace idcap {

/// Dense real-valued n-d array, row-major. The universal value type for
/// images, feature maps and network parameters.
class Tensor {
public:
    Tensor() = default;
    explicit Tensor(std::vector<std::size_t> shape, double fill = 0.0);
    Tensor(std::vector<std::size_t> shape, std::vector<double> data);

    const std::vector<std::size_t>& shape() const { return shape_; }
    std::size_t rank() const { return shape_.size(); }
    std::size_t size() const { return data_.size(); }
    bool empty() const { return data_.empty(); }

    double* data() { return data_.data(); }
    const double* data() const { return data_.data(); }
    std::vector<double>& values() { return data_; }
    const std::vector<double>& values() const { return data_; }

    double& operator[](std::size_t i) { return data_[i]; }
    double operator[](std::size_t i) const { return data_[i]; }

    /// Rank-3 (C, H, W) element access.
    double& at(std::size_t c, std::size_t i, std::size_t j) {
        return data_[(c * shape_[1] + i) * shape_[2] + j];
    }
    double at(std::size_t c, std::size_t i, std::size_t j) const {
        return data_[(c * shape_[1] + i) * shape_[2] + j];
    }

    bool same_shape(const Tensor& other) const { return shape_ == other.shape_; }

    /// View with a new shape of equal element count.
    Tensor reshaped(std::vector<std::size_t> new_shape) const;

    /// Throws numeric_error if any element is NaN or infinite.
    void check_finite(const char* context) const;

    void fill(double v);

    bool operator==(const Tensor& other) const {
        return shape_ == other.shape_ && data_ == other.data_;
    }

private:
    std::vector<std::size_t> shape_;
    std::vector<double> data_;
};

/// Elementwise helpers used across training and metrics code.
double tensor_mse(const Tensor& a, const Tensor& b);
double tensor_mean(const Tensor& t);
double tensor_min(const Tensor& t);
double tensor_max(const Tensor& t);

}  // namespace idcap
