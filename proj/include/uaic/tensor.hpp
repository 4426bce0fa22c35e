#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace uaic::nc {

using Shape = std::vector<std::size_t>;

std::string shape_str(const Shape& shape);

/// Thrown when an op receives operands whose shapes do not conform.
class ShapeError : public std::invalid_argument {
  public:
    using std::invalid_argument::invalid_argument;
};

/// Thrown on NaN/Inf values where finite values are required.
class NumericError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// Dense row-major array of 64-bit reals. Rank is 1 or 2 in practice; a
/// scalar is shape {1}.
class Tensor {
  public:
    Tensor() = default;
    explicit Tensor(Shape shape, double fill = 0.0);
    Tensor(Shape shape, std::vector<double> data);

    static Tensor scalar(double v) { return Tensor({1}, std::vector<double>{v}); }
    static Tensor matrix(std::initializer_list<std::initializer_list<double>> rows);
    static Tensor identity(std::size_t n);

    const Shape& shape() const { return shape_; }
    std::size_t size() const { return data_.size(); }
    std::size_t rank() const { return shape_.size(); }
    bool empty() const { return data_.empty(); }

    // Rows/cols view a rank-1 tensor as a single row.
    std::size_t rows() const { return shape_.size() == 2 ? shape_[0] : 1; }
    std::size_t cols() const { return shape_.empty() ? 0 : shape_.back(); }

    std::span<double> data() { return data_; }
    std::span<const double> data() const { return data_; }
    double* ptr() { return data_.data(); }
    const double* ptr() const { return data_.data(); }

    double& operator[](std::size_t i) { return data_[i]; }
    double operator[](std::size_t i) const { return data_[i]; }
    double& at(std::size_t r, std::size_t c) { return data_[r * cols() + c]; }
    double at(std::size_t r, std::size_t c) const { return data_[r * cols() + c]; }

    double item() const;
    bool all_finite() const;
    void fill(double v);

    friend bool operator==(const Tensor& a, const Tensor& b) {
        return a.shape_ == b.shape_ && a.data_ == b.data_;
    }

  private:
    Shape shape_;
    std::vector<double> data_;
};

} // namespace uaic::nc
