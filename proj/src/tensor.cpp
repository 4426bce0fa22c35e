#include "uaic/tensor.hpp"

#include <cmath>
#include <functional>
#include <numeric>

namespace uaic::nc {

std::string shape_str(const Shape& shape) {
    std::string s = "[";
    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (i) {
            s += ",";
        }
        s += std::to_string(shape[i]);
    }
    return s + "]";
}

namespace {

std::size_t shape_size(const Shape& shape) {
    if (shape.empty()) {
        throw ShapeError("tensor: empty shape");
    }
    std::size_t n = 1;
    for (auto d : shape) {
        if (d == 0) {
            throw ShapeError("tensor: zero dimension in shape " + shape_str(shape));
        }
        n *= d;
    }
    return n;
}

} // namespace

Tensor::Tensor(Shape shape, double fill) : shape_(std::move(shape)) {
    data_.assign(shape_size(shape_), fill);
}

Tensor::Tensor(Shape shape, std::vector<double> data)
    : shape_(std::move(shape)), data_(std::move(data)) {
    if (shape_size(shape_) != data_.size()) {
        throw ShapeError("tensor: shape " + shape_str(shape_) + " does not match " +
                         std::to_string(data_.size()) + " values");
    }
}

Tensor Tensor::matrix(std::initializer_list<std::initializer_list<double>> rows) {
    const std::size_t r = rows.size();
    const std::size_t c = r ? rows.begin()->size() : 0;
    std::vector<double> data;
    data.reserve(r * c);
    for (const auto& row : rows) {
        if (row.size() != c) {
            throw ShapeError("tensor: ragged matrix literal");
        }
        data.insert(data.end(), row.begin(), row.end());
    }
    return Tensor({r, c}, std::move(data));
}

Tensor Tensor::identity(std::size_t n) {
    Tensor t({n, n});
    for (std::size_t i = 0; i < n; ++i) {
        t.at(i, i) = 1.0;
    }
    return t;
}

double Tensor::item() const {
    if (data_.size() != 1) {
        throw ShapeError("tensor: item() on non-scalar of shape " + shape_str(shape_));
    }
    return data_[0];
}

bool Tensor::all_finite() const {
    for (double v : data_) {
        if (!std::isfinite(v)) {
            return false;
        }
    }
    return true;
}

void Tensor::fill(double v) { std::fill(data_.begin(), data_.end(), v); }

} // namespace uaic::nc
