#include "gcs/tensor.hpp"

#include <cmath>

#include "gcs/errors.hpp"

namespace gcs {

Tensor Tensor::scalar(double v) {
    Tensor t;
    t.data = {v};
    return t;
}

Tensor Tensor::zeros(std::vector<std::size_t> shape) {
    Tensor t;
    t.shape = std::move(shape);
    std::size_t n = 1;
    for (auto d : t.shape) n *= d;
    t.data.assign(n, 0.0);
    return t;
}

Tensor Tensor::full(std::vector<std::size_t> shape, double v) {
    Tensor t = zeros(std::move(shape));
    for (auto& x : t.data) x = v;
    return t;
}

Tensor Tensor::matrix(std::size_t rows, std::size_t cols, std::vector<double> values) {
    if (values.size() != rows * cols)
        fail(strf("matrix init: %zu values for %zux%zu", values.size(), rows, cols));
    Tensor t;
    t.shape = {rows, cols};
    t.data = std::move(values);
    return t;
}

Tensor Tensor::vec(std::vector<double> values) {
    Tensor t;
    t.shape = {values.size()};
    t.data = std::move(values);
    return t;
}

Tensor Tensor::identity(std::size_t n) {
    Tensor t = zeros({n, n});
    for (std::size_t i = 0; i < n; ++i) t.data[i * n + i] = 1.0;
    return t;
}

std::size_t Tensor::numel() const {
    std::size_t n = 1;
    for (auto d : shape) n *= d;
    return n;
}

double Tensor::scalar_value() const {
    if (numel() != 1) fail(strf("scalar_value on tensor of shape [%s]", shape_str(shape).c_str()));
    return data[0];
}

std::size_t Tensor::rows() const {
    if (rank() != 2) fail(strf("rows() on rank-%zu tensor", rank()));
    return shape[0];
}

std::size_t Tensor::cols() const {
    if (rank() != 2) fail(strf("cols() on rank-%zu tensor", rank()));
    return shape[1];
}

double& Tensor::at(std::size_t r, std::size_t c) { return data[r * cols() + c]; }

double Tensor::at(std::size_t r, std::size_t c) const { return data[r * cols() + c]; }

bool Tensor::all_finite() const {
    for (double v : data)
        if (!std::isfinite(v)) return false;
    return true;
}

std::string shape_str(const std::vector<std::size_t>& shape) {
    if (shape.empty()) return "scalar";
    std::string s;
    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (i) s += "x";
        s += std::to_string(shape[i]);
    }
    return s;
}

}  // namespace gcs
