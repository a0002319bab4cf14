#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace gcs {

// Dense row-major tensor of 64-bit reals. Rank 0 (scalar), 1 and 2 cover
// everything the training graph needs; 64-bit is required because the
// noise-variance path goes through cubes of powers and 6th moments.
struct Tensor {
    std::vector<std::size_t> shape;
    std::vector<double> data;

    Tensor() = default;

    static Tensor scalar(double v);
    static Tensor zeros(std::vector<std::size_t> shape);
    static Tensor full(std::vector<std::size_t> shape, double v);
    static Tensor matrix(std::size_t rows, std::size_t cols, std::vector<double> values);
    static Tensor vec(std::vector<double> values);
    static Tensor identity(std::size_t n);

    std::size_t rank() const { return shape.size(); }
    std::size_t numel() const;
    bool is_scalar() const { return numel() == 1 && rank() == 0; }
    double scalar_value() const;

    // rank-2 accessors; throw on other ranks
    std::size_t rows() const;
    std::size_t cols() const;
    double& at(std::size_t r, std::size_t c);
    double at(std::size_t r, std::size_t c) const;

    bool same_shape(const Tensor& o) const { return shape == o.shape; }
    bool all_finite() const;
};

std::string shape_str(const std::vector<std::size_t>& shape);

}  // namespace gcs
