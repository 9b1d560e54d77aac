// tensor.hpp - dense row-major tensor of doubles
#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "uat/errors.hpp"

namespace uat {

struct Tensor {
    std::vector<int> shape;
    std::vector<double> data;  // row-major

    Tensor() = default;
    Tensor(std::vector<int> s, std::vector<double> d);

    static Tensor zeros(const std::vector<int>& shape);
    static Tensor full(const std::vector<int>& shape, double value);
    static Tensor scalar(double value);                 // shape [1,1]
    static Tensor row(const std::vector<double>& values);  // shape [1,n]

    std::int64_t numel() const { return static_cast<std::int64_t>(data.size()); }
    int rank() const { return static_cast<int>(shape.size()); }

    // 2-D accessors; most graph ops work on matrices
    int rows() const { return shape.at(0); }
    int cols() const { return shape.at(1); }
    double& at(int r, int c) { return data[static_cast<std::size_t>(r) * cols() + c]; }
    double at(int r, int c) const { return data[static_cast<std::size_t>(r) * cols() + c]; }

    bool same_shape(const Tensor& other) const { return shape == other.shape; }
    bool all_finite() const;
    std::string shape_str() const;
};

std::int64_t shape_numel(const std::vector<int>& shape);

}  // namespace uat
