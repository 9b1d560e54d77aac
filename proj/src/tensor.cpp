#include "uat/tensor.hpp"

#include <sstream>

namespace uat {

std::int64_t shape_numel(const std::vector<int>& shape) {
    std::int64_t n = 1;
    for (int d : shape) {
        if (d <= 0) throw validation_error("tensor dimensions must be positive");
        n *= d;
    }
    return n;
}

Tensor::Tensor(std::vector<int> s, std::vector<double> d)
    : shape(std::move(s)), data(std::move(d)) {
    if (shape_numel(shape) != static_cast<std::int64_t>(data.size()))
        throw validation_error("tensor data length does not match shape " + shape_str());
}

Tensor Tensor::zeros(const std::vector<int>& shape) {
    Tensor t;
    t.shape = shape;
    t.data.assign(static_cast<std::size_t>(shape_numel(shape)), 0.0);
    return t;
}

Tensor Tensor::full(const std::vector<int>& shape, double value) {
    Tensor t = zeros(shape);
    for (double& v : t.data) v = value;
    return t;
}

Tensor Tensor::scalar(double value) { return Tensor({1, 1}, {value}); }

Tensor Tensor::row(const std::vector<double>& values) {
    return Tensor({1, static_cast<int>(values.size())}, values);
}

bool Tensor::all_finite() const {
    for (double v : data)
        if (!std::isfinite(v)) return false;
    return true;
}

std::string Tensor::shape_str() const {
    std::ostringstream os;
    os << "[";
    for (std::size_t i = 0; i < shape.size(); ++i) os << (i ? "x" : "") << shape[i];
    os << "]";
    return os.str();
}

}  // namespace uat
