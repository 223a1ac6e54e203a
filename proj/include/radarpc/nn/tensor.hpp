#pragma once

#include <algorithm>
#include <cstddef>
#include <functional>
#include <numeric>
#include <string>
#include <vector>

#include "radarpc/util.hpp"

namespace radarpc::nn {

/// Dense row-major double tensor.
struct Tensor {
    std::vector<std::size_t> shape;
    std::vector<double> data;

    Tensor() = default;
    explicit Tensor(std::vector<std::size_t> s, double fill = 0.0)
        : shape(std::move(s)), data(count(shape), fill) {}

    static std::size_t count(const std::vector<std::size_t>& s) {
        return std::accumulate(s.begin(), s.end(), std::size_t{1}, std::multiplies<>());
    }

    std::size_t size() const { return data.size(); }
    std::size_t dim(std::size_t i) const { return shape.at(i); }
    double* ptr() { return data.data(); }
    const double* ptr() const { return data.data(); }
    double& operator[](std::size_t i) { return data[i]; }
    double operator[](std::size_t i) const { return data[i]; }

    void zero() { std::fill(data.begin(), data.end(), 0.0); }

    bool operator==(const Tensor&) const = default;
};

inline std::string shape_string(const std::vector<std::size_t>& s) {
    std::string out = "[";
    for (std::size_t i = 0; i < s.size(); ++i) out += (i ? "," : "") + std::to_string(s[i]);
    return out + "]";
}

inline void expect_shape(const Tensor& t, const std::vector<std::size_t>& s, const char* what) {
    if (t.shape != s)
        throw ValidationError(what, "expected shape " + shape_string(s) + ", got " + shape_string(t.shape));
}

}  // namespace radarpc::nn
