#pragma once

#include <Eigen/Core>
#include <cmath>
#include <initializer_list>
#include <vector>

#include "stegsage/common.hpp"

namespace stegsage {

/// Dense row-major 2-D tensor of doubles. The one value type every
/// kernel in the toolkit works on.
///
/// Storage is 64-byte aligned: Eigen splits vectorized reductions at the
/// first aligned element, so buffer placement must not vary between runs
/// or identical trainings drift in the low bits.
struct Tensor2 {
    int rows = 0;
    int cols = 0;
    std::vector<double, Eigen::aligned_allocator<double>> data;

    Tensor2() = default;
    Tensor2(int r, int c) : rows(r), cols(c), data(static_cast<size_t>(r) * c, 0.0) {
        if (r < 0 || c < 0) throw ValidationError("Tensor2: negative shape");
    }
    Tensor2(std::initializer_list<std::initializer_list<double>> init) {
        rows = static_cast<int>(init.size());
        cols = rows == 0 ? 0 : static_cast<int>(init.begin()->size());
        data.reserve(static_cast<size_t>(rows) * cols);
        for (const auto& row : init) {
            if (static_cast<int>(row.size()) != cols)
                throw ValidationError("Tensor2: ragged initializer");
            data.insert(data.end(), row.begin(), row.end());
        }
    }

    static Tensor2 zeros(int r, int c) { return Tensor2(r, c); }
    static Tensor2 zeros_like(const Tensor2& other) { return Tensor2(other.rows, other.cols); }

    double& operator()(int r, int c) { return data[static_cast<size_t>(r) * cols + c]; }
    double operator()(int r, int c) const { return data[static_cast<size_t>(r) * cols + c]; }

    double* row_ptr(int r) { return data.data() + static_cast<size_t>(r) * cols; }
    const double* row_ptr(int r) const { return data.data() + static_cast<size_t>(r) * cols; }

    size_t size() const { return data.size(); }
    bool same_shape(const Tensor2& o) const { return rows == o.rows && cols == o.cols; }

    bool all_finite() const {
        for (double v : data)
            if (!std::isfinite(v)) return false;
        return true;
    }

    void fill(double v) { std::fill(data.begin(), data.end(), v); }

    bool operator==(const Tensor2& o) const {
        return rows == o.rows && cols == o.cols && data == o.data;
    }

    using EigenMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
    Eigen::Map<EigenMat> map() { return {data.data(), rows, cols}; }
    Eigen::Map<const EigenMat> map() const { return {data.data(), rows, cols}; }
};

inline void require_shape(const Tensor2& t, int r, int c, const char* what) {
    if (t.rows != r || t.cols != c)
        throw ValidationError(std::string(what) + ": expected " + std::to_string(r) + "x" +
                              std::to_string(c) + ", got " + std::to_string(t.rows) + "x" +
                              std::to_string(t.cols));
}

}  // namespace stegsage
