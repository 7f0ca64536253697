// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <string>
#include <vector>

#include "momo/error.hpp"

namespace momo {

// Dense row-major matrix. Double precision by default; float is available
// for the benchmark path.
template <typename T = double>
class DenseMatrix {
public:
    DenseMatrix() = default;
    DenseMatrix(std::size_t rows, std::size_t cols, T fill = T(0))
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

    DenseMatrix(std::initializer_list<std::initializer_list<T>> init) {
        rows_ = init.size();
        cols_ = rows_ ? init.begin()->size() : 0;
        data_.reserve(rows_ * cols_);
        for (const auto& row : init) {
            if (row.size() != cols_) {
                throw DimensionError("DenseMatrix: ragged initializer");
            }
            data_.insert(data_.end(), row.begin(), row.end());
        }
    }

    static DenseMatrix identity(std::size_t n) {
        DenseMatrix m(n, n);
        for (std::size_t i = 0; i < n; ++i) m(i, i) = T(1);
        return m;
    }

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    std::size_t size() const { return data_.size(); }
    bool empty() const { return data_.empty(); }

    T& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
    const T& operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

    T* data() { return data_.data(); }
    const T* data() const { return data_.data(); }
    T* row(std::size_t r) { return data_.data() + r * cols_; }
    const T* row(std::size_t r) const { return data_.data() + r * cols_; }

    std::vector<T>& raw() { return data_; }
    const std::vector<T>& raw() const { return data_; }

    void fill(T v) { std::fill(data_.begin(), data_.end(), v); }

    bool same_shape(const DenseMatrix& o) const {
        return rows_ == o.rows_ && cols_ == o.cols_;
    }

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<T> data_;
};

using Matrix = DenseMatrix<double>;

namespace detail {

inline std::string shape_str(std::size_t r, std::size_t c) {
    return std::to_string(r) + "x" + std::to_string(c);
}

}  // namespace detail

template <typename T>
DenseMatrix<T> matmul(const DenseMatrix<T>& a, const DenseMatrix<T>& b) {
    if (a.cols() != b.rows()) {
        throw DimensionError("matmul: " + detail::shape_str(a.rows(), a.cols()) + " * " +
                             detail::shape_str(b.rows(), b.cols()));
    }
    DenseMatrix<T> out(a.rows(), b.cols());
    const std::size_t n = a.rows(), k = a.cols(), m = b.cols();
    for (std::size_t i = 0; i < n; ++i) {
        T* __restrict dst = out.row(i);
        const T* __restrict ar = a.row(i);
        for (std::size_t p = 0; p < k; ++p) {
            const T aip = ar[p];
            const T* __restrict br = b.row(p);
            for (std::size_t j = 0; j < m; ++j) dst[j] += aip * br[j];
        }
    }
    return out;
}

// a * b^T
template <typename T>
DenseMatrix<T> matmul_nt(const DenseMatrix<T>& a, const DenseMatrix<T>& b) {
    if (a.cols() != b.cols()) {
        throw DimensionError("matmul_nt: " + detail::shape_str(a.rows(), a.cols()) + " * " +
                             detail::shape_str(b.cols(), b.rows()));
    }
    DenseMatrix<T> out(a.rows(), b.rows());
    for (std::size_t i = 0; i < a.rows(); ++i) {
        const T* __restrict ar = a.row(i);
        for (std::size_t j = 0; j < b.rows(); ++j) {
            const T* __restrict br = b.row(j);
            T acc = T(0);
            for (std::size_t p = 0; p < a.cols(); ++p) acc += ar[p] * br[p];
            out(i, j) = acc;
        }
    }
    return out;
}

// a^T * b
template <typename T>
DenseMatrix<T> matmul_tn(const DenseMatrix<T>& a, const DenseMatrix<T>& b) {
    if (a.rows() != b.rows()) {
        throw DimensionError("matmul_tn: " + detail::shape_str(a.cols(), a.rows()) + " * " +
                             detail::shape_str(b.rows(), b.cols()));
    }
    DenseMatrix<T> out(a.cols(), b.cols());
    for (std::size_t p = 0; p < a.rows(); ++p) {
        const T* __restrict ar = a.row(p);
        const T* __restrict br = b.row(p);
        for (std::size_t i = 0; i < a.cols(); ++i) {
            T* __restrict dst = out.row(i);
            const T aip = ar[i];
            for (std::size_t j = 0; j < b.cols(); ++j) dst[j] += aip * br[j];
        }
    }
    return out;
}

template <typename T>
DenseMatrix<T> transpose(const DenseMatrix<T>& a) {
    DenseMatrix<T> out(a.cols(), a.rows());
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < a.cols(); ++j) out(j, i) = a(i, j);
    return out;
}

template <typename T>
DenseMatrix<T> add(const DenseMatrix<T>& a, const DenseMatrix<T>& b) {
    if (!a.same_shape(b)) throw DimensionError("add: shape mismatch");
    DenseMatrix<T> out = a;
    for (std::size_t i = 0; i < out.size(); ++i) out.raw()[i] += b.raw()[i];
    return out;
}

template <typename T>
DenseMatrix<T> sub(const DenseMatrix<T>& a, const DenseMatrix<T>& b) {
    if (!a.same_shape(b)) throw DimensionError("sub: shape mismatch");
    DenseMatrix<T> out = a;
    for (std::size_t i = 0; i < out.size(); ++i) out.raw()[i] -= b.raw()[i];
    return out;
}

template <typename T>
DenseMatrix<T> scale(const DenseMatrix<T>& a, T c) {
    DenseMatrix<T> out = a;
    for (auto& v : out.raw()) v *= c;
    return out;
}

// y += c * x
template <typename T>
void axpy(DenseMatrix<T>& y, T c, const DenseMatrix<T>& x) {
    if (!y.same_shape(x)) throw DimensionError("axpy: shape mismatch");
    for (std::size_t i = 0; i < y.size(); ++i) y.raw()[i] += c * x.raw()[i];
}

template <typename T>
T frobenius_norm(const DenseMatrix<T>& a) {
    T acc = T(0);
    for (const T v : a.raw()) acc += v * v;
    return std::sqrt(acc);
}

template <typename T>
T max_abs_diff(const DenseMatrix<T>& a, const DenseMatrix<T>& b) {
    if (!a.same_shape(b)) throw DimensionError("max_abs_diff: shape mismatch");
    T m = T(0);
    for (std::size_t i = 0; i < a.size(); ++i) {
        const T d = std::abs(a.raw()[i] - b.raw()[i]);
        if (d > m) m = d;
    }
    return m;
}

template <typename T>
bool all_finite(const DenseMatrix<T>& a) {
    for (const T v : a.raw())
        if (!std::isfinite(v)) return false;
    return true;
}

// ---- vector helpers (std::vector<T> as a column vector) ----

template <typename T>
T l2_norm(const std::vector<T>& v) {
    T acc = T(0);
    for (const T x : v) acc += x * x;
    return std::sqrt(acc);
}

template <typename T>
T dot(const std::vector<T>& a, const std::vector<T>& b) {
    if (a.size() != b.size()) throw DimensionError("dot: length mismatch");
    T acc = T(0);
    for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
    return acc;
}

template <typename T>
std::vector<T> vec_sub(const std::vector<T>& a, const std::vector<T>& b) {
    if (a.size() != b.size()) throw DimensionError("vec_sub: length mismatch");
    std::vector<T> out(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] - b[i];
    return out;
}

// A * x for a vector x
template <typename T>
std::vector<T> matvec(const DenseMatrix<T>& a, const std::vector<T>& x) {
    if (a.cols() != x.size()) throw DimensionError("matvec: shape mismatch");
    std::vector<T> out(a.rows(), T(0));
    for (std::size_t i = 0; i < a.rows(); ++i) {
        const T* __restrict ar = a.row(i);
        T acc = T(0);
        for (std::size_t j = 0; j < a.cols(); ++j) acc += ar[j] * x[j];
        out[i] = acc;
    }
    return out;
}

}  // namespace momo
