/*
 * Copyright 2026 The gprlab Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <algorithm>
#include <cassert>
#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <limits>
#include <span>
#include <vector>

#include "gprlab/error.hpp"

namespace gprlab {

/**
 * Row-major dense matrix of doubles.
 *
 * The only tensor type in the library: node features, hidden states,
 * logits and weight matrices are all stored this way.
 */
class DenseMatrix {
public:
    DenseMatrix() = default;
    DenseMatrix(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

    DenseMatrix(std::initializer_list<std::initializer_list<double>> init) {
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
        for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
        return m;
    }

    static DenseMatrix from_buffer(std::size_t rows, std::size_t cols, std::vector<double> data) {
        if (data.size() != rows * cols) {
            throw DimensionError("DenseMatrix: buffer length does not match shape");
        }
        DenseMatrix m;
        m.rows_ = rows;
        m.cols_ = cols;
        m.data_ = std::move(data);
        return m;
    }

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }
    std::size_t size() const noexcept { return data_.size(); }
    bool empty() const noexcept { return data_.empty(); }

    double& operator()(std::size_t i, std::size_t j) noexcept {
        assert(i < rows_ && j < cols_);
        return data_[i * cols_ + j];
    }
    double operator()(std::size_t i, std::size_t j) const noexcept {
        assert(i < rows_ && j < cols_);
        return data_[i * cols_ + j];
    }

    std::span<double> row(std::size_t i) noexcept { return {data_.data() + i * cols_, cols_}; }
    std::span<const double> row(std::size_t i) const noexcept {
        return {data_.data() + i * cols_, cols_};
    }

    std::span<double> values() noexcept { return data_; }
    std::span<const double> values() const noexcept { return data_; }
    const std::vector<double>& buffer() const noexcept { return data_; }

    void fill(double v) { std::fill(data_.begin(), data_.end(), v); }

    bool operator==(const DenseMatrix& other) const = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

inline bool all_finite(const DenseMatrix& m) {
    return std::all_of(m.values().begin(), m.values().end(),
                       [](double v) { return std::isfinite(v); });
}

inline double max_abs(const DenseMatrix& m) {
    double r = 0.0;
    for (double v : m.values()) r = std::max(r, std::abs(v));
    return r;
}

/// Largest absolute elementwise difference.
inline double max_abs_diff(const DenseMatrix& a, const DenseMatrix& b) {
    if (a.rows() != b.rows() || a.cols() != b.cols()) {
        detail::fail_dims("max_abs_diff", a.rows(), a.cols(), b.rows(), b.cols());
    }
    double r = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        r = std::max(r, std::abs(a.values()[i] - b.values()[i]));
    }
    return r;
}

namespace detail {

inline void debug_check_finite([[maybe_unused]] const DenseMatrix& m) {
#ifndef NDEBUG
    if (!all_finite(m)) throw NumericalError("non-finite value produced");
#endif
}

} // namespace detail

// Products use i-k-j loop order so the innermost loop is a contiguous axpy.
// Summation order is fixed, which keeps single-threaded results bit-reproducible.

/// a * b
inline DenseMatrix matmul(const DenseMatrix& a, const DenseMatrix& b) {
    if (a.cols() != b.rows()) detail::fail_dims("matmul", a.rows(), a.cols(), b.rows(), b.cols());
    DenseMatrix out(a.rows(), b.cols());
    const std::size_t m = b.cols();
    for (std::size_t i = 0; i < a.rows(); ++i) {
        double* orow = out.row(i).data();
        auto arow = a.row(i);
        for (std::size_t k = 0; k < a.cols(); ++k) {
            const double aik = arow[k];
            if (aik == 0.0) continue;
            const double* brow = b.row(k).data();
            for (std::size_t j = 0; j < m; ++j) orow[j] += aik * brow[j];
        }
    }
    detail::debug_check_finite(out);
    return out;
}

/// transpose(a) * b without materialising the transpose.
inline DenseMatrix matmul_tn(const DenseMatrix& a, const DenseMatrix& b) {
    if (a.rows() != b.rows()) detail::fail_dims("matmul_tn", a.rows(), a.cols(), b.rows(), b.cols());
    DenseMatrix out(a.cols(), b.cols());
    const std::size_t m = b.cols();
    for (std::size_t r = 0; r < a.rows(); ++r) {
        auto arow = a.row(r);
        const double* brow = b.row(r).data();
        for (std::size_t i = 0; i < a.cols(); ++i) {
            const double ari = arow[i];
            if (ari == 0.0) continue;
            double* orow = out.row(i).data();
            for (std::size_t j = 0; j < m; ++j) orow[j] += ari * brow[j];
        }
    }
    detail::debug_check_finite(out);
    return out;
}

/// a * transpose(b)
inline DenseMatrix matmul_nt(const DenseMatrix& a, const DenseMatrix& b) {
    if (a.cols() != b.cols()) detail::fail_dims("matmul_nt", a.rows(), a.cols(), b.rows(), b.cols());
    DenseMatrix out(a.rows(), b.rows());
    for (std::size_t i = 0; i < a.rows(); ++i) {
        auto arow = a.row(i);
        for (std::size_t j = 0; j < b.rows(); ++j) {
            auto brow = b.row(j);
            double s = 0.0;
            for (std::size_t k = 0; k < a.cols(); ++k) s += arow[k] * brow[k];
            out(i, j) = s;
        }
    }
    detail::debug_check_finite(out);
    return out;
}

inline DenseMatrix add(const DenseMatrix& a, const DenseMatrix& b) {
    if (a.rows() != b.rows() || a.cols() != b.cols()) {
        detail::fail_dims("add", a.rows(), a.cols(), b.rows(), b.cols());
    }
    DenseMatrix out = a;
    for (std::size_t i = 0; i < out.size(); ++i) out.values()[i] += b.values()[i];
    detail::debug_check_finite(out);
    return out;
}

inline DenseMatrix subtract(const DenseMatrix& a, const DenseMatrix& b) {
    if (a.rows() != b.rows() || a.cols() != b.cols()) {
        detail::fail_dims("subtract", a.rows(), a.cols(), b.rows(), b.cols());
    }
    DenseMatrix out = a;
    for (std::size_t i = 0; i < out.size(); ++i) out.values()[i] -= b.values()[i];
    detail::debug_check_finite(out);
    return out;
}

/// out += alpha * x, in place.
inline void axpy(double alpha, const DenseMatrix& x, DenseMatrix& out) {
    if (x.rows() != out.rows() || x.cols() != out.cols()) {
        detail::fail_dims("axpy", x.rows(), x.cols(), out.rows(), out.cols());
    }
    auto xv = x.values();
    auto ov = out.values();
    for (std::size_t i = 0; i < ov.size(); ++i) ov[i] += alpha * xv[i];
}

inline DenseMatrix scale(const DenseMatrix& a, double s) {
    DenseMatrix out = a;
    for (double& v : out.values()) v *= s;
    detail::debug_check_finite(out);
    return out;
}

inline DenseMatrix transpose(const DenseMatrix& a) {
    DenseMatrix out(a.cols(), a.rows());
    for (std::size_t i = 0; i < a.rows(); ++i) {
        for (std::size_t j = 0; j < a.cols(); ++j) out(j, i) = a(i, j);
    }
    return out;
}

inline DenseMatrix hadamard(const DenseMatrix& a, const DenseMatrix& b) {
    if (a.rows() != b.rows() || a.cols() != b.cols()) {
        detail::fail_dims("hadamard", a.rows(), a.cols(), b.rows(), b.cols());
    }
    DenseMatrix out = a;
    for (std::size_t i = 0; i < out.size(); ++i) out.values()[i] *= b.values()[i];
    return out;
}

/// Sum over rows, giving one value per column.
inline std::vector<double> column_sums(const DenseMatrix& a) {
    std::vector<double> s(a.cols(), 0.0);
    for (std::size_t i = 0; i < a.rows(); ++i) {
        auto r = a.row(i);
        for (std::size_t j = 0; j < a.cols(); ++j) s[j] += r[j];
    }
    return s;
}

/**
 * Row-wise softmax with smoothing parameter eta: exp(eta*z_j) / sum_m exp(eta*z_m).
 * eta = 1 gives the standard softmax. The row maximum is subtracted before
 * exponentiation.
 */
inline DenseMatrix row_softmax(const DenseMatrix& logits, double eta = 1.0) {
    if (!(eta > 0.0)) throw ConfigError("row_softmax: eta must be positive");
    DenseMatrix out(logits.rows(), logits.cols());
    for (std::size_t i = 0; i < logits.rows(); ++i) {
        auto in = logits.row(i);
        auto o = out.row(i);
        if (in.empty()) continue;
        const double mx = *std::max_element(in.begin(), in.end());
        double total = 0.0;
        for (std::size_t j = 0; j < in.size(); ++j) {
            o[j] = std::exp(eta * (in[j] - mx));
            total += o[j];
        }
        for (double& v : o) v /= total;
    }
    detail::debug_check_finite(out);
    return out;
}

/// Index of the largest entry of each row; ties go to the lowest index.
inline std::vector<std::size_t> row_argmax(const DenseMatrix& m) {
    std::vector<std::size_t> out(m.rows(), 0);
    for (std::size_t i = 0; i < m.rows(); ++i) {
        auto r = m.row(i);
        std::size_t best = 0;
        for (std::size_t j = 1; j < r.size(); ++j) {
            if (r[j] > r[best]) best = j;
        }
        out[i] = best;
    }
    return out;
}

} // namespace gprlab
