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
#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <string>
#include <vector>

#include "gprlab/dense_matrix.hpp"
#include "gprlab/error.hpp"

namespace gprlab {

/// Eigenvalues in descending order; eigenvectors are the matching columns.
struct EigenDecomposition {
    std::vector<double> eigenvalues;
    DenseMatrix eigenvectors;
};

struct EigenOptions {
    /// Convergence threshold on the off-diagonal Frobenius norm, relative to ||A||_F.
    double tol = 1e-14;
    int max_sweeps = 100;
    /// Largest accepted dimension.
    std::size_t max_n = 2000;
};

namespace detail {

inline void check_symmetric_input(const char* what, const DenseMatrix& a, std::size_t max_n) {
    const std::size_t n = a.rows();
    if (a.cols() != n) fail_dims(what, a.rows(), a.cols(), a.cols(), a.rows());
    if (n > max_n) {
        throw ConfigError(std::string(what) + ": n=" + std::to_string(n) + " exceeds the cap of " +
                          std::to_string(max_n));
    }
    const double sym_tol = 1e-10 * std::max(1.0, max_abs(a));
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            if (std::abs(a(i, j) - a(j, i)) > sym_tol) {
                throw PreconditionError(std::string(what) + ": input is not symmetric at (" + std::to_string(i) +
                                        ", " + std::to_string(j) + ")");
            }
        }
    }
}

} // namespace detail

/**
 * Cyclic Jacobi eigensolver for small dense symmetric matrices.
 *
 * Each eigenvector is sign-normalized so that its first non-negligible
 * component is positive, making the output deterministic.
 */
inline EigenDecomposition symmetric_eigen(const DenseMatrix& a, EigenOptions opt = {}) {
    const std::size_t n = a.rows();
    detail::check_symmetric_input("symmetric_eigen", a, opt.max_n);

    DenseMatrix m = a;
    DenseMatrix v = DenseMatrix::identity(n);
    double fro = 0.0;
    for (double x : m.values()) fro += x * x;
    fro = std::sqrt(fro);

    auto off_norm = [&] {
        double s = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = i + 1; j < n; ++j) s += m(i, j) * m(i, j);
        }
        return std::sqrt(2.0 * s);
    };

    bool converged = false;
    for (int sweep = 0; sweep <= opt.max_sweeps; ++sweep) {
        if (off_norm() <= opt.tol * std::max(fro, 1e-300)) {
            converged = true;
            break;
        }
        if (sweep == opt.max_sweeps) break;
        for (std::size_t p = 0; p + 1 < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) {
                const double apq = m(p, q);
                if (apq == 0.0) continue;
                const double theta = (m(q, q) - m(p, p)) / (2.0 * apq);
                const double t = (theta >= 0.0 ? 1.0 : -1.0) /
                                 (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double s = t * c;
                for (std::size_t k = 0; k < n; ++k) {
                    const double mkp = m(k, p);
                    const double mkq = m(k, q);
                    m(k, p) = c * mkp - s * mkq;
                    m(k, q) = s * mkp + c * mkq;
                }
                for (std::size_t k = 0; k < n; ++k) {
                    const double mpk = m(p, k);
                    const double mqk = m(q, k);
                    m(p, k) = c * mpk - s * mqk;
                    m(q, k) = s * mpk + c * mqk;
                }
                m(p, q) = 0.0;
                m(q, p) = 0.0;
                for (std::size_t k = 0; k < n; ++k) {
                    const double vkp = v(k, p);
                    const double vkq = v(k, q);
                    v(k, p) = c * vkp - s * vkq;
                    v(k, q) = s * vkp + c * vkq;
                }
            }
        }
    }
    if (!converged) {
        throw NumericalError("symmetric_eigen: no convergence after " +
                             std::to_string(opt.max_sweeps) + " sweeps");
    }

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t x, std::size_t y) { return m(x, x) > m(y, y); });

    EigenDecomposition out;
    out.eigenvalues.resize(n);
    out.eigenvectors = DenseMatrix(n, n);
    for (std::size_t c = 0; c < n; ++c) {
        const std::size_t src = order[c];
        out.eigenvalues[c] = m(src, src);
        double sign = 1.0;
        for (std::size_t k = 0; k < n; ++k) {
            if (std::abs(v(k, src)) > 1e-12) {
                sign = v(k, src) < 0.0 ? -1.0 : 1.0;
                break;
            }
        }
        for (std::size_t k = 0; k < n; ++k) out.eigenvectors(k, c) = sign * v(k, src);
    }
    return out;
}

/**
 * Eigenvalues only, descending: Householder reduction to tridiagonal form
 * followed by implicit-shift QL. Much cheaper than symmetric_eigen for the
 * graph sizes of the spectral diagnostics.
 */
inline std::vector<double> symmetric_eigenvalues(const DenseMatrix& a, EigenOptions opt = {}) {
    detail::check_symmetric_input("symmetric_eigenvalues", a, opt.max_n);
    const auto n = static_cast<std::ptrdiff_t>(a.rows());
    if (n == 0) return {};
    DenseMatrix m = a;
    std::vector<double> d(static_cast<std::size_t>(n)), e(static_cast<std::size_t>(n));
    auto at = [&](std::ptrdiff_t i, std::ptrdiff_t j) -> double& {
        return m(static_cast<std::size_t>(i), static_cast<std::size_t>(j));
    };
    auto D = [&](std::ptrdiff_t i) -> double& { return d[static_cast<std::size_t>(i)]; };
    auto E = [&](std::ptrdiff_t i) -> double& { return e[static_cast<std::size_t>(i)]; };

    for (std::ptrdiff_t i = n - 1; i > 0; --i) {
        const std::ptrdiff_t l = i - 1;
        double h = 0.0;
        if (l > 0) {
            double scale = 0.0;
            for (std::ptrdiff_t k = 0; k <= l; ++k) scale += std::abs(at(i, k));
            if (scale == 0.0) {
                E(i) = at(i, l);
            } else {
                for (std::ptrdiff_t k = 0; k <= l; ++k) {
                    at(i, k) /= scale;
                    h += at(i, k) * at(i, k);
                }
                double f = at(i, l);
                double g = f >= 0.0 ? -std::sqrt(h) : std::sqrt(h);
                E(i) = scale * g;
                h -= f * g;
                at(i, l) = f - g;
                f = 0.0;
                for (std::ptrdiff_t j = 0; j <= l; ++j) {
                    g = 0.0;
                    for (std::ptrdiff_t k = 0; k <= j; ++k) g += at(j, k) * at(i, k);
                    for (std::ptrdiff_t k = j + 1; k <= l; ++k) g += at(k, j) * at(i, k);
                    E(j) = g / h;
                    f += E(j) * at(i, j);
                }
                const double hh = f / (h + h);
                for (std::ptrdiff_t j = 0; j <= l; ++j) {
                    f = at(i, j);
                    E(j) = g = E(j) - hh * f;
                    for (std::ptrdiff_t k = 0; k <= j; ++k) at(j, k) -= f * E(k) + g * at(i, k);
                }
            }
        } else {
            E(i) = at(i, l);
        }
        D(i) = h;
    }
    E(0) = 0.0;
    for (std::ptrdiff_t i = 0; i < n; ++i) D(i) = at(i, i);

    for (std::ptrdiff_t i = 1; i < n; ++i) E(i - 1) = E(i);
    E(n - 1) = 0.0;
    constexpr int max_iter = 60;
    for (std::ptrdiff_t l = 0; l < n; ++l) {
        int iter = 0;
        std::ptrdiff_t mm = l;
        do {
            for (mm = l; mm < n - 1; ++mm) {
                const double dd = std::abs(D(mm)) + std::abs(D(mm + 1));
                if (std::abs(E(mm)) <= std::numeric_limits<double>::epsilon() * dd) break;
            }
            if (mm == l) break;
            if (iter++ == max_iter) throw NumericalError("symmetric_eigenvalues: QL iteration did not converge");
            double g = (D(l + 1) - D(l)) / (2.0 * E(l));
            double r = std::hypot(g, 1.0);
            g = D(mm) - D(l) + E(l) / (g + std::copysign(r, g));
            double s = 1.0, c = 1.0, p = 0.0;
            bool deflated = false;
            for (std::ptrdiff_t i = mm - 1; i >= l; --i) {
                const double f = s * E(i);
                const double b = c * E(i);
                r = std::hypot(f, g);
                E(i + 1) = r;
                if (r == 0.0) {
                    D(i + 1) -= p;
                    E(mm) = 0.0;
                    deflated = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = D(i + 1) - p;
                r = (D(i) - g) * s + 2.0 * c * b;
                p = s * r;
                D(i + 1) = g + p;
                g = c * r - b;
            }
            if (deflated) continue;
            D(l) -= p;
            E(l) = g;
            E(mm) = 0.0;
        } while (true);
    }
    std::sort(d.begin(), d.end(), std::greater<>());
    return d;
}

/// Reassembles U diag(lambda) U^T.
inline DenseMatrix reconstruct(const EigenDecomposition& e) {
    const std::size_t n = e.eigenvalues.size();
    DenseMatrix scaled = e.eigenvectors;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) scaled(i, j) *= e.eigenvalues[j];
    }
    return matmul_nt(scaled, e.eigenvectors);
}

} // namespace gprlab
