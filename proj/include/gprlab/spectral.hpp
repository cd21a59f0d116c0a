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
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "gprlab/dense_matrix.hpp"
#include "gprlab/error.hpp"
#include "gprlab/graph.hpp"
#include "gprlab/symmetric_eigen.hpp"

namespace gprlab {

/// g(lambda) = sum_k gamma_k lambda^k on a set of eigenvalues.
struct FilterResponse {
    std::vector<double> gamma;
    std::vector<double> lambdas;
    std::vector<double> response;
    /// |g(lambda_i) / g(lambda_max)|; empty when g(lambda_max) == 0.
    std::vector<double> ratios;
    std::size_t reference_index = 0;

    bool ratios_defined() const noexcept { return !ratios.empty() || lambdas.empty(); }
};

/// Horner evaluation of the GPR polynomial.
inline double evaluate_polynomial(std::span<const double> gamma, double lambda) {
    double acc = 0.0;
    for (std::size_t k = gamma.size(); k-- > 0;) acc = acc * lambda + gamma[k];
    return acc;
}

inline FilterResponse filter_response(std::span<const double> gamma, std::span<const double> lambdas) {
    FilterResponse r;
    r.gamma.assign(gamma.begin(), gamma.end());
    r.lambdas.assign(lambdas.begin(), lambdas.end());
    r.response.reserve(lambdas.size());
    for (double l : lambdas) r.response.push_back(evaluate_polynomial(gamma, l));
    if (lambdas.empty()) return r;
    r.reference_index = static_cast<std::size_t>(
        std::max_element(lambdas.begin(), lambdas.end()) - lambdas.begin());
    const double ref = r.response[r.reference_index];
    if (ref != 0.0) {
        for (double g : r.response) r.ratios.push_back(std::abs(g / ref));
    }
    return r;
}

/// Eigenvalues of a normalized graph, descending.
inline std::vector<double> graph_spectrum(const SparseGraph& g, std::size_t max_n = 2000) {
    if (!g.is_normalized()) throw GraphError("graph_spectrum: graph must be normalized");
    EigenOptions opt;
    opt.max_n = max_n;
    return symmetric_eigenvalues(g.to_dense(), opt);
}

enum class FilterKind { low_pass, high_pass, mixed };

inline const char* to_string(FilterKind k) {
    switch (k) {
    case FilterKind::low_pass: return "LOW_PASS";
    case FilterKind::high_pass: return "HIGH_PASS";
    case FilterKind::mixed: return "MIXED";
    }
    return "?";
}

struct FilterClassification {
    FilterKind kind = FilterKind::mixed;
    /// Largest |g(lambda_i)/g(lambda_1)| over i >= 2.
    double max_ratio = 0.0;
    /// Ratio at the most negative eigenvalue.
    double ratio_at_min = 0.0;
};

/**
 * Low-pass when every ratio below the top eigenvalue is < 1; high-pass when
 * the ratio at the most negative eigenvalue is > 1; mixed otherwise.
 * The spectrum must come from a connected graph: lambda_1 = 1 and
 * lambda_2 < 1.
 */
inline FilterClassification classify_filter(std::span<const double> gamma, std::span<const double> spectrum) {
    if (spectrum.size() < 2) throw PreconditionError("classify_filter: need at least two eigenvalues");
    std::vector<double> s(spectrum.begin(), spectrum.end());
    std::sort(s.begin(), s.end(), std::greater<>());
    constexpr double tol = 1e-9;
    if (std::abs(s[0] - 1.0) > tol) {
        throw PreconditionError("classify_filter: top eigenvalue " + std::to_string(s[0]) + " is not 1");
    }
    if (s[1] > 1.0 - tol) {
        throw PreconditionError("classify_filter: second eigenvalue equals 1, graph is disconnected");
    }
    const auto r = filter_response(gamma, s);
    if (r.ratios.empty()) throw PreconditionError("classify_filter: g(lambda_1) = 0, ratios undefined");
    FilterClassification c;
    c.max_ratio = *std::max_element(r.ratios.begin() + 1, r.ratios.end());
    c.ratio_at_min = r.ratios.back();
    if (c.max_ratio < 1.0) {
        c.kind = FilterKind::low_pass;
    } else if (c.ratio_at_min > 1.0) {
        c.kind = FilterKind::high_pass;
    }
    return c;
}

/// Solves a x = b for several right-hand sides by LU with partial pivoting.
inline DenseMatrix solve_dense(DenseMatrix a, DenseMatrix b) {
    const std::size_t n = a.rows();
    if (a.cols() != n || b.rows() != n) detail::fail_dims("solve_dense", a.rows(), a.cols(), b.rows(), b.cols());
    const double scale_ref = std::max(max_abs(a), 1e-300);
    for (std::size_t col = 0; col < n; ++col) {
        std::size_t piv = col;
        for (std::size_t r = col + 1; r < n; ++r) {
            if (std::abs(a(r, col)) > std::abs(a(piv, col))) piv = r;
        }
        if (std::abs(a(piv, col)) <= 1e-14 * scale_ref) throw NumericalError("solve_dense: singular system");
        if (piv != col) {
            for (std::size_t j = 0; j < n; ++j) std::swap(a(col, j), a(piv, j));
            for (std::size_t j = 0; j < b.cols(); ++j) std::swap(b(col, j), b(piv, j));
        }
        for (std::size_t r = col + 1; r < n; ++r) {
            const double f = a(r, col) / a(col, col);
            if (f == 0.0) continue;
            for (std::size_t j = col; j < n; ++j) a(r, j) -= f * a(col, j);
            for (std::size_t j = 0; j < b.cols(); ++j) b(r, j) -= f * b(col, j);
        }
    }
    for (std::size_t col = n; col-- > 0;) {
        for (std::size_t j = 0; j < b.cols(); ++j) {
            double s = b(col, j);
            for (std::size_t k = col + 1; k < n; ++k) s -= a(col, k) * b(k, j);
            b(col, j) = s / a(col, col);
        }
    }
    return b;
}

/**
 * Limit of personalized PageRank propagation,
 * alpha (I - (1 - alpha) A_sym)^{-1}. Depends on the graph only, never on labels.
 */
inline DenseMatrix ppr_limit_matrix(const SparseGraph& g, double alpha, std::size_t max_n = 2000) {
    if (!g.is_normalized()) throw GraphError("ppr_limit_matrix: graph must be normalized");
    if (!(alpha > 0.0 && alpha <= 1.0)) throw ConfigError("ppr_limit_matrix: alpha must lie in (0, 1]");
    const std::size_t n = g.num_nodes();
    if (n > max_n) throw ConfigError("ppr_limit_matrix: n exceeds dense solve cap");
    DenseMatrix system = scale(g.to_dense(), -(1.0 - alpha));
    for (std::size_t i = 0; i < n; ++i) system(i, i) += 1.0;
    return solve_dense(std::move(system), scale(DenseMatrix::identity(n), alpha));
}

} // namespace gprlab
