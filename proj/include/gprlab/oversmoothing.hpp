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
#include <span>
#include <string>
#include <vector>

#include "gprlab/dense_matrix.hpp"
#include "gprlab/error.hpp"
#include "gprlab/graph.hpp"
#include "gprlab/model.hpp"
#include "gprlab/spmm.hpp"
#include "gprlab/symmetric_eigen.hpp"

namespace gprlab {

/// Rank-one limit pi beta^T of A_sym^k H^(0).
struct StationaryProfile {
    /// pi_i = sqrt(D_ii) / sqrt(sum_v D_vv); unit norm, A_sym pi = pi.
    std::vector<double> pi;
    /// beta^T = pi^T H^(0).
    std::vector<double> beta;
    /// max |lambda_i| over i >= 2: the geometric convergence rate.
    double lambda2 = 0.0;

    DenseMatrix limit() const {
        DenseMatrix l(pi.size(), beta.size());
        for (std::size_t i = 0; i < pi.size(); ++i) {
            for (std::size_t j = 0; j < beta.size(); ++j) l(i, j) = pi[i] * beta[j];
        }
        return l;
    }
};

inline std::vector<double> stationary_vector(const SparseGraph& g) {
    if (!g.is_normalized()) throw GraphError("stationary_vector: graph must be normalized");
    auto deg = g.degrees();
    double total = 0.0;
    for (double d : deg) total += d;
    std::vector<double> pi(deg.size());
    for (std::size_t i = 0; i < deg.size(); ++i) pi[i] = std::sqrt(deg[i]) / std::sqrt(total);
    return pi;
}

/**
 * Largest |lambda| of A_sym restricted to the complement of pi. Uses the
 * dense eigensolver up to dense_cap nodes and power iteration on
 * A_sym - pi pi^T beyond.
 */
inline double second_eigenvalue_magnitude(const SparseGraph& g, std::size_t dense_cap = 400) {
    const std::size_t n = g.num_nodes();
    if (n < 2) return 0.0;
    if (n <= dense_cap) {
        const auto ev = symmetric_eigenvalues(g.to_dense());
        return std::max(std::abs(ev[1]), std::abs(ev.back()));
    }
    const auto pi = stationary_vector(g);
    DenseMatrix v(n, 1);
    Rng rng(12345);
    for (double& x : v.values()) x = uniform01(rng) - 0.5;
    auto deflate_normalize = [&](DenseMatrix& w) {
        double dot = 0.0;
        for (std::size_t i = 0; i < n; ++i) dot += pi[i] * w(i, 0);
        double nrm = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            w(i, 0) -= dot * pi[i];
            nrm += w(i, 0) * w(i, 0);
        }
        nrm = std::sqrt(nrm);
        for (double& x : w.values()) x /= nrm;
        return nrm;
    };
    deflate_normalize(v);
    // Power iteration on B^2 avoids sign oscillation between lambda_2 and lambda_n.
    double est = 0.0;
    for (int it = 0; it < 5000; ++it) {
        DenseMatrix w = spmm(g, spmm(g, v));
        const double next = std::sqrt(deflate_normalize(w));
        v = std::move(w);
        if (std::abs(next - est) < 1e-12) {
            est = next;
            break;
        }
        est = next;
    }
    return est;
}

/// Closed-form pi and beta for a connected, self-loop augmented graph.
inline StationaryProfile stationary_profile(const SparseGraph& g, const DenseMatrix& h0,
                                            bool with_lambda2 = true) {
    if (!g.is_normalized()) throw GraphError("stationary_profile: graph must be normalized");
    if (!is_connected(g)) throw PreconditionError("stationary_profile: graph is disconnected");
    if (h0.rows() != g.num_nodes()) detail::fail_dims("stationary_profile", g.num_nodes(), 1, h0.rows(), h0.cols());
    StationaryProfile p;
    p.pi = stationary_vector(g);
    p.beta.assign(h0.cols(), 0.0);
    for (std::size_t i = 0; i < h0.rows(); ++i) {
        for (std::size_t j = 0; j < h0.cols(); ++j) p.beta[j] += p.pi[i] * h0(i, j);
    }
    if (with_lambda2) p.lambda2 = second_eigenvalue_magnitude(g);
    return p;
}

struct OversmoothingReport {
    /// Fraction of nodes whose argmax Z is the most common predicted label.
    double modal_fraction = 0.0;
    std::size_t modal_label = 0;
    /// max_j ||Z_:j - <Z_:j, pi> pi||_inf.
    double pi_residual = 0.0;
    bool oversmoothed = false;
};

inline constexpr double kOversmoothedFraction = 0.999;

inline OversmoothingReport detect_oversmoothing(const ForwardCache& cache, const SparseGraph& g) {
    const auto& z = cache.z;
    OversmoothingReport r;
    const auto pred = row_argmax(z);
    std::vector<std::size_t> counts(z.cols(), 0);
    for (auto p : pred) ++counts[p];
    r.modal_label = static_cast<std::size_t>(std::max_element(counts.begin(), counts.end()) - counts.begin());
    r.modal_fraction = z.rows() ? static_cast<double>(counts[r.modal_label]) / static_cast<double>(z.rows()) : 0.0;
    const auto pi = stationary_vector(g);
    for (std::size_t j = 0; j < z.cols(); ++j) {
        double c = 0.0;
        for (std::size_t i = 0; i < z.rows(); ++i) c += z(i, j) * pi[i];
        for (std::size_t i = 0; i < z.rows(); ++i) r.pi_residual = std::max(r.pi_residual, std::abs(z(i, j) - c * pi[i]));
    }
    r.oversmoothed = r.modal_fraction >= kOversmoothedFraction;
    return r;
}

struct GammaSignEntry {
    std::size_t k = 0;
    double gamma = 0.0;
    double gradient = 0.0;
    /// ||H^(k) - pi beta^T||_max relative to ||H^(0)||_max.
    double residual = 0.0;
    bool dominated = false;
    bool agrees = false;
};

struct GradientSignReport {
    std::vector<GammaSignEntry> entries;
    std::size_t dominated_count() const {
        return static_cast<std::size_t>(std::count_if(entries.begin(), entries.end(), [](auto& e) { return e.dominated; }));
    }
    /// True when every dominated k has sign(dL/dgamma_k) == sign(gamma_k).
    bool all_agree() const {
        return std::all_of(entries.begin(), entries.end(), [](auto& e) { return !e.dominated || e.agrees; });
    }
};

/**
 * For every k whose H^(k) has collapsed onto pi beta^T (relative residual
 * below residual_tol), compares the sign of dL/dgamma_k with gamma_k. An
 * over-smoothed model is expected to shrink those weights.
 */
inline GradientSignReport gradient_sign_check(const GprModel& m, const SparseGraph& g, const DenseMatrix& x,
                                              const LabelVector& y, std::span<const std::size_t> train_mask,
                                              double residual_tol = 1e-6) {
    if (train_mask.empty()) throw PreconditionError("gradient_sign_check: empty training mask");
    std::vector<char> seen(y.num_classes, 0);
    for (auto i : train_mask) seen[y[i]] = 1;
    for (std::size_t c = 0; c < y.num_classes; ++c) {
        if (!seen[c]) {
            throw PreconditionError("gradient_sign_check: training mask has no node of class " + std::to_string(c));
        }
    }
    const auto cache = forward(m, g, x, false);
    if (!detect_oversmoothing(cache, g).oversmoothed) {
        throw PreconditionError("gradient_sign_check: model is not in an over-smoothed state");
    }
    const auto profile = stationary_profile(g, cache.hops[0], false);
    const DenseMatrix lim = profile.limit();
    const double scale_h0 = std::max(max_abs(cache.hops[0]), 1e-300);
    const auto lg = loss_and_backward(m, g, cache, y, train_mask, 0.0);

    GradientSignReport rep;
    for (std::size_t k = 0; k <= m.K(); ++k) {
        GammaSignEntry e;
        e.k = k;
        e.gamma = m.params.gamma[k];
        e.gradient = lg.grads.gamma[k];
        e.residual = max_abs_diff(cache.hops[k], lim) / scale_h0;
        e.dominated = e.residual < residual_tol && e.gamma != 0.0;
        e.agrees = (e.gradient > 0.0 && e.gamma > 0.0) || (e.gradient < 0.0 && e.gamma < 0.0);
        rep.entries.push_back(e);
    }
    return rep;
}

/**
 * softmax_eta(beta); with eta = +infinity returns the exact indicator of the
 * maxima, splitting mass evenly across ties.
 */
inline std::vector<double> sharpened_argmax(std::span<const double> beta, double eta) {
    if (beta.empty()) return {};
    const double mx = *std::max_element(beta.begin(), beta.end());
    std::vector<double> out(beta.size(), 0.0);
    if (std::isinf(eta) && eta > 0.0) {
        const auto p = static_cast<double>(std::count(beta.begin(), beta.end(), mx));
        for (std::size_t j = 0; j < beta.size(); ++j) out[j] = beta[j] == mx ? 1.0 / p : 0.0;
        return out;
    }
    if (!(eta > 0.0)) throw ConfigError("sharpened_argmax: eta must be positive");
    double total = 0.0;
    for (std::size_t j = 0; j < beta.size(); ++j) {
        out[j] = std::exp(eta * (beta[j] - mx));
        total += out[j];
    }
    for (double& v : out) v /= total;
    return out;
}

} // namespace gprlab
