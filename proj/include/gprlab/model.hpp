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

#include <cmath>
#include <charconv>
#include <cstdint>
#include <optional>
#include <sstream>
#include <span>
#include <string>
#include <vector>

#include "gprlab/dense_matrix.hpp"
#include "gprlab/error.hpp"
#include "gprlab/graph.hpp"
#include "gprlab/rng.hpp"
#include "gprlab/spmm.hpp"

namespace gprlab {

/// Initial GPR weight pattern.
struct GammaScheme {
    enum class Kind { ppr, delta, random, nppr };

    Kind kind = Kind::ppr;
    double alpha = 0.1;
    /// Delta position; std::nullopt means the last step K.
    std::optional<std::size_t> k_star;

    static GammaScheme ppr(double alpha) { return {Kind::ppr, alpha, {}}; }
    static GammaScheme delta(std::optional<std::size_t> k) { return {Kind::delta, 0.0, k}; }
    static GammaScheme random() { return {Kind::random, 0.0, {}}; }
    static GammaScheme nppr(double alpha) { return {Kind::nppr, alpha, {}}; }

    /// Parses "ppr:0.1", "delta:0", "delta:K", "random" or "nppr:0.9".
    static GammaScheme parse(const std::string& text) {
        const auto colon = text.find(':');
        const std::string head = text.substr(0, colon);
        const std::string arg = colon == std::string::npos ? "" : text.substr(colon + 1);
        const char* first = arg.data();
        const char* last = arg.data() + arg.size();
        double a = 0.0;
        std::size_t k = 0;
        if (head == "random" && colon == std::string::npos) return random();
        if ((head == "ppr" || head == "nppr") && !arg.empty()) {
            const auto [end, ec] = std::from_chars(first, last, a);
            if (ec == std::errc{} && end == last) return head == "ppr" ? ppr(a) : nppr(a);
        }
        if (head == "delta" && !arg.empty()) {
            if (arg == "K") return delta(std::nullopt);
            const auto [end, ec] = std::from_chars(first, last, k);
            if (ec == std::errc{} && end == last) return delta(k);
        }
        throw ConfigError("unrecognised gamma scheme '" + text +
                          "' (expected ppr:<a>, nppr:<a>, delta:<k|K> or random)");
    }

    std::string to_string() const {
        auto num = [](double v) {
            std::ostringstream ss;
            ss << v;
            return ss.str();
        };
        switch (kind) {
        case Kind::ppr: return "ppr:" + num(alpha);
        case Kind::nppr: return "nppr:" + num(alpha);
        case Kind::random: return "random";
        case Kind::delta: return "delta:" + (k_star ? std::to_string(*k_star) : std::string("K"));
        }
        return "?";
    }
};

/**
 * GPR weights for depth K.
 *   ppr:    alpha (1-alpha)^k for k < K, (1-alpha)^K at k = K (sums to 1)
 *   delta:  indicator at k*
 *   nppr:   (-alpha)^k divided by sum |.|
 *   random: uniform(-1/sqrt(K+1), 1/sqrt(K+1))
 */
inline std::vector<double> make_gamma(const GammaScheme& s, std::size_t K, Rng& rng) {
    std::vector<double> g(K + 1, 0.0);
    switch (s.kind) {
    case GammaScheme::Kind::ppr: {
        if (!(s.alpha > 0.0 && s.alpha <= 1.0)) throw ConfigError("ppr alpha must lie in (0, 1]");
        double decay = 1.0;
        for (std::size_t k = 0; k < K; ++k) {
            g[k] = s.alpha * decay;
            decay *= 1.0 - s.alpha;
        }
        g[K] = decay;
        break;
    }
    case GammaScheme::Kind::delta: {
        const std::size_t k = s.k_star.value_or(K);
        if (k > K) throw ConfigError("delta position " + std::to_string(k) + " exceeds K=" + std::to_string(K));
        g[k] = 1.0;
        break;
    }
    case GammaScheme::Kind::nppr: {
        if (!(s.alpha > 0.0 && s.alpha < 1.0)) throw ConfigError("nppr alpha must lie in (0, 1)");
        double total = 0.0;
        double term = 1.0;
        for (std::size_t k = 0; k <= K; ++k) {
            g[k] = term;
            total += std::abs(term);
            term *= -s.alpha;
        }
        for (double& v : g) v /= total;
        break;
    }
    case GammaScheme::Kind::random: {
        const double bound = 1.0 / std::sqrt(static_cast<double>(K + 1));
        for (double& v : g) v = (2.0 * uniform01(rng) - 1.0) * bound;
        break;
    }
    }
    return g;
}

/// Feature extractor producing H^(0).
enum class Extractor {
    /// Linear -> ReLU -> Linear with dropout before each linear map.
    mlp,
    /// One linear map; w2/b2 are empty.
    linear,
};

/// Trainable tensors. Gradients use the same shape.
struct GprParams {
    DenseMatrix w1;
    std::vector<double> b1;
    DenseMatrix w2;
    std::vector<double> b2;
    std::vector<double> gamma;

    GprParams zeros_like() const {
        GprParams z;
        z.w1 = DenseMatrix(w1.rows(), w1.cols());
        z.b1.assign(b1.size(), 0.0);
        z.w2 = DenseMatrix(w2.rows(), w2.cols());
        z.b2.assign(b2.size(), 0.0);
        z.gamma.assign(gamma.size(), 0.0);
        return z;
    }
};

/**
 * GPR-GNN: H^(0) = f_theta(X), H^(k) = A_sym H^(k-1), Z = sum_k gamma_k H^(k),
 * P = softmax_eta(Z).
 */
struct GprModel {
    Extractor extractor = Extractor::mlp;
    GprParams params;
    double dropout_nn = 0.5;
    double dropout_gpr = 0.0;
    double eta = 1.0;
    bool gamma_trainable = true;

    std::size_t K() const noexcept { return params.gamma.empty() ? 0 : params.gamma.size() - 1; }
    std::size_t num_features() const noexcept { return params.w1.rows(); }
    std::size_t num_classes() const noexcept {
        return extractor == Extractor::mlp ? params.w2.cols() : params.w1.cols();
    }
    std::size_t hidden() const noexcept { return extractor == Extractor::mlp ? params.w1.cols() : 0; }

    void validate() const {
        if (params.gamma.empty()) throw ConfigError("model: gamma must have K+1 >= 1 entries");
        if (params.b1.size() != params.w1.cols()) throw DimensionError("model: b1 length mismatch");
        if (extractor == Extractor::mlp) {
            if (params.w2.rows() != params.w1.cols()) throw DimensionError("model: w2 rows != hidden width");
            if (params.b2.size() != params.w2.cols()) throw DimensionError("model: b2 length mismatch");
        }
        if (!(dropout_nn >= 0.0 && dropout_nn < 1.0) || !(dropout_gpr >= 0.0 && dropout_gpr < 1.0)) {
            throw ConfigError("model: dropout rates must lie in [0, 1)");
        }
        if (!(eta > 0.0)) throw ConfigError("model: eta must be positive");
    }
};

namespace detail {

inline void glorot_uniform(DenseMatrix& w, Rng& rng) {
    const double bound = std::sqrt(6.0 / static_cast<double>(w.rows() + w.cols()));
    for (double& v : w.values()) v = (2.0 * uniform01(rng) - 1.0) * bound;
}

} // namespace detail

/**
 * Glorot-uniform weights, zero biases, gamma from the scheme. For the linear
 * extractor the hidden width is ignored and w1 is f x C.
 */
inline GprModel init_model(std::size_t f, std::size_t h, std::size_t C, std::size_t K,
                           const GammaScheme& scheme, std::uint64_t seed,
                           Extractor extractor = Extractor::mlp) {
    if (f == 0 || C == 0 || (extractor == Extractor::mlp && h == 0)) {
        throw ConfigError("init_model: f, h and C must be positive");
    }
    Rng rng(seed);
    GprModel m;
    m.extractor = extractor;
    if (extractor == Extractor::mlp) {
        m.params.w1 = DenseMatrix(f, h);
        m.params.b1.assign(h, 0.0);
        m.params.w2 = DenseMatrix(h, C);
        m.params.b2.assign(C, 0.0);
        detail::glorot_uniform(m.params.w1, rng);
        detail::glorot_uniform(m.params.w2, rng);
    } else {
        m.params.w1 = DenseMatrix(f, C);
        m.params.b1.assign(C, 0.0);
        detail::glorot_uniform(m.params.w1, rng);
    }
    m.params.gamma = make_gamma(scheme, K, rng);
    return m;
}

/// Everything the backward pass needs from one forward evaluation.
struct ForwardCache {
    bool training = false;
    double eta = 1.0;
    /// Input after dropout; empty when no input dropout was applied.
    DenseMatrix dropped_input;
    /// The caller's feature matrix. The cache must not outlive it.
    const DenseMatrix* source = nullptr;
    /// Layer-1 pre-activation, and its ReLU output after dropout (mlp only).
    DenseMatrix pre1;
    DenseMatrix act1;
    /// Scaled inverted-dropout mask on the hidden layer; empty when unused.
    DenseMatrix mask_hidden;
    /// H^(0) ... H^(K), undropped.
    std::vector<DenseMatrix> hops;
    /// Scaled dropout masks applied to each H^(k) before weighting; empty when unused.
    std::vector<DenseMatrix> gpr_masks;
    DenseMatrix z;
    DenseMatrix probs;

    /// Input of the first linear layer.
    const DenseMatrix& input() const { return dropped_input.empty() ? *source : dropped_input; }
};

namespace detail {

/**
 * Multiplies every entry by an independent inverted-dropout factor, 0 or
 * 1/(1-p). Each 64-bit draw supplies two keep decisions at 32-bit resolution.
 */
inline void apply_dropout(std::span<double> values, double p, Rng& rng) {
    const double keep = 1.0 - p;
    const double scale = 1.0 / keep;
    const auto threshold = static_cast<std::uint64_t>(std::ldexp(keep, 32));
    std::size_t i = 0;
    for (; i + 1 < values.size(); i += 2) {
        const std::uint64_t r = rng();
        values[i] *= static_cast<double>((r & 0xffffffffULL) < threshold) * scale;
        values[i + 1] *= static_cast<double>((r >> 32) < threshold) * scale;
    }
    if (i < values.size()) values[i] *= static_cast<double>((rng() & 0xffffffffULL) < threshold) * scale;
}

/// Inverted-dropout mask with entries 0 or 1/(1-p).
inline DenseMatrix dropout_mask(std::size_t rows, std::size_t cols, double p, Rng& rng) {
    DenseMatrix m(rows, cols, 1.0);
    apply_dropout(m.values(), p, rng);
    return m;
}

inline void add_bias(DenseMatrix& m, std::span<const double> b) {
    for (std::size_t i = 0; i < m.rows(); ++i) {
        auto r = m.row(i);
        for (std::size_t j = 0; j < r.size(); ++j) r[j] += b[j];
    }
}

} // namespace detail

/**
 * Forward pass. In training mode dropout is applied to the input of each
 * linear layer at rate dropout_nn and to every H^(k) term at rate
 * dropout_gpr; masks come from a generator seeded with seed. Eval mode is
 * deterministic and ignores seed. The returned cache refers to x.
 */
inline ForwardCache forward(const GprModel& m, const SparseGraph& g, const DenseMatrix& x,
                            bool training, std::uint64_t seed = 0) {
    m.validate();
    if (x.cols() != m.num_features()) detail::fail_dims("forward(x, w1)", x.rows(), x.cols(),
                                                        m.params.w1.rows(), m.params.w1.cols());
    if (x.rows() != g.num_nodes()) detail::fail_dims("forward(graph, x)", g.num_nodes(), g.num_nodes(),
                                                     x.rows(), x.cols());
    Rng rng(seed);
    ForwardCache c;
    c.training = training;
    c.eta = m.eta;

    const bool drop_nn = training && m.dropout_nn > 0.0;
    c.source = &x;
    if (drop_nn) {
        c.dropped_input = x;
        detail::apply_dropout(c.dropped_input.values(), m.dropout_nn, rng);
    }
    const DenseMatrix& input = c.input();

    DenseMatrix h0;
    if (m.extractor == Extractor::mlp) {
        c.pre1 = matmul(input, m.params.w1);
        detail::add_bias(c.pre1, m.params.b1);
        c.act1 = c.pre1;
        for (double& v : c.act1.values()) v = v > 0.0 ? v : 0.0;
        if (drop_nn) {
            c.mask_hidden = detail::dropout_mask(c.act1.rows(), c.act1.cols(), m.dropout_nn, rng);
            c.act1 = hadamard(c.act1, c.mask_hidden);
        }
        h0 = matmul(c.act1, m.params.w2);
        detail::add_bias(h0, m.params.b2);
    } else {
        h0 = matmul(input, m.params.w1);
        detail::add_bias(h0, m.params.b1);
    }

    const std::size_t K = m.K();
    c.hops.reserve(K + 1);
    c.hops.push_back(std::move(h0));
    for (std::size_t k = 1; k <= K; ++k) c.hops.push_back(spmm(g, c.hops.back()));

    const bool drop_gpr = training && m.dropout_gpr > 0.0;
    c.z = DenseMatrix(x.rows(), m.num_classes());
    for (std::size_t k = 0; k <= K; ++k) {
        const double gk = m.params.gamma[k];
        if (drop_gpr) {
            c.gpr_masks.push_back(detail::dropout_mask(x.rows(), m.num_classes(), m.dropout_gpr, rng));
            axpy(gk, hadamard(c.hops[k], c.gpr_masks.back()), c.z);
        } else {
            axpy(gk, c.hops[k], c.z);
        }
    }
    c.probs = row_softmax(c.z, m.eta);
    return c;
}

ForwardCache forward(const GprModel&, const SparseGraph&, DenseMatrix&&, bool, std::uint64_t = 0) = delete;

/// Mean cross entropy -log P[i, y_i] over the given nodes, from logits (log-sum-exp form).
inline double mean_cross_entropy(const DenseMatrix& z, double eta, const LabelVector& y,
                                 std::span<const std::size_t> nodes) {
    if (nodes.empty()) throw ConfigError("mean_cross_entropy: empty node set");
    double total = 0.0;
    for (std::size_t i : nodes) {
        auto r = z.row(i);
        double mx = r[0];
        for (double v : r) mx = std::max(mx, v);
        double s = 0.0;
        for (double v : r) s += std::exp(eta * (v - mx));
        total += std::log(s) - eta * (r[y[i]] - mx);
    }
    return total / static_cast<double>(nodes.size());
}

struct LossAndGrads {
    double loss = 0.0;
    GprParams grads;
};

/**
 * Mean cross entropy over train_mask plus (weight_decay/2)(||W1||^2 + ||W2||^2),
 * with exact gradients for every parameter. Biases and gamma are not decayed.
 *
 * With dZ = (eta/|T|)(P - Y) on training rows, the gamma gradient is
 * dL/dgamma_k = sum_i <dZ_i, H^(k)_i>; the propagation is back-substituted in
 * Horner order G_k = A_sym G_{k+1} + gamma_k dZ (A_sym is symmetric).
 */
inline LossAndGrads loss_and_backward(const GprModel& m, const SparseGraph& g, const ForwardCache& c,
                                      const LabelVector& y, std::span<const std::size_t> train_mask,
                                      double weight_decay = 0.0) {
    if (train_mask.empty()) throw ConfigError("loss_and_backward: empty training mask");
    if (y.size() != c.z.rows()) throw DimensionError("loss_and_backward: label count does not match nodes");
    const std::size_t n = c.z.rows();
    const std::size_t C = c.z.cols();
    const std::size_t K = m.K();
    const double inv_t = 1.0 / static_cast<double>(train_mask.size());

    LossAndGrads out;
    out.grads = m.params.zeros_like();
    out.loss = mean_cross_entropy(c.z, c.eta, y, train_mask);

    DenseMatrix dz(n, C);
    for (std::size_t i : train_mask) {
        auto p = c.probs.row(i);
        auto d = dz.row(i);
        for (std::size_t j = 0; j < C; ++j) d[j] = c.eta * inv_t * p[j];
        d[y[i]] -= c.eta * inv_t;
    }

    // dZ/dgamma_k is the (masked) hop; only training rows of dZ are nonzero.
    for (std::size_t k = 0; k <= K; ++k) {
        double s = 0.0;
        for (std::size_t i : train_mask) {
            auto h = c.hops[k].row(i);
            auto d = dz.row(i);
            if (c.gpr_masks.empty()) {
                for (std::size_t j = 0; j < C; ++j) s += d[j] * h[j];
            } else {
                auto mk = c.gpr_masks[k].row(i);
                for (std::size_t j = 0; j < C; ++j) s += d[j] * h[j] * mk[j];
            }
        }
        out.grads.gamma[k] = s;
    }

    auto direct = [&](std::size_t k) {
        DenseMatrix t = scale(dz, m.params.gamma[k]);
        return c.gpr_masks.empty() ? t : hadamard(t, c.gpr_masks[k]);
    };
    DenseMatrix dh = direct(K);
    for (std::size_t k = K; k-- > 0;) {
        dh = spmm(g, dh);
        axpy(1.0, direct(k), dh);
    }

    auto& gr = out.grads;
    if (m.extractor == Extractor::mlp) {
        gr.w2 = matmul_tn(c.act1, dh);
        gr.b2 = column_sums(dh);
        DenseMatrix da = matmul_nt(dh, m.params.w2);
        if (!c.mask_hidden.empty()) da = hadamard(da, c.mask_hidden);
        for (std::size_t i = 0; i < da.size(); ++i) {
            if (!(c.pre1.values()[i] > 0.0)) da.values()[i] = 0.0;
        }
        gr.w1 = matmul_tn(c.input(), da);
        gr.b1 = column_sums(da);
    } else {
        gr.w1 = matmul_tn(c.input(), dh);
        gr.b1 = column_sums(dh);
    }

    if (weight_decay != 0.0) {
        double sq = 0.0;
        for (double v : m.params.w1.values()) sq += v * v;
        for (double v : m.params.w2.values()) sq += v * v;
        out.loss += 0.5 * weight_decay * sq;
        axpy(weight_decay, m.params.w1, gr.w1);
        if (!m.params.w2.empty()) axpy(weight_decay, m.params.w2, gr.w2);
    }
    return out;
}

} // namespace gprlab
