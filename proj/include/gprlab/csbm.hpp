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
#include <cstdint>
#include <numbers>
#include <string>
#include <vector>

#include "gprlab/dense_matrix.hpp"
#include "gprlab/error.hpp"
#include "gprlab/graph.hpp"
#include "gprlab/rng.hpp"

namespace gprlab {

/**
 * Contextual stochastic block model parameters.
 *
 * Two equal communities with labels v in {-1,+1}. Edges are independent
 * Bernoulli with probability (d + lambda sqrt(d))/n inside a community and
 * (d - lambda sqrt(d))/n across. Node features are
 * b_i = sqrt(mu/n) v_i u + Z_i/sqrt(f) with u ~ N(0, I/f), Z_i ~ N(0, I).
 */
struct CsbmSpec {
    std::size_t n = 1000;
    std::size_t f = 400;
    double d = 10.0;
    double lambda = 0.0;
    double mu = 0.0;
    std::uint64_t seed = 0;

    double p_intra() const { return (d + lambda * std::sqrt(d)) / static_cast<double>(n); }
    double p_inter() const { return (d - lambda * std::sqrt(d)) / static_cast<double>(n); }

    void validate() const {
        if (n < 2 || n % 2 != 0) throw ConfigError("csbm: n must be even and >= 2, got " + std::to_string(n));
        if (f == 0) throw ConfigError("csbm: f must be positive");
        if (!(d > 0.0)) throw ConfigError("csbm: d must be positive");
        if (!(mu >= 0.0)) throw ConfigError("csbm: mu must be non-negative");
        const double spread = std::abs(lambda) * std::sqrt(d);
        constexpr double slack = 1e-12;
        if (d - spread < -slack) {
            throw ConfigError("csbm: d - |lambda| sqrt(d) < 0, edge probability would be negative");
        }
        if (d + spread > static_cast<double>(n) + slack) {
            throw ConfigError("csbm: d + |lambda| sqrt(d) > n, edge probability would exceed 1");
        }
    }
};

/// Position on the arc lambda^2 + mu^2/xi = 1 + epsilon.
struct PhiSpec {
    double phi = 0.0;
    double xi = 2.5;
    double epsilon = 3.25;
};

struct LambdaMu {
    double lambda = 0.0;
    double mu = 0.0;
};

/**
 * lambda = sqrt(1+eps) sin(phi pi/2), mu = sqrt(xi (1+eps)) cos(phi pi/2).
 * At |phi| = 1 mu is exactly zero.
 */
inline LambdaMu phi_to_lambda_mu(const PhiSpec& p) {
    if (!(std::abs(p.phi) <= 1.0)) throw ConfigError("phi must lie in [-1, 1], got " + std::to_string(p.phi));
    if (!(p.epsilon > 0.0)) throw ConfigError("epsilon must be positive");
    if (!(p.xi > 0.0)) throw ConfigError("xi must be positive");
    const double r = std::sqrt(1.0 + p.epsilon);
    if (std::abs(p.phi) == 1.0) return {std::copysign(r, p.phi), 0.0};
    const double angle = p.phi * std::numbers::pi / 2.0;
    return {r * std::sin(angle), std::sqrt(p.xi) * r * std::cos(angle)};
}

/// Inverse map, (2/pi) atan(lambda sqrt(xi) / mu).
inline double lambda_mu_to_phi(double lambda, double mu, double xi) {
    return std::atan2(lambda * std::sqrt(xi), mu) * 2.0 / std::numbers::pi;
}

struct CsbmSample {
    SparseGraph graph;
    DenseMatrix features;
    LabelVector labels;
    CsbmSpec spec;
};

/**
 * Draws one sample. Community v=-1 is class 0, v=+1 is class 1; the first
 * n/2 nodes start in class 0 and the assignment is then shuffled. Every
 * unordered pair i<j is visited once, so generation is O(n^2). Self-edges
 * are never sampled.
 */
inline CsbmSample generate(const CsbmSpec& spec) {
    spec.validate();
    const std::size_t n = spec.n;
    const std::size_t f = spec.f;
    Rng rng(spec.seed);

    std::vector<std::size_t> labels(n, 0);
    std::fill(labels.begin() + static_cast<std::ptrdiff_t>(n / 2), labels.end(), 1);
    std::shuffle(labels.begin(), labels.end(), rng);

    std::normal_distribution<double> normal(0.0, 1.0);
    const double inv_sqrt_f = 1.0 / std::sqrt(static_cast<double>(f));
    std::vector<double> u(f);
    for (double& uk : u) uk = normal(rng) * inv_sqrt_f;

    const double signal = std::sqrt(spec.mu / static_cast<double>(n));
    DenseMatrix x(n, f);
    for (std::size_t i = 0; i < n; ++i) {
        const double v = labels[i] == 1 ? 1.0 : -1.0;
        auto row = x.row(i);
        for (std::size_t k = 0; k < f; ++k) row[k] = signal * v * u[k] + normal(rng) * inv_sqrt_f;
    }

    const double p_in = std::clamp(spec.p_intra(), 0.0, 1.0);
    const double p_out = std::clamp(spec.p_inter(), 0.0, 1.0);
    std::vector<Edge> edges;
    edges.reserve(static_cast<std::size_t>(spec.d * static_cast<double>(n) / 2.0 * 1.2) + 16);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            const double p = labels[i] == labels[j] ? p_in : p_out;
            if (uniform01(rng) < p) edges.emplace_back(i, j);
        }
    }

    CsbmSample s;
    s.graph = build_graph(n, edges);
    s.features = std::move(x);
    s.labels = LabelVector{std::move(labels), 2};
    s.spec = spec;
    return s;
}

/// generate() at the arc point phi with xi = n/f.
inline CsbmSample generate_phi(std::size_t n, std::size_t f, double d, double phi, double epsilon,
                               std::uint64_t seed) {
    if (f == 0) throw ConfigError("csbm: f must be positive");
    const auto lm = phi_to_lambda_mu({phi, static_cast<double>(n) / static_cast<double>(f), epsilon});
    return generate(CsbmSpec{n, f, d, lm.lambda, lm.mu, seed});
}

} // namespace gprlab
