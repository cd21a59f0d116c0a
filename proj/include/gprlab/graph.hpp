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
#include <cstdint>
#include <queue>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "gprlab/dense_matrix.hpp"
#include "gprlab/error.hpp"

namespace gprlab {

using Edge = std::pair<std::size_t, std::size_t>;

/**
 * Undirected graph in compressed sparse row form.
 *
 * Built unnormalized with unit weights. add_self_loops_and_normalize() turns
 * it into the self-loop augmented symmetric normalization
 * D^{-1/2} (A + I) D^{-1/2} and caches the augmented degrees D.
 * Immutable once constructed.
 */
class SparseGraph {
public:
    SparseGraph() = default;

    std::size_t num_nodes() const noexcept { return n_; }
    std::size_t nnz() const noexcept { return col_idx_.size(); }
    std::span<const std::size_t> row_ptr() const noexcept { return row_ptr_; }
    std::span<const std::size_t> col_idx() const noexcept { return col_idx_; }
    std::span<const double> values() const noexcept { return values_; }
    bool has_self_loops() const noexcept { return has_self_loops_; }
    bool is_normalized() const noexcept { return normalized_; }

    /// Self-loop augmented degrees. Empty until the graph is normalized.
    std::span<const double> degrees() const noexcept { return degrees_; }

    std::span<const std::size_t> neighbors(std::size_t i) const noexcept {
        return {col_idx_.data() + row_ptr_[i], row_ptr_[i + 1] - row_ptr_[i]};
    }
    std::span<const double> row_values(std::size_t i) const noexcept {
        return {values_.data() + row_ptr_[i], row_ptr_[i + 1] - row_ptr_[i]};
    }

    /// Stored value at (i, j), or 0 when absent.
    double value(std::size_t i, std::size_t j) const {
        auto nb = neighbors(i);
        auto it = std::lower_bound(nb.begin(), nb.end(), j);
        if (it == nb.end() || *it != j) return 0.0;
        return values_[row_ptr_[i] + static_cast<std::size_t>(it - nb.begin())];
    }

    DenseMatrix to_dense() const {
        DenseMatrix d(n_, n_);
        for (std::size_t i = 0; i < n_; ++i) {
            for (std::size_t p = row_ptr_[i]; p < row_ptr_[i + 1]; ++p) d(i, col_idx_[p]) = values_[p];
        }
        return d;
    }

    /// Unordered edge list (i <= j) of the stored pattern, diagonal included.
    std::vector<Edge> edges() const {
        std::vector<Edge> out;
        for (std::size_t i = 0; i < n_; ++i) {
            for (std::size_t j : neighbors(i)) {
                if (i <= j) out.emplace_back(i, j);
            }
        }
        return out;
    }

private:
    friend SparseGraph build_graph(std::size_t n, std::span<const Edge> edges);
    friend SparseGraph add_self_loops_and_normalize(const SparseGraph& g);

    std::size_t n_ = 0;
    std::vector<std::size_t> row_ptr_{0};
    std::vector<std::size_t> col_idx_;
    std::vector<double> values_;
    std::vector<double> degrees_;
    bool has_self_loops_ = false;
    bool normalized_ = false;
};

/// Symmetric, sorted, deduplicated CSR with unit weights. Self pairs are kept.
inline SparseGraph build_graph(std::size_t n, std::span<const Edge> edges) {
    if (n == 0) throw GraphError("build_graph: node count must be positive");
    std::vector<std::vector<std::size_t>> adj(n);
    bool self = false;
    for (auto [i, j] : edges) {
        if (i >= n || j >= n) {
            throw GraphError("build_graph: edge (" + std::to_string(i) + ", " + std::to_string(j) +
                             ") out of range for n=" + std::to_string(n));
        }
        adj[i].push_back(j);
        if (i != j) adj[j].push_back(i);
        self = self || i == j;
    }
    SparseGraph g;
    g.n_ = n;
    g.row_ptr_.assign(n + 1, 0);
    for (std::size_t i = 0; i < n; ++i) {
        auto& row = adj[i];
        std::sort(row.begin(), row.end());
        row.erase(std::unique(row.begin(), row.end()), row.end());
        g.row_ptr_[i + 1] = g.row_ptr_[i] + row.size();
    }
    g.col_idx_.reserve(g.row_ptr_[n]);
    for (auto& row : adj) g.col_idx_.insert(g.col_idx_.end(), row.begin(), row.end());
    g.values_.assign(g.col_idx_.size(), 1.0);
    g.has_self_loops_ = self;
    return g;
}

inline SparseGraph build_graph(std::size_t n, std::initializer_list<Edge> edges) {
    return build_graph(n, std::span<const Edge>(edges.begin(), edges.size()));
}

/**
 * Adds a unit self-loop to every node (an existing self pair counts as the
 * loop) and rescales entries to 1/sqrt(D_ii D_jj). Normalizing an already
 * normalized graph is rejected.
 */
inline SparseGraph add_self_loops_and_normalize(const SparseGraph& g) {
    if (g.normalized_) throw GraphError("add_self_loops_and_normalize: graph is already normalized");
    const std::size_t n = g.n_;
    SparseGraph out;
    out.n_ = n;
    out.row_ptr_.assign(n + 1, 0);
    out.col_idx_.reserve(g.nnz() + n);
    for (std::size_t i = 0; i < n; ++i) {
        auto nb = g.neighbors(i);
        bool inserted = false;
        for (std::size_t j : nb) {
            if (!inserted && j >= i) {
                out.col_idx_.push_back(i);
                inserted = true;
                if (j == i) continue;
            }
            out.col_idx_.push_back(j);
        }
        if (!inserted) out.col_idx_.push_back(i);
        out.row_ptr_[i + 1] = out.col_idx_.size();
    }
    out.degrees_.assign(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        out.degrees_[i] = static_cast<double>(out.row_ptr_[i + 1] - out.row_ptr_[i]);
    }
    out.values_.resize(out.col_idx_.size());
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t p = out.row_ptr_[i]; p < out.row_ptr_[i + 1]; ++p) {
            out.values_[p] = 1.0 / std::sqrt(out.degrees_[i] * out.degrees_[out.col_idx_[p]]);
        }
    }
    out.has_self_loops_ = true;
    out.normalized_ = true;
    return out;
}

/// Class indices in [0, num_classes).
struct LabelVector {
    std::vector<std::size_t> labels;
    std::size_t num_classes = 2;

    std::size_t size() const noexcept { return labels.size(); }
    std::size_t operator[](std::size_t i) const noexcept { return labels[i]; }

    void validate() const {
        if (num_classes < 2) throw ConfigError("LabelVector: need at least 2 classes");
        for (std::size_t i = 0; i < labels.size(); ++i) {
            if (labels[i] >= num_classes) {
                throw ConfigError("LabelVector: label " + std::to_string(labels[i]) + " at node " +
                                  std::to_string(i) + " is not below class count " +
                                  std::to_string(num_classes));
            }
        }
    }

    std::vector<std::size_t> class_counts() const {
        std::vector<std::size_t> c(num_classes, 0);
        for (auto l : labels) ++c[l];
        return c;
    }

    DenseMatrix one_hot() const {
        DenseMatrix y(labels.size(), num_classes);
        for (std::size_t i = 0; i < labels.size(); ++i) y(i, labels[i]) = 1.0;
        return y;
    }
};

struct HomophilyResult {
    double value = 0.0;
    /// Nodes without any non-self neighbour; excluded from the average.
    std::size_t skipped_nodes = 0;
};

/**
 * Node-averaged fraction of neighbours sharing the node's label.
 * Self-loops are never counted as neighbours.
 */
inline HomophilyResult homophily_index(const SparseGraph& g, const LabelVector& y) {
    if (y.size() != g.num_nodes()) {
        throw DimensionError("homophily_index: label count " + std::to_string(y.size()) +
                             " != node count " + std::to_string(g.num_nodes()));
    }
    HomophilyResult r;
    double total = 0.0;
    std::size_t counted = 0;
    for (std::size_t v = 0; v < g.num_nodes(); ++v) {
        std::size_t same = 0;
        std::size_t deg = 0;
        for (std::size_t u : g.neighbors(v)) {
            if (u == v) continue;
            ++deg;
            if (y[u] == y[v]) ++same;
        }
        if (deg == 0) {
            ++r.skipped_nodes;
            continue;
        }
        total += static_cast<double>(same) / static_cast<double>(deg);
        ++counted;
    }
    if (counted == 0) throw GraphError("homophily_index: no node has a neighbour");
    r.value = total / static_cast<double>(counted);
    return r;
}

/// BFS reachability from node 0.
inline bool is_connected(const SparseGraph& g) {
    const std::size_t n = g.num_nodes();
    if (n == 0) return true;
    std::vector<char> seen(n, 0);
    std::queue<std::size_t> q;
    q.push(0);
    seen[0] = 1;
    std::size_t reached = 1;
    while (!q.empty()) {
        const auto v = q.front();
        q.pop();
        for (std::size_t u : g.neighbors(v)) {
            if (!seen[u]) {
                seen[u] = 1;
                ++reached;
                q.push(u);
            }
        }
    }
    return reached == n;
}

/// Mean number of non-self neighbours.
inline double mean_degree(const SparseGraph& g) {
    std::size_t total = 0;
    for (std::size_t v = 0; v < g.num_nodes(); ++v) {
        for (std::size_t u : g.neighbors(v)) total += (u != v);
    }
    return static_cast<double>(total) / static_cast<double>(g.num_nodes());
}

} // namespace gprlab
