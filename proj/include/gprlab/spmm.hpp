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

#include <string>

#include "gprlab/dense_matrix.hpp"
#include "gprlab/graph.hpp"

namespace gprlab {

/// Sparse-dense product g * h; one output row per graph row.
inline DenseMatrix spmm(const SparseGraph& g, const DenseMatrix& h) {
    if (g.num_nodes() != h.rows()) {
        detail::fail_dims("spmm", g.num_nodes(), g.num_nodes(), h.rows(), h.cols());
    }
    DenseMatrix out(h.rows(), h.cols());
    const std::size_t m = h.cols();
    auto rp = g.row_ptr();
    auto ci = g.col_idx();
    auto vals = g.values();
    for (std::size_t i = 0; i < g.num_nodes(); ++i) {
        double* orow = out.row(i).data();
        for (std::size_t p = rp[i]; p < rp[i + 1]; ++p) {
            const double w = vals[p];
            const double* hrow = h.row(ci[p]).data();
            for (std::size_t j = 0; j < m; ++j) orow[j] += w * hrow[j];
        }
    }
    detail::debug_check_finite(out);
    return out;
}

} // namespace gprlab
