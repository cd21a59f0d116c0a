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

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <complex>
#include <numeric>
#include <vector>

#include "gprlab/dense_matrix.hpp"
#include "gprlab/graph.hpp"
#include "gprlab/spectral.hpp"
#include "gprlab/symmetric_eigen.hpp"
#include "test_support.hpp"

namespace gprlab {
namespace {

DenseMatrix random_symmetric(std::size_t n, Rng& rng) {
    auto a = testing::random_matrix(n, n, rng);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < i; ++j) a(i, j) = a(j, i);
    return a;
}

/// Characteristic polynomial coefficients (monic, highest first) via Faddeev-LeVerrier.
std::vector<double> char_poly(const DenseMatrix& a) {
    const std::size_t n = a.rows();
    std::vector<double> c(n + 1, 0.0);
    c[0] = 1.0;
    DenseMatrix m(n, n);
    for (std::size_t k = 1; k <= n; ++k) {
        DenseMatrix next = testing::naive_matmul(a, m);
        for (std::size_t i = 0; i < n; ++i) next(i, i) += c[k - 1];
        m = next;
        const auto am = testing::naive_matmul(a, m);
        double tr = 0.0;
        for (std::size_t i = 0; i < n; ++i) tr += am(i, i);
        c[k] = -tr / static_cast<double>(k);
    }
    return c;
}

/// Durand-Kerner simultaneous root iteration.
std::vector<double> poly_real_roots(const std::vector<double>& c) {
    using cd = std::complex<double>;
    const std::size_t n = c.size() - 1;
    std::vector<cd> z(n);
    for (std::size_t i = 0; i < n; ++i) z[i] = std::pow(cd(0.4, 0.9), static_cast<double>(i));
    auto p = [&](cd x) {
        cd acc = 0.0;
        for (double ci : c) acc = acc * x + ci;
        return acc;
    };
    for (int it = 0; it < 2000; ++it) {
        for (std::size_t i = 0; i < n; ++i) {
            cd den = 1.0;
            for (std::size_t j = 0; j < n; ++j)
                if (j != i) den *= z[i] - z[j];
            z[i] -= p(z[i]) / den;
        }
    }
    std::vector<double> r;
    for (auto v : z) r.push_back(v.real());
    std::sort(r.begin(), r.end(), std::greater<>());
    return r;
}

TEST(DenseMatrix, ConstructionAndAccess) {
    DenseMatrix m{{1, 2, 3}, {4, 5, 6}};
    EXPECT_EQ(m.rows(), 2u);
    EXPECT_EQ(m.cols(), 3u);
    EXPECT_EQ(m(1, 2), 6.0);
    EXPECT_EQ(m.row(1)[0], 4.0);
    EXPECT_THROW((DenseMatrix{{1, 2}, {3}}), DimensionError);
    EXPECT_THROW(DenseMatrix::from_buffer(2, 2, {1.0}), DimensionError);
}

TEST(DenseMatrix, ProductsMatchNaive) {
    Rng rng(4);
    for (int t = 0; t < 30; ++t) {
        const auto a = testing::random_matrix(1 + rng() % 9, 1 + rng() % 9, rng);
        const auto b = testing::random_matrix(a.cols(), 1 + rng() % 9, rng);
        EXPECT_LT(max_abs_diff(matmul(a, b), testing::naive_matmul(a, b)), 1e-13);
        const auto c = testing::random_matrix(a.rows(), 1 + rng() % 5, rng);
        EXPECT_LT(max_abs_diff(matmul_tn(a, c), testing::naive_matmul(transpose(a), c)), 1e-13);
        const auto d = testing::random_matrix(1 + rng() % 5, b.cols(), rng);
        EXPECT_LT(max_abs_diff(matmul_nt(b, d), testing::naive_matmul(b, transpose(d))), 1e-13);
    }
    EXPECT_THROW(matmul(DenseMatrix(2, 3), DenseMatrix(2, 3)), DimensionError);
}

TEST(DenseMatrix, Elementwise) {
    const DenseMatrix a{{1, 2}, {3, 4}}, b{{0.5, -1}, {2, 0}};
    EXPECT_EQ(add(a, b), (DenseMatrix{{1.5, 1}, {5, 4}}));
    EXPECT_EQ(subtract(a, b), (DenseMatrix{{0.5, 3}, {1, 4}}));
    EXPECT_EQ(scale(a, 2.0), (DenseMatrix{{2, 4}, {6, 8}}));
    EXPECT_EQ(hadamard(a, b), (DenseMatrix{{0.5, -2}, {6, 0}}));
    EXPECT_EQ(transpose(a), (DenseMatrix{{1, 3}, {2, 4}}));
    EXPECT_EQ(column_sums(a), (std::vector<double>{4, 6}));
    DenseMatrix acc = a;
    axpy(-1.0, a, acc);
    EXPECT_EQ(max_abs(acc), 0.0);
    EXPECT_THROW(add(a, DenseMatrix(1, 2)), DimensionError);
}

TEST(Softmax, Uniform) {
    const auto p = row_softmax(DenseMatrix{{0.0, 0.0}});
    EXPECT_DOUBLE_EQ(p(0, 0), 0.5);
    EXPECT_DOUBLE_EQ(p(0, 1), 0.5);
}

TEST(Softmax, SharpensWithEta) {
    const auto p = row_softmax(DenseMatrix{{1.0, 0.0}}, 1e3);
    EXPECT_NEAR(p(0, 0), 1.0, 1e-6);
    EXPECT_NEAR(p(0, 1), 0.0, 1e-6);
}

TEST(Softmax, MatchesNaiveFormula) {
    const auto p = row_softmax(DenseMatrix{{1.0, 2.0, 3.0}});
    const double s = std::exp(1.0) + std::exp(2.0) + std::exp(3.0);
    for (int j = 0; j < 3; ++j) EXPECT_NEAR(p(0, j), std::exp(j + 1.0) / s, 1e-15);
}

TEST(Softmax, RowsSumToOneAndShiftInvariant) {
    Rng rng(8);
    for (int t = 0; t < 50; ++t) {
        auto z = testing::random_matrix(5, 4, rng, -30, 30);
        const double eta = 0.1 + 3.0 * uniform01(rng);
        const auto p = row_softmax(z, eta);
        for (std::size_t i = 0; i < 5; ++i) {
            double s = 0.0;
            for (double v : p.row(i)) s += v;
            EXPECT_NEAR(s, 1.0, 1e-12);
        }
        const double shift = 100.0 * (uniform01(rng) - 0.5);
        for (std::size_t j = 0; j < 4; ++j) z(2, j) += shift;
        EXPECT_LT(max_abs_diff(row_softmax(z, eta), p), 1e-12);
    }
    EXPECT_THROW(row_softmax(DenseMatrix{{1.0}}, 0.0), ConfigError);
}

TEST(Argmax, TiesGoToLowestIndex) {
    EXPECT_EQ(row_argmax(DenseMatrix{{1, 3, 3}, {2, 2, 2}, {0, -1, 5}}), (std::vector<std::size_t>{1, 0, 2}));
}

TEST(Eigen, Identity) {
    const auto e = symmetric_eigen(DenseMatrix::identity(3));
    EXPECT_EQ(e.eigenvalues, (std::vector<double>{1, 1, 1}));
}

TEST(Eigen, TwoByTwoSwap) {
    const auto e = symmetric_eigen(DenseMatrix{{0, 1}, {1, 0}});
    EXPECT_NEAR(e.eigenvalues[0], 1.0, 1e-15);
    EXPECT_NEAR(e.eigenvalues[1], -1.0, 1e-15);
    const double r = 1.0 / std::sqrt(2.0);
    EXPECT_NEAR(e.eigenvectors(0, 0), r, 1e-15);
    EXPECT_NEAR(e.eigenvectors(1, 0), r, 1e-15);
    EXPECT_NEAR(e.eigenvectors(0, 1), r, 1e-15);
    EXPECT_NEAR(e.eigenvectors(1, 1), -r, 1e-15);
}

TEST(Eigen, NormalizedFourCycleMatchesCharacteristicRoots) {
    const auto g = add_self_loops_and_normalize(build_graph(4, {{0, 1}, {1, 2}, {2, 3}, {3, 0}}));
    const auto a = g.to_dense();
    const auto roots = poly_real_roots(char_poly(a));
    const auto ev = symmetric_eigen(a).eigenvalues;
    ASSERT_EQ(ev.size(), 4u);
    for (std::size_t i = 0; i < 4; ++i) EXPECT_NEAR(ev[i], roots[i], 1e-7);
    EXPECT_NEAR(ev[0], 1.0, 1e-12);
    EXPECT_NEAR(ev[1], 1.0 / 3.0, 1e-12);
    EXPECT_NEAR(ev[2], 1.0 / 3.0, 1e-12);
    EXPECT_NEAR(ev[3], -1.0 / 3.0, 1e-12);
}

TEST(Eigen, RandomSymmetricInvariants) {
    Rng rng(17);
    for (std::size_t n : {1u, 2u, 5u, 16u, 33u, 64u}) {
        const auto a = random_symmetric(n, rng);
        const auto e = symmetric_eigen(a);
        EXPECT_TRUE(std::is_sorted(e.eigenvalues.begin(), e.eigenvalues.end(), std::greater<>()));
        EXPECT_LT(max_abs_diff(reconstruct(e), a), 1e-8);
        EXPECT_LT(max_abs_diff(matmul_tn(e.eigenvectors, e.eigenvectors), DenseMatrix::identity(n)), 1e-9);
        const auto au = matmul(a, e.eigenvectors);
        for (std::size_t j = 0; j < n; ++j)
            for (std::size_t i = 0; i < n; ++i)
                EXPECT_NEAR(au(i, j), e.eigenvalues[j] * e.eigenvectors(i, j), 1e-8);
    }
}

TEST(Eigen, Errors) {
    EXPECT_THROW(symmetric_eigen(DenseMatrix(2, 3)), DimensionError);
    EXPECT_THROW(symmetric_eigen(DenseMatrix{{0, 1}, {0.5, 0}}), PreconditionError);
    EigenOptions cap;
    cap.max_n = 3;
    EXPECT_THROW(symmetric_eigen(DenseMatrix::identity(4), cap), ConfigError);
}

TEST(EigenValuesOnly, FourCycleMatchesCharacteristicRoots) {
    const auto g = add_self_loops_and_normalize(build_graph(4, {{0, 1}, {1, 2}, {2, 3}, {3, 0}}));
    const auto a = g.to_dense();
    const auto roots = poly_real_roots(char_poly(a));
    const auto ev = symmetric_eigenvalues(a);
    ASSERT_EQ(ev.size(), 4u);
    for (std::size_t i = 0; i < 4; ++i) EXPECT_NEAR(ev[i], roots[i], 1e-7);
    EXPECT_NEAR(ev[3], -1.0 / 3.0, 1e-12);
}

TEST(EigenValuesOnly, AgreesWithJacobi) {
    Rng rng(23);
    for (std::size_t n : {1u, 2u, 3u, 7u, 16u, 50u, 120u}) {
        const auto a = random_symmetric(n, rng);
        const auto jac = symmetric_eigen(a).eigenvalues;
        const auto ql = symmetric_eigenvalues(a);
        ASSERT_EQ(ql.size(), n);
        for (std::size_t i = 0; i < n; ++i) EXPECT_NEAR(ql[i], jac[i], 1e-10) << "n=" << n << " i=" << i;
    }
    // repeated eigenvalues and an already diagonal input
    const auto ev = symmetric_eigenvalues(DenseMatrix{{2, 0, 0}, {0, -1, 0}, {0, 0, 2}});
    EXPECT_EQ(ev, (std::vector<double>{2, 2, -1}));
    EXPECT_TRUE(symmetric_eigenvalues(DenseMatrix(0, 0)).empty());
}

TEST(EigenValuesOnly, GraphSpectrumTrace) {
    Rng rng(29);
    const auto g = add_self_loops_and_normalize(build_graph(300, testing::random_edges(300, 0.03, rng)));
    const auto ev = symmetric_eigenvalues(g.to_dense());
    double trace = 0.0;
    for (std::size_t i = 0; i < 300; ++i) trace += g.to_dense()(i, i);
    EXPECT_NEAR(std::accumulate(ev.begin(), ev.end(), 0.0), trace, 1e-9);
    EXPECT_LE(ev.front(), 1.0 + 1e-12);
    EXPECT_GT(ev.back(), -1.0);
}

TEST(EigenValuesOnly, Errors) {
    EXPECT_THROW(symmetric_eigenvalues(DenseMatrix(2, 3)), DimensionError);
    EXPECT_THROW(symmetric_eigenvalues(DenseMatrix{{0, 1}, {0.5, 0}}), PreconditionError);
    EigenOptions cap;
    cap.max_n = 3;
    EXPECT_THROW(symmetric_eigenvalues(DenseMatrix::identity(4), cap), ConfigError);
}

TEST(SolveDense, MatchesInverseProduct) {
    Rng rng(2);
    for (int t = 0; t < 20; ++t) {
        const std::size_t n = 1 + rng() % 12;
        auto a = testing::random_matrix(n, n, rng);
        for (std::size_t i = 0; i < n; ++i) a(i, i) += static_cast<double>(n);
        const auto b = testing::random_matrix(n, 3, rng);
        const auto x = solve_dense(a, b);
        EXPECT_LT(max_abs_diff(matmul(a, x), b), 1e-12);
    }
    EXPECT_THROW(solve_dense(DenseMatrix{{1, 2}, {2, 4}}, DenseMatrix(2, 1)), NumericalError);
}

} // namespace
} // namespace gprlab
