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
#include <limits>
#include <set>

#include "gprlab/csbm.hpp"
#include "gprlab/experiment.hpp"
#include "test_support.hpp"

namespace gprlab {
namespace {

LabelVector balanced(std::size_t n, std::size_t C = 2) {
    LabelVector y{std::vector<std::size_t>(n), C};
    for (std::size_t i = 0; i < n; ++i) y.labels[i] = i % C;
    return y;
}

std::size_t max_minus_min(const Split& s, const LabelVector& y) {
    std::vector<std::size_t> c(y.num_classes, 0);
    for (auto i : s.train) ++c[y[i]];
    return *std::max_element(c.begin(), c.end()) - *std::min_element(c.begin(), c.end());
}

TEST(Split, SparseThousand) {
    const auto y = balanced(1000);
    const auto s = make_split(1000, y, SplitRegime::sparse, 3);
    EXPECT_NEAR(static_cast<double>(s.train.size()), 25.0, 1.0);
    std::size_t c0 = 0;
    for (auto i : s.train) c0 += y[i] == 0;
    EXPECT_GE(c0, 12u);
    EXPECT_GE(s.train.size() - c0, 12u);
    EXPECT_EQ(s.val.size(), 25u);
    EXPECT_EQ(s.test.size(), 1000u - s.train.size() - 25u);
    EXPECT_NEAR(static_cast<double>(s.test.size()), 950.0, 1.0);
}

TEST(Split, DenseTen) {
    const auto y = balanced(10);
    const auto s = make_split(10, y, SplitRegime::dense, 0);
    EXPECT_EQ(s.train.size(), 6u);
    EXPECT_EQ(max_minus_min(s, y), 0u);
    EXPECT_EQ(s.val.size(), 2u);
    EXPECT_EQ(s.test.size(), 2u);
}

TEST(Split, InvariantsOverSeedsAndSizes) {
    Rng rng(1);
    for (int t = 0; t < 40; ++t) {
        const std::size_t n = 40 + rng() % 2000;
        const std::size_t C = 2 + rng() % 4;
        LabelVector y{std::vector<std::size_t>(n), C};
        for (auto& l : y.labels) l = rng() % C;
        for (std::size_t c = 0; c < C; ++c) y.labels[c] = c;
        for (auto regime : {SplitRegime::sparse, SplitRegime::dense}) {
            const auto s = make_split(n, y, regime, t);
            const double target = train_fraction(regime) * static_cast<double>(n);
            EXPECT_LE(std::abs(static_cast<double>(s.train.size()) - std::max<double>(std::round(target), C)), 1.0);
            EXPECT_NEAR(static_cast<double>(s.val.size()), val_fraction(regime) * static_cast<double>(n), 1.0);
            std::set<std::size_t> all(s.train.begin(), s.train.end());
            all.insert(s.val.begin(), s.val.end());
            all.insert(s.test.begin(), s.test.end());
            EXPECT_EQ(all.size(), n);
            EXPECT_EQ(s.train.size() + s.val.size() + s.test.size(), n);
            // balance holds while no class runs out of nodes
            const auto counts = y.class_counts();
            if (*std::min_element(counts.begin(), counts.end()) * C >= s.train.size()) {
                EXPECT_LE(max_minus_min(s, y), 1u);
            }
        }
    }
}

TEST(Split, DeterministicPerSeed) {
    const auto y = balanced(300);
    const auto a = make_split(300, y, SplitRegime::dense, 5), b = make_split(300, y, SplitRegime::dense, 5);
    EXPECT_EQ(a.train, b.train);
    EXPECT_EQ(a.val, b.val);
    EXPECT_NE(a.train, make_split(300, y, SplitRegime::dense, 6).train);
}

TEST(Split, EmptyClassRejected) {
    EXPECT_THROW(make_split(6, LabelVector{{0, 1, 0, 1, 0, 1}, 3}, SplitRegime::dense, 0), ConfigError);
}

TEST(Evaluate, PerfectAndUniformLogits) {
    const LabelVector y{{0, 1, 1, 0, 1}, 2};
    const std::vector<std::size_t> nodes{0, 1, 2, 3, 4};
    EXPECT_EQ(accuracy(y.one_hot(), y, nodes), 1.0);
    EXPECT_DOUBLE_EQ(accuracy(DenseMatrix(5, 2, 0.3), y, nodes), 2.0 / 5.0);
}

TEST(Evaluate, MatchesBruteForceCount) {
    Rng rng(2);
    const std::size_t n = 200;
    LabelVector y{std::vector<std::size_t>(n), 2};
    for (auto& l : y.labels) l = rng() % 2;
    const auto scores = testing::random_matrix(n, 2, rng);
    std::vector<std::size_t> nodes;
    for (std::size_t i = 0; i < n; i += 3) nodes.push_back(i);
    std::size_t tp = 0, tn = 0;
    for (auto i : nodes) {
        const std::size_t pred = scores(i, 1) > scores(i, 0) ? 1 : 0;
        tp += pred == 1 && y[i] == 1;
        tn += pred == 0 && y[i] == 0;
    }
    EXPECT_DOUBLE_EQ(accuracy(scores, y, nodes), static_cast<double>(tp + tn) / static_cast<double>(nodes.size()));
}

TEST(Aggregate, MeanAndInterval) {
    const std::vector<double> v{0.8, 0.9, 1.0};
    const auto a = aggregate(v);
    EXPECT_NEAR(a.mean, 0.9, 1e-15);
    EXPECT_NEAR(a.ci95, 1.96 * 0.1 / std::sqrt(3.0), 1e-15);
    EXPECT_EQ(aggregate(std::vector<double>{0.7, 0.7}).ci95, 0.0);
}

TEST(ModelFactory, Architectures) {
    ModelConfig mc;
    mc.kind = parse_model_kind("mlp");
    const auto mlp = make_model(mc, 10, 3, 0);
    EXPECT_EQ(mlp.params.gamma, (std::vector<double>{1.0}));
    EXPECT_FALSE(mlp.gamma_trainable);
    mc.kind = ModelKind::appnp;
    const auto appnp = make_model(mc, 10, 3, 0);
    EXPECT_EQ(appnp.K(), 10u);
    EXPECT_NEAR(appnp.params.gamma[0], 0.1, 1e-15);
    EXPECT_FALSE(appnp.gamma_trainable);
    mc.kind = ModelKind::sgc;
    const auto sgc = make_model(mc, 10, 3, 0);
    EXPECT_EQ(sgc.extractor, Extractor::linear);
    EXPECT_EQ(sgc.params.gamma, (std::vector<double>{0, 0, 1}));
    mc.kind = ModelKind::gprgnn;
    EXPECT_TRUE(make_model(mc, 10, 3, 0).gamma_trainable);
    try {
        parse_model_kind("gcn");
        FAIL();
    } catch (const ConfigError& e) {
        EXPECT_NE(std::string(e.what()).find("gprgnn, appnp, sgc, mlp"), std::string::npos);
    }
}

struct SmallData {
    CsbmSample s;
    SparseGraph g;
};

SmallData small_data(double phi, std::uint64_t seed) {
    auto s = generate_phi(300, 120, 10.0, phi, 3.25, seed);
    auto g = add_self_loops_and_normalize(s.graph);
    return {std::move(s), std::move(g)};
}

TEST(TrainModel, ZeroLearningRateKeepsEpochZeroAccuracy) {
    const auto d = small_data(0.5, 1);
    const auto split = make_split(300, d.s.labels, SplitRegime::dense, 2);
    ModelConfig mc;
    TrainConfig tc;
    tc.lr = 0.0;
    tc.max_epochs = 30;
    const auto rec = train_model(make_model(mc, 120, 2, 3), d.g, d.s.features, d.s.labels, split, tc, 4);
    EXPECT_FALSE(rec.failed);
    EXPECT_EQ(rec.test_accuracy, rec.epoch0_test_accuracy);
}

TEST(TrainModel, ReportsBestValidationCheckpoint) {
    const auto d = small_data(-0.5, 2);
    const auto split = make_split(300, d.s.labels, SplitRegime::dense, 3);
    ModelConfig mc;
    TrainConfig tc;
    tc.max_epochs = 120;
    const auto rec = train_model(make_model(mc, 120, 2, 5), d.g, d.s.features, d.s.labels, split, tc, 6);
    ASSERT_FALSE(rec.failed);
    EXPECT_EQ(rec.val_loss.size(), rec.epochs_run);
    if (rec.best_epoch > 0) {
        EXPECT_EQ(rec.best_val_loss, *std::min_element(rec.val_loss.begin(), rec.val_loss.end()));
        EXPECT_EQ(rec.val_loss[rec.best_epoch - 1], rec.best_val_loss);
    }
    const auto c = forward(rec.best_model, d.g, d.s.features, false);
    EXPECT_EQ(evaluate(c, split, d.s.labels), rec.test_accuracy);
    EXPECT_EQ(rec.gamma_best, rec.best_model.params.gamma);
    EXPECT_EQ(rec.trajectory.front().epoch, 0u);
    EXPECT_EQ(rec.trajectory.back().epoch, rec.epochs_run / 10 * 10);
}

TEST(TrainModel, DivergenceMarksRunFailed) {
    auto d = small_data(0.0, 3);
    d.s.features(5, 7) = std::numeric_limits<double>::quiet_NaN();
    const auto split = make_split(300, d.s.labels, SplitRegime::dense, 3);
    ModelConfig mc;
    mc.kind = ModelKind::mlp;
    mc.dropout = 0.0;
    TrainConfig tc;
    tc.max_epochs = 5;
    const auto rec = train_model(make_model(mc, 120, 2, 1), d.g, d.s.features, d.s.labels, split, tc, 1);
    EXPECT_TRUE(rec.failed);
    EXPECT_FALSE(rec.failure.empty());
}

TEST(TrainModel, BitReproducible) {
    const auto d = small_data(0.25, 4);
    const auto split = make_split(300, d.s.labels, SplitRegime::sparse, 1);
    ModelConfig mc;
    mc.dprate = 0.5;
    TrainConfig tc;
    tc.max_epochs = 40;
    const auto a = train_model(make_model(mc, 120, 2, 9), d.g, d.s.features, d.s.labels, split, tc, 2);
    const auto b = train_model(make_model(mc, 120, 2, 9), d.g, d.s.features, d.s.labels, split, tc, 2);
    EXPECT_EQ(a.val_loss, b.val_loss);
    EXPECT_EQ(a.gamma_best, b.gamma_best);
}

TEST(Sweep, MlpOnPureGraphSignalIsChance) {
    const std::vector<double> phis{1.0};
    ModelConfig mlp;
    mlp.kind = ModelKind::mlp;
    const std::vector<ModelConfig> models{mlp};
    SweepBase base{400, 160, 10.0, 3.25, 11};
    TrainConfig tc;
    tc.max_epochs = 100;
    const auto r = run_phi_sweep(phis, SplitRegime::dense, models, 3, base, tc);
    EXPECT_EQ(r.rows.size(), 3u);
    EXPECT_NEAR(r.find(1.0, "mlp").mean_acc, 0.5, 0.1);
}

TEST(Sweep, ThreadCountDoesNotChangeResults) {
    const std::vector<double> phis{-0.5, 0.5};
    ModelConfig gpr, mlp;
    mlp.kind = ModelKind::mlp;
    const std::vector<ModelConfig> models{gpr, mlp};
    SweepBase base{200, 80, 10.0, 3.25, 5};
    TrainConfig tc;
    tc.max_epochs = 20;
    const auto serial = run_phi_sweep(phis, SplitRegime::dense, models, 2, base, tc, 1);
    const auto threaded = run_phi_sweep(phis, SplitRegime::dense, models, 2, base, tc, 3);
    ASSERT_EQ(serial.rows.size(), 8u);
    for (std::size_t i = 0; i < serial.rows.size(); ++i) {
        EXPECT_EQ(serial.rows[i].accuracy, threaded.rows[i].accuracy);
        EXPECT_EQ(serial.rows[i].best_val_loss, threaded.rows[i].best_val_loss);
    }
    EXPECT_EQ(serial.aggregates.size(), 4u);
    EXPECT_THROW(run_phi_sweep(phis, SplitRegime::dense, models, 1, base, tc), ConfigError);
}

TEST(GridSearch, PicksBestValidationCandidate) {
    const auto d = small_data(0.75, 8);
    HyperGrid grid;
    grid.lrs = {0.0, 0.05};
    grid.weight_decays = {0.0};
    grid.dprates = {0.0};
    grid.inits = {GammaScheme::ppr(0.1)};
    ModelConfig mc;
    TrainConfig tc;
    tc.max_epochs = 40;
    const auto best = grid_search(mc, tc, grid, d.g, d.s.features, d.s.labels, SplitRegime::dense, 2, 1);
    EXPECT_EQ(best.evaluated, 2u);
    EXPECT_EQ(best.train.lr, 0.05);
    EXPECT_GT(best.mean_val_accuracy, 0.6);
}

} // namespace
} // namespace gprlab
