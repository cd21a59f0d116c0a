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
#include <atomic>
#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "gprlab/csbm.hpp"
#include "gprlab/dense_matrix.hpp"
#include "gprlab/error.hpp"
#include "gprlab/graph.hpp"
#include "gprlab/model.hpp"
#include "gprlab/optimizer.hpp"
#include "gprlab/oversmoothing.hpp"
#include "gprlab/rng.hpp"

namespace gprlab {

enum class SplitRegime { sparse, dense };

inline const char* to_string(SplitRegime r) { return r == SplitRegime::sparse ? "sparse" : "dense"; }

inline SplitRegime parse_regime(const std::string& s) {
    if (s == "sparse") return SplitRegime::sparse;
    if (s == "dense") return SplitRegime::dense;
    throw ConfigError("unknown split regime '" + s + "' (expected sparse or dense)");
}

/// Train / validation fractions: sparse 2.5%/2.5%, dense 60%/20%; the rest is test.
inline double train_fraction(SplitRegime r) { return r == SplitRegime::sparse ? 0.025 : 0.6; }
inline double val_fraction(SplitRegime r) { return r == SplitRegime::sparse ? 0.025 : 0.2; }

struct Split {
    std::vector<std::size_t> train;
    std::vector<std::size_t> val;
    std::vector<std::size_t> test;
    SplitRegime regime = SplitRegime::dense;
    std::uint64_t seed = 0;
};

/**
 * Class-balanced transductive split. Training nodes are drawn round-robin
 * over the (shuffled) classes until the target size is reached, so class
 * counts differ by at most one while every class has nodes left. Validation
 * is a uniform sample of the remainder.
 */
inline Split make_split(std::size_t n, const LabelVector& y, SplitRegime regime, std::uint64_t seed) {
    if (y.size() != n) throw DimensionError("make_split: label count does not match n");
    y.validate();
    std::vector<std::vector<std::size_t>> by_class(y.num_classes);
    for (std::size_t i = 0; i < n; ++i) by_class[y[i]].push_back(i);
    for (std::size_t c = 0; c < by_class.size(); ++c) {
        if (by_class[c].empty()) throw ConfigError("make_split: class " + std::to_string(c) + " has no nodes");
    }
    Rng rng(seed);
    for (auto& members : by_class) std::shuffle(members.begin(), members.end(), rng);

    const auto train_target = std::max<std::size_t>(
        y.num_classes, static_cast<std::size_t>(std::llround(train_fraction(regime) * static_cast<double>(n))));
    const auto val_target = static_cast<std::size_t>(std::llround(val_fraction(regime) * static_cast<double>(n)));
    if (train_target + val_target > n) throw ConfigError("make_split: graph too small for the split regime");

    Split s;
    s.regime = regime;
    s.seed = seed;
    std::vector<char> used(n, 0);
    std::vector<std::size_t> cursor(by_class.size(), 0);
    while (s.train.size() < train_target) {
        bool progressed = false;
        for (std::size_t c = 0; c < by_class.size() && s.train.size() < train_target; ++c) {
            if (cursor[c] < by_class[c].size()) {
                const auto v = by_class[c][cursor[c]++];
                s.train.push_back(v);
                used[v] = 1;
                progressed = true;
            }
        }
        if (!progressed) break;
    }
    std::vector<std::size_t> rest;
    for (std::size_t i = 0; i < n; ++i) {
        if (!used[i]) rest.push_back(i);
    }
    std::shuffle(rest.begin(), rest.end(), rng);
    s.val.assign(rest.begin(), rest.begin() + static_cast<std::ptrdiff_t>(val_target));
    s.test.assign(rest.begin() + static_cast<std::ptrdiff_t>(val_target), rest.end());
    std::sort(s.train.begin(), s.train.end());
    std::sort(s.val.begin(), s.val.end());
    std::sort(s.test.begin(), s.test.end());
    return s;
}

/// Fraction of nodes whose argmax score equals the label (ties -> lowest class).
inline double accuracy(const DenseMatrix& scores, const LabelVector& y, std::span<const std::size_t> nodes) {
    if (nodes.empty()) return 0.0;
    const auto pred = row_argmax(scores);
    std::size_t hit = 0;
    for (auto i : nodes) hit += pred[i] == y[i];
    return static_cast<double>(hit) / static_cast<double>(nodes.size());
}

/// Test accuracy of an eval-mode cache.
inline double evaluate(const ForwardCache& cache, const Split& split, const LabelVector& y) {
    return accuracy(cache.probs, y, split.test);
}

enum class ModelKind { gprgnn, appnp, sgc, mlp };

inline const char* to_string(ModelKind k) {
    switch (k) {
    case ModelKind::gprgnn: return "gprgnn";
    case ModelKind::appnp: return "appnp";
    case ModelKind::sgc: return "sgc";
    case ModelKind::mlp: return "mlp";
    }
    return "?";
}

inline ModelKind parse_model_kind(const std::string& s) {
    if (s == "gprgnn") return ModelKind::gprgnn;
    if (s == "appnp") return ModelKind::appnp;
    if (s == "sgc") return ModelKind::sgc;
    if (s == "mlp") return ModelKind::mlp;
    throw ConfigError("unknown model '" + s + "' (expected one of gprgnn, appnp, sgc, mlp)");
}

struct ModelConfig {
    ModelKind kind = ModelKind::gprgnn;
    /// GPR weight initialization (gprgnn only).
    GammaScheme init = GammaScheme::ppr(0.1);
    std::size_t K = 10;
    std::size_t hidden = 64;
    double dropout = 0.5;
    /// Dropout on the propagated terms (gprgnn only).
    double dprate = 0.5;
    /// Teleport probability of the fixed PPR weights (appnp only).
    double alpha = 0.1;
    /// Propagation depth for sgc.
    std::size_t sgc_K = 2;
};

/**
 * Instantiates one of the supported architectures as a GprModel:
 *   gprgnn  MLP + learnable gamma
 *   appnp   MLP + frozen PPR(alpha) gamma
 *   sgc     linear map + frozen Delta(K) gamma, no dropout
 *   mlp     MLP, K = 0 (no propagation)
 */
inline GprModel make_model(const ModelConfig& cfg, std::size_t f, std::size_t C, std::uint64_t seed) {
    GprModel m;
    switch (cfg.kind) {
    case ModelKind::gprgnn:
        m = init_model(f, cfg.hidden, C, cfg.K, cfg.init, seed);
        m.dropout_gpr = cfg.dprate;
        break;
    case ModelKind::appnp:
        m = init_model(f, cfg.hidden, C, cfg.K, GammaScheme::ppr(cfg.alpha), seed);
        m.gamma_trainable = false;
        break;
    case ModelKind::sgc:
        m = init_model(f, 0, C, cfg.sgc_K, GammaScheme::delta(std::nullopt), seed, Extractor::linear);
        m.gamma_trainable = false;
        m.dropout_nn = 0.0;
        return m;
    case ModelKind::mlp:
        m = init_model(f, cfg.hidden, C, 0, GammaScheme::delta(0), seed);
        m.gamma_trainable = false;
        break;
    }
    m.dropout_nn = cfg.dropout;
    return m;
}

struct TrainConfig {
    double lr = 0.01;
    double weight_decay = 0.0005;
    /// Learning rate of the GPR weights; defaults to lr.
    std::optional<double> gamma_lr;
    std::size_t max_epochs = 1000;
    std::size_t early_stop_window = 200;
    /// Record gamma every this many epochs (epoch 0 always recorded).
    std::size_t record_every = 10;
};

struct GammaSnapshot {
    std::size_t epoch = 0;
    std::vector<double> gamma;
};

struct RunRecord {
    bool failed = false;
    std::string failure;
    double test_accuracy = 0.0;
    double val_accuracy = 0.0;
    double epoch0_test_accuracy = 0.0;
    double best_val_loss = 0.0;
    std::size_t best_epoch = 0;
    std::size_t epochs_run = 0;
    OversmoothingReport epoch0_oversmoothing;
    std::vector<double> gamma_initial;
    /// Gamma of the best-validation checkpoint.
    std::vector<double> gamma_best;
    std::vector<GammaSnapshot> trajectory;
    std::vector<double> train_loss;
    std::vector<double> val_loss;
    GprModel best_model;
};

/**
 * Full-batch training with Adam and validation early stopping. Epoch 0 is
 * the untrained model; the checkpoint with the lowest validation loss
 * (earliest on ties) is the one evaluated on the test set. A non-finite
 * training loss marks the run failed.
 */
inline RunRecord train_model(GprModel model, const SparseGraph& g, const DenseMatrix& x, const LabelVector& y,
                             const Split& split, const TrainConfig& cfg, std::uint64_t dropout_seed) {
    if (!g.is_normalized()) throw GraphError("train_model: graph must be normalized");
    if (split.train.empty() || split.val.empty()) throw ConfigError("train_model: empty train or validation set");
    RunRecord rec;
    auto adam = make_adam(cfg.lr, cfg.weight_decay, cfg.gamma_lr.value_or(cfg.lr), !model.gamma_trainable);
    EarlyStopState es{cfg.max_epochs, cfg.early_stop_window, {}};

    auto eval = [&](const GprModel& m) { return forward(m, g, x, false); };
    {
        const auto c0 = eval(model);
        rec.epoch0_test_accuracy = evaluate(c0, split, y);
        rec.epoch0_oversmoothing = detect_oversmoothing(c0, g);
        rec.best_val_loss = mean_cross_entropy(c0.z, c0.eta, y, split.val);
        rec.val_accuracy = accuracy(c0.probs, y, split.val);
        rec.test_accuracy = rec.epoch0_test_accuracy;
        rec.gamma_initial = model.params.gamma;
        rec.best_model = model;
        rec.trajectory.push_back({0, model.params.gamma});
    }

    for (std::size_t epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
        const auto c = forward(model, g, x, true, mix_seed(dropout_seed, epoch));
        const auto lg = loss_and_backward(model, g, c, y, split.train, 0.0);
        if (!std::isfinite(lg.loss)) {
            rec.failed = true;
            rec.failure = "non-finite training loss at epoch " + std::to_string(epoch);
            break;
        }
        try {
            adam_step(adam, model.params, lg.grads);
        } catch (const NumericalError& e) {
            rec.failed = true;
            rec.failure = e.what();
            break;
        }
        rec.train_loss.push_back(lg.loss);
        rec.epochs_run = epoch;

        const auto ce = eval(model);
        const double vl = mean_cross_entropy(ce.z, ce.eta, y, split.val);
        if (!std::isfinite(vl)) {
            rec.failed = true;
            rec.failure = "non-finite validation loss at epoch " + std::to_string(epoch);
            break;
        }
        rec.val_loss.push_back(vl);
        if (vl < rec.best_val_loss) {
            rec.best_val_loss = vl;
            rec.best_epoch = epoch;
            rec.best_model = model;
            rec.val_accuracy = accuracy(ce.probs, y, split.val);
            rec.test_accuracy = evaluate(ce, split, y);
        }
        if (cfg.record_every && epoch % cfg.record_every == 0) rec.trajectory.push_back({epoch, model.params.gamma});
        if (should_stop(es, epoch, vl)) break;
    }
    rec.gamma_best = rec.best_model.params.gamma;
    return rec;
}

/// Mean and normal-approximation 95% half-width 1.96 s / sqrt(runs).
struct Aggregate {
    double mean = 0.0;
    double ci95 = 0.0;
    std::size_t count = 0;
};

inline Aggregate aggregate(std::span<const double> values) {
    Aggregate a;
    a.count = values.size();
    if (values.empty()) return a;
    for (double v : values) a.mean += v;
    a.mean /= static_cast<double>(values.size());
    if (values.size() < 2) return a;
    double ss = 0.0;
    for (double v : values) ss += (v - a.mean) * (v - a.mean);
    const double sd = std::sqrt(ss / static_cast<double>(values.size() - 1));
    a.ci95 = 1.96 * sd / std::sqrt(static_cast<double>(values.size()));
    return a;
}

/// Runs jobs[0..count) on up to threads workers. Results must be written by index.
inline void parallel_for(std::size_t count, std::size_t threads, const std::function<void(std::size_t)>& job) {
    threads = std::max<std::size_t>(1, std::min(threads, count));
    if (threads == 1) {
        for (std::size_t i = 0; i < count; ++i) job(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::exception_ptr> errors(threads);
    {
        std::vector<std::jthread> pool;
        for (std::size_t t = 0; t < threads; ++t) {
            pool.emplace_back([&, t] {
                try {
                    for (std::size_t i = next++; i < count; i = next++) job(i);
                } catch (...) {
                    errors[t] = std::current_exception();
                }
            });
        }
    }
    for (auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }
}

/// Shared cSBM settings of a sweep; xi = n/f.
/**
 * Trains runs independent models on one dataset. Run r uses split seed
 * stream_seed(seed, split, r), init seed stream_seed(seed, init, r) and
 * dropout seed stream_seed(seed, dropout, r); results are in run order.
 */
inline std::vector<RunRecord> run_repeated(const ModelConfig& model, const TrainConfig& train, const SparseGraph& g,
                                           const DenseMatrix& x, const LabelVector& y, SplitRegime regime,
                                           std::size_t runs, std::uint64_t seed, std::size_t threads = 1) {
    std::vector<RunRecord> out(runs);
    parallel_for(runs, threads, [&](std::size_t r) {
        const auto split = make_split(g.num_nodes(), y, regime, stream_seed(seed, SeedStream::split, r));
        auto m = make_model(model, x.cols(), y.num_classes, stream_seed(seed, SeedStream::init, r));
        out[r] = train_model(std::move(m), g, x, y, split, train, stream_seed(seed, SeedStream::dropout, r));
    });
    return out;
}

struct SweepBase {
    std::size_t n = 1000;
    std::size_t f = 400;
    double d = 10.0;
    double epsilon = 3.25;
    std::uint64_t seed = 0;
};

struct SweepRow {
    double phi = 0.0;
    std::string model;
    SplitRegime regime = SplitRegime::dense;
    std::size_t run = 0;
    std::uint64_t seed = 0;
    double accuracy = 0.0;
    std::size_t epochs = 0;
    double best_val_loss = 0.0;
    bool failed = false;
    std::vector<double> gamma;
};

struct SweepAggregate {
    double phi = 0.0;
    std::string model;
    double mean_acc = 0.0;
    double ci95 = 0.0;
    std::size_t runs = 0;
    std::size_t failed = 0;
};

struct SweepResult {
    std::vector<SweepRow> rows;
    std::vector<SweepAggregate> aggregates;

    const SweepAggregate& find(double phi, const std::string& model) const {
        for (const auto& a : aggregates) {
            if (a.phi == phi && a.model == model) return a;
        }
        throw ConfigError("sweep result has no entry for model " + model + " at phi " + std::to_string(phi));
    }
};

/**
 * One cSBM dataset per phi (dataset stream of base.seed); run r of every
 * model uses split seed stream_seed(seed, split, r) and init seed
 * stream_seed(seed, init, r), so all models see the same splits.
 * Failed runs are reported and excluded from the aggregates.
 */
inline SweepResult run_phi_sweep(std::span<const double> phis, SplitRegime regime,
                                 std::span<const ModelConfig> models, std::size_t runs, const SweepBase& base,
                                 const TrainConfig& train, std::size_t threads = 1) {
    if (runs < 2) throw ConfigError("run_phi_sweep: need at least 2 runs for a confidence interval");
    struct Data {
        SparseGraph g;
        DenseMatrix x;
        LabelVector y;
    };
    std::vector<Data> data(phis.size());
    parallel_for(phis.size(), threads, [&](std::size_t p) {
        auto s = generate_phi(base.n, base.f, base.d, phis[p], base.epsilon, stream_seed(base.seed, SeedStream::dataset));
        data[p] = {add_self_loops_and_normalize(s.graph), std::move(s.features), std::move(s.labels)};
    });

    const std::size_t jobs = phis.size() * models.size() * runs;
    std::vector<SweepRow> rows(jobs);
    parallel_for(jobs, threads, [&](std::size_t j) {
        const std::size_t run = j % runs;
        const std::size_t mi = (j / runs) % models.size();
        const std::size_t p = j / (runs * models.size());
        const auto& d = data[p];
        const auto split = make_split(base.n, d.y, regime, stream_seed(base.seed, SeedStream::split, run));
        const auto init_seed = stream_seed(base.seed, SeedStream::init, run);
        auto model = make_model(models[mi], d.x.cols(), d.y.num_classes, init_seed);
        const auto rec = train_model(std::move(model), d.g, d.x, d.y, split, train,
                                     stream_seed(base.seed, SeedStream::dropout, run));
        rows[j] = SweepRow{phis[p], to_string(models[mi].kind), regime, run, init_seed, rec.test_accuracy,
                           rec.epochs_run, rec.best_val_loss, rec.failed, rec.gamma_best};
    });

    SweepResult out;
    out.rows = std::move(rows);
    for (std::size_t p = 0; p < phis.size(); ++p) {
        for (std::size_t mi = 0; mi < models.size(); ++mi) {
            std::vector<double> acc;
            std::size_t failed = 0;
            for (const auto& r : out.rows) {
                if (r.phi != phis[p] || r.model != to_string(models[mi].kind)) continue;
                if (r.failed) {
                    ++failed;
                } else {
                    acc.push_back(r.accuracy);
                }
            }
            const auto a = aggregate(acc);
            out.aggregates.push_back({phis[p], to_string(models[mi].kind), a.mean, a.ci95, a.count, failed});
        }
    }
    return out;
}

/// Candidate values for validation-accuracy model selection.
struct HyperGrid {
    std::vector<double> lrs{0.002, 0.01, 0.05};
    std::vector<double> weight_decays{0.0, 0.0005};
    std::vector<double> dprates{0.0, 0.5, 0.7};
    std::vector<GammaScheme> inits{GammaScheme::ppr(0.1), GammaScheme::ppr(0.2), GammaScheme::ppr(0.5),
                                   GammaScheme::ppr(0.9), GammaScheme::delta(0), GammaScheme::delta(std::nullopt),
                                   GammaScheme::random()};
    std::vector<double> alphas{0.1, 0.2, 0.5, 0.9};
};

struct GridChoice {
    ModelConfig model;
    TrainConfig train;
    double mean_val_accuracy = -1.0;
    std::size_t evaluated = 0;
};

/**
 * Exhaustive search over the grid axes relevant to cfg.kind, scoring each
 * candidate by mean validation accuracy over selection_runs splits.
 */
inline GridChoice grid_search(const ModelConfig& model, const TrainConfig& train, const HyperGrid& grid,
                              const SparseGraph& g, const DenseMatrix& x, const LabelVector& y, SplitRegime regime,
                              std::size_t selection_runs, std::uint64_t seed) {
    std::vector<std::pair<ModelConfig, TrainConfig>> cands;
    const bool gpr = model.kind == ModelKind::gprgnn;
    const bool appnp = model.kind == ModelKind::appnp;
    const std::vector<double> dps = gpr ? grid.dprates : std::vector<double>{model.dprate};
    const std::vector<GammaScheme> inits = gpr ? grid.inits : std::vector<GammaScheme>{model.init};
    const std::vector<double> alphas = appnp ? grid.alphas : std::vector<double>{model.alpha};
    for (double lr : grid.lrs)
        for (double wd : grid.weight_decays)
            for (double dp : dps)
                for (const auto& init : inits)
                    for (double a : alphas) {
                        ModelConfig mc = model;
                        mc.dprate = dp;
                        mc.init = init;
                        mc.alpha = a;
                        TrainConfig tc = train;
                        tc.lr = lr;
                        tc.weight_decay = wd;
                        cands.emplace_back(mc, tc);
                    }
    GridChoice best;
    for (const auto& [mc, tc] : cands) {
        double total = 0.0;
        for (std::size_t r = 0; r < selection_runs; ++r) {
            const auto split = make_split(y.size(), y, regime, stream_seed(seed, SeedStream::split, r));
            auto m = make_model(mc, x.cols(), y.num_classes, stream_seed(seed, SeedStream::init, r));
            total += train_model(std::move(m), g, x, y, split, tc, stream_seed(seed, SeedStream::dropout, r)).val_accuracy;
        }
        const double mean = total / static_cast<double>(std::max<std::size_t>(1, selection_runs));
        ++best.evaluated;
        if (mean > best.mean_val_accuracy) {
            best.mean_val_accuracy = mean;
            best.model = mc;
            best.train = tc;
        }
    }
    return best;
}

} // namespace gprlab
