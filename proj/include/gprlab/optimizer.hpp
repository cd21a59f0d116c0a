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
#include <cstddef>
#include <deque>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "gprlab/error.hpp"
#include "gprlab/model.hpp"

namespace gprlab {

/// Learning rate and L2 coefficient of one parameter group.
struct GroupConfig {
    double lr = 0.01;
    double weight_decay = 0.0;
    bool frozen = false;
};

/// One tensor handed to the optimizer.
struct ParamSlot {
    std::string name;
    std::span<double> value;
    std::span<const double> grad;
    /// Index into AdamState::groups.
    std::size_t group = 0;
    /// Whether the group's weight decay applies.
    bool decay = true;
};

/**
 * Adam with bias correction. Weight decay is L2 style: weight_decay * p is
 * added to the gradient before the moment updates.
 */
struct AdamState {
    std::vector<GroupConfig> groups{GroupConfig{}};
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    long step = 0;
    std::vector<std::vector<double>> first_moment;
    std::vector<std::vector<double>> second_moment;
};

inline void adam_step(AdamState& st, std::span<const ParamSlot> slots) {
    for (const auto& s : slots) {
        if (s.value.size() != s.grad.size()) {
            throw DimensionError("adam_step: gradient for '" + s.name + "' has wrong length");
        }
        if (s.group >= st.groups.size()) throw ConfigError("adam_step: unknown group for '" + s.name + "'");
        for (double g : s.grad) {
            if (!std::isfinite(g)) throw NumericalError("adam_step: non-finite gradient in '" + s.name + "'");
        }
    }
    if (st.first_moment.empty()) {
        for (const auto& s : slots) {
            st.first_moment.emplace_back(s.value.size(), 0.0);
            st.second_moment.emplace_back(s.value.size(), 0.0);
        }
    }
    if (st.first_moment.size() != slots.size()) {
        throw DimensionError("adam_step: parameter list changed between steps");
    }
    ++st.step;
    const double bc1 = 1.0 - std::pow(st.beta1, static_cast<double>(st.step));
    const double bc2 = 1.0 - std::pow(st.beta2, static_cast<double>(st.step));
    for (std::size_t t = 0; t < slots.size(); ++t) {
        const auto& s = slots[t];
        const auto& cfg = st.groups[s.group];
        if (cfg.frozen) continue;
        auto& m = st.first_moment[t];
        auto& v = st.second_moment[t];
        if (m.size() != s.value.size()) throw DimensionError("adam_step: shape of '" + s.name + "' changed");
        const double wd = s.decay ? cfg.weight_decay : 0.0;
        for (std::size_t i = 0; i < s.value.size(); ++i) {
            const double g = s.grad[i] + wd * s.value[i];
            m[i] = st.beta1 * m[i] + (1.0 - st.beta1) * g;
            v[i] = st.beta2 * v[i] + (1.0 - st.beta2) * g * g;
            const double mhat = m[i] / bc1;
            const double vhat = v[i] / bc2;
            s.value[i] -= cfg.lr * mhat / (std::sqrt(vhat) + st.eps);
        }
    }
}

/// Group indices used by make_adam / model_slots.
inline constexpr std::size_t kThetaGroup = 0;
inline constexpr std::size_t kGammaGroup = 1;

/// Two groups: MLP weights (decayed, biases excluded) and GPR weights (never decayed).
inline AdamState make_adam(double lr, double weight_decay, double gamma_lr, bool gamma_frozen) {
    AdamState st;
    st.groups = {GroupConfig{lr, weight_decay, false}, GroupConfig{gamma_lr, 0.0, gamma_frozen}};
    return st;
}

inline std::vector<ParamSlot> model_slots(GprParams& p, const GprParams& g) {
    std::vector<ParamSlot> s;
    s.push_back({"w1", p.w1.values(), g.w1.values(), kThetaGroup, true});
    s.push_back({"b1", p.b1, g.b1, kThetaGroup, false});
    s.push_back({"w2", p.w2.values(), g.w2.values(), kThetaGroup, true});
    s.push_back({"b2", p.b2, g.b2, kThetaGroup, false});
    s.push_back({"gamma", p.gamma, g.gamma, kGammaGroup, false});
    return s;
}

inline void adam_step(AdamState& st, GprParams& params, const GprParams& grads) {
    auto slots = model_slots(params, grads);
    adam_step(st, std::span<const ParamSlot>(slots));
}

/**
 * Validation-loss early stopping: after max_epochs/2, stop as soon as the
 * current loss is not lower than the mean of the previous (up to) window
 * recorded losses.
 */
struct EarlyStopState {
    std::size_t max_epochs = 1000;
    std::size_t window = 200;
    std::deque<double> history;
};

inline bool should_stop(EarlyStopState& es, std::size_t epoch, double val_loss) {
    bool stop = false;
    if (epoch > es.max_epochs / 2 && !es.history.empty()) {
        const double mean = std::accumulate(es.history.begin(), es.history.end(), 0.0) /
                            static_cast<double>(es.history.size());
        stop = !(val_loss < mean);
    }
    es.history.push_back(val_loss);
    while (es.history.size() > es.window) es.history.pop_front();
    return stop;
}

} // namespace gprlab
