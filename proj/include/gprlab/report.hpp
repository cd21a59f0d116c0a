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
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <limits>
#include <map>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "gprlab/error.hpp"
#include "gprlab/experiment.hpp"
#include "gprlab/spectral.hpp"

namespace gprlab {

/// Shortest round-trip decimal representation.
inline std::string fmt(double v) {
    std::ostringstream ss;
    ss << std::setprecision(std::numeric_limits<double>::max_digits10) << v;
    return ss.str();
}

inline void write_results_csv(std::ostream& out, std::span<const SweepRow> rows) {
    out << "phi,model,regime,run,seed,accuracy,epochs,best_val_loss\n";
    for (const auto& r : rows) {
        out << fmt(r.phi) << ',' << r.model << ',' << to_string(r.regime) << ',' << r.run << ',' << r.seed << ','
            << (r.failed ? std::string("nan") : fmt(r.accuracy)) << ',' << r.epochs << ','
            << fmt(r.best_val_loss) << '\n';
    }
}

inline void write_aggregates_csv(std::ostream& out, std::span<const SweepAggregate> rows) {
    out << "phi,model,mean_acc,ci95\n";
    for (const auto& a : rows) out << fmt(a.phi) << ',' << a.model << ',' << fmt(a.mean_acc) << ',' << fmt(a.ci95) << '\n';
}

inline void write_spectrum_csv(std::ostream& out, const FilterResponse& r) {
    out << "lambda,g,ratio\n";
    for (std::size_t i = 0; i < r.lambdas.size(); ++i) {
        out << fmt(r.lambdas[i]) << ',' << fmt(r.response[i]) << ','
            << (r.ratios.empty() ? std::string("nan") : fmt(r.ratios[i])) << '\n';
    }
}

/// Per-(epoch, k) mean of gamma_k across runs with its 95% interval.
struct GammaBand {
    std::size_t epoch = 0;
    std::size_t k = 0;
    double mean = 0.0;
    double ci_low = 0.0;
    double ci_high = 0.0;
    std::size_t runs = 0;
};

/// Aggregates recorded gamma trajectories; an epoch only counts runs that reached it.
inline std::vector<GammaBand> gamma_bands(std::span<const std::vector<GammaSnapshot>> trajectories) {
    std::map<std::pair<std::size_t, std::size_t>, std::vector<double>> cells;
    for (const auto& traj : trajectories) {
        for (const auto& snap : traj) {
            for (std::size_t k = 0; k < snap.gamma.size(); ++k) cells[{snap.epoch, k}].push_back(snap.gamma[k]);
        }
    }
    std::vector<GammaBand> out;
    for (const auto& [key, vals] : cells) {
        const auto a = aggregate(vals);
        out.push_back({key.first, key.second, a.mean, a.mean - a.ci95, a.mean + a.ci95, a.count});
    }
    return out;
}

inline void write_gamma_csv(std::ostream& out, std::span<const GammaBand> bands) {
    out << "epoch,k,gamma,ci_low,ci_high\n";
    for (const auto& b : bands) {
        out << b.epoch << ',' << b.k << ',' << fmt(b.mean) << ',' << fmt(b.ci_low) << ',' << fmt(b.ci_high) << '\n';
    }
}

/// Opens path for writing, creating parent directories.
inline std::ofstream open_output(const std::filesystem::path& p) {
    if (p.has_parent_path()) {
        std::error_code ec;
        std::filesystem::create_directories(p.parent_path(), ec);
        if (ec) throw IoError("cannot create " + p.parent_path().string() + ": " + ec.message());
    }
    std::ofstream out(p, std::ios::trunc);
    if (!out) throw IoError("cannot open " + p.string() + " for writing");
    return out;
}

} // namespace gprlab
