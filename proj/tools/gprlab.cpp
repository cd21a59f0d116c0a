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

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "CLI11.hpp"
#include "gprlab.hpp"

namespace fs = std::filesystem;
using namespace gprlab;

namespace {

/// Reads --config files written as JSON. Top-level keys set global options;
/// an object under a subcommand name sets that subcommand's options.
class JsonConfig : public CLI::Config {
public:
    std::string to_config(const CLI::App*, bool, bool, std::string) const override { return {}; }

    std::vector<CLI::ConfigItem> from_config(std::istream& in) const override {
        nlohmann::json j;
        try {
            in >> j;
        } catch (const nlohmann::json::exception& e) {
            throw CLI::ConversionError(std::string("config file is not valid JSON: ") + e.what());
        }
        if (!j.is_object()) throw CLI::ConversionError("config file must hold a JSON object");
        std::vector<CLI::ConfigItem> items;
        collect(j, {}, items);
        return items;
    }

private:
    static void collect(const nlohmann::json& j, const std::vector<std::string>& parents,
                        std::vector<CLI::ConfigItem>& out) {
        for (const auto& [key, value] : j.items()) {
            if (value.is_object()) {
                auto p = parents;
                p.push_back(key);
                collect(value, p, out);
                continue;
            }
            CLI::ConfigItem item;
            item.parents = parents;
            item.name = key;
            if (value.is_array()) {
                for (const auto& v : value) item.inputs.push_back(scalar(v));
            } else {
                item.inputs.push_back(scalar(value));
            }
            out.push_back(std::move(item));
        }
    }

    static std::string scalar(const nlohmann::json& v) {
        if (v.is_string()) return v.get<std::string>();
        return v.dump();
    }
};

struct Globals {
    std::uint64_t seed = 0;
    std::size_t threads = 1;
    std::string out_dir;
};

struct DataFlags {
    std::size_t n = 1000;
    std::size_t f = 400;
    double d = 10.0;
    double epsilon = 3.25;
};

struct ModelFlags {
    std::string model = "gprgnn";
    std::string init = "ppr:0.1";
    std::size_t K = 10;
    std::size_t hidden = 64;
    double dropout = 0.5;
    double dprate = 0.5;
    double alpha = 0.1;
    std::size_t sgc_K = 2;

    ModelConfig config() const {
        ModelConfig c;
        c.kind = parse_model_kind(model);
        c.init = GammaScheme::parse(init);
        c.K = K;
        c.hidden = hidden;
        c.dropout = dropout;
        c.dprate = dprate;
        c.alpha = alpha;
        c.sgc_K = sgc_K;
        return c;
    }
};

struct TrainFlags {
    double lr = 0.01;
    double weight_decay = 0.0005;
    std::optional<double> gamma_lr;
    std::size_t epochs = 1000;
    std::size_t patience = 200;
    std::size_t record_every = 10;

    TrainConfig config() const {
        TrainConfig c;
        c.lr = lr;
        c.weight_decay = weight_decay;
        c.gamma_lr = gamma_lr;
        c.max_epochs = epochs;
        c.early_stop_window = patience;
        c.record_every = record_every;
        return c;
    }
};

const std::vector<std::string> kModels{"gprgnn", "appnp", "sgc", "mlp"};

void add_data_flags(CLI::App* app, DataFlags& d) {
    app->add_option("--n", d.n, "Number of nodes (even)")->check(CLI::PositiveNumber);
    app->add_option("--f", d.f, "Feature dimension")->check(CLI::PositiveNumber);
    app->add_option("--d", d.d, "Mean degree")->check(CLI::PositiveNumber);
    app->add_option("--epsilon", d.epsilon, "Signal strength epsilon")->check(CLI::PositiveNumber);
}

void add_model_flags(CLI::App* app, ModelFlags& m) {
    app->add_option("--model", m.model, "Architecture")->check(CLI::IsMember(kModels));
    app->add_option("--init", m.init, "GPR weight init: ppr:<a>, nppr:<a>, delta:<k>, delta:K or random");
    app->add_option("--K", m.K, "Propagation steps");
    app->add_option("--hidden", m.hidden, "Hidden units")->check(CLI::PositiveNumber);
    app->add_option("--dropout", m.dropout, "Dropout rate of the MLP layers")->check(CLI::Range(0.0, 0.99));
    app->add_option("--dprate", m.dprate, "Dropout rate of the propagated terms")->check(CLI::Range(0.0, 0.99));
    app->add_option("--alpha", m.alpha, "Teleport probability for appnp")->check(CLI::Range(0.0, 1.0));
    app->add_option("--sgc-K", m.sgc_K, "Propagation steps for sgc");
}

void add_train_flags(CLI::App* app, TrainFlags& t) {
    app->add_option("--lr", t.lr, "Learning rate")->check(CLI::NonNegativeNumber);
    app->add_option("--weight-decay", t.weight_decay, "L2 coefficient on weight matrices")
        ->check(CLI::NonNegativeNumber);
    app->add_option("--gamma-lr", t.gamma_lr, "Learning rate of the GPR weights (default: --lr)")
        ->check(CLI::NonNegativeNumber);
    app->add_option("--epochs", t.epochs, "Maximum epochs");
    app->add_option("--patience", t.patience, "Early-stopping window");
    app->add_option("--record-every", t.record_every, "Gamma snapshot interval in epochs");
}

SplitRegime regime_from(const std::string& s) { return parse_regime(s); }

fs::path out_path(const Globals& g, const std::string& name) { return fs::path(g.out_dir) / name; }

void write_svg(const fs::path& p, const svg::Chart& c) {
    auto out = open_output(p);
    out << svg::render(c);
    std::cout << "wrote " << p.string() << '\n';
}

double bundle_phi(const DatasetBundle& b) {
    if (!b.generator_spec || !b.generator_spec->contains("lambda")) return std::numeric_limits<double>::quiet_NaN();
    const auto& s = *b.generator_spec;
    const double xi = static_cast<double>(b.graph.num_nodes()) / static_cast<double>(b.features.cols());
    return lambda_mu_to_phi(s["lambda"].get<double>(), s["mu"].get<double>(), xi);
}

/// Gamma of the best checkpoint per run, as mean and 95% band per k.
svg::Series gamma_by_k(const std::vector<std::vector<double>>& gammas, const std::string& label) {
    svg::Series s;
    s.label = label;
    if (gammas.empty()) return s;
    for (std::size_t k = 0; k < gammas.front().size(); ++k) {
        std::vector<double> v;
        for (const auto& g : gammas) v.push_back(g[k]);
        const auto a = aggregate(v);
        s.x.push_back(static_cast<double>(k));
        s.y.push_back(a.mean);
        s.lo.push_back(a.mean - a.ci95);
        s.hi.push_back(a.mean + a.ci95);
    }
    return s;
}

void write_gamma_by_k_csv(const fs::path& p, const svg::Series& s) {
    auto out = open_output(p);
    out << "k,gamma,ci_low,ci_high\n";
    for (std::size_t i = 0; i < s.x.size(); ++i) {
        out << static_cast<std::size_t>(s.x[i]) << ',' << fmt(s.y[i]) << ',' << fmt(s.lo[i]) << ',' << fmt(s.hi[i])
            << '\n';
    }
    std::cout << "wrote " << p.string() << '\n';
}

svg::Chart gamma_trajectory_chart(std::span<const GammaBand> bands, const std::string& title) {
    svg::Chart c;
    c.title = title;
    c.x_label = "epoch";
    c.y_label = "gamma_k";
    std::map<std::size_t, svg::Series> per_k;
    for (const auto& b : bands) {
        auto& s = per_k[b.k];
        s.label = "k=" + std::to_string(b.k);
        s.x.push_back(static_cast<double>(b.epoch));
        s.y.push_back(b.mean);
        s.lo.push_back(b.ci_low);
        s.hi.push_back(b.ci_high);
    }
    for (auto& [k, s] : per_k) c.series.push_back(std::move(s));
    return c;
}

int cmd_gen_csbm(const Globals& g, const DataFlags& d, double phi) {
    const auto s = generate_phi(d.n, d.f, d.d, phi, d.epsilon, stream_seed(g.seed, SeedStream::dataset));
    const auto manifest = save_bundle(s, g.out_dir);
    const auto h = homophily_index(s.graph, s.labels);
    std::cout << "bundle: " << manifest.parent_path().string() << '\n'
              << "lambda: " << s.spec.lambda << "  mu: " << s.spec.mu << '\n'
              << "H(G): " << h.value << " (" << h.skipped_nodes << " isolated nodes skipped)\n"
              << "mean degree: " << mean_degree(s.graph) << '\n';
    return 0;
}

int cmd_train(const Globals& g, const std::string& data, const ModelFlags& mf, const TrainFlags& tf,
              const std::string& regime_name, std::size_t runs, bool svg_out) {
    const auto b = load_bundle(data);
    const auto graph = add_self_loops_and_normalize(b.graph);
    const auto regime = regime_from(regime_name);
    const auto mc = mf.config();
    const auto recs = run_repeated(mc, tf.config(), graph, b.features, b.labels, regime, runs, g.seed, g.threads);
    const double phi = bundle_phi(b);

    std::vector<SweepRow> rows;
    std::vector<double> acc;
    std::vector<std::vector<double>> gammas;
    std::vector<std::vector<GammaSnapshot>> traj;
    for (std::size_t r = 0; r < recs.size(); ++r) {
        const auto& rec = recs[r];
        rows.push_back({phi, to_string(mc.kind), regime, r, stream_seed(g.seed, SeedStream::init, r),
                        rec.test_accuracy, rec.epochs_run, rec.best_val_loss, rec.failed, rec.gamma_best});
        if (rec.failed) {
            std::cerr << "run " << r << " failed: " << rec.failure << '\n';
            continue;
        }
        acc.push_back(rec.test_accuracy);
        gammas.push_back(rec.gamma_best);
        traj.push_back(rec.trajectory);
        save_checkpoint(rec.best_model, out_path(g, "checkpoints/run_" + std::to_string(r) + ".gprg"));
    }
    {
        auto out = open_output(out_path(g, "results.csv"));
        write_results_csv(out, rows);
    }
    const auto bands = gamma_bands(traj);
    {
        auto out = open_output(out_path(g, "gamma_trajectory.csv"));
        write_gamma_csv(out, bands);
    }
    const auto by_k = gamma_by_k(gammas, to_string(mc.kind));
    write_gamma_by_k_csv(out_path(g, "gamma.csv"), by_k);
    if (svg_out) {
        write_svg(out_path(g, "gamma.svg"), svg::Chart{"learned GPR weights", "k", "gamma_k", {by_k}});
        write_svg(out_path(g, "gamma_trajectory.svg"), gamma_trajectory_chart(bands, "GPR weights during training"));
    }
    if (acc.empty()) {
        std::cerr << "error: every run failed\n";
        return 1;
    }
    const auto a = aggregate(acc);
    std::cout << "model " << to_string(mc.kind) << ", " << a.count << '/' << runs << " runs: test accuracy "
              << 100.0 * a.mean << " +- " << 100.0 * a.ci95 << " %\n";
    return 0;
}

int cmd_sweep(const Globals& g, const DataFlags& d, const std::vector<double>& phis,
              const std::vector<std::string>& models, const ModelFlags& mf, const TrainFlags& tf,
              const std::string& regime_name, std::size_t runs, bool svg_out) {
    std::vector<ModelConfig> cfgs;
    for (const auto& name : models) {
        auto f = mf;
        f.model = name;
        cfgs.push_back(f.config());
    }
    const SweepBase base{d.n, d.f, d.d, d.epsilon, g.seed};
    const auto r = run_phi_sweep(phis, regime_from(regime_name), cfgs, runs, base, tf.config(), g.threads);
    {
        auto out = open_output(out_path(g, "results.csv"));
        write_results_csv(out, r.rows);
    }
    {
        auto out = open_output(out_path(g, "aggregates.csv"));
        write_aggregates_csv(out, r.aggregates);
    }
    std::cout << "phi,model,mean_acc,ci95,runs,failed\n";
    for (const auto& a : r.aggregates) {
        std::cout << a.phi << ',' << a.model << ',' << a.mean_acc << ',' << a.ci95 << ',' << a.runs << ','
                  << a.failed << '\n';
    }
    if (svg_out) {
        svg::Chart c{"accuracy across phi", "phi", "test accuracy", {}};
        for (const auto& name : models) {
            svg::Series s;
            s.label = name;
            for (const auto& a : r.aggregates) {
                if (a.model != name) continue;
                s.x.push_back(a.phi);
                s.y.push_back(a.mean_acc);
                s.lo.push_back(a.mean_acc - a.ci95);
                s.hi.push_back(a.mean_acc + a.ci95);
            }
            c.series.push_back(std::move(s));
        }
        write_svg(out_path(g, "accuracy.svg"), c);
    }
    return 0;
}

int cmd_spectrum(const Globals& g, const std::string& data, const std::string& gamma_text,
                 const std::string& checkpoint, std::size_t K) {
    const auto b = load_bundle(data);
    const auto graph = add_self_loops_and_normalize(b.graph);
    std::vector<double> gamma;
    if (!checkpoint.empty()) {
        gamma = load_checkpoint(checkpoint).params.gamma;
    } else {
        Rng rng(stream_seed(g.seed, SeedStream::init));
        gamma = make_gamma(GammaScheme::parse(gamma_text), K, rng);
    }
    const auto lambdas = graph_spectrum(graph);
    const auto resp = filter_response(gamma, lambdas);
    {
        auto out = open_output(out_path(g, "spectrum.csv"));
        write_spectrum_csv(out, resp);
    }
    std::cout << "wrote " << out_path(g, "spectrum.csv").string() << '\n';
    if (is_connected(graph)) {
        const auto c = classify_filter(gamma, lambdas);
        std::cout << "filter: " << to_string(c.kind) << "  max ratio: " << c.max_ratio
                  << "  ratio at most negative eigenvalue: " << c.ratio_at_min << '\n';
    } else {
        std::cout << "graph is disconnected; filter not classified\n";
    }
    return 0;
}

int cmd_oversmooth(const Globals& g, const std::string& data, const DataFlags& d, double phi, const ModelFlags& mf,
                   const TrainFlags& tf, const std::string& regime_name, std::size_t runs, bool svg_out) {
    DatasetBundle b;
    if (!data.empty()) {
        b = load_bundle(data);
    } else {
        auto s = generate_phi(d.n, d.f, d.d, phi, d.epsilon, stream_seed(g.seed, SeedStream::dataset));
        b = DatasetBundle{std::move(s.graph), std::move(s.features), std::move(s.labels), "csbm", std::nullopt};
    }
    const auto graph = add_self_loops_and_normalize(b.graph);
    auto mc = mf.config();
    mc.kind = ModelKind::gprgnn;
    const auto recs =
        run_repeated(mc, tf.config(), graph, b.features, b.labels, regime_from(regime_name), runs, g.seed, g.threads);

    std::size_t flagged = 0, reduced = 0, ok = 0;
    std::vector<double> acc0, acc;
    std::vector<std::vector<GammaSnapshot>> traj;
    for (const auto& rec : recs) {
        if (rec.failed) continue;
        ++ok;
        flagged += rec.epoch0_oversmoothing.oversmoothed;
        reduced += std::abs(rec.gamma_best.back()) < std::abs(rec.gamma_initial.back());
        acc0.push_back(rec.epoch0_test_accuracy);
        acc.push_back(rec.test_accuracy);
        traj.push_back(rec.trajectory);
    }
    const auto bands = gamma_bands(traj);
    {
        auto out = open_output(out_path(g, "gamma_trajectory.csv"));
        write_gamma_csv(out, bands);
    }
    std::cout << "wrote " << out_path(g, "gamma_trajectory.csv").string() << '\n';
    if (svg_out) write_svg(out_path(g, "gamma_trajectory.svg"), gamma_trajectory_chart(bands, "GPR weights"));
    if (ok == 0) {
        std::cerr << "error: every run failed\n";
        return 1;
    }
    const auto a0 = aggregate(acc0), a1 = aggregate(acc);
    std::cout << "over-smoothed at epoch 0: " << flagged << '/' << ok << '\n'
              << "test accuracy at epoch 0: " << 100.0 * a0.mean << " +- " << 100.0 * a0.ci95 << " %\n"
              << "test accuracy at best epoch: " << 100.0 * a1.mean << " +- " << 100.0 * a1.ci95 << " %\n"
              << "|gamma_K| reduced: " << reduced << '/' << ok << '\n';
    return 0;
}

int cmd_export_gamma(const Globals& g, const std::vector<std::string>& checkpoints, bool svg_out) {
    std::vector<std::vector<double>> gammas;
    for (const auto& p : checkpoints) {
        gammas.push_back(load_checkpoint(p).params.gamma);
        if (gammas.back().size() != gammas.front().size()) {
            throw ConfigError(p + ": checkpoints have different numbers of propagation steps");
        }
    }
    const auto s = gamma_by_k(gammas, "gamma");
    write_gamma_by_k_csv(out_path(g, "gamma.csv"), s);
    if (svg_out) write_svg(out_path(g, "gamma.svg"), svg::Chart{"GPR weights", "k", "gamma_k", {s}});
    return 0;
}

int cmd_convert(const Globals& g, const std::string& edges, const std::string& features, const std::string& labels,
                const std::string& source) {
    const auto manifest = convert_external(edges, features, labels, g.out_dir, source);
    const auto b = load_bundle(manifest.parent_path());
    std::cout << "bundle: " << manifest.parent_path().string() << "  n=" << b.graph.num_nodes()
              << " f=" << b.features.cols() << " classes=" << b.labels.num_classes << '\n';
    return 0;
}

std::vector<double> default_phis() {
    std::vector<double> p;
    for (int i = -4; i <= 4; ++i) p.push_back(i / 4.0);
    return p;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"GPR-GNN experiments on contextual stochastic block models", "gprlab"};
    app.option_defaults()->always_capture_default();
    app.config_formatter(std::make_shared<JsonConfig>());
    app.set_config("--config", "", "JSON file with option values; command-line flags take precedence");
    app.require_subcommand(1);
    app.fallthrough();

    Globals g;
    const char* env_out = std::getenv("GPRLAB_OUT");
    g.out_dir = env_out && *env_out ? env_out : "gprlab_out";
    app.add_option("--seed", g.seed, "Base seed; streams are derived by fixed offsets");
    app.add_option("--threads", g.threads, "Worker threads for independent runs")->check(CLI::PositiveNumber);
    app.add_option("--out-dir", g.out_dir, "Output directory (default from GPRLAB_OUT)");

    DataFlags data;
    ModelFlags model;
    TrainFlags train;
    double phi = 0.0;
    std::string regime = "dense";
    std::size_t runs = 10;
    bool svg_out = false;
    std::string bundle;

    auto* gen = app.add_subcommand("gen-csbm", "Sample a cSBM graph and write it as a bundle");
    gen->add_option("--phi", phi, "Topology versus feature weight")->check(CLI::Range(-1.0, 1.0));
    add_data_flags(gen, data);

    auto* tr = app.add_subcommand("train", "Train a model on a bundle over several seeds");
    tr->add_option("--data", bundle, "Bundle directory")->required()->check(CLI::ExistingDirectory);
    tr->add_option("--regime", regime, "Split regime")->check(CLI::IsMember({"sparse", "dense"}));
    tr->add_option("--runs", runs, "Independent runs")->check(CLI::PositiveNumber);
    tr->add_flag("--svg", svg_out, "Also write SVG charts");
    add_model_flags(tr, model);
    add_train_flags(tr, train);

    std::vector<double> phis = default_phis();
    std::vector<std::string> models{"gprgnn", "appnp", "mlp", "sgc"};
    auto* sw = app.add_subcommand("sweep-phi", "Accuracy of several models across cSBM phi values");
    sw->add_option("--phis", phis, "Phi values")->delimiter(',')->check(CLI::Range(-1.0, 1.0));
    sw->add_option("--models", models, "Models to compare")->delimiter(',')->check(CLI::IsMember(kModels));
    sw->add_option("--regime", regime, "Split regime")->check(CLI::IsMember({"sparse", "dense"}));
    sw->add_option("--runs", runs, "Runs per phi and model")->check(CLI::Range(std::size_t{2}, std::size_t{100000}));
    sw->add_flag("--svg", svg_out, "Also write an SVG chart");
    add_data_flags(sw, data);
    add_model_flags(sw, model);
    add_train_flags(sw, train);

    std::string gamma_text = "ppr:0.1";
    std::string checkpoint;
    std::size_t spec_K = 10;
    auto* sp = app.add_subcommand("spectrum", "Frequency response of a GPR filter on a bundle's graph");
    sp->add_option("--data", bundle, "Bundle directory")->required()->check(CLI::ExistingDirectory);
    auto* gopt = sp->add_option("--gamma", gamma_text, "GPR weight scheme");
    sp->add_option("--checkpoint", checkpoint, "Take the weights from a checkpoint")
        ->check(CLI::ExistingFile)
        ->excludes(gopt);
    sp->add_option("--K", spec_K, "Propagation steps for --gamma");

    auto* os = app.add_subcommand("oversmooth", "Train from Delta(K) weights and track over-smoothing");
    os->add_option("--data", bundle, "Bundle directory (default: sample a cSBM)")->check(CLI::ExistingDirectory);
    os->add_option("--phi", phi, "Phi of the sampled cSBM")->check(CLI::Range(-1.0, 1.0));
    os->add_option("--regime", regime, "Split regime")->check(CLI::IsMember({"sparse", "dense"}));
    os->add_option("--runs", runs, "Independent runs")->check(CLI::PositiveNumber);
    os->add_flag("--svg", svg_out, "Also write an SVG chart");
    add_data_flags(os, data);
    ModelFlags os_model;
    os_model.init = "delta:K";
    add_model_flags(os, os_model);
    add_train_flags(os, train);

    std::vector<std::string> checkpoints;
    auto* ex = app.add_subcommand("export-gamma", "Write the GPR weights of checkpoints as CSV");
    ex->add_option("checkpoints", checkpoints, "Checkpoint files")->required()->check(CLI::ExistingFile);
    ex->add_flag("--svg", svg_out, "Also write an SVG chart");

    std::string edges, features, labels, source = "external";
    auto* cv = app.add_subcommand("convert", "Convert an edge list, feature matrix and labels to a bundle");
    cv->add_option("--edges", edges, "Edge list, one 'i j' pair per line")->required()->check(CLI::ExistingFile);
    cv->add_option("--features", features, "Feature matrix, one row per node")->required()->check(CLI::ExistingFile);
    cv->add_option("--labels", labels, "One integer label per line")->required()->check(CLI::ExistingFile);
    cv->add_option("--source", source, "Name recorded in the manifest");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*gen) return cmd_gen_csbm(g, data, phi);
        if (*tr) return cmd_train(g, bundle, model, train, regime, runs, svg_out);
        if (*sw) return cmd_sweep(g, data, phis, models, model, train, regime, runs, svg_out);
        if (*sp) return cmd_spectrum(g, bundle, gamma_text, checkpoint, spec_K);
        if (*os) return cmd_oversmooth(g, bundle, data, phi, os_model, train, regime, runs, svg_out);
        if (*ex) return cmd_export_gamma(g, checkpoints, svg_out);
        if (*cv) return cmd_convert(g, edges, features, labels, source);
    } catch (const ConfigError& e) {
        std::cerr << "usage error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
