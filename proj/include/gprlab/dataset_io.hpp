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

#include <zlib.h>

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "gprlab/csbm.hpp"
#include "gprlab/dense_matrix.hpp"
#include "gprlab/error.hpp"
#include "gprlab/graph.hpp"
#include "gprlab/model.hpp"

namespace gprlab {

static_assert(std::endian::native == std::endian::little, "binary formats assume a little-endian host");

namespace io_detail {

namespace fs = std::filesystem;

inline std::string read_file(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) throw IoError("cannot open " + p.string() + " for reading");
    std::ostringstream ss;
    ss << in.rdbuf();
    if (in.bad()) throw IoError("read failed: " + p.string());
    return std::move(ss).str();
}

inline void write_file(const fs::path& p, std::string_view bytes) {
    if (p.has_parent_path()) {
        std::error_code ec;
        fs::create_directories(p.parent_path(), ec);
        if (ec) throw IoError("cannot create " + p.parent_path().string() + ": " + ec.message());
    }
    std::ofstream out(p, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open " + p.string() + " for writing");
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    out.flush();
    if (!out) throw IoError("write failed: " + p.string());
}

inline std::string crc32_hex(std::string_view bytes) {
    uLong c = crc32(0L, Z_NULL, 0);
    // zlib takes uInt lengths; feed large buffers in chunks.
    std::size_t off = 0;
    while (off < bytes.size()) {
        const auto chunk = static_cast<uInt>(std::min<std::size_t>(bytes.size() - off, 1u << 30));
        c = crc32(c, reinterpret_cast<const Bytef*>(bytes.data() + off), chunk);
        off += chunk;
    }
    std::ostringstream ss;
    ss << std::hex << std::setw(8) << std::setfill('0') << static_cast<std::uint32_t>(c);
    return ss.str();
}

template <class T>
void put(std::string& out, T v) {
    char buf[sizeof(T)];
    std::memcpy(buf, &v, sizeof(T));
    out.append(buf, sizeof(T));
}

/// Bounds-checked little-endian reader over an in-memory buffer.
class Reader {
public:
    Reader(std::string_view data, std::string what) : data_(data), what_(std::move(what)) {}

    template <class T>
    T get() {
        if (data_.size() - pos_ < sizeof(T)) {
            throw IoError(what_ + ": truncated at byte " + std::to_string(pos_));
        }
        T v;
        std::memcpy(&v, data_.data() + pos_, sizeof(T));
        pos_ += sizeof(T);
        return v;
    }

    void get_doubles(std::span<double> out) {
        const std::size_t bytes = out.size() * sizeof(double);
        if (out.size() > (data_.size() - pos_) / sizeof(double)) {
            throw IoError(what_ + ": truncated at byte " + std::to_string(pos_));
        }
        std::memcpy(out.data(), data_.data() + pos_, bytes);
        pos_ += bytes;
    }

    std::size_t remaining() const { return data_.size() - pos_; }

private:
    std::string_view data_;
    std::string what_;
    std::size_t pos_ = 0;
};

inline std::string encode_features(const DenseMatrix& x) {
    if (x.rows() > UINT32_MAX || x.cols() > UINT32_MAX) throw IoError("features: dimensions exceed u32");
    std::string out;
    out.reserve(8 + x.size() * sizeof(double));
    put<std::uint32_t>(out, static_cast<std::uint32_t>(x.rows()));
    put<std::uint32_t>(out, static_cast<std::uint32_t>(x.cols()));
    out.append(reinterpret_cast<const char*>(x.values().data()), x.size() * sizeof(double));
    return out;
}

inline DenseMatrix decode_features(std::string_view bytes, const std::string& what) {
    Reader r(bytes, what);
    const auto rows = r.get<std::uint32_t>();
    const auto cols = r.get<std::uint32_t>();
    const std::size_t count = static_cast<std::size_t>(rows) * cols;
    if (r.remaining() != count * sizeof(double)) {
        throw IoError(what + ": payload holds " + std::to_string(r.remaining()) + " bytes, header implies " +
                      std::to_string(count * sizeof(double)));
    }
    std::vector<double> buf(count);
    r.get_doubles(buf);
    return DenseMatrix::from_buffer(rows, cols, std::move(buf));
}

inline std::size_t parse_index(const std::string& tok, const std::string& where) {
    std::size_t used = 0;
    unsigned long long v = 0;
    try {
        if (tok.empty() || tok[0] == '-') throw std::invalid_argument("negative");
        v = std::stoull(tok, &used);
    } catch (const std::exception&) {
        throw IoError(where + ": expected a non-negative integer, got '" + tok + "'");
    }
    if (used != tok.size()) throw IoError(where + ": expected a non-negative integer, got '" + tok + "'");
    return static_cast<std::size_t>(v);
}

inline std::string strip_comment(const std::string& line) {
    const auto hash = line.find('#');
    return hash == std::string::npos ? line : line.substr(0, hash);
}

inline std::vector<Edge> parse_edges(std::string_view text, const std::string& what) {
    std::vector<Edge> edges;
    std::istringstream in{std::string(text)};
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        std::istringstream ls(strip_comment(line));
        std::string a, b, extra;
        if (!(ls >> a)) continue;
        const std::string where = what + ":" + std::to_string(lineno);
        if (!(ls >> b)) throw IoError(where + ": expected two node ids");
        if (ls >> extra) throw IoError(where + ": unexpected trailing field '" + extra + "'");
        edges.emplace_back(parse_index(a, where), parse_index(b, where));
    }
    return edges;
}

inline std::vector<std::size_t> parse_labels(std::string_view text, const std::string& what) {
    std::vector<std::size_t> labels;
    std::istringstream in{std::string(text)};
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        std::istringstream ls(strip_comment(line));
        std::string tok, extra;
        if (!(ls >> tok)) continue;
        const std::string where = what + ":" + std::to_string(lineno);
        if (ls >> extra) throw IoError(where + ": expected one label per line");
        labels.push_back(parse_index(tok, where));
    }
    return labels;
}

inline void mismatch(const std::string& field, std::size_t manifest, const std::string& file, std::size_t actual) {
    throw IoError("manifest field '" + field + "' = " + std::to_string(manifest) + " does not match " + file +
                  " (" + std::to_string(actual) + ")");
}

} // namespace io_detail

inline constexpr const char* kManifestFile = "manifest.json";
inline constexpr const char* kEdgesFile = "edges.tsv";
inline constexpr const char* kFeaturesFile = "features.bin";
inline constexpr const char* kLabelsFile = "labels.txt";

struct DatasetBundle {
    /// Un-normalized; callers add self-loops and normalize.
    SparseGraph graph;
    DenseMatrix features;
    LabelVector labels;
    std::string source;
    std::optional<nlohmann::json> generator_spec;
};

/**
 * Writes manifest.json, edges.tsv, features.bin and labels.txt into dir
 * (created if needed) and returns the manifest path.
 */
inline std::filesystem::path save_bundle(const SparseGraph& g, const DenseMatrix& x, const LabelVector& y,
                                         const std::filesystem::path& dir, const std::string& source,
                                         const std::optional<nlohmann::json>& generator_spec = std::nullopt) {
    if (g.is_normalized()) throw PreconditionError("save_bundle: expects the raw (un-normalized) graph");
    if (x.rows() != g.num_nodes()) throw DimensionError("save_bundle: feature rows do not match node count");
    if (y.size() != g.num_nodes()) throw DimensionError("save_bundle: label count does not match node count");
    y.validate();
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());

    std::string edges;
    for (const auto& [i, j] : g.edges()) edges += std::to_string(i) + '\t' + std::to_string(j) + '\n';
    const std::string feats = io_detail::encode_features(x);
    std::string labels;
    for (auto l : y.labels) labels += std::to_string(l) + '\n';

    nlohmann::json m;
    m["n"] = g.num_nodes();
    m["f"] = x.cols();
    m["num_classes"] = y.num_classes;
    m["source"] = source;
    if (generator_spec) m["generator_spec"] = *generator_spec;
    m["checksums"] = {{kEdgesFile, io_detail::crc32_hex(edges)},
                      {kFeaturesFile, io_detail::crc32_hex(feats)},
                      {kLabelsFile, io_detail::crc32_hex(labels)}};

    io_detail::write_file(dir / kEdgesFile, edges);
    io_detail::write_file(dir / kFeaturesFile, feats);
    io_detail::write_file(dir / kLabelsFile, labels);
    const auto manifest = dir / kManifestFile;
    io_detail::write_file(manifest, m.dump(2) + "\n");
    return manifest;
}

inline nlohmann::json csbm_spec_json(const CsbmSpec& s) {
    return {{"generator", "csbm"}, {"n", s.n},         {"f", s.f},      {"d", s.d},
            {"lambda", s.lambda},  {"mu", s.mu},       {"seed", s.seed}};
}

inline std::filesystem::path save_bundle(const CsbmSample& s, const std::filesystem::path& dir) {
    return save_bundle(s.graph, s.features, s.labels, dir, "csbm", csbm_spec_json(s.spec));
}

/// Verifies every checksum, then parses and cross-checks against the manifest.
inline DatasetBundle load_bundle(const std::filesystem::path& dir) {
    using io_detail::mismatch;
    const auto mpath = dir / kManifestFile;
    nlohmann::json m;
    try {
        m = nlohmann::json::parse(io_detail::read_file(mpath));
    } catch (const nlohmann::json::exception& e) {
        throw IoError(mpath.string() + ": " + e.what());
    }
    auto field = [&](const char* key) -> std::size_t {
        if (!m.contains(key) || !m[key].is_number_unsigned()) {
            throw IoError(mpath.string() + ": missing or invalid field '" + key + "'");
        }
        return m[key].get<std::size_t>();
    };
    const auto n = field("n");
    const auto f = field("f");
    const auto C = field("num_classes");
    if (!m.contains("checksums") || !m["checksums"].is_object()) {
        throw IoError(mpath.string() + ": missing field 'checksums'");
    }

    std::string blobs[3];
    const char* names[3] = {kEdgesFile, kFeaturesFile, kLabelsFile};
    for (int i = 0; i < 3; ++i) {
        blobs[i] = io_detail::read_file(dir / names[i]);
        const auto& sums = m["checksums"];
        if (!sums.contains(names[i]) || !sums[names[i]].is_string()) {
            throw IoError(mpath.string() + ": no checksum recorded for " + names[i]);
        }
        const auto actual = io_detail::crc32_hex(blobs[i]);
        if (actual != sums[names[i]].get<std::string>()) {
            throw IoError(std::string("checksum mismatch for ") + names[i] + ": manifest " +
                          sums[names[i]].get<std::string>() + ", file " + actual);
        }
    }

    const auto edges = io_detail::parse_edges(blobs[0], (dir / kEdgesFile).string());
    auto x = io_detail::decode_features(blobs[1], (dir / kFeaturesFile).string());
    auto labels = io_detail::parse_labels(blobs[2], (dir / kLabelsFile).string());
    if (x.rows() != n) mismatch("n", n, "features.bin rows", x.rows());
    if (x.cols() != f) mismatch("f", f, "features.bin cols", x.cols());
    if (labels.size() != n) mismatch("n", n, "labels.txt line count", labels.size());
    for (const auto& [i, j] : edges) {
        if (i >= n || j >= n) mismatch("n", n, "edges.tsv node id", std::max(i, j));
    }
    for (auto l : labels) {
        if (l >= C) mismatch("num_classes", C, "labels.txt label", l);
    }

    DatasetBundle b;
    b.graph = build_graph(n, edges);
    b.features = std::move(x);
    b.labels = LabelVector{std::move(labels), C};
    b.source = m.value("source", std::string{});
    if (m.contains("generator_spec")) b.generator_spec = m["generator_spec"];
    return b;
}

/// Whitespace-separated edge list; '#' starts a comment.
inline std::vector<Edge> read_edge_list(const std::filesystem::path& p) {
    return io_detail::parse_edges(io_detail::read_file(p), p.string());
}

/// One label per line.
inline std::vector<std::size_t> read_labels(const std::filesystem::path& p) {
    return io_detail::parse_labels(io_detail::read_file(p), p.string());
}

/// Dense text matrix: one row per line, whitespace- or comma-separated.
inline DenseMatrix read_text_matrix(const std::filesystem::path& p) {
    std::istringstream in(io_detail::read_file(p));
    std::vector<double> data;
    std::size_t rows = 0, cols = 0;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        line = io_detail::strip_comment(line);
        for (char& c : line) {
            if (c == ',') c = ' ';
        }
        std::istringstream ls(line);
        std::size_t count = 0;
        std::string tok;
        while (ls >> tok) {
            try {
                std::size_t used = 0;
                data.push_back(std::stod(tok, &used));
                if (used != tok.size()) throw std::invalid_argument(tok);
            } catch (const std::exception&) {
                throw IoError(p.string() + ":" + std::to_string(lineno) + ": not a number: '" + tok + "'");
            }
            ++count;
        }
        if (count == 0) continue;
        if (rows == 0) cols = count;
        if (count != cols) {
            throw IoError(p.string() + ":" + std::to_string(lineno) + ": expected " + std::to_string(cols) +
                          " columns, got " + std::to_string(count));
        }
        ++rows;
    }
    return DenseMatrix::from_buffer(rows, cols, std::move(data));
}

/**
 * Converts an external dataset (edge list, text feature matrix, label file)
 * to a bundle. The node count is the number of labels. Class count is
 * max label + 1.
 */
inline std::filesystem::path convert_external(const std::filesystem::path& edges_path,
                                              const std::filesystem::path& features_path,
                                              const std::filesystem::path& labels_path,
                                              const std::filesystem::path& dir, const std::string& source) {
    auto labels = read_labels(labels_path);
    if (labels.empty()) throw IoError(labels_path.string() + ": no labels");
    const auto edges = read_edge_list(edges_path);
    auto x = read_text_matrix(features_path);
    if (x.rows() != labels.size()) {
        throw IoError(features_path.string() + ": " + std::to_string(x.rows()) + " rows but " +
                      std::to_string(labels.size()) + " labels");
    }
    std::size_t C = 0;
    for (auto l : labels) C = std::max(C, l + 1);
    const auto n = labels.size();
    const auto g = build_graph(n, edges);
    return save_bundle(g, x, LabelVector{std::move(labels), std::max<std::size_t>(C, 2)}, dir, source);
}

inline constexpr std::uint32_t kCheckpointVersion = 1;

inline std::string encode_checkpoint(const GprModel& m) {
    m.validate();
    std::string out = "GPRG";
    io_detail::put<std::uint32_t>(out, kCheckpointVersion);
    io_detail::put<std::uint32_t>(out, m.extractor == Extractor::mlp ? 0u : 1u);
    io_detail::put<double>(out, m.dropout_nn);
    io_detail::put<double>(out, m.dropout_gpr);
    io_detail::put<double>(out, m.eta);
    io_detail::put<std::uint8_t>(out, m.gamma_trainable ? 1 : 0);
    auto put_vec = [&](std::span<const double> v) {
        io_detail::put<std::uint64_t>(out, v.size());
        out.append(reinterpret_cast<const char*>(v.data()), v.size() * sizeof(double));
    };
    auto put_mat = [&](const DenseMatrix& w) {
        io_detail::put<std::uint64_t>(out, w.rows());
        io_detail::put<std::uint64_t>(out, w.cols());
        out.append(reinterpret_cast<const char*>(w.values().data()), w.size() * sizeof(double));
    };
    put_vec(m.params.gamma);
    put_mat(m.params.w1);
    put_vec(m.params.b1);
    put_mat(m.params.w2);
    put_vec(m.params.b2);
    return out;
}

inline GprModel decode_checkpoint(std::string_view bytes, const std::string& what = "checkpoint") {
    if (bytes.size() < 4 || bytes.substr(0, 4) != "GPRG") throw IoError(what + ": bad magic, not a checkpoint");
    io_detail::Reader r(bytes.substr(4), what);
    const auto version = r.get<std::uint32_t>();
    if (version != kCheckpointVersion) {
        throw IoError(what + ": unsupported format version " + std::to_string(version) + " (expected " +
                      std::to_string(kCheckpointVersion) + ")");
    }
    GprModel m;
    const auto ext = r.get<std::uint32_t>();
    if (ext > 1) throw IoError(what + ": unknown extractor code " + std::to_string(ext));
    m.extractor = ext == 0 ? Extractor::mlp : Extractor::linear;
    m.dropout_nn = r.get<double>();
    m.dropout_gpr = r.get<double>();
    m.eta = r.get<double>();
    m.gamma_trainable = r.get<std::uint8_t>() != 0;
    auto get_count = [&](std::uint64_t count) {
        if (count > r.remaining() / sizeof(double)) throw IoError(what + ": truncated or corrupt length field");
        return static_cast<std::size_t>(count);
    };
    auto get_vec = [&] {
        std::vector<double> v(get_count(r.get<std::uint64_t>()));
        r.get_doubles(v);
        return v;
    };
    auto get_mat = [&] {
        const auto rows = r.get<std::uint64_t>();
        const auto cols = r.get<std::uint64_t>();
        if (cols != 0 && rows > UINT64_MAX / cols) throw IoError(what + ": corrupt matrix dimensions");
        std::vector<double> v(get_count(rows * cols));
        r.get_doubles(v);
        return DenseMatrix::from_buffer(static_cast<std::size_t>(rows), static_cast<std::size_t>(cols), std::move(v));
    };
    m.params.gamma = get_vec();
    m.params.w1 = get_mat();
    m.params.b1 = get_vec();
    m.params.w2 = get_mat();
    m.params.b2 = get_vec();
    if (r.remaining() != 0) throw IoError(what + ": trailing bytes after checkpoint payload");
    try {
        m.validate();
    } catch (const Error& e) {
        throw IoError(what + ": inconsistent checkpoint: " + e.what());
    }
    return m;
}

inline void save_checkpoint(const GprModel& m, const std::filesystem::path& p) {
    io_detail::write_file(p, encode_checkpoint(m));
}

inline GprModel load_checkpoint(const std::filesystem::path& p) {
    return decode_checkpoint(io_detail::read_file(p), p.string());
}

} // namespace gprlab
