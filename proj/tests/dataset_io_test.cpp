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

#include <cstring>
#include <filesystem>
#include <fstream>

#include "gprlab/csbm.hpp"
#include "gprlab/dataset_io.hpp"
#include "gprlab/experiment.hpp"
#include "test_support.hpp"

namespace gprlab {
namespace {

namespace fs = std::filesystem;

class TempDir : public ::testing::Test {
protected:
    void SetUp() override {
        const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
        dir_ = fs::temp_directory_path() / (std::string("gprlab_io_") + info->name());
        fs::remove_all(dir_);
        fs::create_directories(dir_);
    }
    void TearDown() override { fs::remove_all(dir_); }
    fs::path dir_;
};

bool same_bits(const DenseMatrix& a, const DenseMatrix& b) {
    return a.rows() == b.rows() && a.cols() == b.cols() &&
           std::memcmp(a.values().data(), b.values().data(), a.values().size() * sizeof(double)) == 0;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), {}};
}

void spit(const fs::path& p, const std::string& s) {
    std::ofstream out(p, std::ios::binary | std::ios::trunc);
    out << s;
}

using BundleTest = TempDir;

TEST_F(BundleTest, CsbmRoundTripIsExact) {
    const auto s = generate_phi(200, 30, 10.0, -0.3, 3.25, 4);
    save_bundle(s, dir_);
    const auto b = load_bundle(dir_);
    EXPECT_TRUE(same_bits(b.features, s.features));
    EXPECT_EQ(b.graph.edges(), s.graph.edges());
    EXPECT_EQ(b.labels.labels, s.labels.labels);
    EXPECT_EQ(b.source, "csbm");
    ASSERT_TRUE(b.generator_spec.has_value());
    EXPECT_EQ((*b.generator_spec)["seed"].get<std::uint64_t>(), 4u);
    EXPECT_DOUBLE_EQ((*b.generator_spec)["lambda"].get<double>(), s.spec.lambda);
}

TEST_F(BundleTest, EdgeCases) {
    DenseMatrix x(3, 2);
    x(0, 0) = -1.5;
    x(2, 1) = -0.0;
    x(1, 1) = 1e-300;
    save_bundle(build_graph(3, {}), x, LabelVector{{0, 1, 0}, 2}, dir_ / "empty", "hand");
    const auto b = load_bundle(dir_ / "empty");
    EXPECT_EQ(b.graph.edges().size(), 0u);
    EXPECT_TRUE(same_bits(b.features, x));
    EXPECT_FALSE(b.generator_spec.has_value());

    save_bundle(build_graph(1, {}), DenseMatrix(1, 4, 2.0), LabelVector{{0}, 2}, dir_ / "single", "hand");
    EXPECT_EQ(load_bundle(dir_ / "single").graph.num_nodes(), 1u);
}

TEST_F(BundleTest, RejectsNormalizedGraph) {
    const auto g = add_self_loops_and_normalize(build_graph(2, {{0, 1}}));
    EXPECT_THROW(save_bundle(g, DenseMatrix(2, 1), LabelVector{{0, 1}, 2}, dir_, "x"), PreconditionError);
}

TEST_F(BundleTest, ManifestMismatchNamesField) {
    const auto s = generate_phi(50, 8, 5.0, 0.0, 1.0, 1);
    save_bundle(s, dir_);
    auto m = nlohmann::json::parse(slurp(dir_ / kManifestFile));
    m["n"] = 51;
    spit(dir_ / kManifestFile, m.dump());
    try {
        load_bundle(dir_);
        FAIL() << "expected IoError";
    } catch (const IoError& e) {
        EXPECT_NE(std::string(e.what()).find("'n'"), std::string::npos) << e.what();
    }
}

TEST_F(BundleTest, ChecksumCatchesCorruptionBeforeParsing) {
    const auto s = generate_phi(50, 8, 5.0, 0.0, 1.0, 1);
    save_bundle(s, dir_);
    auto labels = slurp(dir_ / kLabelsFile);
    labels[0] = labels[0] == '0' ? 'x' : '0';
    spit(dir_ / kLabelsFile, labels);
    try {
        load_bundle(dir_);
        FAIL() << "expected IoError";
    } catch (const IoError& e) {
        EXPECT_NE(std::string(e.what()).find("checksum mismatch for labels.txt"), std::string::npos) << e.what();
    }
}

TEST_F(BundleTest, MissingFileIsIoError) {
    EXPECT_THROW(load_bundle(dir_ / "nowhere"), IoError);
}

TEST_F(BundleTest, ConvertExternal) {
    spit(dir_ / "e.txt", "# comment\n0 1\n1 2  # trailing\n\n2 0\n");
    spit(dir_ / "x.csv", "1,2\n3,4\n-5,6.5\n");
    spit(dir_ / "y.txt", "0\n1\n1\n");
    convert_external(dir_ / "e.txt", dir_ / "x.csv", dir_ / "y.txt", dir_ / "out", "toy");
    const auto b = load_bundle(dir_ / "out");
    EXPECT_EQ(b.graph.edges().size(), 3u);
    EXPECT_EQ(b.features(2, 0), -5.0);
    EXPECT_EQ(b.features(2, 1), 6.5);
    EXPECT_EQ(b.labels.num_classes, 2u);
    EXPECT_EQ(b.source, "toy");

    spit(dir_ / "bad.txt", "0 1\n1 z\n");
    EXPECT_THROW(read_edge_list(dir_ / "bad.txt"), IoError);
    spit(dir_ / "ragged.txt", "1 2\n3\n");
    EXPECT_THROW(read_text_matrix(dir_ / "ragged.txt"), IoError);
}

using CheckpointTest = TempDir;

GprModel trained_like_model() {
    ModelConfig mc;
    auto m = make_model(mc, 12, 3, 7);
    Rng rng(3);
    for (double& v : m.params.gamma) v = uniform01(rng) - 0.5;
    m.eta = 1.7;
    return m;
}

TEST_F(CheckpointTest, RoundTripGivesIdenticalForward) {
    const auto m = trained_like_model();
    save_checkpoint(m, dir_ / "m.ckpt");
    const auto r = load_checkpoint(dir_ / "m.ckpt");
    Rng rng(5);
    const auto g = add_self_loops_and_normalize(build_graph(30, testing::random_edges(30, 0.2, rng)));
    const auto x = testing::random_matrix(30, 12, rng);
    EXPECT_TRUE(same_bits(forward(m, g, x, false).z, forward(r, g, x, false).z));
    EXPECT_EQ(r.params.gamma, m.params.gamma);
    EXPECT_EQ(r.eta, m.eta);
    EXPECT_EQ(r.gamma_trainable, m.gamma_trainable);
    EXPECT_EQ(r.extractor, m.extractor);
}

TEST_F(CheckpointTest, RejectsDamagedFiles) {
    const auto bytes = encode_checkpoint(trained_like_model());
    EXPECT_THROW(decode_checkpoint(bytes.substr(0, bytes.size() - 3)), IoError);
    EXPECT_THROW(decode_checkpoint(bytes + "x"), IoError);
    auto magic = bytes;
    magic[0] = 'X';
    EXPECT_THROW(decode_checkpoint(magic), IoError);
    auto version = bytes;
    version[4] = static_cast<char>(kCheckpointVersion + 1);
    try {
        decode_checkpoint(version);
        FAIL() << "expected IoError";
    } catch (const IoError& e) {
        EXPECT_NE(std::string(e.what()).find("version"), std::string::npos) << e.what();
    }
    EXPECT_THROW(load_checkpoint(dir_ / "absent.ckpt"), IoError);
}

} // namespace
} // namespace gprlab
