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

#include <sstream>

#include "gprlab/report.hpp"
#include "gprlab/svg.hpp"

namespace gprlab {
namespace {

TEST(Report, ResultsCsv) {
    std::vector<SweepRow> rows(1);
    rows[0].phi = -0.25;
    rows[0].model = "gprgnn";
    rows[0].regime = SplitRegime::dense;
    rows[0].run = 2;
    rows[0].seed = 9;
    rows[0].accuracy = 0.75;
    rows[0].epochs = 10;
    rows[0].best_val_loss = 0.5;
    std::ostringstream out;
    write_results_csv(out, rows);
    EXPECT_EQ(out.str(), "phi,model,regime,run,seed,accuracy,epochs,best_val_loss\n-0.25,gprgnn,dense,2,9,0.75,10,0.5\n");
}

TEST(Report, FmtRoundTrips) {
    for (double v : {0.1, 1.0 / 3.0, -2.5e-17, 123456.789}) EXPECT_EQ(std::stod(fmt(v)), v);
}

TEST(Report, GammaBands) {
    std::vector<std::vector<GammaSnapshot>> traj{{{0, {1.0, 0.0}}, {10, {0.5, 0.2}}},
                                                 {{0, {1.0, 0.0}}, {10, {0.7, 0.4}}},
                                                 {{0, {1.0, 0.0}}}};
    const auto bands = gamma_bands(traj);
    ASSERT_EQ(bands.size(), 4u);
    EXPECT_EQ(bands[0].runs, 3u);
    EXPECT_EQ(bands[0].ci_low, 1.0);
    EXPECT_EQ(bands[2].epoch, 10u);
    EXPECT_EQ(bands[2].runs, 2u);
    EXPECT_NEAR(bands[2].mean, 0.6, 1e-15);
    EXPECT_LT(bands[2].ci_low, 0.6);
    std::ostringstream out;
    write_gamma_csv(out, bands);
    EXPECT_EQ(out.str().substr(0, out.str().find('\n')), "epoch,k,gamma,ci_low,ci_high");
}

TEST(Svg, RendersDeterministically) {
    svg::Chart c;
    c.title = "a < b & c";
    c.x_label = "k";
    c.y_label = "gamma";
    c.series.push_back({"run", {0, 1, 2}, {0.5, -0.25, 0.1}, {0.4, -0.3, 0.0}, {0.6, -0.2, 0.2}});
    const auto a = svg::render(c);
    EXPECT_EQ(a, svg::render(c));
    EXPECT_EQ(a.rfind("<svg", 0), 0u);
    EXPECT_NE(a.find("</svg>"), std::string::npos);
    EXPECT_NE(a.find("a &lt; b &amp; c"), std::string::npos);
    EXPECT_NE(a.find("<polygon"), std::string::npos);
}

TEST(Svg, EmptyChartStillValid) {
    svg::Chart c;
    const auto a = svg::render(c);
    EXPECT_NE(a.find("</svg>"), std::string::npos);
}

} // namespace
} // namespace gprlab
