// SPDX-License-Identifier: Apache-2.0
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <cmath>
#include <random>

#include <doctest.h>

#include "htte/embeddings.hpp"
#include "htte/errors.hpp"
#include "helpers.hpp"

using namespace htte;

namespace {

double unit(std::mt19937_64& g) { return static_cast<double>(g() >> 11) * 0x1.0p-53; }

double cosine(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
    return a.dot(b) / (a.norm() * b.norm());
}

double frobenius_sum(const EmbeddingSet& e) { return e.P.norm() + e.Q.norm(); }

}  // namespace

TEST_CASE("matrix cells hold per-window mean standardized travel times") {
    // Segment 1: reports 40 s and 60 s in the same window (mean 50, std 10).
    std::vector<TravelTimeReport> reports{
        {1, 1000.0, 40.0},
        {1, 1200.0, 60.0},
        {2, 4000.0, 30.0},
        {2, 90400.0, 34.0},  // next day, same time of day as the 4000 s report
    };
    auto net = test::make_net({
        {{{0, 0}, {400, 0}}, {2}},
        {{{400, 0}, {800, 0}}, {}},
    });
    SegmentStats stats = compute_segment_stats(reports, net);
    TravelTimeMatrix m = build_matrix(reports, stats);

    REQUIRE(m.segment_ids == std::vector<SegmentId>{1, 2});
    CHECK(m.first_window == 0);
    // Windows 0 (segment 1), 2 and 50 (segment 2) observed; count spans 0..50.
    CHECK(m.window_count == 51);
    REQUIRE(m.cells.size() == 3);
    CHECK(m.cells.at({0, 0}) == 0.0);  // mean of z(40) = -1 and z(60) = +1
    CHECK(m.cells.count({0, 1}) == 0);

    // Same time of day on consecutive days lands in distinct columns.
    CHECK(m.cells.count({1, 2}) == 1);
    CHECK(m.cells.count({1, 50}) == 1);
}

TEST_CASE("factorization fits a fully observed rank-1 matrix") {
    std::mt19937_64 g(7);
    const std::size_t n = 12, w = 18;
    TravelTimeMatrix m;
    m.window_count = w;
    std::vector<double> a(n), b(w);
    for (auto& v : a) v = 0.5 + unit(g);
    for (auto& v : b) v = 0.5 + unit(g);
    for (std::size_t i = 0; i < n; ++i) {
        m.segment_ids.push_back(static_cast<SegmentId>(i + 1));
        for (std::size_t j = 0; j < w; ++j) m.cells[{i, j}] = a[i] * b[j];
    }

    FactorizeConfig cfg;
    cfg.dim = 2;
    cfg.lr = 0.05;
    cfg.lambda = 1e-4;
    cfg.epochs = 2000;
    EmbeddingSet e = factorize(m, cfg);
    CHECK(std::sqrt(reconstruction_error(m, e)) < 0.05);
}

TEST_CASE("a single observed cell is reconstructed almost exactly") {
    TravelTimeMatrix m;
    m.segment_ids = {5};
    m.window_count = 1;
    m.cells[{0, 0}] = 0.7;

    FactorizeConfig cfg;
    cfg.dim = 1;
    cfg.lr = 0.1;
    cfg.lambda = 1e-5;
    cfg.epochs = 5000;
    EmbeddingSet e = factorize(m, cfg);
    CHECK(e.P(0, 0) * e.Q(0, 0) == doctest::Approx(0.7).epsilon(1e-3 / 0.7));
}

TEST_CASE("identical segments get nearly identical embeddings") {
    // 20 x 200: ten base patterns, each duplicated across two rows.
    std::mt19937_64 g(11);
    const std::size_t w = 200;
    TravelTimeMatrix m;
    m.window_count = w;
    std::vector<std::vector<double>> base(10, std::vector<double>(w));
    for (auto& row : base) {
        double phase = unit(g) * 6.28;
        double amp = 0.5 + unit(g);
        for (std::size_t j = 0; j < w; ++j) {
            row[j] = amp * std::sin(phase + 0.13 * static_cast<double>(j));
        }
    }
    for (std::size_t i = 0; i < 20; ++i) {
        m.segment_ids.push_back(static_cast<SegmentId>(i + 1));
        for (std::size_t j = 0; j < w; ++j) m.cells[{i, j}] = base[i / 2][j];
    }

    EmbeddingSet e = factorize(m, FactorizeConfig{});
    for (std::size_t pair = 0; pair < 10; ++pair) {
        auto i = static_cast<Eigen::Index>(2 * pair);
        CAPTURE(pair);
        CHECK(cosine(e.P.row(i).transpose(), e.P.row(i + 1).transpose()) > 0.95);
    }
}

TEST_CASE("epoch objective is non-increasing and training is deterministic") {
    std::mt19937_64 g(13);
    TravelTimeMatrix m;
    m.window_count = 30;
    for (std::size_t i = 0; i < 15; ++i) {
        m.segment_ids.push_back(static_cast<SegmentId>(i + 1));
        for (std::size_t j = 0; j < 30; ++j) {
            if (unit(g) < 0.4) m.cells[{i, j}] = 2.0 * unit(g) - 1.0;
        }
    }

    FactorizeConfig cfg;
    cfg.lr = 0.05;  // deliberately hot so the halving rule has work to do
    std::vector<double> trace;
    EmbeddingSet e1 = factorize(m, cfg, &trace);
    REQUIRE(trace.size() >= 2);
    for (std::size_t k = 1; k < trace.size(); ++k) {
        CHECK(trace[k] <= trace[k - 1]);
    }

    EmbeddingSet e2 = factorize(m, cfg);
    CHECK(e1.P == e2.P);
    CHECK(e1.Q == e2.Q);

    FactorizeConfig other = cfg;
    other.seed = 43;
    EmbeddingSet e3 = factorize(m, other);
    CHECK(e1.P != e3.P);
}

TEST_CASE("stronger regularization never grows the factor norms") {
    std::mt19937_64 g(17);
    TravelTimeMatrix m;
    m.window_count = 25;
    for (std::size_t i = 0; i < 10; ++i) {
        m.segment_ids.push_back(static_cast<SegmentId>(i + 1));
        for (std::size_t j = 0; j < 25; ++j) {
            if (unit(g) < 0.5) m.cells[{i, j}] = 3.0 * unit(g) - 1.5;
        }
    }
    FactorizeConfig weak;
    FactorizeConfig strong;
    strong.lambda = weak.lambda * 10.0;
    CHECK(frobenius_sum(factorize(m, strong)) <= frobenius_sum(factorize(m, weak)));
}

TEST_CASE("reconstruction error matches a naive evaluator") {
    TravelTimeMatrix m;
    m.segment_ids = {1, 2, 3};
    m.window_count = 4;
    m.cells[{0, 0}] = 1.0;
    m.cells[{1, 2}] = -2.0;
    m.cells[{2, 3}] = 0.5;

    EmbeddingSet zero;
    zero.dim = 2;
    zero.P = Eigen::MatrixXd::Zero(3, 2);
    zero.Q = Eigen::MatrixXd::Zero(4, 2);
    CHECK(reconstruction_error(m, zero) ==
          doctest::Approx((1.0 + 4.0 + 0.25) / 3.0).epsilon(1e-15));

    // An exact factorization scores zero.
    EmbeddingSet exact;
    exact.dim = 2;
    exact.P.resize(3, 2);
    exact.Q.resize(4, 2);
    exact.P << 1, 0, 2, 1, 0, 1;
    exact.Q << 0.5, 0.25, 0, 0, -1, 0, 0, 0.5;
    TravelTimeMatrix full = m;
    full.cells.clear();
    for (std::size_t i = 0; i < 3; ++i) {
        for (std::size_t j = 0; j < 4; ++j) {
            full.cells[{i, j}] = exact.P.row(static_cast<Eigen::Index>(i))
                                     .dot(exact.Q.row(static_cast<Eigen::Index>(j)));
        }
    }
    CHECK(reconstruction_error(full, exact) == 0.0);

    // Naive double loop over the sparse instance.
    EmbeddingSet e;
    e.dim = 2;
    e.P.resize(3, 2);
    e.Q.resize(4, 2);
    e.P << 0.3, -0.1, 0.2, 0.7, -0.5, 0.4;
    e.Q << 1.0, 0.2, -0.3, 0.8, 0.6, -0.6, 0.1, 0.9;
    double want = 0.0;
    for (const auto& [cell, v] : m.cells) {
        double pred = 0.0;
        for (int k = 0; k < 2; ++k) {
            pred += e.P(static_cast<Eigen::Index>(cell.first), k) *
                    e.Q(static_cast<Eigen::Index>(cell.second), k);
        }
        want += (v - pred) * (v - pred);
    }
    want /= static_cast<double>(m.cells.size());
    CHECK(reconstruction_error(m, e) == doctest::Approx(want).epsilon(1e-15));
}

TEST_CASE("factorization validates inputs and reports divergence") {
    TravelTimeMatrix m;
    m.segment_ids = {1};
    m.window_count = 1;
    m.cells[{0, 0}] = 1.0;

    FactorizeConfig bad;
    bad.dim = 0;
    CHECK_THROWS_AS(factorize(m, bad), ValidationError);
    bad = FactorizeConfig{};
    bad.lr = 0.0;
    CHECK_THROWS_AS(factorize(m, bad), ValidationError);
    bad = FactorizeConfig{};
    bad.lambda = -1.0;
    CHECK_THROWS_AS(factorize(m, bad), ValidationError);

    FactorizeConfig wild;
    wild.lr = 1e300;
    CHECK_THROWS_WITH_AS(factorize(m, wild), doctest::Contains("epoch"), NumericalError);
}

TEST_CASE("embedding tables persist learned rows and fill cold starts") {
    TravelTimeMatrix m;
    m.segment_ids = {1, 2};
    m.window_count = 2;
    m.cells[{0, 0}] = 1.0;
    m.cells[{1, 1}] = -1.0;
    EmbeddingSet e;
    e.dim = 2;
    e.P.resize(2, 2);
    e.Q.resize(2, 2);
    e.P << 1.0, 2.0, 3.0, 4.0;
    e.Q << 0.1, 0.2, 0.3, 0.4;

    io::EmbeddingTable table = to_table(m, e);
    CHECK(table.dim == 2);
    CHECK(table.segments.at(1) == std::vector<double>{1.0, 2.0});
    CHECK(table.segments.at(2) == std::vector<double>{3.0, 4.0});
    REQUIRE(table.windows.size() == 2);
    CHECK(table.windows[1] == std::vector<double>{0.3, 0.4});

    // Segment 3 links 1 -> 3 -> 2: it averages both learned neighbors.
    // Segment 4 is isolated: zero vector.
    auto net = test::make_net({
        {{{0, 0}, {100, 0}}, {3}},
        {{{200, 0}, {300, 0}}, {}},
        {{{100, 0}, {200, 0}}, {2}},
        {{{0, 500}, {100, 500}}, {}},
    });
    io::EmbeddingTable full = complete_embeddings(net, table);
    CHECK(full.segments.size() == 4);
    CHECK(full.segments.at(3) == std::vector<double>{2.0, 3.0});
    CHECK(full.segments.at(4) == std::vector<double>{0.0, 0.0});
    CHECK(full.segments.at(1) == table.segments.at(1));
}
