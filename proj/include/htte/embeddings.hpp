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

#pragma once

#include <cstdint>
#include <map>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "htte/io.hpp"
#include "htte/network.hpp"

namespace htte {

// Sparse segment x time-window matrix of mean standardized travel times.
// Rows are the segments that have at least one report, in ascending id
// order; columns are absolute 30-minute windows relative to first_window.
struct TravelTimeMatrix {
    std::vector<SegmentId> segment_ids;
    std::int64_t first_window = 0;
    std::size_t window_count = 0;
    std::map<std::pair<std::size_t, std::size_t>, double> cells;  // (row, col) -> z

    std::size_t rows() const { return segment_ids.size(); }
};

struct FactorizeConfig {
    std::size_t dim = 10;
    double lr = 0.01;
    double lambda = 0.05;
    std::size_t epochs = 200;
    std::uint64_t seed = 42;
};

// Low-rank factors: row i of P embeds segment_ids[i], row w of Q embeds
// window column w.
struct EmbeddingSet {
    std::size_t dim = 0;
    Eigen::MatrixXd P;
    Eigen::MatrixXd Q;
};

TravelTimeMatrix build_matrix(const std::vector<TravelTimeReport>& reports,
                              const SegmentStats& stats);

// Seeded SGD matrix factorization with L2 regularization. The epoch
// objective is non-increasing: an epoch that raises it is rolled back and
// retried at half the learning rate. If `trace` is given it receives the
// objective after the initial state and after each kept epoch.
EmbeddingSet factorize(const TravelTimeMatrix& m, const FactorizeConfig& cfg,
                       std::vector<double>* trace = nullptr);

// Mean squared error over the observed cells.
double reconstruction_error(const TravelTimeMatrix& m, const EmbeddingSet& e);

// Persistable table: P rows keyed by segment id, Q rows kept for inspection.
io::EmbeddingTable to_table(const TravelTimeMatrix& m, const EmbeddingSet& e);

// Fills in segments absent from the table: mean of the embeddings of their
// learned graph neighbors (successors and predecessors), else zeros.
io::EmbeddingTable complete_embeddings(const RoadNetwork& net, const io::EmbeddingTable& learned);

}  // namespace htte
