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
#include <vector>

#include "htte/gp.hpp"
#include "htte/io.hpp"
#include "htte/network.hpp"

namespace htte {

struct PartitionConfig {
    double cell_size_m = 2000.0;
    double spatial_overlap_m = 500.0;
    int window_min = 60;
    int temporal_overlap_min = 30;
    std::size_t max_points_per_model = 1500;

    int windows_per_day() const { return 1440 / window_min; }
    void validate() const;  // throws ValidationError
};

// One GP model per (grid cell of the segment anchor, time-of-day window).
struct ModelKey {
    int row = 0;
    int col = 0;
    int window = 0;

    auto operator<=>(const ModelKey&) const = default;
};

// A model plus the reports it was built from. The GP always reflects
// historical + realtime; pending holds reports awaiting the next window
// boundary.
struct CellModel {
    GpModel gp;
    std::vector<TravelTimeReport> historical;
    std::vector<TravelTimeReport> realtime;
    std::vector<TravelTimeReport> pending;

    std::size_t trained_points() const { return historical.size() + realtime.size(); }
};

// Routes reports and queries to per-(cell, window) GP models. Reports land
// in every model whose overlap-expanded cell and window strictly contain
// them; queries go only to their core model. Single writer: seed / ingest /
// window_tick mutate, everything else is read-only.
class ModelIndex {
public:
    ModelIndex(const RoadNetwork& net, const SegmentStats& stats,
               const io::EmbeddingTable& embeddings, const Hyperparameters& hyper,
               const PartitionConfig& cfg = {});

    // Core key plus overlap keys, deduplicated and sorted.
    std::vector<ModelKey> route_report(const TravelTimeReport& r) const;
    // The unique core key for the segment anchor and time of day.
    ModelKey route_query(SegmentId id, double t_epoch) const;

    // Offline bulk load: every report becomes historical data of each model
    // it routes to, thinned to the cap, then the models are fitted.
    void seed(const std::vector<TravelTimeReport>& reports);

    // Streamed report: buffered until the next window boundary. Reports on
    // segments outside the network are dropped and counted.
    void ingest(const TravelTimeReport& r);

    // On a change of the absolute time window, folds pending buffers into
    // their models (extend, falling back to refit), evicts over-cap models,
    // and returns the updated keys. `now` must not decrease across calls.
    std::vector<ModelKey> window_tick(double now);

    // Eviction policy: drop oldest realtime first, then thin historical by
    // uniform stride, refit. Exposed for the refit oracle in tests.
    CellModel evicted(const CellModel& m) const;

    const CellModel* cell(const ModelKey& key) const;
    const GpModel* find(const ModelKey& key) const;  // nullptr when absent
    std::vector<ModelKey> keys() const;
    std::size_t model_count() const { return models_.size(); }
    std::size_t dropped_reports() const { return dropped_; }
    const PartitionConfig& config() const { return cfg_; }

    bool knows(SegmentId id) const { return anchors_.count(id) > 0; }
    GpInput encode_input(SegmentId id, double t_epoch) const;
    double encode_target(const TravelTimeReport& r) const;

private:
    PartitionConfig cfg_;
    Hyperparameters hyper_;
    SegmentStats stats_;
    io::EmbeddingTable emb_;
    std::map<SegmentId, Vec2> anchors_;
    std::map<ModelKey, CellModel> models_;
    std::int64_t prev_window_ = std::numeric_limits<std::int64_t>::min();
    double last_now_ = -std::numeric_limits<double>::infinity();
    std::size_t dropped_ = 0;

    CellModel& model_slot(const ModelKey& key);
    GpModel fit_cell(const std::vector<TravelTimeReport>& historical,
                     const std::vector<TravelTimeReport>& realtime) const;
};

}  // namespace htte
