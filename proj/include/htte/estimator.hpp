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

#include <optional>
#include <string>
#include <vector>

#include "htte/embeddings.hpp"
#include "htte/io.hpp"
#include "htte/network.hpp"
#include "htte/partition.hpp"

namespace htte {

// Per-segment piece of a path query, stamped with the approximate
// departure time accumulated from the time-of-day averages.
struct SubQuery {
    SegmentId segment_id = 0;
    double t_dep = 0.0;
};

struct SegmentEstimate {
    SegmentId segment_id = 0;
    double t_dep = 0.0;        // approximate departure fed to the model
    double mean_s = 0.0;       // estimated travel time, clamped below
    double variance_s2 = 0.0;  // predictive variance in seconds squared
    bool fallback = false;     // served from the averages table, not a model
};

struct Estimate {
    std::string query_id;
    double total_tt = 0.0;  // exact sum of the per-segment means
    std::vector<SegmentEstimate> per_segment;
    int fallback_count = 0;
    double actual_tt = -1.0;  // copied from the query; < 0 = unknown

    QueryEstimate summary() const {
        return QueryEstimate{query_id, total_tt, fallback_count, actual_tt};
    }
};

// t_1 = t_dep; each later departure adds the previous segment's time-of-day
// average. Callers validate path segments against the table's network first.
std::vector<SubQuery> decompose_path(const std::vector<SegmentId>& path, double t_dep,
                                     const AvgTravelTimeTable& tt_avg);

struct EngineConfig {
    PartitionConfig partition;
    FactorizeConfig factorize;
    StatsConfig stats;
    std::size_t hyper_subsample = 512;  // reports used for hyperparameter fitting
    bool fit_hyperparameters = true;
};

struct Metrics {
    double mae_s = 0.0;
    double rmse_s = 0.0;
    double mape_pct = 0.0;
    std::size_t count = 0;  // queries with ground truth
};

// Aggregates over the estimates that carry a positive actual travel time.
Metrics compute_metrics(const std::vector<QueryEstimate>& estimates);

struct ReplayResult {
    std::vector<Estimate> estimates;  // query arrival order
    Metrics metrics;
    std::vector<double> latency_ms;  // estimate() wall time per query
};

// Artifact file names used by Engine::offline_init and Engine::restore.
namespace artifact {
inline constexpr const char* kAvgTable = "avg_travel_time.csv";
inline constexpr const char* kSegmentStats = "segment_stats.csv";
inline constexpr const char* kEmbeddings = "embeddings.csv";
inline constexpr const char* kHyperparameters = "hyperparameters.csv";
}  // namespace artifact

// Offline initialization plus streamed query answering. Single-threaded
// mutation: estimate() advances the model clock, ingest() buffers reports.
class Engine {
public:
    explicit Engine(RoadNetwork net, EngineConfig cfg = {});

    // Builds averages, stats, embeddings, hyperparameters, and the seeded
    // model index, in that order. Reports on unknown segments are dropped
    // with a warning. A non-empty artifact_dir receives each artifact file.
    void offline_init(const std::vector<TravelTimeReport>& reports,
                      const std::string& artifact_dir = "");

    // Rebuilds the engine from persisted artifacts; the model index is
    // re-seeded from the given historical reports.
    void restore(const std::vector<TravelTimeReport>& reports,
                 const std::string& artifact_dir);

    // Answers one query at time `now`: folds due report batches, decomposes
    // the path, batch-queries each affected model, de-standardizes, and
    // sums. Sub-queries with no trained model fall back to the averages.
    Estimate estimate(const PathQuery& query, double now);

    // Buffers a streamed report until the next window boundary.
    void ingest(const TravelTimeReport& r);

    // Merges both streams by time (reports first on ties, queries arriving
    // at t_dep - query_lead_s) and answers every query with no lookahead.
    ReplayResult replay(const std::vector<TravelTimeReport>& reports,
                        const std::vector<PathQuery>& queries,
                        double query_lead_s = 0.0);

    bool initialized() const { return index_.has_value(); }
    const RoadNetwork& network() const { return net_; }
    const EngineConfig& config() const { return cfg_; }
    const AvgTravelTimeTable& avg_table() const { return tt_avg_; }
    const SegmentStats& stats() const { return stats_; }
    const io::EmbeddingTable& embedding_table() const { return emb_; }
    const Hyperparameters& hyperparameters() const { return hyper_; }
    const ModelIndex& index() const;
    ModelIndex& index();

private:
    RoadNetwork net_;
    EngineConfig cfg_;
    AvgTravelTimeTable tt_avg_;
    SegmentStats stats_;
    io::EmbeddingTable emb_;
    Hyperparameters hyper_ = Hyperparameters::defaults();
    double prior_var_z_ = 0.0;  // standardized prior variance, for fallbacks
    std::optional<ModelIndex> index_;

    void require_ready() const;
    std::vector<TravelTimeReport> known_reports(
        const std::vector<TravelTimeReport>& reports) const;
    Hyperparameters fit_theta(const std::vector<TravelTimeReport>& reports) const;
    void build_index(const std::vector<TravelTimeReport>& reports);
    void persist(const std::string& dir) const;
};

}  // namespace htte
