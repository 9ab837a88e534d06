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

#include "htte/estimator.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <map>

#include "htte/errors.hpp"
#include "htte/gp.hpp"
#include "htte/kernels.hpp"

namespace htte {

namespace {

// Non-physical negative durations can come out of de-standardization.
constexpr double kMinSegmentTt = 1.0;  // seconds

constexpr double kDaySeconds = 86400.0;

GpInput encode(SegmentId id, double t_epoch, const io::EmbeddingTable& emb) {
    return GpInput{t_epoch / kDaySeconds, emb.segments.at(id)};
}

}  // namespace

std::vector<SubQuery> decompose_path(const std::vector<SegmentId>& path, double t_dep,
                                     const AvgTravelTimeTable& tt_avg) {
    if (path.empty()) {
        throw ValidationError("query path is empty");
    }
    std::vector<SubQuery> subs;
    subs.reserve(path.size());
    double t = t_dep;
    for (std::size_t i = 0; i < path.size(); ++i) {
        subs.push_back({path[i], t});
        if (i + 1 < path.size()) t += tt_avg.lookup(path[i], t);
    }
    return subs;
}

Metrics compute_metrics(const std::vector<QueryEstimate>& estimates) {
    Metrics m;
    double abs_sum = 0.0;
    double sq_sum = 0.0;
    double pct_sum = 0.0;
    for (const auto& e : estimates) {
        if (!(e.actual_tt > 0.0)) continue;
        const double err = e.total_tt - e.actual_tt;
        abs_sum += std::abs(err);
        sq_sum += err * err;
        pct_sum += std::abs(err) / e.actual_tt;
        ++m.count;
    }
    if (m.count > 0) {
        const auto n = static_cast<double>(m.count);
        m.mae_s = abs_sum / n;
        m.rmse_s = std::sqrt(sq_sum / n);
        m.mape_pct = 100.0 * pct_sum / n;
    }
    return m;
}

Engine::Engine(RoadNetwork net, EngineConfig cfg)
    : net_(std::move(net)), cfg_(std::move(cfg)) {
    cfg_.partition.validate();
}

void Engine::require_ready() const {
    if (!index_) {
        throw ValidationError("engine is not initialized; run offline initialization first");
    }
}

const ModelIndex& Engine::index() const {
    require_ready();
    return *index_;
}

ModelIndex& Engine::index() {
    require_ready();
    return *index_;
}

std::vector<TravelTimeReport> Engine::known_reports(
    const std::vector<TravelTimeReport>& reports) const {
    std::vector<TravelTimeReport> known;
    known.reserve(reports.size());
    for (const auto& r : reports) {
        if (net_.contains(r.segment_id)) known.push_back(r);
    }
    if (known.size() != reports.size()) {
        std::fprintf(stderr, "warning: dropped %zu reports on segments outside the network\n",
                     reports.size() - known.size());
    }
    return known;
}

Hyperparameters Engine::fit_theta(const std::vector<TravelTimeReport>& reports) const {
    const Hyperparameters theta0 = Hyperparameters::defaults();
    std::vector<TravelTimeReport> sample = reports;
    std::stable_sort(sample.begin(), sample.end(),
                     [](const auto& a, const auto& b) { return a.t_exit < b.t_exit; });
    if (sample.size() > cfg_.hyper_subsample && cfg_.hyper_subsample >= 2) {
        // Even spread over the time span keeps day-scale structure visible.
        std::vector<TravelTimeReport> picked;
        picked.reserve(cfg_.hyper_subsample);
        const double span = static_cast<double>(sample.size() - 1);
        const std::size_t k = cfg_.hyper_subsample;
        for (std::size_t i = 0; i < k; ++i) {
            auto idx = static_cast<std::size_t>(
                std::llround(span * static_cast<double>(i) / static_cast<double>(k - 1)));
            picked.push_back(sample[idx]);
        }
        sample = std::move(picked);
    }
    if (sample.size() < 2) {
        std::fprintf(stderr, "warning: too few reports to fit hyperparameters; keeping defaults\n");
        return theta0;
    }

    std::vector<GpInput> xs;
    std::vector<double> ys;
    xs.reserve(sample.size());
    ys.reserve(sample.size());
    for (const auto& r : sample) {
        xs.push_back(encode(r.segment_id, r.t_exit, emb_));
        ys.push_back(standardize(r.travel_time, r.segment_id, stats_));
    }
    try {
        return optimize_hyperparameters(theta0, xs, ys);
    } catch (const NumericalError& e) {
        std::fprintf(stderr, "warning: hyperparameter optimization failed (%s); keeping defaults\n",
                     e.what());
        return theta0;
    }
}

void Engine::build_index(const std::vector<TravelTimeReport>& reports) {
    const auto coeffs = KernelCoeffs::from(hyper_);
    prior_var_z_ = kernel_terms(coeffs, 0.0, 0.0).sum();
    index_.emplace(net_, stats_, emb_, hyper_, cfg_.partition);
    index_->seed(reports);
}

void Engine::offline_init(const std::vector<TravelTimeReport>& reports,
                          const std::string& artifact_dir) {
    if (reports.empty()) {
        throw ValidationError("offline initialization needs at least one report");
    }
    const auto known = known_reports(reports);
    if (known.empty()) {
        throw ValidationError("no report lies on a known segment");
    }

    tt_avg_ = compute_avg_travel_time(known, net_, cfg_.stats);
    stats_ = compute_segment_stats(known, net_, cfg_.stats);
    const auto matrix = build_matrix(known, stats_);
    const auto factors = factorize(matrix, cfg_.factorize);
    emb_ = complete_embeddings(net_, to_table(matrix, factors));
    hyper_ = cfg_.fit_hyperparameters ? fit_theta(known) : Hyperparameters::defaults();
    build_index(known);

    if (!artifact_dir.empty()) persist(artifact_dir);
}

void Engine::persist(const std::string& dir) const {
    namespace fs = std::filesystem;
    fs::create_directories(dir);
    const fs::path base(dir);
    io::write_avg_table((base / artifact::kAvgTable).string(), tt_avg_);
    io::write_segment_stats((base / artifact::kSegmentStats).string(), stats_);
    io::write_embeddings((base / artifact::kEmbeddings).string(), emb_);
    io::write_hyperparameters((base / artifact::kHyperparameters).string(), hyper_);
}

void Engine::restore(const std::vector<TravelTimeReport>& reports,
                     const std::string& artifact_dir) {
    namespace fs = std::filesystem;
    const fs::path base(artifact_dir);
    tt_avg_ = io::read_avg_table((base / artifact::kAvgTable).string());
    stats_ = io::read_segment_stats((base / artifact::kSegmentStats).string(),
                                    cfg_.stats.sigma_floor);
    emb_ = io::read_embeddings((base / artifact::kEmbeddings).string());
    hyper_ = io::read_hyperparameters((base / artifact::kHyperparameters).string());
    build_index(known_reports(reports));
}

Estimate Engine::estimate(const PathQuery& query, double now) {
    require_ready();
    index_->window_tick(now);

    if (query.segments.empty()) {
        throw ValidationError("query " + query.query_id + " has an empty path");
    }
    for (SegmentId id : query.segments) {
        if (!index_->knows(id)) {
            throw ValidationError("query " + query.query_id + " references unknown segment " +
                                  std::to_string(id));
        }
    }
    const auto subs = decompose_path(query.segments, query.t_dep, tt_avg_);

    Estimate out;
    out.query_id = query.query_id;
    out.actual_tt = query.actual_tt;
    out.per_segment.resize(subs.size());

    // One batch prediction per affected model; sub-queries with no trained
    // model are answered from the averages table directly.
    std::map<ModelKey, std::vector<std::size_t>> groups;
    for (std::size_t i = 0; i < subs.size(); ++i) {
        auto& slot = out.per_segment[i];
        slot.segment_id = subs[i].segment_id;
        slot.t_dep = subs[i].t_dep;
        const ModelKey key = index_->route_query(slot.segment_id, slot.t_dep);
        if (index_->find(key) != nullptr) {
            groups[key].push_back(i);
        } else {
            const UnitStats& u = stats_.at(slot.segment_id);
            slot.mean_s = tt_avg_.lookup(slot.segment_id, slot.t_dep);
            slot.variance_s2 = prior_var_z_ * u.std_tt * u.std_tt;
            slot.fallback = true;
            ++out.fallback_count;
        }
    }
    for (const auto& [key, rows] : groups) {
        const GpModel* gp = index_->find(key);
        std::vector<GpInput> xs;
        xs.reserve(rows.size());
        for (std::size_t i : rows) {
            xs.push_back(index_->encode_input(out.per_segment[i].segment_id,
                                              out.per_segment[i].t_dep));
        }
        const auto preds = gp->predict_batch(xs);
        for (std::size_t k = 0; k < rows.size(); ++k) {
            auto& slot = out.per_segment[rows[k]];
            const UnitStats& u = stats_.at(slot.segment_id);
            slot.mean_s = std::max(kMinSegmentTt,
                                   destandardize(preds[k].mean, slot.segment_id, stats_));
            slot.variance_s2 = preds[k].variance * u.std_tt * u.std_tt;
        }
    }
    for (const auto& slot : out.per_segment) out.total_tt += slot.mean_s;
    return out;
}

void Engine::ingest(const TravelTimeReport& r) {
    require_ready();
    index_->ingest(r);
}

ReplayResult Engine::replay(const std::vector<TravelTimeReport>& reports,
                            const std::vector<PathQuery>& queries, double query_lead_s) {
    require_ready();
    for (std::size_t i = 1; i < reports.size(); ++i) {
        if (reports[i].t_exit < reports[i - 1].t_exit) {
            throw ValidationError("report stream out of order at t_exit " +
                                  std::to_string(reports[i].t_exit));
        }
    }
    for (std::size_t i = 1; i < queries.size(); ++i) {
        if (queries[i].t_dep < queries[i - 1].t_dep) {
            throw ValidationError("query stream out of order at t_dep " +
                                  std::to_string(queries[i].t_dep));
        }
    }

    ReplayResult out;
    out.estimates.reserve(queries.size());
    out.latency_ms.reserve(queries.size());
    std::size_t ri = 0;
    for (const auto& q : queries) {
        const double arrival = q.t_dep - query_lead_s;
        // Reports due at or before the arrival are ticked in first, so a
        // query never sees data from its own future.
        while (ri < reports.size() && reports[ri].t_exit <= arrival) {
            index_->window_tick(reports[ri].t_exit);
            index_->ingest(reports[ri]);
            ++ri;
        }
        const auto t0 = std::chrono::steady_clock::now();
        out.estimates.push_back(estimate(q, arrival));
        const auto t1 = std::chrono::steady_clock::now();
        out.latency_ms.push_back(std::chrono::duration<double, std::milli>(t1 - t0).count());
    }

    std::vector<QueryEstimate> summaries;
    summaries.reserve(out.estimates.size());
    for (const auto& e : out.estimates) summaries.push_back(e.summary());
    out.metrics = compute_metrics(summaries);
    return out;
}

}  // namespace htte
