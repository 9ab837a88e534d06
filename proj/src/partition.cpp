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

#include "htte/partition.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "htte/errors.hpp"

namespace htte {

namespace {

constexpr double kDaySeconds = 86400.0;

double time_of_day(double t_epoch) {
    double tod = std::fmod(t_epoch, kDaySeconds);
    return tod < 0.0 ? tod + kDaySeconds : tod;
}

}  // namespace

void PartitionConfig::validate() const {
    if (!(cell_size_m > 0.0) || !(spatial_overlap_m > 0.0) || window_min <= 0 ||
        temporal_overlap_min <= 0 || max_points_per_model == 0) {
        throw ValidationError("partition sizes must be positive");
    }
    if (spatial_overlap_m >= cell_size_m) {
        throw ValidationError("spatial overlap must be smaller than the cell size");
    }
    if (temporal_overlap_min >= window_min) {
        throw ValidationError("temporal overlap must be shorter than the window");
    }
    if (1440 % window_min != 0) {
        throw ValidationError("window length must divide the day (1440 min)");
    }
}

ModelIndex::ModelIndex(const RoadNetwork& net, const SegmentStats& stats,
                       const io::EmbeddingTable& embeddings, const Hyperparameters& hyper,
                       const PartitionConfig& cfg)
    : cfg_(cfg), hyper_(hyper), stats_(stats), emb_(embeddings) {
    cfg_.validate();
    for (const auto& [id, seg] : net.segments()) {
        if (!emb_.segments.count(id)) {
            throw ValidationError("segment " + std::to_string(id) +
                                  " has no embedding; complete the embedding table first");
        }
        anchors_[id] = net.anchor(id);
    }
}

GpInput ModelIndex::encode_input(SegmentId id, double t_epoch) const {
    auto it = emb_.segments.find(id);
    if (it == emb_.segments.end()) {
        throw ValidationError("segment " + std::to_string(id) + " has no embedding");
    }
    return GpInput{t_epoch / kDaySeconds, it->second};
}

double ModelIndex::encode_target(const TravelTimeReport& r) const {
    return standardize(r.travel_time, r.segment_id, stats_);
}

std::vector<ModelKey> ModelIndex::route_report(const TravelTimeReport& r) const {
    auto it = anchors_.find(r.segment_id);
    if (it == anchors_.end()) {
        throw ValidationError("segment " + std::to_string(r.segment_id) +
                              " is not in the network");
    }
    const Vec2 a = it->second;
    const double cell = cfg_.cell_size_m;
    const double sov = cfg_.spatial_overlap_m;
    const int col0 = static_cast<int>(std::floor(a.x / cell));
    const int row0 = static_cast<int>(std::floor(a.y / cell));

    std::vector<std::pair<int, int>> cells{{row0, col0}};
    for (int dr = -1; dr <= 1; ++dr) {
        for (int dc = -1; dc <= 1; ++dc) {
            if (dr == 0 && dc == 0) continue;
            const int row = row0 + dr;
            const int col = col0 + dc;
            // Strict containment in the neighbor's overlap-expanded box, so
            // points exactly on an expansion boundary stay in fewer models.
            const double x0 = static_cast<double>(col) * cell - sov;
            const double x1 = static_cast<double>(col + 1) * cell + sov;
            const double y0 = static_cast<double>(row) * cell - sov;
            const double y1 = static_cast<double>(row + 1) * cell + sov;
            if (a.x > x0 && a.x < x1 && a.y > y0 && a.y < y1) cells.push_back({row, col});
        }
    }

    const double len = static_cast<double>(cfg_.window_min) * 60.0;
    const double tov = static_cast<double>(cfg_.temporal_overlap_min) * 60.0;
    const int nwin = cfg_.windows_per_day();
    const double tod = time_of_day(r.t_exit);
    const int w0 = std::min(static_cast<int>(tod / len), nwin - 1);

    std::vector<int> windows{w0};
    for (int dw : {-1, 1}) {
        const int w = ((w0 + dw) % nwin + nwin) % nwin;
        if (w == w0) continue;
        // Circular strict containment in the window's expanded range.
        const double start = static_cast<double>(w) * len - tov;
        double delta = std::fmod(tod - start, kDaySeconds);
        if (delta < 0.0) delta += kDaySeconds;
        if (delta > 0.0 && delta < len + 2.0 * tov) windows.push_back(w);
    }

    std::vector<ModelKey> out;
    for (const auto& [row, col] : cells) {
        for (int w : windows) out.push_back({row, col, w});
    }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

ModelKey ModelIndex::route_query(SegmentId id, double t_epoch) const {
    auto it = anchors_.find(id);
    if (it == anchors_.end()) {
        throw ValidationError("segment " + std::to_string(id) + " is not in the network");
    }
    const Vec2 a = it->second;
    const double len = static_cast<double>(cfg_.window_min) * 60.0;
    ModelKey key;
    key.col = static_cast<int>(std::floor(a.x / cfg_.cell_size_m));
    key.row = static_cast<int>(std::floor(a.y / cfg_.cell_size_m));
    key.window = std::min(static_cast<int>(time_of_day(t_epoch) / len),
                          cfg_.windows_per_day() - 1);
    return key;
}

GpModel ModelIndex::fit_cell(const std::vector<TravelTimeReport>& historical,
                             const std::vector<TravelTimeReport>& realtime) const {
    std::vector<GpInput> xs;
    std::vector<double> ys;
    xs.reserve(historical.size() + realtime.size());
    ys.reserve(xs.capacity());
    for (const auto* batch : {&historical, &realtime}) {
        for (const auto& r : *batch) {
            xs.push_back(encode_input(r.segment_id, r.t_exit));
            ys.push_back(encode_target(r));
        }
    }
    return GpModel::fit(hyper_, emb_.dim, xs, ys);
}

CellModel& ModelIndex::model_slot(const ModelKey& key) {
    auto it = models_.find(key);
    if (it == models_.end()) {
        it = models_.emplace(key, CellModel{GpModel(hyper_, emb_.dim), {}, {}, {}}).first;
    }
    return it->second;
}

CellModel ModelIndex::evicted(const CellModel& m) const {
    const std::size_t cap = cfg_.max_points_per_model;
    if (m.trained_points() <= cap) return m;

    CellModel out{GpModel(hyper_, emb_.dim), m.historical, {}, m.pending};
    std::size_t excess = m.trained_points() - cap;
    const std::size_t drop_rt = std::min(excess, m.realtime.size());
    out.realtime.assign(m.realtime.begin() + static_cast<std::ptrdiff_t>(drop_rt),
                        m.realtime.end());
    excess -= drop_rt;
    if (excess > 0) {
        // Thin historical to an even stride, keeping first and last.
        const std::size_t keep = m.historical.size() - excess;
        std::vector<TravelTimeReport> thinned;
        thinned.reserve(keep);
        if (keep == 1) {
            thinned.push_back(m.historical.front());
        } else {
            const double span = static_cast<double>(m.historical.size() - 1);
            for (std::size_t i = 0; i < keep; ++i) {
                auto idx = static_cast<std::size_t>(std::llround(
                    span * static_cast<double>(i) / static_cast<double>(keep - 1)));
                thinned.push_back(m.historical[idx]);
            }
        }
        out.historical = std::move(thinned);
    }
    out.gp = fit_cell(out.historical, out.realtime);
    return out;
}

void ModelIndex::seed(const std::vector<TravelTimeReport>& reports) {
    for (const auto& r : reports) {
        if (!anchors_.count(r.segment_id)) {
            ++dropped_;
            continue;
        }
        for (const auto& key : route_report(r)) {
            model_slot(key).historical.push_back(r);
        }
    }
    for (auto& [key, m] : models_) {
        if (m.trained_points() > cfg_.max_points_per_model) {
            m = evicted(m);
        } else {
            m.gp = fit_cell(m.historical, m.realtime);
        }
    }
}

void ModelIndex::ingest(const TravelTimeReport& r) {
    if (!anchors_.count(r.segment_id)) {
        ++dropped_;
        return;
    }
    for (const auto& key : route_report(r)) {
        model_slot(key).pending.push_back(r);
    }
}

std::vector<ModelKey> ModelIndex::window_tick(double now) {
    if (now < last_now_) {
        throw ValidationError("window_tick went backwards: " + std::to_string(now) +
                              " after " + std::to_string(last_now_));
    }
    last_now_ = now;
    const double len = static_cast<double>(cfg_.window_min) * 60.0;
    const auto w = static_cast<std::int64_t>(std::floor(now / len));
    if (w == prev_window_) return {};
    prev_window_ = w;

    std::vector<ModelKey> updated;
    for (auto& [key, m] : models_) {
        if (m.pending.empty()) continue;
        std::vector<GpInput> xs;
        std::vector<double> ys;
        xs.reserve(m.pending.size());
        ys.reserve(m.pending.size());
        for (const auto& r : m.pending) {
            xs.push_back(encode_input(r.segment_id, r.t_exit));
            ys.push_back(encode_target(r));
        }
        try {
            m.gp = m.gp.extended(xs, ys);
        } catch (const NumericalError&) {
            // Extension is numerically stuck; rebuild this model alone.
            std::vector<TravelTimeReport> rt = m.realtime;
            rt.insert(rt.end(), m.pending.begin(), m.pending.end());
            m.gp = fit_cell(m.historical, rt);
        }
        m.realtime.insert(m.realtime.end(), m.pending.begin(), m.pending.end());
        m.pending.clear();
        if (m.trained_points() > cfg_.max_points_per_model) m = evicted(m);
        updated.push_back(key);
    }
    return updated;
}

const CellModel* ModelIndex::cell(const ModelKey& key) const {
    auto it = models_.find(key);
    return it == models_.end() ? nullptr : &it->second;
}

const GpModel* ModelIndex::find(const ModelKey& key) const {
    const CellModel* m = cell(key);
    return m == nullptr ? nullptr : &m->gp;
}

std::vector<ModelKey> ModelIndex::keys() const {
    std::vector<ModelKey> out;
    out.reserve(models_.size());
    for (const auto& [key, m] : models_) out.push_back(key);
    return out;
}

}  // namespace htte
