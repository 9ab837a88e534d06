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

#include "htte/network.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "htte/errors.hpp"

namespace htte {

RoadNetwork::RoadNetwork(std::vector<RoadSegment> segments) {
    if (segments.empty()) {
        throw ValidationError("road network has no segments");
    }
    double lat_sum = 0.0;
    double lon_sum = 0.0;
    std::size_t n_points = 0;
    for (auto& seg : segments) {
        if (seg.geometry.size() < 2) {
            throw ValidationError("segment " + std::to_string(seg.id) +
                                  ": geometry needs at least 2 points");
        }
        if (!(seg.length_m > 0.0)) {
            throw ValidationError("segment " + std::to_string(seg.id) +
                                  ": length must be positive");
        }
        if (segments_.count(seg.id)) {
            throw ValidationError("duplicate segment id " + std::to_string(seg.id));
        }
        for (const auto& p : seg.geometry) {
            lon_sum += p.lon;
            lat_sum += p.lat;
        }
        n_points += seg.geometry.size();
        segments_.emplace(seg.id, std::move(seg));
    }
    projection_ = LocalProjection(LonLat{lon_sum / static_cast<double>(n_points),
                                         lat_sum / static_cast<double>(n_points)});
    for (const auto& [id, seg] : segments_) {
        for (SegmentId succ : seg.successors) {
            if (!segments_.count(succ)) {
                throw ValidationError("segment " + std::to_string(id) +
                                      ": unknown successor " + std::to_string(succ));
            }
            predecessors_[succ].push_back(id);
        }
        std::vector<Vec2> proj;
        proj.reserve(seg.geometry.size());
        for (const auto& p : seg.geometry) {
            proj.push_back(projection_.to_meters(p));
        }
        anchors_[id] = polyline_midpoint(proj);
        projected_[id] = std::move(proj);
    }
}

const RoadSegment& RoadNetwork::segment(SegmentId id) const {
    auto it = segments_.find(id);
    if (it == segments_.end()) {
        throw ValidationError("unknown segment id " + std::to_string(id));
    }
    return it->second;
}

bool RoadNetwork::adjacent(SegmentId from, SegmentId to) const {
    const auto& succ = segment(from).successors;
    return std::find(succ.begin(), succ.end(), to) != succ.end();
}

const std::vector<SegmentId>& RoadNetwork::predecessors(SegmentId id) const {
    segment(id);  // validates the id
    static const std::vector<SegmentId> kEmpty;
    auto it = predecessors_.find(id);
    return it == predecessors_.end() ? kEmpty : it->second;
}

const std::vector<Vec2>& RoadNetwork::projected_geometry(SegmentId id) const {
    auto it = projected_.find(id);
    if (it == projected_.end()) {
        throw ValidationError("unknown segment id " + std::to_string(id));
    }
    return it->second;
}

Vec2 RoadNetwork::anchor(SegmentId id) const {
    auto it = anchors_.find(id);
    if (it == anchors_.end()) {
        throw ValidationError("unknown segment id " + std::to_string(id));
    }
    return it->second;
}

const UnitStats& SegmentStats::at(SegmentId id) const {
    auto it = stats_.find(id);
    if (it == stats_.end()) {
        throw ValidationError("no stats for segment " + std::to_string(id) +
                              "; rebuild segment stats first");
    }
    return it->second;
}

int AvgTravelTimeTable::window_of_day(double t_epoch_s) {
    double day_s = std::fmod(t_epoch_s, 86400.0);
    if (day_s < 0.0) day_s += 86400.0;
    int w = static_cast<int>(day_s / kWindowSeconds);
    return std::min(w, kWindowsPerDay - 1);
}

double AvgTravelTimeTable::lookup(SegmentId id, double t_epoch_s) const {
    auto cell_it = cells_.find(id);
    if (cell_it != cells_.end()) {
        double v = cell_it->second[static_cast<std::size_t>(window_of_day(t_epoch_s))];
        if (!std::isnan(v)) return v;
    }
    auto fb_it = fallback_.find(id);
    if (fb_it == fallback_.end()) {
        throw ValidationError("no travel time average for segment " + std::to_string(id));
    }
    return fb_it->second;
}

bool AvgTravelTimeTable::has_cell(SegmentId id, int window) const {
    auto it = cells_.find(id);
    return it != cells_.end() && !std::isnan(it->second[static_cast<std::size_t>(window)]);
}

std::vector<TravelTimeReport> extract_reports(const MapMatchedTrajectory& mm) {
    std::vector<TravelTimeReport> out;
    out.reserve(mm.visits.size());
    for (std::size_t i = 0; i < mm.visits.size(); ++i) {
        const auto& v = mm.visits[i];
        if (!(v.t_out > v.t_in)) {
            throw ValidationError("trajectory " + mm.vehicle_id + " visit " +
                                  std::to_string(i) + ": t_out <= t_in");
        }
        out.push_back({v.segment_id, v.t_out, v.t_out - v.t_in});
    }
    return out;
}

namespace {

// Nearest segment to a projected point, or 0/false if none within range.
std::pair<SegmentId, bool> nearest_segment(const Vec2& p, const RoadNetwork& net,
                                           double max_dist) {
    SegmentId best_id = 0;
    double best_dist = std::numeric_limits<double>::infinity();
    for (const auto& [id, seg] : net.segments()) {
        double d = point_polyline_distance(p, net.projected_geometry(id));
        if (d < best_dist) {
            best_dist = d;
            best_id = id;
        }
    }
    return {best_id, best_dist <= max_dist};
}

}  // namespace

std::vector<MapMatchedTrajectory> match_nearest(const RawTrajectory& raw,
                                                const RoadNetwork& net,
                                                const MatchConfig& cfg) {
    for (std::size_t i = 1; i < raw.points.size(); ++i) {
        if (!(raw.points[i].t > raw.points[i - 1].t)) {
            throw ValidationError("trajectory " + raw.vehicle_id + " point " +
                                  std::to_string(i) + ": timestamps must strictly increase");
        }
    }

    // Per-point matches; unmatched points break the trajectory.
    struct Matched {
        SegmentId segment_id;
        double t;
    };
    std::vector<std::vector<Matched>> pieces(1);
    for (const auto& pt : raw.points) {
        Vec2 p = net.projection().to_meters(pt.position);
        auto [id, ok] = nearest_segment(p, net, cfg.max_match_dist_m);
        if (!ok) {
            if (!pieces.back().empty()) pieces.emplace_back();
            continue;
        }
        pieces.back().push_back({id, pt.t});
    }

    std::vector<MapMatchedTrajectory> out;
    int piece_no = 0;
    auto flush = [&](std::vector<SegmentVisit>& visits) {
        if (visits.size() >= 2) {
            MapMatchedTrajectory mm;
            mm.vehicle_id = piece_no == 0 ? raw.vehicle_id
                                          : raw.vehicle_id + "#" + std::to_string(piece_no);
            mm.visits = std::move(visits);
            out.push_back(std::move(mm));
            ++piece_no;
        }
        visits.clear();
    };

    for (const auto& piece : pieces) {
        // Merge consecutive identical segments: t_in = first timestamp,
        // t_out = last timestamp of the run. Zero-duration visits (single
        // point on a segment) carry no travel time and are dropped.
        std::vector<SegmentVisit> visits;
        std::size_t i = 0;
        while (i < piece.size()) {
            std::size_t j = i;
            while (j + 1 < piece.size() && piece[j + 1].segment_id == piece[i].segment_id) {
                ++j;
            }
            SegmentVisit v{piece[i].segment_id, piece[i].t, piece[j].t};
            if (!visits.empty() && !net.adjacent(visits.back().segment_id, v.segment_id)) {
                flush(visits);
            }
            if (v.t_out > v.t_in) {
                visits.push_back(v);
            } else if (!visits.empty()) {
                // A single-point visit still breaks segment continuity.
                flush(visits);
            }
            i = j + 1;
        }
        flush(visits);
    }
    return out;
}

SegmentStats compute_segment_stats(const std::vector<TravelTimeReport>& reports,
                                   const RoadNetwork& net,
                                   const StatsConfig& cfg) {
    std::map<SegmentId, std::vector<double>> grouped;
    for (const auto& r : reports) {
        if (!net.contains(r.segment_id)) {
            throw ValidationError("report for unknown segment " +
                                  std::to_string(r.segment_id));
        }
        if (!(r.travel_time > 0.0)) {
            throw ValidationError("non-positive travel time for segment " +
                                  std::to_string(r.segment_id));
        }
        grouped[r.segment_id].push_back(r.travel_time);
    }

    std::map<SegmentId, UnitStats> stats;
    for (const auto& [id, values] : grouped) {
        auto n = static_cast<double>(values.size());
        double mean = 0.0;
        for (double v : values) mean += v;
        mean /= n;
        double var = 0.0;
        for (double v : values) {
            double d = v - mean;
            var += d * d;
        }
        var /= n;  // population variance
        stats[id] = {mean, std::max(std::sqrt(var), cfg.sigma_floor),
                     static_cast<std::int64_t>(values.size())};
    }
    // Segments never observed get a length-based prior so standardization
    // is defined everywhere.
    for (const auto& [id, seg] : net.segments()) {
        if (!stats.count(id)) {
            stats[id] = {seg.length_m / cfg.default_speed, cfg.sigma_floor, 0};
        }
    }
    return SegmentStats(std::move(stats), cfg.sigma_floor);
}

AvgTravelTimeTable compute_avg_travel_time(const std::vector<TravelTimeReport>& reports,
                                           const RoadNetwork& net,
                                           const StatsConfig& cfg) {
    const double nan = std::numeric_limits<double>::quiet_NaN();
    std::map<SegmentId, std::vector<double>> sums;
    std::map<SegmentId, std::vector<std::int64_t>> counts;
    std::map<SegmentId, std::pair<double, std::int64_t>> totals;

    for (const auto& r : reports) {
        if (!net.contains(r.segment_id)) {
            throw ValidationError("report for unknown segment " +
                                  std::to_string(r.segment_id));
        }
        auto& sum = sums[r.segment_id];
        auto& cnt = counts[r.segment_id];
        if (sum.empty()) {
            sum.assign(AvgTravelTimeTable::kWindowsPerDay, 0.0);
            cnt.assign(AvgTravelTimeTable::kWindowsPerDay, 0);
        }
        int w = AvgTravelTimeTable::window_of_day(r.t_exit);
        sum[static_cast<std::size_t>(w)] += r.travel_time;
        cnt[static_cast<std::size_t>(w)] += 1;
        auto& tot = totals[r.segment_id];
        tot.first += r.travel_time;
        tot.second += 1;
    }

    std::map<SegmentId, std::vector<double>> cells;
    std::map<SegmentId, double> fallback;
    for (const auto& [id, seg] : net.segments()) {
        auto sum_it = sums.find(id);
        if (sum_it == sums.end()) {
            fallback[id] = seg.length_m / cfg.default_speed;
            continue;
        }
        const auto& cnt = counts[id];
        std::vector<double> row(AvgTravelTimeTable::kWindowsPerDay, nan);
        for (int w = 0; w < AvgTravelTimeTable::kWindowsPerDay; ++w) {
            auto wi = static_cast<std::size_t>(w);
            if (cnt[wi] > 0) row[wi] = sum_it->second[wi] / static_cast<double>(cnt[wi]);
        }
        cells[id] = std::move(row);
        const auto& tot = totals[id];
        fallback[id] = tot.first / static_cast<double>(tot.second);
    }
    return AvgTravelTimeTable(std::move(cells), std::move(fallback));
}

double standardize(double travel_time, SegmentId id, const SegmentStats& stats) {
    const auto& s = stats.at(id);
    return (travel_time - s.mean_tt) / s.std_tt;
}

double destandardize(double z, SegmentId id, const SegmentStats& stats) {
    const auto& s = stats.at(id);
    return z * s.std_tt + s.mean_tt;
}

}  // namespace htte
