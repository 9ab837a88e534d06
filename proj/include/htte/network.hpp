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
#include <string>
#include <unordered_map>
#include <vector>

#include "htte/geometry.hpp"

namespace htte {

using SegmentId = std::int64_t;

struct RoadSegment {
    SegmentId id = 0;
    std::vector<LonLat> geometry;       // >= 2 points
    double length_m = 0.0;              // > 0
    std::vector<SegmentId> successors;  // outgoing adjacency
};

// Directed road graph. Segments are the nodes; edges are successor links.
class RoadNetwork {
public:
    RoadNetwork() = default;
    explicit RoadNetwork(std::vector<RoadSegment> segments);

    const RoadSegment& segment(SegmentId id) const;
    bool contains(SegmentId id) const { return segments_.count(id) > 0; }
    bool adjacent(SegmentId from, SegmentId to) const;
    const std::vector<SegmentId>& predecessors(SegmentId id) const;
    const std::map<SegmentId, RoadSegment>& segments() const { return segments_; }
    std::size_t size() const { return segments_.size(); }

    const LocalProjection& projection() const { return projection_; }
    // Projected polyline and its arc-length midpoint (the segment anchor).
    const std::vector<Vec2>& projected_geometry(SegmentId id) const;
    Vec2 anchor(SegmentId id) const;

private:
    std::map<SegmentId, RoadSegment> segments_;
    std::unordered_map<SegmentId, std::vector<SegmentId>> predecessors_;
    std::unordered_map<SegmentId, std::vector<Vec2>> projected_;
    std::unordered_map<SegmentId, Vec2> anchors_;
    LocalProjection projection_;
};

struct RawPoint {
    LonLat position;
    double t = 0.0;  // seconds since epoch
};

struct RawTrajectory {
    std::string vehicle_id;
    std::vector<RawPoint> points;  // timestamps strictly increasing
};

struct SegmentVisit {
    SegmentId segment_id = 0;
    double t_in = 0.0;
    double t_out = 0.0;  // > t_in
};

struct MapMatchedTrajectory {
    std::string vehicle_id;
    std::vector<SegmentVisit> visits;  // time-ordered, consecutive segments adjacent
};

struct TravelTimeReport {
    SegmentId segment_id = 0;
    double t_exit = 0.0;       // seconds since epoch, when the vehicle left
    double travel_time = 0.0;  // seconds, > 0
};

struct PathQuery {
    std::string query_id;
    double t_dep = 0.0;                // departure time, seconds since epoch
    std::vector<SegmentId> segments;   // consecutive entries adjacent
    double actual_tt = -1.0;           // ground truth seconds; < 0 = unknown
    bool has_actual() const { return actual_tt >= 0.0; }
};

struct QueryEstimate {
    std::string query_id;
    double total_tt = 0.0;     // estimated seconds over the whole path
    int fallback_count = 0;    // sub-queries served without a trained model
    double actual_tt = -1.0;   // copied from the query when known
    bool has_actual() const { return actual_tt >= 0.0; }
};

struct UnitStats {
    double mean_tt = 0.0;
    double std_tt = 0.0;  // floored at sigma_floor
    std::int64_t count = 0;
};

// Per-segment travel time mean / population std over all reports,
// independent of time of day.
class SegmentStats {
public:
    SegmentStats() = default;
    SegmentStats(std::map<SegmentId, UnitStats> stats, double sigma_floor)
        : stats_(std::move(stats)), sigma_floor_(sigma_floor) {}

    bool contains(SegmentId id) const { return stats_.count(id) > 0; }
    const UnitStats& at(SegmentId id) const;
    const std::map<SegmentId, UnitStats>& all() const { return stats_; }
    double sigma_floor() const { return sigma_floor_; }

private:
    std::map<SegmentId, UnitStats> stats_;
    double sigma_floor_ = 1.0;
};

// Mean travel time per (segment, 30-minute time-of-day window), pooled over
// all days. Missing cells fall back to the segment's overall mean, then to
// length / default_speed.
class AvgTravelTimeTable {
public:
    static constexpr int kWindowSeconds = 30 * 60;
    static constexpr int kWindowsPerDay = 86400 / kWindowSeconds;  // 48

    AvgTravelTimeTable() = default;
    AvgTravelTimeTable(std::map<SegmentId, std::vector<double>> cells,
                       std::map<SegmentId, double> fallback)
        : cells_(std::move(cells)), fallback_(std::move(fallback)) {}

    static int window_of_day(double t_epoch_s);

    // Always returns a positive value via the fallback chain.
    double lookup(SegmentId id, double t_epoch_s) const;
    bool has_cell(SegmentId id, int window) const;
    const std::map<SegmentId, std::vector<double>>& cells() const { return cells_; }
    const std::map<SegmentId, double>& fallbacks() const { return fallback_; }

private:
    std::map<SegmentId, std::vector<double>> cells_;  // NaN = missing
    std::map<SegmentId, double> fallback_;            // per-segment overall mean
};

struct StatsConfig {
    double sigma_floor = 1.0;        // seconds
    double default_speed = 8.0;      // m/s, for segments with no reports
};

// One report per visit: travel_time = t_out - t_in, stamped at exit time.
// Throws ValidationError naming the visit index on a non-positive duration.
std::vector<TravelTimeReport> extract_reports(const MapMatchedTrajectory& mm);

struct MatchConfig {
    double max_match_dist_m = 50.0;
};

// Snap each GPS point to the nearest segment by perpendicular distance,
// merge consecutive identical segments into visits, split the trajectory at
// out-of-range points and at adjacency gaps, and drop pieces with fewer than
// two visits.
std::vector<MapMatchedTrajectory> match_nearest(const RawTrajectory& raw,
                                                const RoadNetwork& net,
                                                const MatchConfig& cfg = {});

SegmentStats compute_segment_stats(const std::vector<TravelTimeReport>& reports,
                                   const RoadNetwork& net,
                                   const StatsConfig& cfg = {});

AvgTravelTimeTable compute_avg_travel_time(const std::vector<TravelTimeReport>& reports,
                                           const RoadNetwork& net,
                                           const StatsConfig& cfg = {});

// z = (tt - mean) / std for the segment. Throws ValidationError for a
// segment missing from stats (stats must be rebuilt).
double standardize(double travel_time, SegmentId id, const SegmentStats& stats);
double destandardize(double z, SegmentId id, const SegmentStats& stats);

}  // namespace htte
