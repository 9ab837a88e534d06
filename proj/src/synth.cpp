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

#include "htte/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <random>
#include <string>
#include <utility>

#include "htte/errors.hpp"

namespace htte {

namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr double kDaySeconds = 86400.0;

// Deterministic across platforms: mt19937_64 output mapped explicitly,
// no std::*_distribution involved.
struct Rng {
    std::mt19937_64 g;
    explicit Rng(std::uint64_t seed) : g(seed) {}
    double unit() { return static_cast<double>(g() >> 11) * 0x1.0p-53; }
    double uniform(double lo, double hi) { return lo + (hi - lo) * unit(); }
    double normal() {
        double u1 = unit();
        if (u1 < 1e-300) u1 = 1e-300;
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * kPi * unit());
    }
    std::size_t index(std::size_t n) {
        auto i = static_cast<std::size_t>(unit() * static_cast<double>(n));
        return i < n ? i : n - 1;
    }
};

// Traffic profile families: phase is in days, so the daily peak lands at
// (phase + 0.5) mod 1. Morning ~08:00, evening ~17:30, midday ~12:30, flat.
struct ProfileGroup {
    double phase;
    double amplitude;
};
constexpr ProfileGroup kGroups[4] = {
    {5.0 / 6.0, 0.6},
    {11.0 / 48.0, 0.7},
    {1.0 / 48.0, 0.45},
    {0.0, 0.08},
};

// Lattice segments are created in forward/reverse pairs, so odd id k and
// k + 1 are mutual reverses.
SegmentId reverse_of(SegmentId id) { return id % 2 == 1 ? id + 1 : id - 1; }

// Point at fraction f along a straight two-point segment, kept strictly
// interior so nearest-segment matching is unambiguous at intersections.
LonLat along(const RoadSegment& seg, double f) {
    const LonLat& a = seg.geometry.front();
    const LonLat& b = seg.geometry.back();
    return {a.lon + f * (b.lon - a.lon), a.lat + f * (b.lat - a.lat)};
}

}  // namespace

void SynthConfig::validate() const {
    if (rows < 2 || cols < 2) {
        throw ValidationError("synth grid must be at least 2x2");
    }
    if (!(block_m > 0.0)) {
        throw ValidationError("synth block_m must be positive");
    }
    if (days < 1) throw ValidationError("synth days must be at least 1");
    if (vehicles < 1) throw ValidationError("synth vehicles must be at least 1");
    if (held_out_vehicles < 0 || held_out_vehicles >= vehicles) {
        throw ValidationError(
            "synth held_out_vehicles must be in [0, vehicles)");
    }
    if (trips_per_day < 1) {
        throw ValidationError("synth trips_per_day must be at least 1");
    }
    if (trip_len < 1) throw ValidationError("synth trip_len must be at least 1");
    if (!(sample_prob > 0.0) || sample_prob > 1.0) {
        throw ValidationError("synth sample_prob must be in (0, 1]");
    }
    if (!(noise_sigma >= 0.0)) {
        throw ValidationError("synth noise_sigma must be non-negative");
    }
    for (const auto& inc : incidents) {
        if (!(inc.duration_s > 0.0)) {
            throw ValidationError("incident duration must be positive");
        }
        if (!(inc.slowdown >= 1.0)) {
            throw ValidationError("incident slowdown must be at least 1");
        }
    }
}

double mu_travel_time(const SegmentProfile& p, double t_epoch_s, SegmentId id,
                      const std::vector<Incident>& incidents) {
    double t_days = t_epoch_s / kDaySeconds;
    double s = std::sin(kPi * (t_days - p.phase));
    double mu = p.base_s * (1.0 + p.amplitude * s * s);
    for (const auto& inc : incidents) {
        if (inc.segment_id == id && t_epoch_s >= inc.t_start &&
            t_epoch_s < inc.t_start + inc.duration_s) {
            mu *= inc.slowdown;
        }
    }
    return mu;
}

RoadNetwork lattice_network(int rows, int cols, double block_m) {
    if (rows < 2 || cols < 2 || !(block_m > 0.0)) {
        throw ValidationError("lattice needs rows >= 2, cols >= 2, block_m > 0");
    }
    LocalProjection proj(LonLat{0.0, 0.0});
    auto node_vec = [&](int r, int c) { return Vec2{c * block_m, r * block_m}; };
    auto node_index = [&](int r, int c) { return r * cols + c; };

    struct Edge {
        SegmentId id;
        int tail;
        int head;
        LonLat a;
        LonLat b;
    };
    std::vector<Edge> edges;
    SegmentId next_id = 1;
    // Each direction gets its own carriageway, offset to the right of
    // travel, so nearest-segment matching can tell the directions apart.
    constexpr double kLaneOffsetM = 4.0;
    auto add_dir = [&](Vec2 a, Vec2 b, int tail, int head) {
        double len = std::hypot(b.x - a.x, b.y - a.y);
        Vec2 right{(b.y - a.y) / len * kLaneOffsetM,
                   -(b.x - a.x) / len * kLaneOffsetM};
        LonLat p1 = proj.to_lonlat({a.x + right.x, a.y + right.y});
        LonLat p2 = proj.to_lonlat({b.x + right.x, b.y + right.y});
        edges.push_back({next_id++, tail, head, p1, p2});
    };
    auto add_pair = [&](int r1, int c1, int r2, int c2) {
        add_dir(node_vec(r1, c1), node_vec(r2, c2), node_index(r1, c1),
                node_index(r2, c2));
        add_dir(node_vec(r2, c2), node_vec(r1, c1), node_index(r2, c2),
                node_index(r1, c1));
    };
    for (int r = 0; r < rows; ++r) {
        for (int c = 0; c < cols; ++c) {
            if (c + 1 < cols) add_pair(r, c, r, c + 1);
            if (r + 1 < rows) add_pair(r, c, r + 1, c);
        }
    }

    std::vector<std::vector<SegmentId>> outgoing(
        static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols));
    for (const auto& e : edges) {
        outgoing[static_cast<std::size_t>(e.tail)].push_back(e.id);
    }

    std::vector<RoadSegment> segments;
    segments.reserve(edges.size());
    for (const auto& e : edges) {
        RoadSegment seg;
        seg.id = e.id;
        seg.geometry = {e.a, e.b};
        seg.length_m = block_m;
        seg.successors = outgoing[static_cast<std::size_t>(e.head)];
        segments.push_back(std::move(seg));
    }
    return RoadNetwork(std::move(segments));
}

SynthData generate_synth(const SynthConfig& cfg) {
    cfg.validate();

    SynthData out;
    out.network = lattice_network(cfg.rows, cfg.cols, cfg.block_m);
    for (const auto& inc : cfg.incidents) {
        if (!out.network.contains(inc.segment_id)) {
            throw ValidationError("incident references unknown segment " +
                                  std::to_string(inc.segment_id));
        }
    }

    std::vector<SegmentId> ids;
    ids.reserve(out.network.size());
    for (const auto& [id, seg] : out.network.segments()) {
        (void)seg;
        ids.push_back(id);
    }

    Rng rng(cfg.seed);

    // Draw order is frozen: segment profiles first (id order), then trips in
    // (vehicle, day, trip, step) order. Every traversal consumes the same
    // draws regardless of sampling outcome, so configs differing only in
    // sample_prob share trip geometry.
    for (SegmentId id : ids) {
        int group = static_cast<int>(rng.index(4));
        double speed = rng.uniform(6.0, 14.0);
        double amplitude = kGroups[group].amplitude * rng.uniform(0.8, 1.2);
        double phase = kGroups[group].phase + rng.uniform(-0.02, 0.02);
        out.profiles[id] = {out.network.segment(id).length_m / speed, amplitude,
                            phase, group};
    }

    std::vector<std::pair<TravelTimeReport, double>> reports;  // report, t_in
    std::vector<PathQuery> queries;
    const int first_held_out = cfg.vehicles - cfg.held_out_vehicles;

    for (int v = 0; v < cfg.vehicles; ++v) {
        const bool held_out = v >= first_held_out;
        for (int d = 0; d < cfg.days; ++d) {
            for (int trip = 0; trip < cfg.trips_per_day; ++trip) {
                double t = d * kDaySeconds + rng.uniform(0.0, kDaySeconds);
                SegmentId cur = ids[rng.index(ids.size())];

                PathQuery q;
                q.t_dep = t;
                double total = 0.0;
                RawTrajectory traj;
                traj.vehicle_id = "v" + std::to_string(v) + "_d" +
                                  std::to_string(d) + "_t" + std::to_string(trip);

                for (int step = 0; step < cfg.trip_len; ++step) {
                    double mu =
                        mu_travel_time(out.profiles.at(cur), t, cur, cfg.incidents);
                    double z = rng.normal();
                    double tt = mu * std::exp(cfg.noise_sigma * z);
                    double coin = rng.unit();

                    if (held_out) {
                        q.segments.push_back(cur);
                        total += tt;
                    } else if (coin < cfg.sample_prob) {
                        reports.push_back({{cur, t + tt, tt}, t});
                        // Two pings per observed traversal so a matcher can
                        // recover the visit interval; the entry stamp is
                        // nudged to keep timestamps strictly increasing
                        // across the previous exit.
                        const RoadSegment& seg = out.network.segment(cur);
                        traj.points.push_back({along(seg, 0.02), t + 1e-7});
                        traj.points.push_back({along(seg, 0.98), t + tt});
                    }
                    t += tt;

                    if (step + 1 < cfg.trip_len) {
                        // Avoid immediate U-turns unless the walker is stuck.
                        const auto& succ = out.network.segment(cur).successors;
                        std::vector<SegmentId> choices;
                        choices.reserve(succ.size());
                        for (SegmentId s : succ) {
                            if (s != reverse_of(cur)) choices.push_back(s);
                        }
                        if (choices.empty()) choices.push_back(reverse_of(cur));
                        cur = choices[rng.index(choices.size())];
                    }
                }

                if (held_out) {
                    q.actual_tt = total;
                    queries.push_back(std::move(q));
                } else if (!traj.points.empty()) {
                    out.trajectories.push_back(std::move(traj));
                }
            }
        }
    }

    std::stable_sort(reports.begin(), reports.end(),
                     [](const auto& a, const auto& b) {
                         return a.first.t_exit < b.first.t_exit;
                     });
    out.reports.reserve(reports.size());
    out.report_entry_times.reserve(reports.size());
    for (const auto& [r, t_in] : reports) {
        out.reports.push_back(r);
        out.report_entry_times.push_back(t_in);
    }

    std::stable_sort(queries.begin(), queries.end(),
                     [](const PathQuery& a, const PathQuery& b) {
                         return a.t_dep < b.t_dep;
                     });
    for (std::size_t i = 0; i < queries.size(); ++i) {
        queries[i].query_id = std::to_string(i + 1);
    }
    out.queries = std::move(queries);
    return out;
}

bool query_overlaps_incident(const PathQuery& q,
                             const std::vector<Incident>& incidents) {
    double q_end = q.t_dep + (q.has_actual() ? q.actual_tt : 0.0);
    for (const auto& inc : incidents) {
        if (q.t_dep >= inc.t_start + inc.duration_s || q_end < inc.t_start) {
            continue;
        }
        for (SegmentId s : q.segments) {
            if (s == inc.segment_id) return true;
        }
    }
    return false;
}

}  // namespace htte
