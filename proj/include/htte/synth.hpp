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

#include "htte/network.hpp"

namespace htte {

// Temporary capacity reduction on one segment: travel time is multiplied
// by `slowdown` while t in [t_start, t_start + duration_s).
struct Incident {
    SegmentId segment_id = 0;
    double t_start = 0.0;    // seconds since epoch
    double duration_s = 0.0; // > 0
    double slowdown = 1.0;   // >= 1
};

// Synthetic city generator settings. The road network is a rows x cols
// lattice of intersections with one directed segment per direction between
// adjacent intersections. Vehicles random-walk trips across it; a seeded
// subset of traversals is emitted as travel time reports, and trips of the
// last `held_out_vehicles` vehicles become queries with ground-truth totals
// instead of reports.
struct SynthConfig {
    int rows = 8;
    int cols = 8;
    double block_m = 500.0;       // lattice spacing, metres
    int days = 14;
    int vehicles = 50;            // total, including held-out
    int held_out_vehicles = 5;    // query-generating tail of the fleet
    int trips_per_day = 2;        // per vehicle
    int trip_len = 20;            // segments per trip
    double sample_prob = 1.0;     // fraction of traversals that report
    double noise_sigma = 0.15;    // lognormal sigma per traversal
    std::vector<Incident> incidents;
    std::uint64_t seed = 42;

    void validate() const;  // throws ValidationError
};

// Ground-truth generator parameters of one segment. Travel time follows a
// smooth daily profile base * (1 + amplitude * sin^2(pi * (t_days - phase)))
// scaled by any active incident, with multiplicative lognormal noise applied
// per traversal on top.
struct SegmentProfile {
    double base_s = 0.0;     // free-flow travel time, seconds
    double amplitude = 0.0;  // relative peak height, >= 0
    double phase = 0.0;      // days; peak occurs at phase + 0.5 mod 1
    int group = 0;           // traffic profile family the segment was drawn from
};

// Expected (noise-free) travel time of a segment entered at t_epoch_s.
double mu_travel_time(const SegmentProfile& p, double t_epoch_s, SegmentId id,
                      const std::vector<Incident>& incidents);

// rows x cols lattice with spacing block_m. Intersection (r, c) sits at
// (c * block_m, r * block_m) in a local frame anchored at lon/lat (0, 0).
// Each adjacent pair gets two directed segments drawn as separate
// carriageways, each offset 4 m to the right of travel, so a nearest-segment
// matcher can distinguish direction. Ids run from 1 in row-major node order
// (east, west, south, north per node); odd id k and k + 1 are mutual
// reverses. Successor sets are all segments leaving the head intersection,
// including the reverse segment.
RoadNetwork lattice_network(int rows, int cols, double block_m = 500.0);

struct SynthData {
    RoadNetwork network;
    std::map<SegmentId, SegmentProfile> profiles;
    std::vector<RawTrajectory> trajectories;   // reporting vehicles only
    std::vector<TravelTimeReport> reports;     // sorted by t_exit
    std::vector<double> report_entry_times;    // entry time per report row
    std::vector<PathQuery> queries;            // sorted by t_dep, ids "1"..
};

// Deterministic generation: same config, same output.
SynthData generate_synth(const SynthConfig& cfg);

// True when the query's path contains an incident segment and its time
// span [t_dep, t_dep + actual] intersects the incident window.
bool query_overlaps_incident(const PathQuery& q,
                             const std::vector<Incident>& incidents);

}  // namespace htte
