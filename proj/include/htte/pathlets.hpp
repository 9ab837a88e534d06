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
#include <vector>

#include "htte/network.hpp"

namespace htte {

using PathletId = std::int64_t;

struct Pathlet {
    PathletId id = 0;
    std::vector<SegmentId> segments;  // non-empty, consecutive entries adjacent
};

// Dictionary of reusable sub-paths. Always holds a single-segment pathlet
// for every segment seen in training, so any training path decomposes.
struct PathletDictionary {
    std::map<PathletId, Pathlet> pathlets;
    std::map<SegmentId, std::vector<PathletId>> index;  // first segment -> candidates

    bool empty() const { return pathlets.empty(); }
    std::size_t size() const { return pathlets.size(); }
};

struct PathletConfig {
    int min_support = 5;           // trajectories a sub-path must appear in
    std::size_t max_len = 20;      // longest multi-segment pathlet
};

// Singletons for every seen segment plus every contiguous sub-path of
// length 2..max_len appearing in at least min_support trajectories
// (counted once per trajectory). Ids follow lexicographic segment order.
PathletDictionary build_dictionary(const std::vector<MapMatchedTrajectory>& trajectories,
                                   const PathletConfig& cfg = {});

// Minimal-count cover of the path by dictionary pathlets, computed by
// dynamic programming over suffix positions; ties prefer the longest
// first pathlet. Concatenating the result reproduces the path exactly.
std::vector<PathletId> decompose(const std::vector<SegmentId>& path,
                                 const PathletDictionary& dict);

// Reports at pathlet granularity: one report per contiguous full-pathlet
// traversal in a trajectory's minimal decomposition, with the traversal's
// total duration and its final exit time.
std::vector<TravelTimeReport> pathlet_reports(
    const std::vector<MapMatchedTrajectory>& trajectories, const PathletDictionary& dict);

// Virtual network whose "segments" are the pathlets: concatenated geometry,
// summed length, adjacency where one pathlet's tail feeds another's head.
// Lets the whole estimation pipeline run unchanged at pathlet granularity.
RoadNetwork pathlet_network(const RoadNetwork& net, const PathletDictionary& dict);

// Dictionary file: pathlet_id,segment_ids (";"-joined).
PathletDictionary read_pathlets(const std::string& path);
void write_pathlets(const std::string& path, const PathletDictionary& dict);

}  // namespace htte
