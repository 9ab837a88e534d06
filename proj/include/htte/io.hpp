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

#include <map>
#include <string>
#include <vector>

#include "htte/kernels.hpp"
#include "htte/network.hpp"

namespace htte::io {

// All files are plain CSV with a header row. Numbers are written in the
// shortest form that parses back to the identical double, so re-running a
// deterministic pipeline reproduces files byte for byte.

// Road network: segment_id,length_m,successor_ids,wkt_linestring with
// successor ids ";"-joined and the geometry as a WKT LINESTRING in
// lon/lat order.
RoadNetwork read_network(const std::string& path);
void write_network(const std::string& path, const RoadNetwork& net);

// Travel-time reports: segment_id,t_exit_epoch_s,travel_time_s.
// The file is kept sorted by exit time; the reader enforces this.
std::vector<TravelTimeReport> read_reports(const std::string& path);
void write_reports(const std::string& path, std::vector<TravelTimeReport> reports);

// Raw GPS trajectories: vehicle_id,lon,lat,t_epoch_s, rows grouped by
// vehicle in first-appearance order.
std::vector<RawTrajectory> read_trajectories(const std::string& path);
void write_trajectories(const std::string& path, const std::vector<RawTrajectory>& trajectories);

// Path queries: query_id,t_dep_epoch_s,segment_ids[,actual_tt_s] with the
// path ";"-joined. The ground-truth column is optional per row.
std::vector<PathQuery> read_queries(const std::string& path);
void write_queries(const std::string& path, const std::vector<PathQuery>& queries);

// Per-query estimates: query_id,total_tt_s,fallback_count[,actual_tt_s,abs_err_s].
// The error columns appear only for queries whose ground truth is known.
std::vector<QueryEstimate> read_estimates(const std::string& path);
void write_estimates(const std::string& path, const std::vector<QueryEstimate>& estimates);

// Latent embeddings: segment_id,e1,...,eD. Segment rows use the numeric
// id; time-of-day window rows use "w<index>" keys and are optional.
struct EmbeddingTable {
    std::size_t dim = 0;
    std::map<SegmentId, std::vector<double>> segments;
    std::vector<std::vector<double>> windows;
};
EmbeddingTable read_embeddings(const std::string& path);
void write_embeddings(const std::string& path, const EmbeddingTable& table);

// Kernel hyperparameters: name,value rows for theta1..theta11 and jitter.
// Every name must appear exactly once.
Hyperparameters read_hyperparameters(const std::string& path);
void write_hyperparameters(const std::string& path, const Hyperparameters& h);

// segment_id,mean_tt_s,std_tt_s,count per row. The sigma floor is a config
// value, not part of the file, so the reader takes it as an argument.
SegmentStats read_segment_stats(const std::string& path, double sigma_floor);
void write_segment_stats(const std::string& path, const SegmentStats& stats);

// segment_id,window_index,mean_tt_s per row. window_index -1 carries the
// per-segment fallback mean; missing cells are simply absent from the file.
AvgTravelTimeTable read_avg_table(const std::string& path);
void write_avg_table(const std::string& path, const AvgTravelTimeTable& table);

// key=value configuration text; '#' starts a comment line, blank lines are
// ignored, duplicate keys are rejected. Key semantics belong to the caller.
std::map<std::string, std::string> read_config(const std::string& path);

}  // namespace htte::io
