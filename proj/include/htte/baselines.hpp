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

#include <string>
#include <vector>

#include "htte/estimator.hpp"
#include "htte/network.hpp"

namespace htte {

struct BaselineResult {
    std::vector<QueryEstimate> estimates;  // in input query order
    Metrics metrics;
};

// Pure-strategy reference estimators.
//   historical-avg: sums the time-of-day average table along the path.
//   last-value: per segment, the most recent report at or before the query's
//   information horizon (t_dep - query_lead_s); table fallback otherwise.
// The table is built from `historical` only; `stream` feeds last-value with
// live reports. fallback_count counts table-served segments, so with an
// empty stream last-value degenerates to historical-avg row for row.
// Unknown `name` or a query touching an unknown segment throws
// ValidationError.
BaselineResult run_baseline(const std::string& name, const RoadNetwork& net,
                            const std::vector<TravelTimeReport>& historical,
                            const std::vector<TravelTimeReport>& stream,
                            const std::vector<PathQuery>& queries,
                            double query_lead_s = 0.0,
                            const StatsConfig& stats_cfg = {});

}  // namespace htte
