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

#include "htte/baselines.hpp"

#include <algorithm>
#include <cstdio>
#include <numeric>
#include <unordered_map>
#include <utility>

#include "htte/errors.hpp"

namespace htte {

namespace {

std::vector<TravelTimeReport> known_only(const RoadNetwork& net,
                                         const std::vector<TravelTimeReport>& in) {
    std::vector<TravelTimeReport> out;
    out.reserve(in.size());
    for (const auto& r : in) {
        if (net.contains(r.segment_id)) out.push_back(r);
    }
    if (out.size() < in.size()) {
        std::fprintf(stderr,
                     "warning: dropped %zu reports on segments outside the "
                     "network\n",
                     in.size() - out.size());
    }
    return out;
}

}  // namespace

BaselineResult run_baseline(const std::string& name, const RoadNetwork& net,
                            const std::vector<TravelTimeReport>& historical,
                            const std::vector<TravelTimeReport>& stream,
                            const std::vector<PathQuery>& queries,
                            double query_lead_s, const StatsConfig& stats_cfg) {
    const bool last_value = name == "last-value";
    if (!last_value && name != "historical-avg") {
        throw ValidationError("unknown baseline '" + name +
                              "'; expected historical-avg or last-value");
    }

    auto hist = known_only(net, historical);
    AvgTravelTimeTable table = compute_avg_travel_time(hist, net, stats_cfg);

    for (const auto& q : queries) {
        if (q.segments.empty()) {
            throw ValidationError("query " + q.query_id + " has an empty path");
        }
        for (SegmentId s : q.segments) {
            if (!net.contains(s)) {
                throw ValidationError("query " + q.query_id +
                                      " references unknown segment " +
                                      std::to_string(s));
            }
        }
    }

    // One time-ordered pass over all reports, queries visited by t_dep.
    std::vector<TravelTimeReport> merged = hist;
    auto live = known_only(net, stream);
    merged.insert(merged.end(), live.begin(), live.end());
    std::stable_sort(merged.begin(), merged.end(),
                     [](const TravelTimeReport& a, const TravelTimeReport& b) {
                         return a.t_exit < b.t_exit;
                     });

    std::vector<std::size_t> order(queries.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return queries[a].t_dep < queries[b].t_dep;
    });

    BaselineResult out;
    out.estimates.resize(queries.size());
    std::unordered_map<SegmentId, double> last;
    std::size_t next = 0;
    for (std::size_t qi : order) {
        const PathQuery& q = queries[qi];
        double horizon = q.t_dep - query_lead_s;
        while (next < merged.size() && merged[next].t_exit <= horizon) {
            last[merged[next].segment_id] = merged[next].travel_time;
            ++next;
        }

        QueryEstimate e;
        e.query_id = q.query_id;
        e.actual_tt = q.actual_tt;
        for (const auto& sub : decompose_path(q.segments, q.t_dep, table)) {
            auto it = last_value ? last.find(sub.segment_id) : last.end();
            if (last_value && it != last.end()) {
                e.total_tt += it->second;
            } else {
                e.total_tt += table.lookup(sub.segment_id, sub.t_dep);
                ++e.fallback_count;
            }
        }
        out.estimates[qi] = std::move(e);
    }

    out.metrics = compute_metrics(out.estimates);
    return out;
}

}  // namespace htte
