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

#include "htte/pathlets.hpp"

#include <algorithm>
#include <limits>
#include <set>
#include <string>

#include "htte/csv.hpp"
#include "htte/errors.hpp"

namespace htte {

namespace {

std::vector<SegmentId> segment_sequence(const MapMatchedTrajectory& traj) {
    std::vector<SegmentId> seq;
    seq.reserve(traj.visits.size());
    for (const auto& v : traj.visits) seq.push_back(v.segment_id);
    return seq;
}

PathletDictionary from_paths(const std::set<std::vector<SegmentId>>& paths) {
    PathletDictionary dict;
    PathletId id = 1;
    for (const auto& segs : paths) {
        dict.pathlets[id] = Pathlet{id, segs};
        dict.index[segs.front()].push_back(id);
        ++id;
    }
    return dict;
}

}  // namespace

PathletDictionary build_dictionary(const std::vector<MapMatchedTrajectory>& trajectories,
                                   const PathletConfig& cfg) {
    if (cfg.min_support < 1) throw ValidationError("min_support must be at least 1");
    if (cfg.max_len < 2) throw ValidationError("max_len must be at least 2");

    std::set<std::vector<SegmentId>> accepted;
    std::map<std::vector<SegmentId>, int> support;
    for (const auto& traj : trajectories) {
        auto seq = segment_sequence(traj);
        std::set<std::vector<SegmentId>> in_this;  // counted once per trajectory
        for (std::size_t i = 0; i < seq.size(); ++i) {
            accepted.insert({seq[i]});
            std::size_t max_j = std::min(seq.size(), i + cfg.max_len);
            for (std::size_t j = i + 2; j <= max_j; ++j) {
                in_this.insert(std::vector<SegmentId>(seq.begin() + static_cast<std::ptrdiff_t>(i),
                                                      seq.begin() + static_cast<std::ptrdiff_t>(j)));
            }
        }
        for (const auto& sub : in_this) {
            if (++support[sub] >= cfg.min_support) accepted.insert(sub);
        }
    }
    return from_paths(accepted);
}

std::vector<PathletId> decompose(const std::vector<SegmentId>& path,
                                 const PathletDictionary& dict) {
    const std::size_t m = path.size();
    std::vector<SegmentId> missing;
    for (SegmentId s : path) {
        auto it = dict.index.find(s);
        bool has_singleton = false;
        if (it != dict.index.end()) {
            for (PathletId id : it->second) {
                if (dict.pathlets.at(id).segments.size() == 1) {
                    has_singleton = true;
                    break;
                }
            }
        }
        if (!has_singleton && std::find(missing.begin(), missing.end(), s) == missing.end()) {
            missing.push_back(s);
        }
    }
    if (!missing.empty()) {
        std::vector<std::string> parts;
        for (SegmentId s : missing) parts.push_back(std::to_string(s));
        throw ValidationError("path has segments with no pathlet: " + csv::join(parts, ','));
    }

    constexpr std::size_t kInf = std::numeric_limits<std::size_t>::max();
    std::vector<std::size_t> best(m + 1, kInf);  // pathlets to cover the suffix
    std::vector<PathletId> choice(m, 0);
    std::vector<std::size_t> choice_len(m, 0);
    best[m] = 0;
    for (std::size_t i = m; i-- > 0;) {
        for (PathletId id : dict.index.at(path[i])) {
            const auto& segs = dict.pathlets.at(id).segments;
            std::size_t len = segs.size();
            if (i + len > m || best[i + len] == kInf) continue;
            if (!std::equal(segs.begin(), segs.end(), path.begin() + static_cast<std::ptrdiff_t>(i))) {
                continue;
            }
            std::size_t count = 1 + best[i + len];
            if (count < best[i] || (count == best[i] && len > choice_len[i])) {
                best[i] = count;
                choice[i] = id;
                choice_len[i] = len;
            }
        }
    }

    std::vector<PathletId> out;
    for (std::size_t i = 0; i < m; i += choice_len[i]) out.push_back(choice[i]);
    return out;
}

std::vector<TravelTimeReport> pathlet_reports(
    const std::vector<MapMatchedTrajectory>& trajectories, const PathletDictionary& dict) {
    std::vector<TravelTimeReport> reports;
    for (const auto& traj : trajectories) {
        auto seq = segment_sequence(traj);
        auto ids = decompose(seq, dict);
        std::size_t pos = 0;
        for (PathletId id : ids) {
            std::size_t len = dict.pathlets.at(id).segments.size();
            const auto& first = traj.visits[pos];
            const auto& last = traj.visits[pos + len - 1];
            reports.push_back({id, last.t_out, last.t_out - first.t_in});
            pos += len;
        }
    }
    return reports;
}

RoadNetwork pathlet_network(const RoadNetwork& net, const PathletDictionary& dict) {
    // tail segment -> pathlets starting at each segment, for adjacency.
    std::vector<RoadSegment> out;
    out.reserve(dict.size());
    for (const auto& [id, pathlet] : dict.pathlets) {
        RoadSegment seg;
        seg.id = id;
        for (SegmentId member : pathlet.segments) {
            const RoadSegment& src = net.segment(member);
            seg.length_m += src.length_m;
            for (const auto& p : src.geometry) {
                if (!seg.geometry.empty() &&
                    seg.geometry.back().lon == p.lon && seg.geometry.back().lat == p.lat) {
                    continue;  // shared junction point
                }
                seg.geometry.push_back(p);
            }
        }
        const RoadSegment& tail = net.segment(pathlet.segments.back());
        for (SegmentId next : tail.successors) {
            auto it = dict.index.find(next);
            if (it == dict.index.end()) continue;
            for (PathletId candidate : it->second) seg.successors.push_back(candidate);
        }
        out.push_back(std::move(seg));
    }
    return RoadNetwork(std::move(out));
}

PathletDictionary read_pathlets(const std::string& path) {
    auto lines = csv::read_lines(path);
    PathletDictionary dict;
    std::size_t start = 0;
    if (!lines.empty() && csv::split(lines[0], ',').front() == "pathlet_id") start = 1;
    for (std::size_t ln = start; ln < lines.size(); ++ln) {
        if (lines[ln].empty()) continue;
        std::string context = path + ":" + std::to_string(ln + 1);
        auto fields = csv::split(lines[ln], ',');
        if (fields.size() != 2) {
            throw ValidationError(context + ": expected 2 fields, got " +
                                  std::to_string(fields.size()));
        }
        Pathlet p;
        p.id = csv::parse_int(fields[0], context + " pathlet_id");
        if (fields[1].empty()) {
            throw ValidationError(context + ": pathlet has no segments");
        }
        for (const auto& part : csv::split(fields[1], ';')) {
            p.segments.push_back(csv::parse_int(part, context + " segment_ids"));
        }
        if (dict.pathlets.count(p.id)) {
            throw ValidationError(context + ": duplicate pathlet id " + std::to_string(p.id));
        }
        dict.index[p.segments.front()].push_back(p.id);
        dict.pathlets[p.id] = std::move(p);
    }
    for (auto& [seg, ids] : dict.index) std::sort(ids.begin(), ids.end());
    return dict;
}

void write_pathlets(const std::string& path, const PathletDictionary& dict) {
    auto out = csv::open_output(path);
    out << "pathlet_id,segment_ids\n";
    for (const auto& [id, pathlet] : dict.pathlets) {
        std::vector<std::string> parts;
        for (SegmentId s : pathlet.segments) parts.push_back(std::to_string(s));
        out << id << ',' << csv::join(parts, ';') << '\n';
    }
}

}  // namespace htte
