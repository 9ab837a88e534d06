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

#include "htte/io.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <limits>
#include <unordered_map>

#include "htte/csv.hpp"
#include "htte/errors.hpp"

namespace htte::io {

namespace {

std::string ctx(const std::string& path, std::size_t line_no) {
    return path + ":" + std::to_string(line_no + 1);
}

// Data rows start at index 1 when the first row repeats the column names.
std::size_t first_data_row(const std::vector<std::string>& lines,
                           const std::string& first_column) {
    if (lines.empty()) return 0;
    auto fields = csv::split(lines[0], ',');
    return (!fields.empty() && fields[0] == first_column) ? 1 : 0;
}

std::vector<SegmentId> parse_id_list(const std::string& field, const std::string& context) {
    std::vector<SegmentId> ids;
    if (field.empty()) return ids;
    for (const auto& part : csv::split(field, ';')) {
        ids.push_back(csv::parse_int(part, context));
    }
    return ids;
}

std::string join_ids(const std::vector<SegmentId>& ids) {
    std::vector<std::string> parts;
    parts.reserve(ids.size());
    for (SegmentId id : ids) parts.push_back(std::to_string(id));
    return csv::join(parts, ';');
}

std::vector<LonLat> parse_wkt_linestring(const std::string& wkt, const std::string& context) {
    std::size_t open = wkt.find('(');
    std::size_t close = wkt.rfind(')');
    if (wkt.compare(0, 10, "LINESTRING") != 0 || open == std::string::npos ||
        close == std::string::npos || close < open) {
        throw ValidationError(context + ": expected WKT LINESTRING, got '" + wkt + "'");
    }
    std::vector<LonLat> points;
    for (auto pair : csv::split(wkt.substr(open + 1, close - open - 1), ',')) {
        std::size_t begin = pair.find_first_not_of(' ');
        std::size_t end = pair.find_last_not_of(' ');
        if (begin == std::string::npos) {
            throw ValidationError(context + ": empty coordinate in LINESTRING");
        }
        pair = pair.substr(begin, end - begin + 1);
        std::size_t space = pair.find(' ');
        if (space == std::string::npos) {
            throw ValidationError(context + ": coordinate '" + pair + "' needs 'lon lat'");
        }
        points.push_back({csv::parse_double(pair.substr(0, space), context),
                          csv::parse_double(pair.substr(space + 1), context)});
    }
    if (points.size() < 2) {
        throw ValidationError(context + ": LINESTRING needs at least 2 points");
    }
    return points;
}

std::string format_wkt_linestring(const std::vector<LonLat>& points) {
    std::string out = "LINESTRING (";
    for (std::size_t i = 0; i < points.size(); ++i) {
        if (i) out += ", ";
        out += csv::format_double(points[i].lon);
        out += ' ';
        out += csv::format_double(points[i].lat);
    }
    out += ')';
    return out;
}

void require_fields(const std::vector<std::string>& fields, std::size_t expected,
                    const std::string& context) {
    if (fields.size() != expected) {
        throw ValidationError(context + ": expected " + std::to_string(expected) +
                              " fields, got " + std::to_string(fields.size()));
    }
}

}  // namespace

RoadNetwork read_network(const std::string& path) {
    auto lines = csv::read_lines(path);
    std::vector<RoadSegment> segments;
    for (std::size_t i = first_data_row(lines, "segment_id"); i < lines.size(); ++i) {
        if (lines[i].empty()) continue;
        const std::string context = ctx(path, i);
        // The WKT column contains commas, so only the first three commas
        // delimit fields.
        auto fields = csv::split(lines[i], ',');
        if (fields.size() < 4) {
            throw ValidationError(context + ": expected 4 fields");
        }
        std::string wkt = fields[3];
        for (std::size_t f = 4; f < fields.size(); ++f) {
            wkt += ',';
            wkt += fields[f];
        }
        RoadSegment seg;
        seg.id = csv::parse_int(fields[0], context);
        seg.length_m = csv::parse_double(fields[1], context);
        seg.successors = parse_id_list(fields[2], context);
        seg.geometry = parse_wkt_linestring(wkt, context);
        segments.push_back(std::move(seg));
    }
    return RoadNetwork(std::move(segments));
}

void write_network(const std::string& path, const RoadNetwork& net) {
    auto out = csv::open_output(path);
    out << "segment_id,length_m,successor_ids,wkt_linestring\n";
    for (const auto& [id, seg] : net.segments()) {
        out << id << ',' << csv::format_double(seg.length_m) << ','
            << join_ids(seg.successors) << ',' << format_wkt_linestring(seg.geometry)
            << '\n';
    }
}

std::vector<TravelTimeReport> read_reports(const std::string& path) {
    auto lines = csv::read_lines(path);
    std::vector<TravelTimeReport> reports;
    for (std::size_t i = first_data_row(lines, "segment_id"); i < lines.size(); ++i) {
        if (lines[i].empty()) continue;
        const std::string context = ctx(path, i);
        auto fields = csv::split(lines[i], ',');
        require_fields(fields, 3, context);
        TravelTimeReport r;
        r.segment_id = csv::parse_int(fields[0], context);
        r.t_exit = csv::parse_double(fields[1], context);
        r.travel_time = csv::parse_double(fields[2], context);
        if (!(r.travel_time > 0.0)) {
            throw ValidationError(context + ": travel time must be positive");
        }
        if (!reports.empty() && r.t_exit < reports.back().t_exit) {
            throw ValidationError(context + ": reports must be sorted by exit time");
        }
        reports.push_back(r);
    }
    return reports;
}

void write_reports(const std::string& path, std::vector<TravelTimeReport> reports) {
    std::stable_sort(reports.begin(), reports.end(),
                     [](const auto& a, const auto& b) { return a.t_exit < b.t_exit; });
    auto out = csv::open_output(path);
    out << "segment_id,t_exit_epoch_s,travel_time_s\n";
    for (const auto& r : reports) {
        out << r.segment_id << ',' << csv::format_double(r.t_exit) << ','
            << csv::format_double(r.travel_time) << '\n';
    }
}

std::vector<RawTrajectory> read_trajectories(const std::string& path) {
    auto lines = csv::read_lines(path);
    std::vector<RawTrajectory> trajectories;
    std::unordered_map<std::string, std::size_t> index;
    for (std::size_t i = first_data_row(lines, "vehicle_id"); i < lines.size(); ++i) {
        if (lines[i].empty()) continue;
        const std::string context = ctx(path, i);
        auto fields = csv::split(lines[i], ',');
        require_fields(fields, 4, context);
        if (fields[0].empty()) {
            throw ValidationError(context + ": empty vehicle id");
        }
        auto [it, inserted] = index.emplace(fields[0], trajectories.size());
        if (inserted) {
            trajectories.push_back({fields[0], {}});
        }
        trajectories[it->second].points.push_back(
            {{csv::parse_double(fields[1], context), csv::parse_double(fields[2], context)},
             csv::parse_double(fields[3], context)});
    }
    return trajectories;
}

void write_trajectories(const std::string& path,
                        const std::vector<RawTrajectory>& trajectories) {
    auto out = csv::open_output(path);
    out << "vehicle_id,lon,lat,t_epoch_s\n";
    for (const auto& traj : trajectories) {
        for (const auto& p : traj.points) {
            out << traj.vehicle_id << ',' << csv::format_double(p.position.lon) << ','
                << csv::format_double(p.position.lat) << ',' << csv::format_double(p.t)
                << '\n';
        }
    }
}

std::vector<PathQuery> read_queries(const std::string& path) {
    auto lines = csv::read_lines(path);
    std::vector<PathQuery> queries;
    for (std::size_t i = first_data_row(lines, "query_id"); i < lines.size(); ++i) {
        if (lines[i].empty()) continue;
        const std::string context = ctx(path, i);
        auto fields = csv::split(lines[i], ',');
        if (fields.size() != 3 && fields.size() != 4) {
            throw ValidationError(context + ": expected 3 or 4 fields");
        }
        PathQuery q;
        q.query_id = fields[0];
        q.t_dep = csv::parse_double(fields[1], context);
        q.segments = parse_id_list(fields[2], context);
        if (q.segments.empty()) {
            throw ValidationError(context + ": query path is empty");
        }
        if (fields.size() == 4) {
            q.actual_tt = csv::parse_double(fields[3], context);
            if (!(q.actual_tt > 0.0)) {
                throw ValidationError(context + ": actual travel time must be positive");
            }
        }
        queries.push_back(std::move(q));
    }
    return queries;
}

void write_queries(const std::string& path, const std::vector<PathQuery>& queries) {
    auto out = csv::open_output(path);
    out << "query_id,t_dep_epoch_s,segment_ids,actual_tt_s\n";
    for (const auto& q : queries) {
        out << q.query_id << ',' << csv::format_double(q.t_dep) << ','
            << join_ids(q.segments);
        if (q.has_actual()) out << ',' << csv::format_double(q.actual_tt);
        out << '\n';
    }
}

std::vector<QueryEstimate> read_estimates(const std::string& path) {
    auto lines = csv::read_lines(path);
    std::vector<QueryEstimate> estimates;
    for (std::size_t i = first_data_row(lines, "query_id"); i < lines.size(); ++i) {
        if (lines[i].empty()) continue;
        const std::string context = ctx(path, i);
        auto fields = csv::split(lines[i], ',');
        if (fields.size() != 3 && fields.size() != 5) {
            throw ValidationError(context + ": expected 3 or 5 fields");
        }
        QueryEstimate e;
        e.query_id = fields[0];
        e.total_tt = csv::parse_double(fields[1], context);
        e.fallback_count = static_cast<int>(csv::parse_int(fields[2], context));
        if (fields.size() == 5) {
            e.actual_tt = csv::parse_double(fields[3], context);
            csv::parse_double(fields[4], context);  // abs_err, derived column
        }
        estimates.push_back(std::move(e));
    }
    return estimates;
}

void write_estimates(const std::string& path, const std::vector<QueryEstimate>& estimates) {
    auto out = csv::open_output(path);
    out << "query_id,total_tt_s,fallback_count,actual_tt_s,abs_err_s\n";
    for (const auto& e : estimates) {
        out << e.query_id << ',' << csv::format_double(e.total_tt) << ','
            << e.fallback_count;
        if (e.has_actual()) {
            out << ',' << csv::format_double(e.actual_tt) << ','
                << csv::format_double(std::abs(e.total_tt - e.actual_tt));
        }
        out << '\n';
    }
}

EmbeddingTable read_embeddings(const std::string& path) {
    auto lines = csv::read_lines(path);
    EmbeddingTable table;
    std::map<std::size_t, std::vector<double>> windows;
    for (std::size_t i = first_data_row(lines, "segment_id"); i < lines.size(); ++i) {
        if (lines[i].empty()) continue;
        const std::string context = ctx(path, i);
        auto fields = csv::split(lines[i], ',');
        if (fields.size() < 2) {
            throw ValidationError(context + ": expected an id and at least one value");
        }
        std::vector<double> values;
        values.reserve(fields.size() - 1);
        for (std::size_t f = 1; f < fields.size(); ++f) {
            values.push_back(csv::parse_double(fields[f], context));
        }
        if (table.dim == 0) {
            table.dim = values.size();
        } else if (values.size() != table.dim) {
            throw ValidationError(context + ": inconsistent embedding dimension");
        }
        if (!fields[0].empty() && fields[0][0] == 'w') {
            auto w = static_cast<std::size_t>(csv::parse_int(fields[0].substr(1), context));
            windows[w] = std::move(values);
        } else {
            table.segments[csv::parse_int(fields[0], context)] = std::move(values);
        }
    }
    if (!windows.empty()) {
        std::size_t max_w = windows.rbegin()->first;
        table.windows.assign(max_w + 1, std::vector<double>(table.dim, 0.0));
        for (auto& [w, vec] : windows) table.windows[w] = std::move(vec);
    }
    return table;
}

void write_embeddings(const std::string& path, const EmbeddingTable& table) {
    auto out = csv::open_output(path);
    out << "segment_id";
    for (std::size_t d = 1; d <= table.dim; ++d) out << ",e" << d;
    out << '\n';
    auto write_row = [&](const std::string& key, const std::vector<double>& values) {
        out << key;
        for (double v : values) out << ',' << csv::format_double(v);
        out << '\n';
    };
    for (const auto& [id, vec] : table.segments) write_row(std::to_string(id), vec);
    for (std::size_t w = 0; w < table.windows.size(); ++w) {
        write_row("w" + std::to_string(w), table.windows[w]);
    }
}

Hyperparameters read_hyperparameters(const std::string& path) {
    auto lines = csv::read_lines(path);
    Hyperparameters h;
    std::array<bool, Hyperparameters::kCount + 1> seen{};
    for (std::size_t i = first_data_row(lines, "name"); i < lines.size(); ++i) {
        if (lines[i].empty()) continue;
        const std::string context = ctx(path, i);
        auto fields = csv::split(lines[i], ',');
        require_fields(fields, 2, context);
        double value = csv::parse_double(fields[1], context);
        std::size_t slot;
        if (fields[0] == "jitter") {
            slot = Hyperparameters::kCount;
            h.jitter = value;
        } else if (fields[0].compare(0, 5, "theta") == 0) {
            auto n = csv::parse_int(fields[0].substr(5), context);
            if (n < 1 || n > static_cast<std::int64_t>(Hyperparameters::kCount)) {
                throw ValidationError(context + ": unknown hyperparameter '" + fields[0] + "'");
            }
            slot = static_cast<std::size_t>(n - 1);
            h.theta[slot] = value;
        } else {
            throw ValidationError(context + ": unknown hyperparameter '" + fields[0] + "'");
        }
        if (seen[slot]) {
            throw ValidationError(context + ": duplicate hyperparameter '" + fields[0] + "'");
        }
        seen[slot] = true;
    }
    for (std::size_t i = 0; i < seen.size(); ++i) {
        if (!seen[i]) {
            std::string name = i < Hyperparameters::kCount
                                   ? "theta" + std::to_string(i + 1)
                                   : std::string("jitter");
            throw ValidationError(path + ": missing hyperparameter '" + name + "'");
        }
    }
    if (!h.all_positive()) {
        throw ValidationError(path + ": hyperparameters must be positive and finite");
    }
    return h;
}

void write_hyperparameters(const std::string& path, const Hyperparameters& h) {
    auto out = csv::open_output(path);
    out << "name,value\n";
    for (std::size_t i = 0; i < Hyperparameters::kCount; ++i) {
        out << "theta" << (i + 1) << ',' << csv::format_double(h.theta[i]) << '\n';
    }
    out << "jitter," << csv::format_double(h.jitter) << '\n';
}

SegmentStats read_segment_stats(const std::string& path, double sigma_floor) {
    auto lines = csv::read_lines(path);
    std::map<SegmentId, UnitStats> stats;
    for (std::size_t i = first_data_row(lines, "segment_id"); i < lines.size(); ++i) {
        if (lines[i].empty()) continue;
        const std::string context = ctx(path, i);
        auto fields = csv::split(lines[i], ',');
        require_fields(fields, 4, context);
        SegmentId id = csv::parse_int(fields[0], context);
        UnitStats u;
        u.mean_tt = csv::parse_double(fields[1], context);
        u.std_tt = csv::parse_double(fields[2], context);
        u.count = csv::parse_int(fields[3], context);
        if (!(u.std_tt > 0.0)) {
            throw ValidationError(context + ": std must be positive");
        }
        if (u.count < 0) {
            throw ValidationError(context + ": negative count");
        }
        if (!stats.emplace(id, u).second) {
            throw ValidationError(context + ": duplicate segment " + std::to_string(id));
        }
    }
    return SegmentStats(std::move(stats), sigma_floor);
}

void write_segment_stats(const std::string& path, const SegmentStats& stats) {
    auto out = csv::open_output(path);
    out << "segment_id,mean_tt_s,std_tt_s,count\n";
    for (const auto& [id, u] : stats.all()) {
        out << id << ',' << csv::format_double(u.mean_tt) << ','
            << csv::format_double(u.std_tt) << ',' << u.count << '\n';
    }
}

AvgTravelTimeTable read_avg_table(const std::string& path) {
    auto lines = csv::read_lines(path);
    std::map<SegmentId, std::vector<double>> cells;
    std::map<SegmentId, double> fallback;
    for (std::size_t i = first_data_row(lines, "segment_id"); i < lines.size(); ++i) {
        if (lines[i].empty()) continue;
        const std::string context = ctx(path, i);
        auto fields = csv::split(lines[i], ',');
        require_fields(fields, 3, context);
        SegmentId id = csv::parse_int(fields[0], context);
        std::int64_t window = csv::parse_int(fields[1], context);
        double mean = csv::parse_double(fields[2], context);
        if (!(mean > 0.0)) {
            throw ValidationError(context + ": mean travel time must be positive");
        }
        if (window == -1) {
            if (!fallback.emplace(id, mean).second) {
                throw ValidationError(context + ": duplicate fallback for segment " +
                                      std::to_string(id));
            }
            continue;
        }
        if (window < 0 || window >= AvgTravelTimeTable::kWindowsPerDay) {
            throw ValidationError(context + ": window index out of range");
        }
        auto [it, inserted] = cells.emplace(id, std::vector<double>());
        if (inserted) {
            it->second.assign(AvgTravelTimeTable::kWindowsPerDay,
                              std::numeric_limits<double>::quiet_NaN());
        }
        if (!std::isnan(it->second[static_cast<std::size_t>(window)])) {
            throw ValidationError(context + ": duplicate cell for segment " +
                                  std::to_string(id));
        }
        it->second[static_cast<std::size_t>(window)] = mean;
    }
    return AvgTravelTimeTable(std::move(cells), std::move(fallback));
}

void write_avg_table(const std::string& path, const AvgTravelTimeTable& table) {
    auto out = csv::open_output(path);
    out << "segment_id,window_index,mean_tt_s\n";
    for (const auto& [id, row] : table.cells()) {
        for (std::size_t w = 0; w < row.size(); ++w) {
            if (std::isnan(row[w])) continue;
            out << id << ',' << w << ',' << csv::format_double(row[w]) << '\n';
        }
    }
    for (const auto& [id, mean] : table.fallbacks()) {
        out << id << ",-1," << csv::format_double(mean) << '\n';
    }
}

std::map<std::string, std::string> read_config(const std::string& path) {
    auto lines = csv::read_lines(path);
    std::map<std::string, std::string> config;
    for (std::size_t i = 0; i < lines.size(); ++i) {
        std::string line = lines[i];
        std::size_t begin = line.find_first_not_of(" \t");
        if (begin == std::string::npos || line[begin] == '#') continue;
        std::size_t eq = line.find('=');
        if (eq == std::string::npos) {
            throw ValidationError(ctx(path, i) + ": expected key=value");
        }
        auto trim = [](std::string s) {
            std::size_t b = s.find_first_not_of(" \t");
            if (b == std::string::npos) return std::string();
            std::size_t e = s.find_last_not_of(" \t");
            return s.substr(b, e - b + 1);
        };
        std::string key = trim(line.substr(0, eq));
        std::string value = trim(line.substr(eq + 1));
        if (key.empty()) {
            throw ValidationError(ctx(path, i) + ": empty key");
        }
        if (!config.emplace(key, value).second) {
            throw ValidationError(ctx(path, i) + ": duplicate key '" + key + "'");
        }
    }
    return config;
}

}  // namespace htte::io
