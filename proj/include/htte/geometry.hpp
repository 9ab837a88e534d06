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

#include <cmath>
#include <limits>
#include <vector>

namespace htte {

struct LonLat {
    double lon = 0.0;
    double lat = 0.0;
};

// Planar point in meters (local projection).
struct Vec2 {
    double x = 0.0;
    double y = 0.0;
};

// Equirectangular projection around a reference latitude. Adequate for
// city-scale extents, which is all the matcher and the grid need.
class LocalProjection {
public:
    LocalProjection() = default;
    explicit LocalProjection(LonLat origin)
        : origin_(origin),
          m_per_deg_lat_(kEarthRadiusM * kPi / 180.0),
          m_per_deg_lon_(m_per_deg_lat_ * std::cos(origin.lat * kPi / 180.0)) {}

    Vec2 to_meters(LonLat p) const {
        return {(p.lon - origin_.lon) * m_per_deg_lon_,
                (p.lat - origin_.lat) * m_per_deg_lat_};
    }
    LonLat to_lonlat(Vec2 p) const {
        return {origin_.lon + p.x / m_per_deg_lon_,
                origin_.lat + p.y / m_per_deg_lat_};
    }

private:
    static constexpr double kEarthRadiusM = 6371000.0;
    static constexpr double kPi = 3.14159265358979323846;
    LonLat origin_{};
    double m_per_deg_lat_ = 1.0;
    double m_per_deg_lon_ = 1.0;
};

inline double distance(Vec2 a, Vec2 b) {
    return std::hypot(a.x - b.x, a.y - b.y);
}

// Distance from p to the closed segment [a, b].
inline double point_segment_distance(Vec2 p, Vec2 a, Vec2 b) {
    const double dx = b.x - a.x;
    const double dy = b.y - a.y;
    const double len2 = dx * dx + dy * dy;
    if (len2 == 0.0) return distance(p, a);
    double t = ((p.x - a.x) * dx + (p.y - a.y) * dy) / len2;
    t = std::fmax(0.0, std::fmin(1.0, t));
    return distance(p, {a.x + t * dx, a.y + t * dy});
}

inline double point_polyline_distance(Vec2 p, const std::vector<Vec2>& line) {
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i + 1 < line.size(); ++i)
        best = std::fmin(best, point_segment_distance(p, line[i], line[i + 1]));
    return best;
}

inline double polyline_length(const std::vector<Vec2>& line) {
    double len = 0.0;
    for (std::size_t i = 0; i + 1 < line.size(); ++i) len += distance(line[i], line[i + 1]);
    return len;
}

// Point at arc-length fraction frac in [0, 1] along the polyline.
inline Vec2 point_along(const std::vector<Vec2>& line, double frac) {
    if (line.empty()) return {};
    if (line.size() == 1) return line.front();
    const double total = polyline_length(line);
    if (total == 0.0) return line.front();
    double target = std::fmax(0.0, std::fmin(1.0, frac)) * total;
    for (std::size_t i = 0; i + 1 < line.size(); ++i) {
        const double seg = distance(line[i], line[i + 1]);
        if (target <= seg && seg > 0.0) {
            const double t = target / seg;
            return {line[i].x + t * (line[i + 1].x - line[i].x),
                    line[i].y + t * (line[i + 1].y - line[i].y)};
        }
        target -= seg;
    }
    return line.back();
}

inline Vec2 polyline_midpoint(const std::vector<Vec2>& line) {
    return point_along(line, 0.5);
}

}  // namespace htte
