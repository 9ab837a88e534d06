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

#include <unistd.h>

#include <cstdio>
#include <filesystem>
#include <string>
#include <vector>

#include "htte/geometry.hpp"
#include "htte/network.hpp"

namespace htte::test {

// Builds a network from polylines given in local meters (origin 0,0),
// converting to lon/lat through an equirectangular projection so tests can
// reason in metric coordinates.
inline RoadNetwork make_net(
    const std::vector<std::pair<std::vector<Vec2>, std::vector<SegmentId>>>& segs) {
    LocalProjection proj(LonLat{0.0, 0.0});
    std::vector<RoadSegment> out;
    SegmentId id = 1;
    for (const auto& [line, successors] : segs) {
        RoadSegment seg;
        seg.id = id++;
        seg.length_m = polyline_length(line);
        seg.successors = successors;
        for (const auto& p : line) seg.geometry.push_back(proj.to_lonlat(p));
        out.push_back(std::move(seg));
    }
    return RoadNetwork(std::move(out));
}

// Unique temporary directory, removed recursively on scope exit.
class TempDir {
public:
    explicit TempDir(const std::string& stem) {
        static int counter = 0;
        path_ = std::filesystem::temp_directory_path() /
                (stem + "." + std::to_string(::getpid()) + "." + std::to_string(counter++));
        std::filesystem::create_directories(path_);
    }
    ~TempDir() { std::filesystem::remove_all(path_); }
    std::string path() const { return path_.string(); }
    std::string file(const std::string& name) const {
        return (path_ / name).string();
    }

private:
    std::filesystem::path path_;
};

// Unique temporary path, removed when the object goes out of scope.
class TempFile {
public:
    explicit TempFile(const std::string& stem) {
        static int counter = 0;
        path_ = (std::filesystem::temp_directory_path() /
                 (stem + "." + std::to_string(::getpid()) + "." +
                  std::to_string(counter++) + ".csv"))
                    .string();
    }
    ~TempFile() { std::filesystem::remove(path_); }
    const std::string& path() const { return path_; }

private:
    std::string path_;
};

inline std::string slurp(const std::string& path) {
    std::string content;
    if (FILE* f = std::fopen(path.c_str(), "rb")) {
        char buf[4096];
        std::size_t got;
        while ((got = std::fread(buf, 1, sizeof(buf), f)) > 0) content.append(buf, got);
        std::fclose(f);
    }
    return content;
}

}  // namespace htte::test
