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
#include <fstream>
#include <string>
#include <vector>

namespace htte::csv {

// Splits on a single delimiter; empty fields are preserved.
std::vector<std::string> split(const std::string& line, char delim);

// Strict parsers: the whole field must be consumed. `context` names the
// file/line/column in the ValidationError message.
double parse_double(const std::string& field, const std::string& context);
std::int64_t parse_int(const std::string& field, const std::string& context);

// Shortest representation that round-trips exactly through parse_double.
std::string format_double(double value);

std::string join(const std::vector<std::string>& fields, char delim);

// Reads all lines (LF or CRLF, final newline optional). Throws
// ValidationError if the file cannot be opened.
std::vector<std::string> read_lines(const std::string& path);

// Opens for writing, throwing ValidationError on failure.
std::ofstream open_output(const std::string& path);

}  // namespace htte::csv
