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

#include <cstdlib>

#include "htte/errors.hpp"
#include "htte/simd.hpp"

namespace htte::simd {

namespace {

bool cpu_has_avx2() {
#if defined(HTTE_HAVE_AVX2) && defined(__x86_64__)
    return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
    return false;
#endif
}

const Ops* lookup(const std::string& name) {
    if (name == "scalar") return &scalar_ops();
    if (name == "wide") return &wide_ops();
#ifdef HTTE_HAVE_AVX2
    if (name == "avx2" && cpu_has_avx2()) return &avx2_ops();
#endif
    return nullptr;
}

const Ops* detect() {
#ifdef HTTE_HAVE_AVX2
    if (cpu_has_avx2()) return &avx2_ops();
#endif
    return &wide_ops();
}

const Ops*& selected() {
    static const Ops* ops = [] {
        if (const char* env = std::getenv("HTTE_SIMD")) {
            std::string name(env);
            if (name != "auto") {
                const Ops* forced = lookup(name);
                if (!forced) {
                    throw ValidationError("HTTE_SIMD asks for unavailable backend '" +
                                          name + "'");
                }
                return forced;
            }
        }
        return detect();
    }();
    return ops;
}

}  // namespace

std::vector<std::string> available_backends() {
    std::vector<std::string> names{"scalar", "wide"};
    if (cpu_has_avx2()) names.emplace_back("avx2");
    return names;
}

const Ops& active() { return *selected(); }

void set_backend(const std::string& name) {
    if (name == "auto") {
        selected() = detect();
        return;
    }
    const Ops* ops = lookup(name);
    if (!ops) {
        throw ValidationError("unavailable backend '" + name + "'");
    }
    selected() = ops;
}

}  // namespace htte::simd
