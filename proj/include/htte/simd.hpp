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

#include <cstddef>
#include <string>
#include <vector>

#include "htte/kernels.hpp"

namespace htte::simd {

// Batch kernels behind a function-pointer table so the covariance hot loops
// can run on whichever instruction set the host offers. Every backend must
// produce, for each element, a result that depends only on that element's
// inputs (no cross-lane coupling), so growing a batch never changes values
// already computed. The scalar backend is the reference; the others are
// equivalence-tested against it.
struct Ops {
    const char* name;

    // out[i] = k(dt[i], de2[i]), the composite covariance.
    void (*kernel_sum)(const KernelCoeffs& c, const double* dt, const double* de2,
                       double* out, std::size_t n);

    // The three covariance terms separately (hyperparameter gradients
    // combine them with different weights).
    void (*kernel_terms)(const KernelCoeffs& c, const double* dt, const double* de2,
                         double* per, double* rq, double* se, std::size_t n);

    // out[i] = ||rows[i*d .. i*d+d) - point||^2 for row-major rows.
    void (*squared_distance)(const double* rows, const double* point, std::size_t n,
                             std::size_t d, double* out);

    double (*dot)(const double* a, const double* b, std::size_t n);
};

const Ops& scalar_ops();
const Ops& wide_ops();  // std::experimental::simd; NEON-wide on aarch64
#ifdef HTTE_HAVE_AVX2
const Ops& avx2_ops();
#endif

// Backends usable on this machine (compiled in and supported by the CPU).
std::vector<std::string> available_backends();

// The selected backend. First use picks the fastest available one unless
// the HTTE_SIMD environment variable names a specific backend. Selection
// is not thread-safe; choose a backend before sharing engines across
// threads.
const Ops& active();

// Forces a backend by name ("scalar", "wide", "avx2"), or "auto" to return
// to detection. Throws ValidationError for a name that is unavailable here.
void set_backend(const std::string& name);

}  // namespace htte::simd
