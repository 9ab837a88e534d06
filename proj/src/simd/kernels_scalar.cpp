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

#include "htte/simd.hpp"

namespace htte::simd {

namespace {

void kernel_sum_scalar(const KernelCoeffs& c, const double* dt, const double* de2,
                       double* out, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) {
        out[i] = kernel_value(c, dt[i], de2[i]);
    }
}

void kernel_terms_scalar(const KernelCoeffs& c, const double* dt, const double* de2,
                         double* per, double* rq, double* se, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) {
        KernelTerms t = kernel_terms(c, dt[i], de2[i]);
        per[i] = t.per;
        rq[i] = t.rq;
        se[i] = t.se;
    }
}

void squared_distance_scalar(const double* rows, const double* point, std::size_t n,
                             std::size_t d, double* out) {
    for (std::size_t i = 0; i < n; ++i) {
        const double* row = rows + i * d;
        double acc = 0.0;
        for (std::size_t k = 0; k < d; ++k) {
            double diff = row[k] - point[k];
            acc += diff * diff;
        }
        out[i] = acc;
    }
}

double dot_scalar(const double* a, const double* b, std::size_t n) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) acc += a[i] * b[i];
    return acc;
}

}  // namespace

const Ops& scalar_ops() {
    static const Ops ops{"scalar", kernel_sum_scalar, kernel_terms_scalar,
                         squared_distance_scalar, dot_scalar};
    return ops;
}

}  // namespace htte::simd
