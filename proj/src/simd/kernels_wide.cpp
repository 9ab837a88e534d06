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

// Portable wide backend on std::experimental::simd. The vector width is
// whatever the target's native registers provide (NEON on aarch64, SSE/AVX
// on x86 depending on build flags), with no hand-written intrinsics.

#include <experimental/simd>

#include <algorithm>
#include <cmath>

#include "htte/simd.hpp"

namespace stdx = std::experimental;

namespace htte::simd {

namespace {

using V = stdx::native_simd<double>;
constexpr std::size_t kWidth = V::size();

inline V load(const double* p) {
    V v;
    v.copy_from(p, stdx::element_aligned);
    return v;
}

struct WideCoeffs {
    V c1, a_dt, a_de, a_per, c5, b_dt, neg_t6, b_de, c9, g_de, g_dt;
    explicit WideCoeffs(const KernelCoeffs& c)
        : c1(c.c1), a_dt(c.a_dt), a_de(c.a_de), a_per(c.a_per), c5(c.c5),
          b_dt(c.b_dt), neg_t6(c.neg_t6), b_de(c.b_de), c9(c.c9), g_de(c.g_de),
          g_dt(c.g_dt) {}
};

// One vector of composite-kernel terms. At integer dt the reduced argument
// is exactly zero, so the periodic factor drops out bit for bit, matching
// the scalar reference.
inline void kernel_chunk(const WideCoeffs& k, const V& dt, const V& de2, V& per,
                         V& rq, V& se) {
    V u = dt * dt;
    V r = dt - stdx::nearbyint(dt);
    V sp = stdx::sin(V(M_PI) * r);
    per = k.c1 * stdx::exp(-(k.a_dt * u + k.a_de * de2 + k.a_per * (sp * sp)));
    rq = k.c5 * stdx::exp(k.neg_t6 * stdx::log(V(1.0) + k.b_dt * u) - k.b_de * de2);
    se = k.c9 * stdx::exp(-(k.g_de * de2 + k.g_dt * u));
}

// Remainders run through the same vector code on a zero-padded chunk, so an
// element's result never depends on its position in the batch.
template <typename Fn>
void for_each_chunk(const double* dt, const double* de2, std::size_t n, Fn&& fn) {
    std::size_t i = 0;
    for (; i + kWidth <= n; i += kWidth) {
        fn(i, load(dt + i), load(de2 + i), kWidth);
    }
    if (i < n) {
        alignas(32) double pad_dt[kWidth] = {};
        alignas(32) double pad_de[kWidth] = {};
        std::copy(dt + i, dt + n, pad_dt);
        std::copy(de2 + i, de2 + n, pad_de);
        fn(i, load(pad_dt), load(pad_de), n - i);
    }
}

inline void store_partial(const V& v, double* out, std::size_t count) {
    alignas(32) double buf[kWidth];
    v.copy_to(buf, stdx::vector_aligned);
    std::copy(buf, buf + count, out);
}

void kernel_sum_wide(const KernelCoeffs& c, const double* dt, const double* de2,
                     double* out, std::size_t n) {
    WideCoeffs k(c);
    for_each_chunk(dt, de2, n, [&](std::size_t i, const V& vdt, const V& vde, std::size_t m) {
        V per, rq, se;
        kernel_chunk(k, vdt, vde, per, rq, se);
        store_partial(per + rq + se, out + i, m);
    });
}

void kernel_terms_wide(const KernelCoeffs& c, const double* dt, const double* de2,
                       double* per_out, double* rq_out, double* se_out, std::size_t n) {
    WideCoeffs k(c);
    for_each_chunk(dt, de2, n, [&](std::size_t i, const V& vdt, const V& vde, std::size_t m) {
        V per, rq, se;
        kernel_chunk(k, vdt, vde, per, rq, se);
        store_partial(per, per_out + i, m);
        store_partial(rq, rq_out + i, m);
        store_partial(se, se_out + i, m);
    });
}

void squared_distance_wide(const double* rows, const double* point, std::size_t n,
                           std::size_t d, double* out) {
    for (std::size_t i = 0; i < n; ++i) {
        const double* row = rows + i * d;
        V acc(0.0);
        std::size_t k = 0;
        for (; k + kWidth <= d; k += kWidth) {
            V diff = load(row + k) - load(point + k);
            acc += diff * diff;
        }
        double total = stdx::reduce(acc);
        for (; k < d; ++k) {
            double diff = row[k] - point[k];
            total += diff * diff;
        }
        out[i] = total;
    }
}

double dot_wide(const double* a, const double* b, std::size_t n) {
    V acc(0.0);
    std::size_t i = 0;
    for (; i + kWidth <= n; i += kWidth) {
        acc += load(a + i) * load(b + i);
    }
    double total = stdx::reduce(acc);
    for (; i < n; ++i) total += a[i] * b[i];
    return total;
}

}  // namespace

const Ops& wide_ops() {
    static const Ops ops{"wide", kernel_sum_wide, kernel_terms_wide,
                         squared_distance_wide, dot_wide};
    return ops;
}

}  // namespace htte::simd
