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

// AVX2+FMA backend: four doubles per lane with hand-rolled exp/log/sin
// approximations tuned for the kernel's argument ranges. This translation
// unit is compiled with -mavx2 -mfma; nothing here may run before the
// dispatcher's CPU check, so all constants are function-local statics
// rather than globals with dynamic initializers.

#include <immintrin.h>

#include <bit>
#include <cmath>
#include <cstdint>

#include "htte/simd.hpp"

namespace htte::simd {

namespace {

struct MathConsts {
    double ln2_hi;   // log(2) with the low 32 mantissa bits cleared
    double ln2_lo;   // remainder to extended precision
    double log2e;
    double sqrt_half;
};

const MathConsts& math_consts() {
    static const MathConsts k = [] {
        MathConsts c;
        double ln2 = std::log(2.0);
        c.ln2_hi = std::bit_cast<double>(std::bit_cast<std::uint64_t>(ln2) &
                                         0xFFFFFFFF00000000ULL);
        c.ln2_lo = static_cast<double>(logl(2.0L) - static_cast<long double>(c.ln2_hi));
        c.log2e = 1.0 / ln2;
        c.sqrt_half = std::sqrt(0.5);
        return c;
    }();
    return k;
}

inline __m256d fma(__m256d a, __m256d b, __m256d c) { return _mm256_fmadd_pd(a, b, c); }
inline __m256d set1(double v) { return _mm256_set1_pd(v); }

// exp(x) for x <= ~709. Arguments below -708 underflow to exactly zero
// (true exp would be < 4e-308 there, far below anything the covariance
// math can distinguish from zero). Reduction: x = n*ln2 + r, |r| <= ln2/2,
// exp(r) by 14th-order series, scale by 2^n through the exponent field.
inline __m256d exp_pd(__m256d x) {
    const MathConsts& k = math_consts();
    __m256d underflow = _mm256_cmp_pd(x, set1(-708.0), _CMP_LT_OQ);
    __m256d xc = _mm256_min_pd(_mm256_max_pd(x, set1(-708.0)), set1(709.0));

    __m256d nf = _mm256_round_pd(_mm256_mul_pd(xc, set1(k.log2e)),
                                 _MM_FROUND_TO_NEAREST_INT | _MM_FROUND_NO_EXC);
    __m256d r = _mm256_fnmadd_pd(nf, set1(k.ln2_hi), xc);
    r = _mm256_fnmadd_pd(nf, set1(k.ln2_lo), r);

    // exp(r) = sum r^k / k!, k = 0..14; truncation < 1e-17 on this range.
    __m256d p = set1(1.0 / 87178291200.0);
    p = fma(p, r, set1(1.0 / 6227020800.0));
    p = fma(p, r, set1(1.0 / 479001600.0));
    p = fma(p, r, set1(1.0 / 39916800.0));
    p = fma(p, r, set1(1.0 / 3628800.0));
    p = fma(p, r, set1(1.0 / 362880.0));
    p = fma(p, r, set1(1.0 / 40320.0));
    p = fma(p, r, set1(1.0 / 5040.0));
    p = fma(p, r, set1(1.0 / 720.0));
    p = fma(p, r, set1(1.0 / 120.0));
    p = fma(p, r, set1(1.0 / 24.0));
    p = fma(p, r, set1(1.0 / 6.0));
    p = fma(p, r, set1(0.5));
    p = fma(p, r, set1(1.0));
    p = fma(p, r, set1(1.0));

    __m128i n32 = _mm256_cvtpd_epi32(nf);
    __m256i n64 = _mm256_cvtepi32_epi64(n32);
    __m256i pow2 = _mm256_slli_epi64(_mm256_add_epi64(n64, _mm256_set1_epi64x(1023)), 52);
    __m256d result = _mm256_mul_pd(p, _mm256_castsi256_pd(pow2));
    return _mm256_andnot_pd(underflow, result);
}

// Low 32 bits of each 64-bit lane, as four packed int32.
inline __m128i low32_of_epi64(__m256i v) {
    const __m256i idx = _mm256_setr_epi32(0, 2, 4, 6, 0, 0, 0, 0);
    return _mm256_castsi256_si128(_mm256_permutevar8x32_epi32(v, idx));
}

// log(x) for finite x > 0. Splits x = m * 2^e with m in [sqrt(1/2),
// sqrt(2)), then log(m) = 2 atanh((m-1)/(m+1)) by odd series; the argument
// stays below 0.172 so 12 terms reach full precision.
inline __m256d log_pd(__m256d x) {
    const MathConsts& k = math_consts();
    __m256i bits = _mm256_castpd_si256(x);
    __m256i ebits = _mm256_srli_epi64(bits, 52);
    __m256d e = _mm256_cvtepi32_pd(low32_of_epi64(ebits));
    e = _mm256_sub_pd(e, set1(1022.0));

    const __m256i mant = _mm256_set1_epi64x(0x000FFFFFFFFFFFFFLL);
    const __m256i half = _mm256_set1_epi64x(0x3FE0000000000000LL);
    __m256d m = _mm256_castsi256_pd(
        _mm256_or_si256(_mm256_and_si256(bits, mant), half));  // [0.5, 1)

    __m256d small = _mm256_cmp_pd(m, set1(k.sqrt_half), _CMP_LT_OQ);
    m = _mm256_blendv_pd(m, _mm256_add_pd(m, m), small);
    e = _mm256_sub_pd(e, _mm256_and_pd(small, set1(1.0)));

    __m256d w = _mm256_div_pd(_mm256_sub_pd(m, set1(1.0)), _mm256_add_pd(m, set1(1.0)));
    __m256d w2 = _mm256_mul_pd(w, w);
    __m256d p = set1(1.0 / 23.0);
    p = fma(p, w2, set1(1.0 / 21.0));
    p = fma(p, w2, set1(1.0 / 19.0));
    p = fma(p, w2, set1(1.0 / 17.0));
    p = fma(p, w2, set1(1.0 / 15.0));
    p = fma(p, w2, set1(1.0 / 13.0));
    p = fma(p, w2, set1(1.0 / 11.0));
    p = fma(p, w2, set1(1.0 / 9.0));
    p = fma(p, w2, set1(1.0 / 7.0));
    p = fma(p, w2, set1(1.0 / 5.0));
    p = fma(p, w2, set1(1.0 / 3.0));
    __m256d atanh = fma(p, _mm256_mul_pd(w, w2), w);
    __m256d log_m = _mm256_add_pd(atanh, atanh);
    return fma(e, set1(k.ln2_hi), fma(e, set1(k.ln2_lo), log_m));
}

// sin^2(pi x). The reduction r = x - rint(x) is exact, so integer x gives
// exactly zero. |pi r| <= pi/2 splits into a sine series near zero and a
// cosine series near the half-integer, both on [0, pi/4].
inline __m256d sinpi_sq_pd(__m256d x) {
    const __m256d abs_mask = _mm256_castsi256_pd(_mm256_set1_epi64x(0x7FFFFFFFFFFFFFFFLL));
    __m256d r = _mm256_sub_pd(
        x, _mm256_round_pd(x, _MM_FROUND_TO_NEAREST_INT | _MM_FROUND_NO_EXC));
    __m256d a = _mm256_and_pd(r, abs_mask);  // [0, 0.5]
    __m256d near_zero = _mm256_cmp_pd(a, set1(0.25), _CMP_LE_OQ);

    // 0.5 - a is exact for a in [0.25, 0.5]; clamp keeps the unused lane
    // of each branch from wandering outside the series' validity range.
    __m256d ys = _mm256_mul_pd(set1(M_PI), _mm256_min_pd(a, set1(0.25)));
    __m256d yc = _mm256_mul_pd(set1(M_PI),
                               _mm256_max_pd(_mm256_sub_pd(set1(0.5), a), set1(0.0)));

    __m256d zs = _mm256_mul_pd(ys, ys);
    __m256d ps = set1(-1.0 / 1307674368000.0);
    ps = fma(ps, zs, set1(1.0 / 6227020800.0));
    ps = fma(ps, zs, set1(-1.0 / 39916800.0));
    ps = fma(ps, zs, set1(1.0 / 362880.0));
    ps = fma(ps, zs, set1(-1.0 / 5040.0));
    ps = fma(ps, zs, set1(1.0 / 120.0));
    ps = fma(ps, zs, set1(-1.0 / 6.0));
    __m256d sinp = fma(_mm256_mul_pd(ys, zs), ps, ys);  // sin(ys)

    __m256d zc = _mm256_mul_pd(yc, yc);
    __m256d pc = set1(1.0 / 20922789888000.0);
    pc = fma(pc, zc, set1(-1.0 / 87178291200.0));
    pc = fma(pc, zc, set1(1.0 / 479001600.0));
    pc = fma(pc, zc, set1(-1.0 / 3628800.0));
    pc = fma(pc, zc, set1(1.0 / 40320.0));
    pc = fma(pc, zc, set1(-1.0 / 720.0));
    pc = fma(pc, zc, set1(1.0 / 24.0));
    pc = fma(pc, zc, set1(-0.5));
    __m256d cosp = fma(zc, pc, set1(1.0));  // cos(yc)

    __m256d s = _mm256_blendv_pd(cosp, sinp, near_zero);
    return _mm256_mul_pd(s, s);
}

struct Avx2Coeffs {
    __m256d c1, a_dt, a_de, a_per, c5, b_dt, neg_t6, b_de, c9, g_de, g_dt;
    explicit Avx2Coeffs(const KernelCoeffs& c)
        : c1(set1(c.c1)), a_dt(set1(c.a_dt)), a_de(set1(c.a_de)), a_per(set1(c.a_per)),
          c5(set1(c.c5)), b_dt(set1(c.b_dt)), neg_t6(set1(c.neg_t6)), b_de(set1(c.b_de)),
          c9(set1(c.c9)), g_de(set1(c.g_de)), g_dt(set1(c.g_dt)) {}
};

inline void kernel_chunk(const Avx2Coeffs& k, __m256d dt, __m256d de2, __m256d& per,
                         __m256d& rq, __m256d& se) {
    __m256d u = _mm256_mul_pd(dt, dt);
    __m256d s = sinpi_sq_pd(dt);
    __m256d arg1 = _mm256_mul_pd(k.a_dt, u);
    arg1 = fma(k.a_de, de2, arg1);
    arg1 = fma(k.a_per, s, arg1);
    per = _mm256_mul_pd(k.c1, exp_pd(_mm256_sub_pd(_mm256_setzero_pd(), arg1)));

    __m256d lg = log_pd(fma(k.b_dt, u, set1(1.0)));
    __m256d arg2 = _mm256_fmsub_pd(k.neg_t6, lg, _mm256_mul_pd(k.b_de, de2));
    rq = _mm256_mul_pd(k.c5, exp_pd(arg2));

    __m256d arg3 = fma(k.g_dt, u, _mm256_mul_pd(k.g_de, de2));
    se = _mm256_mul_pd(k.c9, exp_pd(_mm256_sub_pd(_mm256_setzero_pd(), arg3)));
}

// Lane-activation mask for the final partial chunk: lanes [0, rem) active.
inline __m256i tail_mask(std::size_t rem) {
    return _mm256_cmpgt_epi64(_mm256_set1_epi64x(static_cast<long long>(rem)),
                              _mm256_setr_epi64x(0, 1, 2, 3));
}

void kernel_sum_avx2(const KernelCoeffs& c, const double* dt, const double* de2,
                     double* out, std::size_t n) {
    Avx2Coeffs k(c);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        __m256d per, rq, se;
        kernel_chunk(k, _mm256_loadu_pd(dt + i), _mm256_loadu_pd(de2 + i), per, rq, se);
        _mm256_storeu_pd(out + i, _mm256_add_pd(_mm256_add_pd(per, rq), se));
    }
    if (i < n) {
        __m256i mask = tail_mask(n - i);
        __m256d per, rq, se;
        kernel_chunk(k, _mm256_maskload_pd(dt + i, mask), _mm256_maskload_pd(de2 + i, mask),
                     per, rq, se);
        _mm256_maskstore_pd(out + i, mask, _mm256_add_pd(_mm256_add_pd(per, rq), se));
    }
}

void kernel_terms_avx2(const KernelCoeffs& c, const double* dt, const double* de2,
                       double* per_out, double* rq_out, double* se_out, std::size_t n) {
    Avx2Coeffs k(c);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        __m256d per, rq, se;
        kernel_chunk(k, _mm256_loadu_pd(dt + i), _mm256_loadu_pd(de2 + i), per, rq, se);
        _mm256_storeu_pd(per_out + i, per);
        _mm256_storeu_pd(rq_out + i, rq);
        _mm256_storeu_pd(se_out + i, se);
    }
    if (i < n) {
        __m256i mask = tail_mask(n - i);
        __m256d per, rq, se;
        kernel_chunk(k, _mm256_maskload_pd(dt + i, mask), _mm256_maskload_pd(de2 + i, mask),
                     per, rq, se);
        _mm256_maskstore_pd(per_out + i, mask, per);
        _mm256_maskstore_pd(rq_out + i, mask, rq);
        _mm256_maskstore_pd(se_out + i, mask, se);
    }
}

// Fixed-order horizontal sum: (v0+v2) + (v1+v3).
inline double hsum(__m256d v) {
    __m128d lo = _mm256_castpd256_pd128(v);
    __m128d hi = _mm256_extractf128_pd(v, 1);
    __m128d s = _mm_add_pd(lo, hi);
    return _mm_cvtsd_f64(s) + _mm_cvtsd_f64(_mm_unpackhi_pd(s, s));
}

void squared_distance_avx2(const double* rows, const double* point, std::size_t n,
                           std::size_t d, double* out) {
    std::size_t tail = d % 4;
    __m256i mask = tail_mask(tail);
    for (std::size_t i = 0; i < n; ++i) {
        const double* row = rows + i * d;
        __m256d acc = _mm256_setzero_pd();
        std::size_t k = 0;
        for (; k + 4 <= d; k += 4) {
            __m256d diff = _mm256_sub_pd(_mm256_loadu_pd(row + k), _mm256_loadu_pd(point + k));
            acc = fma(diff, diff, acc);
        }
        if (tail) {
            __m256d diff = _mm256_sub_pd(_mm256_maskload_pd(row + k, mask),
                                         _mm256_maskload_pd(point + k, mask));
            acc = fma(diff, diff, acc);
        }
        out[i] = hsum(acc);
    }
}

double dot_avx2(const double* a, const double* b, std::size_t n) {
    __m256d acc = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        acc = fma(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc);
    }
    if (i < n) {
        __m256i mask = tail_mask(n - i);
        acc = fma(_mm256_maskload_pd(a + i, mask), _mm256_maskload_pd(b + i, mask), acc);
    }
    return hsum(acc);
}

}  // namespace

const Ops& avx2_ops() {
    static const Ops ops{"avx2", kernel_sum_avx2, kernel_terms_avx2,
                         squared_distance_avx2, dot_avx2};
    return ops;
}

}  // namespace htte::simd
