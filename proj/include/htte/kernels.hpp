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

#include <array>
#include <cmath>
#include <cstddef>

namespace htte {

// Covariance hyperparameters for the composite travel-time kernel. Inputs
// are (t, e): t is time in days (so the periodic term repeats daily) and e
// is the segment's latent embedding.
//
//   k = k_per + k_rq + k_se
//   k_per = t1^2 exp(-dt^2/(2 t2^2) - de2/(2 t3^2) - 2 sin^2(pi dt)/t4^2)
//   k_rq  = t5^2 (1 + dt^2/(2 t6 t7))^(-t6) exp(-de2/(2 t8^2))
//   k_se  = t9^2 exp(-de2/(2 t10^2) - dt^2/(2 t11^2))
//
// with dt = t - t' and de2 = ||e - e'||^2. k_per captures the daily cycle
// with a long-term decay, k_rq medium-term deviations at mixed scales, and
// k_se short-term fluctuations.
struct Hyperparameters {
    static constexpr std::size_t kCount = 11;

    std::array<double, kCount> theta{};  // theta[0] is t1, ..., theta[10] is t11
    double jitter = 1e-6;                // added to the Gram diagonal

    static Hyperparameters defaults() {
        Hyperparameters h;
        h.theta = {0.5, 30.0, 1.0, 1.0, 0.5, 2.0, 0.05, 1.0, 0.5, 1.0, 0.01};
        h.jitter = 1e-6;
        return h;
    }

    bool all_positive() const {
        for (double t : theta) {
            if (!(t > 0.0) || !std::isfinite(t)) return false;
        }
        return jitter > 0.0 && std::isfinite(jitter);
    }
};

// Constants precomputed from the hyperparameters so the per-pair kernel
// evaluation is a handful of multiplies plus exp/log.
struct KernelCoeffs {
    double c1;      // t1^2
    double a_dt;    // 1 / (2 t2^2)
    double a_de;    // 1 / (2 t3^2)
    double a_per;   // 2 / t4^2
    double c5;      // t5^2
    double b_dt;    // 1 / (2 t6 t7)
    double neg_t6;  // -t6
    double b_de;    // 1 / (2 t8^2)
    double c9;      // t9^2
    double g_de;    // 1 / (2 t10^2)
    double g_dt;    // 1 / (2 t11^2)

    static KernelCoeffs from(const Hyperparameters& h) {
        const auto& t = h.theta;
        return KernelCoeffs{
            t[0] * t[0], 1.0 / (2.0 * t[1] * t[1]), 1.0 / (2.0 * t[2] * t[2]),
            2.0 / (t[3] * t[3]), t[4] * t[4],        1.0 / (2.0 * t[5] * t[6]),
            -t[5],        1.0 / (2.0 * t[7] * t[7]), t[8] * t[8],
            1.0 / (2.0 * t[9] * t[9]),               1.0 / (2.0 * t[10] * t[10])};
    }
};

// sin^2(pi x), computed as exactly zero at integer x: the reduction
// x - nearbyint(x) is exact, so integer lags contribute nothing to the
// periodic term no matter what t4 is.
inline double sinpi_sq(double x) {
    double r = x - std::nearbyint(x);
    double s = std::sin(M_PI * r);
    return s * s;
}

struct KernelTerms {
    double per, rq, se;
    double sum() const { return per + rq + se; }
};

// Scalar reference evaluation. The SIMD backends must agree with this to
// tight relative tolerance; see tests/test_kernels_simd.cpp.
inline KernelTerms kernel_terms(const KernelCoeffs& c, double dt, double de2) {
    double u = dt * dt;
    double per = c.c1 * std::exp(-c.a_dt * u - c.a_de * de2 - c.a_per * sinpi_sq(dt));
    double rq = c.c5 * std::exp(c.neg_t6 * std::log(1.0 + c.b_dt * u) - c.b_de * de2);
    double se = c.c9 * std::exp(-c.g_de * de2 - c.g_dt * u);
    return {per, rq, se};
}

inline double kernel_value(const KernelCoeffs& c, double dt, double de2) {
    return kernel_terms(c, dt, de2).sum();
}

inline double kernel_value(const Hyperparameters& h, double dt, double de2) {
    return kernel_value(KernelCoeffs::from(h), dt, de2);
}

}  // namespace htte
