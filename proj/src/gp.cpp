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

#include "htte/gp.hpp"

#include <cmath>
#include <limits>

#include "htte/errors.hpp"
#include "htte/simd.hpp"

namespace htte {

namespace {

constexpr int kJitterRetries = 3;
constexpr double kVarianceSlack = -1e-8;

void validate_points(const std::vector<GpInput>& xs, const std::vector<double>& y,
                     std::size_t emb_dim) {
    if (xs.size() != y.size()) {
        throw ValidationError("input and target counts differ: " +
                              std::to_string(xs.size()) + " vs " + std::to_string(y.size()));
    }
    for (std::size_t i = 0; i < xs.size(); ++i) {
        if (!std::isfinite(xs[i].t) || !std::isfinite(y[i])) {
            throw ValidationError("non-finite observation at index " + std::to_string(i));
        }
        if (xs[i].e.size() != emb_dim) {
            throw ValidationError("embedding dimension mismatch at index " +
                                  std::to_string(i));
        }
        for (double v : xs[i].e) {
            if (!std::isfinite(v)) {
                throw ValidationError("non-finite embedding at index " + std::to_string(i));
            }
        }
    }
}

}  // namespace

GpModel::GpModel(const Hyperparameters& h, std::size_t emb_dim)
    : hyper_(h), coeffs_(KernelCoeffs::from(h)), emb_dim_(emb_dim),
      jitter_eff_(h.jitter), chol_(0, 0), alpha_(0) {
    if (!h.all_positive()) {
        throw ValidationError("hyperparameters must be positive and finite");
    }
}

void GpModel::cross_covariance(double t, const double* e, std::size_t m, double* out) const {
    if (m == 0) return;
    const simd::Ops& ops = simd::active();
    thread_local std::vector<double> dt, de2;
    dt.resize(m);
    de2.resize(m);
    for (std::size_t j = 0; j < m; ++j) dt[j] = ts_[j] - t;
    ops.squared_distance(emb_.data(), e, m, emb_dim_, de2.data());
    ops.kernel_sum(coeffs_, dt.data(), de2.data(), out, m);
}

Eigen::MatrixXd GpModel::gram() const {
    auto n = static_cast<Eigen::Index>(ts_.size());
    Eigen::MatrixXd K(n, n);
    std::vector<double> row(ts_.size());
    for (Eigen::Index i = 0; i < n; ++i) {
        auto m = static_cast<std::size_t>(i) + 1;
        cross_covariance(ts_[static_cast<std::size_t>(i)],
                         emb_.data() + static_cast<std::size_t>(i) * emb_dim_, m, row.data());
        for (Eigen::Index j = 0; j <= i; ++j) {
            K(i, j) = row[static_cast<std::size_t>(j)];
            K(j, i) = K(i, j);
        }
    }
    return K;
}

void GpModel::factorize_full() {
    auto n = static_cast<Eigen::Index>(ts_.size());
    Eigen::MatrixXd K = gram();
    double j = hyper_.jitter;
    for (int attempt = 0; attempt <= kJitterRetries; ++attempt) {
        Eigen::MatrixXd A = K;
        A.diagonal().array() += j;
        Eigen::LLT<Eigen::MatrixXd> llt(A);
        if (llt.info() == Eigen::Success) {
            chol_ = llt.matrixL();
            jitter_eff_ = j;
            return;
        }
        j *= 10.0;
    }
    throw NumericalError("covariance factorization failed for n=" + std::to_string(n) +
                         " even with jitter escalated to " + std::to_string(j / 10.0));
}

void GpModel::refresh_alpha() {
    auto n = static_cast<Eigen::Index>(ts_.size());
    Eigen::VectorXd rhs = Eigen::Map<const Eigen::VectorXd>(y_.data(), n);
    chol_.triangularView<Eigen::Lower>().solveInPlace(rhs);
    chol_.triangularView<Eigen::Lower>().transpose().solveInPlace(rhs);
    alpha_ = std::move(rhs);
}

GpModel GpModel::fit(const Hyperparameters& h, std::size_t emb_dim,
                     const std::vector<GpInput>& xs, const std::vector<double>& y) {
    GpModel model(h, emb_dim);
    validate_points(xs, y, emb_dim);
    model.ts_.reserve(xs.size());
    model.emb_.reserve(xs.size() * emb_dim);
    for (const auto& x : xs) {
        model.ts_.push_back(x.t);
        model.emb_.insert(model.emb_.end(), x.e.begin(), x.e.end());
    }
    model.y_ = y;
    if (!xs.empty()) {
        model.factorize_full();
        model.refresh_alpha();
    }
    return model;
}

GpModel GpModel::extended(const std::vector<GpInput>& xs, const std::vector<double>& y) const {
    validate_points(xs, y, emb_dim_);
    GpModel out(*this);
    if (xs.empty()) return out;

    const std::size_t n0 = ts_.size();
    const std::size_t b = xs.size();
    const std::size_t n1 = n0 + b;
    for (const auto& x : xs) {
        out.ts_.push_back(x.t);
        out.emb_.insert(out.emb_.end(), x.e.begin(), x.e.end());
    }
    out.y_.insert(out.y_.end(), y.begin(), y.end());

    if (n0 == 0) {
        out.factorize_full();
        out.refresh_alpha();
        return out;
    }

    // New rows of the covariance, computed exactly as a full refit would:
    // row q covers all points up to and including itself.
    Eigen::MatrixXd B(static_cast<Eigen::Index>(n0), static_cast<Eigen::Index>(b));
    Eigen::MatrixXd C = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(b),
                                              static_cast<Eigen::Index>(b));
    std::vector<double> row(n1);
    for (std::size_t q = 0; q < b; ++q) {
        out.cross_covariance(out.ts_[n0 + q], out.emb_.data() + (n0 + q) * emb_dim_,
                             n0 + q + 1, row.data());
        for (std::size_t j = 0; j < n0; ++j) {
            B(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(q)) = row[j];
        }
        for (std::size_t j = 0; j <= q; ++j) {
            C(static_cast<Eigen::Index>(q), static_cast<Eigen::Index>(j)) = row[n0 + j];
            C(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(q)) = row[n0 + j];
        }
    }
    C.diagonal().array() += jitter_eff_;

    // Schur complement of the existing factor: S = C - X^T X, X = L^{-1} B.
    Eigen::MatrixXd X = B;
    chol_.triangularView<Eigen::Lower>().solveInPlace(X);
    Eigen::MatrixXd S = C - X.transpose() * X;
    Eigen::LLT<Eigen::MatrixXd> llt(S);
    if (llt.info() != Eigen::Success) {
        // Not extensible at this jitter; rebuild the whole factor, letting
        // the refit escalate as needed so extend keeps fit's semantics.
        out.factorize_full();
        out.refresh_alpha();
        return out;
    }

    Eigen::MatrixXd grown = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n1),
                                                  static_cast<Eigen::Index>(n1));
    grown.topLeftCorner(static_cast<Eigen::Index>(n0), static_cast<Eigen::Index>(n0)) = chol_;
    grown.bottomLeftCorner(static_cast<Eigen::Index>(b), static_cast<Eigen::Index>(n0)) =
        X.transpose();
    grown.bottomRightCorner(static_cast<Eigen::Index>(b), static_cast<Eigen::Index>(b)) =
        Eigen::MatrixXd(llt.matrixL());
    out.chol_ = std::move(grown);
    out.refresh_alpha();
    return out;
}

GpInput GpModel::input(std::size_t i) const {
    if (i >= ts_.size()) {
        throw ValidationError("input index out of range");
    }
    GpInput x;
    x.t = ts_[i];
    x.e.assign(emb_.begin() + static_cast<std::ptrdiff_t>(i * emb_dim_),
               emb_.begin() + static_cast<std::ptrdiff_t>((i + 1) * emb_dim_));
    return x;
}

GpPrediction GpModel::predict(const GpInput& x) const {
    auto batch = predict_batch({x});
    return batch[0];
}

std::vector<GpPrediction> GpModel::predict_batch(const std::vector<GpInput>& xs) const {
    for (const auto& x : xs) {
        if (x.e.size() != emb_dim_) {
            throw ValidationError("query embedding dimension mismatch");
        }
    }
    const double kss = kernel_value(coeffs_, 0.0, 0.0);
    const auto n = static_cast<Eigen::Index>(ts_.size());
    const auto m = static_cast<Eigen::Index>(xs.size());
    std::vector<GpPrediction> out(xs.size());
    if (n == 0) {
        for (auto& p : out) p = {0.0, kss};
        return out;
    }

    Eigen::MatrixXd Ks(n, m);
    for (Eigen::Index q = 0; q < m; ++q) {
        const auto& x = xs[static_cast<std::size_t>(q)];
        cross_covariance(x.t, x.e.data(), ts_.size(), Ks.col(q).data());
    }
    Eigen::VectorXd means = Ks.transpose() * alpha_;
    // One triangular-solve pass over all query columns gives the variances.
    Eigen::MatrixXd V = Ks;
    chol_.triangularView<Eigen::Lower>().solveInPlace(V);
    for (Eigen::Index q = 0; q < m; ++q) {
        double var = kss - V.col(q).squaredNorm();
        if (var < kVarianceSlack) {
            throw NumericalError("predictive variance " + std::to_string(var) +
                                 " below the roundoff floor; model is inconsistent");
        }
        out[static_cast<std::size_t>(q)] = {means(q), var < 0.0 ? 0.0 : var};
    }
    return out;
}

namespace {

// Pairwise data that does not depend on the hyperparameters, built once
// and reused across likelihood evaluations.
struct PairCache {
    Eigen::Index n = 0;
    Eigen::ArrayXXd dt, de2, u, s;  // time lag, embedding distance^2, lag^2, sin^2(pi dt)
    Eigen::VectorXd y;
};

PairCache build_pairs(const std::vector<GpInput>& xs, const std::vector<double>& y) {
    PairCache c;
    c.n = static_cast<Eigen::Index>(xs.size());
    c.dt.resize(c.n, c.n);
    c.de2.resize(c.n, c.n);
    c.u.resize(c.n, c.n);
    c.s.resize(c.n, c.n);
    for (Eigen::Index i = 0; i < c.n; ++i) {
        const auto& xi = xs[static_cast<std::size_t>(i)];
        for (Eigen::Index j = 0; j < c.n; ++j) {
            const auto& xj = xs[static_cast<std::size_t>(j)];
            double dt = xj.t - xi.t;
            double de2 = 0.0;
            for (std::size_t k = 0; k < xi.e.size(); ++k) {
                double d = xi.e[k] - xj.e[k];
                de2 += d * d;
            }
            c.dt(i, j) = dt;
            c.de2(i, j) = de2;
            c.u(i, j) = dt * dt;
            c.s(i, j) = sinpi_sq(dt);
        }
    }
    c.y = Eigen::Map<const Eigen::VectorXd>(y.data(), c.n);
    return c;
}

struct LmlEval {
    bool factored = false;
    bool ok = false;
    double value = -std::numeric_limits<double>::infinity();
    Eigen::LLT<Eigen::MatrixXd> llt;
    Eigen::VectorXd alpha;
    Eigen::ArrayXXd per, rq, se;
};

[[noreturn]] void throw_lml_failure(const LmlEval& ev) {
    if (!ev.factored) {
        throw NumericalError("covariance factorization failed while evaluating the "
                             "marginal likelihood");
    }
    throw NumericalError("marginal likelihood is not finite for these hyperparameters; "
                         "start from a different initialization");
}

// Likelihood of the cached instance at theta, escalating jitter like fit()
// does. ok=false only if even the escalated factorization fails.
LmlEval eval_lml(const Hyperparameters& h, const PairCache& c) {
    LmlEval ev;
    if (!h.all_positive()) return ev;
    KernelCoeffs coeffs = KernelCoeffs::from(h);
    const simd::Ops& ops = simd::active();
    const auto total = static_cast<std::size_t>(c.n * c.n);
    ev.per.resize(c.n, c.n);
    ev.rq.resize(c.n, c.n);
    ev.se.resize(c.n, c.n);
    ops.kernel_terms(coeffs, c.dt.data(), c.de2.data(), ev.per.data(), ev.rq.data(),
                     ev.se.data(), total);
    Eigen::MatrixXd K = (ev.per + ev.rq + ev.se).matrix();

    double j = h.jitter;
    for (int attempt = 0; attempt <= kJitterRetries; ++attempt) {
        Eigen::MatrixXd A = K;
        A.diagonal().array() += j;
        ev.llt.compute(A);
        if (ev.llt.info() == Eigen::Success) {
            ev.factored = true;
            ev.alpha = ev.llt.solve(c.y);
            double log_det_half = Eigen::MatrixXd(ev.llt.matrixL())
                                      .diagonal()
                                      .array()
                                      .log()
                                      .sum();
            ev.value = -0.5 * c.y.dot(ev.alpha) - log_det_half -
                       0.5 * static_cast<double>(c.n) * std::log(2.0 * M_PI);
            ev.ok = std::isfinite(ev.value);
            return ev;
        }
        j *= 10.0;
    }
    return ev;
}

std::array<double, Hyperparameters::kCount> lml_gradient(const Hyperparameters& h,
                                                         const PairCache& c,
                                                         const LmlEval& ev) {
    const auto& t = h.theta;
    Eigen::MatrixXd Kinv =
        ev.llt.solve(Eigen::MatrixXd::Identity(c.n, c.n));
    Eigen::ArrayXXd W = (ev.alpha * ev.alpha.transpose() - Kinv).array();

    // d(theta_6) and d(theta_7) need the rational term's base 1 + u/(2 t6 t7).
    Eigen::ArrayXXd A = 1.0 + c.u / (2.0 * t[5] * t[6]);
    Eigen::ArrayXXd lnA = A.log();
    Eigen::ArrayXXd u_over_A = c.u / (2.0 * t[6] * A);

    std::array<Eigen::ArrayXXd, Hyperparameters::kCount> dk;
    dk[0] = 2.0 * ev.per;
    dk[1] = ev.per * c.u / (t[1] * t[1]);
    dk[2] = ev.per * c.de2 / (t[2] * t[2]);
    dk[3] = ev.per * c.s * (4.0 / (t[3] * t[3]));
    dk[4] = 2.0 * ev.rq;
    dk[5] = ev.rq * (u_over_A - t[5] * lnA);
    dk[6] = ev.rq * u_over_A;
    dk[7] = ev.rq * c.de2 / (t[7] * t[7]);
    dk[8] = 2.0 * ev.se;
    dk[9] = ev.se * c.de2 / (t[9] * t[9]);
    dk[10] = ev.se * c.u / (t[10] * t[10]);

    std::array<double, Hyperparameters::kCount> grad{};
    for (std::size_t j = 0; j < Hyperparameters::kCount; ++j) {
        grad[j] = 0.5 * (W * dk[j]).sum();
    }
    return grad;
}

}  // namespace

double log_marginal_likelihood(const Hyperparameters& h, const std::vector<GpInput>& xs,
                               const std::vector<double>& y) {
    if (xs.empty()) {
        throw ValidationError("log marginal likelihood needs at least one observation");
    }
    validate_points(xs, y, xs[0].e.size());
    PairCache c = build_pairs(xs, y);
    LmlEval ev = eval_lml(h, c);
    if (!ev.ok) throw_lml_failure(ev);
    return ev.value;
}

LogMarginal log_marginal_gradient(const Hyperparameters& h, const std::vector<GpInput>& xs,
                                  const std::vector<double>& y) {
    if (xs.empty()) {
        throw ValidationError("log marginal likelihood needs at least one observation");
    }
    validate_points(xs, y, xs[0].e.size());
    PairCache c = build_pairs(xs, y);
    LmlEval ev = eval_lml(h, c);
    if (!ev.ok) throw_lml_failure(ev);
    LogMarginal out;
    out.value = ev.value;
    out.grad_log = lml_gradient(h, c, ev);
    return out;
}

Hyperparameters optimize_hyperparameters(const Hyperparameters& theta0,
                                         const std::vector<GpInput>& xs,
                                         const std::vector<double>& y) {
    if (xs.size() < 2) {
        throw ValidationError("hyperparameter optimization needs at least 2 observations");
    }
    validate_points(xs, y, xs[0].e.size());
    if (!theta0.all_positive()) {
        throw ValidationError("hyperparameters must be positive and finite");
    }
    PairCache c = build_pairs(xs, y);

    Hyperparameters cur = theta0;
    LmlEval ev = eval_lml(cur, c);
    if (!ev.ok) {
        throw NumericalError("marginal likelihood is not finite at the starting "
                             "hyperparameters; start from a different initialization");
    }

    constexpr int kMaxIters = 100;
    constexpr int kMaxHalvings = 40;
    constexpr double kTrialStep = 0.05;
    constexpr double kGradTol = 1e-4;
    constexpr double kMaxLogStep = 10.0;  // keeps exp() finite on wild gradients

    for (int iter = 0; iter < kMaxIters; ++iter) {
        auto grad = lml_gradient(cur, c, ev);
        double norm = 0.0;
        for (double g : grad) norm += g * g;
        norm = std::sqrt(norm);
        if (norm < kGradTol) break;

        double step = kTrialStep;
        bool improved = false;
        for (int halving = 0; halving < kMaxHalvings; ++halving) {
            Hyperparameters trial = cur;
            for (std::size_t j = 0; j < Hyperparameters::kCount; ++j) {
                double delta = step * grad[j];
                delta = std::max(-kMaxLogStep, std::min(kMaxLogStep, delta));
                trial.theta[j] = cur.theta[j] * std::exp(delta);
            }
            LmlEval trial_ev = eval_lml(trial, c);
            if (trial_ev.ok && trial_ev.value > ev.value) {
                cur = trial;
                ev = std::move(trial_ev);
                improved = true;
                break;
            }
            step *= 0.5;
        }
        if (!improved) break;  // no ascent direction at any step length
    }
    return cur;
}

}  // namespace htte
