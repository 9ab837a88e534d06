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

#include <Eigen/Dense>

#include <array>
#include <cstddef>
#include <vector>

#include "htte/kernels.hpp"

namespace htte {

// One covariance input: time in days plus the segment's latent embedding.
struct GpInput {
    double t = 0.0;
    std::vector<double> e;
};

struct GpPrediction {
    double mean = 0.0;
    double variance = 0.0;
};

// Zero-mean Gaussian process with exact inference over the composite
// covariance. Values are immutable after construction: extended() returns
// a new model, so readers can keep serving the old one during an update.
class GpModel {
public:
    // Empty model: predictions are the prior (mean 0, variance k(x,x)).
    GpModel(const Hyperparameters& h, std::size_t emb_dim);

    // Exact fit. Cholesky failure retries with jitter escalated tenfold up
    // to three times, then throws NumericalError. Targets must already be
    // standardized by the caller.
    static GpModel fit(const Hyperparameters& h, std::size_t emb_dim,
                       const std::vector<GpInput>& xs, const std::vector<double>& y);

    // Incremental training-set extension by block Cholesky: one triangular
    // solve for the cross block plus a factorization of the Schur
    // complement, O(n^2 b) for b new points. Falls back to a full refit
    // (with jitter escalation) if the complement is not positive definite.
    // Predictions match fit() on the concatenated data.
    GpModel extended(const std::vector<GpInput>& xs, const std::vector<double>& y) const;

    GpPrediction predict(const GpInput& x) const;
    // Batch prediction with a single triangular-solve pass over all query
    // columns.
    std::vector<GpPrediction> predict_batch(const std::vector<GpInput>& xs) const;

    std::size_t size() const { return ts_.size(); }
    std::size_t embedding_dim() const { return emb_dim_; }
    const Hyperparameters& hyperparameters() const { return hyper_; }
    // The jitter actually on the diagonal (>= hyper.jitter after escalation).
    double jitter_used() const { return jitter_eff_; }

    // Recomputes the covariance matrix (without jitter) from the stored
    // inputs; for invariant checks, not the serving path.
    Eigen::MatrixXd gram() const;
    const Eigen::MatrixXd& cholesky_factor() const { return chol_; }

    // Timestamps of the stored points in insertion order, for eviction.
    const std::vector<double>& times() const { return ts_; }
    const std::vector<double>& targets() const { return y_; }
    GpInput input(std::size_t i) const;

private:
    Hyperparameters hyper_;
    KernelCoeffs coeffs_;
    std::size_t emb_dim_ = 0;
    double jitter_eff_ = 0.0;

    std::vector<double> ts_;    // n
    std::vector<double> emb_;   // n x emb_dim, row-major
    std::vector<double> y_;     // n
    Eigen::MatrixXd chol_;      // lower Cholesky factor of K + jitter I
    Eigen::VectorXd alpha_;     // (K + jitter I)^{-1} y

    void factorize_full();
    void refresh_alpha();
    // Covariance between stored points [0, m) and one query input.
    void cross_covariance(double t, const double* e, std::size_t m, double* out) const;
};

// Log marginal likelihood log p(y | X, theta) and its gradient with
// respect to log(theta_j). Exposed so the gradient can be checked against
// finite differences.
struct LogMarginal {
    double value = 0.0;
    std::array<double, Hyperparameters::kCount> grad_log{};
};

double log_marginal_likelihood(const Hyperparameters& h, const std::vector<GpInput>& xs,
                               const std::vector<double>& y);

LogMarginal log_marginal_gradient(const Hyperparameters& h, const std::vector<GpInput>& xs,
                                  const std::vector<double>& y);

// Gradient ascent on the log marginal likelihood in log-parameter space,
// fixed trial step 0.05 with backtracking halving; stops after 100
// iterations or when the gradient norm drops below 1e-4. The result never
// has lower likelihood than theta0. Jitter is kept fixed.
Hyperparameters optimize_hyperparameters(const Hyperparameters& theta0,
                                         const std::vector<GpInput>& xs,
                                         const std::vector<double>& y);

}  // namespace htte
