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

#include "htte/embeddings.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>

#include "htte/errors.hpp"

namespace htte {

namespace {

constexpr double kStopRelImprovement = 1e-5;
constexpr int kMaxHalvings = 30;

double uniform_from(std::mt19937_64& g, double lo, double hi) {
    double u = static_cast<double>(g() >> 11) * 0x1.0p-53;
    return lo + (hi - lo) * u;
}

// Squared error plus the L2 penalty the per-cell updates descend on.
double objective(const TravelTimeMatrix& m, const Eigen::MatrixXd& P,
                 const Eigen::MatrixXd& Q, double lambda) {
    double J = 0.0;
    for (const auto& [cell, v] : m.cells) {
        auto i = static_cast<Eigen::Index>(cell.first);
        auto w = static_cast<Eigen::Index>(cell.second);
        double err = v - P.row(i).dot(Q.row(w));
        J += err * err + lambda * (P.row(i).squaredNorm() + Q.row(w).squaredNorm());
    }
    return J;
}

}  // namespace

TravelTimeMatrix build_matrix(const std::vector<TravelTimeReport>& reports,
                              const SegmentStats& stats) {
    TravelTimeMatrix m;
    if (reports.empty()) return m;

    std::int64_t lo = std::numeric_limits<std::int64_t>::max();
    std::int64_t hi = std::numeric_limits<std::int64_t>::min();
    std::map<SegmentId, std::map<std::int64_t, std::pair<double, std::size_t>>> sums;
    for (const auto& r : reports) {
        auto w = static_cast<std::int64_t>(
            std::floor(r.t_exit / AvgTravelTimeTable::kWindowSeconds));
        lo = std::min(lo, w);
        hi = std::max(hi, w);
        auto& acc = sums[r.segment_id][w];
        acc.first += standardize(r.travel_time, r.segment_id, stats);
        acc.second += 1;
    }

    m.first_window = lo;
    m.window_count = static_cast<std::size_t>(hi - lo + 1);
    m.segment_ids.reserve(sums.size());
    for (const auto& [id, by_window] : sums) {
        auto row = m.segment_ids.size();
        m.segment_ids.push_back(id);
        for (const auto& [w, acc] : by_window) {
            m.cells[{row, static_cast<std::size_t>(w - lo)}] =
                acc.first / static_cast<double>(acc.second);
        }
    }
    return m;
}

EmbeddingSet factorize(const TravelTimeMatrix& m, const FactorizeConfig& cfg,
                       std::vector<double>* trace) {
    if (cfg.dim < 1) throw ValidationError("embedding dimension must be at least 1");
    if (!(cfg.lr > 0.0) || !(cfg.lambda > 0.0)) {
        throw ValidationError("learning rate and regularization must be positive");
    }

    EmbeddingSet e;
    e.dim = cfg.dim;
    auto n = static_cast<Eigen::Index>(m.rows());
    auto w = static_cast<Eigen::Index>(m.window_count);
    auto d = static_cast<Eigen::Index>(cfg.dim);
    e.P.resize(n, d);
    e.Q.resize(w, d);

    std::mt19937_64 gen(cfg.seed);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index k = 0; k < d; ++k) e.P(i, k) = uniform_from(gen, -0.1, 0.1);
    }
    for (Eigen::Index j = 0; j < w; ++j) {
        for (Eigen::Index k = 0; k < d; ++k) e.Q(j, k) = uniform_from(gen, -0.1, 0.1);
    }
    if (m.cells.empty()) return e;

    double lr = cfg.lr;
    double prev = objective(m, e.P, e.Q, cfg.lambda);
    if (trace) trace->push_back(prev);

    Eigen::VectorXd p(d), q(d);
    for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
        Eigen::MatrixXd snapshotP = e.P;
        Eigen::MatrixXd snapshotQ = e.Q;
        int halvings = 0;
        double J;
        for (;;) {
            for (const auto& [cell, v] : m.cells) {
                auto i = static_cast<Eigen::Index>(cell.first);
                auto j = static_cast<Eigen::Index>(cell.second);
                double err = v - e.P.row(i).dot(e.Q.row(j));
                p = e.P.row(i);
                q = e.Q.row(j);
                e.P.row(i) += lr * (err * q - cfg.lambda * p).transpose();
                e.Q.row(j) += lr * (err * p - cfg.lambda * q).transpose();
            }
            J = objective(m, e.P, e.Q, cfg.lambda);
            if (std::isfinite(J) && J <= prev) break;
            e.P = snapshotP;
            e.Q = snapshotQ;
            if (++halvings > kMaxHalvings) {
                if (!std::isfinite(J)) {
                    throw NumericalError("factorization diverged at epoch " +
                                         std::to_string(epoch) +
                                         "; retry with a smaller learning rate");
                }
                return e;  // no step length makes progress, keep current factors
            }
            lr *= 0.5;
        }
        if (trace) trace->push_back(J);
        double improvement = prev > 0.0 ? (prev - J) / prev : 0.0;
        prev = J;
        if (improvement < kStopRelImprovement) break;
    }
    return e;
}

double reconstruction_error(const TravelTimeMatrix& m, const EmbeddingSet& e) {
    if (m.cells.empty()) return 0.0;
    if (e.P.rows() != static_cast<Eigen::Index>(m.rows()) ||
        e.Q.rows() != static_cast<Eigen::Index>(m.window_count) ||
        e.P.cols() != e.Q.cols()) {
        throw ValidationError("embedding shapes do not match the matrix");
    }
    double sum = 0.0;
    for (const auto& [cell, v] : m.cells) {
        double err = v - e.P.row(static_cast<Eigen::Index>(cell.first))
                             .dot(e.Q.row(static_cast<Eigen::Index>(cell.second)));
        sum += err * err;
    }
    return sum / static_cast<double>(m.cells.size());
}

io::EmbeddingTable to_table(const TravelTimeMatrix& m, const EmbeddingSet& e) {
    if (e.P.rows() != static_cast<Eigen::Index>(m.rows())) {
        throw ValidationError("embedding rows do not match the matrix");
    }
    io::EmbeddingTable table;
    table.dim = e.dim;
    for (std::size_t i = 0; i < m.rows(); ++i) {
        auto row = e.P.row(static_cast<Eigen::Index>(i));
        table.segments[m.segment_ids[i]] = std::vector<double>(row.begin(), row.end());
    }
    table.windows.reserve(static_cast<std::size_t>(e.Q.rows()));
    for (Eigen::Index j = 0; j < e.Q.rows(); ++j) {
        auto row = e.Q.row(j);
        table.windows.emplace_back(row.begin(), row.end());
    }
    return table;
}

io::EmbeddingTable complete_embeddings(const RoadNetwork& net, const io::EmbeddingTable& learned) {
    io::EmbeddingTable out = learned;
    for (const auto& [id, seg] : net.segments()) {
        if (out.segments.count(id)) continue;
        std::vector<double> mean(learned.dim, 0.0);
        std::size_t found = 0;
        auto add = [&](SegmentId nb) {
            auto it = learned.segments.find(nb);
            if (it == learned.segments.end()) return;
            for (std::size_t k = 0; k < learned.dim; ++k) mean[k] += it->second[k];
            ++found;
        };
        for (SegmentId nb : seg.successors) add(nb);
        for (SegmentId nb : net.predecessors(id)) add(nb);
        if (found > 0) {
            for (auto& v : mean) v /= static_cast<double>(found);
        }
        out.segments[id] = std::move(mean);
    }
    return out;
}

}  // namespace htte
