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

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "htte/baselines.hpp"
#include "htte/errors.hpp"
#include "htte/estimator.hpp"
#include "htte/io.hpp"
#include "htte/pathlets.hpp"
#include "htte/synth.hpp"

namespace {

using namespace htte;

double to_double(const std::string& s, const std::string& key) {
    try {
        std::size_t used = 0;
        double v = std::stod(s, &used);
        if (used != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw ValidationError("config key '" + key + "': bad number '" + s + "'");
    }
}

std::int64_t to_int(const std::string& s, const std::string& key) {
    try {
        std::size_t used = 0;
        std::int64_t v = std::stoll(s, &used);
        if (used != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw ValidationError("config key '" + key + "': bad integer '" + s + "'");
    }
}

bool to_bool(const std::string& s, const std::string& key) {
    if (s == "1" || s == "true") return true;
    if (s == "0" || s == "false") return false;
    throw ValidationError("config key '" + key + "': bad boolean '" + s + "'");
}

// Every flag that mirrors a config file key registers here, so a config
// value fills in exactly when the flag is absent from the command line.
class KeyedOptions {
public:
    explicit KeyedOptions(CLI::App* sub) : sub_(sub) {}

    template <typename T>
    void add(const std::string& key, T& var, const std::string& desc) {
        CLI::Option* opt = sub_->add_option("--" + key, var, desc);
        setters_[key] = [&var, key, opt](const std::string& raw) {
            if (opt->count() > 0) return;  // command line wins
            if constexpr (std::is_same_v<T, double>) {
                var = to_double(raw, key);
            } else if constexpr (std::is_same_v<T, bool>) {
                var = to_bool(raw, key);
            } else if constexpr (std::is_same_v<T, std::string>) {
                var = raw;
            } else {
                var = static_cast<T>(to_int(raw, key));
            }
        };
    }

    void apply(const std::map<std::string, std::string>& config) const {
        for (const auto& [key, value] : config) {
            auto it = setters_.find(key);
            if (it != setters_.end()) it->second(value);
        }
    }

    std::vector<std::string> keys() const {
        std::vector<std::string> out;
        for (const auto& [key, fn] : setters_) {
            (void)fn;
            out.push_back(key);
        }
        return out;
    }

private:
    CLI::App* sub_;
    std::map<std::string, std::function<void(const std::string&)>> setters_;
};

// "segment:start:duration:slowdown", comma-separated for several incidents.
std::vector<Incident> parse_incidents(const std::string& text) {
    std::vector<Incident> out;
    if (text.empty()) return out;
    std::size_t begin = 0;
    while (begin <= text.size()) {
        std::size_t end = text.find(',', begin);
        if (end == std::string::npos) end = text.size();
        std::string item = text.substr(begin, end - begin);
        std::vector<std::string> parts;
        std::size_t p = 0;
        while (p <= item.size()) {
            std::size_t q = item.find(':', p);
            if (q == std::string::npos) q = item.size();
            parts.push_back(item.substr(p, q - p));
            p = q + 1;
        }
        if (parts.size() != 4) {
            throw ValidationError(
                "incident '" + item +
                "': expected segment:start:duration:slowdown");
        }
        Incident inc;
        inc.segment_id = to_int(parts[0], "incidents");
        inc.t_start = to_double(parts[1], "incidents");
        inc.duration_s = to_double(parts[2], "incidents");
        inc.slowdown = to_double(parts[3], "incidents");
        out.push_back(inc);
        begin = end + 1;
    }
    return out;
}

void print_report(const char* method, std::size_t queries,
                  const Metrics& m, const double* latency_ms) {
    std::printf("method: %s\n", method);
    std::printf("queries: %zu\n", queries);
    std::printf("with_actual: %lld\n", static_cast<long long>(m.count));
    std::printf("mae_s: %.6f\n", m.mae_s);
    std::printf("rmse_s: %.6f\n", m.rmse_s);
    std::printf("mape_pct: %.6f\n", m.mape_pct);
    if (latency_ms != nullptr) {
        std::printf("mean_latency_ms: %.6f\n", *latency_ms);
    }
}

std::vector<MapMatchedTrajectory> match_file(const std::string& path,
                                             const RoadNetwork& net) {
    std::vector<MapMatchedTrajectory> matched;
    for (const auto& raw : io::read_trajectories(path)) {
        auto parts = match_nearest(raw, net);
        matched.insert(matched.end(), parts.begin(), parts.end());
    }
    return matched;
}

// Trajectories to time-sorted reports, at segment or pathlet granularity.
std::vector<TravelTimeReport> reports_from_trajectories(
    const std::string& path, const RoadNetwork& net,
    const PathletDictionary* dict) {
    std::vector<TravelTimeReport> reports;
    auto matched = match_file(path, net);
    if (dict != nullptr) {
        reports = pathlet_reports(matched, *dict);
    } else {
        for (const auto& mm : matched) {
            auto visits = extract_reports(mm);
            reports.insert(reports.end(), visits.begin(), visits.end());
        }
    }
    std::stable_sort(reports.begin(), reports.end(),
                     [](const TravelTimeReport& a, const TravelTimeReport& b) {
                         return a.t_exit < b.t_exit;
                     });
    return reports;
}

// In pathlet mode report streams come from trajectory files and query paths
// are re-expressed as minimal pathlet covers over the pathlet network.
struct PipelineInputs {
    RoadNetwork net;
    std::vector<TravelTimeReport> historical;
    std::vector<TravelTimeReport> stream;
    std::vector<PathQuery> queries;
};

PipelineInputs load_pipeline(const std::string& network_path,
                             const std::string& historical_path,
                             const std::string& stream_path,
                             const std::string& queries_path,
                             const std::string& pathlets_path) {
    PipelineInputs in;
    RoadNetwork base = io::read_network(network_path);
    if (pathlets_path.empty()) {
        in.net = std::move(base);
        if (!historical_path.empty()) {
            in.historical = io::read_reports(historical_path);
        }
        if (!stream_path.empty()) in.stream = io::read_reports(stream_path);
        if (!queries_path.empty()) in.queries = io::read_queries(queries_path);
        return in;
    }

    PathletDictionary dict = read_pathlets(pathlets_path);
    in.net = pathlet_network(base, dict);
    if (!historical_path.empty()) {
        in.historical = reports_from_trajectories(historical_path, base, &dict);
    }
    if (!stream_path.empty()) {
        in.stream = reports_from_trajectories(stream_path, base, &dict);
    }
    if (!queries_path.empty()) {
        for (auto& q : io::read_queries(queries_path)) {
            std::vector<SegmentId> cover;
            for (PathletId id : decompose(q.segments, dict)) cover.push_back(id);
            q.segments = std::move(cover);
            in.queries.push_back(std::move(q));
        }
    }
    return in;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"htte: streaming travel time estimation over road networks"};
    app.require_subcommand(1);

    std::string config_path;
    app.add_option("--config", config_path,
                   "key=value file; command line flags override its keys");
    std::optional<std::uint64_t> seed;
    app.add_option("--seed", seed, "seed for generation and training");
    std::string pathlets_path;
    app.add_option("--pathlets", pathlets_path,
                   "pathlet dictionary; runs the pipeline at pathlet granularity");

    // synth
    auto* synth_cmd = app.add_subcommand("synth", "generate a synthetic city");
    SynthConfig synth_cfg;
    std::string synth_out;
    std::string incidents_text;
    KeyedOptions synth_keys(synth_cmd);
    synth_cmd->add_option("--out", synth_out, "output directory")->required();
    synth_keys.add("rows", synth_cfg.rows, "lattice rows");
    synth_keys.add("cols", synth_cfg.cols, "lattice cols");
    synth_keys.add("block_m", synth_cfg.block_m, "lattice spacing, metres");
    synth_keys.add("days", synth_cfg.days, "days to simulate");
    synth_keys.add("vehicles", synth_cfg.vehicles, "fleet size");
    synth_keys.add("held_out_vehicles", synth_cfg.held_out_vehicles,
                   "vehicles whose trips become queries");
    synth_keys.add("trips_per_day", synth_cfg.trips_per_day, "trips per vehicle");
    synth_keys.add("trip_len", synth_cfg.trip_len, "segments per trip");
    synth_keys.add("sample_prob", synth_cfg.sample_prob,
                   "fraction of traversals that report");
    synth_keys.add("noise_sigma", synth_cfg.noise_sigma,
                   "lognormal noise per traversal");
    synth_keys.add("incidents", incidents_text,
                   "segment:start:duration:slowdown[,...]");

    // pathlets
    auto* pathlets_cmd =
        app.add_subcommand("pathlets", "build a pathlet dictionary from trips");
    std::string pl_network, pl_trajectories, pl_out;
    PathletConfig pl_cfg;
    KeyedOptions pathlet_keys(pathlets_cmd);
    pathlets_cmd->add_option("--network", pl_network, "network csv")->required();
    pathlets_cmd->add_option("--trajectories", pl_trajectories,
                             "raw trajectories csv")
        ->required();
    pathlets_cmd->add_option("--out", pl_out, "dictionary csv")->required();
    pathlet_keys.add("min_support", pl_cfg.min_support,
                     "trajectories a sub-path must appear in");
    std::int64_t pl_max_len = static_cast<std::int64_t>(pl_cfg.max_len);
    pathlet_keys.add("max_len", pl_max_len, "longest multi-segment pathlet");

    // shared engine keys for train and replay
    EngineConfig train_cfg, replay_cfg;
    auto add_engine_keys = [](KeyedOptions& keys, EngineConfig& cfg,
                              bool training) {
        keys.add("cell_size_m", cfg.partition.cell_size_m, "grid cell size");
        keys.add("spatial_overlap_m", cfg.partition.spatial_overlap_m,
                 "cell overlap band");
        keys.add("window_min", cfg.partition.window_min, "window length, minutes");
        keys.add("temporal_overlap_min", cfg.partition.temporal_overlap_min,
                 "window overlap, minutes");
        keys.add("max_points_per_model", cfg.partition.max_points_per_model,
                 "eviction cap per model");
        keys.add("sigma_floor", cfg.stats.sigma_floor,
                 "minimum per-segment std, seconds");
        keys.add("default_speed", cfg.stats.default_speed,
                 "fallback speed for unseen segments, m/s");
        if (training) {
            keys.add("embedding_dim", cfg.factorize.dim, "latent dimension");
            keys.add("embedding_lr", cfg.factorize.lr, "factorization step size");
            keys.add("embedding_lambda", cfg.factorize.lambda,
                     "factorization regularization");
            keys.add("embedding_epochs", cfg.factorize.epochs,
                     "factorization epochs");
            keys.add("hyper_subsample", cfg.hyper_subsample,
                     "max points for hyperparameter fitting");
            keys.add("fit_hyperparameters", cfg.fit_hyperparameters,
                     "optimize kernel hyperparameters");
        }
    };

    // train
    auto* train_cmd = app.add_subcommand("train", "offline initialization");
    std::string tr_network, tr_reports, tr_trajectories, tr_out;
    KeyedOptions train_keys(train_cmd);
    train_cmd->add_option("--network", tr_network, "network csv")->required();
    train_cmd->add_option("--reports", tr_reports, "historical reports csv");
    train_cmd->add_option("--trajectories", tr_trajectories,
                          "raw trajectories csv (required with --pathlets)");
    train_cmd->add_option("--out", tr_out, "artifact directory")->required();
    add_engine_keys(train_keys, train_cfg, true);

    // replay
    auto* replay_cmd =
        app.add_subcommand("replay", "streaming evaluation against queries");
    std::string rp_network, rp_artifacts, rp_historical, rp_stream, rp_queries,
        rp_out;
    double rp_lead = 0.0;
    KeyedOptions replay_keys(replay_cmd);
    replay_cmd->add_option("--network", rp_network, "network csv")->required();
    replay_cmd->add_option("--artifacts", rp_artifacts, "train output directory")
        ->required();
    replay_cmd->add_option("--historical", rp_historical,
                           "reports that seed the models");
    replay_cmd->add_option("--reports", rp_stream, "streamed reports csv");
    replay_cmd->add_option("--queries", rp_queries, "queries csv")->required();
    replay_cmd->add_option("--out", rp_out, "per-query estimates csv")->required();
    replay_keys.add("query_lead_s", rp_lead,
                    "how far ahead of departure a query arrives");
    add_engine_keys(replay_keys, replay_cfg, false);

    // baseline
    auto* baseline_cmd =
        app.add_subcommand("baseline", "pure historical or real-time reference");
    std::string bl_name, bl_network, bl_historical, bl_stream, bl_queries, bl_out;
    double bl_lead = 0.0;
    StatsConfig bl_stats;
    KeyedOptions baseline_keys(baseline_cmd);
    baseline_cmd->add_option("--name", bl_name, "historical-avg or last-value")
        ->required();
    baseline_cmd->add_option("--network", bl_network, "network csv")->required();
    baseline_cmd->add_option("--historical", bl_historical,
                             "reports behind the average table");
    baseline_cmd->add_option("--reports", bl_stream, "streamed reports csv");
    baseline_cmd->add_option("--queries", bl_queries, "queries csv")->required();
    baseline_cmd->add_option("--out", bl_out, "per-query estimates csv");
    baseline_keys.add("query_lead_s", bl_lead,
                      "how far ahead of departure a query arrives");
    baseline_keys.add("sigma_floor", bl_stats.sigma_floor,
                      "minimum per-segment std, seconds");
    baseline_keys.add("default_speed", bl_stats.default_speed,
                      "fallback speed for unseen segments, m/s");

    // evaluate
    auto* eval_cmd =
        app.add_subcommand("evaluate", "metrics from a per-query estimates csv");
    std::string ev_estimates, ev_method = "from-file";
    eval_cmd->add_option("--estimates", ev_estimates, "estimates csv")->required();
    eval_cmd->add_option("--method", ev_method, "label for the report");

    // Global flags may appear after the subcommand name.
    for (CLI::App* sub : {synth_cmd, pathlets_cmd, train_cmd, replay_cmd,
                          baseline_cmd, eval_cmd}) {
        sub->fallthrough();
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }

    try {
        std::map<std::string, std::string> config;
        if (!config_path.empty()) config = io::read_config(config_path);
        if (auto it = config.find("seed"); it != config.end() && !seed) {
            seed = static_cast<std::uint64_t>(to_int(it->second, "seed"));
        }
        for (KeyedOptions* keys : {&synth_keys, &pathlet_keys, &train_keys,
                                   &replay_keys, &baseline_keys}) {
            keys->apply(config);
        }
        {
            std::vector<std::string> known = {"seed"};
            for (KeyedOptions* keys : {&synth_keys, &pathlet_keys, &train_keys,
                                       &replay_keys, &baseline_keys}) {
                auto k = keys->keys();
                known.insert(known.end(), k.begin(), k.end());
            }
            for (const auto& [key, value] : config) {
                (void)value;
                if (std::find(known.begin(), known.end(), key) == known.end()) {
                    throw ValidationError("unknown config key '" + key + "'");
                }
            }
        }

        if (synth_cmd->parsed()) {
            if (seed) synth_cfg.seed = *seed;
            synth_cfg.incidents = parse_incidents(incidents_text);
            SynthData data = generate_synth(synth_cfg);
            std::filesystem::create_directories(synth_out);
            io::write_network(synth_out + "/network.csv", data.network);
            io::write_trajectories(synth_out + "/trajectories.csv",
                                   data.trajectories);
            io::write_reports(synth_out + "/reports.csv", data.reports);
            io::write_queries(synth_out + "/queries.csv", data.queries);
            std::printf(
                "wrote %zu segments, %zu trajectories, %zu reports, %zu "
                "queries to %s\n",
                data.network.size(), data.trajectories.size(),
                data.reports.size(), data.queries.size(), synth_out.c_str());
            return 0;
        }

        if (pathlets_cmd->parsed()) {
            if (pl_max_len < 2) {
                throw ValidationError("max_len must be at least 2");
            }
            pl_cfg.max_len = static_cast<std::size_t>(pl_max_len);
            RoadNetwork net = io::read_network(pl_network);
            auto matched = match_file(pl_trajectories, net);
            PathletDictionary dict = build_dictionary(matched, pl_cfg);
            write_pathlets(pl_out, dict);
            std::size_t multi = 0;
            for (const auto& [id, p] : dict.pathlets) {
                (void)id;
                if (p.segments.size() > 1) ++multi;
            }
            std::printf("wrote %zu pathlets (%zu multi-segment) to %s\n",
                        dict.size(), multi, pl_out.c_str());
            return 0;
        }

        if (train_cmd->parsed()) {
            if (seed) train_cfg.factorize.seed = *seed;
            if (!pathlets_path.empty() && tr_trajectories.empty()) {
                throw ValidationError(
                    "train with --pathlets needs --trajectories");
            }
            if (tr_reports.empty() && tr_trajectories.empty()) {
                throw ValidationError(
                    "train needs --reports or --trajectories");
            }
            RoadNetwork base = io::read_network(tr_network);
            RoadNetwork net = base;
            PathletDictionary dict;
            if (!pathlets_path.empty()) {
                dict = read_pathlets(pathlets_path);
                net = pathlet_network(base, dict);
            }
            std::vector<TravelTimeReport> reports;
            if (!tr_trajectories.empty()) {
                reports = reports_from_trajectories(
                    tr_trajectories, base,
                    pathlets_path.empty() ? nullptr : &dict);
            } else {
                reports = io::read_reports(tr_reports);
            }
            Engine engine(std::move(net), train_cfg);
            engine.offline_init(reports, tr_out);
            std::printf("trained on %zu reports; %zu models; artifacts in %s\n",
                        reports.size(), engine.index().model_count(),
                        tr_out.c_str());
            return 0;
        }

        if (replay_cmd->parsed()) {
            PipelineInputs in =
                load_pipeline(rp_network, rp_historical, rp_stream, rp_queries,
                              pathlets_path);
            Engine engine(std::move(in.net), replay_cfg);
            engine.restore(in.historical, rp_artifacts);
            ReplayResult result = engine.replay(in.stream, in.queries, rp_lead);
            std::vector<QueryEstimate> rows;
            rows.reserve(result.estimates.size());
            for (const auto& e : result.estimates) rows.push_back(e.summary());
            io::write_estimates(rp_out, rows);
            double mean_latency = 0.0;
            for (double ms : result.latency_ms) mean_latency += ms;
            if (!result.latency_ms.empty()) {
                mean_latency /= static_cast<double>(result.latency_ms.size());
            }
            print_report("htte", result.estimates.size(), result.metrics,
                         &mean_latency);
            return 0;
        }

        if (baseline_cmd->parsed()) {
            PipelineInputs in = load_pipeline(bl_network, bl_historical,
                                              bl_stream, bl_queries,
                                              pathlets_path);
            BaselineResult result =
                run_baseline(bl_name, in.net, in.historical, in.stream,
                             in.queries, bl_lead, bl_stats);
            if (!bl_out.empty()) io::write_estimates(bl_out, result.estimates);
            print_report(bl_name.c_str(), result.estimates.size(),
                         result.metrics, nullptr);
            return 0;
        }

        if (eval_cmd->parsed()) {
            auto estimates = io::read_estimates(ev_estimates);
            Metrics m = compute_metrics(estimates);
            print_report(ev_method.c_str(), estimates.size(), m, nullptr);
            return 0;
        }
    } catch (const ValidationError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    } catch (const NumericalError& e) {
        std::fprintf(stderr, "numerical error: %s\n", e.what());
        return 2;
    }
    return 0;
}
