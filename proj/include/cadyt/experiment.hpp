// Copyright 2026 the cadyt authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <chrono>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "cadyt/bench.hpp"
#include "cadyt/metrics.hpp"
#include "cadyt/search.hpp"

namespace cadyt {

// One full protocol run: generate -> discover -> evaluate, over a seed batch.
struct ExperimentConfig {
    SystemKind system = SystemKind::Diamond;
    int dimension = 4;
    double t_start = 0.0;
    double t_end = 10.0;
    double dt = 0.05;
    double irregularity = 0.0;
    double noise_sigma = 0.005;
    SearchConfig search;
    std::vector<std::uint64_t> seeds;

    void validate() const {
        if (seeds.empty()) throw ValidationError("seed list must be nonempty");
        search.validate();
    }
};

struct SeedResult {
    std::uint64_t seed = 0;
    bool ok = false;
    std::string error;
    int discovered_edges = 0;
    int true_edges = 0;
    MetricReport metrics;
    double runtime_seconds = 0.0;
};

struct Aggregate {
    double mean = 0.0;
    double stddev = 0.0;
    std::size_t count = 0;
};

inline Aggregate aggregate(const std::vector<double>& xs) {
    Aggregate a;
    a.count = xs.size();
    if (xs.empty()) return a;
    for (double x : xs) a.mean += x;
    a.mean /= static_cast<double>(xs.size());
    for (double x : xs) a.stddev += (x - a.mean) * (x - a.mean);
    a.stddev = std::sqrt(a.stddev / static_cast<double>(xs.size()));
    return a;
}

struct ExperimentReport {
    std::vector<SeedResult> rows;
    Aggregate nshd, f1, auprc, discovered_edges, runtime_seconds;
    std::size_t failures = 0;
};

inline SeedResult run_single_seed(const ExperimentConfig& config, std::uint64_t seed) {
    SeedResult row;
    row.seed = seed;
    const auto start = std::chrono::steady_clock::now();
    try {
        const Timeline timeline = make_timeline(config.t_start, config.t_end, config.dt,
                                                config.irregularity,
                                                seed_combine(seed, 0x544cu));
        auto [traj, truth] = generate_benchmark(config.system, config.dimension, timeline,
                                                NoiseSpec(config.noise_sigma),
                                                seed_combine(seed, 0x53494du));
        SearchConfig search = config.search;
        search.score.seed = seed_combine(seed, 0x534541u);
        const DiscoveryResult result = discover(traj, search);
        row.discovered_edges = result.graph.num_edges();
        row.true_edges = truth.num_edges();
        row.metrics = evaluate(result.graph, truth, result.final_gains);
        row.ok = true;
    } catch (const std::exception& ex) {
        row.error = ex.what();
    }
    row.runtime_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return row;
}

// Per-seed failures are recorded, not fatal; the report carries rows for
// every seed plus mean/std aggregates over the successful ones.
inline ExperimentReport run_experiment(const ExperimentConfig& config) {
    config.validate();
    ExperimentReport report;
    std::vector<double> nshd_v, f1_v, auprc_v, edges_v, runtime_v;
    for (std::uint64_t seed : config.seeds) {
        SeedResult row = run_single_seed(config, seed);
        if (row.ok) {
            nshd_v.push_back(row.metrics.nshd);
            f1_v.push_back(row.metrics.f1);
            if (row.metrics.auprc_defined) auprc_v.push_back(row.metrics.auprc);
            edges_v.push_back(static_cast<double>(row.discovered_edges));
            runtime_v.push_back(row.runtime_seconds);
        } else {
            ++report.failures;
        }
        report.rows.push_back(std::move(row));
    }
    report.nshd = aggregate(nshd_v);
    report.f1 = aggregate(f1_v);
    report.auprc = aggregate(auprc_v);
    report.discovered_edges = aggregate(edges_v);
    report.runtime_seconds = aggregate(runtime_v);
    return report;
}

}  // namespace cadyt
