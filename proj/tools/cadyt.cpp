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

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>

#include "cadyt/bench.hpp"
#include "cadyt/experiment.hpp"
#include "cadyt/io.hpp"
#include "cadyt/metrics.hpp"
#include "cadyt/search.hpp"

using namespace cadyt;

namespace {

SystemKind parse_system(const std::string& name) {
    const auto kind = system_kind_from_string(name);
    if (!kind)
        throw CLI::ValidationError("--system", "unknown system '" + name + "'");
    return *kind;
}

KernelKind parse_kernel(const std::string& name) {
    if (name == "rbf") return KernelKind::RBF;
    if (name == "poly") return KernelKind::Polynomial;
    throw CLI::ValidationError("--kernel", "unknown kernel '" + name + "'");
}

nlohmann::json seed_row_json(const SeedResult& row) {
    nlohmann::json j;
    j["seed"] = row.seed;
    j["ok"] = row.ok;
    j["runtime_seconds"] = row.runtime_seconds;
    if (!row.ok) {
        j["error"] = row.error;
        return j;
    }
    j["discovered_edges"] = row.discovered_edges;
    j["true_edges"] = row.true_edges;
    j["shd"] = row.metrics.shd;
    j["nshd"] = row.metrics.nshd;
    j["precision"] = row.metrics.precision;
    j["recall"] = row.metrics.recall;
    j["f1"] = row.metrics.f1;
    if (row.metrics.auprc_defined) j["auprc"] = row.metrics.auprc;
    return j;
}

nlohmann::json aggregate_json(const Aggregate& a) {
    return {{"mean", a.mean}, {"std", a.stddev}, {"count", a.count}};
}

// Score/search knobs shared by `discover` and `experiment`, plus the config
// file loader (JSON; flags override file values).
struct SearchFlags {
    std::string kernel = "rbf";
    int order = 3;
    double alpha = 0.001;
    std::string self_loops = "off";
    int threads = default_threads();
    std::uint64_t seed = 0;
    int restarts = 5;
    int precision_p = 2;
    double r_d = 32.0;
    double sigma_floor = 1e-12;
    int max_parents = -1;
    bool no_prefilter = false;
    int poly_degree = 2;

    void add_to(CLI::App& app) {
        app.add_option("--kernel", kernel, "base kernel: rbf or poly")
            ->check(CLI::IsMember({"rbf", "poly"}));
        app.add_option("--order", order, "Adams-Bashforth order (1-3)")
            ->check(CLI::Range(1, 3));
        app.add_option("--alpha", alpha, "no-hypercompression significance level");
        app.add_option("--self-loops", self_loops, "search self-loops: on or off")
            ->check(CLI::IsMember({"on", "off"}));
        app.add_option("--threads", threads, "worker threads");
        app.add_option("--seed", seed, "search/fitting seed");
        app.add_option("--restarts", restarts, "hyperparameter restarts per fit");
        app.add_option("--precision-p", precision_p, "significant digits of the parameter code");
        app.add_option("--r-d", r_d, "bits per stored initial sample");
        app.add_option("--sigma-floor", sigma_floor, "residual variance floor");
        app.add_option("--max-parents", max_parents, "parent cap per variable (-1: D)");
        app.add_flag("--no-prefilter", no_prefilter,
                     "consider all pairs in the forward phase, not only gated ones");
        app.add_option("--poly-degree", poly_degree, "polynomial kernel degree");
    }

    void load_config_file(const std::string& path) {
        std::ifstream in(path);
        if (!in) throw std::runtime_error("cannot open config file: " + path);
        nlohmann::json j;
        in >> j;
        if (j.contains("kernel")) kernel = j["kernel"].get<std::string>();
        if (j.contains("integrator_order")) order = j["integrator_order"].get<int>();
        if (j.contains("alpha")) alpha = j["alpha"].get<double>();
        if (j.contains("self_loops"))
            self_loops = j["self_loops"].get<bool>() ? "on" : "off";
        if (j.contains("threads")) threads = j["threads"].get<int>();
        if (j.contains("seed")) seed = j["seed"].get<std::uint64_t>();
        if (j.contains("restarts")) restarts = j["restarts"].get<int>();
        if (j.contains("precision_p")) precision_p = j["precision_p"].get<int>();
        if (j.contains("r_d")) r_d = j["r_d"].get<double>();
        if (j.contains("sigma_floor")) sigma_floor = j["sigma_floor"].get<double>();
        if (j.contains("max_parents")) max_parents = j["max_parents"].get<int>();
        if (j.contains("poly_degree")) poly_degree = j["poly_degree"].get<int>();
    }

    SearchConfig to_search_config() const {
        SearchConfig cfg;
        cfg.significance_alpha = alpha;
        cfg.allow_self_loops = self_loops == "on";
        cfg.max_parents = max_parents;
        cfg.prefilter = !no_prefilter;
        cfg.threads = threads;
        cfg.score.kernel = parse_kernel(kernel);
        cfg.score.order = order;
        cfg.score.restarts = restarts;
        cfg.score.precisions.p = precision_p;
        cfg.score.precisions.r_d = r_d;
        cfg.score.seed = seed;
        cfg.score.sigma_floor = sigma_floor;
        cfg.score.polynomial_degree = poly_degree;
        return cfg;
    }
};

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"CADYT: causal discovery for continuous-time dynamical systems"};
    app.require_subcommand(1);

    // --- gen -----------------------------------------------------------------
    auto* gen = app.add_subcommand("gen", "generate a benchmark trajectory");
    std::string gen_system = "diamond";
    int gen_dim = 4;
    double gen_dt = 0.05, gen_t_end = 10.0, gen_irregularity = 0.0, gen_sigma = 0.005;
    std::uint64_t gen_seed = 1;
    std::string gen_out, gen_truth_out;
    gen->add_option("--system", gen_system,
                    "empty, diamond, er, er-cyclic, double-mass, rossler");
    gen->add_option("--dim", gen_dim, "dimension (families with free D)");
    gen->add_option("--dt", gen_dt, "mean step size");
    gen->add_option("--t-end", gen_t_end, "end of the integration interval [0, t-end]");
    gen->add_option("--irregularity", gen_irregularity, "step jitter b in [0, 1]");
    gen->add_option("--noise-sigma", gen_sigma, "observation noise std");
    gen->add_option("--seed", gen_seed, "generation seed");
    gen->add_option("--out", gen_out, "trajectory CSV path")->required();
    gen->add_option("--truth-out", gen_truth_out, "ground-truth graph JSON path");

    // --- discover --------------------------------------------------------------
    auto* disc = app.add_subcommand("discover", "discover the causal graph of a trajectory");
    std::string disc_input, disc_out_graph, disc_out_gains, disc_config;
    SearchFlags disc_flags;
    disc->add_option("--input", disc_input, "trajectory CSV")->required();
    disc->add_option("--config", disc_config, "JSON config file (flags override)");
    disc_flags.add_to(*disc);
    disc->add_option("--out-graph", disc_out_graph, "output graph JSON");
    disc->add_option("--out-gains", disc_out_gains, "output per-edge gains CSV");

    // --- eval -------------------------------------------------------------------
    auto* ev = app.add_subcommand("eval", "compare a predicted graph against a ground truth");
    std::string ev_pred, ev_truth, ev_gains, ev_out;
    ev->add_option("--pred", ev_pred, "predicted graph JSON")->required();
    ev->add_option("--truth", ev_truth, "ground-truth graph JSON")->required();
    ev->add_option("--gains", ev_gains, "per-edge gains CSV (for AUPRC)");
    ev->add_option("--out", ev_out, "metric report JSON (stdout if omitted)");

    // --- experiment ----------------------------------------------------------------
    auto* exp = app.add_subcommand("experiment", "run the full generate/discover/eval protocol");
    std::string exp_system = "diamond", exp_config, exp_outdir = ".";
    int exp_dim = 4;
    double exp_dt = 0.05, exp_t_end = 10.0, exp_irregularity = 0.0, exp_sigma = 0.005;
    std::vector<std::uint64_t> exp_seeds;
    SearchFlags exp_flags;
    exp->add_option("--config", exp_config, "JSON config file (flags override)");
    exp->add_option("--system", exp_system, "benchmark family");
    exp->add_option("--dim", exp_dim, "dimension");
    exp->add_option("--dt", exp_dt, "mean step size");
    exp->add_option("--t-end", exp_t_end, "end of the integration interval");
    exp->add_option("--irregularity", exp_irregularity, "step jitter b in [0, 1]");
    exp->add_option("--noise-sigma", exp_sigma, "observation noise std");
    exp->add_option("--seeds", exp_seeds, "seed list")->expected(-1);
    exp_flags.add_to(*exp);
    exp->add_option("--outdir", exp_outdir, "report output directory");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*gen) {
            Timeline tl = make_timeline(0.0, gen_t_end, gen_dt, gen_irregularity,
                                        seed_combine(gen_seed, 0x544cu));
            auto [traj, truth] =
                generate_benchmark(parse_system(gen_system), gen_dim, tl,
                                   NoiseSpec(gen_sigma), seed_combine(gen_seed, 0x53494du));
            write_trajectory_csv(traj, gen_out);
            if (!gen_truth_out.empty()) write_graph_json(truth, gen_truth_out);
            std::printf("wrote %zu samples x %zu components to %s (%d true edges)\n",
                        traj.samples(), traj.dimension(), gen_out.c_str(),
                        truth.num_edges());
        } else if (*disc) {
            if (!disc_config.empty()) disc_flags.load_config_file(disc_config);
            // Re-parse flags so explicit ones override the config file.
            Trajectory traj = read_trajectory_csv(disc_input);
            validate_trajectory(traj);
            SearchConfig cfg = disc_flags.to_search_config();
            const auto t0 = std::chrono::steady_clock::now();
            DiscoveryResult result = discover(traj, cfg);
            const double seconds =
                std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
            if (!disc_out_graph.empty()) write_graph_json(result.graph, disc_out_graph);
            if (!disc_out_gains.empty()) write_gains_csv(result.final_gains, disc_out_gains);
            std::printf("discovered %d edges over %zu variables in %.1fs (%ld refits)\n",
                        result.graph.num_edges(), traj.dimension(), seconds, result.refits);
            for (const auto& fg : result.final_gains) {
                if (!result.graph.has_edge(fg.edge.from, fg.edge.to)) continue;
                std::printf("  %s -> %s  (%.2f bits)\n",
                            traj.names()[static_cast<std::size_t>(fg.edge.from)].c_str(),
                            traj.names()[static_cast<std::size_t>(fg.edge.to)].c_str(),
                            fg.gain);
            }
            for (const auto& failure : result.failures)
                std::fprintf(stderr, "pair (%d -> %d) failed: %s\n", failure.edge.from,
                             failure.edge.to, failure.message.c_str());
        } else if (*ev) {
            CausalGraph pred = read_graph_json(ev_pred);
            CausalGraph truth = read_graph_json(ev_truth);
            std::vector<ScoredEdge> gains;
            if (!ev_gains.empty()) gains = read_gains_csv(ev_gains);
            MetricReport m = evaluate(pred, truth, gains);
            nlohmann::json j;
            j["shd"] = m.shd;
            j["nshd"] = m.nshd;
            j["precision"] = m.precision;
            j["recall"] = m.recall;
            j["f1"] = m.f1;
            if (m.auprc_defined) j["auprc"] = m.auprc;
            if (ev_out.empty()) {
                std::printf("%s\n", j.dump(2).c_str());
            } else {
                std::ofstream(ev_out) << j.dump(2) << '\n';
            }
        } else if (*exp) {
            if (!exp_config.empty()) {
                exp_flags.load_config_file(exp_config);
                std::ifstream in(exp_config);
                nlohmann::json j;
                in >> j;
                if (j.contains("system")) exp_system = j["system"].get<std::string>();
                if (j.contains("dim")) exp_dim = j["dim"].get<int>();
                if (j.contains("dt")) exp_dt = j["dt"].get<double>();
                if (j.contains("t_end")) exp_t_end = j["t_end"].get<double>();
                if (j.contains("irregularity"))
                    exp_irregularity = j["irregularity"].get<double>();
                if (j.contains("noise_sigma")) exp_sigma = j["noise_sigma"].get<double>();
                if (j.contains("seeds")) exp_seeds = j["seeds"].get<std::vector<std::uint64_t>>();
            }
            ExperimentConfig cfg;
            cfg.system = parse_system(exp_system);
            cfg.dimension = exp_dim;
            cfg.t_end = exp_t_end;
            cfg.dt = exp_dt;
            cfg.irregularity = exp_irregularity;
            cfg.noise_sigma = exp_sigma;
            cfg.search = exp_flags.to_search_config();
            cfg.seeds = exp_seeds;
            cfg.validate();

            ExperimentReport report = run_experiment(cfg);

            std::filesystem::create_directories(exp_outdir);
            const std::string csv_path = exp_outdir + "/seeds.csv";
            {
                std::ofstream out(csv_path);
                out << "seed,ok,discovered_edges,true_edges,shd,nshd,precision,recall,f1,"
                       "auprc,runtime_seconds,error\n";
                for (const auto& row : report.rows) {
                    out << row.seed << ',' << (row.ok ? 1 : 0) << ',' << row.discovered_edges
                        << ',' << row.true_edges << ',' << row.metrics.shd << ','
                        << row.metrics.nshd << ',' << row.metrics.precision << ','
                        << row.metrics.recall << ',' << row.metrics.f1 << ','
                        << (row.metrics.auprc_defined ? std::to_string(row.metrics.auprc)
                                                      : std::string(""))
                        << ',' << row.runtime_seconds << ',' << row.error << '\n';
                }
            }
            nlohmann::json j;
            j["config"] = {{"system", exp_system},
                           {"dim", exp_dim},
                           {"dt", exp_dt},
                           {"t_end", exp_t_end},
                           {"irregularity", exp_irregularity},
                           {"noise_sigma", exp_sigma},
                           {"kernel", exp_flags.kernel},
                           {"order", exp_flags.order},
                           {"alpha", exp_flags.alpha},
                           {"self_loops", exp_flags.self_loops == "on"},
                           {"seeds", cfg.seeds}};
            j["rows"] = nlohmann::json::array();
            for (const auto& row : report.rows) j["rows"].push_back(seed_row_json(row));
            j["aggregate"] = {{"nshd", aggregate_json(report.nshd)},
                              {"f1", aggregate_json(report.f1)},
                              {"auprc", aggregate_json(report.auprc)},
                              {"discovered_edges", aggregate_json(report.discovered_edges)},
                              {"runtime_seconds", aggregate_json(report.runtime_seconds)},
                              {"failures", report.failures}};
            const std::string json_path = exp_outdir + "/report.json";
            std::ofstream(json_path) << j.dump(2) << '\n';
            std::printf("%zu/%zu seeds ok; mean NSHD %.3f, mean AUPRC %.3f; wrote %s and %s\n",
                        report.rows.size() - report.failures, report.rows.size(),
                        report.nshd.mean, report.auprc.mean, csv_path.c_str(),
                        json_path.c_str());
            if (report.failures == report.rows.size()) return 1;
        }
    } catch (const std::exception& ex) {
        std::fprintf(stderr, "error: %s\n", ex.what());
        return 1;
    }
    return 0;
}
