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

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "cadyt/mdl.hpp"
#include "cadyt/parallel.hpp"
#include "cadyt/types.hpp"

namespace cadyt {

struct ScoredEdge {
    double gain = 0.0;
    Edge edge;
};

// Decreasing gain; ties broken by (from, to) lexicographic order.
inline bool scored_edge_before(const ScoredEdge& a, const ScoredEdge& b) {
    if (a.gain != b.gain) return a.gain > b.gain;
    return a.edge < b.edge;
}

struct EdgeQueue {
    std::vector<ScoredEdge> entries;  // kept sorted

    void sort() { std::stable_sort(entries.begin(), entries.end(), scored_edge_before); }
    bool is_sorted() const {
        return std::is_sorted(entries.begin(), entries.end(), scored_edge_before);
    }
};

struct SearchConfig {
    double significance_alpha = 0.001;
    // Candidate self-loops are off by default: a realized trajectory of an
    // exogenously driven component often satisfies an autonomous ODE in
    // itself exactly (e.g. dy/dt = exp(at) implies dy/dt = 1 + a(y - y0)),
    // so a compression score searching i -> i will legitimately find it even
    // when the generating equation has no self-dependence.
    bool allow_self_loops = false;
    int max_parents = -1;   // -1: defaults to D
    bool prefilter = true;  // keep only pairs whose pairwise gain passes the gate
    int threads = 1;
    ScoreConfig score;

    // No-hypercompression gate: compressing k bits better than the null has
    // probability at most 2^-k, so edges must gain more than -log2(alpha).
    double threshold_bits() const { return -std::log2(significance_alpha); }

    void validate() const {
        if (!(significance_alpha > 0.0 && significance_alpha < 1.0))
            throw ValidationError("significance alpha must lie in (0, 1)");
    }
};

struct PairFailure {
    Edge edge;
    std::string message;
};

struct SearchState {
    CausalGraph graph;
    std::vector<LocalModel> models;  // one per variable, matching graph parents
    long refits = 0;
};

struct DiscoveryResult {
    CausalGraph graph;
    EdgeQueue initial_queue;  // pairwise gains vs. the empty model
    // Confidence for every candidate pair, used for precision-recall
    // ranking: the strongest compression gain the search recorded for it. Kept
    // edges carry max(pairwise gain, deletion worth in the final model);
    // everything else keeps its pairwise gain — gains against evolved parent
    // sets are not comparable across children with different baselines.
    std::vector<ScoredEdge> final_gains;
    std::vector<LocalModel> models;
    std::vector<PairFailure> failures;
    long refits = 0;

    DiscoveryResult() : graph(1) {}
};

// Pairwise edge scoring (the ranking phase): for every ordered pair, the gain
// of adding i -> j to j's empty (mean fallback) model. Pair evaluations are
// independent and run concurrently; output order is deterministic.
inline EdgeQueue edge_scoring(const Trajectory& traj, const SearchConfig& config,
                              std::vector<PairFailure>* failures = nullptr) {
    config.validate();
    const int d = static_cast<int>(traj.dimension());

    std::vector<LocalModel> baselines;
    baselines.reserve(static_cast<std::size_t>(d));
    for (int j = 0; j < d; ++j) baselines.push_back(score_local(traj, j, {}, config.score));

    std::vector<Edge> pairs;
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j)
            if (i != j || config.allow_self_loops) pairs.push_back({i, j});

    std::vector<ScoredEdge> scored(pairs.size());
    std::vector<std::optional<PairFailure>> errors(pairs.size());
    parallel_for(pairs.size(), config.threads, [&](std::size_t k) {
        const Edge e = pairs[k];
        try {
            scored[k] = {gain(traj, baselines[static_cast<std::size_t>(e.to)], e.from,
                              config.score),
                         e};
        } catch (const std::exception& ex) {
            scored[k] = {-std::numeric_limits<double>::infinity(), e};
            errors[k] = PairFailure{e, ex.what()};
        }
    });
    if (failures)
        for (auto& err : errors)
            if (err) failures->push_back(*err);

    EdgeQueue queue;
    queue.entries = std::move(scored);
    queue.sort();
    return queue;
}

// Forward phase: repeatedly add the best-gain candidate edge, where gains are
// evaluated against the child's current parent set (refitting with the
// augmented set), gated by the no-hypercompression threshold. After an
// accept, only the modified child's incoming candidates are rescored.
inline SearchState forward_search_state(const EdgeQueue& queue, const Trajectory& traj,
                                        const SearchConfig& config,
                                        std::vector<PairFailure>* failures = nullptr) {
    config.validate();
    const int d = static_cast<int>(traj.dimension());
    const int max_parents = config.max_parents < 0 ? d : config.max_parents;
    const double threshold = config.threshold_bits();

    SearchState state{CausalGraph(d), {}, 0};
    for (int j = 0; j < d; ++j) state.models.push_back(score_local(traj, j, {}, config.score));

    struct Candidate {
        Edge edge;
        double gain;
        bool dead = false;  // failed evaluation; skipped from then on
    };
    std::vector<Candidate> candidates;
    for (const auto& entry : queue.entries) {
        if (!std::isfinite(entry.gain)) continue;
        if (config.prefilter && !(entry.gain > threshold)) continue;
        candidates.push_back({entry.edge, entry.gain, false});
    }

    auto rescore_incoming = [&](int child) {
        std::vector<std::size_t> todo;
        for (std::size_t k = 0; k < candidates.size(); ++k)
            if (candidates[k].edge.to == child && !candidates[k].dead &&
                !state.graph.has_edge(candidates[k].edge.from, child))
                todo.push_back(k);
        parallel_for(todo.size(), config.threads, [&](std::size_t t) {
            auto& cand = candidates[todo[t]];
            try {
                cand.gain = gain(traj, state.models[static_cast<std::size_t>(child)],
                                 cand.edge.from, config.score);
            } catch (const std::exception& ex) {
                cand.dead = true;
                cand.gain = -std::numeric_limits<double>::infinity();
                if (failures) failures->push_back({cand.edge, ex.what()});
            }
        });
        state.refits += static_cast<long>(todo.size());
    };

    for (;;) {
        const Candidate* best = nullptr;
        for (const auto& cand : candidates) {
            if (cand.dead) continue;
            if (state.graph.has_edge(cand.edge.from, cand.edge.to)) continue;
            if (static_cast<int>(state.graph.parents_of(cand.edge.to).size()) >= max_parents)
                continue;
            if (!best || cand.gain > best->gain ||
                (cand.gain == best->gain && cand.edge < best->edge))
                best = &cand;
        }
        if (!best || !(best->gain > threshold)) break;

        const Edge e = best->edge;
        state.graph.add_edge(e.from, e.to);
        state.models[static_cast<std::size_t>(e.to)] =
            score_local(traj, e.to, state.graph.parents_of(e.to), config.score);
        ++state.refits;
        rescore_incoming(e.to);
    }
    return state;
}

inline CausalGraph forward_search(const EdgeQueue& queue, const Trajectory& traj,
                                  const SearchConfig& config) {
    return forward_search_state(queue, traj, config).graph;
}

// Backward phase: repeatedly delete the edge whose removal saves the most
// bits, as long as some removal saves more than zero.
inline SearchState backward_search_state(SearchState state, const Trajectory& traj,
                                         const SearchConfig& config,
                                         std::vector<ScoredEdge>* final_gains = nullptr) {
    config.validate();
    for (;;) {
        const auto edges = state.graph.edges();
        if (edges.empty()) break;

        // Deletion saving of edge (i, j): current child total minus the total
        // after dropping i from j's parents.
        std::vector<double> saving(edges.size());
        std::vector<LocalModel> without(edges.size());
        parallel_for(edges.size(), config.threads, [&](std::size_t k) {
            const Edge e = edges[k];
            std::vector<int> parents = state.graph.parents_of(e.to);
            std::erase(parents, e.from);
            without[k] = score_local(traj, e.to, parents, config.score);
            saving[k] = state.models[static_cast<std::size_t>(e.to)].breakdown.total_bits -
                        without[k].breakdown.total_bits;
        });
        state.refits += static_cast<long>(edges.size());

        std::size_t best = 0;
        for (std::size_t k = 1; k < edges.size(); ++k)
            if (saving[k] > saving[best] ||
                (saving[k] == saving[best] && edges[k] < edges[best]))
                best = k;

        if (!(saving[best] > 0.0)) {
            // Fixed point: every surviving edge's worth is what deleting it
            // would cost, which is the confidence reported per edge.
            if (final_gains) {
                final_gains->clear();
                for (std::size_t k = 0; k < edges.size(); ++k)
                    final_gains->push_back({-saving[k], edges[k]});
                std::stable_sort(final_gains->begin(), final_gains->end(),
                                 scored_edge_before);
            }
            break;
        }
        const Edge e = edges[best];
        state.graph.remove_edge(e.from, e.to);
        state.models[static_cast<std::size_t>(e.to)] = std::move(without[best]);
    }
    return state;
}

inline CausalGraph backward_search(const CausalGraph& graph, const Trajectory& traj,
                                   const SearchConfig& config) {
    SearchState state{graph, {}, 0};
    const int d = graph.dimension();
    for (int j = 0; j < d; ++j)
        state.models.push_back(score_local(traj, j, graph.parents_of(j), config.score));
    return backward_search_state(std::move(state), traj, config).graph;
}

// The full three-phase pipeline: edge scoring, forward search, backward
// pruning, then the per-pair confidence assembly.
inline DiscoveryResult discover(const Trajectory& traj, const SearchConfig& config) {
    DiscoveryResult result;
    result.initial_queue = edge_scoring(traj, config, &result.failures);
    SearchState state = forward_search_state(result.initial_queue, traj, config,
                                             &result.failures);
    std::vector<ScoredEdge> kept_worth;
    state = backward_search_state(std::move(state), traj, config, &kept_worth);
    result.graph = state.graph;

    std::vector<ScoredEdge> confidences;
    confidences.reserve(result.initial_queue.entries.size());
    for (const auto& entry : result.initial_queue.entries) {
        double confidence = entry.gain;
        for (const auto& kept : kept_worth)
            if (kept.edge == entry.edge) confidence = std::max(confidence, kept.gain);
        confidences.push_back({confidence, entry.edge});
    }
    std::stable_sort(confidences.begin(), confidences.end(), scored_edge_before);
    result.final_gains = std::move(confidences);

    result.models = std::move(state.models);
    result.refits = state.refits;
    return result;
}

}  // namespace cadyt
