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

#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "cadyt/ode.hpp"
#include "cadyt/random.hpp"
#include "cadyt/types.hpp"

namespace cadyt {

enum class SystemKind { Empty, Diamond, ErdosRenyi, ErdosRenyiCyclic, DoubleMass, Rossler };

inline const char* to_string(SystemKind k) {
    switch (k) {
        case SystemKind::Empty: return "empty";
        case SystemKind::Diamond: return "diamond";
        case SystemKind::ErdosRenyi: return "er";
        case SystemKind::ErdosRenyiCyclic: return "er-cyclic";
        case SystemKind::DoubleMass: return "double-mass";
        case SystemKind::Rossler: return "rossler";
    }
    return "?";
}

inline std::optional<SystemKind> system_kind_from_string(const std::string& s) {
    if (s == "empty") return SystemKind::Empty;
    if (s == "diamond") return SystemKind::Diamond;
    if (s == "er") return SystemKind::ErdosRenyi;
    if (s == "er-cyclic") return SystemKind::ErdosRenyiCyclic;
    if (s == "double-mass") return SystemKind::DoubleMass;
    if (s == "rossler") return SystemKind::Rossler;
    return std::nullopt;
}

struct NoiseSpec {
    double sigma = 0.0;
    explicit NoiseSpec(double s = 0.0) : sigma(s) {
        if (!(sigma >= 0.0)) throw ValidationError("noise sigma must be nonnegative");
    }
};

// A benchmark system: ODE right-hand side, its ground-truth local-dependency
// graph, and the sampled family parameters that pin the RHS down.
struct SystemSpec {
    SystemKind kind;
    int dimension;
    std::map<std::string, double> parameters;
    CausalGraph ground_truth;
    OdeRhs rhs;
    std::vector<std::string> names;
};

struct InvalidInterval : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Sample times with uniform step jitter: t_{i+1} = t_i + dt*(1 + (w-1/2)*b),
// w ~ U(0,1). Generation stops at the first candidate past t_end (a relative
// slack absorbs accumulated rounding so the regular grid keeps its endpoint).
inline Timeline make_timeline(double t_start, double t_end, double dt, double irregularity_b,
                              std::uint64_t seed) {
    if (!(t_end > t_start)) throw InvalidInterval("t_end must exceed t_start");
    if (!(dt > 0.0)) throw InvalidInterval("dt must be positive");
    if (irregularity_b < 0.0 || irregularity_b > 1.0)
        throw ValidationError("irregularity must lie in [0, 1]");
    Rng rng(seed_combine(seed, 0x7131u));
    std::vector<double> t{t_start};
    const double slack = dt * 1e-9;
    for (;;) {
        const double w = rng.uniform();
        const double next = t.back() + dt * (1.0 + (w - 0.5) * irregularity_b);
        if (next > t_end + slack) break;
        t.push_back(next);
    }
    return Timeline(std::move(t));
}

namespace detail {

inline CausalGraph diamond_truth() {
    CausalGraph g(4);
    g.add_edge(0, 1);  // A -> B
    g.add_edge(0, 2);  // A -> C
    g.add_edge(1, 3);  // B -> D
    g.add_edge(2, 3);  // C -> D
    return g;
}

inline CausalGraph double_mass_truth() {
    // State (v1, v2, y1, y2): v1' = y1, v2' = y2, y1' = -2 v1 + v2,
    // y2' = v1 - v2.
    CausalGraph g(4);
    g.add_edge(2, 0);
    g.add_edge(3, 1);
    g.add_edge(0, 2);
    g.add_edge(1, 2);
    g.add_edge(0, 3);
    g.add_edge(1, 3);
    return g;
}

inline CausalGraph rossler_truth(int d) {
    // x1' = a*x1 - x2 with a = 0, so only x2 feeds x1. Middle components
    // couple to the previous neighbour and the (i+2)-th one, wrapping modulo
    // D. The last component depends on its neighbour and itself.
    CausalGraph g(d);
    g.add_edge(1, 0);
    for (int i = 1; i < d - 1; ++i) {
        g.add_edge(i - 1, i);
        g.add_edge((i + 2) % d, i);
    }
    g.add_edge(d - 2, d - 1);
    g.add_edge(d - 1, d - 1);
    return g;
}

inline CausalGraph erdos_renyi_dag(int d, double p, Rng& rng) {
    // Random topological order, then each forward pair independently with
    // probability p.
    std::vector<int> perm(d);
    for (int i = 0; i < d; ++i) perm[i] = i;
    for (int i = d - 1; i > 0; --i)
        std::swap(perm[i], perm[rng.below(static_cast<std::uint64_t>(i) + 1)]);
    CausalGraph g(d);
    for (int i = 0; i < d; ++i)
        for (int j = i + 1; j < d; ++j)
            if (rng.uniform() < p) g.add_edge(perm[i], perm[j]);
    return g;
}

inline std::vector<int> ancestors_of(const CausalGraph& g, int v) {
    std::vector<char> seen(g.dimension(), 0);
    std::vector<int> stack{v};
    while (!stack.empty()) {
        const int u = stack.back();
        stack.pop_back();
        for (int w = 0; w < g.dimension(); ++w)
            if (g.has_edge(w, u) && !seen[w]) {
                seen[w] = 1;
                stack.push_back(w);
            }
    }
    std::vector<int> out;
    for (int w = 0; w < g.dimension(); ++w)
        if (seen[w] && w != v) out.push_back(w);
    return out;
}

// Adds `count` back-edges, each from a randomly chosen non-root node to one
// of its ancestors (uniform, skipping edges already present).
inline bool add_cycles(CausalGraph& g, int count, Rng& rng) {
    const int d = g.dimension();
    for (int added = 0; added < count;) {
        std::vector<std::pair<int, int>> options;
        for (int v = 0; v < d; ++v) {
            const auto anc = ancestors_of(g, v);
            if (anc.empty()) continue;  // root node
            for (int u : anc)
                if (!g.has_edge(v, u)) options.emplace_back(v, u);
        }
        if (options.empty()) return false;
        const auto& [v, u] = options[rng.below(options.size())];
        g.add_edge(v, u);
        ++added;
    }
    return true;
}

}  // namespace detail

// Builds the ODE right-hand side and ground-truth graph for one benchmark
// family. Everything random (graph draws, exponents, coupling weights) is
// fixed here so kind, dimension, and seed fully determine the dynamics.
inline SystemSpec make_system(SystemKind kind, int dimension, std::uint64_t seed) {
    Rng rng(seed_combine(seed, 0x5347u));
    switch (kind) {
        case SystemKind::Empty: {
            if (dimension < 1) throw DimensionMismatch("empty family needs D >= 1");
            std::vector<double> a(dimension);
            std::map<std::string, double> params;
            std::vector<std::string> names;
            for (int i = 0; i < dimension; ++i) {
                a[i] = rng.uniform(-2.5, 2.5);
                params["a" + std::to_string(i)] = a[i];
                names.push_back("X" + std::to_string(i));
            }
            OdeRhs rhs = [a](double t, std::span<const double>, std::span<double> dx) {
                for (std::size_t i = 0; i < dx.size(); ++i) dx[i] = std::exp(a[i] * t);
            };
            return {kind, dimension, std::move(params), CausalGraph(dimension), std::move(rhs),
                    std::move(names)};
        }
        case SystemKind::Diamond: {
            if (dimension != 4) throw DimensionMismatch("diamond family is 4-dimensional");
            OdeRhs rhs = [](double t, std::span<const double> x, std::span<double> dx) {
                dx[0] = 0.5 * std::sin(t);
                dx[1] = 0.5 * std::sin(x[0]);
                dx[2] = -2.0 * std::cos(x[0]);
                dx[3] = x[1] + x[2];
            };
            return {kind, 4, {}, detail::diamond_truth(), std::move(rhs),
                    {"A", "B", "C", "D"}};
        }
        case SystemKind::DoubleMass: {
            if (dimension != 4) throw DimensionMismatch("double-mass family is 4-dimensional");
            OdeRhs rhs = [](double, std::span<const double> x, std::span<double> dx) {
                dx[0] = x[2];
                dx[1] = x[3];
                dx[2] = -2.0 * x[0] + x[1];
                dx[3] = x[0] - x[1];
            };
            return {kind, 4, {{"k1", 1.0}, {"k2", 1.0}, {"m1", 1.0}, {"m2", 1.0}},
                    detail::double_mass_truth(), std::move(rhs), {"v1", "v2", "y1", "y2"}};
        }
        case SystemKind::Rossler: {
            if (dimension != 10) throw DimensionMismatch("rossler family is 10-dimensional");
            const double a = 0.0, eps = 0.1, b = 4.0, q = 2.0;
            const int d = dimension;
            OdeRhs rhs = [a, eps, b, q, d](double, std::span<const double> x,
                                           std::span<double> dx) {
                dx[0] = a * x[0] - x[1];
                for (int i = 1; i < d - 1; ++i)
                    dx[i] = std::sin(x[i - 1]) - std::sin(x[(i + 2) % d]);
                dx[d - 1] = eps + b * x[d - 1] * (x[d - 2] - q);
            };
            std::vector<std::string> names;
            for (int i = 1; i <= d; ++i) names.push_back("x" + std::to_string(i));
            return {kind, d, {{"a", a}, {"eps", eps}, {"b", b}, {"q", q}},
                    detail::rossler_truth(d), std::move(rhs), std::move(names)};
        }
        case SystemKind::ErdosRenyi:
        case SystemKind::ErdosRenyiCyclic: {
            if (dimension < 2) throw DimensionMismatch("ER family needs D >= 2");
            const double p = 2.0 / dimension;
            CausalGraph g = detail::erdos_renyi_dag(dimension, p, rng);
            if (kind == SystemKind::ErdosRenyiCyclic) {
                // Resample the DAG until two back-edges can be placed.
                for (int attempt = 0; !detail::add_cycles(g, 2, rng); ++attempt) {
                    if (attempt > 256)
                        throw ValidationError("could not place cycles in ER graph");
                    g = detail::erdos_renyi_dag(dimension, p, rng);
                }
            }
            // Coupling weights alpha_ik ~ U([1, 2]) per parent; root nodes run
            // on sin(alpha_i * t).
            std::vector<std::vector<std::pair<int, double>>> terms(dimension);
            std::vector<double> root_alpha(dimension, 0.0);
            std::map<std::string, double> params{{"p", p}};
            for (int j = 0; j < dimension; ++j) {
                const auto parents = g.parents_of(j);
                if (parents.empty()) {
                    root_alpha[j] = rng.uniform(1.0, 2.0);
                    params["alpha" + std::to_string(j)] = root_alpha[j];
                } else {
                    for (int i : parents) {
                        const double alpha = rng.uniform(1.0, 2.0);
                        terms[j].emplace_back(i, alpha);
                        params["alpha" + std::to_string(i) + "_" + std::to_string(j)] = alpha;
                    }
                }
            }
            OdeRhs rhs = [terms, root_alpha](double t, std::span<const double> x,
                                             std::span<double> dx) {
                for (std::size_t j = 0; j < dx.size(); ++j) {
                    if (terms[j].empty()) {
                        dx[j] = std::sin(root_alpha[j] * t);
                    } else {
                        double acc = 0.0;
                        for (const auto& [i, alpha] : terms[j]) acc += alpha * x[i];
                        dx[j] = std::sin(acc);
                    }
                }
            };
            std::vector<std::string> names;
            for (int i = 0; i < dimension; ++i) names.push_back("X" + std::to_string(i));
            return {kind, dimension, std::move(params), std::move(g), std::move(rhs),
                    std::move(names)};
        }
    }
    throw ValidationError("unknown system kind");
}

// Integrates the system over the timeline with RK4(5) at 1e-8 tolerances,
// starting from N(0,1) initial conditions, then perturbs every entry with
// i.i.d. N(0, sigma^2) observation noise. A run whose state passes 1e6 in
// magnitude throws StateMagnitudeExceeded (the empty family can grow like
// exp(2.5 t)); generate_benchmark turns that into a redraw of the whole
// system from the next sub-seed.
inline std::pair<Trajectory, CausalGraph> simulate(const SystemSpec& spec,
                                                   const Timeline& timeline,
                                                   const NoiseSpec& noise, std::uint64_t seed) {
    const std::size_t n = timeline.size();
    const int d = spec.dimension;
    std::vector<double> flat(n * d);

    OdeOptions opt;
    opt.max_magnitude = 1e6;
    Rng ic_rng(seed_combine(seed, 0x4943u));
    std::vector<double> x0(d);
    for (auto& v : x0) v = ic_rng.normal();
    integrate_rk45(spec.rhs, x0, timeline.times(), flat.data(), opt);

    Rng noise_rng(seed_combine(seed, 0x4e4fu));
    if (noise.sigma > 0.0)
        for (auto& v : flat) v += noise.sigma * noise_rng.normal();

    std::vector<std::vector<double>> rows(n, std::vector<double>(d));
    for (std::size_t r = 0; r < n; ++r)
        for (int c = 0; c < d; ++c) rows[r][c] = flat[r * d + c];
    return {Trajectory(timeline, std::move(rows), spec.names), spec.ground_truth};
}

// System draw + simulation with rejection: draws that trip the magnitude
// guard are discarded and the whole system is redrawn from the next derived
// seed, keeping the output a deterministic function of (kind, D, seed).
inline std::pair<Trajectory, CausalGraph> generate_benchmark(SystemKind kind, int dimension,
                                                             const Timeline& timeline,
                                                             const NoiseSpec& noise,
                                                             std::uint64_t seed) {
    for (std::uint64_t attempt = 0;; ++attempt) {
        const std::uint64_t sub = attempt == 0 ? seed : seed_combine(seed, attempt);
        const SystemSpec spec = make_system(kind, dimension, sub);
        try {
            return simulate(spec, timeline, noise, sub);
        } catch (const StateMagnitudeExceeded&) {
            if (attempt >= 256)
                throw IntegrationFailure("no bounded draw found for benchmark system",
                                         timeline.front());
        }
    }
}

}  // namespace cadyt
