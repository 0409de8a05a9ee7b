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
#include <cstdint>
#include <memory>
#include <numbers>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "cadyt/gp.hpp"
#include "cadyt/random.hpp"
#include "cadyt/types.hpp"

namespace cadyt {

struct NonPositiveInteger : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct NonFiniteParameter : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Encoding precisions. rotation_bits is the per-angle cost log2(1/r_lambda)
// for storing the Gram eigenbasis; r_d is the per-value cost of the initial
// samples; p is the significant-digit precision of the parameter code.
struct Precisions {
    double r_d = 32.0;
    double rotation_bits = 32.0;
    int p = 2;

    void validate() const {
        if (!(r_d > 0.0) || !(rotation_bits > 0.0) || p <= 0)
            throw ValidationError("precisions must be positive");
    }
};

inline constexpr double kUniversalCodeC0 = 2.865064;

// Rissanen's universal code length for integers z >= 1:
// log2*(z) + log2(c0), where log2*(z) = log2 z + log2 log2 z + ... keeping
// only the positive terms.
inline double ln_universal(std::uint64_t z) {
    if (z < 1) throw NonPositiveInteger("ln_universal requires z >= 1");
    double bits = std::log2(kUniversalCodeC0);
    double x = std::log2(static_cast<double>(z));
    while (x > 0.0) {
        bits += x;
        x = std::log2(x);
    }
    return bits;
}

// Extension used wherever a zero count/magnitude can occur: one explicit flag
// bit marks "zero", anything else pays the universal code.
inline double ln_universal_or_flag(std::uint64_t z) { return z == 0 ? 1.0 : ln_universal(z); }

// Global cost: the integrator step count plus the first s raw
// samples at r_d bits per stored value.
inline double l_global(std::size_t n_samples, int dimension, int order, const Precisions& prec) {
    return std::log2(static_cast<double>(n_samples)) +
           prec.r_d * static_cast<double>(dimension) * static_cast<double>(order);
}

// Parent-set cost: universal code for the parent count plus log2 D per chosen
// parent. The empty set spends a single flag bit.
inline double l_structure(int num_parents, int dimension) {
    if (num_parents < 0 || num_parents > dimension)
        throw ValidationError("parent count out of range");
    if (num_parents == 0) return 1.0;
    return ln_universal(static_cast<std::uint64_t>(num_parents)) +
           static_cast<double>(num_parents) * std::log2(static_cast<double>(dimension));
}

namespace detail {

// Smallest integer rho with |theta| * 10^rho >= 10^p. Uses the same
// pow-based predicate as a plain enumeration would, so the two agree.
inline int smallest_shift(double magnitude, int p) {
    const double target = std::pow(10.0, p);
    int rho = static_cast<int>(std::ceil(p - std::log10(magnitude))) - 2;
    while (magnitude * std::pow(10.0, rho) < target) ++rho;
    return rho;
}

}  // namespace detail

// Parameter code (two significant-digit style): per nonzero component, two
// sign bits plus universal codes for the shift and the shifted value; zero
// components spend one flag bit in total.
inline double l_params(std::span<const double> theta, const Precisions& prec) {
    double bits = 0.0;
    for (double v : theta) {
        if (!std::isfinite(v)) throw NonFiniteParameter("non-finite parameter");
        if (v == 0.0) {
            bits += 1.0;
            continue;
        }
        const double mag = std::abs(v);
        const int rho = detail::smallest_shift(mag, prec.p);
        const auto shifted =
            static_cast<std::uint64_t>(std::ceil(mag * std::pow(10.0, rho)));
        bits += 2.0 + ln_universal_or_flag(static_cast<std::uint64_t>(std::abs(rho))) +
                ln_universal(shifted);
    }
    return bits;
}

// Cost of the eigenbasis rotation angles; depends only on the Gram size and
// the angle precision, so it is identical for every model fitted on the same
// trajectory and cancels out of score comparisons.
inline double rotation_term(std::size_t gram_size, const Precisions& prec) {
    return prec.rotation_bits * 0.5 * static_cast<double>(gram_size) *
           static_cast<double>(gram_size > 0 ? gram_size - 1 : 0);
}

// Eigenvalues prepared for the parameter code: entries below 1e-10 x the
// largest collapse to exact zeros (one flag bit each).
inline std::vector<double> thresholded_eigenvalues(const Eigen::VectorXd& eigenvalues) {
    std::vector<double> out(eigenvalues.data(), eigenvalues.data() + eigenvalues.size());
    double largest = 0.0;
    for (double v : out) largest = std::max(largest, v);
    const double cutoff = 1e-10 * largest;
    for (double& v : out)
        if (v <= cutoff) v = 0.0;
    return out;
}

// Function cost of a fitted model: rotation angles for the eigenbasis plus
// the parameter code over kernel hyperparameters and Gram eigenvalues.
inline double l_function(const DynamicsGP& gp, const Precisions& prec) {
    std::vector<double> theta = gp.kernel.hyperparameters();
    const auto eigs = thresholded_eigenvalues(gp.eigenvalues);
    theta.insert(theta.end(), eigs.begin(), eigs.end());
    return rotation_term(gp.training_rows(), prec) + l_params(theta, prec);
}

// Gaussian residual code: N_eff/2 * (log2 e + log2(2 pi sigma^2)) bits.
// Negative below sigma^2 = 1/(2 pi e).
inline double l_residual(double sigma_sq, std::size_t n_eff) {
    if (!(sigma_sq > 0.0)) throw ValidationError("residual variance must be positive");
    return 0.5 * static_cast<double>(n_eff) *
           (1.0 / std::numbers::ln2 + std::log2(2.0 * std::numbers::pi * sigma_sq));
}

// The model-independent constant subtracted to form the reduced score: the
// rotation term, the 2|theta| sign bits at the idealized |theta| = N, and the
// sigma-independent part of the residual code. Constant given (N, s), so
// score differences are unchanged.
inline double reduction_constant(std::size_t n_samples, int order, const Precisions& prec) {
    const std::size_t m = n_samples - static_cast<std::size_t>(order);
    return rotation_term(m, prec) + 2.0 * static_cast<double>(n_samples) +
           0.5 * static_cast<double>(n_samples) *
               (1.0 / std::numbers::ln2 + std::log2(2.0 * std::numbers::pi));
}

struct ScoreConfig {
    KernelKind kernel = KernelKind::RBF;
    int order = 3;
    Precisions precisions;
    int restarts = 5;
    int max_iterations = 200;
    int polynomial_degree = 2;
    std::uint64_t seed = 0;
    double sigma_floor = 1e-12;

    FitOptions fit_options(std::uint64_t fit_seed) const {
        FitOptions opt;
        opt.restarts = restarts;
        opt.max_iterations = max_iterations;
        opt.seed = fit_seed;
        opt.polynomial_degree = polynomial_degree;
        return opt;
    }
};

// One variable's model: parent set, fitted dynamics (or the mean fallback for
// the empty parent set), residual variance, and itemized bit costs.
struct LocalModel {
    int target = 0;
    std::vector<int> parents;  // ascending; may include the target (self-loop)
    std::shared_ptr<const DynamicsGP> gp;  // null iff parents is empty
    double fallback_mean = 0.0;
    double sigma_sq = 0.0;
    ScoreBreakdown breakdown;

    bool is_mean_fallback() const { return gp == nullptr; }
};

namespace detail {

inline std::uint64_t fit_seed(const ScoreConfig& config, int target,
                              std::span<const int> parents) {
    std::uint64_t h = seed_combine({config.seed, 0x4c4fu, static_cast<std::uint64_t>(target)});
    for (int p : parents) h = seed_combine(h, static_cast<std::uint64_t>(p) + 0x50u);
    return h;
}

}  // namespace detail

// Scores one variable given a parent set. Nonempty parents: fit the dynamics
// GP, run the teacher-forced rollout, and take the mean squared prediction
// error over the N-s predicted points as the residual variance. Empty
// parents: encode the column mean and the mean squared deviation from it.
// The rotation term is charged to every local model alike (it depends only
// on the trajectory), so edge gains are invariant to it.
inline LocalModel score_local(const Trajectory& traj, int target,
                              const std::vector<int>& parents, const ScoreConfig& config) {
    const std::size_t n = traj.samples();
    const int d = static_cast<int>(traj.dimension());
    const std::size_t m = n - static_cast<std::size_t>(config.order);
    if (target < 0 || target >= d) throw DimensionMismatch("target index out of range");

    LocalModel local;
    local.target = target;
    local.parents = parents;
    std::sort(local.parents.begin(), local.parents.end());

    const std::vector<double> target_col = traj.column(static_cast<std::size_t>(target));
    ScoreBreakdown& b = local.breakdown;
    b.structure_bits = l_structure(static_cast<int>(local.parents.size()), d);
    b.function_bits = rotation_term(m, config.precisions);

    if (local.parents.empty()) {
        double mean = 0.0;
        for (double v : target_col) mean += v;
        mean /= static_cast<double>(n);
        double mse = 0.0;
        for (double v : target_col) mse += (v - mean) * (v - mean);
        mse /= static_cast<double>(n);
        local.fallback_mean = mean;
        local.sigma_sq = std::max(mse, config.sigma_floor);
        b.param_bits = l_params(std::span<const double>(&mean, 1), config.precisions);
        b.residual_bits = l_residual(local.sigma_sq, n);
    } else {
        std::vector<std::vector<double>> parent_cols;
        int self_position = -1;
        for (std::size_t i = 0; i < local.parents.size(); ++i) {
            if (local.parents[i] == target) self_position = static_cast<int>(i);
            parent_cols.push_back(traj.column(static_cast<std::size_t>(local.parents[i])));
        }
        auto gp = std::make_shared<DynamicsGP>(fit_dynamics_gp(
            parent_cols, target_col, traj.timeline(), config.kernel, config.order,
            config.fit_options(detail::fit_seed(config, target, local.parents))));

        const std::span<const double> init(target_col.data(),
                                           static_cast<std::size_t>(config.order));
        const std::vector<double> predicted =
            rollout(*gp, traj.timeline(), parent_cols, self_position, init);
        double mse = 0.0;
        for (std::size_t i = static_cast<std::size_t>(config.order); i < n; ++i) {
            const double e = predicted[i] - target_col[i];
            mse += e * e;
        }
        mse /= static_cast<double>(n - static_cast<std::size_t>(config.order));
        local.sigma_sq = std::max(mse, config.sigma_floor);

        std::vector<double> theta = gp->kernel.hyperparameters();
        const auto eigs = thresholded_eigenvalues(gp->eigenvalues);
        theta.insert(theta.end(), eigs.begin(), eigs.end());
        b.param_bits = l_params(theta, config.precisions);
        b.residual_bits = l_residual(local.sigma_sq, n - static_cast<std::size_t>(config.order));
        local.gp = std::move(gp);
    }

    b.total_bits = b.recomposed();
    b.reduced_bits = b.total_bits - reduction_constant(n, config.order, config.precisions);
    return local;
}

// Full-graph score: the global cost plus one local term per variable, with
// the reduced score subtracting the per-variable constant and the global
// cost (both model-independent).
inline std::pair<ScoreBreakdown, std::vector<LocalModel>> score_total(
    const Trajectory& traj, const CausalGraph& graph, const ScoreConfig& config) {
    const int d = static_cast<int>(traj.dimension());
    if (graph.dimension() != d)
        throw DimensionMismatch("graph dimension does not match the trajectory");

    ScoreBreakdown total;
    total.global_bits = l_global(traj.samples(), d, config.order, config.precisions);
    std::vector<LocalModel> locals;
    locals.reserve(static_cast<std::size_t>(d));
    for (int j = 0; j < d; ++j) {
        locals.push_back(score_local(traj, j, graph.parents_of(j), config));
        const ScoreBreakdown& lb = locals.back().breakdown;
        total.structure_bits += lb.structure_bits;
        total.function_bits += lb.function_bits;
        total.param_bits += lb.param_bits;
        total.residual_bits += lb.residual_bits;
    }
    total.total_bits = total.recomposed();
    total.reduced_bits =
        total.total_bits - total.global_bits -
        static_cast<double>(d) * reduction_constant(traj.samples(), config.order,
                                                    config.precisions);
    return {total, std::move(locals)};
}

// Gain of adding edge i -> j on top of j's current model, computed via
// the child's local terms only (everything else cancels). Positive means the
// edge improves compression. Returns the refitted candidate alongside.
inline std::pair<double, LocalModel> gain_with_model(const Trajectory& traj,
                                                     const LocalModel& current, int parent,
                                                     const ScoreConfig& config) {
    std::vector<int> parents = current.parents;
    parents.push_back(parent);
    LocalModel candidate = score_local(traj, current.target, parents, config);
    return {current.breakdown.total_bits - candidate.breakdown.total_bits,
            std::move(candidate)};
}

inline double gain(const Trajectory& traj, const LocalModel& current, int parent,
                   const ScoreConfig& config) {
    return gain_with_model(traj, current, parent, config).first;
}

}  // namespace cadyt
