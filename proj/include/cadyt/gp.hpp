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

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <span>
#include <stdexcept>
#include <vector>

#include "cadyt/integrator.hpp"
#include "cadyt/kernels.hpp"
#include "cadyt/random.hpp"
#include "cadyt/types.hpp"

namespace cadyt {

struct WindowLengthMismatch : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct SingularGram : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct OptimizationFailure : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Regression rows for one target variable: window n holds the parent vectors
// at grid positions n..n+s-1 (flat, position-major), the matching integration
// weights, and the increment target X(n+s) - X(n+s-1).
struct MultistepData {
    std::size_t rows = 0;       // M
    int order = 1;              // s
    std::size_t input_dim = 0;  // P

    std::vector<double> windows;  // rows * order * input_dim
    std::vector<double> weights;  // rows * order (b-rows, oldest node first)
    Eigen::VectorXd targets;      // rows

    const double* window_point(std::size_t n, int q) const {
        return windows.data() + (n * order + q) * input_dim;
    }
    std::span<const double> b_row(std::size_t n) const {
        return {weights.data() + n * order, static_cast<std::size_t>(order)};
    }
};

inline MultistepData build_training_data(const std::vector<std::vector<double>>& parent_cols,
                                         const std::vector<double>& target_col,
                                         const Timeline& timeline, int order) {
    const std::size_t n = timeline.size();
    if (n < static_cast<std::size_t>(order) + 2) throw TimelineTooShort(n, order);
    const IntegratorScheme scheme = ab_coefficients(timeline, order);
    MultistepData data;
    data.rows = n - static_cast<std::size_t>(order);
    data.order = order;
    data.input_dim = parent_cols.size();
    data.windows.resize(data.rows * order * data.input_dim);
    data.weights.resize(data.rows * order);
    data.targets.resize(static_cast<Eigen::Index>(data.rows));
    for (std::size_t w = 0; w < data.rows; ++w) {
        const auto b = scheme.row(w);
        for (int q = 0; q < order; ++q) {
            data.weights[w * order + q] = b[q];
            for (std::size_t p = 0; p < data.input_dim; ++p)
                data.windows[(w * order + q) * data.input_dim + p] = parent_cols[p][w + q];
        }
        data.targets(static_cast<Eigen::Index>(w)) =
            target_col[w + order] - target_col[w + order - 1];
    }
    return data;
}

namespace detail {

inline double ipow(double x, int e) {
    double r = 1.0;
    for (int i = 0; i < e; ++i) r *= x;
    return r;
}

// Gram of the multistep kernel: entry (n, m) is the bilinear
// form b_n^T k_block(window_n, window_m) b_m over base-kernel evaluations.
// When `block_cache` is given, the per-pair base-kernel values are stored
// (upper triangle, s*s per pair) for reuse in the gradient pass.
inline void build_multistep_gram(const KernelSpec& kernel, const MultistepData& d,
                                 Eigen::MatrixXd& gram, std::vector<double>* block_cache) {
    const std::size_t M = d.rows;
    const int s = d.order;
    const std::size_t P = d.input_dim;
    gram.resize(static_cast<Eigen::Index>(M), static_cast<Eigen::Index>(M));
    if (block_cache) block_cache->resize(M * (M + 1) / 2 * s * s);

    const bool rbf = kernel.kind == KernelKind::RBF;
    std::vector<double> inv_ls2(P, 0.0);
    if (rbf)
        for (std::size_t p = 0; p < P; ++p)
            inv_ls2[p] = 1.0 / (kernel.lengthscales[p] * kernel.lengthscales[p]);

    std::size_t pair = 0;
    for (std::size_t n = 0; n < M; ++n) {
        const double* bn = d.weights.data() + n * s;
        for (std::size_t m = n; m < M; ++m, ++pair) {
            const double* bm = d.weights.data() + m * s;
            double acc = 0.0;
            double* cache = block_cache ? block_cache->data() + pair * s * s : nullptr;
            for (int q = 0; q < s; ++q) {
                const double* xq = d.window_point(n, q);
                for (int r = 0; r < s; ++r) {
                    const double* yr = d.window_point(m, r);
                    double k;
                    if (rbf) {
                        double quad = 0.0;
                        for (std::size_t p = 0; p < P; ++p) {
                            const double dx = xq[p] - yr[p];
                            quad += dx * dx * inv_ls2[p];
                        }
                        k = kernel.signal_variance * std::exp(-0.5 * quad);
                    } else {
                        double dot = 0.0;
                        for (std::size_t p = 0; p < P; ++p) dot += xq[p] * yr[p];
                        k = kernel.signal_variance * ipow(dot + kernel.offset, kernel.degree);
                    }
                    if (cache) cache[q * s + r] = k;
                    acc += bn[q] * bm[r] * k;
                }
            }
            gram(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(m)) = acc;
            gram(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(n)) = acc;
        }
    }
}

}  // namespace detail

// Public multistep Gram over explicit windows (mainly for tests and diagnostics).
// `windows[n]` is the flattened window of `scheme_order` parent vectors.
inline Eigen::MatrixXd multistep_gram(const KernelSpec& kernel, int scheme_order,
                                      const std::vector<std::vector<double>>& windows,
                                      const std::vector<std::vector<double>>& b_rows) {
    if (windows.size() != b_rows.size())
        throw WindowLengthMismatch("window/weight row counts differ");
    MultistepData d;
    d.rows = windows.size();
    d.order = scheme_order;
    if (d.rows > 0) {
        if (windows[0].size() % scheme_order != 0)
            throw WindowLengthMismatch("window length is not a multiple of the order");
        d.input_dim = windows[0].size() / scheme_order;
    }
    for (std::size_t n = 0; n < d.rows; ++n) {
        if (windows[n].size() != d.input_dim * scheme_order ||
            b_rows[n].size() != static_cast<std::size_t>(scheme_order))
            throw WindowLengthMismatch("window " + std::to_string(n) +
                                       " does not match the scheme order");
        d.windows.insert(d.windows.end(), windows[n].begin(), windows[n].end());
        d.weights.insert(d.weights.end(), b_rows[n].begin(), b_rows[n].end());
    }
    Eigen::MatrixXd gram;
    detail::build_multistep_gram(kernel, d, gram, nullptr);
    return gram;
}

// Hyperparameters in optimizer coordinates. RBF: [log ls_0.., log sv,
// log lam]; Polynomial: [log sv, log offset, log lam]. The effective noise is
// exp(log lam) + lambda_floor, the floor being an unconditional jitter.
inline KernelSpec kernel_from_psi(KernelKind kind, std::size_t input_dim,
                                  std::span<const double> psi, int degree,
                                  double lambda_floor) {
    KernelSpec k;
    k.kind = kind;
    k.degree = degree;
    if (kind == KernelKind::RBF) {
        k.lengthscales.resize(input_dim);
        for (std::size_t p = 0; p < input_dim; ++p) k.lengthscales[p] = std::exp(psi[p]);
        k.signal_variance = std::exp(psi[input_dim]);
        k.noise_variance = std::exp(psi[input_dim + 1]) + lambda_floor;
    } else {
        k.signal_variance = std::exp(psi[0]);
        k.offset = std::exp(psi[1]);
        k.noise_variance = std::exp(psi[2]) + lambda_floor;
    }
    return k;
}

struct LmlEvaluation {
    bool valid = false;
    double lml = -std::numeric_limits<double>::infinity();
    std::vector<double> gradient;  // d lml / d psi
};

// Exact GP log marginal likelihood of the increments under the multistep
// Gram, with analytic gradients in psi coordinates.
inline LmlEvaluation lml_with_gradient(KernelKind kind, const MultistepData& d,
                                       std::span<const double> psi, int degree,
                                       double lambda_floor, bool want_gradient = true) {
    LmlEvaluation out;
    const std::size_t M = d.rows;
    const std::size_t P = d.input_dim;
    const KernelSpec kernel = kernel_from_psi(kind, P, psi, degree, lambda_floor);
    const double lam_free = kind == KernelKind::RBF ? std::exp(psi[P + 1]) : std::exp(psi[2]);
    const double lam_total = kernel.noise_variance;

    Eigen::MatrixXd gram;
    std::vector<double> cache;
    detail::build_multistep_gram(kernel, d, gram, want_gradient ? &cache : nullptr);

    Eigen::MatrixXd K = gram;
    K.diagonal().array() += lam_total;
    Eigen::LLT<Eigen::MatrixXd> llt(K);
    if (llt.info() != Eigen::Success) return out;

    const Eigen::VectorXd alpha = llt.solve(d.targets);
    double logdet = 0.0;
    const auto& L = llt.matrixLLT();
    for (std::size_t i = 0; i < M; ++i)
        logdet += 2.0 * std::log(L(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i)));
    out.lml = -0.5 * d.targets.dot(alpha) - 0.5 * logdet -
              0.5 * static_cast<double>(M) * std::log(2.0 * std::numbers::pi);
    if (!std::isfinite(out.lml)) return out;
    out.valid = true;
    if (!want_gradient) return out;

    // d lml / d theta = 1/2 tr((alpha alpha^T - K^{-1}) dK/dtheta).
    Eigen::MatrixXd kinv = llt.solve(Eigen::MatrixXd::Identity(
        static_cast<Eigen::Index>(M), static_cast<Eigen::Index>(M)));

    const std::size_t n_psi = kind == KernelKind::RBF ? P + 2 : 3;
    out.gradient.assign(n_psi, 0.0);

    const int s = d.order;
    double trace_sv = 0.0;  // tr(B .* gram): dK/dlog sv = gram
    std::vector<double> trace_ls(kind == KernelKind::RBF ? P : 1, 0.0);
    double trace_offset = 0.0;
    std::vector<double> inv_ls2(P, 0.0);
    if (kind == KernelKind::RBF)
        for (std::size_t p = 0; p < P; ++p)
            inv_ls2[p] = 1.0 / (kernel.lengthscales[p] * kernel.lengthscales[p]);

    std::size_t pair = 0;
    for (std::size_t n = 0; n < M; ++n) {
        const double* bn = d.weights.data() + n * s;
        for (std::size_t m = n; m < M; ++m, ++pair) {
            const double* bm = d.weights.data() + m * s;
            const double bcoef =
                alpha(static_cast<Eigen::Index>(n)) * alpha(static_cast<Eigen::Index>(m)) -
                kinv(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(m));
            const double w_pair = (n == m) ? 1.0 : 2.0;
            trace_sv += w_pair * bcoef *
                        gram(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(m));
            const double* kblock = cache.data() + pair * s * s;
            if (kind == KernelKind::RBF) {
                for (int q = 0; q < s; ++q) {
                    const double* xq = d.window_point(n, q);
                    for (int r = 0; r < s; ++r) {
                        const double* yr = d.window_point(m, r);
                        const double wk = w_pair * bcoef * bn[q] * bm[r] * kblock[q * s + r];
                        for (std::size_t p = 0; p < P; ++p) {
                            const double dx = xq[p] - yr[p];
                            // d k / d log ls_p = k * dx^2 / ls_p^2
                            trace_ls[p] += wk * dx * dx * inv_ls2[p];
                        }
                    }
                }
            } else {
                for (int q = 0; q < s; ++q) {
                    const double* xq = d.window_point(n, q);
                    for (int r = 0; r < s; ++r) {
                        const double* yr = d.window_point(m, r);
                        double dot = 0.0;
                        for (std::size_t p = 0; p < P; ++p) dot += xq[p] * yr[p];
                        // d k / d log c = sv * deg * (dot + c)^(deg-1) * c
                        trace_offset += w_pair * bcoef * bn[q] * bm[r] *
                                        kernel.signal_variance * kernel.degree *
                                        detail::ipow(dot + kernel.offset, kernel.degree - 1) *
                                        kernel.offset;
                    }
                }
            }
        }
    }

    const double trace_lam = lam_free * (alpha.squaredNorm() - kinv.trace());
    if (kind == KernelKind::RBF) {
        for (std::size_t p = 0; p < P; ++p) out.gradient[p] = 0.5 * trace_ls[p];
        out.gradient[P] = 0.5 * trace_sv;
        out.gradient[P + 1] = 0.5 * trace_lam;
    } else {
        out.gradient[0] = 0.5 * trace_sv;
        out.gradient[1] = 0.5 * trace_offset;
        out.gradient[2] = 0.5 * trace_lam;
    }
    for (double g : out.gradient)
        if (!std::isfinite(g)) {
            out.valid = false;
            return out;
        }
    return out;
}

struct FitOptions {
    int restarts = 5;
    int max_iterations = 200;
    std::uint64_t seed = 0;
    double lambda_floor_scale = 1e-8;
    int polynomial_degree = 1;
};

// A fitted dynamics model for one target variable.
struct DynamicsGP {
    KernelSpec kernel;
    int order = 1;
    std::size_t input_dim = 0;
    MultistepData data;
    Eigen::MatrixXd gram;            // without the noise diagonal
    Eigen::LLT<Eigen::MatrixXd> chol;  // of gram + lambda I
    Eigen::VectorXd alpha;           // (K + lambda I)^{-1} y
    Eigen::VectorXd eigenvalues;     // of the Gram, nonincreasing, clamped >= 0
    double log_marginal = 0.0;
    double lambda_floor = 0.0;

    // Per-restart diagnostics: marginal likelihood at initialization and
    // after optimization.
    std::vector<double> restart_initial_lml;
    std::vector<double> restart_final_lml;

    std::size_t training_rows() const { return data.rows; }
};

namespace detail {

struct RestartResult {
    bool valid = false;
    std::vector<double> psi;
    double lml = -std::numeric_limits<double>::infinity();
    double initial_lml = -std::numeric_limits<double>::infinity();
};

// L-BFGS ascent on the marginal likelihood with Armijo backtracking. The
// history is dropped whenever it stops producing an ascent direction; a
// failed backtrack along the plain gradient terminates the restart.
inline RestartResult optimize_restart(KernelKind kind, const MultistepData& d,
                                      std::vector<double> psi, const FitOptions& opt,
                                      double lambda_floor) {
    constexpr int kMemory = 8;
    RestartResult res;
    res.psi = psi;

    const std::size_t n = psi.size();
    auto eval = [&](const std::vector<double>& point, bool grad) {
        return lml_with_gradient(kind, d, point, opt.polynomial_degree, lambda_floor, grad);
    };

    LmlEvaluation cur = eval(psi, true);
    if (!cur.valid) return res;
    res.valid = true;
    res.initial_lml = cur.lml;
    res.lml = cur.lml;

    std::vector<std::vector<double>> s_hist, y_hist;
    std::vector<double> rho_hist;
    std::vector<double> direction(n), trial(n);

    for (int t = 0; t < opt.max_iterations; ++t) {
        // Two-loop recursion applied to the ascent gradient.
        direction = cur.gradient;
        std::vector<double> alpha_coef(s_hist.size());
        for (std::size_t k = s_hist.size(); k-- > 0;) {
            double sq = 0.0;
            for (std::size_t i = 0; i < n; ++i) sq += s_hist[k][i] * direction[i];
            alpha_coef[k] = rho_hist[k] * sq;
            for (std::size_t i = 0; i < n; ++i) direction[i] -= alpha_coef[k] * y_hist[k][i];
        }
        if (!s_hist.empty()) {
            double sy = 0.0, yy = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                sy += s_hist.back()[i] * y_hist.back()[i];
                yy += y_hist.back()[i] * y_hist.back()[i];
            }
            const double scale = yy > 0.0 ? sy / yy : 1.0;
            for (auto& v : direction) v *= scale;
        }
        for (std::size_t k = 0; k < s_hist.size(); ++k) {
            double yq = 0.0;
            for (std::size_t i = 0; i < n; ++i) yq += y_hist[k][i] * direction[i];
            const double beta = rho_hist[k] * yq;
            for (std::size_t i = 0; i < n; ++i)
                direction[i] += (alpha_coef[k] - beta) * s_hist[k][i];
        }

        double ascent = 0.0, gnorm = 0.0, dnorm = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            ascent += direction[i] * cur.gradient[i];
            gnorm = std::max(gnorm, std::abs(cur.gradient[i]));
            dnorm = std::max(dnorm, std::abs(direction[i]));
        }
        if (gnorm < 1e-7 * (1.0 + std::abs(cur.lml))) break;  // stationary
        if (!(ascent > 0.0)) {
            s_hist.clear();
            y_hist.clear();
            rho_hist.clear();
            direction = cur.gradient;
            ascent = 0.0;
            dnorm = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                ascent += direction[i] * direction[i];
                dnorm = std::max(dnorm, std::abs(direction[i]));
            }
        }
        // Cap the first move along a fresh direction to a sane length in
        // log-parameter space.
        double step = s_hist.empty() ? std::min(1.0, 2.0 / std::max(dnorm, 1e-12)) : 1.0;

        LmlEvaluation next;
        bool accepted = false;
        for (int bt = 0; bt < 14; ++bt) {
            for (std::size_t i = 0; i < n; ++i) trial[i] = psi[i] + step * direction[i];
            next = eval(trial, false);
            if (next.valid && next.lml >= cur.lml + 1e-4 * step * ascent) {
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if (!accepted) {
            if (s_hist.empty()) break;  // no progress even along the gradient
            s_hist.clear();
            y_hist.clear();
            rho_hist.clear();
            continue;
        }

        next = eval(trial, true);
        if (!next.valid) break;

        std::vector<double> s_new(n), y_new(n);
        double sy = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            s_new[i] = trial[i] - psi[i];
            // y is the change of the DESCENT gradient of -lml, i.e. the
            // negated change of the ascent gradient.
            y_new[i] = cur.gradient[i] - next.gradient[i];
            sy += s_new[i] * y_new[i];
        }
        if (sy > 1e-12) {
            s_hist.push_back(std::move(s_new));
            y_hist.push_back(std::move(y_new));
            rho_hist.push_back(1.0 / sy);
            if (static_cast<int>(s_hist.size()) > kMemory) {
                s_hist.erase(s_hist.begin());
                y_hist.erase(y_hist.begin());
                rho_hist.erase(rho_hist.begin());
            }
        }

        const double improvement = next.lml - cur.lml;
        psi = trial;
        cur = std::move(next);
        if (cur.lml > res.lml) {
            res.lml = cur.lml;
            res.psi = psi;
        }
        if (improvement < 1e-9 * (1.0 + std::abs(cur.lml))) break;
    }
    return res;
}

}  // namespace detail

// Fits the dynamics GP for one target: builds increment targets and parent
// windows, then maximizes the exact log marginal likelihood from `restarts`
// random initializations (log-uniform, scaled to the data), keeping the best
// point visited across all restarts.
inline DynamicsGP fit_dynamics_gp(const std::vector<std::vector<double>>& parent_cols,
                                  const std::vector<double>& target_col,
                                  const Timeline& timeline, KernelKind kind, int order,
                                  const FitOptions& opt = {}) {
    if (parent_cols.empty()) throw ValidationError("fit requires at least one parent column");
    DynamicsGP model;
    model.order = order;
    model.input_dim = parent_cols.size();
    model.data = build_training_data(parent_cols, target_col, timeline, order);
    const std::size_t P = model.input_dim;

    double y_mean = model.data.targets.mean();
    double y_var = (model.data.targets.array() - y_mean).square().mean();
    if (!(y_var > 0.0)) y_var = 1e-12;
    const double lambda_floor = opt.lambda_floor_scale * y_var;
    model.lambda_floor = lambda_floor;

    std::vector<double> input_std(P, 1.0);
    for (std::size_t p = 0; p < P; ++p) {
        double mean = 0.0;
        for (double x : parent_cols[p]) mean += x;
        mean /= static_cast<double>(parent_cols[p].size());
        double var = 0.0;
        for (double x : parent_cols[p]) var += (x - mean) * (x - mean);
        var /= static_cast<double>(parent_cols[p].size());
        input_std[p] = var > 0.0 ? std::sqrt(var) : 1.0;
    }

    detail::RestartResult best;
    for (int r = 0; r < opt.restarts; ++r) {
        Rng rng(seed_combine({opt.seed, 0x464954u, static_cast<std::uint64_t>(r)}));
        std::vector<double> psi;
        if (kind == KernelKind::RBF) {
            for (std::size_t p = 0; p < P; ++p)
                psi.push_back(std::log(rng.log_uniform(0.1, 10.0) * input_std[p]));
            psi.push_back(std::log(rng.log_uniform(0.1, 10.0) * y_var));
            psi.push_back(std::log(rng.log_uniform(1e-6, 1e-1) * y_var));
        } else {
            psi.push_back(std::log(rng.log_uniform(0.1, 10.0) * y_var));
            psi.push_back(std::log(rng.log_uniform(0.1, 10.0)));
            psi.push_back(std::log(rng.log_uniform(1e-6, 1e-1) * y_var));
        }
        auto res = detail::optimize_restart(kind, model.data, std::move(psi), opt, lambda_floor);
        model.restart_initial_lml.push_back(res.initial_lml);
        model.restart_final_lml.push_back(res.lml);
        if (res.valid && res.lml > best.lml) best = std::move(res);
    }
    if (!best.valid)
        throw OptimizationFailure("no restart produced a finite marginal likelihood");

    model.kernel = kernel_from_psi(kind, P, best.psi, opt.polynomial_degree, lambda_floor);
    model.log_marginal = best.lml;
    detail::build_multistep_gram(model.kernel, model.data, model.gram, nullptr);
    Eigen::MatrixXd K = model.gram;
    K.diagonal().array() += model.kernel.noise_variance;
    model.chol.compute(K);
    if (model.chol.info() != Eigen::Success)
        throw SingularGram("final Gram factorization failed despite the noise floor");
    model.alpha = model.chol.solve(model.data.targets);

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(model.gram, Eigen::EigenvaluesOnly);
    model.eigenvalues = es.eigenvalues().reverse();
    for (Eigen::Index i = 0; i < model.eigenvalues.size(); ++i)
        model.eigenvalues(i) = std::max(model.eigenvalues(i), 0.0);
    return model;
}

// Convenience overload working directly on trajectory columns.
inline DynamicsGP fit_dynamics_gp(const Trajectory& traj, const std::vector<int>& parents,
                                  int target, KernelKind kind, int order,
                                  const FitOptions& opt = {}) {
    std::vector<std::vector<double>> cols;
    cols.reserve(parents.size());
    for (int p : parents) cols.push_back(traj.column(static_cast<std::size_t>(p)));
    return fit_dynamics_gp(cols, traj.column(static_cast<std::size_t>(target)),
                           traj.timeline(), kind, order, opt);
}

struct PosteriorValue {
    double mean = 0.0;
    double variance = 0.0;
};

// GP posterior for one test window (s parent vectors, flattened) with its
// integration weights. With no training rows this is the zero-mean prior.
inline PosteriorValue posterior(const DynamicsGP& model, std::span<const double> test_window,
                                std::span<const double> b_star) {
    const int s = model.order;
    const std::size_t P = model.input_dim;
    if (test_window.size() != static_cast<std::size_t>(s) * P)
        throw WindowLengthMismatch("test window does not match the scheme order");
    if (b_star.size() != static_cast<std::size_t>(s))
        throw WindowLengthMismatch("test weight row does not match the scheme order");

    auto point = [&](int q) { return test_window.data() + static_cast<std::size_t>(q) * P; };

    double prior = 0.0;
    for (int q = 0; q < s; ++q)
        for (int r = 0; r < s; ++r)
            prior += b_star[q] * b_star[r] *
                     base_kernel(model.kernel, {point(q), P}, {point(r), P});

    const std::size_t M = model.data.rows;
    if (M == 0) return {0.0, std::max(prior, 0.0)};

    Eigen::VectorXd kstar(static_cast<Eigen::Index>(M));
    for (std::size_t m = 0; m < M; ++m) {
        const double* bm = model.data.weights.data() + m * s;
        double acc = 0.0;
        for (int q = 0; q < s; ++q)
            for (int r = 0; r < s; ++r)
                acc += b_star[q] * bm[r] *
                       base_kernel(model.kernel, {point(q), P},
                                   {model.data.window_point(m, r), P});
        kstar(static_cast<Eigen::Index>(m)) = acc;
    }
    PosteriorValue out;
    out.mean = kstar.dot(model.alpha);
    out.variance = std::max(prior - kstar.dot(model.chol.solve(kstar)), 0.0);
    return out;
}

// Teacher-forced rollout of the target over `timeline`: parents stay at their
// observed values; only the target is integrated forward from the first s
// observed samples. If the target is its own parent, its window entries use
// the predicted values.
inline std::vector<double> rollout(const DynamicsGP& model, const Timeline& timeline,
                                   const std::vector<std::vector<double>>& parent_cols,
                                   int self_position, std::span<const double> init) {
    const int s = model.order;
    const std::size_t P = model.input_dim;
    if (init.size() != static_cast<std::size_t>(s))
        throw WindowLengthMismatch("rollout init must provide the first s samples");
    if (parent_cols.size() != P)
        throw DimensionMismatch("rollout parent count does not match the model");

    const IntegratorScheme scheme = ab_coefficients(timeline, s);
    const std::size_t n_steps = scheme.windows();
    std::vector<double> predicted(timeline.size(), 0.0);
    for (int q = 0; q < s; ++q) predicted[q] = init[q];

    std::vector<double> window(static_cast<std::size_t>(s) * P);
    // Fast path for the posterior mean: only k* . alpha is needed per step.
    for (std::size_t n = 0; n < n_steps; ++n) {
        for (int q = 0; q < s; ++q)
            for (std::size_t p = 0; p < P; ++p)
                window[static_cast<std::size_t>(q) * P + p] =
                    (static_cast<int>(p) == self_position) ? predicted[n + q]
                                                           : parent_cols[p][n + q];
        const auto b_star = scheme.row(n);
        const std::size_t M = model.data.rows;
        double mean = 0.0;
        for (std::size_t m = 0; m < M; ++m) {
            const double* bm = model.data.weights.data() + m * s;
            double acc = 0.0;
            for (int q = 0; q < s; ++q)
                for (int r = 0; r < s; ++r)
                    acc += b_star[q] * bm[r] *
                           base_kernel(model.kernel,
                                       {window.data() + static_cast<std::size_t>(q) * P, P},
                                       {model.data.window_point(m, r), P});
            mean += acc * model.alpha(static_cast<Eigen::Index>(m));
        }
        predicted[n + s] = predicted[n + s - 1] + mean;
    }
    return predicted;
}

}  // namespace cadyt
