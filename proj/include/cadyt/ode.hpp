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
#include <cstddef>
#include <functional>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace cadyt {

using OdeRhs = std::function<void(double t, std::span<const double> x, std::span<double> dxdt)>;

struct IntegrationFailure : std::runtime_error {
    IntegrationFailure(const std::string& what, double time)
        : std::runtime_error(what + " at t = " + std::to_string(time)), t(time) {}
    double t;
};

// Raised internally when the state magnitude guard trips; callers that want
// rejection sampling (exploding benchmark draws) catch it and resample.
struct StateMagnitudeExceeded : IntegrationFailure {
    explicit StateMagnitudeExceeded(double time)
        : IntegrationFailure("state magnitude guard exceeded", time) {}
};

struct OdeOptions {
    double abs_tol = 1e-8;
    double rel_tol = 1e-8;
    double max_magnitude = std::numeric_limits<double>::infinity();
};

// Runge-Kutta-Fehlberg 4(5): adaptive embedded pair, advancing with the
// fifth-order solution. Steps are clipped so every requested sample time is
// hit exactly; the state at each sample time is written to `out`, row-major
// with one row per sample.
inline void integrate_rk45(const OdeRhs& rhs, std::span<const double> x0,
                           std::span<const double> sample_times, double* out,
                           const OdeOptions& opt = {}) {
    static constexpr double c2 = 1.0 / 4, c3 = 3.0 / 8, c4 = 12.0 / 13, c5 = 1.0, c6 = 1.0 / 2;
    static constexpr double a21 = 1.0 / 4;
    static constexpr double a31 = 3.0 / 32, a32 = 9.0 / 32;
    static constexpr double a41 = 1932.0 / 2197, a42 = -7200.0 / 2197, a43 = 7296.0 / 2197;
    static constexpr double a51 = 439.0 / 216, a52 = -8.0, a53 = 3680.0 / 513,
                            a54 = -845.0 / 4104;
    static constexpr double a61 = -8.0 / 27, a62 = 2.0, a63 = -3544.0 / 2565,
                            a64 = 1859.0 / 4104, a65 = -11.0 / 40;
    static constexpr double b51 = 16.0 / 135, b53 = 6656.0 / 12825, b54 = 28561.0 / 56430,
                            b55 = -9.0 / 50, b56 = 2.0 / 55;
    static constexpr double e1 = 16.0 / 135 - 25.0 / 216, e3 = 6656.0 / 12825 - 1408.0 / 2565,
                            e4 = 28561.0 / 56430 - 2197.0 / 4104, e5 = -9.0 / 50 + 1.0 / 5,
                            e6 = 2.0 / 55;

    if (sample_times.empty()) return;
    const std::size_t d = x0.size();
    std::vector<double> x(x0.begin(), x0.end());
    std::vector<double> k1(d), k2(d), k3(d), k4(d), k5(d), k6(d), xt(d), xnew(d);

    double t = sample_times[0];
    std::copy(x.begin(), x.end(), out);
    std::size_t next_sample = 1;

    double h = sample_times.size() > 1 ? (sample_times[1] - sample_times[0]) / 4.0 : 0.0;

    auto stage = [&](double tt, const std::vector<double>& xx, std::vector<double>& kk) {
        rhs(tt, {xx.data(), d}, {kk.data(), d});
    };

    while (next_sample < sample_times.size()) {
        const double target = sample_times[next_sample];
        const double h_min = 1e-14 * std::max(1.0, std::abs(t));
        if (!(h > 0.0)) h = std::max(h_min, (target - t) / 4.0);
        bool hit_sample = false;
        if (t + h >= target) {
            h = target - t;
            hit_sample = true;
        }

        stage(t, x, k1);
        for (std::size_t i = 0; i < d; ++i) xt[i] = x[i] + h * a21 * k1[i];
        stage(t + c2 * h, xt, k2);
        for (std::size_t i = 0; i < d; ++i) xt[i] = x[i] + h * (a31 * k1[i] + a32 * k2[i]);
        stage(t + c3 * h, xt, k3);
        for (std::size_t i = 0; i < d; ++i)
            xt[i] = x[i] + h * (a41 * k1[i] + a42 * k2[i] + a43 * k3[i]);
        stage(t + c4 * h, xt, k4);
        for (std::size_t i = 0; i < d; ++i)
            xt[i] = x[i] + h * (a51 * k1[i] + a52 * k2[i] + a53 * k3[i] + a54 * k4[i]);
        stage(t + c5 * h, xt, k5);
        for (std::size_t i = 0; i < d; ++i)
            xt[i] = x[i] + h * (a61 * k1[i] + a62 * k2[i] + a63 * k3[i] + a64 * k4[i] +
                                a65 * k5[i]);
        stage(t + c6 * h, xt, k6);

        double err_ratio = 0.0;
        for (std::size_t i = 0; i < d; ++i) {
            xnew[i] = x[i] + h * (b51 * k1[i] + b53 * k3[i] + b54 * k4[i] + b55 * k5[i] +
                                  b56 * k6[i]);
            const double err = h * (e1 * k1[i] + e3 * k3[i] + e4 * k4[i] + e5 * k5[i] +
                                    e6 * k6[i]);
            const double scale = opt.abs_tol + opt.rel_tol * std::max(std::abs(x[i]),
                                                                      std::abs(xnew[i]));
            err_ratio = std::max(err_ratio, std::abs(err) / scale);
        }

        if (!std::isfinite(err_ratio)) throw IntegrationFailure("non-finite state", t);

        if (err_ratio <= 1.0) {
            t = hit_sample ? target : t + h;
            x = xnew;
            for (double v : x)
                if (std::abs(v) > opt.max_magnitude) throw StateMagnitudeExceeded(t);
            if (hit_sample) {
                std::copy(x.begin(), x.end(), out + next_sample * d);
                ++next_sample;
            }
        }

        const double factor =
            err_ratio > 0.0 ? 0.9 * std::pow(err_ratio, -0.2) : 5.0;
        h *= std::clamp(factor, 0.2, 5.0);
        if (h < h_min) throw IntegrationFailure("step size underflow", t);
    }
}

}  // namespace cadyt
