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

#include <array>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>

#include "cadyt/types.hpp"

namespace cadyt {

struct OrderUnsupported : std::runtime_error {
    explicit OrderUnsupported(int s)
        : std::runtime_error("integrator order " + std::to_string(s) + " not supported (use 1-3)") {}
};

struct TimelineTooShort : std::runtime_error {
    TimelineTooShort(std::size_t n, int s)
        : std::runtime_error("timeline of length " + std::to_string(n) +
                             " too short for order-" + std::to_string(s) + " scheme") {}
};

// Explicit Adams-Bashforth weights on an arbitrary grid. Window n spans the
// target interval (t[n+s-1], t[n+s]] and carries one weight per history node
// t[n], ..., t[n+s-1], oldest first. The left-hand stencil is always the
// increment X(n+s) - X(n+s-1).
class IntegratorScheme {
public:
    static constexpr int kMaxOrder = 3;

    IntegratorScheme(int order, std::size_t windows)
        : order_(order), windows_(windows), weights_(windows * order, 0.0) {}

    int order() const { return order_; }
    std::size_t windows() const { return windows_; }

    std::span<const double> row(std::size_t n) const {
        return {weights_.data() + n * order_, static_cast<std::size_t>(order_)};
    }
    std::span<double> mutable_row(std::size_t n) {
        return {weights_.data() + n * order_, static_cast<std::size_t>(order_)};
    }

    // The a-row of the stencil: zeros followed by -1, 1.
    static std::array<double, kMaxOrder + 1> a_row(int order) {
        std::array<double, kMaxOrder + 1> a{};
        a[order - 1] = -1.0;
        a[order] = 1.0;
        return a;
    }

private:
    int order_;
    std::size_t windows_;
    std::vector<double> weights_;
};

namespace detail {

// Exact integral over [lo, hi] of the Lagrange basis polynomial through
// `nodes` that is 1 at nodes[j] and 0 elsewhere. The numerator polynomial is
// expanded into monomial coefficients and integrated term by term, so the
// result is closed-form for any (small) degree.
inline double lagrange_basis_integral(std::span<const double> nodes, std::size_t j, double lo,
                                      double hi) {
    // coeffs[k] multiplies x^k; starts as the constant polynomial 1.
    std::array<double, IntegratorScheme::kMaxOrder + 1> coeffs{};
    coeffs[0] = 1.0;
    std::size_t degree = 0;
    double denom = 1.0;
    for (std::size_t k = 0; k < nodes.size(); ++k) {
        if (k == j) continue;
        denom *= nodes[j] - nodes[k];
        // Multiply by (x - nodes[k]).
        for (std::size_t d = degree + 1; d > 0; --d)
            coeffs[d] = coeffs[d - 1] - nodes[k] * coeffs[d];
        coeffs[0] = -nodes[k] * coeffs[0];
        ++degree;
    }
    double integral = 0.0;
    double lo_pow = lo, hi_pow = hi;
    for (std::size_t d = 0; d <= degree; ++d) {
        integral += coeffs[d] * (hi_pow - lo_pow) / static_cast<double>(d + 1);
        lo_pow *= lo;
        hi_pow *= hi;
    }
    return integral / denom;
}

}  // namespace detail

// Adams-Bashforth coefficients of order s on the given (possibly irregular)
// grid: the window-n weight for node t[n+j] is the exact integral of the
// j-th Lagrange basis polynomial over the target interval. On a uniform grid
// this reproduces the classical AB weights scaled by the step.
inline IntegratorScheme ab_coefficients(const Timeline& timeline, int order) {
    if (order < 1 || order > IntegratorScheme::kMaxOrder) throw OrderUnsupported(order);
    const std::size_t n = timeline.size();
    if (n < static_cast<std::size_t>(order) + 1) throw TimelineTooShort(n, order);
    const std::size_t windows = n - static_cast<std::size_t>(order);
    IntegratorScheme scheme(order, windows);
    const std::size_t s = static_cast<std::size_t>(order);
    for (std::size_t w = 0; w < windows; ++w) {
        // Work in coordinates relative to the interval start; the basis is
        // translation-invariant and the monomial expansion stays conditioned
        // even when absolute times are large.
        const double ref = timeline[w + s - 1];
        std::array<double, IntegratorScheme::kMaxOrder> nodes{};
        for (std::size_t j = 0; j < s; ++j) nodes[j] = timeline[w + j] - ref;
        const double hi = timeline[w + s] - ref;
        auto row = scheme.mutable_row(w);
        for (std::size_t j = 0; j < s; ++j)
            row[j] = detail::lagrange_basis_integral({nodes.data(), s}, j, 0.0, hi);
    }
    return scheme;
}

}  // namespace cadyt
