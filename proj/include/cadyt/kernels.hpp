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
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "cadyt/types.hpp"

namespace cadyt {

enum class KernelKind { RBF, Polynomial };

inline const char* to_string(KernelKind k) {
    return k == KernelKind::RBF ? "rbf" : "poly";
}

// Base covariance function over single-time parent vectors.
//   RBF:        sv * exp(-1/2 * sum_d (x_d - y_d)^2 / alpha_d^2)
//   Polynomial: sv * (x . y + offset)^degree
struct KernelSpec {
    KernelKind kind = KernelKind::RBF;
    std::vector<double> lengthscales;  // one per input dimension (RBF only)
    double signal_variance = 1.0;
    double offset = 0.0;  // Polynomial only
    int degree = 1;       // Polynomial only
    double noise_variance = 0.0;  // lambda, added to the Gram diagonal

    void validate() const {
        if (!(signal_variance > 0.0)) throw ValidationError("signal variance must be positive");
        if (!(noise_variance >= 0.0)) throw ValidationError("noise variance must be >= 0");
        if (kind == KernelKind::RBF) {
            if (lengthscales.empty()) throw ValidationError("RBF kernel needs lengthscales");
            for (double a : lengthscales)
                if (!(a > 0.0)) throw ValidationError("lengthscales must be positive");
        } else {
            if (degree < 1) throw ValidationError("polynomial degree must be >= 1");
        }
    }

    // All fitted hyperparameters, in the order they are encoded by the MDL
    // function cost: lengthscales (RBF), signal variance, offset (poly),
    // noise variance.
    std::vector<double> hyperparameters() const {
        std::vector<double> out;
        if (kind == KernelKind::RBF) out = lengthscales;
        out.push_back(signal_variance);
        if (kind == KernelKind::Polynomial) out.push_back(offset);
        out.push_back(noise_variance);
        return out;
    }
};

inline double base_kernel(const KernelSpec& spec, std::span<const double> x,
                          std::span<const double> y) {
    if (x.size() != y.size()) throw DimensionMismatch("kernel inputs differ in dimension");
    if (spec.kind == KernelKind::RBF) {
        if (x.size() != spec.lengthscales.size())
            throw DimensionMismatch("RBF input dimension " + std::to_string(x.size()) +
                                    " != lengthscale count " +
                                    std::to_string(spec.lengthscales.size()));
        double q = 0.0;
        for (std::size_t d = 0; d < x.size(); ++d) {
            const double z = (x[d] - y[d]) / spec.lengthscales[d];
            q += z * z;
        }
        return spec.signal_variance * std::exp(-0.5 * q);
    }
    double dot = 0.0;
    for (std::size_t d = 0; d < x.size(); ++d) dot += x[d] * y[d];
    return spec.signal_variance * std::pow(dot + spec.offset, spec.degree);
}

}  // namespace cadyt
