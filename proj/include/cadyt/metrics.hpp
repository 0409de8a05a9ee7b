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
#include <stdexcept>
#include <vector>

#include "cadyt/search.hpp"
#include "cadyt/types.hpp"

namespace cadyt {

struct NoTrueEdges : std::runtime_error {
    NoTrueEdges() : std::runtime_error("AUPRC is undefined for an empty ground truth") {}
};

struct MetricReport {
    int shd = 0;
    double nshd = 0.0;
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    double auprc = 0.0;
    bool auprc_defined = false;
};

// Structural Hamming distance: directed cell-by-cell mismatches, diagonal
// included (consistent with the D^2 normalization).
inline int shd(const CausalGraph& pred, const CausalGraph& truth) {
    if (pred.dimension() != truth.dimension())
        throw DimensionMismatch("graphs differ in dimension");
    int mismatches = 0;
    for (int i = 0; i < pred.dimension(); ++i)
        for (int j = 0; j < pred.dimension(); ++j)
            if (pred.has_edge(i, j) != truth.has_edge(i, j)) ++mismatches;
    return mismatches;
}

inline double nshd(const CausalGraph& pred, const CausalGraph& truth) {
    const double d = static_cast<double>(pred.dimension());
    return static_cast<double>(shd(pred, truth)) / (d * d);
}

struct PrecisionRecall {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
};

inline PrecisionRecall f1_score(const CausalGraph& pred, const CausalGraph& truth) {
    if (pred.dimension() != truth.dimension())
        throw DimensionMismatch("graphs differ in dimension");
    int tp = 0, fp = 0, fn = 0;
    for (int i = 0; i < pred.dimension(); ++i)
        for (int j = 0; j < pred.dimension(); ++j) {
            const bool p = pred.has_edge(i, j), t = truth.has_edge(i, j);
            tp += p && t;
            fp += p && !t;
            fn += !p && t;
        }
    PrecisionRecall out;
    if (tp + fp + fn == 0) return {1.0, 1.0, 1.0};  // both graphs empty
    out.precision = tp + fp > 0 ? static_cast<double>(tp) / (tp + fp) : 0.0;
    out.recall = tp + fn > 0 ? static_cast<double>(tp) / (tp + fn) : 0.0;
    out.f1 = out.precision + out.recall > 0.0
                 ? 2.0 * out.precision * out.recall / (out.precision + out.recall)
                 : 0.0;
    return out;
}

// Area under the precision-recall step curve over confidence-ranked edges
// (non-interpolated). Only listed edges enter the sweep; true edges that were
// never predicted simply cap the attainable recall.
inline double auprc(std::vector<ScoredEdge> scored, const CausalGraph& truth) {
    int total_true = truth.num_edges();
    if (total_true == 0) throw NoTrueEdges();
    // -inf is the rank-below-everything convention for unlisted edges; NaN
    // and +inf are rejected.
    for (const auto& e : scored)
        if (std::isnan(e.gain) || e.gain == std::numeric_limits<double>::infinity())
            throw ValidationError("edge confidences must be finite or -inf");
    std::stable_sort(scored.begin(), scored.end(), scored_edge_before);
    double area = 0.0;
    int tp = 0;
    for (std::size_t k = 0; k < scored.size(); ++k) {
        if (truth.has_edge(scored[k].edge.from, scored[k].edge.to)) {
            ++tp;
            const double precision = static_cast<double>(tp) / static_cast<double>(k + 1);
            area += precision / static_cast<double>(total_true);
        }
    }
    return area;
}

inline MetricReport evaluate(const CausalGraph& pred, const CausalGraph& truth,
                             const std::vector<ScoredEdge>& gains) {
    MetricReport r;
    r.shd = shd(pred, truth);
    r.nshd = nshd(pred, truth);
    const PrecisionRecall pr = f1_score(pred, truth);
    r.precision = pr.precision;
    r.recall = pr.recall;
    r.f1 = pr.f1;
    if (truth.num_edges() > 0) {
        r.auprc = auprc(gains, truth);
        r.auprc_defined = true;
    }
    return r;
}

}  // namespace cadyt
