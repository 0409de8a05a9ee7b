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
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace cadyt {

struct ValidationError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct NonMonotoneTimeline : ValidationError {
    explicit NonMonotoneTimeline(std::size_t i)
        : ValidationError("timeline is not strictly increasing at index " + std::to_string(i)),
          index(i) {}
    std::size_t index;
};

struct ShapeMismatch : ValidationError {
    ShapeMismatch(std::size_t timeline_len, std::size_t rows)
        : ValidationError("trajectory has " + std::to_string(rows) + " rows but timeline has " +
                          std::to_string(timeline_len) + " timestamps"),
          timeline_length(timeline_len),
          row_count(rows) {}
    std::size_t timeline_length;
    std::size_t row_count;
};

struct NonFiniteValue : ValidationError {
    NonFiniteValue(std::size_t r, std::size_t c)
        : ValidationError("non-finite trajectory value at row " + std::to_string(r) + ", column " +
                          std::to_string(c)),
          row(r),
          col(c) {}
    std::size_t row;
    std::size_t col;
};

struct DimensionMismatch : ValidationError {
    using ValidationError::ValidationError;
};

// Strictly increasing sequence of sample times (abstract units).
class Timeline {
public:
    explicit Timeline(std::vector<double> times) : t_(std::move(times)) {
        for (std::size_t i = 0; i + 1 < t_.size(); ++i)
            if (!(t_[i + 1] > t_[i])) throw NonMonotoneTimeline(i + 1);
        for (std::size_t i = 0; i < t_.size(); ++i)
            if (!std::isfinite(t_[i])) throw NonMonotoneTimeline(i);
    }

    std::size_t size() const { return t_.size(); }
    double operator[](std::size_t i) const { return t_[i]; }
    double front() const { return t_.front(); }
    double back() const { return t_.back(); }
    const std::vector<double>& times() const { return t_; }

private:
    std::vector<double> t_;
};

// N x D observation matrix tied to a timeline. Immutable after construction;
// construction enforces all invariants.
class Trajectory {
public:
    Trajectory(Timeline timeline, std::vector<std::vector<double>> rows,
               std::vector<std::string> names)
        : timeline_(std::move(timeline)), names_(std::move(names)) {
        const std::size_t n = timeline_.size();
        if (rows.size() != n) throw ShapeMismatch(n, rows.size());
        dim_ = names_.size();
        values_.resize(n * dim_);
        for (std::size_t r = 0; r < n; ++r) {
            if (rows[r].size() != dim_) throw ShapeMismatch(dim_, rows[r].size());
            for (std::size_t c = 0; c < dim_; ++c) {
                if (!std::isfinite(rows[r][c])) throw NonFiniteValue(r, c);
                values_[r * dim_ + c] = rows[r][c];
            }
        }
    }

    std::size_t samples() const { return timeline_.size(); }
    std::size_t dimension() const { return dim_; }
    const Timeline& timeline() const { return timeline_; }
    const std::vector<std::string>& names() const { return names_; }

    double at(std::size_t row, std::size_t col) const { return values_[row * dim_ + col]; }
    std::span<const double> row(std::size_t r) const {
        return {values_.data() + r * dim_, dim_};
    }
    std::vector<double> column(std::size_t c) const {
        std::vector<double> out(samples());
        for (std::size_t r = 0; r < out.size(); ++r) out[r] = values_[r * dim_ + c];
        return out;
    }
    const std::vector<double>& raw() const { return values_; }

private:
    Timeline timeline_;
    std::vector<std::string> names_;
    std::size_t dim_ = 0;
    std::vector<double> values_;
};

// Re-checks the trajectory invariants. Construction already enforces them, so
// this exists for callers holding data from elsewhere (e.g. CSV ingestion
// pipelines validating piecewise).
inline void validate_trajectory(const Trajectory& t) {
    for (std::size_t i = 0; i + 1 < t.samples(); ++i)
        if (!(t.timeline()[i + 1] > t.timeline()[i])) throw NonMonotoneTimeline(i + 1);
    for (std::size_t r = 0; r < t.samples(); ++r)
        for (std::size_t c = 0; c < t.dimension(); ++c)
            if (!std::isfinite(t.at(r, c))) throw NonFiniteValue(r, c);
}

struct Edge {
    int from = 0;
    int to = 0;
    friend bool operator==(const Edge&, const Edge&) = default;
    friend auto operator<=>(const Edge&, const Edge&) = default;
};

// Dense directed graph over D components. Cycles and self-loops are legal;
// entry (i, j) means an edge from component i into component j.
class CausalGraph {
public:
    explicit CausalGraph(int dimension) : dim_(dimension), adj_(dimension * dimension, 0) {
        if (dimension <= 0) throw DimensionMismatch("graph dimension must be positive");
    }

    int dimension() const { return dim_; }
    bool has_edge(int i, int j) const { return adj_[idx(i, j)] != 0; }
    void add_edge(int i, int j) { adj_[idx(i, j)] = 1; }
    void remove_edge(int i, int j) { adj_[idx(i, j)] = 0; }

    int num_edges() const {
        int n = 0;
        for (auto v : adj_) n += v;
        return n;
    }

    std::vector<Edge> edges() const {
        std::vector<Edge> out;
        for (int i = 0; i < dim_; ++i)
            for (int j = 0; j < dim_; ++j)
                if (has_edge(i, j)) out.push_back({i, j});
        return out;
    }

    // Parents of j: all i with an edge i -> j, ascending.
    std::vector<int> parents_of(int j) const {
        std::vector<int> out;
        for (int i = 0; i < dim_; ++i)
            if (has_edge(i, j)) out.push_back(i);
        return out;
    }

    bool is_acyclic() const {
        // Kahn's algorithm; self-loops count as cycles.
        std::vector<int> indeg(dim_, 0);
        for (int i = 0; i < dim_; ++i)
            for (int j = 0; j < dim_; ++j)
                if (has_edge(i, j)) ++indeg[j];
        std::vector<int> stack;
        for (int j = 0; j < dim_; ++j)
            if (indeg[j] == 0) stack.push_back(j);
        int seen = 0;
        while (!stack.empty()) {
            const int u = stack.back();
            stack.pop_back();
            ++seen;
            for (int v = 0; v < dim_; ++v)
                if (has_edge(u, v) && --indeg[v] == 0) stack.push_back(v);
        }
        return seen == dim_;
    }

    friend bool operator==(const CausalGraph&, const CausalGraph&) = default;

private:
    std::size_t idx(int i, int j) const {
        if (i < 0 || j < 0 || i >= dim_ || j >= dim_)
            throw DimensionMismatch("edge index out of range");
        return static_cast<std::size_t>(i) * dim_ + j;
    }

    int dim_;
    std::vector<std::uint8_t> adj_;
};

// Itemized bit costs. residual_bits (and hence total/reduced) may be negative:
// the Gaussian residual code length goes below zero once the residual variance
// drops under 1/(2*pi*e).
struct ScoreBreakdown {
    double global_bits = 0.0;
    double structure_bits = 0.0;
    double function_bits = 0.0;
    double param_bits = 0.0;
    double residual_bits = 0.0;
    double total_bits = 0.0;
    double reduced_bits = 0.0;

    double recomposed() const {
        return global_bits + structure_bits + function_bits + param_bits + residual_bits;
    }
};

}  // namespace cadyt
