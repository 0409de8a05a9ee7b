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

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "cadyt/search.hpp"
#include "cadyt/types.hpp"

namespace cadyt {

struct ParseError : std::runtime_error {
    ParseError(const std::string& what, std::size_t line_number)
        : std::runtime_error(what + " (line " + std::to_string(line_number) + ")"),
          line(line_number) {}
    std::size_t line;
};

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string field;
    std::stringstream ss(line);
    while (std::getline(ss, field, ',')) fields.push_back(field);
    if (!line.empty() && line.back() == ',') fields.emplace_back();
    return fields;
}

inline double parse_double(const std::string& s, std::size_t line_number) {
    const char* begin = s.data();
    const char* end = s.data() + s.size();
    while (begin != end && (*begin == ' ' || *begin == '\t')) ++begin;
    while (end != begin && (*(end - 1) == ' ' || *(end - 1) == '\t' || *(end - 1) == '\r'))
        --end;
    double value = 0.0;
    const auto [ptr, ec] = std::from_chars(begin, end, value);
    if (ec != std::errc() || ptr != end)
        throw ParseError("not a number: '" + s + "'", line_number);
    return value;
}

// 17 significant digits: enough for doubles to round-trip exactly.
inline std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

}  // namespace detail

// Trajectory CSV: header `t,<name_1>,...,<name_D>`, one row per sample,
// decimal points, no thousands separators.
inline void write_trajectory_csv(const Trajectory& traj, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open for writing: " + path);
    out << "t";
    for (const auto& name : traj.names()) out << ',' << name;
    out << '\n';
    for (std::size_t r = 0; r < traj.samples(); ++r) {
        out << detail::format_double(traj.timeline()[r]);
        for (std::size_t c = 0; c < traj.dimension(); ++c)
            out << ',' << detail::format_double(traj.at(r, c));
        out << '\n';
    }
}

inline Trajectory read_trajectory_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open for reading: " + path);
    std::string line;
    std::size_t line_number = 1;
    if (!std::getline(in, line)) throw ParseError("empty file", line_number);
    auto header = detail::split_csv_line(line);
    if (header.size() < 2 || header[0] != "t")
        throw ParseError("expected header 't,<name_1>,...'", line_number);
    std::vector<std::string> names(header.begin() + 1, header.end());
    if (!names.empty() && !names.back().empty() && names.back().back() == '\r')
        names.back().pop_back();

    std::vector<double> times;
    std::vector<std::vector<double>> rows;
    while (std::getline(in, line)) {
        ++line_number;
        if (line.empty() || line == "\r") continue;
        const auto fields = detail::split_csv_line(line);
        if (fields.size() != names.size() + 1)
            throw ParseError("expected " + std::to_string(names.size() + 1) + " fields, got " +
                                 std::to_string(fields.size()),
                             line_number);
        times.push_back(detail::parse_double(fields[0], line_number));
        std::vector<double> row(names.size());
        for (std::size_t c = 0; c < names.size(); ++c)
            row[c] = detail::parse_double(fields[c + 1], line_number);
        rows.push_back(std::move(row));
    }
    return Trajectory(Timeline(std::move(times)), std::move(rows), std::move(names));
}

// Graph JSON: {"dimension": D, "edges": [[i, j], ...]} with 0-based indices.
inline void write_graph_json(const CausalGraph& graph, const std::string& path) {
    nlohmann::json j;
    j["dimension"] = graph.dimension();
    j["edges"] = nlohmann::json::array();
    for (const auto& e : graph.edges()) j["edges"].push_back({e.from, e.to});
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open for writing: " + path);
    out << j.dump(2) << '\n';
}

inline CausalGraph read_graph_json(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open for reading: " + path);
    nlohmann::json j;
    in >> j;
    CausalGraph g(j.at("dimension").get<int>());
    for (const auto& e : j.at("edges")) g.add_edge(e.at(0).get<int>(), e.at(1).get<int>());
    return g;
}

// Gains CSV: `from,to,gain_bits`, one row per scored edge.
inline void write_gains_csv(const std::vector<ScoredEdge>& gains, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open for writing: " + path);
    out << "from,to,gain_bits\n";
    for (const auto& g : gains)
        out << g.edge.from << ',' << g.edge.to << ',' << detail::format_double(g.gain) << '\n';
}

inline std::vector<ScoredEdge> read_gains_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open for reading: " + path);
    std::string line;
    std::size_t line_number = 1;
    if (!std::getline(in, line)) throw ParseError("empty file", line_number);
    std::vector<ScoredEdge> out;
    while (std::getline(in, line)) {
        ++line_number;
        if (line.empty() || line == "\r") continue;
        const auto fields = detail::split_csv_line(line);
        if (fields.size() != 3) throw ParseError("expected 3 fields", line_number);
        ScoredEdge e;
        e.edge.from = static_cast<int>(detail::parse_double(fields[0], line_number));
        e.edge.to = static_cast<int>(detail::parse_double(fields[1], line_number));
        e.gain = detail::parse_double(fields[2], line_number);
        out.push_back(e);
    }
    return out;
}

}  // namespace cadyt
