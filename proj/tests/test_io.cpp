#include <doctest.h>

#include <cstdio>
#include <fstream>
#include <limits>
#include <string>

#include "cadyt/bench.hpp"
#include "cadyt/io.hpp"

using namespace cadyt;

namespace {

struct TempFile {
    std::string path;
    explicit TempFile(const std::string& name) : path("/tmp/cadyt_test_" + name) {}
    ~TempFile() { std::remove(path.c_str()); }
};

}  // namespace

TEST_CASE("trajectory CSV round-trips bit-identically") {
    Timeline tl = make_timeline(0.0, 3.0, 0.1, 0.4, 11);
    auto [traj, truth] = generate_benchmark(SystemKind::Diamond, 4, tl, NoiseSpec(0.01), 11);
    TempFile f("roundtrip.csv");
    write_trajectory_csv(traj, f.path);
    Trajectory back = read_trajectory_csv(f.path);
    REQUIRE(back.samples() == traj.samples());
    REQUIRE(back.dimension() == traj.dimension());
    CHECK(back.names() == traj.names());
    for (std::size_t r = 0; r < traj.samples(); ++r) {
        CHECK(back.timeline()[r] == traj.timeline()[r]);
        for (std::size_t c = 0; c < traj.dimension(); ++c)
            CHECK(back.at(r, c) == traj.at(r, c));
    }
}

TEST_CASE("well-formed three-row file ingests as N=3") {
    TempFile f("ok.csv");
    std::ofstream(f.path) << "t,a,b\n0,1,2\n0.5,3,4\n1.0,5,6\n";
    Trajectory traj = read_trajectory_csv(f.path);
    CHECK(traj.samples() == 3);
    CHECK(traj.dimension() == 2);
    CHECK(traj.at(2, 1) == 6.0);
}

TEST_CASE("non-numeric cells report their line") {
    TempFile f("bad.csv");
    std::ofstream(f.path) << "t,a\n0,1\n0.5,oops\n";
    try {
        read_trajectory_csv(f.path);
        FAIL("expected ParseError");
    } catch (const ParseError& e) {
        CHECK(e.line == 3);
    }
}

TEST_CASE("duplicate timestamps surface as timeline errors") {
    TempFile f("dup.csv");
    std::ofstream(f.path) << "t,a\n0,1\n0,2\n0.5,3\n";
    CHECK_THROWS_AS(read_trajectory_csv(f.path), NonMonotoneTimeline);
}

TEST_CASE("field-count mismatches are parse errors") {
    TempFile f("short.csv");
    std::ofstream(f.path) << "t,a,b\n0,1\n";
    CHECK_THROWS_AS(read_trajectory_csv(f.path), ParseError);
}

TEST_CASE("graph JSON round-trips") {
    CausalGraph g(5);
    g.add_edge(0, 1);
    g.add_edge(4, 4);
    g.add_edge(3, 0);
    TempFile f("graph.json");
    write_graph_json(g, f.path);
    CausalGraph back = read_graph_json(f.path);
    CHECK(back == g);
}

TEST_CASE("gains CSV round-trips, including failed-pair sentinels") {
    std::vector<ScoredEdge> gains{{12.5, {0, 1}},
                                  {-3.25, {2, 0}},
                                  {-std::numeric_limits<double>::infinity(), {1, 2}}};
    TempFile f("gains.csv");
    write_gains_csv(gains, f.path);
    auto back = read_gains_csv(f.path);
    REQUIRE(back.size() == 3);
    CHECK(back[0].edge == Edge{0, 1});
    CHECK(back[0].gain == 12.5);
    CHECK(back[1].edge == Edge{2, 0});
    CHECK(back[1].gain == -3.25);
    CHECK(back[2].gain == -std::numeric_limits<double>::infinity());
}
