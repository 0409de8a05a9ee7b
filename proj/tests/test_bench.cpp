#include <doctest.h>

#include <cmath>
#include <cstring>
#include <vector>

#include "cadyt/bench.hpp"

using namespace cadyt;

TEST_CASE("regular timeline keeps its endpoint") {
    Timeline tl = make_timeline(0.0, 0.3, 0.1, 0.0, 1);
    REQUIRE(tl.size() == 4);
    CHECK(tl[0] == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(tl[1] == doctest::Approx(0.1).epsilon(1e-9));
    CHECK(tl[2] == doctest::Approx(0.2).epsilon(1e-9));
    CHECK(tl[3] == doctest::Approx(0.3).epsilon(1e-9));
}

TEST_CASE("irregular steps stay inside the jitter band") {
    Timeline tl = make_timeline(0.0, 50.0, 1.0, 0.2, 42);
    for (std::size_t i = 0; i + 1 < tl.size(); ++i) {
        const double step = tl[i + 1] - tl[i];
        CHECK(step >= 0.9);
        CHECK(step <= 1.1);
    }
}

TEST_CASE("timelines are deterministic in the seed") {
    Timeline a = make_timeline(0.0, 10.0, 0.1, 0.5, 7);
    Timeline b = make_timeline(0.0, 10.0, 0.1, 0.5, 7);
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i] == b[i]);
    Timeline c = make_timeline(0.0, 10.0, 0.1, 0.5, 8);
    bool same = a.size() == c.size();
    if (same)
        for (std::size_t i = 0; i < a.size(); ++i) same = same && a[i] == c[i];
    CHECK(!same);
}

TEST_CASE("invalid intervals are rejected") {
    CHECK_THROWS_AS(make_timeline(1.0, 1.0, 0.1, 0.0, 1), InvalidInterval);
    CHECK_THROWS_AS(make_timeline(0.0, 1.0, -0.1, 0.0, 1), InvalidInterval);
}

TEST_CASE("diamond right-hand side matches its equations") {
    SystemSpec spec = make_system(SystemKind::Diamond, 4, 1);
    std::vector<double> x{0.0, 1.0, 2.0, 5.0}, dx(4);
    spec.rhs(0.0, x, dx);
    CHECK(dx[3] == doctest::Approx(3.0).epsilon(1e-12));   // dD/dt = B + C
    CHECK(dx[0] == doctest::Approx(0.0).epsilon(1e-12));   // sin(0)/2
    CHECK(dx[1] == doctest::Approx(0.0).epsilon(1e-12));   // sin(A)/2 at A=0
    CHECK(dx[2] == doctest::Approx(-2.0).epsilon(1e-12));  // -2 cos(0)
    CHECK(spec.ground_truth.num_edges() == 4);
}

TEST_CASE("double-mass right-hand side and truth") {
    SystemSpec spec = make_system(SystemKind::DoubleMass, 4, 1);
    std::vector<double> x{1.0, 0.0, 3.0, 4.0}, dx(4);
    spec.rhs(0.0, x, dx);
    CHECK(dx[2] == doctest::Approx(-2.0).epsilon(1e-12));  // dy1/dt = -2 v1 + v2
    CHECK(dx[3] == doctest::Approx(1.0).epsilon(1e-12));   // dy2/dt = v1 - v2
    CHECK(dx[0] == doctest::Approx(3.0).epsilon(1e-12));   // dv1/dt = y1
    CHECK(spec.ground_truth.num_edges() == 6);
}

TEST_CASE("rossler right-hand side, wrap-around, and derived edge count") {
    SystemSpec spec = make_system(SystemKind::Rossler, 10, 1);
    std::vector<double> x(10, 0.0), dx(10);
    x[1] = 3.0;
    spec.rhs(0.0, x, dx);
    CHECK(dx[0] == doctest::Approx(-3.0).epsilon(1e-12));  // a = 0: dx1/dt = -x2

    // Middle components wrap modulo D: node 8 (0-based) reads x7 and x0.
    CHECK(spec.ground_truth.has_edge(7, 8));
    CHECK(spec.ground_truth.has_edge(0, 8));
    // Last component depends on its neighbour and itself.
    CHECK(spec.ground_truth.has_edge(8, 9));
    CHECK(spec.ground_truth.has_edge(9, 9));
    // 1 + 2*(D-2) + 2 directed edges from the local dependencies.
    CHECK(spec.ground_truth.num_edges() == 19);

    CHECK_THROWS_AS(make_system(SystemKind::Rossler, 7, 1), DimensionMismatch);
    CHECK_THROWS_AS(make_system(SystemKind::Diamond, 5, 1), DimensionMismatch);
}

TEST_CASE("empty family truth has no edges and ER defaults to p = 2/D") {
    CHECK(make_system(SystemKind::Empty, 4, 3).ground_truth.num_edges() == 0);
    SystemSpec er = make_system(SystemKind::ErdosRenyi, 8, 3);
    CHECK(er.parameters.at("p") == doctest::Approx(0.25).epsilon(1e-12));
}

TEST_CASE("ER truths are acyclic, cyclic variant has a cycle") {
    for (std::uint64_t seed = 0; seed < 12; ++seed) {
        CHECK(make_system(SystemKind::ErdosRenyi, 6, seed).ground_truth.is_acyclic());
        SystemSpec cyc = make_system(SystemKind::ErdosRenyiCyclic, 6, seed);
        CHECK(!cyc.ground_truth.is_acyclic());
    }
}

TEST_CASE("noiseless empty columns follow the exponential solution") {
    SystemSpec spec = make_system(SystemKind::Empty, 4, 11);
    Timeline tl = make_timeline(0.0, 5.0, 0.05, 0.0, 2);
    auto [traj, truth] = simulate(spec, tl, NoiseSpec(0.0), 11);
    for (int c = 0; c < 4; ++c) {
        const double a = spec.parameters.at("a" + std::to_string(c));
        const double x0 = traj.at(0, static_cast<std::size_t>(c));
        for (std::size_t r = 0; r < traj.samples(); ++r) {
            const double expected = x0 + (std::exp(a * tl[r]) - 1.0) / a;
            CHECK(traj.at(r, static_cast<std::size_t>(c)) ==
                  doctest::Approx(expected).epsilon(1e-6));
        }
    }
}

TEST_CASE("noiseless diamond trajectory re-differentiates to its RHS") {
    SystemSpec spec = make_system(SystemKind::Diamond, 4, 5);
    Timeline tl = make_timeline(0.0, 10.0, 0.05, 0.0, 3);
    auto [traj, truth] = simulate(spec, tl, NoiseSpec(0.0), 5);
    std::vector<double> dx(4);
    for (std::size_t r = 1; r + 1 < traj.samples(); ++r) {
        std::vector<double> x(traj.row(r).begin(), traj.row(r).end());
        spec.rhs(tl[r], x, dx);
        for (int c = 0; c < 4; ++c) {
            const double central = (traj.at(r + 1, c) - traj.at(r - 1, c)) / (tl[r + 1] - tl[r - 1]);
            // Central differences are O(dt^2) accurate on the regular grid.
            CHECK(std::abs(central - dx[c]) < 2e-2 * (1.0 + std::abs(dx[c])));
        }
    }
}

TEST_CASE("observation noise has the configured variance") {
    SystemSpec spec = make_system(SystemKind::DoubleMass, 4, 9);
    Timeline tl = make_timeline(0.0, 260.0, 0.1, 0.0, 4);
    auto noisy = simulate(spec, tl, NoiseSpec(0.005), 9).first;
    auto clean = simulate(spec, tl, NoiseSpec(0.0), 9).first;
    REQUIRE(noisy.samples() * noisy.dimension() >= 10000);
    double acc = 0.0;
    std::size_t count = 0;
    for (std::size_t r = 0; r < noisy.samples(); ++r)
        for (std::size_t c = 0; c < 4; ++c) {
            const double d = noisy.at(r, c) - clean.at(r, c);
            acc += d * d;
            ++count;
        }
    const double sample_var = acc / static_cast<double>(count);
    CHECK(sample_var > 2.5e-5 * 0.8);
    CHECK(sample_var < 2.5e-5 * 1.2);
}

TEST_CASE("simulation is bit-for-bit deterministic") {
    SystemSpec spec = make_system(SystemKind::Diamond, 4, 21);
    Timeline tl = make_timeline(0.0, 3.0, 0.1, 0.3, 5);
    auto a = simulate(spec, tl, NoiseSpec(0.01), 21).first;
    auto b = simulate(spec, tl, NoiseSpec(0.01), 21).first;
    CHECK(std::memcmp(a.raw().data(), b.raw().data(), a.raw().size() * sizeof(double)) == 0);
}

TEST_CASE("benchmark generation rejects exploding draws") {
    // Exponents up to 2.5 overflow the 1e6 guard over T = 40; generation must
    // still return a bounded trajectory.
    Timeline tl = make_timeline(0.0, 40.0, 0.5, 0.0, 6);
    for (std::uint64_t seed = 1; seed <= 3; ++seed) {
        auto [traj, truth] = generate_benchmark(SystemKind::Empty, 4, tl, NoiseSpec(0.05), seed);
        double max_abs = 0.0;
        for (double v : traj.raw()) max_abs = std::max(max_abs, std::abs(v));
        CHECK(max_abs <= 1e6 * 1.01);
    }
}
