#include <doctest.h>

#include <cmath>
#include <numbers>
#include <vector>

#include "cadyt/bench.hpp"
#include "cadyt/mdl.hpp"
#include "cadyt/random.hpp"

using namespace cadyt;

namespace {

// Independent oracle for the universal integer code, written as a plain
// recursion instead of the iterative loop.
double ln_universal_oracle(std::uint64_t z) {
    double total = std::log2(kUniversalCodeC0);
    for (double x = std::log2(static_cast<double>(z)); x > 0.0; x = std::log2(x)) total += x;
    return total;
}

// Brute-force parameter-code oracle: enumerate the shift from -20 upward.
double l_params_oracle(const std::vector<double>& theta, int p) {
    double bits = 0.0;
    for (double v : theta) {
        if (v == 0.0) {
            bits += 1.0;
            continue;
        }
        const double mag = std::abs(v);
        int rho = -20;
        while (mag * std::pow(10.0, rho) < std::pow(10.0, p)) ++rho;
        const auto shifted = static_cast<std::uint64_t>(std::ceil(mag * std::pow(10.0, rho)));
        bits += 2.0;
        bits += rho == 0 ? 1.0 : ln_universal_oracle(static_cast<std::uint64_t>(std::abs(rho)));
        bits += ln_universal_oracle(shifted);
    }
    return bits;
}

Trajectory tiny_trajectory(int d, std::size_t n, std::uint64_t seed, double dt = 0.1) {
    Rng rng(seed);
    std::vector<double> t;
    for (std::size_t i = 0; i < n; ++i) t.push_back(dt * static_cast<double>(i));
    std::vector<std::vector<double>> rows(n, std::vector<double>(d));
    std::vector<double> phase(d), freq(d);
    for (int c = 0; c < d; ++c) {
        phase[c] = rng.uniform(0.0, 6.28);
        freq[c] = rng.uniform(0.5, 2.0);
    }
    for (std::size_t r = 0; r < n; ++r)
        for (int c = 0; c < d; ++c)
            rows[r][c] = std::sin(freq[c] * t[r] + phase[c]) + 0.01 * rng.normal();
    std::vector<std::string> names;
    for (int c = 0; c < d; ++c) names.push_back("X" + std::to_string(c));
    return Trajectory(Timeline(std::move(t)), std::move(rows), std::move(names));
}

ScoreConfig fast_config(std::uint64_t seed) {
    ScoreConfig cfg;
    cfg.seed = seed;
    return cfg;
}

}  // namespace

TEST_CASE("universal integer code") {
    CHECK(ln_universal(1) == doctest::Approx(std::log2(kUniversalCodeC0)).epsilon(1e-12));
    CHECK(ln_universal(1) == doctest::Approx(1.5186).epsilon(1e-4));
    CHECK(ln_universal(2) == doctest::Approx(1.0 + std::log2(kUniversalCodeC0)).epsilon(1e-12));
    CHECK(ln_universal(2) == doctest::Approx(2.5186).epsilon(1e-4));
    CHECK_THROWS_AS(ln_universal(0), NonPositiveInteger);

    double prev = 0.0;
    for (std::uint64_t z = 1; z <= 10000; ++z) {
        const double bits = ln_universal(z);
        CHECK(bits == doctest::Approx(ln_universal_oracle(z)).epsilon(1e-12));
        CHECK(bits >= prev);
        prev = bits;
    }
}

TEST_CASE("global cost") {
    Precisions prec;
    CHECK(l_global(100, 4, 1, prec) ==
          doctest::Approx(std::log2(100.0) + 128.0).epsilon(1e-12));
    CHECK(l_global(100, 4, 1, prec) == doctest::Approx(134.644).epsilon(1e-4));
    // The stored-samples term is linear in s.
    const double base = l_global(50, 3, 1, prec) - std::log2(50.0);
    CHECK(l_global(50, 3, 2, prec) - std::log2(50.0) ==
          doctest::Approx(2.0 * base).epsilon(1e-12));
    CHECK(l_global(1, 5, 2, prec) == doctest::Approx(32.0 * 5 * 2).epsilon(1e-12));
}

TEST_CASE("structure cost") {
    CHECK(l_structure(2, 4) == doctest::Approx(ln_universal(2) + 4.0).epsilon(1e-12));
    CHECK(l_structure(2, 4) == doctest::Approx(6.5186).epsilon(1e-3));
    CHECK(l_structure(0, 4) == 1.0);
    CHECK(l_structure(1, 1) == doctest::Approx(ln_universal(1)).epsilon(1e-12));
    // Appendix-D style example with D = 3.
    CHECK(l_structure(2, 3) ==
          doctest::Approx(ln_universal(2) + 2.0 * std::log2(3.0)).epsilon(1e-12));
}

TEST_CASE("parameter code") {
    Precisions prec;
    std::vector<double> theta{0.5};
    // rho = 3: 0.5*10^3 = 500 >= 100 while 0.5*10^2 = 50 < 100.
    CHECK(l_params(theta, prec) ==
          doctest::Approx(2.0 + ln_universal(3) + ln_universal(500)).epsilon(1e-12));
    std::vector<double> zero{0.0};
    CHECK(l_params(zero, prec) == 1.0);
    std::vector<double> nan{std::nan("")};
    CHECK_THROWS_AS(l_params(nan, prec), NonFiniteParameter);
}

TEST_CASE("parameter code matches the brute-force oracle") {
    Precisions prec;
    Rng rng(77);
    for (int trial = 0; trial < 1000; ++trial) {
        std::vector<double> theta;
        const int len = 1 + static_cast<int>(rng.below(6));
        for (int i = 0; i < len; ++i) {
            const double u = rng.uniform();
            if (u < 0.1) {
                theta.push_back(0.0);
            } else {
                double mag = rng.log_uniform(1e-6, 1e6);
                theta.push_back(rng.uniform() < 0.5 ? -mag : mag);
            }
        }
        CHECK(l_params(theta, prec) ==
              doctest::Approx(l_params_oracle(theta, prec.p)).epsilon(1e-12));
    }
}

TEST_CASE("scaling a parameter by 10 shifts rho by exactly one") {
    Precisions prec;
    for (double base : {1.37, 2.9, 5.55, 9.1}) {
        for (int e = -3; e <= 2; ++e) {
            const double v = base * std::pow(10.0, e);
            const int rho_v = detail::smallest_shift(v, prec.p);
            const int rho_10v = detail::smallest_shift(10.0 * v, prec.p);
            CHECK(rho_10v == rho_v - 1);
        }
    }
}

TEST_CASE("rotation term") {
    Precisions prec;
    CHECK(rotation_term(1, prec) == 0.0);
    CHECK(rotation_term(10, prec) == doctest::Approx(1440.0).epsilon(1e-12));
    // Depends only on the Gram size: two different models on the same
    // trajectory share it.
    CHECK(rotation_term(57, prec) == rotation_term(57, prec));
}

TEST_CASE("residual code") {
    CHECK(l_residual(1.0, 2) ==
          doctest::Approx(1.0 / std::numbers::ln2 + std::log2(2.0 * std::numbers::pi))
              .epsilon(1e-12));
    CHECK(l_residual(1.0, 2) == doctest::Approx(4.0942).epsilon(1e-4));
    const double sigma_zero = 1.0 / (2.0 * std::numbers::pi * std::numbers::e);
    CHECK(std::abs(l_residual(sigma_zero, 17)) < 1e-9);
    // Halving the variance saves N_eff/2 bits.
    CHECK(l_residual(0.4, 10) - l_residual(0.2, 10) == doctest::Approx(5.0).epsilon(1e-12));
}

TEST_CASE("constant column with empty parents hits the variance floor") {
    std::vector<double> t{0.0, 0.1, 0.2, 0.3, 0.4, 0.5};
    std::vector<std::vector<double>> rows(6, std::vector<double>{2.5, 1.0});
    for (std::size_t r = 0; r < 6; ++r) rows[r][1] = std::sin(0.3 * static_cast<double>(r));
    Trajectory traj(Timeline(t), rows, {"c", "x"});
    ScoreConfig cfg = fast_config(1);
    cfg.order = 2;
    LocalModel local = score_local(traj, 0, {}, cfg);
    CHECK(local.is_mean_fallback());
    CHECK(local.sigma_sq == cfg.sigma_floor);
    CHECK(local.breakdown.residual_bits ==
          doctest::Approx(l_residual(cfg.sigma_floor, 6)).epsilon(1e-12));
    CHECK(local.breakdown.structure_bits == 1.0);
    CHECK(local.fallback_mean == doctest::Approx(2.5).epsilon(1e-12));
}

TEST_CASE("structure bits for two parents of three") {
    Trajectory traj = tiny_trajectory(3, 40, 4);
    ScoreConfig cfg = fast_config(2);
    LocalModel local = score_local(traj, 0, {1, 2}, cfg);
    CHECK(local.breakdown.structure_bits ==
          doctest::Approx(ln_universal(2) + 2.0 * std::log2(3.0)).epsilon(1e-12));
    CHECK(local.breakdown.total_bits ==
          doctest::Approx(local.breakdown.recomposed()).epsilon(1e-12));
    // The standalone function cost equals the breakdown's function + param
    // parts for a fitted model.
    REQUIRE(local.gp != nullptr);
    CHECK(l_function(*local.gp, cfg.precisions) ==
          doctest::Approx(local.breakdown.function_bits + local.breakdown.param_bits)
              .epsilon(1e-12));
}

TEST_CASE("breakdowns recompose everywhere score_total runs") {
    Trajectory traj = tiny_trajectory(3, 36, 9);
    ScoreConfig cfg = fast_config(3);
    CausalGraph g(3);
    g.add_edge(0, 1);
    g.add_edge(2, 1);
    auto [total, locals] = score_total(traj, g, cfg);
    CHECK(total.total_bits == doctest::Approx(total.recomposed()).epsilon(1e-9));
    for (const auto& local : locals)
        CHECK(local.breakdown.total_bits ==
              doctest::Approx(local.breakdown.recomposed()).epsilon(1e-9));
    // Decomposition: the graph total is the global cost plus the local sums.
    double acc = total.global_bits;
    for (const auto& local : locals) acc += local.breakdown.total_bits;
    CHECK(total.total_bits == doctest::Approx(acc).epsilon(1e-9));
}

TEST_CASE("empty graph scores as global plus mean fallbacks") {
    Trajectory traj = tiny_trajectory(2, 30, 5);
    ScoreConfig cfg = fast_config(4);
    auto [total, locals] = score_total(traj, CausalGraph(2), cfg);
    REQUIRE(locals.size() == 2);
    CHECK(locals[0].is_mean_fallback());
    CHECK(locals[1].is_mean_fallback());
    CHECK(total.global_bits ==
          doctest::Approx(l_global(30, 2, cfg.order, cfg.precisions)).epsilon(1e-12));
    CHECK(total.structure_bits == doctest::Approx(2.0).epsilon(1e-12));
}

TEST_CASE("adding an edge changes only the child's local term") {
    Trajectory traj = tiny_trajectory(3, 36, 6);
    ScoreConfig cfg = fast_config(5);
    CausalGraph g1(3);
    CausalGraph g2(3);
    g2.add_edge(0, 2);
    auto [t1, l1] = score_total(traj, g1, cfg);
    auto [t2, l2] = score_total(traj, g2, cfg);
    CHECK(l1[0].breakdown.total_bits == l2[0].breakdown.total_bits);
    CHECK(l1[1].breakdown.total_bits == l2[1].breakdown.total_bits);
    CHECK(l1[2].breakdown.total_bits != l2[2].breakdown.total_bits);
}

TEST_CASE("reduced and raw scores rank graphs identically") {
    Trajectory traj = tiny_trajectory(3, 36, 12);
    ScoreConfig cfg = fast_config(6);
    Rng rng(41);
    std::vector<CausalGraph> graphs;
    for (int k = 0; k < 6; ++k) {
        CausalGraph g(3);
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j)
                if (rng.uniform() < 0.3) g.add_edge(i, j);
        graphs.push_back(g);
    }
    std::vector<ScoreBreakdown> scores;
    for (const auto& g : graphs) scores.push_back(score_total(traj, g, cfg).first);
    for (std::size_t a = 0; a < scores.size(); ++a)
        for (std::size_t b = a + 1; b < scores.size(); ++b) {
            const double d_total = scores[a].total_bits - scores[b].total_bits;
            const double d_reduced = scores[a].reduced_bits - scores[b].reduced_bits;
            CHECK(std::abs(d_total - d_reduced) < 1e-6);
        }
}

TEST_CASE("re-scoring the same parent set reproduces the identical model") {
    Trajectory traj = tiny_trajectory(2, 30, 15);
    ScoreConfig cfg = fast_config(7);
    LocalModel a = score_local(traj, 1, {0}, cfg);
    LocalModel b = score_local(traj, 1, {0}, cfg);
    CHECK(a.breakdown.total_bits == b.breakdown.total_bits);  // bitwise determinism
    CHECK(a.sigma_sq == b.sigma_sq);
}

TEST_CASE("the true parent out-compresses a noise parent") {
    // Paired experiment: y' = x with smooth exogenous x vs. a pure-noise
    // impostor column. The true parent must win in at least 18 of 20 seeds.
    int wins = 0;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        Rng rng(seed_combine(seed, 0xBEEF));
        const std::size_t n = 70;
        std::vector<double> t, x, noise_col, y;
        for (std::size_t i = 0; i < n; ++i) {
            t.push_back(0.1 * static_cast<double>(i));
            x.push_back(std::cos(t.back()));
            y.push_back(2.0 * std::sin(t.back()) + 0.002 * rng.normal());
            noise_col.push_back(rng.normal());
        }
        Trajectory traj(Timeline(t), [&] {
            std::vector<std::vector<double>> rows(n, std::vector<double>(3));
            for (std::size_t i = 0; i < n; ++i) rows[i] = {x[i], noise_col[i], y[i]};
            return rows;
        }(), {"x", "noise", "y"});
        ScoreConfig cfg = fast_config(seed);
        const double true_bits = score_local(traj, 2, {0}, cfg).breakdown.total_bits;
        const double noise_bits = score_local(traj, 2, {1}, cfg).breakdown.total_bits;
        if (true_bits < noise_bits) ++wins;
    }
    CHECK(wins >= 18);
}

TEST_CASE("gain is zero for an identical refit and positive for the true edge") {
    Trajectory traj = [&] {
        const std::size_t n = 80;
        std::vector<double> t;
        std::vector<std::vector<double>> rows;
        for (std::size_t i = 0; i < n; ++i) {
            t.push_back(0.1 * static_cast<double>(i));
            rows.push_back({std::cos(t.back()), 1.7 * std::sin(t.back())});
        }
        return Trajectory(Timeline(std::move(t)), std::move(rows), {"x", "y"});
    }();
    ScoreConfig cfg = fast_config(8);

    LocalModel current = score_local(traj, 1, {0}, cfg);
    LocalModel refit = score_local(traj, 1, {0}, cfg);
    CHECK(current.breakdown.total_bits - refit.breakdown.total_bits == 0.0);

    LocalModel empty = score_local(traj, 1, {}, cfg);
    CHECK(gain(traj, empty, 0, cfg) > 0.0);
}

TEST_CASE("gain is invariant to r_d and the rotation constant") {
    Trajectory traj = tiny_trajectory(2, 40, 18);
    ScoreConfig cfg = fast_config(9);
    LocalModel empty = score_local(traj, 1, {}, cfg);
    const double g_default = gain(traj, empty, 0, cfg);

    ScoreConfig cfg_rd = cfg;
    cfg_rd.precisions.r_d = 64.0;
    LocalModel empty_rd = score_local(traj, 1, {}, cfg_rd);
    CHECK(gain(traj, empty_rd, 0, cfg_rd) == doctest::Approx(g_default).epsilon(1e-9));

    ScoreConfig cfg_rot = cfg;
    cfg_rot.precisions.rotation_bits = 16.0;
    LocalModel empty_rot = score_local(traj, 1, {}, cfg_rot);
    CHECK(gain(traj, empty_rot, 0, cfg_rot) == doctest::Approx(g_default).epsilon(1e-6));
}

TEST_CASE("precision changes never flip score-difference signs") {
    Trajectory traj = tiny_trajectory(3, 36, 25);
    ScoreConfig base = fast_config(10);
    ScoreConfig wide_rd = base;
    wide_rd.precisions.r_d = 64.0;
    ScoreConfig narrow_rot = base;
    narrow_rot.precisions.rotation_bits = 16.0;
    Rng rng(55);
    for (int pair = 0; pair < 10; ++pair) {
        CausalGraph g1(3), g2(3);
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) {
                if (rng.uniform() < 0.3) g1.add_edge(i, j);
                if (rng.uniform() < 0.3) g2.add_edge(i, j);
            }
        const double d_base = score_total(traj, g1, base).first.total_bits -
                              score_total(traj, g2, base).first.total_bits;
        const double d_rd = score_total(traj, g1, wide_rd).first.total_bits -
                            score_total(traj, g2, wide_rd).first.total_bits;
        const double d_rot = score_total(traj, g1, narrow_rot).first.total_bits -
                             score_total(traj, g2, narrow_rot).first.total_bits;
        if (d_base != 0.0) {
            CHECK(d_base * d_rd > 0.0);
            CHECK(d_base * d_rot > 0.0);
        }
    }
}
