#include <algorithm>
#include <cmath>
#include <filesystem>
#include <numbers>

#include <gtest/gtest.h>

#include "sdnse/nse.hpp"
#include "sdnse/sdspace.hpp"

using namespace sdnse;
using namespace sdnse::nse;
using std::numbers::pi;

namespace {

constexpr double kL = 2 * pi;

SolverConfig base_config() {
    SolverConfig c;
    c.nu = 0.1;
    c.N = 16;
    c.dt = 0.01;
    c.T = 0.1;
    return c;
}

// Closed-form P[(u . grad) u] for the unit Taylor-Green field on [-pi, pi)^3.
SpectralField taylor_green_convection(int N) {
    return SpectralField::from_physical(N, kL, [](double x, double y, double z) {
        return std::array<double, 3>{std::sin(2 * x) * std::cos(2 * z) / 8, std::sin(2 * y) * std::cos(2 * z) / 8,
                                     -std::sin(2 * z) * (std::cos(2 * x) + std::cos(2 * y)) / 8};
    });
}

}  // namespace

TEST(Spectral, ParsevalAndRoundTrip) {
    const auto u = taylor_green(16, kL, 1.0);
    // ||TG||^2 = (2 pi)^3 / 4 for unit amplitude.
    EXPECT_NEAR(u.l2_norm() * u.l2_norm(), std::pow(kL, 3) / 4, 1e-10);
    EXPECT_NEAR(u.grad_l2_norm() * u.grad_l2_norm(), 3 * std::pow(kL, 3) / 4, 1e-10);
    const auto back = SpectralField::from_samples(16, kL, u.to_physical());
    EXPECT_LE((back - u).l2_norm(), 1e-14);
    const auto f = sample_closure(u);
    EXPECT_EQ(f.grid().n[0], 17);
    EXPECT_LE((from_closure(f) - u).l2_norm(), 1e-14);
    EXPECT_NEAR(inner_l2(u, u), u.l2_norm() * u.l2_norm(), 1e-10);
}

TEST(Leray, GradientVanishesAndProjectionIsIdempotent) {
    const auto grad = SpectralField::from_physical(16, kL, [](double x, double y, double z) {
        // grad of sin(x) cos(2y) sin(z)
        return std::array<double, 3>{std::cos(x) * std::cos(2 * y) * std::sin(z), -2 * std::sin(x) * std::sin(2 * y) * std::sin(z),
                                     std::sin(x) * std::cos(2 * y) * std::cos(z)};
    });
    EXPECT_LE(leray_project(grad).l2_norm(), 1e-14 * grad.l2_norm());
    const auto u = random_field(16, kL, 4, 1.0, 3);
    EXPECT_LE((leray_project(u) - u).l2_norm(), 1e-14);
    auto mixed = u;
    mixed += grad;
    const auto p1 = leray_project(mixed);
    EXPECT_LE((leray_project(p1) - p1).l2_norm(), 1e-14);
    EXPECT_LE((p1 - u).l2_norm(), 1e-13);
    EXPECT_LE(p1.divergence_ratio(), 1e-14);
}

TEST(Semigroup, IdentitySingleModeAndMonotoneNorm) {
    const auto u = shear_mode(16, kL, 1.0, 2);
    EXPECT_EQ((stokes_semigroup(u, 0.0, 0.1) - u).l2_norm(), 0.0);
    const auto s = stokes_semigroup(u, 0.7, 0.1);
    EXPECT_NEAR(s.l2_norm(), u.l2_norm() * std::exp(-0.1 * 4 * 0.7), 1e-14);
    const auto r = random_field(16, kL, 9, 1.0, 4);
    double prev = r.l2_norm();
    for (double t : {0.1, 0.5, 1.0, 5.0, 500.0}) {
        const double n = stokes_semigroup(r, t, 0.1).l2_norm();
        EXPECT_LE(n, prev);
        prev = n;
    }
    EXPECT_LT(prev, 1e-10);
    EXPECT_THROW(stokes_semigroup(r, -1.0, 0.1), std::invalid_argument);
}

TEST(Nonlinear, ZeroOrthogonalityAndTaylorGreenOracle) {
    const SpectralField zero(16, kL);
    EXPECT_EQ(nonlinear_B(zero, zero).l2_norm(), 0.0);
    for (int s = 0; s < 5; ++s) {
        const auto u = random_field(32, kL, 100 + s, 1.0 + s, 8);
        ASSERT_TRUE(is_dealiased(u));
        const auto b = nonlinear_B(u, u);
        EXPECT_LE(std::abs(inner_l2(b, u)), 1e-10 * std::pow(u.l2_norm(), 3));
        EXPECT_LE(b.divergence_ratio(), 1e-13);
    }
    const auto tg = taylor_green(32, kL, 1.0);
    EXPECT_LE((nonlinear_B(tg, tg) - taylor_green_convection(32)).l2_norm(), 1e-8);
    const auto shear = shear_mode(16, kL, 1.0, 1);
    EXPECT_LE(nonlinear_B(shear, shear).l2_norm(), 1e-14);
}

TEST(Step, ShearModeMatchesSemigroup) {
    auto cfg = base_config();
    State s{0.0, shear_mode(16, kL, 1.0, 2), std::nullopt};
    const auto u0 = s.u;
    for (int i = 0; i < 10; ++i) step(s, cfg);
    EXPECT_LE((s.u - stokes_semigroup(u0, s.t, cfg.nu)).l2_norm(), 1e-13);
}

TEST(Step, ConstantDensityIsUnchanged) {
    auto cfg = base_config();
    cfg.density.enabled = true;
    cfg.density.profile = "uniform";
    cfg.density.rho_max = 0.7;
    auto rho = initial_density(cfg);
    State s{0.0, taylor_green(16, kL, 1.0), rho};
    for (int i = 0; i < 3; ++i) step(s, cfg);
    for (double v : s.rho->rho) ASSERT_EQ(v, 0.7);
}

TEST(Step, SecondOrderSelfConvergence) {
    auto cfg = base_config();
    cfg.T = 0.5;
    cfg.checkpoint_every = 1000;
    std::vector<SpectralField> finals;
    for (double dt : {0.02, 0.01, 0.005}) {
        cfg.dt = dt;
        finals.push_back(solve(cfg, taylor_green(16, kL, 2.0)).checkpoints.back().u);
    }
    const double e1 = (finals[0] - finals[1]).l2_norm();
    const double e2 = (finals[1] - finals[2]).l2_norm();
    EXPECT_GE(std::log2(e1 / e2), 1.9) << e1 << " " << e2;
}

TEST(Solve, ZeroStaysZeroAndDivergenceIsPreserved) {
    auto cfg = base_config();
    cfg.initial.type = "zero";
    const auto z = solve(cfg);
    EXPECT_EQ(z.checkpoints.back().u.l2_norm(), 0.0);
    cfg.initial.type = "random";
    cfg.initial.amplitude = 3.0;
    cfg.forcing.type = "lowmode";
    cfg.forcing.amplitude = 0.5;
    cfg.checkpoint_every = 1;
    const auto tr = solve(cfg);
    for (const auto& c : tr.checkpoints) EXPECT_LE(c.u.divergence_ratio(), 1e-12);
    for (const auto& r : tr.series) EXPECT_LE(r.div_max, 1e-11);
}

TEST(Solve, LowReynoldsTaylorGreenFollowsViscousDecay) {
    auto cfg = base_config();
    cfg.T = 1.0;
    const double A = 1e-4;
    const auto tr = solve(cfg, taylor_green(16, kL, A));
    for (const auto& r : tr.series) {
        const double expect = 0.5 * A * A * std::pow(kL, 3) / 4 * std::exp(-2 * cfg.nu * 3 * r.t);
        EXPECT_NEAR(r.energy / expect, 1.0, 1e-4) << r.t;
    }
}

TEST(Solve, DensityStaysWithinBounds) {
    auto cfg = base_config();
    cfg.density.enabled = true;
    cfg.density.mu = 0.05;
    cfg.T = 0.5;
    cfg.initial.amplitude = 1.0;
    const auto tr = solve(cfg);
    const double m0 = tr.series.front().mass;
    for (const auto& r : tr.series) {
        EXPECT_GE(r.rho_min, 0.2 - 1e-12);
        EXPECT_LE(r.rho_max, 1.0 + 1e-12);
        EXPECT_NEAR(r.mass / m0, 1.0, 1e-4);
    }
}

TEST(Duhamel, LinearRunIsExactAndNonlinearConverges) {
    auto cfg = base_config();
    cfg.nonlinear = false;
    cfg.forcing.type = "lowmode";
    cfg.forcing.amplitude = 1.0;
    cfg.forcing.delta = 0.3;
    cfg.checkpoint_every = 1;
    cfg.T = 0.5;
    const auto lin = duhamel_residual(solve(cfg, random_field(16, kL, 2, 1.0, 3)));
    EXPECT_EQ(lin.front(), 0.0);
    for (double r : lin) EXPECT_LE(r, 1e-12);
    cfg.nonlinear = true;
    cfg.initial.amplitude = 2.0;
    double prev = 0.0;
    for (double dt : {0.02, 0.01}) {
        cfg.dt = dt;
        const auto res = duhamel_residual(solve(cfg));
        const double m = *std::max_element(res.begin(), res.end());
        if (prev > 0) EXPECT_GE(prev / m, 3.0) << prev << " " << m;
        prev = m;
    }
}

TEST(Config, RoundTripAndValidation) {
    auto cfg = base_config();
    cfg.forcing.type = "lowmode";
    cfg.forcing.amplitude = 0.3;
    cfg.initial.type = "random";
    const auto back = load_solver_config(KeyValueConfig::parse(cfg.to_ini(), "rt"));
    EXPECT_EQ(back.to_ini(), cfg.to_ini());
    auto bad = [](const std::string& text) { return load_solver_config(KeyValueConfig::parse(text, "bad")); };
    EXPECT_THROW(bad("[forcing]\ntype = lowmode\ntheta = 1.5\n"), ConfigError);
    EXPECT_THROW(bad("nu = 0.1\n[density]\nenabled = true\n"), ConfigError);
    EXPECT_THROW(bad("dt = 0.3\nT = 1\n"), ConfigError);
    EXPECT_THROW(bad("N = 15\n"), ConfigError);
    EXPECT_THROW(bad("bogus = 1\n"), ConfigError);
    EXPECT_THROW(bad("dt = 0.5\nT = 1\n[density]\nenabled = true\nmu = 1\nrho_min = 0.01\n"), ConfigError);
    const auto d = bad("dt = 0.002\n[density]\nenabled = true\nmu = 0.2\nbeta = 2\n");
    EXPECT_DOUBLE_EQ(d.nu_eff(), 0.1);
}

TEST(Solve, AbortsOnCflAndNonFinite) {
    auto cfg = base_config();
    cfg.initial.amplitude = 1000.0;
    EXPECT_THROW(solve(cfg), SolverError);
    cfg.initial.amplitude = 1e200;
    cfg.cfl_max = 1e300;
    EXPECT_THROW(solve(cfg), SolverError);
}

TEST(Trajectory, WriteReadRoundTrip) {
    auto cfg = base_config();
    cfg.density.enabled = true;
    cfg.checkpoint_every = 5;
    cfg.sd_K = 10;
    const auto tr = solve(cfg);
    EXPECT_GT(tr.series.front().sd_norm, 0.0);
    const auto dir = (std::filesystem::path(::testing::TempDir()) / "traj_rt").string();
    write_trajectory(tr, dir);
    const auto back = read_trajectory(dir);
    ASSERT_EQ(back.checkpoints.size(), tr.checkpoints.size());
    ASSERT_EQ(back.series.size(), tr.series.size());
    for (std::size_t i = 0; i < tr.checkpoints.size(); ++i) {
        EXPECT_EQ(back.checkpoints[i].t, tr.checkpoints[i].t);
        EXPECT_LE((back.checkpoints[i].u - tr.checkpoints[i].u).l2_norm(), 1e-14);
        EXPECT_EQ(back.checkpoints[i].rho->rho, tr.checkpoints[i].rho->rho);
    }
    EXPECT_EQ(back.series.back().energy, tr.series.back().energy);
    EXPECT_EQ(back.config.to_ini(), tr.config.to_ini());
    std::filesystem::remove_all(dir);
}

TEST(RandomField, DeterministicBySeed) {
    const auto a = random_field(16, kL, 5, 2.0, 3);
    const auto b = random_field(16, kL, 5, 2.0, 3);
    const auto c = random_field(16, kL, 6, 2.0, 3);
    EXPECT_EQ((a - b).l2_norm(), 0.0);
    EXPECT_GT((a - c).l2_norm(), 0.1);
    EXPECT_NEAR(a.l2_norm(), 2.0, 1e-12);
}
