#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "sdnse/monitor.hpp"
#include "sdnse/sdspace.hpp"

using namespace sdnse;
using namespace sdnse::monitor;
using nse::SolverConfig;

namespace {

constexpr double kL = 2 * std::numbers::pi;

SolverConfig small_config() {
    SolverConfig c;
    c.nu = 0.1;
    c.N = 16;
    c.dt = 0.01;
    c.T = 0.5;
    c.checkpoint_every = 5;
    return c;
}

const sd::SdSpace& space60() {
    static const sd::SdSpace s(3, 60);
    return s;
}

double quadratic(double M, double nu, double f, double u) { return M * u * u - nu * u + f; }

}  // namespace

TEST(Thresholds, DirectSubstitutionAndRoots) {
    const auto th = thresholds(1.0, 1.0, 0.1);
    EXPECT_NEAR(th.gamma, 0.4, 1e-15);
    EXPECT_NEAR(th.u_plus, 0.5 * (1 + std::sqrt(0.6)), 1e-15);
    EXPECT_NEAR(th.u_minus, 0.5 * (1 - std::sqrt(0.6)), 1e-15);
    EXPECT_NEAR(th.sigma, 0.5 * (1 - std::sqrt(0.6)), 1e-15);
    EXPECT_LE(std::abs(quadratic(1, 1, 0.1, th.u_plus)), 1e-12);
    EXPECT_LE(std::abs(quadratic(1, 1, 0.1, th.u_minus)), 1e-12);
}

TEST(Thresholds, ZeroForcingAndBall) {
    for (double nu : {0.1, 0.37, 3.0})
        for (double M : {0.01, 1.0, 51.17}) {
            const auto th = thresholds(nu, M, 0.0);
            EXPECT_EQ(th.gamma, 0.0);
            EXPECT_EQ(th.u_minus, 0.0);
            EXPECT_EQ(th.u_plus, nu / M);
            EXPECT_EQ(th.sigma, 0.0);
            EXPECT_DOUBLE_EQ(ball_radius(nu, M, 0.5), 0.25 * nu / M);
            EXPECT_DOUBLE_EQ(ball_sigma(nu, 0.5), 0.5 * nu);
        }
    EXPECT_THROW(ball_radius(1, 1, 1.0), std::invalid_argument);
    EXPECT_THROW(thresholds(0.0, 1.0, 0.0), std::invalid_argument);
    EXPECT_THROW(thresholds(1.0, 0.0, 0.0), std::invalid_argument);
}

TEST(Thresholds, RandomRootsAgainstLongDoubleFormula) {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> lg(-3, 1);
    int accepted = 0, rejected = 0;
    for (int i = 0; i < 2000; ++i) {
        const double nu = std::pow(10.0, lg(rng)), M = std::pow(10.0, lg(rng)), f = std::pow(10.0, lg(rng));
        const bool distinct = 2 * std::sqrt(f * M) < nu;
        if (std::abs(2 * std::sqrt(f * M) / nu - 1) < 1e-12) continue;
        if (!distinct) {
            try {
                thresholds(nu, M, f);
                ADD_FAILURE() << "no error for nu=" << nu << " M=" << M << " f=" << f;
            } catch (const MonitorError& e) {
                EXPECT_NE(std::string(e.what()).find("no real distinct roots"), std::string::npos);
            }
            ++rejected;
            continue;
        }
        const auto th = thresholds(nu, M, f);
        const long double disc = std::sqrt((long double)nu * nu - 4.0L * M * f);
        const long double up = (nu + disc) / (2.0L * M), um = 2.0L * f / (nu + disc);
        EXPECT_LT(th.u_minus, th.u_plus);
        EXPECT_NEAR(th.u_plus, (double)up, 1e-12 * (double)up);
        EXPECT_NEAR(th.u_minus, (double)um, 1e-12 * (double)up);
        EXPECT_LE(std::abs(quadratic(M, nu, f, th.u_plus)), 1e-12 * nu * nu / M);
        EXPECT_LE(std::abs(quadratic(M, nu, f, th.u_minus)), 1e-12 * nu * nu / M);
        ++accepted;
    }
    EXPECT_GT(accepted, 100);
    EXPECT_GT(rejected, 100);
}

TEST(Annulus, MatchesScalarSignPattern) {
    const auto a = annulus(1.0, 1.0, 0.1);
    const auto th = thresholds(1.0, 1.0, 0.1);
    EXPECT_EQ(a.lo, th.u_minus);
    EXPECT_EQ(a.hi, th.u_plus);
    for (double n : {0.05, 0.2, 0.5, 0.8, 0.95})
        EXPECT_EQ(a.contains(n), scalar_inequality(1.0, 1.0, 0.1, n) <= 0) << n;
    EXPECT_FALSE(annulus(1.0, 1.0, 1.0).real);
    const auto lin = annulus(2.0, 0.0, 1.0);
    EXPECT_EQ(lin.lo, 0.5);
    EXPECT_TRUE(std::isinf(lin.hi));
}

TEST(EstimateM, SingleModeIsZeroAndZeroFieldIsUndefined) {
    auto c = small_config();
    c.initial.type = "shear";
    c.initial.mode = 2;
    const auto tr = nse::solve(c);
    const NormContext l2(Norm::L2);
    EXPECT_EQ(estimate_M(tr, l2).M_hat, 0.0);

    c.initial.type = "zero";
    const auto z = nse::solve(c);
    try {
        estimate_M(z, l2);
        ADD_FAILURE() << "expected M undefined";
    } catch (const MonitorError& e) {
        EXPECT_NE(std::string(e.what()).find("M undefined"), std::string::npos);
    }
}

TEST(EstimateM, ScaleInvariantSnapshot) {
    const auto u = nse::taylor_green(16, kL, 1.0);
    auto v = nse::random_field(16, kL, 3, 2.0);
    v += u;
    const NormContext l2(Norm::L2), sdc(Norm::SD2, &space60(), 60);
    for (const auto* ctx : {&l2, &sdc}) {
        const double a = snapshot_M(v, *ctx), b = snapshot_M(2.0 * v, *ctx);
        EXPECT_NEAR(a, b, 1e-9 * std::max(a, 1e-300)) << to_string(ctx->norm());
    }
}

TEST(EstimateM, TaylorGreenL2RoundoffAndSdStable) {
    auto c = small_config();
    c.T = 1.0;
    c.checkpoint_every = 10;
    const auto coarse = nse::solve(c);
    c.checkpoint_every = 2;
    const auto dense = nse::solve(c);
    const NormContext l2(Norm::L2), sdc(Norm::SD2, &space60(), 60);
    // Triple-product orthogonality leaves only round-off in L2.
    EXPECT_LT(estimate_M(dense, l2).M_hat, 1e-12);
    const double a = estimate_M(coarse, sdc).M_hat, b = estimate_M(dense, sdc).M_hat;
    EXPECT_GT(a, 0.0);
    EXPECT_NEAR(a, b, 0.005 * b);
}

TEST(Dissipativity, UnforcedMarginIsViscousTerm) {
    auto c = small_config();
    c.initial.type = "random";
    c.initial.amplitude = 2.0;
    const auto tr = nse::solve(c);
    const auto dc = check_zero_dissipativity(tr, NormContext(Norm::L2));
    EXPECT_TRUE(dc.passed);
    ASSERT_EQ(dc.points.size(), tr.checkpoints.size());
    for (std::size_t i = 0; i < dc.points.size(); ++i) {
        const auto& p = dc.points[i];
        const double g = tr.checkpoints[i].u.grad_l2_norm();
        EXPECT_TRUE(p.asserted);
        EXPECT_NEAR(p.direct_l2, -c.nu * g * g, 1e-10 * c.nu * g * g);
        EXPECT_LE(p.direct_l2, 0.0);
    }
}

TEST(Dissipativity, ForcedRunInsideAnnulus) {
    auto c = small_config();
    c.forcing.type = "lowmode";
    c.forcing.amplitude = 0.01;
    const auto tr = nse::solve(c);
    const auto dc = check_zero_dissipativity(tr, NormContext(Norm::SD2, &space60(), 60));
    EXPECT_TRUE(dc.passed);
    EXPECT_GT(dc.params.f_l2, 0.0);
    EXPECT_GT(dc.params.f, 0.0);
    for (const auto& p : dc.points) {
        EXPECT_TRUE(dc.annulus_l2.contains(p.norm_u_l2)) << p.t;
        EXPECT_TRUE(p.asserted);
        EXPECT_LE(p.direct_l2, 0.0) << p.t;
        EXPECT_TRUE(std::isfinite(p.direct));
    }
}

TEST(Dissipativity, ScaledBeyondUpperRootIsFlagged) {
    const auto u = nse::taylor_green(16, kL, 1.0);
    DissipativityParams p;
    p.nu = p.nu_l2 = 1.0;
    p.M = p.M_l2 = 1.0;
    p.f = p.f_l2 = 0.1;
    const NormContext l2(Norm::L2);
    const SpectralField zero(16, kL);
    const double up = thresholds(1.0, 1.0, 0.1).u_plus;
    const auto inside = dissipativity_point((0.5 / u.l2_norm()) * u, zero, 0.0, p, l2);
    EXPECT_TRUE(inside.scalar_holds);
    EXPECT_TRUE(inside.asserted);
    const auto outside = dissipativity_point((2 * up / u.l2_norm()) * u, zero, 0.0, p, l2);
    EXPECT_FALSE(outside.scalar_holds);
    EXPECT_GT(outside.scalar, 0.0);
    EXPECT_FALSE(outside.asserted);
}

TEST(Contraction, IdenticalDataStaysAtZero) {
    auto c = small_config();
    const auto u0 = nse::taylor_green(16, kL, 0.3);
    const auto r = check_contraction(c, u0, u0, {Norm::L2, 0.0, 100.0}, 0.0);
    for (double d : r.d) EXPECT_EQ(d, 0.0);
    EXPECT_TRUE(r.passed);
    EXPECT_FALSE(r.rate.has_value());
}

TEST(Contraction, LinearShearPairDecaysAtViscousRate) {
    auto c = small_config();
    c.nonlinear = false;
    c.T = 1.0;
    const auto u0 = nse::shear_mode(16, kL, 1.0, 1);
    const auto v0 = nse::shear_mode(16, kL, 0.5, 1);
    const auto r = check_contraction(c, u0, v0, {Norm::L2, 0.0, 100.0}, c.nu);
    EXPECT_TRUE(r.asserted);
    EXPECT_TRUE(r.passed);
    ASSERT_TRUE(r.rate.has_value());
    // d(t) = d(0) exp(-nu |k|^2 t) with |k| = 1.
    EXPECT_NEAR(*r.rate, c.nu, 1e-8);
    EXPECT_NEAR(r.d.back(), r.d.front() * std::exp(-c.nu * c.T), 1e-10);
}

TEST(Contraction, LowReynoldsPairIsMonotone) {
    auto c = small_config();
    c.T = 1.0;
    const auto u0 = nse::taylor_green(16, kL, 0.3);
    auto v0 = u0;
    v0.axpy(0.05, nse::random_field(16, kL, 5, 1.0));
    const auto r = check_contraction(c, u0, v0, {Norm::L2, 0.0, 10.0}, 0.0, &space60());
    EXPECT_TRUE(r.in_region);
    EXPECT_TRUE(r.monotone) << r.worst_increase;
    EXPECT_TRUE(r.passed);
    EXPECT_EQ(r.d_sd.size(), r.d.size());
    EXPECT_GT(r.rate.value_or(0.0), 0.0);
}

TEST(Contraction, OutsideRegionIsFlaggedNotAsserted) {
    auto c = small_config();
    c.T = 0.1;
    const auto u0 = nse::taylor_green(16, kL, 0.3);
    const auto v0 = nse::taylor_green(16, kL, 0.2);
    const auto r = check_contraction(c, u0, v0, {Norm::L2, 0.0, 0.1}, 0.0);
    EXPECT_FALSE(r.in_region);
    EXPECT_FALSE(r.asserted);
    EXPECT_FALSE(r.notes.empty());
    EXPECT_TRUE(r.bounded);
}

TEST(EnergyInequality, SingleModeAndTaylorGreen) {
    auto c = small_config();
    c.initial.type = "shear";
    c.initial.mode = 2;
    const auto s = energy_inequality(nse::solve(c), c.nu);
    EXPECT_EQ(s.slack.front(), 0.0);
    for (double v : s.slack) EXPECT_NEAR(v, 0.0, 1e-8 * s.norm0_sq);

    c.initial.type = "taylor-green";
    c.dt = 0.005;
    const auto tg = energy_inequality(nse::solve(c), c.nu);
    EXPECT_EQ(tg.slack.front(), 0.0);
    EXPECT_GE(tg.min_relative, -1e-6);

    c.forcing.type = "lowmode";
    c.forcing.amplitude = 0.1;
    EXPECT_THROW(energy_inequality(nse::solve(c), c.nu), std::invalid_argument);
}

TEST(EnergyMatrices, TraceSymmetryAndMonotoneIntegral) {
    auto c = small_config();
    c.initial.type = "random";
    const auto tr = nse::solve(c);
    const auto em = energy_matrices(tr);
    ASSERT_EQ(em.E.size(), tr.checkpoints.size());
    for (std::size_t j = 0; j < em.E.size(); ++j) {
        const auto& E = em.E[j];
        const double n = tr.checkpoints[j].u.l2_norm();
        EXPECT_NEAR(E[0] + E[4] + E[8], n * n, 1e-12 * n * n);
        for (int a = 0; a < 3; ++a)
            for (int b = 0; b < 3; ++b) EXPECT_EQ(E[3 * a + b], E[3 * b + a]);
        if (j > 0)
            for (int a = 0; a < 3; ++a) EXPECT_GE(em.Kint[j][4 * a], em.Kint[j - 1][4 * a]);
    }
    EXPECT_EQ(em.Kint.front()[0], 0.0);
}

TEST(EnergyMatrices, IsotropicEnsembleOffDiagonalsSmall) {
    std::array<double, 9> mean{};
    double trace = 0.0;
    const int n = 40;
    for (int s = 0; s < n; ++s) {
        const auto E = energy_matrix(nse::random_field(16, kL, 100 + s, 1.0));
        for (int e = 0; e < 9; ++e) mean[e] += E[e] / n;
        trace += (E[0] + E[4] + E[8]) / n;
    }
    EXPECT_NEAR(trace, 1.0, 1e-12);
    for (int a = 0; a < 3; ++a) {
        EXPECT_NEAR(mean[4 * a], trace / 3, 0.05 * trace);
        for (int b = a + 1; b < 3; ++b) EXPECT_LT(std::abs(mean[3 * a + b]), 0.05 * trace);
    }
}

TEST(DecayFit, SyntheticSeries) {
    std::vector<double> t, d, k;
    for (int i = 1; i <= 50; ++i) {
        t.push_back(0.5 * i);
        d.push_back(std::pow(0.5 * i, -0.25));
        k.push_back(3.0);
    }
    EXPECT_NEAR(decay_fit(t, d), 0.5, 1e-12);
    EXPECT_NEAR(decay_fit(t, k), 0.0, 1e-12);
    EXPECT_THROW(decay_fit(t, d, 24.5), MonitorError);
    EXPECT_THROW(decay_fit({1.0, 2.0}, {1.0, 0.5}), MonitorError);
}

TEST(DecayFit, UnforcedRunIsPositive) {
    // ||u - S(t) u0|| grows over the first few time units, so the run has to be long.
    auto c = small_config();
    c.T = 20.0;
    c.dt = 0.02;
    c.checkpoint_every = 25;
    c.initial.amplitude = 0.5;
    const auto df = decay_fit(nse::solve(c));
    EXPECT_EQ(df.t_min, 5.0);
    EXPECT_GT(df.alpha_hat, 0.0);
}

TEST(Report, SchemaAndNoRootsError) {
    auto c = small_config();
    c.T = 0.2;
    const auto tr = nse::solve(c);
    ReportOptions opt;
    const auto j = dissipativity_report(tr, opt);
    for (const char* key : {"M_hat", "f_sup", "gamma", "u_plus", "u_minus", "sigma", "margins", "contraction",
                            "alpha_hat", "annulus_ok", "energy_matrices"})
        EXPECT_TRUE(j.contains(key)) << key;
    EXPECT_EQ(j["norm"], "SD2");
    EXPECT_EQ(j["margins"].size(), tr.checkpoints.size());
    EXPECT_GT(j["M_hat"].get<double>(), 0.0);
    EXPECT_EQ(j["gamma"].get<double>(), 0.0);

    c.forcing.type = "lowmode";
    c.forcing.amplitude = 1.0;
    const auto forced = nse::solve(c);
    try {
        dissipativity_report(forced, opt);
        ADD_FAILURE() << "expected no real distinct roots";
    } catch (const MonitorError& e) {
        EXPECT_NE(std::string(e.what()).find("no real distinct roots"), std::string::npos);
    }
}
