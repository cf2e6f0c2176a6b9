#include <cmath>
#include <numbers>
#include <vector>

#include <boost/math/quadrature/tanh_sinh.hpp>
#include <gtest/gtest.h>

#include "sdnse/quadrature.hpp"

using namespace sdnse::quad;

TEST(GaussLegendre8, IntegratesDegree15Exactly) {
    auto p = [](double x) { return std::pow(x, 15) + 3 * std::pow(x, 14) - x + 2; };
    const double got = integrate_gl8(p, -1.0, 2.0, 1);
    const double exact = (std::pow(2.0, 16) - 1) / 16 + 3 * (std::pow(2.0, 15) + 1) / 15 - 1.5 + 6;
    EXPECT_NEAR(got, exact, 1e-9 * std::abs(exact));
}

TEST(GaussLegendre8, WeightsSumToTwo) {
    double s = 0;
    for (double w : GaussLegendre8::weights()) s += w;
    EXPECT_NEAR(s, 2.0, 1e-15);
}

TEST(Adaptive, MatchesTanhSinhOnPeakedIntegrand) {
    auto f = [](double x) { return 1.0 / (1e-4 + x * x); };
    boost::math::quadrature::tanh_sinh<double> ts;
    const double ref = ts.integrate(f, -1.0, 1.0);
    const auto r = adaptive([&](double x) { return cplx(f(x)); }, -1.0, 1.0, 1e-10);
    EXPECT_NEAR(r.value.real(), ref, 1e-9);
    EXPECT_LE(r.error, 1e-10);
}

TEST(Adaptive, ReportsFailureWithAchievedError) {
    auto f = [](double x) { return cplx(1.0 / std::sqrt(std::abs(x) + 1e-300)); };
    try {
        adaptive(f, -1.0, 1.0, 1e-15, 0.0, 4);
        FAIL() << "expected QuadratureError";
    } catch (const QuadratureError& e) {
        EXPECT_GT(e.achieved(), 1e-15);
    }
}

TEST(Wynn, AcceleratesAlternatingSeries) {
    // ln 2 = 1 - 1/2 + 1/3 - ...
    std::vector<cplx> partial;
    cplx s{};
    for (int k = 1; k <= 20; ++k) {
        s += (k % 2 ? 1.0 : -1.0) / k;
        partial.push_back(s);
    }
    const auto r = wynn_epsilon(partial);
    EXPECT_NEAR(r.value.real(), std::log(2.0), 1e-12);
    EXPECT_GT(std::abs(partial.back().real() - std::log(2.0)), 1e-3);
}

TEST(Cumulative, CubicRuleIsExactForCubics) {
    std::vector<double> t, g;
    for (int i = 0; i <= 10; ++i) {
        const double x = 0.3 * i + 0.01 * i * i;
        t.push_back(x);
        g.push_back(x * x * x - 2 * x);
    }
    const auto c = cumulative_cubic(t, g);
    for (std::size_t i = 0; i < t.size(); ++i) {
        const double x = t[i];
        EXPECT_NEAR(c[i], x * x * x * x / 4 - x * x, 1e-12);
    }
}

TEST(Cumulative, TrapezoidOnLinear) {
    std::vector<double> t{0, 1, 3}, g{1, 2, 4};
    const auto c = cumulative_trapezoid(t, g);
    EXPECT_DOUBLE_EQ(c[2], 1.5 + 6.0);
}
