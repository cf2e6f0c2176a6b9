#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>

#include <gtest/gtest.h>

#include "sdnse/embeddings.hpp"

using namespace sdnse;
using namespace sdnse::emb;
constexpr double kInf = std::numeric_limits<double>::infinity();

namespace {

const SdSpace& space2() {
    static const SdSpace s(2, 200);
    return s;
}

SampledField gaussian2(const GridSpec& g, double cx, double cy, double w, double a0, double a1) {
    return SampledField::from_function(g, 2, [&](auto x, auto v) {
        const double e = std::exp(-((x[0] - cx) * (x[0] - cx) + (x[1] - cy) * (x[1] - cy)) / (w * w));
        v[0] = a0 * e;
        v[1] = a1 * e;
    });
}

SampledField bump2(const GridSpec& g, double cx, double cy, double r) {
    return SampledField::from_function(g, 2, [&](auto x, auto v) {
        const double s = ((x[0] - cx) * (x[0] - cx) + (x[1] - cy) * (x[1] - cy)) / (r * r);
        v[0] = v[1] = s < 1 ? std::exp(1 - 1 / (1 - s)) : 0.0;
    });
}

GridSpec grid2() { return GridSpec::uniform(2, 121, -4.0, 4.0); }

}  // namespace

TEST(Embedding, ConjugateExponent) {
    EXPECT_EQ(conjugate_exponent(1.0), kInf);
    EXPECT_EQ(conjugate_exponent(kInf), 1.0);
    EXPECT_DOUBLE_EQ(conjugate_exponent(2.0), 2.0);
    EXPECT_DOUBLE_EQ(conjugate_exponent(3.0), 1.5);
    EXPECT_THROW(conjugate_exponent(0.5), std::invalid_argument);
}

TEST(Embedding, ZeroFieldAndBumps) {
    const auto g = grid2();
    const SampledField zero(g, 2);
    for (double q : {1.0, 2.0, kInf}) {
        const auto r = check_embedding_lp(space2(), zero, q, 200);
        EXPECT_TRUE(r.passed);
        EXPECT_EQ(r.data["lhs"].get<double>(), 0.0);
        EXPECT_EQ(r.data["rhs"].get<double>(), 0.0);
    }
    auto f = bump2(g, 0.2, -0.3, 1.0);
    f *= 1.0 / f.norm_p(1.0);
    const auto r1 = check_embedding_lp(space2(), f, 1.0, 200);
    EXPECT_TRUE(r1.passed);
    EXPECT_NEAR(r1.data["f_norm_q"].get<double>(), 1.0, 1e-12);
    const auto ri = check_embedding_lp(space2(), gaussian2(g, 0, 0, 1, 1, -1), kInf, 200);
    EXPECT_TRUE(ri.passed);
    EXPECT_DOUBLE_EQ(ri.data["c_q"].get<double>(), space2().e_norm_sup(200, 1.0));
}

TEST(Embedding, PerCubeConstantBelowOne) {
    for (double qp : {1.0, 2.0, kInf})
        for (int k = 1; k <= 200; ++k) EXPECT_LT(space2().e_norm(k, qp), 1.0) << k;
}

TEST(Compactness, ConstantSequenceIsNotWeaklyNull) {
    const auto f = gaussian2(grid2(), 0, 0, 1, 1, 1);
    const auto r = check_compactness(space2(), {f, f, f, f}, 200);
    EXPECT_FALSE(r.passed);
    EXPECT_EQ(r.data["note"], "not weakly null");
}

TEST(Compactness, ModulatedBumpDecays) {
    GridSpec g;
    g.dim = 2;
    g.n = {2049, 121, 1};
    g.lo = {-1.5, -1.5, 0};
    g.h = {3.0 / 2048, 3.0 / 120, 1};
    const auto seq = modulated_sequence(g, {1, 2, 4, 8, 16, 32, 64, 128}, {0.3, 0.1}, 1.0);
    const auto r = check_compactness(space2(), seq, 200);
    EXPECT_TRUE(r.passed) << r.data.dump();
    // Each functional tends to zero on its own (Riemann-Lebesgue).
    const auto plan = space2().plan(g, 3);
    const auto F1 = plan->apply(seq[3], 50);
    const auto F2 = plan->apply(seq.back(), 50);
    double m1 = 0, m2 = 0;
    for (int k = 0; k < 50; ++k) {
        m1 = std::max(m1, std::abs(F1[k]));
        m2 = std::max(m2, std::abs(F2[k]));
    }
    EXPECT_LT(m2, 0.1 * m1);
}

TEST(Translates, DisjointSupportsGiveZero) {
    const auto g = grid2();
    std::vector<SampledField> seq;
    for (int m = 0; m < 6; ++m) seq.push_back(bump2(g, -1.0 + 0.6 * m, 0.0, 0.5));
    const auto r = check_translates(space2(), seq, 100, 200);
    EXPECT_TRUE(r.passed);
    EXPECT_GT(r.data["disjoint_pairs"].get<int>(), 0);
}

TEST(WeakDerivative, IdentityAndFirstDerivative) {
    const auto g = GridSpec::uniform(2, 241, -3.0, 3.0);
    const auto f = gaussian2(g, 0.2, -0.1, 0.5, 1.0, -0.7);
    const auto r0 = check_weak_derivative(space2(), f, {0, 0, 0}, 100);
    EXPECT_EQ(r0.data["norm_ratio"].get<double>(), 1.0);
    for (std::array<int, 3> a : {std::array<int, 3>{1, 0, 0}, {0, 1, 0}, {1, 1, 0}}) {
        const auto r = check_weak_derivative(space2(), f, a, 100);
        EXPECT_TRUE(r.asserted);
        EXPECT_TRUE(r.passed) << r.data.dump();
        EXPECT_LE(r.data["max_residual"].get<double>(), 1e-6);
        EXPECT_GT(r.data["norm_ratio"].get<double>(), 0.0);
    }
}

TEST(WeakDerivative, NonCompactFieldIsFlagged) {
    const auto g = GridSpec::uniform(2, 121, -1.0, 1.0);
    const auto f = gaussian2(g, 0, 0, 1, 1, 1);
    const auto r = check_weak_derivative(space2(), f, {1, 0, 0}, 50);
    EXPECT_FALSE(r.asserted);
    EXPECT_TRUE(r.data.contains("note"));
}

TEST(WeakDerivative, ResidualConvergesWithRefinement) {
    const auto coarse = GridSpec::uniform(2, 61, -3.0, 3.0);
    const auto fine = GridSpec::uniform(2, 121, -3.0, 3.0);
    const auto a = check_weak_derivative(space2(), gaussian2(coarse, 0.2, -0.1, 0.5, 1, 1), {1, 0, 0}, 60);
    const auto b = check_weak_derivative(space2(), gaussian2(fine, 0.2, -0.1, 0.5, 1, 1), {1, 0, 0}, 60);
    const double order = std::log2(a.data["max_residual"].get<double>() / b.data["max_residual"].get<double>());
    EXPECT_GE(order, 2.0) << order;
}

TEST(Sobolev, Cases) {
    const auto g = grid2();
    EXPECT_TRUE(check_sobolev_membership(space2(), SampledField(g, 2), 1, 2.0, 200).passed);
    const auto f = gaussian2(g, 0.1, 0.2, 0.8, 1, 0.5);
    for (double p : {1.0, 2.0, kInf}) {
        const auto r = check_sobolev_membership(space2(), f, 2, p, 200);
        EXPECT_TRUE(r.passed) << r.data.dump();
        EXPECT_GE(r.data["sobolev_norm"].get<double>(), f.norm_p(p));
    }
}

TEST(Minkowski, Cases) {
    const auto g = grid2();
    const auto f = gaussian2(g, 0.1, 0.2, 0.8, 1, 0.5);
    for (double p : {1.0, 2.0, 3.0, kInf}) {
        const auto neg = check_minkowski(space2(), f, -1.0 * f, p, 200);
        EXPECT_TRUE(neg.passed);
        EXPECT_EQ(neg.data["lhs"].get<double>(), 0.0);
        const auto same = check_minkowski(space2(), f, f, p, 200);
        EXPECT_NEAR(same.data["lhs"].get<double>(), 2 * same.data["norm_f"].get<double>(),
                    1e-12 * same.data["lhs"].get<double>());
    }
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> U(-1, 1);
    for (int t = 0; t < 5; ++t) {
        const auto a = gaussian2(g, U(rng), U(rng), 0.6, U(rng), U(rng));
        const auto b = bump2(g, U(rng), U(rng), 1.2);
        for (double p : {1.0, 2.0, kInf}) EXPECT_TRUE(check_minkowski(space2(), a, b, p, 200).passed);
    }
}

TEST(SdInfinity, Cases) {
    const auto g = grid2();
    EXPECT_TRUE(check_sdinfty_in_sdp(space2(), SampledField(g, 2), 2.0, 200).passed);
    // A field concentrated inside cube 1 makes F_1 dominate.
    const auto& c = space2().cube(1);
    const auto f = bump2(g, c.center_d[0], c.center_d[1], 0.4);
    const auto r = check_sdinfty_in_sdp(space2(), f, 2.0, 200);
    EXPECT_TRUE(r.passed);
    EXPECT_LE(r.data["lhs"].get<double>(), r.data["sd_inf"].get<double>());
    for (double p : {1.0, 1.5, 4.0})
        EXPECT_TRUE(check_sdinfty_in_sdp(space2(), gaussian2(g, 0.5, -0.5, 0.7, 1, 2), p, 200).passed);
}

TEST(Bmo, ConstantAndBounded) {
    const auto g = GridSpec::uniform(2, 41, -1.0, 1.0);
    auto c = SampledField::from_function(g, 1, [](auto, auto v) { v[0] = 3.5; });
    EXPECT_EQ(bmo_norm(c, 0, 1000, 1), 0.0);
    auto s = SampledField::from_function(g, 1, [](auto x, auto v) { v[0] = std::sin(5 * x[0]) * std::cos(3 * x[1]); });
    const double b = bmo_norm(s, 0, 2000, 1);
    EXPECT_GT(b, 0.0);
    EXPECT_LE(b, 2.0);
    EXPECT_EQ(b, bmo_norm(s, 0, 2000, 1));
}

// Mean oscillation of ln|x| over [a, b] in closed form, using the
// antiderivative x ln|x| - x on pieces where ln|x| - mean has one sign.
double log_oscillation(double a, double b) {
    auto G = [](double x) { return x == 0.0 ? 0.0 : x * std::log(std::abs(x)) - x; };
    const double m = (G(b) - G(a)) / (b - a);
    const double t = std::exp(m);
    std::vector<double> pts{a, b};
    for (double p : {-t, t, 0.0})
        if (p > a && p < b) pts.push_back(p);
    std::sort(pts.begin(), pts.end());
    double total = 0.0;
    for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
        const double lo = pts[i], hi = pts[i + 1];
        const double mid = 0.5 * (lo + hi);
        const double sign = std::log(std::abs(mid)) >= m ? 1.0 : -1.0;
        total += sign * (G(hi) - G(lo) - m * (hi - lo));
    }
    return total / (b - a);
}

TEST(Bmo, LogarithmIsFiniteAndStable) {
    // By scale invariance the supremum over intervals is a maximum over [-s, 1].
    double oracle = 0.0;
    for (int i = 0; i <= 20000; ++i) oracle = std::max(oracle, log_oscillation(-i / 20000.0, 1.0));
    EXPECT_NEAR(log_oscillation(-1.0, 1.0), 2.0 / std::numbers::e, 1e-12);
    const auto g = GridSpec::uniform(2, 200, -2.0, 2.0);
    const auto f = SampledField::from_function(g, 1, [](auto x, auto v) { v[0] = std::log(std::abs(x[0])); });
    const double b3 = bmo_norm(f, 0, 1000, 5);
    const double b4 = bmo_norm(f, 0, 10000, 5);
    EXPECT_TRUE(std::isfinite(b4));
    EXPECT_GE(b4, b3);
    EXPECT_LE(b4 - b3, 0.02 * b4);
    EXPECT_GT(b4, 0.97 * oracle);
    EXPECT_LT(b4, oracle * (1 + 1e-9));
}

TEST(BmoInverse, ConstantGivesZeroAndSmoothDuality) {
    const auto g = GridSpec::uniform(2, 241, -3.0, 3.0);
    std::vector<SampledField> cst(2, SampledField::from_function(g, 2, [](auto, auto v) { v[0] = v[1] = 1.5; }));
    const auto r0 = check_bmo_inverse_pairing(space2(), cst, 100, 200, 1, false);
    EXPECT_TRUE(r0.passed);
    EXPECT_LE(r0.data["sup_F"].get<double>(), 1e-12);
    std::vector<SampledField> fs{gaussian2(g, 0.1, 0.0, 0.5, 1, 0.3), bump2(g, -0.2, 0.3, 1.5)};
    const auto r = check_bmo_inverse_pairing(space2(), fs, 100, 200, 1, true);
    EXPECT_TRUE(r.passed) << r.data.dump();
    EXPECT_LE(r.data["max_duality_residual"].get<double>(), 1e-6);
}

TEST(Corpus, DefaultSpecBuildsTwentyFiniteItems) {
    const auto spec = default_corpus_spec(2);
    EXPECT_EQ(spec.items.size(), 20u);
    auto small = spec;
    small.points = 61;
    const auto items = build_corpus(small);
    EXPECT_EQ(items.size(), 20u);
    for (const auto& it : items)
        for (const auto& f : it.fields) EXPECT_NO_THROW(f.validate()) << it.name;
    const auto pg = corpus_grid(small, true);
    const double s = -pg.lo[0] / pg.h[0];
    EXPECT_NEAR(s - std::floor(s), 0.5, 1e-9);
}

TEST(Corpus, LoadFromText) {
    const auto cfg = KeyValueConfig::parse(R"(
[corpus]
dim = 2
points = 41
lo = -2
hi = 2
K = 50
seed = 9
frequencies = [1, 2, 4]

[wide]
generator = gaussian
center = 0.5 0.5
width = 0.7

[osc]
generator = "oscillatory"   # quoted value
frequency = [3, 1]
)",
                                           "corpus.ini");
    const auto spec = load_corpus_spec(cfg);
    EXPECT_EQ(spec.points, 41);
    EXPECT_EQ(spec.K, 50);
    EXPECT_EQ(spec.seed, 9u);
    ASSERT_EQ(spec.items.size(), 2u);
    const auto items = build_corpus(spec);
    EXPECT_EQ(items[1].kind, "oscillatory");
    EXPECT_THROW(load_corpus_spec(KeyValueConfig::parse("[a]\ngenerator = nope\n", "x")), ConfigError);
    EXPECT_THROW(load_corpus_spec(KeyValueConfig::parse("[a]\ngenerator = bump\nwidth = 1\n", "x")), ConfigError);
    EXPECT_THROW(load_corpus_spec(KeyValueConfig::parse("[corpus]\nbogus = 1\n", "x")), ConfigError);
    EXPECT_THROW(load_corpus_spec(KeyValueConfig::parse("[corpus]\nK = x\n", "x")), ConfigError);
}

TEST(Suite, SmallCorpusRunsDeterministically) {
    CorpusSpec spec;
    spec.dim = 2;
    spec.points = 61;
    spec.K = 40;
    spec.bmo_samples = 200;
    spec.frequencies = {1, 2};
    spec.items = {{"g", "gaussian", {{"width", "0.5"}}}, {"l", "bmo-log", {{"cutoff", "2"}}}};
    bool ok1 = false, ok2 = false;
    const auto a = run_embeddings_suite(spec, ok1);
    const auto b = run_embeddings_suite(spec, ok2);
    EXPECT_EQ(a.dump(), b.dump());
    EXPECT_EQ(a["items"].size(), 2u);
}
