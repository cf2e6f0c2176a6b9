#include "sdnse/embeddings.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <stdexcept>

namespace sdnse::emb {

using nlohmann::json;
using sd::cplx;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Infinity is not representable in JSON; exponents are written as strings.
json exponent_json(double p) { return std::isinf(p) ? json("inf") : json(p); }

std::string exponent_name(double p) {
    if (std::isinf(p)) return "inf";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%g", p);
    return buf;
}

// Peak-one smooth bump supported on the unit ball.
double bump_profile(double r2) { return r2 < 1.0 ? std::exp(1.0 - 1.0 / (1.0 - r2)) : 0.0; }

// Smooth step: 1 for t <= 0, 0 for t >= 1.
double smooth_step(double t) {
    if (t <= 0.0) return 1.0;
    if (t >= 1.0) return 0.0;
    const double a = std::exp(-1.0 / (1.0 - t));
    const double b = std::exp(-1.0 / t);
    return a / (a + b);
}

double sq_dist(std::span<const double> x, const std::vector<double>& c, int dim) {
    double s = 0.0;
    for (int a = 0; a < dim; ++a) {
        const double d = x[a] - (a < static_cast<int>(c.size()) ? c[a] : 0.0);
        s += d * d;
    }
    return s;
}

double weight(const std::vector<double>& amps, int c) {
    return c < static_cast<int>(amps.size()) ? amps[c] : amps.back();
}

// Bounding box of the nonzero samples widened by the interpolation stencil.
bool support_box(const SampledField& f, std::array<double, 3>& lo, std::array<double, 3>& hi) {
    const auto& g = f.grid();
    std::array<int, 3> imin{g.n[0], g.n[1], g.n[2]}, imax{-1, -1, -1};
    for (std::size_t idx = 0; idx < g.size(); ++idx) {
        bool nz = false;
        for (int c = 0; c < f.components(); ++c) nz = nz || f.component(c)[idx] != 0.0;
        if (!nz) continue;
        const auto i = g.unflatten(idx);
        for (int a = 0; a < g.dim; ++a) {
            imin[a] = std::min(imin[a], i[a]);
            imax[a] = std::max(imax[a], i[a]);
        }
    }
    if (imax[0] < 0) return false;
    for (int a = 0; a < g.dim; ++a) {
        lo[a] = g.coord(a, imin[a]) - 2.0 * g.h[a];
        hi[a] = g.coord(a, imax[a]) + 2.0 * g.h[a];
    }
    return true;
}

std::vector<std::array<int, 3>> multi_indices(int dim, int kmax) {
    std::vector<std::array<int, 3>> out;
    for (int a = 0; a <= kmax; ++a)
        for (int b = 0; b <= (dim > 1 ? kmax - a : 0); ++b)
            for (int c = 0; c <= (dim > 2 ? kmax - a - b : 0); ++c) out.push_back({a, b, c});
    return out;
}

}  // namespace

json to_json(const CheckReport& r) {
    return json{{"name", r.name}, {"asserted", r.asserted}, {"passed", r.passed}, {"data", r.data}};
}

double conjugate_exponent(double q) {
    if (!(q >= 1.0)) throw std::invalid_argument("exponent must lie in [1, inf]");
    if (q == 1.0) return kInf;
    if (std::isinf(q)) return 1.0;
    return q / (q - 1.0);
}

CheckReport check_embedding_lp(const SdSpace& space, const SampledField& f, double q, int K) {
    const double qp = conjugate_exponent(q);
    CheckReport r;
    r.name = "embedding_lp_q" + exponent_name(q);
    const double cq = space.e_norm_sup(K, qp);
    const auto v = sd::sd_norm(space, f, K);
    const double fq = f.norm_p(q);
    const double rhs = cq * fq + v.tail_bound;
    r.passed = v.real() <= rhs * (1.0 + 1e-12) + 1e-300;
    r.data = {{"q", exponent_json(q)},
              {"lhs", v.real()},
              {"rhs", rhs},
              {"c_q", cq},
              {"f_norm_q", fq},
              {"tail", v.tail_bound},
              {"unit_constant_holds", cq < 1.0},
              {"warnings", v.warnings}};
    return r;
}

CheckReport check_compactness(const SdSpace& space, const std::vector<SampledField>& sequence, int K) {
    if (sequence.size() < 2) throw std::invalid_argument("compactness check needs at least two terms");
    CheckReport r;
    r.name = "compactness";
    std::vector<double> norms;
    for (const auto& f : sequence) norms.push_back(sd::sd_norm(space, f, K).real());
    const std::size_t half = sequence.size() / 2;
    bool decreasing = true;
    for (std::size_t i = sequence.size() - half; i < sequence.size(); ++i) decreasing = decreasing && norms[i] < norms[i - 1];
    const double ratio = norms.front() > 0 ? norms.back() / norms.front() : kInf;
    r.passed = decreasing && ratio < 0.05;
    r.data = {{"sd_norms", norms}, {"final_over_first", ratio}, {"decreasing_tail", decreasing}};
    const auto [mn, mx] = std::minmax_element(norms.begin(), norms.end());
    if (*mn > 0 && *mx <= *mn * (1.0 + 1e-9)) r.data["note"] = "not weakly null";
    return r;
}

std::vector<SampledField> modulated_sequence(const GridSpec& grid, const std::vector<double>& frequencies,
                                             const std::vector<double>& center, double radius) {
    std::vector<SampledField> out;
    for (double m : frequencies) {
        out.push_back(SampledField::from_function(grid, grid.dim, [&](auto x, auto v) {
            const double b = bump_profile(sq_dist(x, center, grid.dim) / (radius * radius)) * std::sin(m * x[0]);
            for (int c = 0; c < grid.dim; ++c) v[c] = b;
        }));
    }
    return out;
}

CheckReport check_translates(const SdSpace& space, const std::vector<SampledField>& sequence, int k_fixed, int K) {
    CheckReport r;
    r.name = "translates";
    std::vector<double> max_F;
    int disjoint_pairs = 0;
    double worst_disjoint = 0.0;
    for (const auto& f : sequence) {
        const auto plan = space.plan(f.grid(), f.interp_order());
        const auto F = plan->apply(f, K);
        double mx = 0.0;
        for (int k = 1; k <= k_fixed; ++k) mx = std::max(mx, std::abs(F[k - 1]));
        max_F.push_back(mx);
        std::array<double, 3> lo{}, hi{};
        if (!support_box(f, lo, hi)) continue;
        for (int k = 1; k <= k_fixed; ++k) {
            const auto& cube = space.cube(k);
            bool apart = false;
            for (int a = 0; a < f.dim(); ++a) apart = apart || cube.hi(a) < lo[a] || cube.lo(a) > hi[a];
            if (!apart) continue;
            ++disjoint_pairs;
            worst_disjoint = std::max(worst_disjoint, std::abs(F[k - 1]));
        }
    }
    r.passed = worst_disjoint == 0.0;
    r.data = {{"max_F_per_term", max_F},
              {"k_fixed", k_fixed},
              {"disjoint_pairs", disjoint_pairs},
              {"max_F_on_disjoint_pairs", worst_disjoint}};
    return r;
}

SampledField apply_derivative(const SampledField& f, const std::array<int, 3>& alpha) {
    SampledField g = f;
    for (int a = 0; a < f.dim(); ++a)
        for (int i = 0; i < alpha[a]; ++i) g = g.derivative_field(a);
    return g;
}

double boundary_ratio(const SampledField& f) {
    const auto& g = f.grid();
    double interior = 0.0, boundary = 0.0;
    for (std::size_t idx = 0; idx < g.size(); ++idx) {
        const auto i = g.unflatten(idx);
        bool edge = false;
        for (int a = 0; a < g.dim; ++a) edge = edge || i[a] == 0 || i[a] == g.n[a] - 1;
        double m = 0.0;
        for (int c = 0; c < f.components(); ++c) m = std::max(m, std::abs(f.component(c)[idx]));
        interior = std::max(interior, m);
        if (edge) boundary = std::max(boundary, m);
    }
    return interior > 0 ? boundary / interior : 0.0;
}

CheckReport check_weak_derivative(const SdSpace& space, const SampledField& f, const std::array<int, 3>& alpha,
                                  int K, double tol) {
    CheckReport r;
    r.name = "weak_derivative";
    int order = 0, axis = -1;
    for (int a = 0; a < f.dim(); ++a) {
        order += alpha[a];
        if (alpha[a] > 0 && axis < 0) axis = a;
    }
    const auto Df = apply_derivative(f, alpha);
    const double n0 = sd::sd_norm(space, f, K).real();
    const double n1 = sd::sd_norm(space, Df, K).real();
    r.data["alpha"] = std::vector<int>(alpha.begin(), alpha.begin() + f.dim());
    r.data["norm_ratio"] = n0 > 0 ? n1 / n0 : (n1 > 0 ? kInf : 1.0);
    r.data["norm_ratio_asserted"] = false;
    if (order == 0) {
        r.data["max_residual"] = 0.0;
        return r;
    }
    const double bratio = boundary_ratio(f);
    r.data["boundary_ratio"] = bratio;
    auto peeled = alpha;
    peeled[axis] -= 1;
    const auto g = apply_derivative(f, peeled);
    const auto plan = space.plan(Df.grid(), Df.interp_order());
    const auto F = plan->apply(Df, K);
    std::vector<double> res(K);
#pragma omp parallel for schedule(dynamic)
    for (int k = 1; k <= K; ++k) res[k - 1] = std::abs(F[k - 1] + sd::derivative_pairing(space, k, axis, g));
    const double worst = *std::max_element(res.begin(), res.end());
    r.data["max_residual"] = worst;
    r.data["tolerance"] = tol;
    if (bratio > 1e-8) {
        r.asserted = false;
        r.data["note"] = "field does not vanish on the box boundary; duality not asserted";
        return r;
    }
    r.passed = worst <= tol;
    return r;
}

CheckReport check_sobolev_membership(const SdSpace& space, const SampledField& f, int kmax, double p, int K) {
    CheckReport r;
    r.name = "sobolev_membership_p" + exponent_name(p);
    const double c = space.e_norm_sup(K, conjugate_exponent(p));
    double agg = 0.0;
    for (const auto& alpha : multi_indices(f.dim(), kmax)) {
        const double v = apply_derivative(f, alpha).norm_p(p);
        agg = std::isinf(p) ? std::max(agg, v) : agg + std::pow(v, p);
    }
    const double wnorm = std::isinf(p) ? agg : std::pow(agg, 1.0 / p);
    const auto v = sd::sd_norm(space, f, K);
    const double rhs = c * wnorm + v.tail_bound;
    r.passed = v.real() <= rhs * (1.0 + 1e-12) + 1e-300;
    r.data = {{"p", exponent_json(p)}, {"kmax", kmax},       {"lhs", v.real()},
              {"rhs", rhs},            {"sobolev_norm", wnorm}, {"constant", c},
              {"tail", v.tail_bound}};
    return r;
}

CheckReport check_minkowski(const SdSpace& space, const SampledField& f, const SampledField& g, double p, int K) {
    CheckReport r;
    r.name = "minkowski_p" + exponent_name(p);
    const auto a = sd::sd_norm_p(space, f, p, K);
    const auto b = sd::sd_norm_p(space, g, p, K);
    const auto s = sd::sd_norm_p(space, f + g, p, K);
    const double rhs = a.real() + b.real() + a.tail_bound + b.tail_bound;
    r.passed = s.real() <= rhs * (1.0 + 1e-12) + 1e-300;
    r.data = {{"p", exponent_json(p)}, {"lhs", s.real()}, {"rhs", rhs}, {"norm_f", a.real()}, {"norm_g", b.real()}};
    return r;
}

CheckReport check_sdinfty_in_sdp(const SdSpace& space, const SampledField& f, double p, int K) {
    CheckReport r;
    r.name = "sdinfty_in_sdp_p" + exponent_name(p);
    const auto np = sd::sd_norm_p(space, f, p, K);
    const auto ni = sd::sd_norm_p(space, f, kInf, K);
    const double weight_sum = 1.0 - std::ldexp(1.0, -K);
    const double factor = std::pow(weight_sum, 1.0 / p);
    const double rhs = factor * ni.real() + np.tail_bound;
    r.passed = np.real() <= rhs * (1.0 + 1e-12) + 1e-300 && factor <= 1.0;
    r.data = {{"p", exponent_json(p)}, {"lhs", np.real()}, {"rhs", rhs}, {"sd_inf", ni.real()}, {"factor", factor}};
    return r;
}

double bmo_norm(const SampledField& g, int comp, int cube_samples, std::uint64_t seed) {
    const auto& grid = g.grid();
    const int dim = grid.dim;
    const auto& v = g.component(comp);
    if (std::all_of(v.begin(), v.end(), [&](double x) { return x == v.front(); })) return 0.0;
    int nmin = grid.n[0];
    for (int a = 1; a < dim; ++a) nmin = std::min(nmin, grid.n[a]);

    // Mean oscillation of the node values in the index cube [s, s + m) per axis.
    std::vector<double> vals;
    auto oscillation = [&](const std::array<int, 3>& s, int m) {
        vals.clear();
        std::array<int, 3> i{0, 0, 0};
        const int m1 = dim > 1 ? m : 1, m2 = dim > 2 ? m : 1;
        for (i[0] = 0; i[0] < m; ++i[0])
            for (i[1] = 0; i[1] < m1; ++i[1])
                for (i[2] = 0; i[2] < m2; ++i[2]) vals.push_back(v[grid.index(s[0] + i[0], s[1] + i[1], s[2] + i[2])]);
        const double mean = std::accumulate(vals.begin(), vals.end(), 0.0) / vals.size();
        double osc = 0.0;
        for (double x : vals) osc += std::abs(x - mean);
        return osc / vals.size();
    };

    double best = 0.0;
    for (int level = 0;; ++level) {
        const int m = nmin >> level;
        if (m < 2) break;
        std::array<int, 3> cnt{1, 1, 1};
        for (int a = 0; a < dim; ++a) cnt[a] = grid.n[a] / m;
        std::array<int, 3> t{0, 0, 0};
        for (t[0] = 0; t[0] < cnt[0]; ++t[0])
            for (t[1] = 0; t[1] < cnt[1]; ++t[1])
                for (t[2] = 0; t[2] < cnt[2]; ++t[2]) {
                    std::array<int, 3> s{0, 0, 0};
                    for (int a = 0; a < dim; ++a) s[a] = t[a] * m;
                    best = std::max(best, oscillation(s, m));
                }
    }
    std::mt19937_64 rng(seed);
    for (int q = 0; q < cube_samples; ++q) {
        // Log-uniform edge lengths so small cubes near singularities are sampled as often as large ones.
        const double u = std::uniform_real_distribution<double>(0.0, std::log(nmin / 2.0))(rng);
        const int m = std::clamp(static_cast<int>(std::lround(2.0 * std::exp(u))), 2, nmin);
        std::array<int, 3> s{0, 0, 0};
        for (int a = 0; a < dim; ++a) s[a] = std::uniform_int_distribution<int>(0, grid.n[a] - m)(rng);
        best = std::max(best, oscillation(s, m));
    }
    return best;
}

CheckReport check_bmo_inverse_pairing(const SdSpace& space, const std::vector<SampledField>& f_components, int K,
                                      int cube_samples, std::uint64_t seed, bool assert_duality, double tol) {
    const int n = space.dim();
    if (static_cast<int>(f_components.size()) != n)
        throw std::invalid_argument("inverse BMO pairing needs one vector field per dimension");
    CheckReport r;
    r.name = "bmo_inverse_pairing";
    std::vector<double> bmo;
    bool bmo_finite = true;
    for (int i = 0; i < n; ++i)
        for (int c = 0; c < f_components[i].components(); ++c) {
            bmo.push_back(bmo_norm(f_components[i], c, cube_samples, seed + 7919u * (i * n + c)));
            bmo_finite = bmo_finite && std::isfinite(bmo.back());
        }
    SampledField u = f_components[0].derivative_field(0);
    for (int i = 1; i < n; ++i) u += f_components[i].derivative_field(i);
    const auto plan = space.plan(u.grid(), u.interp_order());
    const auto Fu = plan->apply(u, K);
    double sup = 0.0;
    bool finite = true;
    for (const auto& z : Fu) {
        finite = finite && std::isfinite(z.real()) && std::isfinite(z.imag());
        sup = std::max(sup, std::abs(z));
    }
    std::vector<double> res(K);
#pragma omp parallel for schedule(dynamic)
    for (int k = 1; k <= K; ++k) {
        cplx s = 0.0;
        for (int i = 0; i < n; ++i)
            s += functional_F(space, k, f_components[i].derivative_field(i)) +
                 sd::derivative_pairing(space, k, i, f_components[i]);
        res[k - 1] = std::abs(s);
    }
    const double worst = *std::max_element(res.begin(), res.end());
    r.passed = finite && bmo_finite && (!assert_duality || worst <= tol);
    r.data = {{"bmo_norms", bmo},
              {"sup_F", sup},
              {"sd_inf", sup},
              {"finite", finite},
              {"max_duality_residual", worst},
              {"duality_asserted", assert_duality}};
    return r;
}

GridSpec corpus_grid(const CorpusSpec& spec, bool punctured) {
    if (spec.dim < 1 || spec.dim > 3) throw ConfigError("corpus dim must be 1, 2 or 3");
    if (spec.points < 4) throw ConfigError("corpus points must be at least 4");
    if (!(spec.hi > spec.lo)) throw ConfigError("corpus box needs lo < hi");
    if (!punctured) return GridSpec::uniform(spec.dim, spec.points, spec.lo, spec.hi);
    for (int pts = spec.points; pts <= spec.points + 1; ++pts) {
        const double h = (spec.hi - spec.lo) / (pts - 1);
        const double s = -spec.lo / h;
        if (std::abs(s - std::floor(s) - 0.5) < 1e-9) return GridSpec::uniform(spec.dim, pts, spec.lo, spec.hi);
    }
    throw ConfigError("cannot place x1 = 0 on a cell midpoint for this corpus box");
}

CorpusSpec default_corpus_spec(int dim) {
    CorpusSpec s;
    s.dim = dim;
    s.points = 481;
    s.lo = -4.0;
    s.hi = 4.0;
    auto add = [&](std::string name, std::string kind, std::map<std::string, std::string> p) {
        s.items.push_back({std::move(name), std::move(kind), std::move(p)});
    };
    add("gaussian-unit", "gaussian", {{"center", "0 0 0"}, {"width", "1"}});
    add("gaussian-narrow", "gaussian", {{"center", "0.3 -0.2 0.1"}, {"width", "0.3"}});
    add("gaussian-shifted", "gaussian", {{"center", "1.2 0.7 -0.5"}, {"width", "0.6"}, {"amplitudes", "1 -0.5 0.25"}});
    add("gaussian-wide", "gaussian", {{"center", "-0.4 0.2 0"}, {"width", "0.9"}, {"amplitudes", "0.5 2 1"}});
    add("gaussian-offaxis", "gaussian", {{"center", "-1.5 -1 0.3"}, {"width", "0.45"}, {"amplitudes", "-1 1 1"}});
    add("gaussian-tall", "gaussian", {{"center", "0.5 0.5 0.5"}, {"width", "0.2"}, {"amplitudes", "5 5 5"}});
    add("bump-unit", "bump", {{"center", "0 0 0"}, {"radius", "1"}});
    add("bump-small", "bump", {{"center", "0.25 0.1 0"}, {"radius", "0.5"}});
    add("bump-large", "bump", {{"center", "-0.3 0.4 0"}, {"radius", "2"}, {"amplitudes", "1 -1 1"}});
    add("bump-shifted", "bump", {{"center", "1.5 -1 0.5"}, {"radius", "0.8"}, {"amplitudes", "2 0.5 1"}});
    add("bump-corner", "bump", {{"center", "-2 2 -1"}, {"radius", "1.2"}, {"amplitudes", "0.3 1 0.3"}});
    add("oscillatory-low", "oscillatory", {{"frequency", "1 0.5 0"}, {"width", "1"}});
    add("oscillatory-mid", "oscillatory", {{"frequency", "3 -2 1"}, {"width", "0.8"}});
    add("oscillatory-high", "oscillatory", {{"frequency", "8 0 0"}, {"width", "0.7"}, {"amplitudes", "1 0.5 0.25"}});
    add("oscillatory-diag", "oscillatory", {{"frequency", "4 4 4"}, {"width", "0.6"}, {"center", "0.2 0.1 0"}});
    add("oscillatory-slow", "oscillatory", {{"frequency", "0.5 0.25 0"}, {"width", "1.3"}, {"amplitudes", "-1 2 1"}});
    add("translates-x", "translate-sequence", {{"center", "-1 0 0"}, {"radius", "0.5"}, {"shift", "0.5 0 0"}, {"steps", "7"}});
    add("translates-diag", "translate-sequence",
        {{"center", "0 0 0"}, {"radius", "0.4"}, {"shift", "0.4 0.4 0.4"}, {"steps", "7"}});
    add("bmo-log", "bmo-log", {{"cutoff", "3"}});
    add("bmo-log-narrow", "bmo-log", {{"cutoff", "1.5"}, {"amplitudes", "1 -1 1"}});
    return s;
}

namespace {

std::vector<double> parse_list(const std::string& key, const std::string& text) {
    auto cfg = KeyValueConfig::parse("v = " + text + "\n", key);
    return cfg.get_doubles("v", {});
}

std::vector<double> param_list(const GeneratorSpec& g, const std::string& key, std::vector<double> fallback) {
    const auto it = g.params.find(key);
    if (it == g.params.end()) return fallback;
    auto v = parse_list(g.name + "." + key, it->second);
    if (v.empty()) throw ConfigError(g.name + ": empty list for '" + key + "'");
    return v;
}

double param(const GeneratorSpec& g, const std::string& key, double fallback) {
    const auto v = param_list(g, key, {fallback});
    if (v.size() != 1) throw ConfigError(g.name + ": '" + key + "' must be a single number");
    return v[0];
}

const std::vector<std::string> kKinds{"gaussian", "bump", "oscillatory", "translate-sequence", "bmo-log"};

const std::map<std::string, std::vector<std::string>> kParams{
    {"gaussian", {"center", "width", "amplitudes"}},
    {"bump", {"center", "radius", "amplitudes"}},
    {"oscillatory", {"center", "frequency", "width", "amplitudes"}},
    {"translate-sequence", {"center", "radius", "shift", "steps", "amplitudes"}},
    {"bmo-log", {"cutoff", "amplitudes"}}};

}  // namespace

CorpusSpec load_corpus_spec(const KeyValueConfig& cfg) {
    CorpusSpec s;
    s.dim = static_cast<int>(cfg.get_int("corpus.dim", s.dim));
    s.points = static_cast<int>(cfg.get_int("corpus.points", s.points));
    s.lo = cfg.get_double("corpus.lo", s.lo);
    s.hi = cfg.get_double("corpus.hi", s.hi);
    s.K = static_cast<int>(cfg.get_int("corpus.K", s.K));
    s.seed = static_cast<std::uint64_t>(cfg.get_int("corpus.seed", static_cast<long long>(s.seed)));
    s.bmo_samples = static_cast<int>(cfg.get_int("corpus.bmo_samples", s.bmo_samples));
    s.frequencies = cfg.get_doubles("corpus.frequencies", s.frequencies);
    for (const auto& key : cfg.keys("corpus"))
        if (key != "dim" && key != "points" && key != "lo" && key != "hi" && key != "K" && key != "seed" &&
            key != "bmo_samples" && key != "frequencies")
            throw ConfigError(cfg.origin() + ": unknown key 'corpus." + key + "'");
    for (const auto& section : cfg.sections()) {
        if (section == "corpus") continue;
        GeneratorSpec g;
        g.name = section;
        g.kind = cfg.get_string(section + ".generator");
        if (std::find(kKinds.begin(), kKinds.end(), g.kind) == kKinds.end())
            throw ConfigError(cfg.origin() + ": section '" + section + "' has unknown generator '" + g.kind + "'");
        const auto& allowed = kParams.at(g.kind);
        for (const auto& key : cfg.keys(section)) {
            if (key == "generator") continue;
            if (std::find(allowed.begin(), allowed.end(), key) == allowed.end())
                throw ConfigError(cfg.origin() + ": generator '" + g.kind + "' has no parameter '" + key + "'");
            g.params[key] = cfg.get_string(section + "." + key);
        }
        s.items.push_back(std::move(g));
    }
    if (s.K < 1) throw ConfigError(cfg.origin() + ": corpus.K must be positive");
    if (s.bmo_samples < 0) throw ConfigError(cfg.origin() + ": corpus.bmo_samples must be nonnegative");
    if (s.frequencies.size() < 2) throw ConfigError(cfg.origin() + ": corpus.frequencies needs at least two entries");
    corpus_grid(s, false);
    return s;
}

std::vector<CorpusItem> build_corpus(const CorpusSpec& spec) {
    const int n = spec.dim;
    std::vector<CorpusItem> out;
    for (const auto& g : spec.items) {
        CorpusItem item{g.name, g.kind, {}};
        const auto amps = param_list(g, "amplitudes", {1.0});
        const auto center = param_list(g, "center", {0.0});
        auto vector_field = [&](const GridSpec& grid, const std::function<double(std::span<const double>)>& s) {
            return SampledField::from_function(grid, n, [&](auto x, auto v) {
                const double base = s(x);
                for (int c = 0; c < n; ++c) v[c] = weight(amps, c) * base;
            });
        };
        if (g.kind == "gaussian") {
            const double w = param(g, "width", 1.0);
            if (!(w > 0)) throw ConfigError(g.name + ": width must be positive");
            item.fields.push_back(vector_field(corpus_grid(spec, false), [&](auto x) {
                return std::exp(-0.5 * sq_dist(x, center, n) / (w * w));
            }));
        } else if (g.kind == "bump") {
            const double rad = param(g, "radius", 1.0);
            if (!(rad > 0)) throw ConfigError(g.name + ": radius must be positive");
            item.fields.push_back(vector_field(corpus_grid(spec, false), [&](auto x) {
                return bump_profile(sq_dist(x, center, n) / (rad * rad));
            }));
        } else if (g.kind == "oscillatory") {
            const auto freq = param_list(g, "frequency", {1.0});
            const double w = param(g, "width", 1.0);
            if (!(w > 0)) throw ConfigError(g.name + ": width must be positive");
            item.fields.push_back(vector_field(corpus_grid(spec, false), [&](auto x) {
                double phase = 0.0;
                for (int a = 0; a < n; ++a) phase += weight(freq, a) * x[a];
                return std::cos(phase) * std::exp(-0.5 * sq_dist(x, center, n) / (w * w));
            }));
        } else if (g.kind == "translate-sequence") {
            const double rad = param(g, "radius", 0.5);
            const auto shift = param_list(g, "shift", {0.5, 0.0, 0.0});
            const int steps = static_cast<int>(param(g, "steps", 6));
            if (!(rad > 0) || steps < 1) throw ConfigError(g.name + ": needs radius > 0 and steps >= 1");
            for (int m = 0; m <= steps; ++m) {
                std::vector<double> c(n);
                for (int a = 0; a < n; ++a) c[a] = weight(center, a) + m * weight(shift, a);
                item.fields.push_back(vector_field(corpus_grid(spec, false), [&](auto x) {
                    return bump_profile(sq_dist(x, c, n) / (rad * rad));
                }));
            }
        } else if (g.kind == "bmo-log") {
            const double R = param(g, "cutoff", 3.0);
            if (!(R > 0)) throw ConfigError(g.name + ": cutoff must be positive");
            item.fields.push_back(vector_field(corpus_grid(spec, true), [&](auto x) {
                const double r = std::sqrt(sq_dist(x, {}, n));
                return std::log(std::abs(x[0])) * smooth_step(2.0 * r / R - 1.0);
            }));
        } else {
            throw ConfigError("unknown generator '" + g.kind + "'");
        }
        for (const auto& f : item.fields) f.validate();
        out.push_back(std::move(item));
    }
    return out;
}

GridSpec compactness_grid(int dim) {
    GridSpec g;
    g.dim = dim;
    g.n = {2049, 1, 1};
    g.lo = {-1.5, 0.0, 0.0};
    g.h = {3.0 / 2048, 1.0, 1.0};
    for (int a = 1; a < dim; ++a) {
        g.n[a] = 121;
        g.lo[a] = -1.5;
        g.h[a] = 3.0 / 120;
    }
    return g;
}

namespace {

bool smooth_kind(const std::string& kind) { return kind == "gaussian" || kind == "bump" || kind == "oscillatory"; }

}  // namespace

json run_embeddings_suite(const CorpusSpec& spec, bool& all_passed) {
    const int K = spec.K;
    SdSpace space(spec.dim, K);
    const auto corpus = build_corpus(spec);
    const int N = static_cast<int>(corpus.size());
    std::vector<json> item_reports(N);
    std::vector<char> item_ok(N, 1);

#pragma omp parallel for schedule(dynamic)
    for (int i = 0; i < N; ++i) {
        const auto& item = corpus[i];
        std::vector<CheckReport> checks;
        for (const auto& f : item.fields)
            for (double q : {1.0, 2.0, kInf}) checks.push_back(check_embedding_lp(space, f, q, K));
        const auto& f = item.fields.front();
        checks.push_back(check_sdinfty_in_sdp(space, f, 2.0, K));
        for (double p : {1.0, 2.0, kInf}) {
            checks.push_back(check_minkowski(space, f, f, p, K));
            checks.push_back(check_minkowski(space, f, -1.0 * f, p, K));
        }
        if (smooth_kind(item.kind)) {
            for (double p : {2.0, kInf}) checks.push_back(check_sobolev_membership(space, f, 1, p, K));
            checks.push_back(check_weak_derivative(space, f, {0, 0, 0}, K));
            for (int a = 0; a < spec.dim; ++a) {
                std::array<int, 3> alpha{0, 0, 0};
                alpha[a] = 1;
                checks.push_back(check_weak_derivative(space, f, alpha, K));
            }
        }
        if (item.kind == "translate-sequence") checks.push_back(check_translates(space, item.fields, std::min(K, 100), K));
        if (item.kind == "bmo-log") {
            std::vector<SampledField> fs(spec.dim, SampledField(f.grid(), spec.dim, f.interp_order()));
            fs[0] = f;
            checks.push_back(check_bmo_inverse_pairing(space, fs, K, spec.bmo_samples, spec.seed + i, false));
        }
        json arr = json::array();
        for (const auto& c : checks) {
            arr.push_back(to_json(c));
            if (c.asserted && !c.passed) item_ok[i] = 0;
        }
        item_reports[i] = {{"name", item.name}, {"generator", item.kind}, {"passed", item_ok[i] != 0}, {"checks", arr}};
    }

    json report;
    report["K"] = K;
    report["dim"] = spec.dim;
    report["seed"] = spec.seed;
    json consts = json::object();
    for (double q : {1.0, 2.0, kInf}) {
        const double qp = conjugate_exponent(q);
        const double c = space.e_norm_sup(K, qp);
        consts[exponent_name(q)] = {{"c_q", c}, {"unit_constant_holds", c < 1.0}};
    }
    report["embedding_constants"] = consts;
    report["items"] = item_reports;

    // Cross-item Minkowski pairs and the compactness surrogate.
    json extra = json::array();
    bool extra_ok = true;
    for (int i = 0; i < N; ++i) {
        const int j = (i + 1) % N;
        const auto& f = corpus[i].fields.front();
        const auto& g = corpus[j].fields.front();
        if (!f.grid().same_as(g.grid())) continue;
        const auto c = check_minkowski(space, f, g, 2.0, K);
        extra_ok = extra_ok && c.passed;
        auto js = to_json(c);
        js["pair"] = {corpus[i].name, corpus[j].name};
        extra.push_back(js);
    }
    std::vector<double> center(spec.dim, 0.0);
    center[0] = 0.3;
    if (spec.dim > 1) center[1] = 0.1;
    const auto seq = modulated_sequence(compactness_grid(spec.dim), spec.frequencies, center, 1.0);
    const auto comp = check_compactness(space, seq, K);
    extra_ok = extra_ok && comp.passed;
    auto cj = to_json(comp);
    cj["data"]["frequencies"] = spec.frequencies;
    extra.push_back(cj);
    report["suite_checks"] = extra;

    all_passed = extra_ok && std::all_of(item_ok.begin(), item_ok.end(), [](char c) { return c != 0; });
    report["passed"] = all_passed;
    return report;
}

}  // namespace sdnse::emb
