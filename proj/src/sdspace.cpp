#include "sdnse/sdspace.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

#include "sdnse/quadrature.hpp"

namespace sdnse::sd {

namespace {

// 1-D GL nodes over [lo, hi] with breakpoints, each piece cut into panels no
// longer than max_panel.
quad::NodeSet panel_nodes(double lo, double hi, std::vector<double> breaks, double max_panel) {
    breaks.push_back(lo);
    breaks.push_back(hi);
    std::sort(breaks.begin(), breaks.end());
    std::vector<double> edges;
    for (double b : breaks) {
        if (b < lo || b > hi) continue;
        if (!edges.empty() && b - edges.back() <= 1e-14 * (hi - lo)) continue;
        edges.push_back(b);
    }
    if (edges.back() < hi) edges.back() = hi;
    std::vector<double> fine;
    for (std::size_t p = 0; p + 1 < edges.size(); ++p) {
        const int m = std::max(1, static_cast<int>(std::ceil((edges[p + 1] - edges[p]) / max_panel)));
        for (int j = 1; j < m; ++j) fine.push_back(edges[p] + (edges[p + 1] - edges[p]) * j / m);
        if (p + 2 < edges.size()) fine.push_back(edges[p + 1]);
    }
    return quad::composite_gl8(lo, hi, fine);
}

constexpr int kPanelsPerCube = 16;

}  // namespace

int max_level_for(int K) {
    std::int64_t best = 1;
    for (int k = 1; k <= K; ++k) best = std::max(best, testfns::unpair_index(k).first);
    return static_cast<int>(best);
}

FunctionalPlan::FunctionalPlan(const GridSpec& grid, int interp_order, const TestFunctionFamily& family,
                               const std::vector<CubeIndex>& cubes)
    : grid_(grid), interp_order_(interp_order), cubes_(cubes.size()) {
    grid_.validate();
    if (grid_.dim != family.dim()) throw std::invalid_argument("grid dimension differs from the test-function family");
    for (int a = 0; a < grid_.dim; ++a)
        if (grid_.n[a] < 2) throw std::invalid_argument("functional plan needs at least two points per axis");
    const int dim = grid_.dim;
    const int ncubes = static_cast<int>(cubes.size());
#pragma omp parallel for schedule(dynamic)
    for (int idx = 0; idx < ncubes; ++idx) {
        const auto& cube = cubes[idx];
        auto& cp = cubes_[idx];
        const auto& prm = family.params(static_cast<int>(cube.l));
        for (int a = 0; a < 3; ++a) {
            auto& aw = cp.axis[a];
            if (a >= dim) {
                aw.start = 0;
                aw.plain = {1.0};
                aw.weighted = {cplx(1.0)};
                continue;
            }
            if (cube.edge < grid_.h[a]) cp.under_resolved = true;
            const double lo = std::max(cube.lo(a), grid_.lo[a]);
            const double hi = std::min(cube.hi(a), grid_.hi(a));
            if (!(hi > lo)) {
                cp.disjoint = true;
                continue;
            }
            std::vector<double> breaks;
            const int i0 = static_cast<int>(std::ceil((lo - grid_.lo[a]) / grid_.h[a]));
            const int i1 = static_cast<int>(std::floor((hi - grid_.lo[a]) / grid_.h[a]));
            for (int i = std::max(i0, 0); i <= std::min(i1, grid_.n[a] - 1); ++i) breaks.push_back(grid_.coord(a, i));
            breaks.push_back(cube.center_d[a] - prm.core_half_width());
            breaks.push_back(cube.center_d[a] + prm.core_half_width());
            const auto ns = panel_nodes(lo, hi, breaks, cube.edge / kPanelsPerCube);
            std::vector<double> plain(grid_.n[a], 0.0);
            std::vector<cplx> weighted(grid_.n[a], cplx{});
            int first = grid_.n[a], last = -1;
            for (std::size_t q = 0; q < ns.x.size(); ++q) {
                const auto st = interpolation_stencil(grid_.n[a], grid_.lo[a], grid_.h[a], ns.x[q], interp_order_);
                const cplx xi = family.xi(cube, a, ns.x[q]);
                for (int s = 0; s < st.count; ++s) {
                    plain[st.start + s] += ns.w[q] * st.w[s];
                    weighted[st.start + s] += ns.w[q] * st.w[s] * xi;
                }
                first = std::min(first, st.start);
                last = std::max(last, st.start + st.count - 1);
            }
            aw.start = first;
            aw.plain.assign(plain.begin() + first, plain.begin() + last + 1);
            aw.weighted.assign(weighted.begin() + first, weighted.begin() + last + 1);
        }
    }
}

cplx FunctionalPlan::apply_one(int k, const SampledField& f) const {
    if (k < 1 || k > size()) throw std::out_of_range("functional index outside the plan");
    const auto& cp = cubes_[k - 1];
    if (cp.disjoint) return {};
    cplx total{};
    const int dim = grid_.dim;
    for (int m = 0; m < dim; ++m) {
        const auto& v = f.component(m);
        auto w = [&](int a, int i) -> cplx {
            const auto& aw = cp.axis[a];
            return a == m ? aw.weighted[i] : cplx(aw.plain[i]);
        };
        const auto& A0 = cp.axis[0];
        const auto& A1 = cp.axis[1];
        const auto& A2 = cp.axis[2];
        cplx acc{};
        for (std::size_t i = 0; i < A0.plain.size(); ++i) {
            cplx acc1{};
            for (std::size_t j = 0; j < A1.plain.size(); ++j) {
                cplx acc2{};
                for (std::size_t q = 0; q < A2.plain.size(); ++q) {
                    const auto idx = grid_.index(A0.start + static_cast<int>(i), A1.start + static_cast<int>(j),
                                                 A2.start + static_cast<int>(q));
                    acc2 += w(2, static_cast<int>(q)) * v[idx];
                }
                acc1 += w(1, static_cast<int>(j)) * acc2;
            }
            acc += w(0, static_cast<int>(i)) * acc1;
        }
        total += acc;
    }
    return total;
}

std::vector<cplx> FunctionalPlan::apply(const SampledField& f, int K) const {
    if (K > size()) throw std::out_of_range("K exceeds the functional plan size");
    if (!grid_.same_as(f.grid())) throw std::invalid_argument("field grid differs from the plan grid");
    if (f.components() != grid_.dim) throw std::invalid_argument("field must have one component per dimension");
    std::vector<cplx> out(K);
#pragma omp parallel for schedule(dynamic)
    for (int k = 1; k <= K; ++k) out[k - 1] = apply_one(k, f);
    return out;
}

int FunctionalPlan::under_resolved_count(int K) const {
    int c = 0;
    for (int k = 0; k < K && k < size(); ++k)
        if (cubes_[k].under_resolved && !cubes_[k].disjoint) ++c;
    return c;
}

SdSpace::SdSpace(int dim, int K_max, testfns::FamilySettings settings) : dim_(dim) {
    if (dim < 1 || dim > 3) throw std::invalid_argument("dimension must be 1, 2 or 3");
    if (K_max < 1) throw std::invalid_argument("K must be positive");
    cubes_.reserve(K_max);
    for (int k = 1; k <= K_max; ++k) cubes_.push_back(CubeIndex::from_k(k, dim));
    family_ = std::make_unique<TestFunctionFamily>(dim, max_level_for(K_max), settings);
}

std::shared_ptr<const FunctionalPlan> SdSpace::plan(const GridSpec& g, int interp_order) const {
    const auto key = std::make_tuple(g.dim, g.n[0], g.n[1], g.n[2], g.lo[0], g.lo[1], g.lo[2], g.h[0], g.h[1], g.h[2],
                                     interp_order);
    std::lock_guard lock(mutex_);
    auto it = plans_.find(key);
    if (it != plans_.end()) return it->second;
    auto p = std::make_shared<const FunctionalPlan>(g, interp_order, *family_, cubes_);
    plans_.emplace(key, p);
    return p;
}

double SdSpace::e_norm(int k, double q) const {
    if (!(q >= 1.0)) throw std::invalid_argument("norm exponent must be >= 1");
    {
        std::lock_guard lock(mutex_);
        auto it = enorm_cache_.find({k, q});
        if (it != enorm_cache_.end()) return it->second;
    }
    const double v = compute_e_norm(k, q);
    std::lock_guard lock(mutex_);
    enorm_cache_.emplace(std::make_pair(k, q), v);
    return v;
}

double SdSpace::compute_e_norm(int k, double q) const {
    const auto& cube = this->cube(k);
    const auto& prm = family_->params(static_cast<int>(cube.l));
    const double hw = prm.h_half_width();
    // The axis profile depends on the centre only through the factor 3^{-|centre|},
    // so evaluate it with the profile of the cube's own centre directly.
    const auto ns = panel_nodes(-hw, hw, {-prm.core_half_width(), prm.core_half_width()}, cube.edge / kPanelsPerCube);
    std::vector<double> mod2(ns.x.size());
    for (std::size_t i = 0; i < ns.x.size(); ++i)
        mod2[i] = std::norm(family_->xi(cube, 0, cube.center_d[0] + ns.x[i]));
    const int n = dim_;
    if (std::isinf(q)) {
        double mx = 0.0;
        for (int j = 0; j <= 2000; ++j)
            mx = std::max(mx, std::abs(family_->xi(cube, 0, cube.center_d[0] - hw + 2 * hw * j / 2000.0)));
        for (double v : mod2) mx = std::max(mx, std::sqrt(v));
        return std::sqrt(static_cast<double>(n)) * mx;
    }
    if (q == 2.0) {
        double i2 = 0.0;
        for (std::size_t i = 0; i < ns.x.size(); ++i) i2 += ns.w[i] * mod2[i];
        return std::sqrt(n * std::pow(cube.edge, n - 1) * i2);
    }
    const std::size_t P = ns.x.size();
    double acc = 0.0;
    if (n == 1) {
        for (std::size_t i = 0; i < P; ++i) acc += ns.w[i] * std::pow(mod2[i], q / 2);
    } else if (n == 2) {
        for (std::size_t i = 0; i < P; ++i)
            for (std::size_t j = 0; j < P; ++j) acc += ns.w[i] * ns.w[j] * std::pow(mod2[i] + mod2[j], q / 2);
    } else {
        for (std::size_t i = 0; i < P; ++i)
            for (std::size_t j = 0; j < P; ++j) {
                double s = 0.0;
                for (std::size_t l = 0; l < P; ++l) s += ns.w[l] * std::pow(mod2[i] + mod2[j] + mod2[l], q / 2);
                acc += ns.w[i] * ns.w[j] * s;
            }
    }
    return std::pow(acc, 1.0 / q);
}

double SdSpace::e_norm_sup(int K, double q) const {
    std::vector<double> v(K);
#pragma omp parallel for schedule(dynamic)
    for (int k = 1; k <= K; ++k) v[k - 1] = e_norm(k, q);
    return *std::max_element(v.begin(), v.end());
}

double functional_bound(const SampledField& f) { return f.component_l1_sum() / f.dim(); }

cplx functional_F(const SdSpace& space, int k, const SampledField& f, bool* under_resolved) {
    const auto plan = space.plan(f.grid(), f.interp_order());
    if (f.components() != f.dim()) throw std::invalid_argument("field must have one component per dimension");
    if (under_resolved) *under_resolved = plan->under_resolved(k);
    return plan->apply_one(k, f);
}

namespace {

void check_K(const SdSpace& space, int K) {
    if (K < 1) throw std::invalid_argument("K must be positive");
    if (K > space.K_max()) throw std::invalid_argument("K exceeds the SD space truncation");
}

void add_resolution_warning(const FunctionalPlan& plan, int K, std::vector<std::string>& w) {
    const int c = plan.under_resolved_count(K);
    if (c > 0)
        w.push_back(std::to_string(c) + " of " + std::to_string(K) +
                    " cubes are smaller than the grid spacing (under-resolved quadrature)");
}

}  // namespace

SdValue sd_inner(const SdSpace& space, const SampledField& f, const SampledField& g, int K) {
    check_K(space, K);
    if (!f.grid().same_as(g.grid())) throw std::invalid_argument("sd_inner needs fields on the same grid");
    if (f.interp_order() != g.interp_order()) throw std::invalid_argument("sd_inner needs matching interpolation orders");
    const auto plan = space.plan(f.grid(), f.interp_order());
    const auto Ff = plan->apply(f, K);
    const auto Fg = plan->apply(g, K);
    SdValue out;
    out.K = K;
    for (int k = K; k >= 1; --k) out.value += std::ldexp(1.0, -k) * Ff[k - 1] * std::conj(Fg[k - 1]);
    out.tail_bound = std::ldexp(1.0, -K) * functional_bound(f) * functional_bound(g);
    add_resolution_warning(*plan, K, out.warnings);
    return out;
}

SdValue sd_norm_p(const SdSpace& space, const SampledField& f, double p, int K) {
    if (!(p >= 1.0)) throw std::invalid_argument("SD^p norm needs p >= 1");
    check_K(space, K);
    const auto plan = space.plan(f.grid(), f.interp_order());
    const auto F = plan->apply(f, K);
    const double B = functional_bound(f);
    SdValue out;
    out.K = K;
    if (std::isinf(p)) {
        double mx = 0.0;
        for (const auto& v : F) mx = std::max(mx, std::abs(v));
        out.value = mx;
        out.tail_bound = std::max(0.0, B - mx);
    } else {
        double s = 0.0;
        for (int k = K; k >= 1; --k) {
            const double a = std::abs(F[k - 1]);
            s += std::ldexp(1.0, -k) * (p == 2.0 ? a * a : std::pow(a, p));
        }
        out.value = p == 2.0 ? std::sqrt(s) : std::pow(s, 1.0 / p);
        out.tail_bound = std::pow(2.0, -K / p) * B;
    }
    add_resolution_warning(*plan, K, out.warnings);
    return out;
}

namespace {

// Inclusive prefix sums (or suffix sums when reverse) of one component times the cell volume.
std::vector<double> cumulative_sums(const SampledField& f, int comp, bool reverse) {
    const auto& g = f.grid();
    std::vector<double> s(f.component(comp));
    const double dv = g.cell_volume();
    for (double& v : s) v *= dv;
    for (int a = 0; a < g.dim; ++a) {
        std::size_t stride = 1;
        for (int b = g.dim - 1; b > a; --b) stride *= g.n[b];
        const int n = g.n[a];
        for (std::size_t base = 0; base < s.size(); ++base) {
            if ((base / stride) % n != 0) continue;
            if (!reverse)
                for (int i = 1; i < n; ++i) s[base + i * stride] += s[base + (i - 1) * stride];
            else
                for (int i = n - 2; i >= 0; --i) s[base + i * stride] += s[base + (i + 1) * stride];
        }
    }
    return s;
}

}  // namespace

double alexiewicz_norm(const SampledField& f, int comp) {
    const auto& g = f.grid();
    const int dim = g.dim;
    for (int a = 1; a < dim; ++a)
        if (std::abs(g.h[a] - g.h[0]) > 1e-9 * g.h[0])
            throw std::invalid_argument("alexiewicz_norm needs equal spacing on every axis");
    int type = -1;  // 0: origin on a node, 1: origin on a cell midpoint
    std::array<int, 3> c{0, 0, 0};
    int mmax = std::numeric_limits<int>::max();
    for (int a = 0; a < dim; ++a) {
        const double p = -g.lo[a] / g.h[a];
        int t;
        if (std::abs(p - std::round(p)) < 1e-9) {
            t = 0;
            c[a] = static_cast<int>(std::lround(p));
            mmax = std::min({mmax, c[a], g.n[a] - 1 - c[a]});
        } else if (std::abs(p - std::floor(p) - 0.5) < 1e-9) {
            t = 1;
            c[a] = static_cast<int>(std::floor(p));
            mmax = std::min({mmax, c[a] + 1, g.n[a] - 1 - c[a]});
        } else {
            throw std::invalid_argument("alexiewicz_norm needs the origin on a node or cell midpoint");
        }
        if (type >= 0 && t != type) throw std::invalid_argument("alexiewicz_norm: mixed origin placement across axes");
        type = t;
    }
    if (mmax < 0) throw std::invalid_argument("alexiewicz_norm needs the origin inside the box");
    const auto P = cumulative_sums(f, comp, false);
    auto at = [&](const std::array<int, 3>& i) -> double {
        for (int a = 0; a < dim; ++a)
            if (i[a] < 0) return 0.0;
        return P[g.index(i[0], i[1], i[2])];
    };
    double best = 0.0;
    const int m0 = type == 0 ? 0 : 1;
    for (int m = m0; m <= mmax; ++m) {
        std::array<int, 3> lo{0, 0, 0}, hi{0, 0, 0};
        for (int a = 0; a < dim; ++a) {
            lo[a] = type == 0 ? c[a] - m : c[a] - m + 1;
            hi[a] = c[a] + m;
        }
        double s = 0.0;
        for (int mask = 0; mask < (1 << dim); ++mask) {
            std::array<int, 3> i{0, 0, 0};
            int sign = 1;
            for (int a = 0; a < dim; ++a) {
                if (mask & (1 << a)) {
                    i[a] = lo[a] - 1;
                    sign = -sign;
                } else {
                    i[a] = hi[a];
                }
            }
            s += sign * at(i);
        }
        best = std::max(best, std::abs(s));
    }
    return best;
}

double anchored_box_norm(const SampledField& f, int comp) {
    const auto S = cumulative_sums(f, comp, true);
    double best = 0.0;
    for (double v : S) best = std::max(best, std::abs(v));
    return best;
}

double vitali_variation(const SampledField& field, int comp, bool zero_extend) {
    const auto& g = field.grid();
    const int dim = g.dim;
    const auto& v = field.component(comp);
    auto value = [&](const std::array<int, 3>& i) -> double {
        for (int a = 0; a < dim; ++a)
            if (i[a] < 0) return 0.0;
        return v[g.index(i[0], i[1], i[2])];
    };
    const int off = zero_extend ? 0 : 1;
    std::array<int, 3> lo{0, 0, 0}, hi{0, 0, 0};
    for (int a = 0; a < dim; ++a) {
        lo[a] = off;
        hi[a] = g.n[a] - 1;
    }
    double total = 0.0;
    std::array<int, 3> i{0, 0, 0};
    for (i[0] = lo[0]; i[0] <= hi[0]; ++i[0])
        for (i[1] = lo[1]; i[1] <= hi[1]; ++i[1])
            for (i[2] = lo[2]; i[2] <= hi[2]; ++i[2]) {
                double d = 0.0;
                for (int mask = 0; mask < (1 << dim); ++mask) {
                    std::array<int, 3> j = i;
                    int sign = 1;
                    for (int a = 0; a < dim; ++a)
                        if (mask & (1 << a)) {
                            j[a] -= 1;
                            sign = -sign;
                        }
                    d += sign * value(j);
                }
                total += std::abs(d);
            }
    return total;
}

HkReport hk_pairing_bound(const SampledField& f, const SampledField& g, int fcomp, int gcomp) {
    if (!f.grid().same_as(g.grid())) throw std::invalid_argument("hk_pairing_bound needs a shared grid");
    HkReport r;
    const auto& fv = f.component(fcomp);
    const auto& gv = g.component(gcomp);
    double s = 0.0;
    for (std::size_t i = 0; i < fv.size(); ++i) s += fv[i] * gv[i];
    r.lhs = std::abs(s * f.grid().cell_volume());
    r.anchored = anchored_box_norm(f, fcomp);
    try {
        r.alexiewicz = alexiewicz_norm(f, fcomp);
    } catch (const std::invalid_argument&) {
        r.alexiewicz = std::numeric_limits<double>::quiet_NaN();
    }
    r.variation = vitali_variation(g, gcomp, false);
    r.variation_zero_extended = vitali_variation(g, gcomp, true);
    r.rhs = r.anchored * r.variation_zero_extended;
    double gmax = 0.0, face = 0.0;
    const auto& grid = g.grid();
    for (std::size_t i = 0; i < gv.size(); ++i) {
        gmax = std::max(gmax, std::abs(gv[i]));
        const auto ijk = grid.unflatten(i);
        for (int a = 0; a < grid.dim; ++a)
            if (ijk[a] == 0) face = std::max(face, std::abs(gv[i]));
    }
    r.vanishes_at_lower_faces = face <= 1e-8 * gmax;
    r.satisfied = r.lhs <= r.rhs * (1.0 + 1e-8) + 1e-300;
    return r;
}

double e_variation(const SdSpace& space, int k, int m, const GridSpec& box) {
    const auto& cube = space.cube(k);
    const auto& prm = space.family().params(static_cast<int>(cube.l));
    for (int a = 0; a < cube.dim; ++a)
        if (!(std::min(cube.hi(a), box.hi(a)) > std::max(cube.lo(a), box.lo[a]))) return 0.0;
    const double lo = std::max(cube.lo(m), box.lo[m]);
    const double hi = std::min(cube.hi(m), box.hi(m));
    const auto ns = panel_nodes(lo, hi, {cube.center_d[m] - prm.core_half_width(), cube.center_d[m] + prm.core_half_width()},
                                cube.edge / kPanelsPerCube);
    double tv = std::abs(space.family().xi(cube, m, lo)) + std::abs(space.family().xi(cube, m, hi));
    for (std::size_t i = 0; i < ns.x.size(); ++i) tv += ns.w[i] * std::abs(space.family().xi_derivative(cube, m, ns.x[i]));
    return tv * std::ldexp(1.0, cube.dim - 1);
}

Lemma17Report lemma17_bound(const SdSpace& space, const SampledField& f, int K) {
    check_K(space, K);
    Lemma17Report r;
    const auto v = sd_norm(space, f, K);
    r.lhs = v.real() * v.real();
    for (int m = 0; m < f.dim(); ++m) r.f_norm = std::max(r.f_norm, anchored_box_norm(f, m));
    std::vector<double> var(K, 0.0);
#pragma omp parallel for schedule(dynamic)
    for (int k = 1; k <= K; ++k)
        for (int m = 0; m < f.dim(); ++m) var[k - 1] += e_variation(space, k, m, f.grid());
    r.sup_variation = *std::max_element(var.begin(), var.end());
    r.tail = std::ldexp(1.0, -K) * functional_bound(f) * functional_bound(f);
    r.rhs = r.f_norm * r.f_norm * r.sup_variation * r.sup_variation + r.tail;
    r.satisfied = r.lhs <= r.rhs * (1.0 + 1e-8);
    return r;
}

AxisWeights1D axis_integral_weights(const GridSpec& grid, int axis, int interp_order, double lo, double hi,
                                    const std::function<cplx(double)>& profile, std::vector<double> breaks,
                                    double max_panel) {
    AxisWeights1D out;
    lo = std::max(lo, grid.lo[axis]);
    hi = std::min(hi, grid.hi(axis));
    if (!(hi > lo)) return out;
    const int i0 = static_cast<int>(std::ceil((lo - grid.lo[axis]) / grid.h[axis]));
    const int i1 = static_cast<int>(std::floor((hi - grid.lo[axis]) / grid.h[axis]));
    for (int i = std::max(i0, 0); i <= std::min(i1, grid.n[axis] - 1); ++i) breaks.push_back(grid.coord(axis, i));
    const auto ns = panel_nodes(lo, hi, breaks, max_panel);
    std::vector<cplx> w(grid.n[axis], cplx{});
    int first = grid.n[axis], last = -1;
    for (std::size_t q = 0; q < ns.x.size(); ++q) {
        const auto st = interpolation_stencil(grid.n[axis], grid.lo[axis], grid.h[axis], ns.x[q], interp_order);
        const cplx p = profile ? profile(ns.x[q]) : cplx(1.0);
        for (int s = 0; s < st.count; ++s) w[st.start + s] += ns.w[q] * st.w[s] * p;
        first = std::min(first, st.start);
        last = std::max(last, st.start + st.count - 1);
    }
    out.start = first;
    out.w.assign(w.begin() + first, w.begin() + last + 1);
    return out;
}

AxisWeights1D axis_point_weights(const GridSpec& grid, int axis, int interp_order, double x0, cplx scale) {
    AxisWeights1D out;
    const double slack = 1e-12 * grid.h[axis];
    if (x0 < grid.lo[axis] - slack || x0 > grid.hi(axis) + slack) return out;
    const auto st = interpolation_stencil(grid.n[axis], grid.lo[axis], grid.h[axis], x0, interp_order);
    out.start = st.start;
    for (int s = 0; s < st.count; ++s) out.w.push_back(scale * st.w[s]);
    return out;
}

cplx contract_separable(const SampledField& f, int comp, const std::array<AxisWeights1D, 3>& w) {
    const auto& g = f.grid();
    std::array<AxisWeights1D, 3> ax = w;
    for (int a = g.dim; a < 3; ++a) ax[a] = AxisWeights1D{0, {cplx(1.0)}};
    const auto& v = f.component(comp);
    cplx acc{};
    for (std::size_t i = 0; i < ax[0].w.size(); ++i) {
        cplx a1{};
        for (std::size_t j = 0; j < ax[1].w.size(); ++j) {
            cplx a2{};
            for (std::size_t q = 0; q < ax[2].w.size(); ++q)
                a2 += ax[2].w[q] * v[g.index(ax[0].start + static_cast<int>(i), ax[1].start + static_cast<int>(j),
                                             ax[2].start + static_cast<int>(q))];
            a1 += ax[1].w[j] * a2;
        }
        acc += ax[0].w[i] * a1;
    }
    return acc;
}

cplx derivative_pairing(const SdSpace& space, int k, int axis, const SampledField& f) {
    const auto& g = f.grid();
    const int dim = g.dim;
    if (f.components() != dim) throw std::invalid_argument("field must have one component per dimension");
    if (axis < 0 || axis >= dim) throw std::invalid_argument("derivative axis out of range");
    const auto& cube = space.cube(k);
    const auto& fam = space.family();
    const auto& prm = fam.params(static_cast<int>(cube.l));
    const int order = f.interp_order();
    std::array<double, 3> lo{}, hi{};
    for (int a = 0; a < dim; ++a) {
        lo[a] = std::max(cube.lo(a), g.lo[a]);
        hi[a] = std::min(cube.hi(a), g.hi(a));
        if (!(hi[a] > lo[a])) return {};
    }
    const double panel = cube.edge / kPanelsPerCube;
    auto breaks = [&](int a) {
        return std::vector<double>{cube.center_d[a] - prm.core_half_width(), cube.center_d[a] + prm.core_half_width()};
    };
    auto plain = [&](int a) { return axis_integral_weights(g, a, order, lo[a], hi[a], nullptr, {}, panel); };
    auto profile = [&](int a, bool derivative) {
        std::function<cplx(double)> p = [&, a, derivative](double x) {
            return derivative ? fam.xi_derivative(cube, a, x) : fam.xi(cube, a, x);
        };
        return axis_integral_weights(g, a, order, lo[a], hi[a], p, breaks(a), panel);
    };

    std::array<AxisWeights1D, 3> w;
    for (int a = 0; a < dim; ++a) w[a] = a == axis ? profile(a, true) : plain(a);
    cplx total = contract_separable(f, axis, w);
    // Face terms: E_k jumps from 0 to its boundary value at the lower face and back at the upper face.
    for (int m = 0; m < dim; ++m) {
        for (int side = 0; side < 2; ++side) {
            const double x0 = side == 0 ? lo[axis] : hi[axis];
            // A clipped face lies on the box boundary rather than on the cube; E_k has no jump there.
            const bool on_cube = side == 0 ? cube.lo(axis) >= g.lo[axis] : cube.hi(axis) <= g.hi(axis);
            if (!on_cube) continue;
            for (int a = 0; a < dim; ++a) {
                if (a == axis)
                    w[a] = axis_point_weights(g, a, order, x0, m == axis ? fam.xi(cube, m, x0) : cplx(1.0));
                else
                    w[a] = a == m ? profile(a, false) : plain(a);
            }
            const cplx face = contract_separable(f, m, w);
            total += side == 0 ? face : -face;
        }
    }
    return total;
}

}  // namespace sdnse::sd
