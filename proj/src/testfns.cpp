#include "sdnse/testfns.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>
#include <tuple>

#include "sdnse/quadrature.hpp"

namespace sdnse::testfns {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr int kMaxLevel = 60;

}  // namespace

JonesParams JonesParams::for_level(int level) {
    if (level < 1) throw std::invalid_argument("level must be >= 1");
    if (level > kMaxLevel)
        throw std::out_of_range("level " + std::to_string(level) + " exceeds double precision support");
    JonesParams p;
    p.level = level;
    p.a = 3.0 * std::ldexp(1.0, level - 1);
    p.eps = kPi / (4.0 * p.a);
    return p;
}

double JonesParams::h_half_width() const { return kPi / (2.0 * a); }
double JonesParams::chi_half_width() const { return h_half_width() + eps; }
double JonesParams::core_half_width() const { return h_half_width() - eps; }

std::int64_t pair_index(std::int64_t l, std::int64_t i) {
    if (l < 1 || i < 1) throw std::invalid_argument("pair_index: indices must be positive");
    const std::int64_t s = l + i - 1;
    const std::int64_t offset = s * (s - 1) / 2;
    return (s % 2 == 1) ? offset + l : offset + s + 1 - l;
}

std::pair<std::int64_t, std::int64_t> unpair_index(std::int64_t k) {
    if (k < 1) throw std::invalid_argument("unpair_index: index must be positive");
    auto s = static_cast<std::int64_t>(std::ceil((std::sqrt(8.0 * static_cast<double>(k) + 1.0) - 1.0) / 2.0));
    while (s > 1 && (s - 1) * s / 2 >= k) --s;
    while (s * (s + 1) / 2 < k) ++s;
    const std::int64_t r = k - s * (s - 1) / 2;
    const std::int64_t l = (s % 2 == 1) ? r : s + 1 - r;
    return {l, s + 1 - l};
}

Rational calkin_wilf(std::int64_t j) {
    if (j < 1) throw std::invalid_argument("calkin_wilf: index must be positive");
    int top = 63;
    while (!((j >> top) & 1)) --top;
    std::int64_t num = 1, den = 1;
    for (int b = top - 1; b >= 0; --b) {
        if ((j >> b) & 1)
            num += den;
        else
            den += num;
    }
    return Rational(num, den);
}

Rational enumerate_rationals(std::int64_t i) {
    if (i < 1) throw std::invalid_argument("enumerate_rationals: index must be positive");
    if (i == 1) return Rational(0);
    const Rational q = calkin_wilf(i / 2);
    return (i % 2 == 0) ? q : -q;
}

std::vector<Rational> enumerate_point(std::int64_t i, int dim) {
    if (dim < 1) throw std::invalid_argument("enumerate_point: dimension must be positive");
    std::vector<Rational> out;
    out.reserve(dim);
    std::int64_t rest = i;
    for (int d = 0; d + 1 < dim; ++d) {
        const auto [head, tail] = unpair_index(rest);
        out.push_back(enumerate_rationals(head));
        rest = tail;
    }
    out.push_back(enumerate_rationals(rest));
    return out;
}

CubeIndex CubeIndex::from_k(std::int64_t k, int dim) {
    CubeIndex c;
    c.k = k;
    std::tie(c.l, c.i) = unpair_index(k);
    c.dim = dim;
    c.center = enumerate_point(c.i, dim);
    c.center_d.reserve(dim);
    for (const auto& q : c.center)
        c.center_d.push_back(static_cast<double>(q.numerator()) / static_cast<double>(q.denominator()));
    c.edge = JonesParams::for_level(static_cast<int>(c.l)).cube_edge();
    return c;
}

double CubeIndex::diagonal() const { return edge * std::sqrt(static_cast<double>(dim)); }

double CubeIndex::center_norm() const {
    double s = 0.0;
    for (double v : center_d) s += v * v;
    return std::sqrt(s);
}

bool CubeIndex::contains(std::span<const double> x) const {
    for (int d = 0; d < dim; ++d)
        if (x[d] < lo(d) || x[d] > hi(d)) return false;
    return true;
}

cplx jones_g(double x, double y, double a) {
    if (!(a > 1.0)) throw std::invalid_argument("jones_g: a must exceed 1");
    if (y < 0.0) throw std::invalid_argument("jones_g: y must be nonnegative");
    const double ya = std::pow(y, a);
    return std::exp(-ya * std::cos(a * x)) * std::polar(1.0, -ya * std::sin(a * x));
}

JonesH jones_h_with_error(double x, double a, double tol) {
    if (!(a > 1.0)) throw std::invalid_argument("jones_h: a must exceed 1");
    const double hw = kPi / (2.0 * a);
    if (std::abs(x) > hw) return {cplx{}, 0.0};

    const double c = std::cos(a * x), s = std::sin(a * x);
    const cplx w(c, s);

    // [0, 1] in y: the integrand steepens next to y = 1 as a grows.
    std::vector<double> breaks{0.0};
    const int nb = static_cast<int>(std::ceil(std::log2(a))) + 2;
    for (int j = 1; j <= nb; ++j) breaks.push_back(1.0 - std::ldexp(1.0, -j));
    breaks.push_back(1.0);
    auto head_f = [&](double y) { return std::exp(-std::pow(y, a) * w); };
    const auto head = quad::adaptive_piecewise(head_f, breaks, 0.01 * tol);

    // [1, inf) in y, substituted u = y^a: (1/a) int_1^inf u^{1/a-1} e^{-wu} du.
    const double beta = 1.0 / a;
    auto tail_f = [&](double u) { return std::pow(u, beta - 1.0) * std::exp(-w * u) * beta; };
    const double len = std::min(std::abs(s) > 0.0 ? kPi / std::abs(s) : 1e300, c > 0.0 ? 2.0 / c : 1e300);
    constexpr int kMaxIntervals = 80;
    std::vector<cplx> partial;
    partial.reserve(kMaxIntervals);
    cplx sum{};
    double qerr = 0.0;
    bool direct = false;
    for (int j = 0; j < kMaxIntervals; ++j) {
        const double lo = 1.0 + j * len;
        const auto r = quad::adaptive(tail_f, lo, lo + len, 1e-3 * tol);
        sum += r.value;
        qerr += r.error;
        partial.push_back(sum);
        // Envelope bound of everything beyond this interval when the exponential dominates.
        const double rest = (c > 0.0) ? beta * std::exp(-c * (lo + len)) / c : 1e300;
        if (rest < 1e-3 * tol) {
            direct = true;
            break;
        }
    }
    cplx tail = sum;
    double terr = qerr;
    if (!direct) {
        const auto acc = quad::wynn_epsilon(partial);
        tail = acc.value;
        terr += acc.error;
    }
    const double err = head.error + terr;
    if (err > tol) throw quad::QuadratureError("jones_h: tail did not converge", err);
    return {head.value + tail, err};
}

double unit_bump_mass() {
    static const double mass = [] {
        auto f = [](double t) { return cplx(t * t < 1.0 ? std::exp(1.0 / (t * t - 1.0)) : 0.0); };
        const double br[] = {-1.0, -0.5, 0.0, 0.5, 1.0};
        return quad::adaptive_piecewise(f, br, 1e-15).value.real();
    }();
    return mass;
}

double mollifier(int level, double x, double center) {
    const auto p = JonesParams::for_level(level);
    const double t = (x - center) / p.eps;
    if (!(t * t < 1.0)) return 0.0;
    return std::exp(1.0 / (t * t - 1.0)) / (p.eps * unit_bump_mass());
}

double mollifier_derivative(int level, double x, double center) {
    const auto p = JonesParams::for_level(level);
    const double t = (x - center) / p.eps;
    if (!(t * t < 1.0)) return 0.0;
    const double q = t * t - 1.0;
    return std::exp(1.0 / q) * (-2.0 * t / (q * q)) / (p.eps * p.eps * unit_bump_mass());
}

TestFunctionFamily::TestFunctionFamily(int dim, int max_level, FamilySettings settings)
    : dim_(dim), settings_(settings) {
    if (dim < 1) throw std::invalid_argument("dimension must be positive");
    if (max_level < 1) throw std::invalid_argument("max_level must be positive");
    if (settings_.h_cache_intervals < 3) throw std::invalid_argument("h cache needs at least 3 intervals");
    levels_.resize(max_level);
    const int m = settings_.h_cache_intervals;
    for (int l = 1; l <= max_level; ++l) {
        auto& lc = levels_[l - 1];
        lc.params = JonesParams::for_level(l);
        const double hw = lc.params.h_half_width();
        lc.h0 = jones_h(0.0, lc.params.a, settings_.tol);
        lc.h_step = 2.0 * hw / m;
        lc.h_nodes.resize(m + 1);
#pragma omp parallel for schedule(dynamic)
        for (int j = 0; j <= m; ++j) {
            const double x = (j == m) ? hw : -hw + j * lc.h_step;
            lc.h_nodes[j] = jones_h(x, lc.params.a, settings_.tol);
        }
        const double eps = lc.params.eps;
        auto f = [l](double z) { return cplx(std::cos(z) * mollifier(l, z)); };
        const double br[] = {-eps, -0.5 * eps, 0.0, 0.5 * eps, eps};
        lc.alpha = quad::adaptive_piecewise(f, br, 1e-14).value.real();
    }
}

const TestFunctionFamily::LevelCache& TestFunctionFamily::level(int l) const {
    if (l < 1 || l > max_level())
        throw std::out_of_range("level " + std::to_string(l) + " outside the cached range");
    return levels_[l - 1];
}

const JonesParams& TestFunctionFamily::params(int l) const { return level(l).params; }
cplx TestFunctionFamily::h0(int l) const { return level(l).h0; }
double TestFunctionFamily::alpha(int l) const { return level(l).alpha; }

cplx TestFunctionFamily::h_cached(int l, double x) const {
    const auto& lc = level(l);
    const double hw = lc.params.h_half_width();
    if (std::abs(x) > hw) return {};
    const int m = static_cast<int>(lc.h_nodes.size()) - 1;
    const double u = (x + hw) / lc.h_step;
    const int j = std::clamp(static_cast<int>(std::floor(u)) - 1, 0, m - 3);
    cplx acc{};
    for (int a = 0; a < 4; ++a) {
        double w = 1.0;
        for (int b = 0; b < 4; ++b)
            if (b != a) w *= (u - (j + b)) / static_cast<double>(a - b);
        acc += w * lc.h_nodes[j + a];
    }
    return acc;
}

cplx TestFunctionFamily::convolve(const LevelCache& lc, double t, bool derivative) const {
    const double hw = lc.params.h_half_width(), eps = lc.params.eps;
    const double lo = std::max(-eps, t - hw), hi = std::min(eps, t + hw);
    if (!(hi > lo)) return {};
    const int l = lc.params.level;
    const auto ns = quad::composite_gl8(lo, hi, settings_.convolution_panels);
    cplx acc{};
    for (std::size_t q = 0; q < ns.x.size(); ++q) {
        const double z = ns.x[q];
        const double fz = derivative ? mollifier_derivative(l, z) : mollifier(l, z);
        acc += ns.w[q] * fz * h_cached(l, t - z);
    }
    return acc;
}

cplx TestFunctionFamily::chi(int l, double t) const { return convolve(level(l), t, false); }
cplx TestFunctionFamily::chi_derivative(int l, double t) const { return convolve(level(l), t, true); }

cplx TestFunctionFamily::chi_closed_core(int l, double t) const {
    const auto& lc = level(l);
    return lc.h0 * lc.alpha * std::polar(1.0, -t);
}

double TestFunctionFamily::xi_scale(const CubeIndex& cube) const {
    const auto& lc = level(static_cast<int>(cube.l));
    const double e = (kPi + cube.center_norm()) * std::log(3.0);
    if (e > 700.0) throw std::overflow_error("3^(pi+|center|) overflows for cube k=" + std::to_string(cube.k));
    return 1.0 / (dim_ * lc.h0.real() * lc.alpha * std::exp(e));
}

cplx TestFunctionFamily::xi_offset(const CubeIndex& cube, double t, bool derivative) const {
    const int l = static_cast<int>(cube.l);
    const auto& p = level(l).params;
    if (settings_.variant == XiVariant::LiteralReal) {
        if (std::abs(t) > p.chi_half_width()) return {};
        return std::exp(t) / (dim_ * std::pow(3.0, kPi + cube.center_norm()));
    }
    const double scale = xi_scale(cube);
    if (settings_.mode == XiMode::ClosedFormCore && std::abs(t) <= p.core_half_width()) {
        const cplx v = scale * chi_closed_core(l, t);
        return derivative ? cplx(0.0, -1.0) * v : v;
    }
    return scale * convolve(level(l), t, derivative);
}

cplx TestFunctionFamily::xi(const CubeIndex& cube, int axis, double x) const {
    return xi_offset(cube, x - cube.center_d[axis], false);
}

cplx TestFunctionFamily::xi_derivative(const CubeIndex& cube, int axis, double x) const {
    return xi_offset(cube, x - cube.center_d[axis], true);
}

std::vector<cplx> TestFunctionFamily::eval_E(const CubeIndex& cube, std::span<const double> point) const {
    std::vector<cplx> out(dim_, cplx{});
    if (!cube.contains(point)) return out;
    for (int d = 0; d < dim_; ++d) out[d] = xi(cube, d, point[d]);
    return out;
}

}  // namespace sdnse::testfns
