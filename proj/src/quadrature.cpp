#include "sdnse/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>

#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>

namespace sdnse::quad {

namespace {

struct Gl8Table {
    std::array<double, 8> x{};
    std::array<double, 8> w{};
    Gl8Table() {
        using rule = boost::math::quadrature::gauss<double, 8>;
        const auto& a = rule::abscissa();
        const auto& b = rule::weights();
        // boost stores the non-negative half; order 8 has no zero node.
        for (std::size_t i = 0; i < a.size(); ++i) {
            x[3 - i] = -a[i];
            w[3 - i] = b[i];
            x[4 + i] = a[i];
            w[4 + i] = b[i];
        }
    }
};

const Gl8Table& gl8() {
    static const Gl8Table table;
    return table;
}

}  // namespace

const std::array<double, 8>& GaussLegendre8::nodes() { return gl8().x; }
const std::array<double, 8>& GaussLegendre8::weights() { return gl8().w; }

NodeSet composite_gl8(double a, double b, std::span<const double> breaks) {
    NodeSet out;
    if (!(b > a)) return out;
    std::vector<double> edges;
    edges.reserve(breaks.size() + 2);
    edges.push_back(a);
    for (double p : breaks)
        if (p > a && p < b) edges.push_back(p);
    edges.push_back(b);
    const auto& gx = GaussLegendre8::nodes();
    const auto& gw = GaussLegendre8::weights();
    out.x.reserve(8 * (edges.size() - 1));
    out.w.reserve(8 * (edges.size() - 1));
    for (std::size_t p = 0; p + 1 < edges.size(); ++p) {
        const double lo = edges[p], hi = edges[p + 1];
        if (hi <= lo) continue;
        const double half = 0.5 * (hi - lo), mid = 0.5 * (hi + lo);
        for (int i = 0; i < 8; ++i) {
            out.x.push_back(mid + half * gx[i]);
            out.w.push_back(half * gw[i]);
        }
    }
    return out;
}

NodeSet composite_gl8(double a, double b, int panels) {
    panels = std::max(panels, 1);
    std::vector<double> breaks;
    breaks.reserve(panels - 1);
    for (int p = 1; p < panels; ++p) breaks.push_back(a + (b - a) * p / panels);
    return composite_gl8(a, b, breaks);
}

namespace {

struct Panel {
    double a, b;
    cplx value;
    double error;
    unsigned depth;
    bool operator<(const Panel& o) const { return error < o.error; }
};

// G7/K15 on [a, b]; error is |K15 - G7| scaled to the panel.
Panel gk15(const std::function<cplx(double)>& f, double a, double b, unsigned depth) {
    using kronrod = boost::math::quadrature::gauss_kronrod<double, 15>;
    using gauss = boost::math::quadrature::gauss<double, 7>;
    const auto& kx = kronrod::abscissa();
    const auto& kw = kronrod::weights();
    const auto& gw = gauss::weights();
    const double half = 0.5 * (b - a), mid = 0.5 * (a + b);
    cplx f0 = f(mid);
    cplx k = f0 * kw[0];
    cplx g = f0 * gw[0];
    for (std::size_t i = 1; i < kx.size(); ++i) {
        const cplx s = f(mid + half * kx[i]) + f(mid - half * kx[i]);
        k += s * kw[i];
        if (i % 2 == 0) g += s * gw[i / 2];
    }
    const double err = std::max(std::abs(k - g) * half,
                                std::abs(k) * half * 4 * std::numeric_limits<double>::epsilon());
    return {a, b, k * half, err, depth};
}

}  // namespace

Result adaptive(const std::function<cplx(double)>& f, double a, double b, double abs_tol,
                double rel_tol, unsigned max_depth) {
    if (a == b) return {cplx{}, 0.0};
    std::priority_queue<Panel> heap;
    heap.push(gk15(f, a, b, 0));
    cplx total = heap.top().value;
    double err = heap.top().error;
    std::vector<Panel> done;
    while (!heap.empty()) {
        if (err <= std::max(abs_tol, rel_tol * std::abs(total))) break;
        Panel p = heap.top();
        heap.pop();
        if (p.depth >= max_depth) {
            done.push_back(p);
            continue;
        }
        const double m = 0.5 * (p.a + p.b);
        Panel l = gk15(f, p.a, m, p.depth + 1), r = gk15(f, m, p.b, p.depth + 1);
        total += l.value + r.value - p.value;
        err += l.error + r.error - p.error;
        heap.push(l);
        heap.push(r);
    }
    // Re-sum to drop the running-update rounding.
    cplx sum{};
    double esum = 0.0;
    for (const auto& p : done) sum += p.value, esum += p.error;
    while (!heap.empty()) {
        sum += heap.top().value;
        esum += heap.top().error;
        heap.pop();
    }
    if (esum > std::max(abs_tol, rel_tol * std::abs(sum)))
        throw QuadratureError("adaptive Gauss-Kronrod did not converge", esum);
    return {sum, esum};
}

Result adaptive_piecewise(const std::function<cplx(double)>& f, std::span<const double> breaks,
                          double abs_tol, unsigned max_depth) {
    Result total{cplx{}, 0.0};
    if (breaks.size() < 2) return total;
    const double per = abs_tol / static_cast<double>(breaks.size() - 1);
    for (std::size_t i = 0; i + 1 < breaks.size(); ++i) {
        const auto r = adaptive(f, breaks[i], breaks[i + 1], per, 0.0, max_depth);
        total.value += r.value;
        total.error += r.error;
    }
    return total;
}

Result wynn_epsilon(std::span<const cplx> s) {
    const std::size_t n = s.size();
    if (n == 0) return {cplx{}, 0.0};
    if (n < 3) return {s.back(), n == 2 ? std::abs(s[1] - s[0]) : 0.0};
    // e[k][j]: column k of the epsilon table; even columns hold estimates.
    std::vector<cplx> prev(n, cplx{});    // epsilon_{-1}
    std::vector<cplx> cur(s.begin(), s.end());  // epsilon_0
    cplx best = s.back();
    double best_err = std::abs(s[n - 1] - s[n - 2]);
    cplx last_even = s.back();
    for (std::size_t k = 1; k < n; ++k) {
        std::vector<cplx> next(n - k);
        bool ok = true;
        for (std::size_t j = 0; j + k < n; ++j) {
            const cplx d = cur[j + 1] - cur[j];
            if (std::abs(d) < 1e-300) {
                ok = false;
                break;
            }
            next[j] = prev[j + 1] + 1.0 / d;
        }
        if (!ok) break;
        if (k % 2 == 0 && !next.empty()) {
            const cplx est = next.back();
            const double e = std::abs(est - last_even);
            if (e <= best_err) {
                best = est;
                best_err = e;
            }
            last_even = est;
        }
        prev = std::move(cur);
        cur = std::move(next);
        if (cur.size() < 2) break;
    }
    return {best, best_err};
}

std::vector<double> cumulative_trapezoid(std::span<const double> t, std::span<const double> g) {
    std::vector<double> out(t.size(), 0.0);
    for (std::size_t i = 1; i < t.size(); ++i)
        out[i] = out[i - 1] + 0.5 * (t[i] - t[i - 1]) * (g[i] + g[i - 1]);
    return out;
}

std::vector<double> cumulative_cubic(std::span<const double> t, std::span<const double> g) {
    const std::size_t n = t.size();
    if (n < 4) return cumulative_trapezoid(t, g);
    std::vector<double> out(n, 0.0);
    const double q = 0.5 / std::sqrt(3.0);  // two-point Gauss, exact for cubics
    for (std::size_t i = 0; i + 1 < n; ++i) {
        std::size_t s = (i == 0) ? 0 : i - 1;
        if (s + 3 >= n) s = n - 4;
        const double lo = t[i], hi = t[i + 1], mid = 0.5 * (lo + hi), len = hi - lo;
        double acc = 0.0;
        for (double x : {mid - q * len, mid + q * len}) {
            double p = 0.0;
            for (std::size_t a = s; a < s + 4; ++a) {
                double l = 1.0;
                for (std::size_t b = s; b < s + 4; ++b)
                    if (b != a) l *= (x - t[b]) / (t[a] - t[b]);
                p += l * g[a];
            }
            acc += 0.5 * len * p;
        }
        out[i + 1] = out[i] + acc;
    }
    return out;
}

}  // namespace sdnse::quad
