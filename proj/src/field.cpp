#include "sdnse/field.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace sdnse {

GridSpec GridSpec::uniform(int dim, int points, double lo, double hi) {
    GridSpec g;
    g.dim = dim;
    for (int a = 0; a < dim; ++a) {
        g.n[a] = points;
        g.lo[a] = lo;
        g.h[a] = points > 1 ? (hi - lo) / (points - 1) : 1.0;
    }
    g.validate();
    return g;
}

std::size_t GridSpec::size() const {
    std::size_t s = 1;
    for (int a = 0; a < dim; ++a) s *= static_cast<std::size_t>(n[a]);
    return s;
}

double GridSpec::cell_volume() const {
    double v = 1.0;
    for (int a = 0; a < dim; ++a) v *= h[a];
    return v;
}

std::size_t GridSpec::index(int i, int j, int k) const {
    switch (dim) {
        case 1: return static_cast<std::size_t>(i);
        case 2: return static_cast<std::size_t>(i) * n[1] + j;
        default: return (static_cast<std::size_t>(i) * n[1] + j) * n[2] + k;
    }
}

std::array<int, 3> GridSpec::unflatten(std::size_t idx) const {
    std::array<int, 3> out{0, 0, 0};
    for (int a = dim - 1; a >= 0; --a) {
        out[a] = static_cast<int>(idx % n[a]);
        idx /= n[a];
    }
    return out;
}

bool GridSpec::same_as(const GridSpec& o, double rel_tol) const {
    if (dim != o.dim) return false;
    for (int a = 0; a < dim; ++a) {
        if (n[a] != o.n[a]) return false;
        const double scale = std::max(std::abs(h[a]), 1e-300);
        if (std::abs(lo[a] - o.lo[a]) > rel_tol * scale || std::abs(h[a] - o.h[a]) > rel_tol * scale) return false;
    }
    return true;
}

void GridSpec::validate() const {
    if (dim < 1 || dim > 3) throw std::invalid_argument("grid dimension must be 1, 2 or 3");
    for (int a = 0; a < dim; ++a) {
        if (n[a] < 1) throw std::invalid_argument("grid needs at least one point per axis");
        if (!(h[a] > 0.0) || !std::isfinite(h[a])) throw std::invalid_argument("grid spacing must be positive");
        if (!std::isfinite(lo[a])) throw std::invalid_argument("grid origin must be finite");
    }
}

SampledField::SampledField(GridSpec grid, int components, int interp_order) : grid_(grid) {
    grid_.validate();
    if (components < 1) throw std::invalid_argument("field needs at least one component");
    set_interp_order(interp_order);
    comp_.assign(components, std::vector<double>(grid_.size(), 0.0));
}

SampledField SampledField::from_function(const GridSpec& grid, int components,
                                         const std::function<void(std::span<const double>, std::span<double>)>& fn,
                                         int interp_order) {
    SampledField f(grid, components, interp_order);
    std::vector<double> x(grid.dim), v(components);
    for (std::size_t idx = 0; idx < grid.size(); ++idx) {
        const auto ijk = grid.unflatten(idx);
        for (int a = 0; a < grid.dim; ++a) x[a] = grid.coord(a, ijk[a]);
        std::fill(v.begin(), v.end(), 0.0);
        fn(x, v);
        for (int c = 0; c < components; ++c) f.comp_[c][idx] = v[c];
    }
    return f;
}

void SampledField::set_interp_order(int order) {
    if (order != 1 && order != 3) throw std::invalid_argument("interpolation order must be 1 or 3");
    interp_order_ = order;
}

void SampledField::validate() const {
    grid_.validate();
    for (const auto& c : comp_) {
        if (c.size() != grid_.size()) throw std::invalid_argument("component size does not match grid");
        for (double v : c)
            if (!std::isfinite(v)) throw std::invalid_argument("field contains non-finite values");
    }
}

Stencil1D interpolation_stencil(int n, double lo, double h, double x, int order) {
    Stencil1D s;
    if (n == 1) {
        s.start = 0;
        s.count = 1;
        s.w[0] = 1.0;
        return s;
    }
    const double u = (x - lo) / h;
    if (order == 1 || n < 4) {
        const int j = std::clamp(static_cast<int>(std::floor(u)), 0, n - 2);
        const double t = u - j;
        s.start = j;
        s.count = 2;
        s.w[0] = 1.0 - t;
        s.w[1] = t;
        return s;
    }
    const int j = std::clamp(static_cast<int>(std::floor(u)) - 1, 0, n - 4);
    s.start = j;
    s.count = 4;
    for (int a = 0; a < 4; ++a) {
        double w = 1.0;
        for (int b = 0; b < 4; ++b)
            if (b != a) w *= (u - (j + b)) / static_cast<double>(a - b);
        s.w[a] = w;
    }
    return s;
}

double SampledField::interpolate(int c, std::span<const double> x) const {
    std::array<Stencil1D, 3> st;
    for (int a = 0; a < grid_.dim; ++a) {
        const double slack = 1e-12 * grid_.h[a];
        if (x[a] < grid_.lo[a] - slack || x[a] > grid_.hi(a) + slack) return 0.0;
        st[a] = interpolation_stencil(grid_.n[a], grid_.lo[a], grid_.h[a], x[a], interp_order_);
    }
    for (int a = grid_.dim; a < 3; ++a) st[a] = Stencil1D{0, 1, {1.0, 0, 0, 0}};
    const auto& v = comp_[c];
    double acc = 0.0;
    for (int p = 0; p < st[0].count; ++p)
        for (int q = 0; q < st[1].count; ++q) {
            const double wpq = st[0].w[p] * st[1].w[q];
            for (int r = 0; r < st[2].count; ++r)
                acc += wpq * st[2].w[r] * v[grid_.index(st[0].start + p, st[1].start + q, st[2].start + r)];
        }
    return acc;
}

SampledField& SampledField::operator+=(const SampledField& o) {
    if (!grid_.same_as(o.grid_) || components() != o.components())
        throw std::invalid_argument("field addition needs matching grids and components");
    for (int c = 0; c < components(); ++c)
        for (std::size_t i = 0; i < comp_[c].size(); ++i) comp_[c][i] += o.comp_[c][i];
    return *this;
}

SampledField& SampledField::operator*=(double s) {
    for (auto& c : comp_)
        for (double& v : c) v *= s;
    return *this;
}

double SampledField::norm_p(double p) const {
    if (!(p >= 1.0)) throw std::invalid_argument("norm exponent must be >= 1");
    const bool inf = std::isinf(p);
    double acc = 0.0;
    for (std::size_t i = 0; i < grid_.size(); ++i) {
        double m2 = 0.0;
        for (const auto& c : comp_) m2 += c[i] * c[i];
        const double m = std::sqrt(m2);
        if (inf)
            acc = std::max(acc, m);
        else
            acc += std::pow(m, p);
    }
    return inf ? acc : std::pow(acc * grid_.cell_volume(), 1.0 / p);
}

double SampledField::component_l1_sum() const {
    double acc = 0.0;
    for (const auto& c : comp_)
        for (double v : c) acc += std::abs(v);
    return acc * grid_.cell_volume();
}

std::vector<double> SampledField::derivative(int c, int axis) const {
    if (axis < 0 || axis >= grid_.dim) throw std::invalid_argument("derivative axis out of range");
    const auto& v = comp_[c];
    std::vector<double> out(v.size(), 0.0);
    const int n = grid_.n[axis];
    const double h = grid_.h[axis];
    std::size_t stride = 1;
    for (int a = grid_.dim - 1; a > axis; --a) stride *= grid_.n[a];
    if (n < 2) return out;
    std::vector<double> line(n), d(n);
    for (std::size_t base = 0; base < v.size(); ++base) {
        if ((base / stride) % n != 0) continue;
        for (int i = 0; i < n; ++i) line[i] = v[base + i * stride];
        if (n >= 5) {
            for (int i = 2; i + 2 < n; ++i)
                d[i] = (line[i - 2] - 8 * line[i - 1] + 8 * line[i + 1] - line[i + 2]) / (12 * h);
            auto one_sided = [&](int i0, int s) {
                const auto f = [&](int k) { return line[i0 + s * k]; };
                d[i0] = s * (-25 * f(0) + 48 * f(1) - 36 * f(2) + 16 * f(3) - 3 * f(4)) / (12 * h);
                d[i0 + s] = s * (-3 * f(0) - 10 * f(1) + 18 * f(2) - 6 * f(3) + f(4)) / (12 * h);
            };
            one_sided(0, 1);
            one_sided(n - 1, -1);
        } else {
            for (int i = 1; i + 1 < n; ++i) d[i] = (line[i + 1] - line[i - 1]) / (2 * h);
            d[0] = (line[1] - line[0]) / h;
            d[n - 1] = (line[n - 1] - line[n - 2]) / h;
        }
        for (int i = 0; i < n; ++i) out[base + i * stride] = d[i];
    }
    return out;
}

SampledField SampledField::derivative_field(int axis) const {
    SampledField out(grid_, components(), interp_order_);
    for (int c = 0; c < components(); ++c) out.comp_[c] = derivative(c, axis);
    return out;
}

namespace {

const char* kAxisNames[3] = {"x", "y", "z"};

std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> out;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
        cell.erase(std::remove_if(cell.begin(), cell.end(), [](char ch) { return std::isspace(static_cast<unsigned char>(ch)); }),
                   cell.end());
        out.push_back(cell);
    }
    return out;
}

}  // namespace

void write_field_csv(const SampledField& f, const std::string& path) {
    std::FILE* fp = std::fopen(path.c_str(), "w");
    if (!fp) throw std::runtime_error("cannot open " + path + " for writing");
    const auto& g = f.grid();
    for (int a = 0; a < g.dim; ++a) std::fprintf(fp, "%s%s", a ? "," : "", kAxisNames[a]);
    for (int c = 0; c < f.components(); ++c) std::fprintf(fp, ",u%d", c + 1);
    std::fputc('\n', fp);
    for (std::size_t idx = 0; idx < g.size(); ++idx) {
        const auto ijk = g.unflatten(idx);
        for (int a = 0; a < g.dim; ++a) std::fprintf(fp, "%s%.17g", a ? "," : "", g.coord(a, ijk[a]));
        for (int c = 0; c < f.components(); ++c) std::fprintf(fp, ",%.17g", f.component(c)[idx]);
        std::fputc('\n', fp);
    }
    if (std::fclose(fp) != 0) throw std::runtime_error("failed writing " + path);
}

SampledField read_field_csv(const std::string& path, int interp_order) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);
    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error(path + ": empty file");
    const auto header = split_csv(line);
    int dim = 0;
    while (dim < 3 && dim < static_cast<int>(header.size()) && header[dim] == kAxisNames[dim]) ++dim;
    const int ncomp = static_cast<int>(header.size()) - dim;
    if (dim == 0 || ncomp < 1) throw std::runtime_error(path + ": header must be x[,y[,z]],u1[,...]");
    for (int c = 0; c < ncomp; ++c)
        if (header[dim + c] != "u" + std::to_string(c + 1)) throw std::runtime_error(path + ": unexpected column " + header[dim + c]);

    std::vector<std::vector<double>> rows;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        const auto cells = split_csv(line);
        if (cells.size() != header.size())
            throw std::runtime_error(path + ":" + std::to_string(lineno) + ": wrong number of columns");
        std::vector<double> r;
        for (const auto& s : cells) {
            std::size_t used = 0;
            double v = 0;
            try {
                v = std::stod(s, &used);
            } catch (const std::exception&) {
                used = 0;
            }
            if (used != s.size() || s.empty())
                throw std::runtime_error(path + ":" + std::to_string(lineno) + ": bad number '" + s + "'");
            r.push_back(v);
        }
        rows.push_back(std::move(r));
    }
    if (rows.empty()) throw std::runtime_error(path + ": no data rows");

    GridSpec g;
    g.dim = dim;
    for (int a = 0; a < dim; ++a) {
        std::vector<double> xs;
        for (const auto& r : rows) xs.push_back(r[a]);
        std::sort(xs.begin(), xs.end());
        xs.erase(std::unique(xs.begin(), xs.end()), xs.end());
        g.n[a] = static_cast<int>(xs.size());
        g.lo[a] = xs.front();
        g.h[a] = xs.size() > 1 ? (xs.back() - xs.front()) / (xs.size() - 1) : 1.0;
        for (std::size_t i = 0; i < xs.size(); ++i)
            if (std::abs(xs[i] - (g.lo[a] + i * g.h[a])) > 1e-9 * g.h[a] * std::max<double>(1.0, i))
                throw std::runtime_error(path + ": axis " + kAxisNames[a] + " is not uniformly spaced");
    }
    if (g.size() != rows.size()) throw std::runtime_error(path + ": rows do not form a complete grid");
    SampledField f(g, ncomp, interp_order);
    std::vector<char> seen(g.size(), 0);
    for (const auto& r : rows) {
        std::array<int, 3> ijk{0, 0, 0};
        for (int a = 0; a < dim; ++a) ijk[a] = static_cast<int>(std::lround((r[a] - g.lo[a]) / g.h[a]));
        const auto idx = g.index(ijk[0], ijk[1], ijk[2]);
        if (seen[idx]) throw std::runtime_error(path + ": duplicate grid point");
        seen[idx] = 1;
        for (int c = 0; c < ncomp; ++c) f.component(c)[idx] = r[dim + c];
    }
    f.validate();
    return f;
}

}  // namespace sdnse
