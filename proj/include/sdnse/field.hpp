#pragma once

#include <array>
#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <vector>

namespace sdnse {

/// Uniform node grid: point i on axis a is lo[a] + i*h[a], i = 0..n[a]-1.
/// Flat storage is row-major with the last used axis varying fastest.
struct GridSpec {
    int dim = 1;
    std::array<int, 3> n{1, 1, 1};
    std::array<double, 3> lo{0.0, 0.0, 0.0};
    std::array<double, 3> h{1.0, 1.0, 1.0};

    static GridSpec uniform(int dim, int points, double lo, double hi);

    std::size_t size() const;
    double coord(int axis, int i) const { return lo[axis] + i * h[axis]; }
    double hi(int axis) const { return lo[axis] + (n[axis] - 1) * h[axis]; }
    double cell_volume() const;
    std::size_t index(int i, int j = 0, int k = 0) const;
    std::array<int, 3> unflatten(std::size_t idx) const;
    bool same_as(const GridSpec& o, double rel_tol = 1e-12) const;
    void validate() const;
};

/// n-component real field sampled on a GridSpec. Off-grid values come from
/// tensor Lagrange interpolation (order 1 multilinear, order 3 cubic with
/// stencils clamped at the box edges); the field is zero outside the box.
class SampledField {
public:
    SampledField() = default;
    SampledField(GridSpec grid, int components, int interp_order = 3);

    static SampledField from_function(const GridSpec& grid, int components,
                                      const std::function<void(std::span<const double>, std::span<double>)>& fn,
                                      int interp_order = 3);

    const GridSpec& grid() const { return grid_; }
    int dim() const { return grid_.dim; }
    int components() const { return static_cast<int>(comp_.size()); }
    int interp_order() const { return interp_order_; }
    void set_interp_order(int order);

    std::vector<double>& component(int c) { return comp_[c]; }
    const std::vector<double>& component(int c) const { return comp_[c]; }

    double interpolate(int c, std::span<const double> x) const;
    /// Rejects non-finite values and inconsistent component sizes.
    void validate() const;

    SampledField& operator+=(const SampledField& o);
    SampledField& operator*=(double s);
    friend SampledField operator+(SampledField a, const SampledField& b) { return a += b; }
    friend SampledField operator*(double s, SampledField a) { return a *= s; }

    /// Grid (node-sum) norms of the pointwise Euclidean magnitude; p = inf allowed.
    double norm_p(double p) const;
    /// Sum over components of the grid L1 norm of each component.
    double component_l1_sum() const;

    /// Fourth-order finite difference of one component along an axis.
    std::vector<double> derivative(int c, int axis) const;
    SampledField derivative_field(int axis) const;

private:
    GridSpec grid_;
    std::vector<std::vector<double>> comp_;
    int interp_order_ = 3;
};

/// 1-D cardinal weights of the interpolation scheme at x: nodes start..start+count-1.
struct Stencil1D {
    int start = 0;
    int count = 0;
    std::array<double, 4> w{};
};
Stencil1D interpolation_stencil(int n, double lo, double h, double x, int order);

/// CSV with header x[,y[,z]],u1[,u2[,u3]]; rows in grid order.
void write_field_csv(const SampledField& f, const std::string& path);
SampledField read_field_csv(const std::string& path, int interp_order = 3);

}  // namespace sdnse
