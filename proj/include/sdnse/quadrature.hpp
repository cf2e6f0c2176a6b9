#pragma once

#include <array>
#include <complex>
#include <cstddef>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace sdnse::quad {

using cplx = std::complex<double>;

/// Thrown when an adaptive rule cannot reach the requested tolerance.
class QuadratureError : public std::runtime_error {
public:
    QuadratureError(const std::string& what, double achieved)
        : std::runtime_error(what + " (achieved error estimate " + std::to_string(achieved) + ")"),
          achieved_(achieved) {}
    double achieved() const noexcept { return achieved_; }

private:
    double achieved_;
};

/// Gauss–Legendre rule of order 8 mapped to [-1, 1], full (not half) node list.
struct GaussLegendre8 {
    static const std::array<double, 8>& nodes();
    static const std::array<double, 8>& weights();
};

/// Nodes/weights of composite GL8 on [a, b] split at the given sorted interior breakpoints.
struct NodeSet {
    std::vector<double> x;
    std::vector<double> w;
};
NodeSet composite_gl8(double a, double b, std::span<const double> breaks);
NodeSet composite_gl8(double a, double b, int panels);

template <class F>
auto integrate_gl8(F&& f, double a, double b, int panels) {
    const auto ns = composite_gl8(a, b, panels);
    decltype(f(a)) acc{};
    for (std::size_t i = 0; i < ns.x.size(); ++i) acc += ns.w[i] * f(ns.x[i]);
    return acc;
}

struct Result {
    cplx value;
    double error;
};

/// Adaptive G7/K15 on a finite interval. Throws QuadratureError if the
/// error estimate exceeds max(abs_tol, rel_tol*|value|).
Result adaptive(const std::function<cplx(double)>& f, double a, double b, double abs_tol,
                double rel_tol = 0.0, unsigned max_depth = 30);

/// Adaptive integration over consecutive sub-intervals [breaks[i], breaks[i+1]].
Result adaptive_piecewise(const std::function<cplx(double)>& f, std::span<const double> breaks,
                          double abs_tol, unsigned max_depth = 30);

/// Wynn epsilon extrapolation of a sequence of partial sums. Returns the best
/// estimate and an error estimate from the last two diagonal entries.
Result wynn_epsilon(std::span<const cplx> partial_sums);

/// Cumulative integral of uniformly or non-uniformly sampled data, trapezoid.
std::vector<double> cumulative_trapezoid(std::span<const double> t, std::span<const double> g);

/// Cumulative integral with a four-point (cubic) local rule on every step.
/// Fourth-order for smooth data; falls back to trapezoid when fewer than 4 samples.
std::vector<double> cumulative_cubic(std::span<const double> t, std::span<const double> g);

}  // namespace sdnse::quad
