#pragma once

#include <complex>
#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include <boost/rational.hpp>

namespace sdnse::testfns {

using cplx = std::complex<double>;
using Rational = boost::rational<std::int64_t>;

/// Level data for the Jones construction: a_l = 3*2^(l-1), eps_l = pi/(4 a_l).
struct JonesParams {
    int level = 1;
    double a = 3.0;
    double eps = 0.0;

    static JonesParams for_level(int level);

    /// h_l is supported on [-pi/(2a), pi/(2a)]; this is also the cube half-edge.
    double h_half_width() const;
    /// chi_l = f_l * h_l is supported on [-pi/2^(l+1), pi/2^(l+1)].
    double chi_half_width() const;
    /// Region where chi_l(x) = h_l(0) alpha_l e^{-ix} exactly.
    double core_half_width() const;
    double cube_edge() const { return 2.0 * h_half_width(); }
};

/// Boustrophedon diagonal pairing N x N -> N, 1-based:
/// (1,1)->1, (2,1)->2, (1,2)->3, (1,3)->4, (2,2)->5, (3,1)->6, (4,1)->7, ...
std::int64_t pair_index(std::int64_t l, std::int64_t i);
std::pair<std::int64_t, std::int64_t> unpair_index(std::int64_t k);

/// Calkin–Wilf sequence value at position j >= 1 (1, 1/2, 2, 1/3, 3/2, ...).
Rational calkin_wilf(std::int64_t j);

/// Bijection N -> Q: 1 -> 0, then +cw(j), -cw(j) interleaved.
Rational enumerate_rationals(std::int64_t i);

/// i-th point of Q^n: the index is unpaired repeatedly, one coordinate at a time.
std::vector<Rational> enumerate_point(std::int64_t i, int dim);

/// Cube B_l(x^i) paired with its position k in the functional sequence.
struct CubeIndex {
    std::int64_t k = 1;
    std::int64_t l = 1;
    std::int64_t i = 1;
    int dim = 1;
    std::vector<Rational> center;
    std::vector<double> center_d;
    double edge = 0.0;

    static CubeIndex from_k(std::int64_t k, int dim);

    double lo(int axis) const { return center_d[axis] - 0.5 * edge; }
    double hi(int axis) const { return center_d[axis] + 0.5 * edge; }
    double diagonal() const;
    double center_norm() const;
    bool contains(std::span<const double> x) const;
};

/// g(x, y) = exp(-y^a e^{iax}). Requires y >= 0 and a > 1.
cplx jones_g(double x, double y, double a);

struct JonesH {
    cplx value;
    double error;
};

/// h(x) = int_0^inf g(x, y) dy on [-pi/(2a), pi/(2a)], zero outside.
/// Throws quad::QuadratureError when the requested tolerance is not reached.
JonesH jones_h_with_error(double x, double a, double tol = 1e-10);
inline cplx jones_h(double x, double a, double tol = 1e-10) { return jones_h_with_error(x, a, tol).value; }

/// int_{-1}^{1} exp(1/(t^2-1)) dt, the unnormalised unit-bump mass.
double unit_bump_mass();

/// Normalised bump f_l(x - center), supported on |x - center| < eps_l.
double mollifier(int level, double x, double center = 0.0);
double mollifier_derivative(int level, double x, double center = 0.0);

enum class XiMode { Convolution, ClosedFormCore };
enum class XiVariant { Complex, LiteralReal };

struct FamilySettings {
    double tol = 1e-10;
    int h_cache_intervals = 512;
    int convolution_panels = 32;
    XiMode mode = XiMode::Convolution;
    XiVariant variant = XiVariant::Complex;
};

/// The per-level caches of h_l, alpha_l and the evaluation of chi, xi and E_k.
/// All caches are built in the constructor; every method is const and
/// safe to call concurrently.
class TestFunctionFamily {
public:
    TestFunctionFamily(int dim, int max_level, FamilySettings settings = {});

    int dim() const { return dim_; }
    int max_level() const { return static_cast<int>(levels_.size()); }
    const FamilySettings& settings() const { return settings_; }

    const JonesParams& params(int level) const;
    cplx h0(int level) const;
    double alpha(int level) const;
    /// Cached h_l, cubic interpolation; zero outside its interval.
    cplx h_cached(int level, double x) const;

    /// chi_l(t) = (f_l * h_l)(t) by composite Gauss–Legendre convolution.
    cplx chi(int level, double t) const;
    cplx chi_derivative(int level, double t) const;
    /// h_l(0) alpha_l e^{-it}; only meaningful for |t| <= core_half_width.
    cplx chi_closed_core(int level, double t) const;

    /// Real factor 1/(n h_l(0) alpha_l 3^{pi+|x^k|}). Throws std::overflow_error.
    double xi_scale(const CubeIndex& cube) const;
    /// xi along one axis of the cube: depends on x - center[axis] only.
    cplx xi(const CubeIndex& cube, int axis, double x) const;
    cplx xi_derivative(const CubeIndex& cube, int axis, double x) const;
    /// E_k(x); zero vector outside the closed cube.
    std::vector<cplx> eval_E(const CubeIndex& cube, std::span<const double> point) const;

private:
    struct LevelCache {
        JonesParams params;
        cplx h0;
        double alpha = 0.0;
        std::vector<cplx> h_nodes;
        double h_step = 0.0;
    };

    const LevelCache& level(int l) const;
    cplx convolve(const LevelCache& lc, double t, bool derivative) const;
    cplx xi_offset(const CubeIndex& cube, double t, bool derivative) const;

    int dim_;
    FamilySettings settings_;
    std::vector<LevelCache> levels_;
};

}  // namespace sdnse::testfns
