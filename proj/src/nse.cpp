#include "sdnse/nse.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>
#include <random>
#include <sstream>

#include "sdnse/sdspace.hpp"

namespace sdnse::nse {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

struct Plans {
    fftw_plan r2c = nullptr;
    fftw_plan c2r = nullptr;
};

// The FFTW planner is not thread-safe; execution of existing plans is.
const Plans& plans_for(int N) {
    static std::mutex mutex;
    static std::map<int, Plans> cache;
    std::lock_guard<std::mutex> lock(mutex);
    auto it = cache.find(N);
    if (it != cache.end()) return it->second;
    const std::size_t nr = static_cast<std::size_t>(N) * N * N;
    const std::size_t nc = static_cast<std::size_t>(N) * N * (N / 2 + 1);
    double* r = fftw_alloc_real(nr);
    fftw_complex* c = fftw_alloc_complex(nc);
    Plans p;
    // ESTIMATE keeps the chosen algorithm, and so the rounding, independent of timing.
    p.r2c = fftw_plan_dft_r2c_3d(N, N, N, r, c, FFTW_ESTIMATE | FFTW_UNALIGNED);
    p.c2r = fftw_plan_dft_c2r_3d(N, N, N, c, r, FFTW_ESTIMATE | FFTW_UNALIGNED);
    fftw_free(r);
    fftw_free(c);
    if (!p.r2c || !p.c2r) throw SolverError("FFTW planning failed for N = " + std::to_string(N));
    return cache.emplace(N, p).first->second;
}

int signed_index(int i, int N) { return i <= N / 2 ? i : i - N; }

void check_shape(const SpectralField& a, const SpectralField& b) {
    if (!a.same_shape(b)) throw std::invalid_argument("spectral fields on different grids");
}

}  // namespace

void forward_transform(int N, const std::vector<double>& in, std::vector<cplx>& out) {
    const auto& p = plans_for(N);
    out.resize(static_cast<std::size_t>(N) * N * (N / 2 + 1));
    std::vector<double> tmp(in);
    fftw_execute_dft_r2c(p.r2c, tmp.data(), reinterpret_cast<fftw_complex*>(out.data()));
    const double s = 1.0 / (static_cast<double>(N) * N * N);
    for (auto& z : out) z *= s;
}

void inverse_transform(int N, const std::vector<cplx>& in, std::vector<double>& out) {
    const auto& p = plans_for(N);
    out.resize(static_cast<std::size_t>(N) * N * N);
    std::vector<cplx> tmp(in);  // c2r overwrites its input
    fftw_execute_dft_c2r(p.c2r, reinterpret_cast<fftw_complex*>(tmp.data()), out.data());
}

SpectralField::SpectralField(int N, double L) : N_(N), L_(L) {
    if (N < 4 || N % 2 != 0) throw std::invalid_argument("N must be even and at least 4");
    if (!(L > 0)) throw std::invalid_argument("box length must be positive");
    for (auto& c : c_) c.assign(modes(), cplx(0.0));
}

SpectralField SpectralField::from_physical(int N, double L,
                                           const std::function<std::array<double, 3>(double, double, double)>& fn) {
    std::array<std::vector<double>, 3> s;
    for (auto& v : s) v.resize(static_cast<std::size_t>(N) * N * N);
    const double h = L / N;
    for (int i = 0; i < N; ++i)
        for (int j = 0; j < N; ++j)
            for (int k = 0; k < N; ++k) {
                const auto v = fn(-0.5 * L + i * h, -0.5 * L + j * h, -0.5 * L + k * h);
                const std::size_t idx = (static_cast<std::size_t>(i) * N + j) * N + k;
                for (int c = 0; c < 3; ++c) s[c][idx] = v[c];
            }
    return from_samples(N, L, s);
}

SpectralField SpectralField::from_samples(int N, double L, const std::array<std::vector<double>, 3>& samples) {
    SpectralField u(N, L);
    for (int c = 0; c < 3; ++c) {
        if (samples[c].size() != static_cast<std::size_t>(N) * N * N)
            throw std::invalid_argument("sample array has the wrong size");
        forward_transform(N, samples[c], u.c_[c]);
    }
    return u;
}

std::array<int, 3> SpectralField::wavenumber(std::size_t idx) const {
    const int nz = N_ / 2 + 1;
    const int k = static_cast<int>(idx % nz);
    const int j = static_cast<int>((idx / nz) % N_);
    const int i = static_cast<int>(idx / nz / N_);
    return {signed_index(i, N_), signed_index(j, N_), k};
}

std::array<double, 3> SpectralField::wavevector(std::size_t idx) const {
    const auto n = wavenumber(idx);
    const double kap = kTwoPi / L_;
    return {kap * n[0], kap * n[1], kap * n[2]};
}

double SpectralField::weight(std::size_t idx) const {
    const int k = static_cast<int>(idx % (N_ / 2 + 1));
    return (k == 0 || k == N_ / 2) ? 1.0 : 2.0;
}

namespace {

// Wavevector used for odd derivatives: Nyquist components are dropped so the
// derivative of a real field stays real.
std::array<double, 3> derivative_wavevector(const SpectralField& u, std::size_t idx) {
    auto n = u.wavenumber(idx);
    auto k = u.wavevector(idx);
    for (int a = 0; a < 3; ++a)
        if (std::abs(n[a]) == u.N() / 2) k[a] = 0.0;
    return k;
}

double k2(const std::array<double, 3>& k) { return k[0] * k[0] + k[1] * k[1] + k[2] * k[2]; }

}  // namespace

std::vector<double> SpectralField::to_physical(int c) const {
    std::vector<double> out;
    inverse_transform(N_, c_[c], out);
    return out;
}

std::array<std::vector<double>, 3> SpectralField::to_physical() const {
    return {to_physical(0), to_physical(1), to_physical(2)};
}

double SpectralField::l2_norm() const {
    double s = 0.0;
    for (int c = 0; c < 3; ++c)
        for (std::size_t i = 0; i < modes(); ++i) s += weight(i) * std::norm(c_[c][i]);
    return std::sqrt(s * L_ * L_ * L_);
}

double SpectralField::grad_l2_norm() const {
    double s = 0.0;
    for (std::size_t i = 0; i < modes(); ++i) {
        const double kk = k2(wavevector(i));
        for (int c = 0; c < 3; ++c) s += weight(i) * kk * std::norm(c_[c][i]);
    }
    return std::sqrt(s * L_ * L_ * L_);
}

double SpectralField::divergence_ratio() const {
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < modes(); ++i) {
        const auto k = wavevector(i);
        cplx d = 0.0;
        double m = 0.0;
        for (int c = 0; c < 3; ++c) {
            d += k[c] * c_[c][i];
            m += std::norm(c_[c][i]);
        }
        num = std::max(num, std::abs(d));
        den = std::max(den, std::sqrt(k2(k) * m));
    }
    return den > 0 ? num / den : 0.0;
}

double SpectralField::divergence_max() const {
    std::vector<cplx> d(modes());
    for (std::size_t i = 0; i < modes(); ++i) {
        const auto k = derivative_wavevector(*this, i);
        d[i] = cplx(0.0, 1.0) * (k[0] * c_[0][i] + k[1] * c_[1][i] + k[2] * c_[2][i]);
    }
    std::vector<double> p;
    inverse_transform(N_, d, p);
    double m = 0.0;
    for (double v : p) m = std::max(m, std::abs(v));
    return m;
}

double SpectralField::max_abs() const {
    const auto p = to_physical();
    double m = 0.0;
    for (std::size_t i = 0; i < p[0].size(); ++i)
        m = std::max(m, std::sqrt(p[0][i] * p[0][i] + p[1][i] * p[1][i] + p[2][i] * p[2][i]));
    return m;
}

SpectralField& SpectralField::operator+=(const SpectralField& o) { return axpy(1.0, o); }

SpectralField& SpectralField::operator-=(const SpectralField& o) { return axpy(-1.0, o); }

SpectralField& SpectralField::operator*=(double s) {
    for (auto& c : c_)
        for (auto& z : c) z *= s;
    return *this;
}

SpectralField& SpectralField::axpy(double s, const SpectralField& o) {
    check_shape(*this, o);
    for (int c = 0; c < 3; ++c)
        for (std::size_t i = 0; i < modes(); ++i) c_[c][i] += s * o.c_[c][i];
    return *this;
}

SpectralField operator+(SpectralField a, const SpectralField& b) { return a += b; }
SpectralField operator-(SpectralField a, const SpectralField& b) { return a -= b; }
SpectralField operator*(double s, SpectralField a) { return a *= s; }

double inner_l2(const SpectralField& a, const SpectralField& b) {
    check_shape(a, b);
    double s = 0.0;
    for (int c = 0; c < 3; ++c)
        for (std::size_t i = 0; i < a.modes(); ++i) s += a.weight(i) * std::real(a.comp(c)[i] * std::conj(b.comp(c)[i]));
    return s * a.L() * a.L() * a.L();
}

bool retained(int N, const std::array<int, 3>& n) {
    for (int a = 0; a < 3; ++a)
        if (3 * std::abs(n[a]) >= N) return false;
    return true;
}

void dealias(SpectralField& u) {
    for (std::size_t i = 0; i < u.modes(); ++i)
        if (!retained(u.N(), u.wavenumber(i)))
            for (int c = 0; c < 3; ++c) u.comp(c)[i] = 0.0;
}

bool is_dealiased(const SpectralField& u) {
    for (std::size_t i = 0; i < u.modes(); ++i)
        if (!retained(u.N(), u.wavenumber(i)))
            for (int c = 0; c < 3; ++c)
                if (u.comp(c)[i] != cplx(0.0)) return false;
    return true;
}

SpectralField leray_project(SpectralField v) {
    for (std::size_t i = 0; i < v.modes(); ++i) {
        const auto k = v.wavevector(i);
        const double kk = k2(k);
        if (kk == 0.0) continue;
        const cplx d = (k[0] * v.comp(0)[i] + k[1] * v.comp(1)[i] + k[2] * v.comp(2)[i]) / kk;
        for (int c = 0; c < 3; ++c) v.comp(c)[i] -= k[c] * d;
    }
    return v;
}

SpectralField stokes_semigroup(SpectralField u0, double t, double nu) {
    if (t < 0) throw std::invalid_argument("semigroup time must be nonnegative");
    if (t == 0.0) return u0;
    for (std::size_t i = 0; i < u0.modes(); ++i) {
        const double e = std::exp(-nu * k2(u0.wavevector(i)) * t);
        for (int c = 0; c < 3; ++c) u0.comp(c)[i] *= e;
    }
    return u0;
}

SpectralField nonlinear_B(const SpectralField& u_in, const SpectralField& v_in, bool dealias_on) {
    check_shape(u_in, v_in);
    SpectralField u = u_in, v = v_in;
    if (dealias_on) {
        dealias(u);
        dealias(v);
    }
    const int N = u.N();
    const auto up = u.to_physical();
    std::array<std::vector<double>, 3> w;
    for (auto& x : w) x.assign(static_cast<std::size_t>(N) * N * N, 0.0);
    std::vector<cplx> d(u.modes());
    std::vector<double> dp;
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) {
            for (std::size_t m = 0; m < u.modes(); ++m) d[m] = cplx(0.0, derivative_wavevector(v, m)[j]) * v.comp(i)[m];
            inverse_transform(N, d, dp);
            for (std::size_t p = 0; p < dp.size(); ++p) w[i][p] += up[j][p] * dp[p];
        }
    auto out = SpectralField::from_samples(N, u.L(), w);
    if (dealias_on) dealias(out);
    return leray_project(std::move(out));
}

SpectralField taylor_green(int N, double L, double amplitude) {
    const double kap = kTwoPi / L;
    return SpectralField::from_physical(N, L, [&](double x, double y, double z) {
        return std::array<double, 3>{amplitude * std::sin(kap * x) * std::cos(kap * y) * std::cos(kap * z),
                                     -amplitude * std::cos(kap * x) * std::sin(kap * y) * std::cos(kap * z), 0.0};
    });
}

SpectralField shear_mode(int N, double L, double amplitude, int m) {
    const double kap = kTwoPi / L;
    return SpectralField::from_physical(
        N, L, [&](double, double y, double) { return std::array<double, 3>{amplitude * std::sin(kap * m * y), 0.0, 0.0}; });
}

SpectralField random_field(int N, double L, std::uint64_t seed, double l2, int nmax) {
    SpectralField u(N, L);
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> g(0.0, 1.0);
    for (int c = 0; c < 3; ++c)
        for (std::size_t i = 0; i < u.modes(); ++i) {
            const auto n = u.wavenumber(i);
            const double re = g(rng), im = g(rng);  // drawn for every mode to keep the stream layout fixed
            if (std::max({std::abs(n[0]), std::abs(n[1]), std::abs(n[2])}) > nmax) continue;
            if (n[0] == 0 && n[1] == 0 && n[2] == 0) continue;
            const double nn = n[0] * n[0] + n[1] * n[1] + n[2] * n[2];
            u.comp(c)[i] = cplx(re, im) / (1.0 + nn);
        }
    // A round trip through physical space restores Hermitian symmetry in the k_z = 0 and Nyquist planes.
    u = SpectralField::from_samples(N, L, u.to_physical());
    dealias(u);
    u = leray_project(std::move(u));
    const double n0 = u.l2_norm();
    if (n0 > 0) u *= l2 / n0;
    return u;
}

SampledField sample_closure(const SpectralField& u) {
    const int N = u.N();
    const auto g = GridSpec::uniform(3, N + 1, -0.5 * u.L(), 0.5 * u.L());
    SampledField f(g, 3);
    const auto p = u.to_physical();
    for (int i = 0; i <= N; ++i)
        for (int j = 0; j <= N; ++j)
            for (int k = 0; k <= N; ++k) {
                const std::size_t src = (static_cast<std::size_t>(i % N) * N + j % N) * N + k % N;
                for (int c = 0; c < 3; ++c) f.component(c)[g.index(i, j, k)] = p[c][src];
            }
    return f;
}

namespace {

// Checks the closed periodic grid layout and returns N and L.
std::pair<int, double> closure_shape(const SampledField& f) {
    const auto& g = f.grid();
    if (g.dim != 3 || g.n[0] != g.n[1] || g.n[0] != g.n[2]) throw std::invalid_argument("expected a cubic 3-D grid");
    const int N = g.n[0] - 1;
    const double L = g.hi(0) - g.lo[0];
    for (int a = 0; a < 3; ++a)
        if (std::abs(g.lo[a] + 0.5 * L) > 1e-9 * L || std::abs(g.hi(a) - 0.5 * L) > 1e-9 * L)
            throw std::invalid_argument("expected the closed periodic grid on [-L/2, L/2]^3");
    return {N, L};
}

std::vector<double> drop_closure(const SampledField& f, int c, int N) {
    const auto& g = f.grid();
    std::vector<double> out(static_cast<std::size_t>(N) * N * N);
    for (int i = 0; i < N; ++i)
        for (int j = 0; j < N; ++j)
            for (int k = 0; k < N; ++k) out[(static_cast<std::size_t>(i) * N + j) * N + k] = f.component(c)[g.index(i, j, k)];
    return out;
}

}  // namespace

SpectralField from_closure(const SampledField& f) {
    if (f.components() != 3) throw std::invalid_argument("velocity checkpoints need three components");
    const auto [N, L] = closure_shape(f);
    return SpectralField::from_samples(N, L, {drop_closure(f, 0, N), drop_closure(f, 1, N), drop_closure(f, 2, N)});
}

double DensityField::min() const { return *std::min_element(rho.begin(), rho.end()); }
double DensityField::max() const { return *std::max_element(rho.begin(), rho.end()); }
double DensityField::mass() const {
    double s = 0.0;
    for (double v : rho) s += v;
    const double h = L / N;
    return s * h * h * h;
}

SampledField sample_closure(const DensityField& r) {
    const int N = r.N;
    const auto g = GridSpec::uniform(3, N + 1, -0.5 * r.L, 0.5 * r.L);
    SampledField f(g, 1);
    for (int i = 0; i <= N; ++i)
        for (int j = 0; j <= N; ++j)
            for (int k = 0; k <= N; ++k)
                f.component(0)[g.index(i, j, k)] = r.rho[(static_cast<std::size_t>(i % N) * N + j % N) * N + k % N];
    return f;
}

DensityField density_from_closure(const SampledField& f) {
    if (f.components() != 1) throw std::invalid_argument("density checkpoints need one component");
    const auto [N, L] = closure_shape(f);
    return DensityField{N, L, drop_closure(f, 0, N)};
}

double periodic_interpolate(int N, double L, const std::vector<double>& v, const std::array<double, 3>& x, bool clamp) {
    const double h = L / N;
    std::array<int, 3> i0{};
    std::array<std::array<double, 4>, 3> w{};
    for (int a = 0; a < 3; ++a) {
        const double s = (x[a] + 0.5 * L) / h;
        const double fl = std::floor(s);
        const double t = s - fl;
        i0[a] = static_cast<int>(fl);
        // Cubic Lagrange weights on nodes -1, 0, 1, 2.
        w[a][0] = -t * (t - 1) * (t - 2) / 6.0;
        w[a][1] = (t + 1) * (t - 1) * (t - 2) / 2.0;
        w[a][2] = -(t + 1) * t * (t - 2) / 2.0;
        w[a][3] = (t + 1) * t * (t - 1) / 6.0;
    }
    auto wrap = [N](int i) { return ((i % N) + N) % N; };
    auto at = [&](int i, int j, int k) { return v[(static_cast<std::size_t>(wrap(i)) * N + wrap(j)) * N + wrap(k)]; };
    double s = 0.0;
    for (int a = 0; a < 4; ++a)
        for (int b = 0; b < 4; ++b)
            for (int c = 0; c < 4; ++c) s += w[0][a] * w[1][b] * w[2][c] * at(i0[0] + a - 1, i0[1] + b - 1, i0[2] + c - 1);
    if (clamp) {
        double lo = at(i0[0], i0[1], i0[2]), hi = lo;
        for (int a = 0; a < 2; ++a)
            for (int b = 0; b < 2; ++b)
                for (int c = 0; c < 2; ++c) {
                    const double q = at(i0[0] + a, i0[1] + b, i0[2] + c);
                    lo = std::min(lo, q);
                    hi = std::max(hi, q);
                }
        s = std::clamp(s, lo, hi);
    }
    return s;
}

DensityField advect_density(const DensityField& rho, const SpectralField& u_old, const SpectralField& u_new, double dt) {
    const int N = rho.N;
    const double L = rho.L;
    if (u_old.N() != N || u_new.N() != N) throw std::invalid_argument("density and velocity grids differ");
    auto mid = u_old;
    mid += u_new;
    mid *= 0.5;
    const auto um = mid.to_physical();
    const double h = L / N;
    DensityField out{N, L, std::vector<double>(rho.rho.size())};
#pragma omp parallel for schedule(static)
    for (int i = 0; i < N; ++i)
        for (int j = 0; j < N; ++j)
            for (int k = 0; k < N; ++k) {
                const std::size_t idx = (static_cast<std::size_t>(i) * N + j) * N + k;
                const std::array<double, 3> x{-0.5 * L + i * h, -0.5 * L + j * h, -0.5 * L + k * h};
                std::array<double, 3> xh{};
                for (int a = 0; a < 3; ++a) xh[a] = x[a] - 0.5 * dt * um[a][idx];
                std::array<double, 3> xd{};
                for (int a = 0; a < 3; ++a) xd[a] = x[a] - dt * periodic_interpolate(N, L, um[a], xh, false);
                out.rho[idx] = periodic_interpolate(N, L, rho.rho, xd, true);
            }
    return out;
}

int SolverConfig::steps() const { return static_cast<int>(std::llround(T / dt)); }

void SolverConfig::validate() const {
    auto fail = [](const std::string& m) { throw ConfigError(m); };
    if (N < 8 || N % 2 != 0) fail("N must be even and at least 8");
    if (!(L > 0)) fail("L must be positive");
    if (!(dt > 0)) fail("dt must be positive");
    if (!(T >= 0)) fail("T must be nonnegative");
    if (std::abs(steps() * dt - T) > 1e-9 * std::max(1.0, T)) fail("T must be an integer multiple of dt");
    if (!(nu_eff() > 0)) fail("viscosity must be positive");
    if (!(cfl_max > 0)) fail("cfl_max must be positive");
    if (checkpoint_every < 1 || series_every < 1) fail("checkpoint_every and series_every must be at least 1");
    if (sd_K < 0) fail("sd_K must be nonnegative");
    if (forcing.type != "zero" && forcing.type != "lowmode") fail("forcing.type must be zero or lowmode");
    if (forcing.type == "lowmode" && !(forcing.theta > 0 && forcing.theta < 1)) fail("forcing.theta must lie in (0, 1)");
    if (std::abs(forcing.delta) > 1) fail("forcing.delta must satisfy |delta| <= 1");
    const auto& it = initial.type;
    if (it != "taylor-green" && it != "shear" && it != "random" && it != "zero")
        fail("initial.type must be taylor-green, shear, random or zero");
    if (density.enabled) {
        if (!(density.mu > 0) || !(density.beta > 0)) fail("density.mu and density.beta must be positive");
        if (!(density.rho_min >= 0) || density.rho_max < density.rho_min || density.rho_max > density.beta)
            fail("density needs 0 <= rho_min <= rho_max <= beta");
        if (density.profile != "cosine" && density.profile != "uniform") fail("density.profile must be cosine or uniform");
        if (!(density.floor > 0 && density.floor <= 1)) fail("density.floor must lie in (0, 1]");
        // Heun is stable for real negative z = dt * lambda >= -2.
        const int nmax = dealias ? (N - 1) / 3 : N / 2;
        const double kap = kTwoPi / L;
        const double kmax2 = 3.0 * kap * kap * nmax * nmax;
        const double rho_lo = std::max(density.rho_min, density.floor * density.beta);
        const double excess = density.mu / rho_lo - density.mu / density.beta;
        if (dt * excess * kmax2 > 2.0)
            fail("dt too large for the explicit variable-viscosity term: dt * (mu/rho_min - mu/beta) * kmax^2 = " +
                 std::to_string(dt * excess * kmax2) + " > 2");
    }
}

namespace {

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

}  // namespace

std::string SolverConfig::to_ini() const {
    std::ostringstream o;
    if (!density.enabled) o << "nu = " << fmt(nu) << "\n";
    o << "N = " << N << "\nL = " << fmt(L) << "\ndt = " << fmt(dt) << "\nT = " << fmt(T) << "\nseed = " << seed
      << "\ndealias = " << (dealias ? "true" : "false") << "\nnonlinear = " << (nonlinear ? "true" : "false")
      << "\ncfl_max = " << fmt(cfl_max) << "\ncheckpoint_every = " << checkpoint_every
      << "\nseries_every = " << series_every << "\nsd_K = " << sd_K << "\n";
    o << "\n[forcing]\ntype = " << forcing.type << "\namplitude = " << fmt(forcing.amplitude)
      << "\ntheta = " << fmt(forcing.theta) << "\ndelta = " << fmt(forcing.delta) << "\nomega = " << fmt(forcing.omega)
      << "\n";
    o << "\n[initial]\ntype = " << initial.type << "\namplitude = " << fmt(initial.amplitude) << "\nmode = " << initial.mode
      << "\nnmax = " << initial.nmax << "\nseed = " << initial.seed << "\n";
    o << "\n[density]\nenabled = " << (density.enabled ? "true" : "false") << "\nmu = " << fmt(density.mu)
      << "\nbeta = " << fmt(density.beta) << "\nrho_min = " << fmt(density.rho_min)
      << "\nrho_max = " << fmt(density.rho_max) << "\nprofile = " << density.profile
      << "\nfloor = " << fmt(density.floor) << "\n";
    return o.str();
}

SolverConfig load_solver_config(const KeyValueConfig& c) {
    c.require_known({"nu",           "N",           "L",
                     "dt",           "T",           "seed",
                     "dealias",      "nonlinear",   "cfl_max",
                     "checkpoint_every", "series_every", "sd_K",
                     "forcing.type", "forcing.amplitude", "forcing.theta",
                     "forcing.delta", "forcing.omega", "initial.type",
                     "initial.amplitude", "initial.mode", "initial.nmax",
                     "initial.seed", "density.enabled", "density.mu",
                     "density.beta", "density.rho_min", "density.rho_max",
                     "density.profile", "density.floor"});
    SolverConfig s;
    s.N = static_cast<int>(c.get_int("N", s.N));
    s.L = c.get_double("L", s.L);
    s.dt = c.get_double("dt", s.dt);
    s.T = c.get_double("T", s.T);
    s.seed = static_cast<std::uint64_t>(c.get_int("seed", static_cast<long long>(s.seed)));
    s.dealias = c.get_bool("dealias", s.dealias);
    s.nonlinear = c.get_bool("nonlinear", s.nonlinear);
    s.cfl_max = c.get_double("cfl_max", s.cfl_max);
    s.checkpoint_every = static_cast<int>(c.get_int("checkpoint_every", s.checkpoint_every));
    s.series_every = static_cast<int>(c.get_int("series_every", s.series_every));
    s.sd_K = static_cast<int>(c.get_int("sd_K", s.sd_K));
    s.forcing.type = c.get_string("forcing.type", s.forcing.type);
    s.forcing.amplitude = c.get_double("forcing.amplitude", s.forcing.amplitude);
    s.forcing.theta = c.get_double("forcing.theta", s.forcing.theta);
    s.forcing.delta = c.get_double("forcing.delta", s.forcing.delta);
    s.forcing.omega = c.get_double("forcing.omega", s.forcing.omega);
    s.initial.type = c.get_string("initial.type", s.initial.type);
    s.initial.amplitude = c.get_double("initial.amplitude", s.initial.amplitude);
    s.initial.mode = static_cast<int>(c.get_int("initial.mode", s.initial.mode));
    s.initial.nmax = static_cast<int>(c.get_int("initial.nmax", s.initial.nmax));
    s.initial.seed = static_cast<std::uint64_t>(c.get_int("initial.seed", static_cast<long long>(s.seed)));
    s.density.enabled = c.get_bool("density.enabled", s.density.enabled);
    s.density.mu = c.get_double("density.mu", s.density.mu);
    s.density.beta = c.get_double("density.beta", s.density.beta);
    s.density.rho_min = c.get_double("density.rho_min", s.density.rho_min);
    s.density.rho_max = c.get_double("density.rho_max", s.density.rho_max);
    s.density.profile = c.get_string("density.profile", s.density.profile);
    s.density.floor = c.get_double("density.floor", s.density.floor);
    if (s.density.enabled && c.has("nu"))
        throw ConfigError(c.origin() + ": nu is derived as density.mu / density.beta when density is enabled");
    s.nu = c.get_double("nu", s.nu);
    s.validate();
    return s;
}

double forcing_envelope(const ForcingSpec& f, double t) {
    if (f.type == "zero") return 0.0;
    return std::pow(1.0 + t, -f.theta) * (1.0 + f.delta * std::sin(f.omega * t));
}

SpectralField forcing_field(const SolverConfig& cfg, double t) {
    SpectralField f(cfg.N, cfg.L);
    const double a = cfg.forcing.amplitude * forcing_envelope(cfg.forcing, t);
    if (a == 0.0) return f;
    const double kap = kTwoPi / cfg.L;
    f = SpectralField::from_physical(cfg.N, cfg.L, [&](double x, double y, double z) {
        return std::array<double, 3>{a * std::sin(kap * z), a * std::sin(kap * x), a * std::sin(kap * y)};
    });
    return f;
}

SpectralField initial_velocity(const SolverConfig& cfg) {
    const auto& in = cfg.initial;
    if (in.type == "taylor-green") return taylor_green(cfg.N, cfg.L, in.amplitude);
    if (in.type == "shear") return shear_mode(cfg.N, cfg.L, in.amplitude, in.mode);
    if (in.type == "random") return random_field(cfg.N, cfg.L, in.seed, in.amplitude, in.nmax);
    return SpectralField(cfg.N, cfg.L);
}

std::optional<DensityField> initial_density(const SolverConfig& cfg) {
    if (!cfg.density.enabled) return std::nullopt;
    const int N = cfg.N;
    const double L = cfg.L, h = L / N, kap = kTwoPi / L;
    const double lo = cfg.density.rho_min, hi = cfg.density.rho_max;
    DensityField r{N, L, std::vector<double>(static_cast<std::size_t>(N) * N * N)};
    for (int i = 0; i < N; ++i)
        for (int j = 0; j < N; ++j)
            for (int k = 0; k < N; ++k) {
                double v = hi;
                if (cfg.density.profile == "cosine") {
                    const double c = std::cos(kap * (-0.5 * L + i * h)) * std::cos(kap * (-0.5 * L + j * h)) *
                                     std::cos(kap * (-0.5 * L + k * h));
                    v = lo + (hi - lo) * 0.5 * (1.0 + c);
                }
                r.rho[(static_cast<std::size_t>(i) * N + j) * N + k] = v;
            }
    return r;
}

SpectralField explicit_rhs(const SolverConfig& cfg, const SpectralField& u, const DensityField* rho, double t) {
    SpectralField r = cfg.nonlinear ? -1.0 * nonlinear_B(u, u, cfg.dealias) : SpectralField(u.N(), u.L());
    if (cfg.forcing.type != "zero") r += forcing_field(cfg, t);
    if (rho) {
        const double mu = cfg.density.mu, nu0 = mu / cfg.density.beta;
        const double floor = cfg.density.floor * cfg.density.beta;
        SpectralField lap = u;
        for (std::size_t i = 0; i < lap.modes(); ++i) {
            const double kk = k2(lap.wavevector(i));
            for (int c = 0; c < 3; ++c) lap.comp(c)[i] *= -kk;
        }
        auto p = lap.to_physical();
        for (int c = 0; c < 3; ++c)
            for (std::size_t i = 0; i < p[c].size(); ++i) p[c][i] *= mu / std::max(rho->rho[i], floor) - nu0;
        auto ex = SpectralField::from_samples(u.N(), u.L(), p);
        if (cfg.dealias) dealias(ex);
        r += leray_project(std::move(ex));
    }
    return r;
}

namespace {

void check_state(const SpectralField& u, const SolverConfig& cfg, double t) {
    for (int c = 0; c < 3; ++c)
        for (const auto& z : u.comp(c))
            if (!std::isfinite(z.real()) || !std::isfinite(z.imag()))
                throw SolverError("non-finite velocity at t = " + fmt(t));
    const double cfl = cfg.dt * u.max_abs() * cfg.N / cfg.L;
    if (cfl > cfg.cfl_max)
        throw SolverError("CFL number " + fmt(cfl) + " exceeds cfl_max = " + fmt(cfg.cfl_max) + " at t = " + fmt(t));
}

}  // namespace

void step(State& s, const SolverConfig& cfg) {
    const double dt = cfg.dt, nu = cfg.nu_eff();
    const DensityField* rho = s.rho ? &*s.rho : nullptr;
    const auto N0 = explicit_rhs(cfg, s.u, rho, s.t);
    auto pred = s.u;
    pred.axpy(dt, N0);
    const auto u1 = stokes_semigroup(std::move(pred), dt, nu);
    std::optional<DensityField> rho1;
    if (rho) rho1 = advect_density(*rho, s.u, u1, dt);
    const auto N1 = explicit_rhs(cfg, u1, rho1 ? &*rho1 : nullptr, s.t + dt);
    auto base = s.u;
    base.axpy(0.5 * dt, N0);
    auto next = stokes_semigroup(std::move(base), dt, nu);
    next.axpy(0.5 * dt, N1);
    s.u = std::move(next);
    s.rho = std::move(rho1);
    s.t += dt;
    check_state(s.u, cfg, s.t);
    if (s.rho)
        for (double v : s.rho->rho)
            if (!std::isfinite(v)) throw SolverError("non-finite density at t = " + fmt(s.t));
}

namespace {

SeriesRow make_row(const State& s, const SolverConfig& cfg, const sd::SdSpace* space) {
    SeriesRow r;
    r.t = s.t;
    const double l2 = s.u.l2_norm(), g2 = s.u.grad_l2_norm();
    r.energy = 0.5 * l2 * l2;
    r.enstrophy = 0.5 * g2 * g2;
    r.div_max = s.u.divergence_max();
    if (space) r.sd_norm = sd::sd_norm(*space, sample_closure(s.u), space->K_max()).real();
    if (s.rho) {
        r.rho_min = s.rho->min();
        r.rho_max = s.rho->max();
        r.mass = s.rho->mass();
    }
    r.forcing_norm = cfg.forcing.type == "zero" ? 0.0 : forcing_field(cfg, s.t).l2_norm();
    return r;
}

}  // namespace

Trajectory solve(const SolverConfig& cfg, const SpectralField& u0, const std::optional<DensityField>& rho0,
                 const sd::SdSpace* space) {
    cfg.validate();
    if (u0.N() != cfg.N || std::abs(u0.L() - cfg.L) > 1e-12 * cfg.L)
        throw std::invalid_argument("initial velocity grid does not match the configuration");
    if (u0.divergence_ratio() > 1e-10) throw std::invalid_argument("initial velocity is not divergence-free");
    if (cfg.density.enabled != rho0.has_value())
        throw std::invalid_argument("density field must be given exactly when density is enabled");
    if (rho0) {
        if (rho0->N != cfg.N) throw std::invalid_argument("density grid does not match the configuration");
        if (rho0->min() < 0 || rho0->max() > cfg.density.beta)
            throw std::invalid_argument("initial density must satisfy 0 <= rho <= beta");
    }
    std::unique_ptr<sd::SdSpace> own;
    if (!space && cfg.sd_K > 0) {
        own = std::make_unique<sd::SdSpace>(3, cfg.sd_K);
        space = own.get();
    }
    Trajectory traj;
    traj.config = cfg;
    State s{0.0, u0, rho0};
    if (cfg.dealias) dealias(s.u);
    check_state(s.u, cfg, 0.0);
    const int n = cfg.steps();
    for (int i = 0;; ++i) {
        if (i % cfg.series_every == 0 || i == n) traj.series.push_back(make_row(s, cfg, space));
        if (i % cfg.checkpoint_every == 0 || i == n) traj.checkpoints.push_back(s);
        if (i == n) break;
        step(s, cfg);
        // Times are rebuilt from the step count to avoid accumulated rounding.
        s.t = (i + 1) * cfg.dt;
    }
    return traj;
}

Trajectory solve(const SolverConfig& cfg) { return solve(cfg, initial_velocity(cfg), initial_density(cfg)); }

std::vector<double> duhamel_residual(const Trajectory& traj) {
    const auto& cp = traj.checkpoints;
    const auto& cfg = traj.config;
    std::vector<double> out;
    if (cp.empty()) return out;
    const double nu = cfg.nu_eff();
    const auto& u0 = cp.front().u;
    auto rhs = [&](const State& s) { return explicit_rhs(cfg, s.u, s.rho ? &*s.rho : nullptr, s.t); };
    SpectralField integral(u0.N(), u0.L());
    auto prev = rhs(cp.front());
    out.push_back(0.0);
    for (std::size_t j = 1; j < cp.size(); ++j) {
        const double d = cp[j].t - cp[j - 1].t;
        const auto cur = rhs(cp[j]);
        integral.axpy(0.5 * d, prev);
        integral = stokes_semigroup(std::move(integral), d, nu);
        integral.axpy(0.5 * d, cur);
        auto r = cp[j].u - stokes_semigroup(u0, cp[j].t, nu);
        r -= integral;
        out.push_back(r.l2_norm());
        prev = cur;
    }
    return out;
}

void write_series_csv(const Trajectory& traj, const std::string& path) {
    std::FILE* fp = std::fopen(path.c_str(), "w");
    if (!fp) throw std::runtime_error("cannot open " + path + " for writing");
    std::fprintf(fp, "t,E,enstrophy,sd_norm,div_max,rho_min,rho_max,mass,forcing_norm\n");
    for (const auto& r : traj.series)
        std::fprintf(fp, "%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n", r.t, r.energy, r.enstrophy, r.sd_norm,
                     r.div_max, r.rho_min, r.rho_max, r.mass, r.forcing_norm);
    if (std::fclose(fp) != 0) throw std::runtime_error("failed writing " + path);
}

namespace {

std::string checkpoint_name(const char* stem, std::size_t i) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%s_%04zu.csv", stem, i);
    return buf;
}

std::vector<std::vector<std::string>> read_csv_rows(const std::string& path, const std::string& expected_header) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);
    std::string line;
    if (!std::getline(in, line) || line != expected_header) throw std::runtime_error(path + ": unexpected header");
    std::vector<std::vector<std::string>> rows;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::vector<std::string> cells;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) cells.push_back(cell);
        rows.push_back(std::move(cells));
    }
    return rows;
}

double to_double(const std::string& s, const std::string& where) {
    std::size_t used = 0;
    double v = 0;
    try {
        v = std::stod(s, &used);
    } catch (const std::exception&) {
        used = 0;
    }
    if (used != s.size() || s.empty()) throw std::runtime_error(where + ": not a number: " + s);
    return v;
}

}  // namespace

void write_trajectory(const Trajectory& traj, const std::string& dir) {
    namespace fs = std::filesystem;
    fs::create_directories(dir);
    {
        std::ofstream out(fs::path(dir) / "run.ini");
        out << traj.config.to_ini();
        if (!out) throw std::runtime_error("failed writing run.ini in " + dir);
    }
    write_series_csv(traj, (fs::path(dir) / "series.csv").string());
    std::FILE* fp = std::fopen((fs::path(dir) / "checkpoints.csv").c_str(), "w");
    if (!fp) throw std::runtime_error("cannot write checkpoints.csv in " + dir);
    std::fprintf(fp, "index,t,velocity,density\n");
    for (std::size_t i = 0; i < traj.checkpoints.size(); ++i) {
        const auto& s = traj.checkpoints[i];
        const auto un = checkpoint_name("u", i);
        write_field_csv(sample_closure(s.u), (fs::path(dir) / un).string());
        std::string rn;
        if (s.rho) {
            rn = checkpoint_name("rho", i);
            write_field_csv(sample_closure(*s.rho), (fs::path(dir) / rn).string());
        }
        std::fprintf(fp, "%zu,%.17g,%s,%s\n", i, s.t, un.c_str(), rn.c_str());
    }
    if (std::fclose(fp) != 0) throw std::runtime_error("failed writing checkpoints.csv in " + dir);
}

Trajectory read_trajectory(const std::string& dir) {
    namespace fs = std::filesystem;
    Trajectory traj;
    traj.config = load_solver_config(KeyValueConfig::load((fs::path(dir) / "run.ini").string()));
    const auto series_path = (fs::path(dir) / "series.csv").string();
    for (const auto& row : read_csv_rows(series_path, "t,E,enstrophy,sd_norm,div_max,rho_min,rho_max,mass,forcing_norm")) {
        if (row.size() != 9) throw std::runtime_error(series_path + ": wrong number of columns");
        SeriesRow r;
        double* dst[9] = {&r.t, &r.energy, &r.enstrophy, &r.sd_norm, &r.div_max, &r.rho_min, &r.rho_max, &r.mass, &r.forcing_norm};
        for (int c = 0; c < 9; ++c) *dst[c] = to_double(row[c], series_path);
        traj.series.push_back(r);
    }
    const auto cp_path = (fs::path(dir) / "checkpoints.csv").string();
    for (auto row : read_csv_rows(cp_path, "index,t,velocity,density")) {
        if (row.size() == 3) row.emplace_back();
        if (row.size() != 4) throw std::runtime_error(cp_path + ": wrong number of columns");
        State s;
        s.t = to_double(row[1], cp_path);
        s.u = from_closure(read_field_csv((fs::path(dir) / row[2]).string()));
        if (!row[3].empty()) s.rho = density_from_closure(read_field_csv((fs::path(dir) / row[3]).string()));
        if (s.u.N() != traj.config.N) throw std::runtime_error(cp_path + ": checkpoint grid does not match run.ini");
        traj.checkpoints.push_back(std::move(s));
    }
    if (traj.checkpoints.empty()) throw std::runtime_error(cp_path + ": no checkpoints");
    return traj;
}

}  // namespace sdnse::nse
