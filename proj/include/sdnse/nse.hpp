#pragma once

#include <array>
#include <cmath>
#include <complex>
#include <cstdint>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "sdnse/config.hpp"
#include "sdnse/field.hpp"

namespace sdnse::sd {
class SdSpace;
}

namespace sdnse::nse {

using cplx = std::complex<double>;

struct SolverError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Velocity on the periodic box [-L/2, L/2)^3 stored as half-spectrum
/// coefficients (r2c layout, last axis halved), normalised so that the
/// physical samples are the plain inverse DFT. Reality symmetry holds by
/// construction of the layout.
class SpectralField {
public:
    SpectralField() = default;
    SpectralField(int N, double L);

    static SpectralField from_physical(int N, double L,
                                       const std::function<std::array<double, 3>(double, double, double)>& fn);
    static SpectralField from_samples(int N, double L, const std::array<std::vector<double>, 3>& samples);

    int N() const { return N_; }
    double L() const { return L_; }
    std::size_t modes() const { return static_cast<std::size_t>(N_) * N_ * (N_ / 2 + 1); }
    std::vector<cplx>& comp(int c) { return c_[c]; }
    const std::vector<cplx>& comp(int c) const { return c_[c]; }

    /// Signed integer wavenumbers of mode idx.
    std::array<int, 3> wavenumber(std::size_t idx) const;
    /// Physical wavevector (2 pi / L) n.
    std::array<double, 3> wavevector(std::size_t idx) const;
    /// Multiplicity of a stored mode in the full spectrum (1 or 2).
    double weight(std::size_t idx) const;

    std::vector<double> to_physical(int c) const;
    std::array<std::vector<double>, 3> to_physical() const;

    double l2_norm() const;
    /// ||grad u||_2.
    double grad_l2_norm() const;
    /// max_k |k . u_k| / max_k |k||u_k| (0 for a constant field).
    double divergence_ratio() const;
    /// max |div u| over the physical grid.
    double divergence_max() const;
    double max_abs() const;

    SpectralField& operator+=(const SpectralField& o);
    SpectralField& operator-=(const SpectralField& o);
    SpectralField& operator*=(double s);
    /// this += s * o
    SpectralField& axpy(double s, const SpectralField& o);

    bool same_shape(const SpectralField& o) const { return N_ == o.N_ && std::abs(L_ - o.L_) <= 1e-12 * L_; }

private:
    int N_ = 0;
    double L_ = 0.0;
    std::array<std::vector<cplx>, 3> c_;
};

SpectralField operator+(SpectralField a, const SpectralField& b);
SpectralField operator-(SpectralField a, const SpectralField& b);
SpectralField operator*(double s, SpectralField a);

/// Forward / inverse real 3-D transforms of an N^3 periodic array (forward divided by N^3).
void forward_transform(int N, const std::vector<double>& in, std::vector<cplx>& out);
void inverse_transform(int N, const std::vector<cplx>& in, std::vector<double>& out);

/// L2 inner product over the box (real part of the Hermitian product).
double inner_l2(const SpectralField& a, const SpectralField& b);

/// 2/3 rule: keep modes with 3|n_i| < N on every axis.
bool retained(int N, const std::array<int, 3>& n);
void dealias(SpectralField& u);
bool is_dealiased(const SpectralField& u);

SpectralField leray_project(SpectralField v);
SpectralField stokes_semigroup(SpectralField u0, double t, double nu);
/// P[(u . grad) v], pseudo-spectrally; with dealias the inputs are truncated
/// first and the product is truncated after.
SpectralField nonlinear_B(const SpectralField& u, const SpectralField& v, bool dealias_on = true);

SpectralField taylor_green(int N, double L, double amplitude);
/// amplitude * (sin(kappa m y), 0, 0): a steady-shape Stokes mode with (u . grad) u = 0.
SpectralField shear_mode(int N, double L, double amplitude, int m);
/// Random divergence-free dealiased field with modes |n|_inf <= nmax and the given L2 norm.
SpectralField random_field(int N, double L, std::uint64_t seed, double l2, int nmax = 4);

/// Samples on the closed grid (N+1 points per axis on [-L/2, L/2]) for the
/// SD functionals and the CSV format.
SampledField sample_closure(const SpectralField& u);
SpectralField from_closure(const SampledField& f);

struct DensityField {
    int N = 0;
    double L = 0.0;
    std::vector<double> rho;

    double min() const;
    double max() const;
    double mass() const;
};
SampledField sample_closure(const DensityField& r);
DensityField density_from_closure(const SampledField& f);

/// Periodic cubic interpolation at arbitrary points; with clamp the value is
/// limited to the range of the eight surrounding nodes.
double periodic_interpolate(int N, double L, const std::vector<double>& v, const std::array<double, 3>& x, bool clamp);

/// One semi-Lagrangian step: departure points by the midpoint rule using the
/// mean of the two velocities, clamped cubic interpolation.
DensityField advect_density(const DensityField& rho, const SpectralField& u_old, const SpectralField& u_new, double dt);

struct ForcingSpec {
    std::string type = "zero";  // zero | lowmode
    double amplitude = 0.0;
    double theta = 0.5;   // envelope (1 + t)^-theta
    double delta = 0.0;   // modulation 1 + delta sin(omega t)
    double omega = 1.0;
};

struct InitialSpec {
    std::string type = "taylor-green";  // taylor-green | shear | random | zero
    double amplitude = 1.0;
    int mode = 1;
    int nmax = 4;
    std::uint64_t seed = 1;
};

struct DensitySpec {
    bool enabled = false;
    double mu = 0.1;
    double beta = 1.0;
    double rho_min = 0.2;
    double rho_max = 1.0;
    std::string profile = "cosine";  // cosine | uniform
    double floor = 1e-3;             // mu / rho uses max(rho, floor * beta)
};

struct SolverConfig {
    double nu = 0.1;
    int N = 32;
    double L = 6.283185307179586;
    double dt = 0.01;
    double T = 1.0;
    bool dealias = true;
    bool nonlinear = true;
    double cfl_max = 0.8;
    int checkpoint_every = 10;  // steps
    int series_every = 1;       // steps
    int sd_K = 0;               // 0 disables the SD column
    std::uint64_t seed = 1;
    ForcingSpec forcing;
    InitialSpec initial;
    DensitySpec density;

    /// Effective viscosity: nu, or mu / beta for the density variant.
    double nu_eff() const { return density.enabled ? density.mu / density.beta : nu; }
    int steps() const;
    void validate() const;
    std::string to_ini() const;
};

SolverConfig load_solver_config(const KeyValueConfig& cfg);

double forcing_envelope(const ForcingSpec& f, double t);
/// P f(t) (the low-mode profile is already divergence-free).
SpectralField forcing_field(const SolverConfig& cfg, double t);

SpectralField initial_velocity(const SolverConfig& cfg);
std::optional<DensityField> initial_density(const SolverConfig& cfg);

struct State {
    double t = 0.0;
    SpectralField u;
    std::optional<DensityField> rho;
};

/// Explicit right-hand side -B(u,u) + P f(t) (+ the variable-viscosity
/// excess P[(mu/rho - mu/beta) lap u] for the density variant).
SpectralField explicit_rhs(const SolverConfig& cfg, const SpectralField& u, const DensityField* rho, double t);

/// One integrating-factor Heun step.
void step(State& s, const SolverConfig& cfg);

struct SeriesRow {
    double t = 0.0;
    double energy = 0.0;     // 0.5 ||u||^2
    double enstrophy = 0.0;  // 0.5 ||grad u||^2
    double sd_norm = 0.0;
    double div_max = 0.0;
    double rho_min = 0.0;
    double rho_max = 0.0;
    double mass = 0.0;
    double forcing_norm = 0.0;
};

struct Trajectory {
    SolverConfig config;
    std::vector<SeriesRow> series;
    std::vector<State> checkpoints;
};

/// Runs to T; checkpoints every checkpoint_every steps (t = 0 and T always included).
Trajectory solve(const SolverConfig& cfg, const SpectralField& u0, const std::optional<DensityField>& rho0 = std::nullopt,
                 const sd::SdSpace* space = nullptr);
Trajectory solve(const SolverConfig& cfg);

/// ||u(t_j) - S(t_j) u0 - int_0^t_j S(t_j - s) N(s) ds||_2 per checkpoint, trapezoid in s.
std::vector<double> duhamel_residual(const Trajectory& traj);

void write_series_csv(const Trajectory& traj, const std::string& path);
void write_trajectory(const Trajectory& traj, const std::string& dir);
Trajectory read_trajectory(const std::string& dir);

}  // namespace sdnse::nse
