#pragma once

#include <array>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "sdnse/nse.hpp"

namespace sdnse::sd {
class SdSpace;
}

namespace sdnse::monitor {

using json = nlohmann::json;
using nse::SpectralField;
using nse::Trajectory;

struct MonitorError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

enum class Norm { L2, SD2 };
std::string to_string(Norm n);
Norm parse_norm(const std::string& s);

/// Evaluates norms and inner products of velocity fields in L2 or in the
/// truncated SD2 norm (closure-grid samples, first K functionals).
class NormContext {
public:
    explicit NormContext(Norm norm, const sd::SdSpace* space = nullptr, int K = 60);

    Norm norm() const { return norm_; }
    int K() const { return K_; }
    double norm_of(const SpectralField& u) const;
    double inner(const SpectralField& a, const SpectralField& b) const;
    /// Truncation tail bound of inner(a, b) (0 in L2).
    double inner_tail(const SpectralField& a, const SpectralField& b) const;

private:
    Norm norm_;
    const sd::SdSpace* space_;
    int K_;
};

/// nu * Delta u (the Stokes term -nu A u for a divergence-free field).
SpectralField viscous_term(const SpectralField& u, double nu);

struct MEstimate {
    Norm norm = Norm::L2;
    double M_hat = 0.0;
    std::vector<double> t;
    std::vector<double> ratio;  // |<B(u,u),u>| / ||u||^3 per checkpoint, NaN where u = 0
};

/// Throws MonitorError("M undefined") when every checkpoint has u = 0.
MEstimate estimate_M(const Trajectory& traj, const NormContext& ctx);
double snapshot_M(const SpectralField& u, const NormContext& ctx);

struct Thresholds {
    double gamma = 0.0;
    double u_minus = 0.0;
    double u_plus = 0.0;
    double sigma = 0.0;
};

/// Roots of M u^2 - nu u + f = 0. Throws MonitorError("no real distinct roots")
/// when gamma = 4 f M / nu^2 >= 1.
Thresholds thresholds(double nu, double M, double f_sup);
/// Ball of radius (1 - eps)/2 * u_plus for f = 0, where the rate is nu * eps.
double ball_radius(double nu, double M, double eps);
double ball_sigma(double nu, double eps);

/// sup over checkpoints and series rows of ||P f(t)|| in the context norm.
double forcing_sup(const Trajectory& traj, const NormContext& ctx);

/// Scalar form -nu n + M n^2 + f of the dissipativity inequality.
double scalar_inequality(double nu, double M, double f, double n);

/// Constants of the scalar inequality in L2 (where the assertion is made) and
/// in the report norm. nu_l2 includes the Poincare factor (2 pi / L)^2.
struct DissipativityParams {
    double nu = 0.0;
    double nu_l2 = 0.0;
    double M_l2 = 0.0;
    double f_l2 = 0.0;
    double M = 0.0;
    double f = 0.0;
};

struct MarginPoint {
    double t = 0.0;
    double norm_u = 0.0;     // report norm
    double scalar = 0.0;     // -nu ||u|| + M ||u||^2 + f, report norm
    double direct = 0.0;     // <A(u,t), u>, report norm
    double norm_u_l2 = 0.0;
    double scalar_l2 = 0.0;
    double direct_l2 = 0.0;
    double viscous_l2 = 0.0;  // -nu ||grad u||^2
    double scale_l2 = 0.0;    // magnitude behind the relative tolerance
    bool scalar_holds = false;     // report norm
    bool scalar_holds_l2 = false;
    bool asserted = false;
    bool passed = true;
};

/// A(u,t) = nu Delta u + drv paired with u, where drv is the explicit part
/// -B(u,u) + P f(t) (plus the excess viscous term of the density variant).
/// The L2 pairing is asserted <= tol * scale whenever the L2 scalar inequality holds.
MarginPoint dissipativity_point(const SpectralField& u, const SpectralField& drv, double t,
                                const DissipativityParams& p, const NormContext& report, double tol = 1e-8);

struct Annulus {
    bool real = true;  // false when gamma >= 1 (empty)
    double lo = 0.0;
    double hi = std::numeric_limits<double>::infinity();
    bool contains(double n) const { return real && n >= lo && n <= hi; }
};
/// {n : -nu n + M n^2 + f <= 0}; M = 0 gives [f / nu, inf).
Annulus annulus(double nu, double M, double f);

struct DissipativityCheck {
    Norm norm = Norm::L2;
    DissipativityParams params;
    Annulus annulus;     // report norm
    Annulus annulus_l2;
    std::vector<MarginPoint> points;
    bool annulus_ok = true;  // every checkpoint inside the report-norm annulus
    bool passed = true;
};

/// Margins of <A(u,t),u> along the checkpoints with M and f_sup measured on
/// the trajectory in each norm.
DissipativityCheck check_zero_dissipativity(const Trajectory& traj, const NormContext& report, double tol = 1e-8);

struct ContractionRegion {
    Norm norm = Norm::L2;
    double lo = 0.0;
    double hi = std::numeric_limits<double>::infinity();
};

struct ContractionReport {
    std::vector<double> t;
    std::vector<double> d;     // ||u - v||_2 per step
    std::vector<double> d_sd;  // SD2 distance per step (empty without a space)
    double norm_u0 = 0.0;
    double norm_v0 = 0.0;
    bool in_region = false;
    bool monotone = true;       // nonincreasing within tol per step
    bool bounded = true;        // d(t) <= d(0)(1 + tol)
    double worst_increase = 0.0;  // max_j (d_j - d_{j-1}) / d_{j-1}
    std::optional<double> rate;   // least-squares decay rate of log d
    double sigma = 0.0;
    bool asserted = false;
    bool passed = true;
    std::vector<std::string> notes;
};

/// Runs u0 and v0 side by side under cfg. Monotonicity is asserted only when
/// both initial norms (in region.norm) lie inside the region; d(t) <= d(0)
/// is always asserted.
ContractionReport check_contraction(const nse::SolverConfig& cfg, const SpectralField& u0, const SpectralField& v0,
                                    const ContractionRegion& region, double sigma, const sd::SdSpace* space = nullptr,
                                    double tol = 1e-8);

struct EnergySlack {
    std::vector<double> t;
    std::vector<double> slack;  // ||u0||^2 - ||u||^2 - 2 nu int ||grad u||^2
    std::vector<double> quad_err;  // |cubic - trapezoid| dissipation integral
    double norm0_sq = 0.0;
    double min_relative = 0.0;  // min slack / ||u0||^2
};

/// Uses the series rows; throws std::invalid_argument for a forced run.
EnergySlack energy_inequality(const Trajectory& traj, double nu);

struct EnergyMatrices {
    std::vector<double> t;
    std::vector<std::array<double, 9>> E;
    std::vector<std::array<double, 9>> Kint;
};

/// E_hk = int u_h u_k dx by grid quadrature per checkpoint; Kint its
/// cumulative trapezoid integral in time.
EnergyMatrices energy_matrices(const Trajectory& traj);
std::array<double, 9> energy_matrix(const SpectralField& u);

/// alpha_hat = -2 * slope of log d against log t over t >= t_min.
/// Throws MonitorError when fewer than 3 usable points remain.
double decay_fit(const std::vector<double>& t, const std::vector<double>& d, double t_min = 0.0);

struct DecayFit {
    std::vector<double> t;
    std::vector<double> d;  // ||u(t) - S(t) u0||_2
    double t_min = 0.0;
    double alpha_hat = 0.0;
};
/// Distance to the Stokes evolution of the first checkpoint; t_min defaults
/// to a quarter of the final time.
DecayFit decay_fit(const Trajectory& traj, std::optional<double> t_min = std::nullopt);

struct ReportOptions {
    Norm norm = Norm::SD2;
    int K = 60;
    bool contraction = true;
    double perturbation = 1e-2;  // relative size of the contraction partner
    std::uint64_t seed = 7;
    std::optional<double> nu;    // overrides the trajectory viscosity
};

/// Full report {M_hat, f_sup, gamma, u_plus, u_minus, sigma, margins,
/// contraction, alpha_hat, ...}. Propagates MonitorError from thresholds.
json dissipativity_report(const Trajectory& traj, const ReportOptions& opt);

}  // namespace sdnse::monitor
