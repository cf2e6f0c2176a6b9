#include "sdnse/monitor.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <memory>
#include <numbers>

#include "sdnse/quadrature.hpp"
#include "sdnse/sdspace.hpp"

namespace sdnse::monitor {

namespace {

bool unforced(const nse::SolverConfig& cfg) { return cfg.forcing.type == "zero" || cfg.forcing.amplitude == 0.0; }

SpectralField drive(const nse::SolverConfig& cfg, const nse::State& s) {
    return nse::explicit_rhs(cfg, s.u, s.rho ? &*s.rho : nullptr, s.t);
}

// Least-squares slope of y against x.
double ls_slope(const std::vector<double>& x, const std::vector<double>& y) {
    const double n = static_cast<double>(x.size());
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= n;
    my /= n;
    double sxy = 0, sxx = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxy += (x[i] - mx) * (y[i] - my);
        sxx += (x[i] - mx) * (x[i] - mx);
    }
    return sxy / sxx;
}

json finite_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

}  // namespace

std::string to_string(Norm n) { return n == Norm::L2 ? "L2" : "SD2"; }

Norm parse_norm(const std::string& s) {
    if (s == "L2" || s == "l2") return Norm::L2;
    if (s == "SD2" || s == "sd2" || s == "sd") return Norm::SD2;
    throw std::invalid_argument("unknown norm '" + s + "' (expected L2 or SD2)");
}

NormContext::NormContext(Norm norm, const sd::SdSpace* space, int K) : norm_(norm), space_(space), K_(K) {
    if (norm_ == Norm::SD2) {
        if (!space_) throw std::invalid_argument("the SD2 norm needs an SdSpace");
        if (K_ < 1 || K_ > space_->K_max()) throw std::invalid_argument("SD truncation K outside the space");
    }
}

double NormContext::norm_of(const SpectralField& u) const {
    if (norm_ == Norm::L2) return u.l2_norm();
    return sd::sd_norm(*space_, nse::sample_closure(u), K_).real();
}

double NormContext::inner(const SpectralField& a, const SpectralField& b) const {
    if (norm_ == Norm::L2) return nse::inner_l2(a, b);
    return sd::sd_inner(*space_, nse::sample_closure(a), nse::sample_closure(b), K_).real();
}

double NormContext::inner_tail(const SpectralField& a, const SpectralField& b) const {
    if (norm_ == Norm::L2) return 0.0;
    return sd::sd_inner(*space_, nse::sample_closure(a), nse::sample_closure(b), K_).tail_bound;
}

SpectralField viscous_term(const SpectralField& u, double nu) {
    SpectralField r = u;
    for (std::size_t i = 0; i < r.modes(); ++i) {
        const auto k = r.wavevector(i);
        const double kk = k[0] * k[0] + k[1] * k[1] + k[2] * k[2];
        for (int c = 0; c < 3; ++c) r.comp(c)[i] *= -nu * kk;
    }
    return r;
}

double snapshot_M(const SpectralField& u, const NormContext& ctx) {
    const double n = ctx.norm_of(u);
    if (!(n > 0)) return std::numeric_limits<double>::quiet_NaN();
    const auto b = nse::nonlinear_B(u, u, true);
    return std::abs(ctx.inner(b, u)) / (n * n * n);
}

MEstimate estimate_M(const Trajectory& traj, const NormContext& ctx) {
    if (traj.checkpoints.size() < 2) throw std::invalid_argument("estimate_M needs at least two checkpoints");
    MEstimate m;
    m.norm = ctx.norm();
    bool any = false;
    for (const auto& s : traj.checkpoints) {
        const double r = snapshot_M(s.u, ctx);
        m.t.push_back(s.t);
        m.ratio.push_back(r);
        if (std::isfinite(r)) {
            any = true;
            m.M_hat = std::max(m.M_hat, r);
        }
    }
    if (!any) throw MonitorError("M undefined: every checkpoint has u = 0");
    return m;
}

Thresholds thresholds(double nu, double M, double f_sup) {
    if (!(nu > 0) || !(M > 0)) throw std::invalid_argument("thresholds need nu > 0 and M > 0");
    if (!(f_sup >= 0)) throw std::invalid_argument("thresholds need f_sup >= 0");
    Thresholds th;
    th.gamma = 4.0 * f_sup * M / (nu * nu);
    if (!(th.gamma < 1.0)) throw MonitorError("no real distinct roots: gamma = 4 f M / nu^2 >= 1");
    const double s = std::sqrt(1.0 - th.gamma);
    th.u_plus = nu / M * (0.5 * (1.0 + s));
    // Product of the roots is f / M; this form avoids cancellation.
    th.u_minus = 2.0 * f_sup / (nu * (1.0 + s));
    th.sigma = 0.5 * nu * th.gamma / (1.0 + s);
    return th;
}

double ball_radius(double nu, double M, double eps) {
    if (!(eps > 0 && eps < 1)) throw std::invalid_argument("ball parameter eps must lie in (0, 1)");
    return 0.5 * (1.0 - eps) * thresholds(nu, M, 0.0).u_plus;
}

double ball_sigma(double nu, double eps) { return nu * eps; }

double forcing_sup(const Trajectory& traj, const NormContext& ctx) {
    const auto& cfg = traj.config;
    if (cfg.forcing.type == "zero") return 0.0;
    double f = 0.0;
    for (const auto& s : traj.checkpoints) f = std::max(f, ctx.norm_of(nse::forcing_field(cfg, s.t)));
    if (ctx.norm() == Norm::L2)
        for (const auto& r : traj.series) f = std::max(f, r.forcing_norm);
    return f;
}

double scalar_inequality(double nu, double M, double f, double n) { return -nu * n + M * n * n + f; }

Annulus annulus(double nu, double M, double f) {
    Annulus a;
    if (M == 0.0) {
        a.lo = f / nu;
        return a;
    }
    try {
        const auto th = thresholds(nu, M, f);
        a.lo = th.u_minus;
        a.hi = th.u_plus;
    } catch (const MonitorError&) {
        a.real = false;
    }
    return a;
}

MarginPoint dissipativity_point(const SpectralField& u, const SpectralField& drv, double t,
                                const DissipativityParams& p, const NormContext& report, double tol) {
    MarginPoint m;
    m.t = t;
    const auto visc = viscous_term(u, p.nu);
    const auto a = visc + drv;
    m.norm_u_l2 = u.l2_norm();
    m.viscous_l2 = nse::inner_l2(visc, u);
    m.direct_l2 = nse::inner_l2(a, u);
    m.scalar_l2 = scalar_inequality(p.nu_l2, p.M_l2, p.f_l2, m.norm_u_l2);
    m.scalar_holds_l2 = m.scalar_l2 <= 0.0;
    m.scale_l2 = std::abs(m.viscous_l2) + drv.l2_norm() * m.norm_u_l2;
    if (report.norm() == Norm::L2) {
        m.norm_u = m.norm_u_l2;
        m.direct = m.direct_l2;
    } else {
        m.norm_u = report.norm_of(u);
        m.direct = report.inner(a, u);
    }
    m.scalar = scalar_inequality(p.nu, p.M, p.f, m.norm_u);
    m.scalar_holds = m.scalar <= 0.0;
    m.asserted = m.scalar_holds_l2;
    m.passed = !m.asserted || m.direct_l2 <= tol * m.scale_l2;
    return m;
}

DissipativityCheck check_zero_dissipativity(const Trajectory& traj, const NormContext& report, double tol) {
    const auto& cfg = traj.config;
    DissipativityCheck out;
    out.norm = report.norm();
    const NormContext l2(Norm::L2);
    auto& p = out.params;
    p.nu = cfg.nu_eff();
    const double lam1 = std::pow(2.0 * std::numbers::pi / cfg.L, 2);
    p.nu_l2 = p.nu * std::min(1.0, lam1);
    p.M_l2 = estimate_M(traj, l2).M_hat;
    p.f_l2 = forcing_sup(traj, l2);
    if (report.norm() == Norm::L2) {
        p.M = p.M_l2;
        p.f = p.f_l2;
    } else {
        p.M = estimate_M(traj, report).M_hat;
        p.f = forcing_sup(traj, report);
    }
    out.annulus = annulus(p.nu, p.M, p.f);
    out.annulus_l2 = annulus(p.nu_l2, p.M_l2, p.f_l2);
    for (const auto& s : traj.checkpoints) {
        auto m = dissipativity_point(s.u, drive(cfg, s), s.t, p, report, tol);
        out.annulus_ok = out.annulus_ok && out.annulus.contains(m.norm_u);
        out.passed = out.passed && m.passed;
        out.points.push_back(m);
    }
    return out;
}

ContractionReport check_contraction(const nse::SolverConfig& cfg, const SpectralField& u0, const SpectralField& v0,
                                    const ContractionRegion& region, double sigma, const sd::SdSpace* space,
                                    double tol) {
    cfg.validate();
    ContractionReport rep;
    rep.sigma = sigma;
    if (region.norm == Norm::SD2 && !space) throw std::invalid_argument("an SD2 region needs an SdSpace");
    const int K = space ? std::min(space->K_max(), 60) : 0;
    auto region_norm = [&](const SpectralField& u) {
        return region.norm == Norm::L2 ? u.l2_norm() : NormContext(Norm::SD2, space, K).norm_of(u);
    };

    nse::State a{0.0, u0, nse::initial_density(cfg)};
    nse::State b{0.0, v0, a.rho};
    if (cfg.dealias) {
        nse::dealias(a.u);
        nse::dealias(b.u);
    }
    rep.norm_u0 = region_norm(a.u);
    rep.norm_v0 = region_norm(b.u);
    auto inside = [&](double n) { return n >= region.lo && n <= region.hi; };
    rep.in_region = inside(rep.norm_u0) && inside(rep.norm_v0);
    if (!rep.in_region) rep.notes.push_back("initial data outside the region: monotonicity not asserted");

    auto record = [&](double t) {
        const auto diff = a.u - b.u;
        rep.t.push_back(t);
        rep.d.push_back(diff.l2_norm());
        if (space) rep.d_sd.push_back(NormContext(Norm::SD2, space, K).norm_of(diff));
    };
    record(0.0);
    const int n = cfg.steps();
    for (int i = 0; i < n; ++i) {
        std::exception_ptr ea, eb;
#pragma omp parallel sections num_threads(2)
        {
#pragma omp section
            try {
                nse::step(a, cfg);
            } catch (...) {
                ea = std::current_exception();
            }
#pragma omp section
            try {
                nse::step(b, cfg);
            } catch (...) {
                eb = std::current_exception();
            }
        }
        if (ea) std::rethrow_exception(ea);
        if (eb) std::rethrow_exception(eb);
        a.t = b.t = (i + 1) * cfg.dt;
        record(a.t);
    }

    const double d0 = rep.d.front();
    for (std::size_t j = 1; j < rep.d.size(); ++j) {
        const double prev = rep.d[j - 1], cur = rep.d[j];
        if (prev > 0) rep.worst_increase = std::max(rep.worst_increase, (cur - prev) / prev);
        if (cur > prev * (1.0 + tol)) rep.monotone = false;
        if (cur > d0 * (1.0 + tol)) rep.bounded = false;
    }
    if (d0 > 0 && std::all_of(rep.d.begin(), rep.d.end(), [](double v) { return v > 0; })) {
        std::vector<double> logd;
        for (double v : rep.d) logd.push_back(std::log(v));
        rep.rate = -ls_slope(rep.t, logd);
    }
    rep.asserted = rep.in_region;
    rep.passed = rep.bounded && (!rep.asserted || rep.monotone);
    return rep;
}

EnergySlack energy_inequality(const Trajectory& traj, double nu) {
    if (!unforced(traj.config)) throw std::invalid_argument("energy_inequality needs an unforced run");
    EnergySlack out;
    if (traj.series.empty()) return out;
    std::vector<double> g;
    for (const auto& r : traj.series) {
        out.t.push_back(r.t);
        g.push_back(2.0 * r.enstrophy);
    }
    const auto cub = quad::cumulative_cubic(out.t, g);
    const auto trap = quad::cumulative_trapezoid(out.t, g);
    out.norm0_sq = 2.0 * traj.series.front().energy;
    for (std::size_t i = 0; i < g.size(); ++i) {
        out.slack.push_back(out.norm0_sq - 2.0 * traj.series[i].energy - 2.0 * nu * cub[i]);
        out.quad_err.push_back(2.0 * nu * std::abs(cub[i] - trap[i]));
    }
    out.min_relative = *std::min_element(out.slack.begin(), out.slack.end());
    if (out.norm0_sq > 0) out.min_relative /= out.norm0_sq;
    return out;
}

std::array<double, 9> energy_matrix(const SpectralField& u) {
    const auto p = u.to_physical();
    const double h = u.L() / u.N(), cell = h * h * h;
    std::array<double, 9> e{};
    for (int a = 0; a < 3; ++a)
        for (int b = a; b < 3; ++b) {
            double s = 0.0;
            for (std::size_t i = 0; i < p[a].size(); ++i) s += p[a][i] * p[b][i];
            e[3 * a + b] = e[3 * b + a] = s * cell;
        }
    return e;
}

EnergyMatrices energy_matrices(const Trajectory& traj) {
    EnergyMatrices m;
    for (const auto& s : traj.checkpoints) {
        m.t.push_back(s.t);
        m.E.push_back(energy_matrix(s.u));
    }
    m.Kint.assign(m.E.size(), {});
    for (int e = 0; e < 9; ++e) {
        std::vector<double> g;
        for (const auto& E : m.E) g.push_back(E[e]);
        const auto c = quad::cumulative_trapezoid(m.t, g);
        for (std::size_t j = 0; j < c.size(); ++j) m.Kint[j][e] = c[j];
    }
    return m;
}

double decay_fit(const std::vector<double>& t, const std::vector<double>& d, double t_min) {
    if (t.size() != d.size()) throw std::invalid_argument("decay_fit: t and d differ in length");
    std::vector<double> x, y;
    for (std::size_t i = 0; i < t.size(); ++i)
        if (t[i] >= t_min && t[i] > 0 && d[i] > 0 && std::isfinite(d[i])) {
            x.push_back(std::log(t[i]));
            y.push_back(std::log(d[i]));
        }
    if (x.size() < 3 || x.back() == x.front())
        throw MonitorError("decay fit window too short: " + std::to_string(x.size()) + " usable points");
    return -2.0 * ls_slope(x, y);
}

DecayFit decay_fit(const Trajectory& traj, std::optional<double> t_min) {
    DecayFit out;
    const auto& cp = traj.checkpoints;
    if (cp.empty()) throw MonitorError("decay fit window too short: no checkpoints");
    const double nu = traj.config.nu_eff();
    out.t_min = t_min.value_or(0.25 * cp.back().t);
    for (const auto& s : cp) {
        out.t.push_back(s.t);
        out.d.push_back((s.u - nse::stokes_semigroup(cp.front().u, s.t - cp.front().t, nu)).l2_norm());
    }
    out.alpha_hat = decay_fit(out.t, out.d, out.t_min);
    return out;
}

json dissipativity_report(const Trajectory& traj, const ReportOptions& opt) {
    const auto& cfg = traj.config;
    if (traj.checkpoints.empty()) throw std::invalid_argument("trajectory has no checkpoints");
    auto run_cfg = cfg;
    if (opt.nu) {
        if (cfg.density.enabled) throw std::invalid_argument("nu cannot be overridden for a density run");
        run_cfg.nu = *opt.nu;
    }
    Trajectory tr = traj;
    tr.config = run_cfg;
    const double nu = run_cfg.nu_eff();

    std::unique_ptr<sd::SdSpace> space;
    if (opt.norm == Norm::SD2) space = std::make_unique<sd::SdSpace>(3, opt.K);
    const NormContext ctx(opt.norm, space.get(), opt.K);
    const NormContext l2(Norm::L2);

    json j;
    json notes = json::array();
    j["norm"] = to_string(opt.norm);
    j["nu"] = nu;
    j["K"] = opt.K;
    const auto m_l2 = estimate_M(tr, l2);
    const auto m = opt.norm == Norm::L2 ? m_l2 : estimate_M(tr, ctx);
    const double f_sup = forcing_sup(tr, ctx);
    j["M_hat"] = m.M_hat;
    j["M_hat_l2"] = m_l2.M_hat;
    j["f_sup"] = f_sup;

    Thresholds th;
    if (m.M_hat > 0) {
        th = thresholds(nu, m.M_hat, f_sup);
    } else {
        th.u_minus = f_sup / nu;
        th.u_plus = std::numeric_limits<double>::infinity();
        notes.push_back("M_hat = 0: the inequality is linear and u_plus is unbounded");
    }
    j["gamma"] = th.gamma;
    j["u_plus"] = finite_or_null(th.u_plus);
    j["u_minus"] = th.u_minus;
    j["sigma"] = th.sigma;

    const auto dc = check_zero_dissipativity(tr, ctx);
    json margins = json::array(), margins_l2 = json::array();
    for (const auto& p : dc.points) {
        margins.push_back({p.t, p.direct});
        margins_l2.push_back({p.t, p.direct_l2});
    }
    j["margins"] = margins;
    j["margins_l2"] = margins_l2;
    j["annulus_ok"] = dc.annulus_ok;
    j["dissipativity_passed"] = dc.passed;
    double nmin = std::numeric_limits<double>::infinity(), nmax = 0.0;
    for (const auto& p : dc.points) {
        nmin = std::min(nmin, p.norm_u);
        nmax = std::max(nmax, p.norm_u);
    }
    j["norm_min"] = nmin;
    j["norm_max"] = nmax;

    bool passed = dc.passed;
    if (unforced(run_cfg) && !run_cfg.density.enabled) {
        const auto es = energy_inequality(tr, nu);
        j["energy_inequality"] = {{"min_relative_slack", es.min_relative},
                                  {"max_quadrature_error", es.quad_err.empty() ? 0.0 : *std::max_element(
                                                                                          es.quad_err.begin(),
                                                                                          es.quad_err.end())}};
    }
    const auto em = energy_matrices(tr);
    json ej = json::array();
    for (std::size_t i = 0; i < em.t.size(); ++i) ej.push_back({{"t", em.t[i]}, {"E", em.E[i]}, {"K", em.Kint[i]}});
    j["energy_matrices"] = ej;

    if (opt.contraction) {
        const auto& u0 = tr.checkpoints.front().u;
        const double n0 = u0.l2_norm();
        auto v0 = u0;
        v0.axpy(opt.perturbation * (n0 > 0 ? n0 : 1.0),
                nse::random_field(u0.N(), u0.L(), opt.seed, 1.0, std::min(4, u0.N() / 3 - 1)));
        ContractionRegion region{opt.norm, th.u_minus, th.u_plus};
        double sigma = th.sigma;
        if (f_sup == 0.0 && m.M_hat > 0) {
            region = {opt.norm, 0.0, ball_radius(nu, m.M_hat, 0.5)};
            sigma = ball_sigma(nu, 0.5);
        }
        auto c_cfg = run_cfg;
        c_cfg.T = tr.checkpoints.back().t;
        json cj;
        try {
            const auto c = check_contraction(c_cfg, u0, v0, region, sigma, space.get());
            cj = {{"region", {{"norm", to_string(region.norm)}, {"lo", region.lo}, {"hi", finite_or_null(region.hi)}}},
                  {"in_region", c.in_region},
                  {"asserted", c.asserted},
                  {"monotone", c.monotone},
                  {"bounded", c.bounded},
                  {"worst_increase", c.worst_increase},
                  {"d0", c.d.front()},
                  {"d_final", c.d.back()},
                  {"rate", c.rate ? json(*c.rate) : json(nullptr)},
                  {"sigma", c.sigma},
                  {"passed", c.passed},
                  {"notes", c.notes}};
            passed = passed && c.passed;
        } catch (const nse::SolverError& e) {
            cj = {{"error", e.what()}, {"passed", false}};
            passed = false;
        }
        j["contraction"] = cj;
    } else {
        j["contraction"] = nullptr;
    }

    j["alpha_hat"] = nullptr;
    if (unforced(run_cfg)) {
        try {
            const auto df = decay_fit(tr);
            j["alpha_hat"] = df.alpha_hat;
            j["decay_window_t_min"] = df.t_min;
        } catch (const MonitorError& e) {
            notes.push_back(e.what());
        }
    } else {
        notes.push_back("forced run: decay fit skipped");
    }
    j["notes"] = notes;
    j["passed"] = passed;
    return j;
}

}  // namespace sdnse::monitor
