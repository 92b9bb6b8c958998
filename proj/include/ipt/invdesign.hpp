// Load-independent (LI) design of the single-switch inverter cell in
// normalized coordinates: steady-state switch-node waveforms for a postulated
// sinusoidal output current, the projection scalars behind the design
// formulas, and damped-Newton solvers for the LI operating point of the
// Class E and Class EF cells.
#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

#include "harmonics.hpp"

namespace ipt {

// ---------------------------------------------------------------------------
// quadrature helpers
// ---------------------------------------------------------------------------

// Composite Simpson on a uniform grid (n+1 samples).  Odd interval counts get
// a 3-point parabolic rule on the final interval.
inline double simpson_uniform(const VectorXd& y, double h) {
    const int n = static_cast<int>(y.size()) - 1;
    if (n < 2) throw std::invalid_argument("simpson_uniform: need at least 3 samples");
    double acc = 0.0;
    int m = (n % 2 == 0) ? n : n - 1;
    for (int i = 0; i + 2 <= m; i += 2) acc += h / 3.0 * (y[i] + 4.0 * y[i + 1] + y[i + 2]);
    if (n % 2 != 0) acc += h / 12.0 * (-y[n - 2] + 8.0 * y[n - 1] + 5.0 * y[n]);
    return acc;
}

// Running integral on a uniform grid: each step integrates the parabola
// through the three nearest samples, so the cumulative values keep the same
// order of accuracy as composite Simpson.
inline VectorXd cumulative_parabolic(const VectorXd& y, double h) {
    const int n = static_cast<int>(y.size()) - 1;
    VectorXd out(n + 1);
    out[0] = 0.0;
    if (n >= 1) {
        if (n == 1) {
            out[1] = 0.5 * h * (y[0] + y[1]);
            return out;
        }
        out[1] = h / 12.0 * (5.0 * y[0] + 8.0 * y[1] - y[2]);
        for (int i = 1; i < n; ++i)
            out[i + 1] = out[i] + h / 12.0 * (-y[i - 1] + 8.0 * y[i] + 5.0 * y[i + 1]);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Class E cell, normalized model
// ---------------------------------------------------------------------------
// Angle theta = wt.  Voltages are per V_in, currents per V_in/(w L1), so the
// postulated output current is p*sin(theta+phi) with p the normalized load
// amplitude (p = I_m w L1 / V_in); p = 0 means the source alone charges the
// node.  ON [0, 2piD): switch closed, u = v_ds/V_in = 0 and the input
// inductor current y ramps with unit slope.  OFF [2piD, 2pi]:
//   u' = q^2 (y - p sin(theta+phi)),   y' = 1 - u,
// q = 1/(w sqrt(L1 C1)).  The initial y is fixed by periodicity of y itself;
// the OFF system is affine, so one particular and one homogeneous
// integration close it exactly.

struct ClassEWaveforms {
    VectorXd theta;    // full cycle [0, 2pi]
    VectorXd v_ds;     // u
    VectorXd i_in;     // y
    VectorXd i_cell;   // y - p sin(theta+phi): switch current when ON, C1 current when OFF
    VectorXd beta;     // running integral of i_cell/p over the OFF span, zero while ON
    double beta_end = 0.0;  // beta at 2pi; v_ds(2pi)/V_in = q^2 p beta_end (ZVS residual)
    double y0 = 0.0;        // input inductor current at theta = 0
};

namespace detail {

struct ClassEOffProfile {
    VectorXd theta, u, y;
    double y0 = 0.0;
};

// RK4 over the OFF span for the particular (y(2piD) = 2piD, full forcing) and
// homogeneous (y(2piD) = 1, no forcing) solutions, then the periodicity
// closure y(2pi) = y(0).  Numerical integration keeps this valid for any q,
// including q = 1 where the closed-form particular solution degenerates.
inline ClassEOffProfile class_e_off_profile(double q, double phi, double duty,
                                            double p, int n_off) {
    const double th_d = 2.0 * pi * duty;
    const double h = (2.0 * pi - th_d) / n_off;
    const double q2 = q * q;

    ClassEOffProfile pr;
    pr.theta.resize(n_off + 1);
    pr.u.resize(n_off + 1);
    pr.y.resize(n_off + 1);

    // state z = (u_part, y_part, u_hom, y_hom)
    auto deriv = [&](double th, const std::array<double, 4>& z) {
        return std::array<double, 4>{q2 * (z[1] - p * std::sin(th + phi)), 1.0 - z[0],
                                     q2 * z[3], -z[2]};
    };
    std::array<double, 4> z{0.0, th_d, 0.0, 1.0};
    std::vector<std::array<double, 2>> part(n_off + 1), hom(n_off + 1);
    part[0] = {z[0], z[1]};
    hom[0] = {z[2], z[3]};
    for (int i = 0; i < n_off; ++i) {
        const double th = th_d + i * h;
        auto k1 = deriv(th, z);
        std::array<double, 4> z2;
        for (int j = 0; j < 4; ++j) z2[j] = z[j] + 0.5 * h * k1[j];
        auto k2 = deriv(th + 0.5 * h, z2);
        for (int j = 0; j < 4; ++j) z2[j] = z[j] + 0.5 * h * k2[j];
        auto k3 = deriv(th + 0.5 * h, z2);
        for (int j = 0; j < 4; ++j) z2[j] = z[j] + h * k3[j];
        auto k4 = deriv(th + h, z2);
        for (int j = 0; j < 4; ++j)
            z[j] += h / 6.0 * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j]);
        part[i + 1] = {z[0], z[1]};
        hom[i + 1] = {z[2], z[3]};
    }
    // periodicity of y: y_part(2pi) + y0 y_hom(2pi) = y0
    const double denom = 1.0 - hom[n_off][1];
    if (std::abs(denom) < 1e-12)
        throw numeric_error("class E closure singular: homogeneous return map at 1");
    pr.y0 = part[n_off][1] / denom;
    for (int i = 0; i <= n_off; ++i) {
        pr.theta[i] = th_d + i * h;
        pr.u[i] = part[i][0] + pr.y0 * hom[i][0];
        pr.y[i] = part[i][1] + pr.y0 * hom[i][1];
    }
    return pr;
}

} // namespace detail

inline ClassEWaveforms class_e_waveforms(double q, double phi, double duty,
                                         double p, int grid_n = 4096) {
    if (grid_n < 1024) throw std::invalid_argument("class_e_waveforms: grid_n must be >= 1024");
    if (!(duty > 0.0 && duty < 1.0)) throw std::invalid_argument("duty must be in (0, 1)");
    if (!(q > 0.0)) throw std::invalid_argument("q must be positive");
    if (!(p > 0.0)) throw std::invalid_argument("p must be positive");

    int n_on = std::max(2, static_cast<int>(std::lround(grid_n * duty)));
    int n_off = std::max(2, grid_n - n_on);
    if (n_off % 2 != 0) ++n_off;
    const double th_d = 2.0 * pi * duty;

    auto pr = detail::class_e_off_profile(q, phi, duty, p, n_off);

    ClassEWaveforms w;
    const int total = n_on + n_off + 1;
    w.theta.resize(total);
    w.v_ds.resize(total);
    w.i_in.resize(total);
    w.i_cell.resize(total);
    w.beta = VectorXd::Zero(total);
    w.y0 = pr.y0;
    const double h_on = th_d / n_on;
    for (int i = 0; i < n_on; ++i) {
        const double th = i * h_on;
        w.theta[i] = th;
        w.v_ds[i] = 0.0;
        w.i_in[i] = pr.y0 + th;
        w.i_cell[i] = w.i_in[i] - p * std::sin(th + phi);
    }
    for (int i = 0; i <= n_off; ++i) {
        w.theta[n_on + i] = pr.theta[i];
        w.v_ds[n_on + i] = pr.u[i];
        w.i_in[n_on + i] = pr.y[i];
        w.i_cell[n_on + i] = pr.y[i] - p * std::sin(pr.theta[i] + phi);
    }
    const double h_off = (2.0 * pi - th_d) / n_off;
    VectorXd ic_off = w.i_cell.segment(n_on, n_off + 1);
    // beta is normalized by the output amplitude (i_cell carries V_in/(w L1)
    // units, and I_m = p in those units), so that u = q^2 p beta
    w.beta.segment(n_on, n_off + 1) = cumulative_parabolic(ic_off, h_off) / p;
    w.beta_end = w.beta[total - 1];
    return w;
}

// Projection scalars of the OFF-span switch-node voltage onto the output
// current phase.  Psi1/Psi2 are the raw integrals of u sin/cos(theta+phi);
// the conventional per-cycle scalars follow as psi_i = Psi_i/(p q^2), and the
// detuning reactance as X/(w L1) = Psi2/(pi p).  Refined by grid doubling
// until both integrals settle to tol (the integrator is 4th order, so a
// couple of doublings suffice).
struct ClassEProjections {
    double psi1_raw = 0.0;  // int u sin(theta+phi) dtheta over OFF
    double psi2_raw = 0.0;  // int u cos(theta+phi) dtheta
    double u_end = 0.0;     // u(2pi)
    double u_min = 0.0, u_max = 0.0;
    int grid_n = 0;
};

inline ClassEProjections class_e_projections(double q, double phi, double duty,
                                             double p, double tol = 1e-10,
                                             int grid_start = 4096) {
    ClassEProjections out;
    double prev1 = 0.0, prev2 = 0.0;
    for (int n_off = grid_start;; n_off *= 2) {
        auto pr = detail::class_e_off_profile(q, phi, duty, p, n_off);
        const double h = (2.0 * pi - 2.0 * pi * duty) / n_off;
        VectorXd f1(n_off + 1), f2(n_off + 1);
        for (int i = 0; i <= n_off; ++i) {
            const double c = std::cos(pr.theta[i] + phi);
            const double s = std::sin(pr.theta[i] + phi);
            f1[i] = pr.u[i] * s;
            f2[i] = pr.u[i] * c;
        }
        out.psi1_raw = simpson_uniform(f1, h);
        out.psi2_raw = simpson_uniform(f2, h);
        out.u_end = pr.u[n_off];
        out.u_min = pr.u.minCoeff();
        out.u_max = pr.u.maxCoeff();
        out.grid_n = n_off;
        if (n_off > grid_start &&
            std::abs(out.psi1_raw - prev1) < tol && std::abs(out.psi2_raw - prev2) < tol)
            return out;
        if (n_off >= (1 << 17))
            return out;  // 4th-order scheme: this is already ~1e-14 territory
        prev1 = out.psi1_raw;
        prev2 = out.psi2_raw;
    }
}

// ---------------------------------------------------------------------------
// damped Newton in (q, phi) shared by both cell solvers
// ---------------------------------------------------------------------------

struct DesignSolveOptions {
    double tol = 1e-8;       // on the residual norm
    int max_iter = 60;
    double p_mid = 0.75;     // evaluation point inside the load range
    double p_lo = 0.3;       // load range probed by the flatness residual
    double p_hi = 1.2;
    int grid_n = 4096;
};

namespace detail {

struct NewtonResult {
    double q = 0.0, phi = 0.0, res_norm = 0.0;
    int iterations = 0;
    bool converged = false;
};

template <typename Res>
NewtonResult damped_newton_2d(Res&& residual, double q0, double phi0,
                              double tol, int max_iter) {
    Eigen::Vector2d x{q0, phi0};
    NewtonResult nr;
    Eigen::Vector2d r = residual(x[0], x[1]);
    double n = r.norm();
    for (int it = 0; it < max_iter; ++it) {
        nr.iterations = it;
        if (!std::isfinite(n)) return nr;
        if (n < tol) {
            nr.converged = true;
            break;
        }
        Eigen::Matrix2d jac;
        const double eps = 1e-7;
        for (int j = 0; j < 2; ++j) {
            Eigen::Vector2d xp = x;
            xp[j] += eps;
            jac.col(j) = (residual(xp[0], xp[1]) - r) / eps;
        }
        Eigen::Vector2d dx = jac.fullPivLu().solve(-r);
        if (!dx.allFinite()) return nr;
        double t = 1.0;
        Eigen::Vector2d r_new = r;
        double n_new = n;
        for (int ls = 0; ls < 40; ++ls) {
            r_new = residual(x[0] + t * dx[0], x[1] + t * dx[1]);
            n_new = r_new.norm();
            if (std::isfinite(n_new) && n_new < n) break;
            t *= 0.5;
        }
        if (!(n_new < n)) break;  // fully damped and still no progress: wrong basin
        x += t * dx;
        r = r_new;
        n = n_new;
    }
    nr.q = x[0];
    nr.phi = x[1];
    nr.res_norm = n;
    nr.converged = nr.converged || n < tol;
    return nr;
}

inline double wrap_angle(double x) {
    double w = std::remainder(x, 2.0 * pi);
    if (w <= -pi) w += 2.0 * pi;
    return w;
}

} // namespace detail

// ---------------------------------------------------------------------------
// Class E LI operating point
// ---------------------------------------------------------------------------

struct ClassEDesignConstants {
    double q = 0.0;
    double phi = 0.0;
    double duty = 0.5;
    double p_mid = 0.75;
    double x_over_wl1 = 0.0;   // detuning reactance per w L1
    double psi1 = 0.0;         // Psi1/(p q^2) at p_mid; p*psi1 is load-invariant
    double psi2 = 0.0;         // Psi2/(p q^2) at p_mid
    double v_peak = 0.0;       // max v_ds / V_in
    double beta_residual = 0.0;
    double flatness_residual = 0.0;
    int iterations = 0;
};

// Solves the two LI conditions for (q, phi): the switch-node voltage returns
// to zero at turn-on, and d(p psi1)/dp vanishes so the delivered in-phase
// voltage stays proportional to the load current.  The waveforms are affine
// in p, which makes the wide central difference for the p-derivative exact.
inline ClassEDesignConstants solve_class_e(double duty = 0.5,
                                           const DesignSolveOptions& opts = {}) {
    if (!(duty > 0.0 && duty < 1.0)) throw std::invalid_argument("duty must be in (0, 1)");
    const double dp = opts.p_hi - opts.p_lo;

    // fixed-grid Psi1 for the Newton loop; the 4th-order profile at grid_n is
    // already orders of magnitude below the solve tolerance
    auto psi1_fixed = [&](double q, double phi, double p) {
        auto pr = detail::class_e_off_profile(q, phi, duty, p, opts.grid_n);
        const double h = (2.0 * pi - 2.0 * pi * duty) / opts.grid_n;
        VectorXd f(pr.u.size());
        for (int i = 0; i < f.size(); ++i) f[i] = pr.u[i] * std::sin(pr.theta[i] + phi);
        return simpson_uniform(f, h);
    };
    auto residual = [&](double q, double phi) -> Eigen::Vector2d {
        if (!(q > 0.05)) return Eigen::Vector2d{1e30, 1e30};
        auto mid = detail::class_e_off_profile(q, phi, duty, opts.p_mid, opts.grid_n);
        const double q2 = q * q;
        const double r1 = mid.u[mid.u.size() - 1] / (q2 * opts.p_mid);  // beta(2pi)
        const double r2 =
            (psi1_fixed(q, phi, opts.p_hi) - psi1_fixed(q, phi, opts.p_lo)) / (dp * q2);
        return Eigen::Vector2d{r1, r2};
    };

    // The ZVS condition is demanded over the whole load range; u(2pi) is
    // affine in p, so pinning it at both range edges pins it everywhere.
    // This companion system is well conditioned where the primary residual
    // is nearly degenerate along the root valley, so it is used to polish
    // each converged seed before validation.
    auto zvs_pair = [&](double q, double phi) -> Eigen::Vector2d {
        if (!(q > 0.05)) return Eigen::Vector2d{1e30, 1e30};
        auto lo = detail::class_e_off_profile(q, phi, duty, opts.p_lo, opts.grid_n);
        auto hi = detail::class_e_off_profile(q, phi, duty, opts.p_hi, opts.grid_n);
        return Eigen::Vector2d{lo.u[lo.u.size() - 1] / (q * q * opts.p_lo),
                               hi.u[hi.u.size() - 1] / (q * q * opts.p_hi)};
    };

    struct Root {
        double q, phi;
        detail::NewtonResult nr;
    };
    std::vector<Root> roots;
    for (int iq = 0; iq < 7; ++iq) {
        const double q0 = 1.0 + 0.1 * iq;
        for (int ip = 0; ip < 13; ++ip) {
            const double phi0 = -pi + ip * (2.0 * pi / 12.0);
            auto nr = detail::damped_newton_2d(residual, q0, phi0, opts.tol, opts.max_iter);
            if (!nr.converged || nr.q <= 0.05) continue;
            auto pol = detail::damped_newton_2d(zvs_pair, nr.q, nr.phi, 1e-11, 30);
            if (pol.converged) {
                nr.q = pol.q;
                nr.phi = pol.phi;
            }
            const double phi_w = detail::wrap_angle(nr.phi);
            auto proj = class_e_projections(nr.q, phi_w, duty, opts.p_mid, 1e-10, opts.grid_n);
            if (proj.u_min < -1e-3 * proj.u_max) continue;  // negative drain excursion: unphysical
            // the phi -> phi+pi twin of each ZVS root absorbs power from the
            // output branch instead of delivering it; keep the inverter sign
            if (proj.psi1_raw <= 0.0) continue;
            // an LI point holds ZVS across the whole load range, not only at
            // p_mid; the relaxed two-condition system admits near-roots with
            // an affine-in-p residue, rejected by re-evaluating at the edges
            double worst_zvs = 0.0;
            for (double p : {opts.p_lo, opts.p_hi}) {
                auto edge = detail::class_e_off_profile(nr.q, phi_w, duty, p, opts.grid_n);
                worst_zvs = std::max(worst_zvs, std::abs(edge.u[edge.u.size() - 1]) /
                                                    (nr.q * nr.q * p));
            }
            if (worst_zvs > 1e-6) continue;
            bool dup = false;
            for (const auto& r : roots)
                if (std::abs(r.q - nr.q) < 1e-6 &&
                    std::abs(detail::wrap_angle(r.phi - phi_w)) < 1e-6)
                    dup = true;
            if (!dup) roots.push_back({nr.q, phi_w, nr});
        }
    }
    if (roots.empty())
        throw numeric_error("solve_class_e: no physical LI root found from the seed grid");
    auto best = *std::min_element(roots.begin(), roots.end(),
                                  [](const Root& a, const Root& b) { return a.q < b.q; });

    ClassEDesignConstants dc;
    dc.q = best.q;
    dc.phi = best.phi;
    dc.duty = duty;
    dc.p_mid = opts.p_mid;
    dc.iterations = best.nr.iterations;
    auto proj = class_e_projections(dc.q, dc.phi, duty, opts.p_mid, 1e-10, opts.grid_n);
    const double q2 = dc.q * dc.q;
    dc.psi1 = proj.psi1_raw / (opts.p_mid * q2);
    dc.psi2 = proj.psi2_raw / (opts.p_mid * q2);
    dc.x_over_wl1 = proj.psi2_raw / (pi * opts.p_mid);  // = q^2 psi2 / pi
    dc.v_peak = proj.u_max;
    Eigen::Vector2d r = residual(dc.q, dc.phi);
    dc.beta_residual = std::abs(r[0]);
    dc.flatness_residual = std::abs(r[1]);
    return dc;
}

// ---------------------------------------------------------------------------
// Class EF cell, normalized model
// ---------------------------------------------------------------------------
// Choke-fed cell: constant input current I_in, shunt C1, series L2-C2 branch
// across the switch, output current p (k+1) sin(theta+phi) in units of I_in.
// k_ratio = C1/C2, q1 = 1/(w sqrt(L2 C2)), q2 = q1 sqrt((k+1)/k).  States
// g = i_L2/I_in and h = w C2 v_C2 / I_in.  ON: v_ds = 0, so (g, h) is a free
// oscillation at q1.  OFF: C1 and C2 act in series against L2, shifting the
// branch resonance to q2 with the forced particular response at the output
// phase.  beta = w C1 v_ds / I_in obeys beta' = 1 - p(k+1) sin(theta+phi) - g
// and the scalars alpha = int beta, psi_i = int beta {sin,cos}(theta+phi)
// over the OFF span carry the design formulas; v_ds/V_in = 2 pi beta/alpha.

struct EfCoeffs {
    double a = 0.0, b = 0.0;  // ON oscillation g = a cos(q1 th) + b sin(q1 th)
    double A = 0.0, B = 0.0;  // OFF oscillation around the particular response
    double q2 = 0.0;
    double c_forced = 0.0;    // q2^2 p / (q2^2 - 1)
};

inline EfCoeffs ef_coefficients(double q1, double k_ratio, double p, double phi,
                                double duty) {
    if (!(k_ratio > 0.0)) throw std::invalid_argument("k_ratio must be positive");
    EfCoeffs co;
    co.q2 = q1 * std::sqrt((k_ratio + 1.0) / k_ratio);
    if (std::abs(co.q2 * co.q2 - 1.0) < 1e-9)
        throw numeric_error("ef_coefficients: q2 resonance degenerate with the fundamental");
    co.c_forced = co.q2 * co.q2 * p / (co.q2 * co.q2 - 1.0);
    const double c = co.c_forced;
    const double th_d = 2.0 * pi * duty;
    const double d1 = 2.0 * pi * (1.0 - duty);
    const double wd = q1 * th_d;
    const double q2 = co.q2;
    auto gp = [&](double th) { return -c * std::sin(th + phi) + 1.0 / (k_ratio + 1.0); };
    auto gpd = [&](double th) { return -c * std::cos(th + phi); };

    // unknowns (a, b, A, B): g continuous at turn-off, g' continuous there
    // (v_C2 is a state), g and h periodic across turn-on
    Eigen::Matrix4d m;
    Eigen::Vector4d r;
    m.row(0) << std::cos(wd), std::sin(wd), -1.0, 0.0;
    r[0] = gp(th_d);
    m.row(1) << q1 * std::sin(wd), -q1 * std::cos(wd), 0.0, q2;
    r[1] = -gpd(th_d);
    m.row(2) << -1.0, 0.0, std::cos(q2 * d1), std::sin(q2 * d1);
    r[2] = -gp(2.0 * pi);
    const double intgp =
        c * (std::cos(2.0 * pi + phi) - std::cos(th_d + phi)) + d1 / (k_ratio + 1.0);
    m.row(3) << std::sin(wd) / q1, (1.0 - std::cos(wd)) / q1, std::sin(q2 * d1) / q2,
        (1.0 - std::cos(q2 * d1)) / q2;
    r[3] = -intgp;
    Eigen::Vector4d x = m.fullPivLu().solve(r);
    if (!x.allFinite()) throw numeric_error("ef_coefficients: matching system singular");
    co.a = x[0];
    co.b = x[1];
    co.A = x[2];
    co.B = x[3];
    return co;
}

struct EfWaveforms {
    VectorXd theta;     // full cycle [0, 2pi]
    VectorXd i_l2;      // g
    VectorXd i_cell;    // 1 - p(k+1) sin(theta+phi) - g: switch current ON, C1 current OFF
    VectorXd beta;      // w C1 v_ds / I_in, zero while ON
    VectorXd v_ds;      // 2 pi beta / alpha = v_ds/V_in
    double beta_end = 0.0;
    double alpha = 0.0;
};

namespace detail {

// beta on the OFF span has a closed-form antiderivative of the cell current.
inline double ef_beta_at(const EfCoeffs& co, double k_ratio, double p, double phi,
                         double th_d, double th) {
    const double dl = th - th_d;
    const double q2 = co.q2;
    return dl + p * (k_ratio + 1.0) * (std::cos(th + phi) - std::cos(th_d + phi)) -
           (co.A / q2) * std::sin(q2 * dl) - (co.B / q2) * (1.0 - std::cos(q2 * dl)) -
           co.c_forced * (std::cos(th_d + phi) - std::cos(th + phi)) -
           dl / (k_ratio + 1.0);
}

} // namespace detail

inline EfWaveforms class_ef_waveforms(double q1, double k_ratio, double p, double phi,
                                      double duty, int grid_n = 8192) {
    if (grid_n < 1024) throw std::invalid_argument("class_ef_waveforms: grid_n must be >= 1024");
    if (!(duty > 0.0 && duty < 1.0)) throw std::invalid_argument("duty must be in (0, 1)");
    auto co = ef_coefficients(q1, k_ratio, p, phi, duty);
    const double th_d = 2.0 * pi * duty;
    int n_on = std::max(2, static_cast<int>(std::lround(grid_n * duty)));
    int n_off = std::max(2, grid_n - n_on);
    if (n_off % 2 != 0) ++n_off;

    EfWaveforms w;
    const int total = n_on + n_off + 1;
    w.theta.resize(total);
    w.i_l2.resize(total);
    w.i_cell.resize(total);
    w.beta = VectorXd::Zero(total);
    const double h_on = th_d / n_on;
    for (int i = 0; i < n_on; ++i) {
        const double th = i * h_on;
        w.theta[i] = th;
        w.i_l2[i] = co.a * std::cos(q1 * th) + co.b * std::sin(q1 * th);
        w.i_cell[i] = 1.0 - p * (k_ratio + 1.0) * std::sin(th + phi) - w.i_l2[i];
    }
    const double h_off = (2.0 * pi - th_d) / n_off;
    for (int i = 0; i <= n_off; ++i) {
        const double th = th_d + i * h_off;
        const double dl = th - th_d;
        w.theta[n_on + i] = th;
        w.i_l2[n_on + i] = co.A * std::cos(co.q2 * dl) + co.B * std::sin(co.q2 * dl) -
                           co.c_forced * std::sin(th + phi) + 1.0 / (k_ratio + 1.0);
        w.i_cell[n_on + i] = 1.0 - p * (k_ratio + 1.0) * std::sin(th + phi) - w.i_l2[n_on + i];
        w.beta[n_on + i] = detail::ef_beta_at(co, k_ratio, p, phi, th_d, th);
    }
    w.beta_end = w.beta[total - 1];
    w.alpha = simpson_uniform(w.beta.segment(n_on, n_off + 1), h_off);
    w.v_ds = w.alpha != 0.0 ? VectorXd(2.0 * pi / w.alpha * w.beta) : VectorXd::Zero(total);
    return w;
}

struct EfScalars {
    double beta_end = 0.0;
    double alpha = 0.0;
    double psi1 = 0.0;  // int beta sin(theta+phi) over OFF
    double psi2 = 0.0;  // int beta cos(theta+phi)
    double beta_min = 0.0, beta_max = 0.0;
};

inline EfScalars ef_scalars(double q1, double k_ratio, double p, double phi,
                            double duty, double tol = 1e-10, int grid_start = 4096) {
    auto co = ef_coefficients(q1, k_ratio, p, phi, duty);
    const double th_d = 2.0 * pi * duty;
    EfScalars out;
    double prev_a = 0.0, prev1 = 0.0, prev2 = 0.0;
    for (int n = grid_start;; n *= 2) {
        const double h = (2.0 * pi - th_d) / n;
        VectorXd fb(n + 1), f1(n + 1), f2(n + 1);
        double bmin = 0.0, bmax = 0.0;
        for (int i = 0; i <= n; ++i) {
            const double th = th_d + i * h;
            const double be = detail::ef_beta_at(co, k_ratio, p, phi, th_d, th);
            fb[i] = be;
            f1[i] = be * std::sin(th + phi);
            f2[i] = be * std::cos(th + phi);
            bmin = std::min(bmin, be);
            bmax = std::max(bmax, be);
        }
        out.beta_end = fb[n];
        out.alpha = simpson_uniform(fb, h);
        out.psi1 = simpson_uniform(f1, h);
        out.psi2 = simpson_uniform(f2, h);
        out.beta_min = bmin;
        out.beta_max = bmax;
        if (n > grid_start && std::abs(out.alpha - prev_a) < tol &&
            std::abs(out.psi1 - prev1) < tol && std::abs(out.psi2 - prev2) < tol)
            return out;
        if (n >= (1 << 17)) return out;
        prev_a = out.alpha;
        prev1 = out.psi1;
        prev2 = out.psi2;
    }
}

struct EfDesignConstants {
    double q1 = 0.0;
    double q2 = 0.0;
    double k_ratio = 0.0;
    double phi = 0.0;
    double duty = 0.5;
    double p_mid = 0.75;
    double alpha = 0.0;
    double psi1 = 0.0;
    double psi2 = 0.0;
    double omega_x_c1 = 0.0;       // w X C1 = psi2 / (pi p (k+1))
    double inv_omega_rl_c1 = 0.0;  // 1/(w R_L C1) = pi p^2 (k+1)^2 / alpha
    double i_m_factor = 0.0;       // I_m = i_m_factor * V_in / R_L, factor = 2 psi1/alpha
    double x_over_wl2 = 0.0;       // detuning reactance per w L2 = w X C1 q1^2 / k_ratio
    double v_peak = 0.0;           // max v_ds / V_in
    double beta_residual = 0.0;
    double flatness_residual = 0.0;
    int iterations = 0;
};

// Documented default C1/C2 ratio: the value at which the LI branch of the
// ZVS root family lands on q2 = 1.3 at 50% duty.
inline constexpr double ef_default_k_ratio = 1.178228584066;

// LI conditions for the EF cell at fixed k_ratio: ZVS (beta returns to zero)
// plus flatness of p psi1(p)/alpha(p), which fixes the delivered-voltage to
// load-current ratio across the load range.  At the root alpha is exactly
// proportional to p and psi1 is p-independent, so both the per-p ZVS
// residuals and the flatness difference quotient vanish together.
inline EfDesignConstants solve_class_ef(double k_ratio = ef_default_k_ratio,
                                        double duty = 0.5,
                                        const DesignSolveOptions& opts = {}) {
    if (!(duty > 0.0 && duty < 1.0)) throw std::invalid_argument("duty must be in (0, 1)");
    if (!(k_ratio > 0.0)) throw std::invalid_argument("k_ratio must be positive");
    const double dp = opts.p_hi - opts.p_lo;

    auto residual = [&](double q1, double phi) -> Eigen::Vector2d {
        if (!(q1 > 0.05)) return Eigen::Vector2d{1e30, 1e30};
        auto mid = ef_scalars(q1, k_ratio, opts.p_mid, phi, duty, 1e-9, opts.grid_n);
        auto lo = ef_scalars(q1, k_ratio, opts.p_lo, phi, duty, 1e-9, opts.grid_n);
        auto hi = ef_scalars(q1, k_ratio, opts.p_hi, phi, duty, 1e-9, opts.grid_n);
        if (lo.alpha == 0.0 || hi.alpha == 0.0) return Eigen::Vector2d{1e30, 1e30};
        const double f_lo = opts.p_lo * lo.psi1 / lo.alpha;
        const double f_hi = opts.p_hi * hi.psi1 / hi.alpha;
        return Eigen::Vector2d{mid.beta_end, (f_hi - f_lo) / dp};
    };

    // companion two-point ZVS system, same role as in solve_class_e: beta is
    // affine in p, so zero at both range edges means zero over the range
    auto zvs_pair = [&](double q1, double phi) -> Eigen::Vector2d {
        if (!(q1 > 0.05)) return Eigen::Vector2d{1e30, 1e30};
        auto lo = ef_scalars(q1, k_ratio, opts.p_lo, phi, duty, 1e-9, opts.grid_n);
        auto hi = ef_scalars(q1, k_ratio, opts.p_hi, phi, duty, 1e-9, opts.grid_n);
        return Eigen::Vector2d{lo.beta_end, hi.beta_end};
    };

    struct Root {
        double q1, phi;
        detail::NewtonResult nr;
    };
    std::vector<Root> roots;
    for (int iq = 0; iq < 7; ++iq) {
        const double q0 = 0.85 + 0.05 * iq;
        for (int ip = 0; ip < 13; ++ip) {
            const double phi0 = -pi + ip * (2.0 * pi / 12.0);
            auto nr = detail::damped_newton_2d(residual, q0, phi0, opts.tol, opts.max_iter);
            if (!nr.converged || nr.q <= 0.05) continue;
            auto pol = detail::damped_newton_2d(zvs_pair, nr.q, nr.phi, 1e-11, 30);
            if (pol.converged) {
                nr.q = pol.q;
                nr.phi = pol.phi;
            }
            const double phi_w = detail::wrap_angle(nr.phi);
            auto sc = ef_scalars(nr.q, k_ratio, opts.p_mid, phi_w, duty, 1e-10, opts.grid_n);
            if (sc.alpha <= 0.0) continue;  // drain voltage must average positive
            const double v_min = 2.0 * pi * sc.beta_min / sc.alpha;
            const double v_max = 2.0 * pi * sc.beta_max / sc.alpha;
            if (v_max <= 0.0 || v_min < -1e-3 * v_max) continue;
            // same range-ZVS validation as the class-e solver: beta must
            // return to zero at the load-range edges too, not only at p_mid
            double worst_zvs = 0.0;
            for (double p : {opts.p_lo, opts.p_hi}) {
                auto edge = ef_scalars(nr.q, k_ratio, p, phi_w, duty, 1e-10, opts.grid_n);
                worst_zvs = std::max(worst_zvs, std::abs(edge.beta_end));
            }
            if (worst_zvs > 1e-6) continue;
            bool dup = false;
            for (const auto& r : roots)
                if (std::abs(r.q1 - nr.q) < 1e-6 &&
                    std::abs(detail::wrap_angle(r.phi - phi_w)) < 1e-6)
                    dup = true;
            if (!dup) roots.push_back({nr.q, phi_w, nr});
        }
    }
    if (roots.empty())
        throw numeric_error("solve_class_ef: no physical LI root found from the seed grid");
    auto best = *std::min_element(roots.begin(), roots.end(),
                                  [](const Root& a, const Root& b) { return a.q1 < b.q1; });

    EfDesignConstants dc;
    dc.q1 = best.q1;
    dc.q2 = best.q1 * std::sqrt((k_ratio + 1.0) / k_ratio);
    dc.k_ratio = k_ratio;
    dc.phi = best.phi;
    dc.duty = duty;
    dc.p_mid = opts.p_mid;
    dc.iterations = best.nr.iterations;
    auto sc = ef_scalars(dc.q1, k_ratio, opts.p_mid, dc.phi, duty, 1e-10, opts.grid_n);
    dc.alpha = sc.alpha;
    dc.psi1 = sc.psi1;
    dc.psi2 = sc.psi2;
    const double kp1 = k_ratio + 1.0;
    dc.omega_x_c1 = sc.psi2 / (pi * opts.p_mid * kp1);
    dc.inv_omega_rl_c1 = pi * opts.p_mid * opts.p_mid * kp1 * kp1 / sc.alpha;
    dc.i_m_factor = 2.0 * sc.psi1 / sc.alpha;
    dc.x_over_wl2 = dc.omega_x_c1 * dc.q1 * dc.q1 / k_ratio;
    dc.v_peak = 2.0 * pi * sc.beta_max / sc.alpha;
    Eigen::Vector2d r = residual(dc.q1, dc.phi);
    dc.beta_residual = std::abs(r[0]);
    dc.flatness_residual = std::abs(r[1]);
    return dc;
}

// Component values realizing the EF cell branch at a given frequency and
// shunt capacitance: C2 from the capacitance ratio, L2 from q1.
struct EfBranch {
    double l2 = 0.0;
    double c2 = 0.0;
};

inline EfBranch ef_branch_values(const EfDesignConstants& dc, double f_s, double c1) {
    if (!(f_s > 0.0) || !(c1 > 0.0))
        throw std::invalid_argument("ef_branch_values: f_s and c1 must be positive");
    EfBranch br;
    br.c2 = c1 / dc.k_ratio;
    const double w = 2.0 * pi * f_s;
    br.l2 = 1.0 / (dc.q1 * dc.q1 * w * w * br.c2);
    return br;
}

} // namespace ipt
