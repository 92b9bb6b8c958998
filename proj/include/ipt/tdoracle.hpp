// Brute-force time-domain integrator for the switched-linear circuits,
// run to periodic steady state; the independent reference for the harmonic
// solver.
#pragma once

#include <tuple>
#include <utility>
#include <vector>

#include "network.hpp"

namespace ipt {

using Eigen::MatrixXd;

// Piecewise-linear state model dx/dt = A x + b with A, b switching between
// an ON and an OFF regime at wt = 0 and wt = 2*pi*D.
struct SwitchedStateModel {
    MatrixXd a_on, a_off;
    VectorXd b_on, b_off;
    double duty = 0.5;
    double period = 0.0;
    std::vector<std::string> labels;
    int idx_i_in = 0, idx_v_ds = 1, idx_i_tx = -1, idx_i_rx = -1;
};

inline SwitchedStateModel state_model(const IptNetwork& net) {
    auto errors = validate(net);
    if (!errors.empty())
        throw std::invalid_argument("state_model: invalid network: " + errors.front());
    const bool ef = net.variant == Variant::class_ef;
    const int n = ef ? 8 : 6;
    const double m = mutual_from_k(net.k, net.l_tx, net.l_rx);
    // coupled coil inversion [L_tx M; M L_rx]^-1
    const double det = net.l_tx * net.l_rx - m * m;
    const double li00 = net.l_rx / det, li01 = -m / det;
    const double li10 = -m / det, li11 = net.l_tx / det;

    SwitchedStateModel sm;
    sm.duty = net.sw.duty;
    sm.period = 1.0 / net.f_s;
    sm.labels = {"i_in_A", "v_ds_V", "i_tx_A", "v_c0_V", "i_rx_A", "v_crx_V"};
    if (ef) sm.labels.insert(sm.labels.begin() + 2, {"i_l2_A", "v_c2_V"});

    const int ix_iin = 0, ix_vds = 1;
    const int ix_il2 = 2, ix_vc2 = 3;                 // class EF only
    const int ix_itx = ef ? 4 : 2, ix_vc0 = ef ? 5 : 3;
    const int ix_irx = ef ? 6 : 4, ix_vcrx = ef ? 7 : 5;
    sm.idx_i_in = ix_iin;
    sm.idx_v_ds = ix_vds;
    sm.idx_i_tx = ix_itx;
    sm.idx_i_rx = ix_irx;

    auto make = [&](double r_switch) {
        MatrixXd a = MatrixXd::Zero(n, n);
        VectorXd b = VectorXd::Zero(n);
        // input inductor (resonant L1 or choke L_f)
        a(ix_iin, ix_vds) = -1.0 / net.l1;
        b[ix_iin] = net.v_in / net.l1;
        // shunt node: C1 v_ds' = i_in - i_tx - v_ds/R(t) (- i_l2 for EF)
        const double c1 = net.c1_eff();
        a(ix_vds, ix_iin) = 1.0 / c1;
        a(ix_vds, ix_itx) = -1.0 / c1;
        a(ix_vds, ix_vds) = -1.0 / (r_switch * c1);
        if (ef) {
            a(ix_vds, ix_il2) = -1.0 / c1;
            a(ix_il2, ix_vds) = 1.0 / *net.l2;
            a(ix_il2, ix_vc2) = -1.0 / *net.l2;
            a(ix_vc2, ix_il2) = 1.0 / *net.c2;
        }
        // coupled coils: [L] d[i_tx, i_rx]'/dt = [v_ds - v_c0 - r_tx i_tx,
        //                                         -(r_rx + R_L) i_rx - v_crx]
        const double rrx_tot = net.r_rx() + net.r_load;
        a(ix_itx, ix_vds) = li00;
        a(ix_itx, ix_vc0) = -li00;
        a(ix_itx, ix_itx) = -li00 * net.r_tx();
        a(ix_itx, ix_irx) = -li01 * rrx_tot;
        a(ix_itx, ix_vcrx) = -li01;
        a(ix_irx, ix_vds) = li10;
        a(ix_irx, ix_vc0) = -li10;
        a(ix_irx, ix_itx) = -li10 * net.r_tx();
        a(ix_irx, ix_irx) = -li11 * rrx_tot;
        a(ix_irx, ix_vcrx) = -li11;
        a(ix_vc0, ix_itx) = 1.0 / net.c0;
        a(ix_vcrx, ix_irx) = 1.0 / net.c_rx;
        return std::pair{a, b};
    };
    std::tie(sm.a_on, sm.b_on) = make(net.sw.r_on);
    std::tie(sm.a_off, sm.b_off) = make(net.sw.r_off);
    return sm;
}

struct TransientRun {
    MatrixXd traj;        // final simulated cycle, steps x n_states
    double step = 0.0;    // seconds
    int cycles = 0;
    double residual = 0.0;
    bool converged = false;
    std::vector<double> residual_history;
    SwitchedStateModel model;
};

// Trapezoidal integration with the switching instants aligned exactly to
// step boundaries.  The step whose right endpoint lands on a boundary uses
// the incoming regime for that endpoint (the resistance waveform is taken
// right-continuous), which is what the trapezoidal rule prescribes for a
// piecewise A(t).  A-stability matters here: r_off = 1 MOhm makes the OFF
// regime stiff, and an explicit scheme at 8192 steps/cycle would blow up.
inline TransientRun transient_simulate_model(const SwitchedStateModel& sm,
                                             int cycles, int steps_per_cycle,
                                             double tol = 1e-6,
                                             double input_scale = 1.0) {
    if (steps_per_cycle < 2048)
        throw std::invalid_argument("steps_per_cycle must be at least 2048");
    double on_steps_exact = steps_per_cycle * sm.duty;
    int n_on = static_cast<int>(std::lround(on_steps_exact));
    if (std::abs(on_steps_exact - n_on) > 1e-9)
        throw std::invalid_argument(
            "steps_per_cycle must be divisible so switching instants land on the grid");

    const int n = static_cast<int>(sm.a_on.rows());
    const double h = sm.period / steps_per_cycle;
    const MatrixXd id = MatrixXd::Identity(n, n);

    auto prop = [&](const MatrixXd& a_l, const MatrixXd& a_r,
                    const VectorXd& b_l, const VectorXd& b_r) {
        Eigen::PartialPivLU<MatrixXd> lu(id - 0.5 * h * a_r);
        MatrixXd m = lu.solve(id + 0.5 * h * a_l);
        VectorXd v = lu.solve(0.5 * h * (b_l + b_r));
        return std::pair{m, v};
    };
    auto [m_on, v_on] = prop(sm.a_on, sm.a_on, sm.b_on, sm.b_on);
    auto [m_off, v_off] = prop(sm.a_off, sm.a_off, sm.b_off, sm.b_off);
    auto [m_on_off, v_on_off] = prop(sm.a_on, sm.a_off, sm.b_on, sm.b_off);
    auto [m_off_on, v_off_on] = prop(sm.a_off, sm.a_on, sm.b_off, sm.b_on);

    TransientRun run;
    run.model = sm;
    run.step = h;
    run.traj.resize(steps_per_cycle, n);
    MatrixXd prev(steps_per_cycle, n);
    VectorXd x = VectorXd::Zero(n);
    const double blow_up = 1e6 * std::max(input_scale, 1.0);

    int cyc = 0;
    for (; cyc < cycles; ++cyc) {
        for (int i = 0; i < steps_per_cycle; ++i) {
            run.traj.row(i) = x;
            if (i < n_on - 1)
                x = m_on * x + v_on;
            else if (i == n_on - 1)
                x = m_on_off * x + v_on_off;
            else if (i < steps_per_cycle - 1)
                x = m_off * x + v_off;
            else
                x = m_off_on * x + v_off_on;
        }
        if (!x.allFinite() || x.cwiseAbs().maxCoeff() > blow_up)
            throw numeric_error("transient simulation unstable: state norm exceeded bound");
        if (cyc > 0) {
            double den = run.traj.norm();
            double res = den > 0.0 ? (run.traj - prev).norm() / den : 0.0;
            run.residual_history.push_back(res);
            run.residual = res;
            if (res < tol) {
                run.converged = true;
                ++cyc;
                break;
            }
        }
        prev = run.traj;
    }
    run.cycles = cyc;
    return run;
}

inline TransientRun transient_simulate(const IptNetwork& net, int cycles = 5000,
                                       int steps_per_cycle = 8192, double tol = 1e-6) {
    return transient_simulate_model(state_model(net), cycles, steps_per_cycle, tol,
                                    net.v_in);
}

struct OracleExtract {
    double p_in = 0.0;
    double p_out = 0.0;
    double vds_rms = 0.0;
    double vds_at_turn_on = 0.0;
    double p_switch = 0.0;     // v_ds^2 / R(t) time average
    double p_coil_tx = 0.0;
    double p_coil_rx = 0.0;
    double balance_rel = 0.0;  // (P_in - P_out - losses)/P_in
    VectorXd v_ds, i_tx, i_rx, i_in;
};

inline OracleExtract steady_state_extract(const TransientRun& run,
                                          const IptNetwork& net) {
    if (!run.converged) {
        std::ostringstream os;
        os << "oracle run not converged after " << run.cycles
           << " cycles; residual history tail:";
        size_t n = run.residual_history.size();
        for (size_t i = n > 5 ? n - 5 : 0; i < n; ++i)
            os << " " << run.residual_history[i];
        throw numeric_error(os.str());
    }
    OracleExtract ex;
    ex.i_in = run.traj.col(run.model.idx_i_in);
    ex.v_ds = run.traj.col(run.model.idx_v_ds);
    ex.i_tx = run.traj.col(run.model.idx_i_tx);
    ex.i_rx = run.traj.col(run.model.idx_i_rx);
    ex.p_in = net.v_in * ex.i_in.mean();
    ex.p_out = net.r_load * ex.i_rx.array().square().mean();
    ex.vds_rms = std::sqrt(ex.v_ds.array().square().mean());
    // sample at wt = 0 is the state right at the turn-ON instant
    ex.vds_at_turn_on = ex.v_ds[0];

    // energy bookkeeping over the extracted cycle; reactive elements average
    // out, so input power must split into load power and itemized losses
    const int steps = static_cast<int>(run.traj.rows());
    const int n_on = static_cast<int>(std::lround(steps * run.model.duty));
    double sw_acc = 0.0;
    for (int i = 0; i < steps; ++i) {
        const double r = i < n_on ? net.sw.r_on : net.sw.r_off;
        sw_acc += ex.v_ds[i] * ex.v_ds[i] / r;
    }
    ex.p_switch = sw_acc / steps;
    ex.p_coil_tx = net.r_tx() * ex.i_tx.array().square().mean();
    ex.p_coil_rx = net.r_rx() * ex.i_rx.array().square().mean();
    ex.balance_rel = ex.p_in != 0.0
                         ? (ex.p_in - ex.p_out - ex.p_switch - ex.p_coil_tx - ex.p_coil_rx) /
                               ex.p_in
                         : 0.0;
    return ex;
}

} // namespace ipt
