// Periodic steady state of the assembled harmonic system plus derived
// scalar metrics (powers, efficiency, ZVS residual).
#pragma once

#include "network.hpp"

namespace ipt {

struct SteadyStateSolution {
    int order_limit = 0;
    double omega = 0.0;
    double v_in = 0.0;
    double duty = 0.5;
    int samples = 4096;

    VectorXcd i_input;   // input-loop current spectrum (source current)
    VectorXcd i_tx;      // tx-loop current spectrum (inverter output current i_o)
    VectorXcd i_rx;      // rx-loop current spectrum
    VectorXcd v_ds;      // switch-node voltage spectrum
    VectorXcd v_load;    // load voltage spectrum (R_L * i_rx)

    double p_in = 0.0;
    double p_out = 0.0;
    double efficiency = 0.0;
    double p_switch = 0.0;    // dissipated in the switch cell
    double p_coil_tx = 0.0;
    double p_coil_rx = 0.0;
    double balance_rel = 0.0; // relative power-balance defect
    double zvs_residual_v = 0.0;
    double i0_amplitude = 0.0;
    double residual = 0.0;    // linear-solve relative residual
};

struct SolveOptions {
    double residual_tol = 1e-10;
    int samples = 4096;  // reconstruction density for the ZVS residual
};

// Direct dense LU solve with one step of iterative refinement; the
// deterministic factorization keeps repeated runs byte-identical.
inline SteadyStateSolution solve_steady_state(const AssembledSystem& sys,
                                              const IptNetwork& net,
                                              SolveOptions opt = {}) {
    const int n_ord = sys.order_limit;
    const int n = 2 * n_ord + 1;

    Eigen::PartialPivLU<MatrixXcd> lu(sys.a);
    VectorXcd x = lu.solve(sys.b);
    x += lu.solve(sys.b - sys.a * x);
    double residual = (sys.a * x - sys.b).norm() / sys.b.norm();
    if (!(residual < opt.residual_tol)) {
        // cheap conditioning estimate from the factor diagonal
        VectorXd du = lu.matrixLU().diagonal().cwiseAbs();
        double cond_est = du.maxCoeff() / std::max(du.minCoeff(), 1e-300);
        throw numeric_error("steady-state solve residual " + std::to_string(residual) +
                            " above tolerance (condition estimate ~" +
                            std::to_string(cond_est) + ")");
    }

    SteadyStateSolution sol;
    sol.order_limit = n_ord;
    sol.omega = sys.omega;
    sol.v_in = net.v_in;
    sol.duty = net.sw.duty;
    sol.samples = opt.samples;
    sol.residual = residual;
    sol.i_input = x.segment(0, n);
    sol.i_tx = x.segment(n, n);
    sol.i_rx = x.segment(2 * n, n);

    const MatrixXcd& zpair = sys.zpair;
    VectorXcd i_pair = sol.i_input - sol.i_tx;
    sol.v_ds = zpair * i_pair;
    sol.v_load = net.r_load * sol.i_rx;

    sol.p_in = net.v_in * sol.i_input[index_of(0, n_ord)].real();
    sol.p_out = net.r_load * sol.i_rx.squaredNorm();
    // The shunt capacitor (and Class EF L2-C2 branch) inside the cell is
    // lossless, so the real power entering the cell is the switch loss.
    sol.p_switch = (i_pair.adjoint() * (zpair * i_pair))(0, 0).real();
    sol.p_coil_tx = net.r_tx() * sol.i_tx.squaredNorm();
    sol.p_coil_rx = net.r_rx() * sol.i_rx.squaredNorm();
    sol.balance_rel = std::abs(sol.p_in - sol.p_out - sol.p_switch -
                               sol.p_coil_tx - sol.p_coil_rx) /
                      std::max(sol.p_in, 1e-300);
    sol.efficiency = sol.p_out / sol.p_in;
    sol.i0_amplitude = 2.0 * std::abs(sol.i_tx[index_of(1, n_ord)]);

    // ZVS residual: v_ds of the reconstructed waveform at the sample nearest
    // the turn-ON instant wt = 2*pi (approached from below, so the Gibbs
    // overshoot of a single-point Fourier evaluation is avoided).
    VectorXd vds_t = to_time_samples(sol.v_ds, opt.samples);
    sol.zvs_residual_v = vds_t[opt.samples - 1];
    return sol;
}

inline SteadyStateSolution solve_steady_state(const IptNetwork& net, int n_ord = 30,
                                              SolveOptions opt = {}) {
    return solve_steady_state(assemble(net, n_ord), net, opt);
}

inline double input_power(const SteadyStateSolution& sol) { return sol.p_in; }
inline double output_power(const SteadyStateSolution& sol) { return sol.p_out; }
inline double zvs_residual(const SteadyStateSolution& sol) { return sol.zvs_residual_v; }

} // namespace ipt
