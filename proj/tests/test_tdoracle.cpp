#include <catch2/catch_amalgamated.hpp>

#include <ipt/solver.hpp>
#include <ipt/tdoracle.hpp>

#include <cmath>

using namespace ipt;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

IptNetwork reference_network(double k = 0.05) {
    IptNetwork net;
    net.k = k;
    return net;
}

IptNetwork ef_network(double k = 0.05) {
    IptNetwork net;
    net.variant = Variant::class_ef;
    net.l1 = 100e-6; // choke
    net.l2 = 21.501602e-6;
    net.c2 = 8.054464e-9;
    net.c0 = tuned_c0(net.l_tx, net.omega(), 41.345718);
    net.k = k;
    return net;
}

double rel_diff(double a, double b) { return std::abs(a - b) / std::abs(b); }

} // namespace

TEST_CASE("state model layout", "[tdoracle]") {
    SwitchedStateModel ce = state_model(reference_network());
    REQUIRE(ce.a_on.rows() == 6);
    REQUIRE(ce.labels == std::vector<std::string>{"i_in_A", "v_ds_V", "i_tx_A",
                                                  "v_c0_V", "i_rx_A", "v_crx_V"});
    REQUIRE(ce.idx_i_in == 0);
    REQUIRE(ce.idx_v_ds == 1);

    SwitchedStateModel ef = state_model(ef_network());
    REQUIRE(ef.a_on.rows() == 8);
    REQUIRE(ef.labels[2] == "i_l2_A");
    REQUIRE(ef.labels[3] == "v_c2_V");
    REQUIRE(ef.idx_i_tx == 4);
    REQUIRE(ef.idx_i_rx == 6);
}

TEST_CASE("step-count guards", "[tdoracle]") {
    SwitchedStateModel sm = state_model(reference_network());
    REQUIRE_THROWS_AS(transient_simulate_model(sm, 10, 1000), std::invalid_argument);
    // 2049 * 0.5 puts the switching edge between grid points
    REQUIRE_THROWS_WITH(transient_simulate_model(sm, 10, 2049),
                        Catch::Matchers::ContainsSubstring("divisible"));
}

TEST_CASE("source-free model certifies periodicity at the first comparison",
          "[tdoracle]") {
    SwitchedStateModel sm;
    sm.a_on = sm.a_off = MatrixXd::Constant(1, 1, -1e6);
    sm.b_on = sm.b_off = VectorXd::Zero(1);
    sm.duty = 0.5;
    sm.period = 2.5e-6;
    sm.labels = {"x"};
    TransientRun run = transient_simulate_model(sm, 10, 2048);
    REQUIRE(run.converged);
    REQUIRE(run.residual_history.size() == 1);
    REQUIRE(run.cycles <= 2);
    REQUIRE(run.traj.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("constant-resistance circuit settles to the analytic DC point",
          "[tdoracle]") {
    IptNetwork net = reference_network(0.0);
    net.sw.r_on = 12.5;
    net.sw.r_off = 12.5 * (1.0 + 1e-12);
    TransientRun run = transient_simulate(net, 5000, 2048, 1e-9);
    REQUIRE(run.converged);
    OracleExtract ex = steady_state_extract(run, net);
    const double i_dc = net.v_in / 12.5;
    REQUIRE(rel_diff(ex.i_in.mean(), i_dc) < 1e-3);
    REQUIRE(rel_diff(ex.v_ds.mean(), net.v_in) < 1e-3);
    REQUIRE(rel_diff(ex.p_in, net.v_in * net.v_in / 12.5) < 1e-3);
}

TEST_CASE("zero coupling never excites the secondary states", "[tdoracle]") {
    TransientRun run = transient_simulate(reference_network(0.0), 3000, 2048);
    REQUIRE(run.converged);
    const int ix_irx = run.model.idx_i_rx;
    REQUIRE(run.traj.col(ix_irx).cwiseAbs().maxCoeff() == 0.0);
    REQUIRE(run.traj.col(ix_irx + 1).cwiseAbs().maxCoeff() == 0.0); // v_crx
}

TEST_CASE("reference design oracle run at k = 0.05", "[tdoracle]") {
    IptNetwork net = reference_network();
    TransientRun run = transient_simulate(net);
    REQUIRE(run.converged);
    REQUIRE(run.residual < 1e-6);
    REQUIRE(run.cycles >= 110);
    REQUIRE(run.cycles <= 118);

    // the periodicity residual decays monotonically near convergence
    const auto& hist = run.residual_history;
    REQUIRE(hist.size() >= 10);
    for (size_t i = hist.size() - 10; i + 1 < hist.size(); ++i)
        REQUIRE(hist[i + 1] <= hist[i] * (1.0 + 1e-9));

    OracleExtract ex = steady_state_extract(run, net);
    REQUIRE_THAT(ex.p_out, WithinRel(102.51916711, 1e-6));
    REQUIRE_THAT(ex.p_in, WithinRel(127.87746824, 1e-6));
    REQUIRE_THAT(ex.vds_rms, WithinRel(52.26124627, 1e-6));
    REQUIRE(std::abs(ex.balance_rel) < 1e-3);
}

TEST_CASE("harmonic solver agrees with the oracle within 2 percent", "[tdoracle]") {
    IptNetwork net = reference_network();
    TransientRun run = transient_simulate(net);
    OracleExtract ex = steady_state_extract(run, net);
    SteadyStateSolution sol = solve_steady_state(net, 30);

    REQUIRE(rel_diff(sol.p_out, ex.p_out) < 0.02);
    REQUIRE(rel_diff(sol.p_in, ex.p_in) < 0.02);
    REQUIRE(rel_diff(sol.v_ds.norm(), ex.vds_rms) < 0.02);

    // waveform-level: compare spectra at matched bandwidth, so Fourier
    // truncation of the turn-on edge does not masquerade as model error
    const int steps = static_cast<int>(run.traj.rows());
    VectorXcd oracle_spec = from_time_samples(ex.v_ds, 30);
    double err = (oracle_spec - sol.v_ds).norm() / oracle_spec.norm();
    REQUIRE(err < 0.02);

    // turn-on residual, read at the matching grid instant just before 2*pi.
    // the raw trajectory carries the nanosecond turn-on collapse that no
    // 30-harmonic reconstruction can represent, so the oracle waveform is
    // band-limited the same way before sampling it.  even then the truncated
    // system's ~1% coefficient error adds up coherently right at the edge
    // where the residual is defined, leaving a ~10% floor at this operating
    // point; the tolerance reflects that measured floor (the scalar power
    // and RMS agreement above stays at 2%)
    VectorXd oracle_bl = to_time_samples(oracle_spec, sol.samples);
    REQUIRE(rel_diff(sol.zvs_residual_v, oracle_bl[sol.samples - 1]) < 0.12);
}

TEST_CASE("class-ef oracle agrees with the class-ef solver", "[tdoracle]") {
    IptNetwork net = ef_network();
    TransientRun run = transient_simulate(net);
    REQUIRE(run.converged);
    OracleExtract ex = steady_state_extract(run, net);
    // this operating point is far from ZVS, so the near-step in v_ds decays
    // only like 1/N in harmonic content; N=60 brings truncation below the
    // cross-method tolerance (N=30 still carries ~6% truncation error)
    SteadyStateSolution sol = solve_steady_state(net, 60);
    REQUIRE(rel_diff(sol.p_out, ex.p_out) < 0.02);
    REQUIRE(rel_diff(sol.p_in, ex.p_in) < 0.02);
    REQUIRE(rel_diff(sol.v_ds.norm(), ex.vds_rms) < 0.02);
    REQUIRE(std::abs(ex.balance_rel) < 1e-3);
}

TEST_CASE("trapezoidal rule shows second-order convergence", "[tdoracle]") {
    IptNetwork net = reference_network();
    auto p_out_at = [&](int steps) {
        TransientRun run = transient_simulate(net, 5000, steps, 1e-9);
        return steady_state_extract(run, net).p_out;
    };
    double p2048 = p_out_at(2048);
    double p4096 = p_out_at(4096);
    double p8192 = p_out_at(8192);
    double err_coarse = std::abs(p2048 - p8192);
    double err_fine = std::abs(p4096 - p8192);
    REQUIRE(err_fine > 0.0);
    // pure h^2 error gives exactly 5.0 against the h/4 reference
    double ratio = err_coarse / err_fine;
    REQUIRE(ratio > 3.0);
    REQUIRE(ratio < 7.0);
}

TEST_CASE("non-converged runs are rejected with their residual history",
          "[tdoracle]") {
    IptNetwork net = reference_network();
    TransientRun run = transient_simulate(net, 5, 2048);
    REQUIRE_FALSE(run.converged);
    REQUIRE_THROWS_WITH(steady_state_extract(run, net),
                        Catch::Matchers::ContainsSubstring("residual history"));
}
