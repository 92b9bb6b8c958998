// Command-line entry point: config ingestion, one subcommand per workflow
// (design-constants, solve, sweep, oracle), and report/CSV/plot-data
// emission.  Exit codes: 0 success, 1 numerical failure, 2 usage or config
// error.
#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "config.hpp"
#include "tdoracle.hpp"

namespace ipt {
namespace cli {

using ordered_json = nlohmann::ordered_json;

inline std::string fmt12(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.12g", v);
    return buf;
}

inline bool wants(const RunConfig& cfg, const std::string& format) {
    std::stringstream ss(cfg.formats);
    std::string tok;
    while (std::getline(ss, tok, ','))
        if (detail::trim(tok) == format) return true;
    return false;
}

inline ordered_json config_json(const RunConfig& cfg) {
    ordered_json j;
    for (const auto& [key, value] : resolved_config(cfg)) j[key] = value;
    return j;
}

inline void write_text(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);  // binary: byte-identical across platforms
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << text;
}

// Time reconstruction of a mesh solution into the shared waveform column
// contract theta_rad,v_ds_V,i_o_A,v_load_V.
inline std::string waveform_csv(const SteadyStateSolution& sol, const IptNetwork& net,
                                int rows) {
    VectorXd v = to_time_samples(sol.v_ds, rows);
    VectorXd io = to_time_samples(sol.i_tx, rows);
    VectorXd ir = to_time_samples(sol.i_rx, rows);
    std::string csv = "theta_rad,v_ds_V,i_o_A,v_load_V\n";
    for (int i = 0; i < rows; ++i) {
        const double th = 2.0 * pi * i / rows;
        csv += fmt12(th) + "," + fmt12(v[i]) + "," + fmt12(io[i]) + "," +
               fmt12(net.r_load * ir[i]) + "\n";
    }
    return csv;
}

inline int cmd_design_constants(const std::string& variant, double duty,
                                std::optional<double> k_ratio) {
    ordered_json j;
    if (variant == "class-e") {
        if (k_ratio)
            throw std::invalid_argument("--k-ratio applies to class-ef only");
        auto dc = solve_class_e(duty);
        j["variant"] = "class-e";
        j["duty"] = dc.duty;
        j["q"] = dc.q;
        j["phi_rad"] = dc.phi;
        j["x_over_wl1"] = dc.x_over_wl1;
        j["psi1"] = dc.psi1;
        j["psi2"] = dc.psi2;
        j["p_mid"] = dc.p_mid;
        j["v_peak_over_v_in"] = dc.v_peak;
        j["beta_residual"] = dc.beta_residual;
        j["flatness_residual"] = dc.flatness_residual;
        j["iterations"] = dc.iterations;
    } else {
        auto dc = solve_class_ef(k_ratio.value_or(ef_default_k_ratio), duty);
        j["variant"] = "class-ef";
        j["duty"] = dc.duty;
        j["k_ratio"] = dc.k_ratio;
        j["q1"] = dc.q1;
        j["q2"] = dc.q2;
        j["phi_rad"] = dc.phi;
        j["alpha"] = dc.alpha;
        j["psi1"] = dc.psi1;
        j["psi2"] = dc.psi2;
        j["p_mid"] = dc.p_mid;
        j["omega_x_c1"] = dc.omega_x_c1;
        j["inv_omega_rl_c1"] = dc.inv_omega_rl_c1;
        j["i_m_factor"] = dc.i_m_factor;
        j["x_over_wl2"] = dc.x_over_wl2;
        j["v_peak_over_v_in"] = dc.v_peak;
        j["beta_residual"] = dc.beta_residual;
        j["flatness_residual"] = dc.flatness_residual;
        j["iterations"] = dc.iterations;
    }
    std::cout << j.dump(2) << "\n";
    return 0;
}

inline int cmd_solve(RunConfig cfg) {
    const std::filesystem::path dir(cfg.out_dir);
    std::filesystem::create_directories(dir);
    auto sys = assemble(cfg.net, cfg.harmonics);
    SolveOptions opt;
    opt.residual_tol = cfg.residual_tol;
    opt.samples = cfg.samples;
    auto sol = solve_steady_state(sys, cfg.net, opt);

    if (wants(cfg, "csv"))
        write_text(dir / "waveforms.csv", waveform_csv(sol, cfg.net, 4096));
    if (wants(cfg, "json")) {
        ordered_json j;
        j["p_in_W"] = sol.p_in;
        j["p_out_W"] = sol.p_out;
        j["efficiency"] = sol.efficiency;
        j["zvs_residual_V"] = sol.zvs_residual_v;
        j["N"] = cfg.harmonics;
        j["residual"] = sol.residual;
        j["k"] = cfg.net.k;
        j["p_switch_W"] = sol.p_switch;
        j["p_coil_tx_W"] = sol.p_coil_tx;
        j["p_coil_rx_W"] = sol.p_coil_rx;
        j["balance_rel"] = sol.balance_rel;
        j["i_o_amplitude_A"] = sol.i0_amplitude;
        j["config"] = config_json(cfg);
        write_text(dir / "report.json", j.dump(2) + "\n");
    }
    return 0;
}

inline int cmd_sweep(RunConfig cfg, bool verify) {
    const std::filesystem::path dir(cfg.out_dir);
    std::filesystem::create_directories(dir);
    auto res = search(cfg.net, cfg.sweep, cfg.harmonics);

    std::vector<double> oracle_dev;
    if (verify) {
        // oracle cross-check at the k grid point nearest the range midpoint
        const double k_mid = 0.5 * (res.k_grid.front() + res.k_grid.back());
        size_t mid_idx = 0;
        for (size_t i = 1; i < res.k_grid.size(); ++i)
            if (std::abs(res.k_grid[i] - k_mid) < std::abs(res.k_grid[mid_idx] - k_mid))
                mid_idx = i;
        oracle_dev.resize(res.ranked.size());
        auto eval_range = [&](size_t lo, size_t hi) {
            for (size_t i = lo; i < hi; ++i) {
                IptNetwork pt = cfg.net;
                pt.c_rx = res.ranked[i].c_rx;
                pt.c0 = res.ranked[i].c0;
                pt.k = res.k_grid[mid_idx];
                auto run = transient_simulate(pt, cfg.oracle_cycles, cfg.oracle_steps,
                                              cfg.oracle_tol);
                auto ex = steady_state_extract(run, pt);
                const double solver_p = res.ranked[i].p_out_w[mid_idx];
                oracle_dev[i] = ex.p_out == 0.0 && solver_p == 0.0
                                    ? 0.0
                                    : std::abs(solver_p - ex.p_out) /
                                          std::max(std::abs(ex.p_out), 1e-300);
            }
        };
        const size_t total = res.ranked.size();
        const unsigned nthreads =
            std::max(1u, std::min<unsigned>(std::thread::hardware_concurrency(), total));
        std::vector<std::future<void>> futs;
        const size_t chunk = (total + nthreads - 1) / nthreads;
        for (unsigned t = 0; t < nthreads; ++t) {
            const size_t lo = t * chunk, hi = std::min(total, lo + chunk);
            if (lo >= hi) break;
            futs.push_back(std::async(std::launch::async, eval_range, lo, hi));
        }
        for (auto& f : futs) f.get();
    }

    if (wants(cfg, "csv")) {
        std::string cand = "delta,x_ohm,beta_fluct,mean_eff,reflected_sign";
        if (verify) cand += ",oracle_dev_p_out";
        cand += "\n";
        for (size_t i = 0; i < res.ranked.size(); ++i) {
            const auto& c = res.ranked[i];
            cand += fmt12(c.delta) + "," + fmt12(c.x_ohm) + "," + fmt12(c.beta_fluct) + "," +
                    fmt12(c.mean_eff) + "," + std::to_string(c.reflected_sign);
            if (verify) cand += "," + fmt12(oracle_dev[i]);
            cand += "\n";
        }
        write_text(dir / "candidates.csv", cand);

        std::string curves = "delta,x_ohm,k,p_out_W,efficiency\n";
        for (const auto& c : res.ranked)
            for (size_t i = 0; i < res.k_grid.size(); ++i)
                curves += fmt12(c.delta) + "," + fmt12(c.x_ohm) + "," + fmt12(res.k_grid[i]) +
                          "," + fmt12(c.p_out_w[i]) + "," + fmt12(c.efficiency[i]) + "\n";
        write_text(dir / "curves.csv", curves);
    }
    if (wants(cfg, "plot")) {
        for (const auto& c : res.ranked) {
            char name[64];
            std::snprintf(name, sizeof name, "plot_d%.4f_x%.4f.dat", c.delta, c.x_ohm);
            std::string series;
            for (size_t i = 0; i < res.k_grid.size(); ++i)
                series += fmt12(res.k_grid[i]) + " " + fmt12(c.p_out_w[i]) + "\n";
            write_text(dir / name, series);
        }
    }
    if (wants(cfg, "json")) {
        ordered_json j;
        j["candidates_evaluated"] = res.ranked.size();
        j["c_rx_resonant_F"] = res.c_rx_resonant;
        j["delta_of_configured_c_rx"] = res.delta_configured;
        if (res.x_li != 0.0) j["x_li_ohm"] = res.x_li;
        if (!res.ranked.empty()) {
            const auto& top = res.ranked.front();
            ordered_json t;
            t["delta"] = top.delta;
            t["x_ohm"] = top.x_ohm;
            t["c_rx_F"] = top.c_rx;
            t["c0_F"] = top.c0;
            t["beta_fluct"] = top.beta_fluct;
            t["mean_eff"] = top.mean_eff;
            t["reflected_im_ohm"] = top.reflected.imag();
            t["reflected_class"] = top.reflected_sign < 0
                                       ? "capacitive"
                                       : (top.reflected_sign > 0 ? "inductive" : "resonant");
            j["top_candidate"] = t;
        }
        j["config"] = config_json(cfg);
        write_text(dir / "sweep_report.json", j.dump(2) + "\n");
    }
    return 0;
}

inline int cmd_oracle(RunConfig cfg) {
    const std::filesystem::path dir(cfg.out_dir);
    std::filesystem::create_directories(dir);
    auto run = transient_simulate(cfg.net, cfg.oracle_cycles, cfg.oracle_steps, cfg.oracle_tol);

    if (wants(cfg, "csv")) {
        const auto& sm = run.model;
        std::string csv = "theta_rad,v_ds_V,i_o_A,v_load_V\n";
        const int steps = static_cast<int>(run.traj.rows());
        for (int i = 0; i < steps; ++i) {
            const double th = 2.0 * pi * i / steps;
            csv += fmt12(th) + "," + fmt12(run.traj(i, sm.idx_v_ds)) + "," +
                   fmt12(run.traj(i, sm.idx_i_tx)) + "," +
                   fmt12(cfg.net.r_load * run.traj(i, sm.idx_i_rx)) + "\n";
        }
        write_text(dir / "trajectory.csv", csv);
    }
    if (wants(cfg, "json")) {
        ordered_json j;
        j["converged"] = run.converged;
        j["cycles"] = run.cycles;
        j["periodicity_residual"] = run.residual;
        j["steps_per_cycle"] = static_cast<int>(run.traj.rows());
        if (run.converged) {
            auto ex = steady_state_extract(run, cfg.net);
            j["p_in_W"] = ex.p_in;
            j["p_out_W"] = ex.p_out;
            j["efficiency"] = ex.p_in != 0.0 ? ex.p_out / ex.p_in : 0.0;
            j["vds_rms_V"] = ex.vds_rms;
            j["zvs_residual_V"] = ex.vds_at_turn_on;
            j["balance_rel"] = ex.balance_rel;
        } else {
            ordered_json tail = ordered_json::array();
            const size_t n = run.residual_history.size();
            for (size_t i = n > 10 ? n - 10 : 0; i < n; ++i)
                tail.push_back(run.residual_history[i]);
            j["residual_history_tail"] = tail;
        }
        j["config"] = config_json(cfg);
        write_text(dir / "oracle_report.json", j.dump(2) + "\n");
    }
    if (!run.converged) {
        std::cerr << "oracle: no periodic steady state within " << run.cycles
                  << " cycles (residual " << run.residual << ")\n";
        return 1;
    }
    return 0;
}

inline int run(int argc, char** argv) {
    CLI::App app{"Class E / Class EF inverter IPT design workbench"};
    app.require_subcommand(1);

    std::string config_path;
    std::optional<double> k_flag;
    std::optional<std::string> out_flag;
    std::optional<int> harmonics_flag;
    bool verify = false;

    auto add_common = [&](CLI::App* sub, bool needs_config) {
        auto* c = sub->add_option("--config", config_path, "run configuration file");
        if (needs_config) c->required()->check(CLI::ExistingFile);
        sub->add_option("--out", out_flag, "output directory (overrides output.directory)");
    };
    auto duty_check = [](const std::string& s) -> std::string {
        double d = std::atof(s.c_str());
        if (!(d > 0.0 && d < 1.0)) return "duty must lie strictly between 0 and 1";
        return "";
    };

    auto* dc = app.add_subcommand("design-constants",
                                  "solve the load-independent design point of the cell");
    std::string variant = "class-e";
    double duty = 0.5;
    std::optional<double> k_ratio;
    dc->add_option("--variant", variant, "inverter cell: class-e or class-ef")
        ->check(CLI::IsMember({"class-e", "class-ef"}));
    dc->add_option("--duty", duty, "switch duty cycle")->check(duty_check);
    dc->add_option("--k-ratio", k_ratio, "C1/C2 ratio (class-ef only)");

    auto* solve = app.add_subcommand("solve", "steady-state solve at one coupling");
    add_common(solve, true);
    solve->add_option("--k", k_flag, "coupling coefficient (overrides topology.k)");
    solve->add_option("--harmonics", harmonics_flag, "order limit N (overrides solver.harmonics)");

    auto* sweep = app.add_subcommand("sweep", "detuned-secondary candidate search");
    add_common(sweep, true);
    sweep->add_option("--harmonics", harmonics_flag, "order limit N (overrides solver.harmonics)");
    sweep->add_flag("--verify", verify, "cross-check candidates against the time-domain oracle");

    auto* oracle = app.add_subcommand("oracle", "time-domain reference simulation");
    add_common(oracle, true);
    oracle->add_option("--k", k_flag, "coupling coefficient (overrides topology.k)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (dc->parsed()) return cmd_design_constants(variant, duty, k_ratio);
        RunConfig cfg = load_config(config_path);
        if (k_flag) {
            if (!(*k_flag >= 0.0 && *k_flag < 1.0))
                throw std::invalid_argument("--k must lie in [0, 1)");
            cfg.net.k = *k_flag;
        }
        if (harmonics_flag) {
            if (*harmonics_flag < 1) throw std::invalid_argument("--harmonics must be >= 1");
            cfg.harmonics = *harmonics_flag;
        }
        if (out_flag) cfg.out_dir = *out_flag;
        if (solve->parsed()) return cmd_solve(std::move(cfg));
        if (sweep->parsed()) return cmd_sweep(std::move(cfg), verify);
        if (oracle->parsed()) return cmd_oracle(std::move(cfg));
        std::cerr << "no subcommand selected\n";
        return 2;
    } catch (const config_error& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const std::invalid_argument& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return 2;
    } catch (const numeric_error& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}

} // namespace cli
} // namespace ipt
