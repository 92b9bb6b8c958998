// Detuned-secondary design search: sweep coupling k and the secondary
// detuning factor delta (with the primary-side extra reactance X), compute
// the output-power fluctuation ratio across the k range, classify the
// reflected impedance, and rank candidate design points.
#pragma once

#include <future>
#include <thread>

#include "invdesign.hpp"
#include "solver.hpp"

namespace ipt {

inline std::vector<double> linspace_grid(double lo, double hi, int n) {
    if (n < 1) throw std::invalid_argument("linspace_grid: need at least one point");
    std::vector<double> g(n);
    if (n == 1) {
        g[0] = lo;
        return g;
    }
    for (int i = 0; i < n; ++i) g[i] = lo + (hi - lo) * i / (n - 1);
    return g;
}

struct SweepSpec {
    double k_min = 0.04;
    double k_max = 0.07;
    int k_steps = 7;
    // multiplicative factors applied to the resonant C_rx value
    std::vector<double> delta_grid = linspace_grid(0.7, 1.3, 25);
    // ohm; empty means "derive from the load-independent design value"
    // (11 points spanning +-50% of it)
    std::vector<double> x_grid;
};

inline void validate_sweep_spec(const SweepSpec& spec) {
    if (!(spec.k_min >= 0.0 && spec.k_min < spec.k_max && spec.k_max < 1.0))
        throw std::invalid_argument("sweep spec: need 0 <= k_min < k_max < 1");
    if (spec.k_steps < 1) throw std::invalid_argument("sweep spec: k_steps must be >= 1");
    auto check_grid = [](const std::vector<double>& g, const char* name, bool allow_empty) {
        if (g.empty()) {
            if (!allow_empty)
                throw std::invalid_argument(std::string("sweep spec: ") + name +
                                            " grid must be non-empty");
            return;
        }
        for (size_t i = 0; i + 1 < g.size(); ++i)
            if (!(g[i] < g[i + 1]))
                throw std::invalid_argument(std::string("sweep spec: ") + name +
                                            " grid must be strictly increasing");
    };
    check_grid(spec.delta_grid, "delta", false);
    check_grid(spec.x_grid, "x", true);
}

// (P_max - P_min)/P_max over the swept range: the fraction of peak power
// lost at the worst coupling.  Scale-invariant by construction.
inline double fluctuation_ratio(const std::vector<double>& powers) {
    if (powers.empty()) throw std::invalid_argument("fluctuation_ratio: empty power curve");
    double pmax = powers[0], pmin = powers[0];
    for (double p : powers) {
        if (p < 0.0) throw std::invalid_argument("fluctuation_ratio: negative power");
        pmax = std::max(pmax, p);
        pmin = std::min(pmin, p);
    }
    if (pmax == 0.0) throw numeric_error("fluctuation_ratio: all-zero power curve is undefined");
    return (pmax - pmin) / pmax;
}

inline double resonant_c_rx(const IptNetwork& net) {
    const double w = net.omega();
    return 1.0 / (w * w * net.l_rx);
}

// Secondary loop impedance reflected into the primary: (w M)^2 / Z_s.  A net
// inductive secondary reflects capacitive and vice versa.  Coil loss is the
// Q-derived series resistance at the switching frequency.
inline cd reflected_impedance(const IptNetwork& net, double k, double omega) {
    const double m = mutual_from_k(k, net.l_tx, net.l_rx);
    const cd z_s(net.r_rx() + net.r_load, omega * net.l_rx - 1.0 / (omega * net.c_rx));
    if (std::abs(z_s) < 1e-12 * std::max(omega * net.l_rx, 1.0))
        throw numeric_error("reflected_impedance: secondary loop is resonant and lossless");
    const double wm = omega * m;
    return wm * wm / z_s;
}

inline cd reflected_impedance(const IptNetwork& net, double k) {
    return reflected_impedance(net, k, net.omega());
}

// The extra primary reactance that realizes the load-independent design for
// this network's inverter cell, in ohm.
inline double load_independent_x(const IptNetwork& net,
                                 const DesignSolveOptions& opts = {}) {
    const double w = net.omega();
    if (net.variant == Variant::class_e) {
        auto dc = solve_class_e(net.sw.duty, opts);
        return dc.x_over_wl1 * w * net.l1;
    }
    const double k_ratio = net.c1_eff() / *net.c2;
    auto dc = solve_class_ef(k_ratio, net.sw.duty, opts);
    return dc.omega_x_c1 / (w * net.c1_eff());
}

struct DesignCandidate {
    double delta = 0.0;
    double x_ohm = 0.0;
    double c_rx = 0.0;            // realized secondary capacitance delta/(w^2 L_rx)
    double c0 = 0.0;              // realized series capacitance for this X
    double beta_fluct = 0.0;
    double mean_eff = 0.0;
    double mean_p_out = 0.0;
    cd reflected = 0.0;           // Z_ref at the k-range midpoint
    int reflected_sign = 0;       // sign of Im Z_ref: -1 capacitive, +1 inductive
    std::vector<double> p_out_w;  // per k grid point, grid order
    std::vector<double> efficiency;
};

// One candidate's coupling sweep: apply delta and X to the network, then one
// steady-state solve per k grid point.
inline DesignCandidate k_sweep(const IptNetwork& net, const std::vector<double>& k_grid,
                               double delta, double x, int n_ord = 30,
                               const MatrixXcd* pair = nullptr) {
    if (k_grid.empty()) throw std::invalid_argument("k_sweep: empty k grid");
    DesignCandidate cand;
    cand.delta = delta;
    cand.x_ohm = x;
    cand.c_rx = delta * resonant_c_rx(net);
    cand.c0 = tuned_c0(net.l_tx, net.omega(), x);
    IptNetwork pt = net;
    pt.c_rx = cand.c_rx;
    pt.c0 = cand.c0;
    double eff_sum = 0.0, p_sum = 0.0;
    for (double k : k_grid) {
        pt.k = k;
        try {
            auto sys = assemble(pt, n_ord, pair);
            auto sol = solve_steady_state(sys, pt);
            cand.p_out_w.push_back(sol.p_out);
            cand.efficiency.push_back(sol.efficiency);
            eff_sum += sol.efficiency;
            p_sum += sol.p_out;
        } catch (const numeric_error& e) {
            std::ostringstream os;
            os << "k=" << k << " (delta=" << delta << ", x=" << x << "): " << e.what();
            throw numeric_error(os.str());
        }
    }
    cand.beta_fluct = fluctuation_ratio(cand.p_out_w);
    cand.mean_eff = eff_sum / static_cast<double>(k_grid.size());
    cand.mean_p_out = p_sum / static_cast<double>(k_grid.size());
    const double k_mid = 0.5 * (k_grid.front() + k_grid.back());
    cand.reflected = reflected_impedance(pt, k_mid);
    const double im = cand.reflected.imag();
    cand.reflected_sign = im < 0.0 ? -1 : (im > 0.0 ? 1 : 0);
    return cand;
}

struct SearchResult {
    std::vector<DesignCandidate> ranked;  // ascending beta_fluct
    std::vector<double> k_grid;
    std::vector<double> x_grid;
    double c_rx_resonant = 0.0;
    double x_li = 0.0;               // load-independent X the default grid spans
    double delta_configured = 0.0;   // where the config's own C_rx falls on the delta axis
};

// Full delta x X grid search.  Each candidate is independent; they are
// evaluated by a parallel map and reduced in grid order, so the ranking is
// deterministic regardless of scheduling.  Ties on beta_fluct prefer higher
// mean efficiency, then smaller detuning |delta - 1|.
inline SearchResult search(const IptNetwork& net, const SweepSpec& spec, int n_ord = 30,
                           unsigned threads = std::thread::hardware_concurrency()) {
    validate_sweep_spec(spec);
    SearchResult res;
    res.k_grid = linspace_grid(spec.k_min, spec.k_max, spec.k_steps);
    res.c_rx_resonant = resonant_c_rx(net);
    res.delta_configured = net.c_rx / res.c_rx_resonant;
    if (spec.x_grid.empty()) {
        res.x_li = load_independent_x(net);
        res.x_grid = linspace_grid(0.5 * res.x_li, 1.5 * res.x_li, 11);
    } else {
        res.x_grid = spec.x_grid;
    }

    const MatrixXcd pair = pair_impedance_block(net, n_ord);
    const size_t total = spec.delta_grid.size() * res.x_grid.size();
    std::vector<DesignCandidate> flat(total);
    auto eval_range = [&](size_t lo, size_t hi) {
        for (size_t i = lo; i < hi; ++i) {
            const double delta = spec.delta_grid[i / res.x_grid.size()];
            const double x = res.x_grid[i % res.x_grid.size()];
            flat[i] = k_sweep(net, res.k_grid, delta, x, n_ord, &pair);
        }
    };
    const unsigned nthreads = std::max(1u, std::min<unsigned>(threads, total));
    if (nthreads <= 1) {
        eval_range(0, total);
    } else {
        std::vector<std::future<void>> futs;
        const size_t chunk = (total + nthreads - 1) / nthreads;
        for (unsigned t = 0; t < nthreads; ++t) {
            const size_t lo = t * chunk, hi = std::min(total, lo + chunk);
            if (lo >= hi) break;
            futs.push_back(std::async(std::launch::async, eval_range, lo, hi));
        }
        for (auto& f : futs) f.get();
    }

    res.ranked = std::move(flat);
    std::stable_sort(res.ranked.begin(), res.ranked.end(),
                     [](const DesignCandidate& a, const DesignCandidate& b) {
                         if (a.beta_fluct != b.beta_fluct) return a.beta_fluct < b.beta_fluct;
                         if (a.mean_eff != b.mean_eff) return a.mean_eff > b.mean_eff;
                         return std::abs(a.delta - 1.0) < std::abs(b.delta - 1.0);
                     });
    return res;
}

} // namespace ipt
