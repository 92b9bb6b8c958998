// Declarative Class E / Class EF IPT circuit description with losses and
// coupling, and assembly into one harmonic-domain mesh system.
#pragma once

#include <array>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "harmonics.hpp"

namespace ipt {

enum class Variant { class_e, class_ef };

inline const char* variant_name(Variant v) {
    return v == Variant::class_e ? "class-e" : "class-ef";
}

struct IptNetwork {
    Variant variant = Variant::class_e;
    double v_in = 30.0;
    double f_s = 400e3;
    SwitchProfile sw{};
    // Input inductor: the resonant L1 of the Class E cell, or the choke L_f
    // of the Class EF cell.
    double l1 = 10e-6;
    double c1 = 9.49e-9;        // shunt capacitance as configured
    double junction_c = 0.0;    // device junction capacitance, folded into c1
    bool fold_junction = true;
    std::optional<double> l2;   // Class EF series branch
    std::optional<double> c2;
    double l_tx = 140e-6;
    double l_rx = 50e-6;
    double c0 = 1.15e-9;
    double q_tx = 350.0;
    double q_rx = 251.0;
    double c_rx = 3.3e-9;
    double r_load = 12.5;
    double k = 0.05;

    double omega() const { return 2.0 * pi * f_s; }
    // Shunt capacitance seen by the harmonic model: the device junction
    // capacitance is assumed absorbed into the configured C1, so folding
    // subtracts it from the external capacitor value.
    double c1_eff() const { return fold_junction ? c1 - junction_c : c1; }
    double r_tx() const { return omega() * l_tx / q_tx; }
    double r_rx() const { return omega() * l_rx / q_rx; }
    // Residual TX reactance X = w*L_tx - 1/(w*C0).
    double extra_reactance() const { return omega() * l_tx - 1.0 / (omega() * c0); }
};

inline double mutual_from_k(double k, double l_tx, double l_rx) {
    if (!(k >= 0.0 && k < 1.0))
        throw std::invalid_argument("coupling coefficient must lie in [0,1)");
    return k * std::sqrt(l_tx * l_rx);
}

inline double series_loss_resistance(double l, double q, double omega) {
    if (!(q > 0.0)) throw std::invalid_argument("quality factor must be positive");
    return omega * l / q;
}

// Series compensation capacitor that leaves residual reactance x at omega.
inline double tuned_c0(double l_tx, double omega, double x) {
    if (!(omega * l_tx > x))
        throw std::invalid_argument("requested reactance exceeds w*L_tx; no positive C0 exists");
    return 1.0 / (omega * (omega * l_tx - x));
}

inline std::vector<std::string> validate(const IptNetwork& net) {
    std::vector<std::string> errors;
    auto positive = [&](double v, const char* name) {
        if (!(v > 0.0)) errors.push_back(std::string(name) + " must be strictly positive");
    };
    positive(net.v_in, "v_in");
    positive(net.f_s, "f_s");
    positive(net.l1, "l1");
    positive(net.c1, "c1");
    positive(net.l_tx, "l_tx");
    positive(net.l_rx, "l_rx");
    positive(net.c0, "c0");
    positive(net.q_tx, "q_tx");
    positive(net.q_rx, "q_rx");
    positive(net.c_rx, "c_rx");
    positive(net.r_load, "r_load");
    if (!(net.k >= 0.0 && net.k < 1.0)) errors.push_back("k must lie in [0,1)");
    if (net.junction_c < 0.0) errors.push_back("junction_c must be nonnegative");
    if (net.fold_junction && !(net.c1 - net.junction_c > 0.0))
        errors.push_back("junction capacitance consumes the whole configured c1");
    try {
        net.sw.validate();
    } catch (const std::exception& e) {
        errors.push_back(e.what());
    }
    if (net.variant == Variant::class_e) {
        if (net.l2 || net.c2)
            errors.push_back("class-e network must not define the l2/c2 branch");
    } else {
        if (!net.l2 || !net.c2)
            errors.push_back("class-ef network requires the l2/c2 branch");
        else {
            if (!(*net.l2 > 0.0)) errors.push_back("l2 must be strictly positive");
            if (!(*net.c2 > 0.0)) errors.push_back("c2 must be strictly positive");
        }
    }
    return errors;
}

inline IptNetwork build(Variant variant, IptNetwork params) {
    params.variant = variant;
    auto errors = validate(params);
    if (!errors.empty()) {
        std::ostringstream os;
        os << "invalid network:";
        for (const auto& e : errors) os << "\n  - " << e;
        throw std::invalid_argument(os.str());
    }
    return params;
}

// ---- assembly ----------------------------------------------------------

// Harmonic impedance block of the switch cell: switch resistance in
// parallel with C1 (plus the series L2-C2 branch for Class EF).  The
// parallel combination is the operator-level inverse of the summed branch
// admittances.  The admittance is formed at an enlarged order limit
// big_factor*N and the central (2N+1) block of its inverse is taken, so the
// block is a faithful section of the untruncated operator inverse; a plain
// N-sized inversion leaks several percent of error into the solve.
inline MatrixXcd pair_impedance_block(const IptNetwork& net, int n_ord,
                                      int big_factor = 3) {
    const int nb = big_factor * n_ord;
    const double w = net.omega();
    MatrixXcd y = switch_admittance(net.sw, nb);
    y.diagonal() += capacitor_admittance_diag(net.c1_eff(), w, nb);
    if (net.variant == Variant::class_ef) {
        // series L2-C2 admittance j*p*w*C2 / (1 - (p*w)^2 L2 C2); zero at DC
        for (int i = 0; i < 2 * nb + 1; ++i) {
            int p = order_at(i, nb);
            if (p == 0) continue;
            double pw = p * w;
            y(i, i) += cd(0.0, pw * *net.c2) / (1.0 - pw * pw * *net.l2 * *net.c2);
        }
    }
    MatrixXcd z_big = y.partialPivLu().inverse();
    const int off = nb - n_ord;
    return z_big.block(off, off, 2 * n_ord + 1, 2 * n_ord + 1);
}

struct AssembledSystem {
    int order_limit = 0;
    double omega = 0.0;
    MatrixXcd a;
    VectorXcd b;
    MatrixXcd zpair;  // switch-cell impedance block, kept for post-processing
    std::array<std::string, 3> mesh_labels{"input loop (source, input inductor, switch cell)",
                                           "tx loop (switch cell, C0, coil loss, L_tx)",
                                           "rx loop (L_rx, coil loss, C_rx, load)"};
    int mesh_count() const { return 3; }
};

// Mesh (loop) equations over harmonic spectra.  Series capacitors C0 and
// C_rx block DC exactly: their loop rows at p=0 are replaced by the
// admittance-form constraint I(0) = 0 instead of using an impedance
// sentinel.
inline AssembledSystem assemble(const IptNetwork& net, int n_ord,
                                const MatrixXcd* pair = nullptr) {
    auto errors = validate(net);
    if (!errors.empty())
        throw std::invalid_argument("assemble: invalid network: " + errors.front());
    const int n = 2 * n_ord + 1;
    const double w = net.omega();
    const double m = mutual_from_k(net.k, net.l_tx, net.l_rx);

    AssembledSystem sys;
    sys.order_limit = n_ord;
    sys.omega = w;
    sys.zpair = pair ? *pair : pair_impedance_block(net, n_ord);
    const MatrixXcd& zpair = sys.zpair;
    sys.a = MatrixXcd::Zero(3 * n, 3 * n);
    sys.b = VectorXcd::Zero(3 * n);

    auto blk = [&](int r, int c) { return sys.a.block(r * n, c * n, n, n); };

    // input loop: source, input inductor, switch cell
    blk(0, 0) = stamp_inductor(net.l1, w, n_ord) + zpair;
    blk(0, 1) = -zpair;
    // tx loop: switch cell shared with input loop, C0, coil loss, L_tx
    blk(1, 0) = -zpair;
    MatrixXcd ztx = zpair + stamp_resistor(net.r_tx(), n_ord) +
                    stamp_inductor(net.l_tx, w, n_ord);
    for (int i = 0; i < n; ++i) {
        int p = order_at(i, n_ord);
        if (p != 0) ztx(i, i) += 1.0 / cd(0.0, p * w * net.c0);
    }
    blk(1, 1) = ztx;
    MatrixXcd zm = stamp_inductor(m, w, n_ord);
    blk(1, 2) = zm;
    // rx loop: L_rx, coil loss, C_rx, load, coupled back symmetrically
    blk(2, 1) = zm;
    MatrixXcd zrx = stamp_resistor(net.r_rx() + net.r_load, n_ord) +
                    stamp_inductor(net.l_rx, w, n_ord);
    for (int i = 0; i < n; ++i) {
        int p = order_at(i, n_ord);
        if (p != 0) zrx(i, i) += 1.0 / cd(0.0, p * w * net.c_rx);
    }
    blk(2, 2) = zrx;

    sys.b.segment(0, n) = dc_source_vector(net.v_in, n_ord);

    // DC constraint rows for the series-capacitor loops
    for (int mesh : {1, 2}) {
        int row = mesh * n + index_of(0, n_ord);
        sys.a.row(row).setZero();
        sys.a(row, row) = 1.0;
        sys.b[row] = 0.0;
    }
    return sys;
}

} // namespace ipt
