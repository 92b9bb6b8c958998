// Harmonic-domain algebra: spectra over orders -N..N, element impedance
// stamps, the time-varying-switch Toeplitz operator, and time<->frequency
// conversions.
#pragma once

#include <cmath>
#include <complex>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <Eigen/Dense>

namespace ipt {

using cd = std::complex<double>;
using Eigen::MatrixXcd;
using Eigen::VectorXcd;
using Eigen::VectorXd;

inline constexpr double pi = std::numbers::pi;

struct numeric_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Row/column index <-> harmonic order for a (2N+1)-dimensional operator.
// 0-based index i corresponds to order p = i - N, so row 0 is order -N.
inline int order_at(int i, int n_ord) { return i - n_ord; }
inline int index_of(int p, int n_ord) { return p + n_ord; }

struct SwitchProfile {
    double r_on = 50e-3;
    double r_off = 1e6;
    double duty = 0.5;

    void validate() const {
        if (!(r_on > 0.0) || !(r_off > r_on))
            throw std::invalid_argument("switch profile requires 0 < r_on < r_off");
        if (!(duty > 0.0 && duty < 1.0))
            throw std::invalid_argument("switch duty must lie in (0,1)");
    }
};

// Complex Fourier coefficients of a real periodic signal, orders -N..N.
struct HarmonicSpectrum {
    int order_limit = 0;
    double base_frequency = 0.0;
    VectorXcd coeffs;

    cd at(int p) const { return coeffs[index_of(p, order_limit)]; }
    cd& at(int p) { return coeffs[index_of(p, order_limit)]; }
};

inline bool is_conjugate_symmetric(const VectorXcd& c, double tol = 1e-9) {
    const int n = static_cast<int>(c.size());
    const int n_ord = (n - 1) / 2;
    double scale = c.norm();
    if (scale == 0.0) return true;
    for (int p = 0; p <= n_ord; ++p) {
        cd a = c[index_of(p, n_ord)];
        cd b = c[index_of(-p, n_ord)];
        if (std::abs(a - std::conj(b)) > tol * scale) return false;
    }
    return true;
}

// ---- element stamps ----------------------------------------------------

inline MatrixXcd stamp_resistor(double r, int n_ord) {
    if (r < 0.0) throw std::invalid_argument("negative resistance");
    if (n_ord < 1) throw std::invalid_argument("order limit must be >= 1");
    const int n = 2 * n_ord + 1;
    return r * MatrixXcd::Identity(n, n);
}

inline MatrixXcd stamp_inductor(double l, double omega, int n_ord) {
    if (l < 0.0) throw std::invalid_argument("negative inductance");
    if (!(omega > 0.0)) throw std::invalid_argument("omega must be positive");
    const int n = 2 * n_ord + 1;
    MatrixXcd z = MatrixXcd::Zero(n, n);
    for (int i = 0; i < n; ++i)
        z(i, i) = cd(0.0, order_at(i, n_ord) * omega * l);
    return z;
}

// Impedance stamp of a capacitor.  The p=0 entry is a true open circuit and
// is stored as an infinity sentinel; assembled systems never use this form
// at DC -- they use capacitor_admittance_diag, where the DC open is exact.
inline MatrixXcd stamp_capacitor(double c, double omega, int n_ord) {
    if (!(c > 0.0)) throw std::invalid_argument("capacitance must be positive");
    if (!(omega > 0.0)) throw std::invalid_argument("omega must be positive");
    const int n = 2 * n_ord + 1;
    MatrixXcd z = MatrixXcd::Zero(n, n);
    for (int i = 0; i < n; ++i) {
        int p = order_at(i, n_ord);
        if (p == 0)
            z(i, i) = cd(std::numeric_limits<double>::infinity(), 0.0);
        else
            z(i, i) = 1.0 / cd(0.0, p * omega * c);
    }
    return z;
}

// Admittance form of a series capacitor: diagonal j*p*omega*C with the p=0
// entry exactly zero, so a DC open circuit needs no large-number sentinel.
inline VectorXcd capacitor_admittance_diag(double c, double omega, int n_ord) {
    if (!(c > 0.0)) throw std::invalid_argument("capacitance must be positive");
    const int n = 2 * n_ord + 1;
    VectorXcd y(n);
    for (int i = 0; i < n; ++i)
        y[i] = cd(0.0, order_at(i, n_ord) * omega * c);
    return y;
}

// Fourier coefficient of a two-level periodic waveform that holds on_value
// over [0, 2*pi*D) and off_value over [2*pi*D, 2*pi).
inline cd two_level_coefficient(double on_value, double off_value, double duty, int p) {
    if (p == 0) return cd(on_value * duty + off_value * (1.0 - duty), 0.0);
    double s = (on_value - off_value) * std::sin(p * pi * duty) / (p * pi);
    return s * std::exp(cd(0.0, -p * pi * duty));
}

// Switch-resistance harmonic coefficient.  The constant-resistance limit
// (r_on == r_off) must carry zero harmonic content, which fixes the
// grouping as (R_ON - R_OFF) * sin(p*pi*D)/(p*pi) * exp(-j*p*pi*D).
inline cd switch_coefficient(int p, const SwitchProfile& sw) {
    return two_level_coefficient(sw.r_on, sw.r_off, sw.duty, p);
}

inline MatrixXcd toeplitz_from_two_level(double on_value, double off_value,
                                         double duty, int n_ord) {
    const int n = 2 * n_ord + 1;
    MatrixXcd z(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            z(i, j) = two_level_coefficient(on_value, off_value, duty, i - j);
    return z;
}

inline MatrixXcd stamp_switch(const SwitchProfile& sw, int n_ord) {
    if (n_ord < 1) throw std::invalid_argument("order limit must be >= 1");
    sw.validate();
    return toeplitz_from_two_level(sw.r_on, sw.r_off, sw.duty, n_ord);
}

// Toeplitz operator of the switch conductance waveform 1/R(t).  This is the
// exact operator inverse of the resistance waveform truncated *after*
// inversion; inverting the truncated resistance Toeplitz instead loses the
// contribution of out-of-band harmonics and, with r_off/r_on ~ 1e7, is off
// by tens of percent against a time-domain reference.
inline MatrixXcd switch_admittance(const SwitchProfile& sw, int n_ord) {
    sw.validate();
    return toeplitz_from_two_level(1.0 / sw.r_on, 1.0 / sw.r_off, sw.duty, n_ord);
}

inline VectorXcd dc_source_vector(double v_in, int n_ord) {
    if (n_ord < 1) throw std::invalid_argument("order limit must be >= 1");
    VectorXcd s = VectorXcd::Zero(2 * n_ord + 1);
    s[index_of(0, n_ord)] = cd(v_in, 0.0);
    return s;
}

// ---- time <-> frequency ------------------------------------------------

// Inverse Fourier synthesis at m uniform samples over one period.
inline VectorXd to_time_samples(const VectorXcd& coeffs, int m) {
    const int n = static_cast<int>(coeffs.size());
    const int n_ord = (n - 1) / 2;
    if (m < 2 * n) throw std::invalid_argument("need at least 2*(2N+1) samples");
    if (!is_conjugate_symmetric(coeffs))
        throw std::invalid_argument("spectrum is not conjugate-symmetric");
    VectorXd w(m);
    double rms2 = 0.0, imag_max = 0.0;
    for (int j = 0; j < m; ++j) {
        double theta = 2.0 * pi * j / m;
        cd acc = coeffs[index_of(0, n_ord)];
        for (int p = 1; p <= n_ord; ++p) {
            acc += coeffs[index_of(p, n_ord)] * std::exp(cd(0.0, p * theta));
            acc += coeffs[index_of(-p, n_ord)] * std::exp(cd(0.0, -p * theta));
        }
        w[j] = acc.real();
        imag_max = std::max(imag_max, std::abs(acc.imag()));
        rms2 += w[j] * w[j];
    }
    double rms = std::sqrt(rms2 / m);
    if (rms > 0.0 && imag_max > 1e-9 * rms)
        throw numeric_error("imaginary residue above tolerance in synthesis");
    return w;
}

// Forward Fourier analysis, truncated to |p| <= N.
inline VectorXcd from_time_samples(const VectorXd& w, int n_ord) {
    const int m = static_cast<int>(w.size());
    if (m < 2 * (2 * n_ord + 1))
        throw std::invalid_argument("too few samples for requested order");
    VectorXcd c(2 * n_ord + 1);
    for (int p = -n_ord; p <= n_ord; ++p) {
        cd acc(0.0, 0.0);
        for (int j = 0; j < m; ++j) {
            double theta = 2.0 * pi * j / m;
            acc += w[j] * std::exp(cd(0.0, -p * theta));
        }
        c[index_of(p, n_ord)] = acc / static_cast<double>(m);
    }
    return c;
}

} // namespace ipt
