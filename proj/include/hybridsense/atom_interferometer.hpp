#pragma once

// Three-pulse (pi/2 - pi - pi/2) Mach-Zehnder atom interferometer: fringe
// readout, sensitivity function, phase transfer function, projection noise
// and the aliased acceleration-noise sum.

#include "hybridsense/constants.hpp"
#include "hybridsense/error.hpp"
#include "hybridsense/noise_models.hpp"
#include "hybridsense/series.hpp"

#include <boost/math/quadrature/gauss.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <span>

namespace hybridsense::ai {

struct InterferometerConfig {
    double T = 0.05;         ///< pulse separation (s)
    double T_c = 1.5;        ///< cycle time (s)
    double tau_p = 0.0;      ///< pi/2 pulse duration (s); 0 selects instantaneous pulses
    double N = 1e7;          ///< atom number
    double C0 = 1.0;         ///< contrast
    double B = 0.0;          ///< population offset
    double k_eff = raman_k_eff(kRb87D2Wavelength); ///< rad/m
    double g0 = kStandardGravity;                  ///< m/s^2

    /// Duration from the start of the first pulse to the end of the last one.
    double span() const { return 2.0 * T + 4.0 * tau_p; }
    double midpoint() const { return T + 2.0 * tau_p; }
    double cycle_rate() const { return 1.0 / T_c; }
    /// Phase per unit acceleration, k_eff T^2 (rad per m/s^2).
    double scale_factor() const { return k_eff * T * T; }

    void validate() const {
        if (!(T > 0.0)) throw ConfigError("interferometer: T must be > 0");
        if (!(tau_p >= 0.0)) throw ConfigError("interferometer: tau_p must be >= 0");
        if (!(T_c >= span())) throw ConfigError("interferometer: T_c must be >= 2T + 4 tau_p");
        if (!(N >= 1.0)) throw ConfigError("interferometer: N must be >= 1");
        if (!(C0 > 0.0 && C0 <= 1.0)) throw ConfigError("interferometer: C0 must lie in (0, 1]");
        if (!(k_eff > 0.0)) throw ConfigError("interferometer: k_eff must be > 0");
    }
};

/// Fraction of atoms in the upper state for a total phase dphi.
inline double population(double dphi, const InterferometerConfig& cfg) {
    cfg.validate();
    return 0.5 * cfg.C0 * (1.0 + std::cos(dphi)) + cfg.B;
}

namespace detail {

/// Sensitivity function for u = |t - midpoint| >= 0, positive branch.
inline double g_half(double u, const InterferometerConfig& cfg) {
    const double T = cfg.T;
    const double tau = cfg.tau_p;
    if (tau == 0.0) return u < T ? 1.0 : 0.0;
    const double rabi = kPi / (2.0 * tau);
    if (u < tau) return std::sin(rabi * u);
    if (u < T + tau) return 1.0;
    if (u < T + 2.0 * tau) return std::sin(rabi * (u - T));
    return 0.0;
}

/// Breakpoints of g_half on [0, half-span].
inline std::array<double, 4> g_half_breaks(const InterferometerConfig& cfg) {
    return {0.0, cfg.tau_p, cfg.T + cfg.tau_p, cfg.T + 2.0 * cfg.tau_p};
}

} // namespace detail

/// Sensitivity function g(t), t measured from the start of the first pulse.
/// Odd about the midpoint: -1 during the first dark period, +1 during the
/// second, zero outside the sequence.
inline double sensitivity_g(double t, const InterferometerConfig& cfg) {
    const double s = t - cfg.midpoint();
    if (s == 0.0) return 0.0;
    const double u = std::abs(s);
    if (u >= cfg.midpoint()) return 0.0;
    const double v = detail::g_half(u, cfg);
    return s < 0.0 ? -v : v;
}

/// |H_phi(omega)|^2 from a numerical Fourier transform of g(t).
///
/// With g odd about its midpoint, |G(omega)| = 2 |int_0^half g(u) sin(omega u) du|
/// and H = omega G.
inline double transfer_fn_sq_numeric(double omega, const InterferometerConfig& cfg) {
    if (!(omega > 0.0)) throw DomainError("transfer function needs omega > 0");
    const auto br = detail::g_half_breaks(cfg);
    const double max_panel = (kTwoPi / omega) / 4.0;
    double integral = 0.0;
    for (std::size_t p = 0; p + 1 < br.size(); ++p) {
        const double a = br[p];
        const double b = br[p + 1];
        if (!(b > a)) continue;
        const double mid = 0.5 * (a + b);
        const double gval_const = detail::g_half(mid, cfg);
        const bool constant_piece = (cfg.tau_p == 0.0) || (p == 1);
        const auto panels = static_cast<std::size_t>(std::ceil((b - a) / max_panel));
        const double h = (b - a) / static_cast<double>(std::max<std::size_t>(panels, 1));
        for (std::size_t k = 0; k < std::max<std::size_t>(panels, 1); ++k) {
            const double lo = a + h * static_cast<double>(k);
            const double hi = lo + h;
            integral += boost::math::quadrature::gauss<double, 15>::integrate(
                [&](double u) {
                    return (constant_piece ? gval_const : detail::g_half(u, cfg)) * std::sin(omega * u);
                },
                lo, hi);
        }
    }
    const double H = 2.0 * omega * integral;
    return H * H;
}

/// |H_phi(omega)|^2: closed form 16 sin^4(omega T / 2) for instantaneous pulses,
/// numerical transform of g(t) otherwise.
inline double transfer_fn_sq(double omega, const InterferometerConfig& cfg) {
    if (!(omega > 0.0)) throw DomainError("transfer function needs omega > 0");
    if (cfg.tau_p == 0.0) {
        const double s = std::sin(0.5 * omega * cfg.T);
        const double s2 = s * s;
        return 16.0 * s2 * s2;
    }
    return transfer_fn_sq_numeric(omega, cfg);
}

/// Single-shot projection-noise phase, 1/(C0 sqrt(N)).
inline double qpn_phase(const InterferometerConfig& cfg) {
    cfg.validate();
    return 1.0 / (cfg.C0 * std::sqrt(cfg.N));
}

/// Projection-noise-limited acceleration ASD (m/s^2/sqrt(Hz)).
inline double qpn_accel_asd(const InterferometerConfig& cfg) {
    return qpn_phase(cfg) / cfg.scale_factor() * std::sqrt(cfg.T_c);
}

struct SumOptions {
    std::size_t n_start = 1024;     ///< first harmonic count tested for convergence
    std::size_t n_ceiling = 1u << 22;
    double rel_tol = 1e-3;          ///< allowed change in sigma when n_max doubles
};

struct SensitivityResult {
    double sigma = 0.0;          ///< m/s^2 at the requested averaging time
    std::size_t harmonics = 0;   ///< n_max actually used
    std::size_t substituted = 0; ///< harmonics answered by the PSD's out-of-band policy

    bool band_substituted() const { return substituted > 0; }
};

/// Acceleration sensitivity at averaging time tau from the aliased noise sum
///
///   sigma^2(tau) = 1/(tau T^4) sum_{n>=1} |H(w_n)|^2 / w_n^4 S_a(w_n / 2 pi),  w_n = 2 pi n / T_c.
///
/// The harmonic count doubles from n_start until sigma changes by less than
/// rel_tol; n_start must reach past any discontinuity of S_a.
inline SensitivityResult accel_sensitivity(const noise::NoisePsd& s_a, const InterferometerConfig& cfg,
                                           double tau, SumOptions opts = {}) {
    cfg.validate();
    if (s_a.kind() != noise::PsdKind::acceleration) throw DomainError("accel_sensitivity needs an acceleration PSD");
    if (!(tau >= cfg.T_c)) throw DomainError("averaging time must be >= T_c");
    if (opts.n_ceiling < 1) throw DomainError("harmonic ceiling must be >= 1");

    const double w_c = kTwoPi / cfg.T_c;
    const double T4 = std::pow(cfg.T, 4);
    SensitivityResult res;
    double sum = 0.0;
    std::size_t n_done = 0;
    const auto extend_to = [&](std::size_t n_max) {
        for (std::size_t n = n_done + 1; n <= n_max; ++n) {
            const double w = w_c * static_cast<double>(n);
            const auto psd = s_a.sample(w / kTwoPi);
            if (psd.substituted) ++res.substituted;
            if (psd.value == 0.0) continue;
            const double w2 = w * w;
            sum += transfer_fn_sq(w, cfg) / (w2 * w2) * psd.value;
        }
        n_done = std::max(n_done, n_max);
        return std::sqrt(sum / (tau * T4));
    };

    std::size_t n = std::clamp<std::size_t>(opts.n_start, 1, opts.n_ceiling);
    double prev = extend_to(n);
    while (true) {
        if (n >= opts.n_ceiling) {
            if (prev == 0.0) break;
            throw ConvergenceError("harmonic sum not converged at n_max = " + std::to_string(n));
        }
        const std::size_t next = std::min(n * 2, opts.n_ceiling);
        const double cur = extend_to(next);
        const bool settled = (cur == 0.0 && prev == 0.0) || std::abs(cur - prev) <= opts.rel_tol * cur;
        n = next;
        prev = cur;
        if (settled) break;
    }
    res.sigma = prev;
    res.harmonics = n;
    return res;
}

/// Inertial phase Delta Phi_IN = k_eff int g(t - t0) v(t) dt of one interferometer
/// cycle starting at t0, integrated piecewise with the trapezoidal rule so
/// the jumps of g never fall inside an integration step.
inline double phase_from_mirror_motion(const SampledView& velocity, double t0, const InterferometerConfig& cfg) {
    cfg.validate();
    const double fs = velocity.sample_rate;
    if (!(fs >= 20.0 / cfg.T)) throw DomainError("velocity record sample rate must be >= 20/T");
    const double span = cfg.span();
    const double slack = 1e-9 / fs;
    if (velocity.values.size() < 2 || velocity.t_start > t0 + slack || velocity.t_end() < t0 + span - slack) {
        throw DomainError("velocity record does not cover the interferometer cycle");
    }
    const auto& v = velocity.values;
    const auto n = v.size();
    const auto v_at = [&](double t) {
        double x = (t - velocity.t_start) * fs;
        x = std::clamp(x, 0.0, static_cast<double>(n - 1));
        auto i = static_cast<std::size_t>(std::floor(x));
        if (i >= n - 1) return v[n - 1];
        const double frac = x - static_cast<double>(i);
        return v[i] + frac * (v[i + 1] - v[i]);
    };

    // Pieces of g in absolute time, each evaluated from its own closed formula.
    const double mid = t0 + cfg.midpoint();
    const auto br = detail::g_half_breaks(cfg);
    double total = 0.0;
    for (int side = -1; side <= 1; side += 2) {
        for (std::size_t p = 0; p + 1 < br.size(); ++p) {
            const double u_lo = br[p];
            const double u_hi = br[p + 1];
            if (!(u_hi > u_lo)) continue;
            const double u_mid = 0.5 * (u_lo + u_hi);
            // Finite-pulse ramps are continuous at their ends; only the flat
            // pieces carry jumps (instantaneous pulses).
            const bool constant = (cfg.tau_p == 0.0) || (p == 1);
            const auto g_piece = [&](double t) {
                const double u = std::clamp(std::abs(t - mid), u_lo, u_hi);
                const double val = detail::g_half(constant ? u_mid : u, cfg);
                return side < 0 ? -val : val;
            };
            const double a = side < 0 ? mid - u_hi : mid + u_lo;
            const double b = side < 0 ? mid - u_lo : mid + u_hi;
            // Samples strictly inside (a, b).
            const double xa = (a - velocity.t_start) * fs;
            const double xb = (b - velocity.t_start) * fs;
            auto first = static_cast<std::ptrdiff_t>(std::floor(xa)) + 1;
            auto last = static_cast<std::ptrdiff_t>(std::ceil(xb)) - 1;
            first = std::max<std::ptrdiff_t>(first, 0);
            last = std::min<std::ptrdiff_t>(last, static_cast<std::ptrdiff_t>(n) - 1);
            double t_prev = a;
            double f_prev = g_piece(a) * v_at(a);
            for (std::ptrdiff_t i = first; i <= last; ++i) {
                const double t = velocity.time_of(static_cast<std::size_t>(i));
                if (t - t_prev <= 1e-12 / fs || t >= b) continue;
                const double f = g_piece(t) * v[static_cast<std::size_t>(i)];
                total += 0.5 * (t - t_prev) * (f + f_prev);
                t_prev = t;
                f_prev = f;
            }
            const double f_b = g_piece(b) * v_at(b);
            total += 0.5 * (b - t_prev) * (f_b + f_prev);
        }
    }
    return cfg.k_eff * total;
}

/// Same as above for a record given with explicit, uniformly spaced timestamps.
inline double phase_from_mirror_motion(std::span<const double> times, std::span<const double> velocity,
                                       double t0, const InterferometerConfig& cfg) {
    if (times.size() != velocity.size()) throw DomainError("timestamp and velocity lengths differ");
    const double fs = uniform_rate(times);
    return phase_from_mirror_motion(SampledView{velocity, times.front(), fs}, t0, cfg);
}

} // namespace hybridsense::ai
