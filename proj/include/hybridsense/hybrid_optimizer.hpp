#pragma once

// Hybrid sensor noise model and OMRR bandwidth optimisation.
//
// Below the OMRR resonance the residual acceleration noise seen by the atom
// interferometer is the OMRR self-noise; above it the OMRR no longer tracks
// the mirror and the ambient (Peterson) noise is left uncorrected.

#include "hybridsense/atom_interferometer.hpp"
#include "hybridsense/noise_models.hpp"
#include "hybridsense/omrr_model.hpp"
#include "hybridsense/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <string>
#include <vector>

namespace hybridsense::hybrid {

struct HybridConfig {
    HybridConfig(ai::InterferometerConfig ai_cfg, omrr::OmrrConfig omrr_cfg, noise::NoisePsd ambient_psd)
        : ai(ai_cfg), omrr(omrr_cfg), ambient(std::move(ambient_psd)) {}

    ai::InterferometerConfig ai;
    omrr::OmrrConfig omrr;
    noise::NoisePsd ambient; ///< ambient acceleration PSD (Peterson model)
    ai::SumOptions sum{};    ///< harmonic-sum ceiling and tolerance
    double tau = 1.0;        ///< reporting averaging time (s)

    void validate() const {
        ai.validate();
        omrr.validate();
        if (ambient.kind() != noise::PsdKind::acceleration) throw ConfigError("hybrid: ambient PSD must be acceleration");
        if (!(tau > 0.0)) throw ConfigError("hybrid: tau must be > 0");
    }
};

/// Residual acceleration PSD after OMRR correction at angular frequency omega.
inline noise::PsdSample hybrid_noise_psd(double omega, const HybridConfig& cfg) {
    if (!(omega > 0.0)) throw DomainError("hybrid PSD needs omega > 0");
    if (omega <= cfg.omrr.omega0) return {omrr::self_noise_accel_psd(omega, cfg.omrr), false};
    return cfg.ambient.sample(omega / kTwoPi);
}

/// hybrid_noise_psd as a NoisePsd over frequency in Hz.
inline noise::NoisePsd make_hybrid_psd(const HybridConfig& cfg) {
    return noise::NoisePsd(
        noise::PsdKind::acceleration,
        [cfg](double f) { return f > 0.0 ? hybrid_noise_psd(kTwoPi * f, cfg).value : 0.0; }, 0.0,
        std::numeric_limits<double>::infinity());
}

struct SigmaResult {
    double sigma = 0.0;          ///< m/s^2/sqrt(Hz), at cfg.tau
    std::size_t harmonics = 0;
    std::size_t substituted = 0; ///< harmonics where the ambient model was extended beyond its band
};

namespace detail {

inline std::size_t harmonic_index(double omega, const ai::InterferometerConfig& ai_cfg) {
    return static_cast<std::size_t>(std::ceil(omega * ai_cfg.T_c / kTwoPi));
}

inline SigmaResult sigma_for(const noise::NoisePsd& psd, const HybridConfig& cfg, std::size_t n_start,
                             std::size_t n_first_ambient) {
    auto opts = cfg.sum;
    opts.n_start = std::max(opts.n_start, n_start);
    // Evaluate at tau = T_c, then rescale to the reporting time.
    const auto r = ai::accel_sensitivity(psd, cfg.ai, cfg.ai.T_c, opts);
    SigmaResult out;
    out.sigma = r.sigma * std::sqrt(cfg.ai.T_c / cfg.tau);
    out.harmonics = r.harmonics;
    const double f_c = cfg.ai.cycle_rate();
    for (std::size_t n = std::max<std::size_t>(n_first_ambient, 1); n <= r.harmonics; ++n) {
        if (!cfg.ambient.in_band(f_c * static_cast<double>(n))) ++out.substituted;
    }
    return out;
}

} // namespace detail

/// Hybrid acceleration sensitivity (ASD at cfg.tau, 1 s by default).
inline SigmaResult hybrid_sigma(const HybridConfig& cfg) {
    cfg.validate();
    const std::size_t n0 = detail::harmonic_index(cfg.omrr.omega0, cfg.ai);
    return detail::sigma_for(make_hybrid_psd(cfg), cfg, 4 * n0 + 64, n0);
}

/// Atom interferometer sensitivity with no vibration correction.
inline SigmaResult uncorrected_sigma(const HybridConfig& cfg) {
    cfg.validate();
    return detail::sigma_for(cfg.ambient, cfg, cfg.sum.n_start, 1);
}

struct SweepPoint {
    double omega0 = 0.0;           ///< rad/s
    double sigma_a = 0.0;          ///< m/s^2/sqrt(Hz)
    double required_sigma_x = 0.0; ///< m/sqrt(Hz), DC-referred
};

struct SweepResult {
    std::vector<SweepPoint> points; ///< sorted by omega0, includes the refined optimum
    SweepPoint optimum;
    SweepPoint grid_optimum;        ///< best point on the supplied grid before refinement
};

inline SweepPoint evaluate_bandwidth(const HybridConfig& tmpl, double omega0) {
    HybridConfig cfg = tmpl;
    cfg.omrr.omega0 = omega0;
    return {omega0, hybrid_sigma(cfg).sigma, omrr::required_sigma_x(cfg.omrr)};
}

/// Evaluates the hybrid sensitivity on a resonance grid, then refines the grid
/// minimum by golden-section search inside its bracketing interval until the
/// interval is below 0.1 % of omega0. Ties go to the lower resonance.
inline SweepResult sweep_bandwidth(const HybridConfig& tmpl, std::span<const double> omega0_grid,
                                   unsigned workers = 1, double rel_tol = 1e-3) {
    tmpl.validate();
    if (omega0_grid.size() < 16) {
        throw BracketError("bandwidth grid needs at least 16 points to bracket a minimum (got " +
                           std::to_string(omega0_grid.size()) + ")");
    }
    for (std::size_t i = 1; i < omega0_grid.size(); ++i) {
        if (!(omega0_grid[i] > omega0_grid[i - 1])) throw DomainError("bandwidth grid must be strictly increasing");
    }
    if (!(omega0_grid.front() > 0.0)) throw DomainError("bandwidth grid must be positive");

    SweepResult res;
    res.points.resize(omega0_grid.size());
    parallel_for(omega0_grid.size(), workers,
                 [&](std::size_t i) { res.points[i] = evaluate_bandwidth(tmpl, omega0_grid[i]); });

    std::size_t best = 0;
    for (std::size_t i = 1; i < res.points.size(); ++i) {
        if (res.points[i].sigma_a < res.points[best].sigma_a) best = i;
    }
    res.grid_optimum = res.points[best];
    if (best == 0 || best + 1 == res.points.size()) {
        throw BracketError("minimum of the hybrid sensitivity lies on the grid edge at f0 = " +
                           format_double(res.points[best].omega0 / kTwoPi) + " Hz; widen the bandwidth grid");
    }

    // Golden-section search on [lo, hi].
    const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
    double lo = omega0_grid[best - 1];
    double hi = omega0_grid[best + 1];
    SweepPoint refined = res.points[best];
    const auto consider = [&](const SweepPoint& p) {
        if (p.sigma_a < refined.sigma_a || (p.sigma_a == refined.sigma_a && p.omega0 < refined.omega0)) refined = p;
    };
    double x1 = hi - inv_phi * (hi - lo);
    double x2 = lo + inv_phi * (hi - lo);
    SweepPoint p1 = evaluate_bandwidth(tmpl, x1);
    SweepPoint p2 = evaluate_bandwidth(tmpl, x2);
    consider(p1);
    consider(p2);
    while (hi - lo > rel_tol * refined.omega0) {
        if (p1.sigma_a <= p2.sigma_a) {
            hi = x2;
            x2 = x1;
            p2 = p1;
            x1 = hi - inv_phi * (hi - lo);
            p1 = evaluate_bandwidth(tmpl, x1);
            consider(p1);
        } else {
            lo = x1;
            x1 = x2;
            p1 = p2;
            x2 = lo + inv_phi * (hi - lo);
            p2 = evaluate_bandwidth(tmpl, x2);
            consider(p2);
        }
    }

    if (refined.omega0 != res.points[best].omega0) {
        auto pos = std::lower_bound(res.points.begin(), res.points.end(), refined.omega0,
                                    [](const SweepPoint& p, double w) { return p.omega0 < w; });
        res.points.insert(pos, refined);
    }
    res.optimum = res.points.front();
    for (const auto& p : res.points) {
        if (p.sigma_a < res.optimum.sigma_a) res.optimum = p;
    }
    return res;
}

enum class Regime { ai, omrr };

inline const char* to_string(Regime r) { return r == Regime::ai ? "AI" : "OMRR"; }

struct SpectrumRow {
    double f = 0.0;              ///< Hz
    double asd = 0.0;            ///< hybrid sensor, m/s^2/sqrt(Hz)
    Regime regime = Regime::ai;
    double peterson_asd = 0.0;   ///< ambient model
    double uncorrected_ai = 0.0; ///< atom interferometer without correction
    double qpn = 0.0;            ///< projection-noise floor
};

/// Hybrid-sensor amplitude spectral density on a frequency grid. Below the
/// cycle rate the OMRR is referenced to the atom interferometer and the level
/// is the hybrid sensitivity; above it the residual OMRR noise is shown.
inline std::vector<SpectrumRow> hybrid_spectrum(const HybridConfig& cfg, std::span<const double> f_grid) {
    cfg.validate();
    if (f_grid.empty()) throw DomainError("spectrum frequency grid is empty");
    for (std::size_t i = 0; i < f_grid.size(); ++i) {
        if (!(f_grid[i] > 0.0)) throw DomainError("spectrum frequencies must be positive");
        if (i > 0 && !(f_grid[i] > f_grid[i - 1])) throw DomainError("spectrum frequency grid must be increasing");
    }
    const double level = hybrid_sigma(cfg).sigma;
    const double uncorrected = uncorrected_sigma(cfg).sigma;
    const double qpn = ai::qpn_accel_asd(cfg.ai);
    const double f_c = cfg.ai.cycle_rate();

    std::vector<SpectrumRow> rows;
    rows.reserve(f_grid.size());
    for (double f : f_grid) {
        SpectrumRow r;
        r.f = f;
        if (f < f_c) {
            r.regime = Regime::ai;
            r.asd = level;
        } else {
            r.regime = Regime::omrr;
            r.asd = std::sqrt(hybrid_noise_psd(kTwoPi * f, cfg).value);
        }
        r.peterson_asd = std::sqrt(cfg.ambient.sample(f).value);
        r.uncorrected_ai = uncorrected;
        r.qpn = qpn;
        rows.push_back(r);
    }
    return rows;
}

} // namespace hybridsense::hybrid
