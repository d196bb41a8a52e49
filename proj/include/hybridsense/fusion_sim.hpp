#pragma once

// Shot-by-shot time-domain simulation of the hybrid measurement.
//
// Ambient acceleration is synthesised continuously over the whole run. The
// OMRR test mass responds to it (plus its own thermal force noise) and is
// read out with white displacement noise. The acceleration reconstructed
// from that readout is weighted with the interferometer sensitivity function
// to predict the vibration phase of each cycle, which is subtracted from the
// phase inferred from the sampled atom populations.
//
// All records are periodic over the run length: noise is synthesised by an
// inverse FFT and the oscillator is applied in the frequency domain, so the
// response is the periodic steady state and carries no start-up transient.

#include "hybridsense/allan.hpp"
#include "hybridsense/atom_interferometer.hpp"
#include "hybridsense/hybrid_optimizer.hpp"
#include "hybridsense/noise_models.hpp"
#include "hybridsense/omrr_model.hpp"
#include "hybridsense/parallel.hpp"
#include "hybridsense/rng.hpp"
#include "hybridsense/series.hpp"
#include "hybridsense/spectral.hpp"

#include <cmath>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <optional>
#include <random>
#include <span>
#include <vector>

namespace hybridsense::fusion {

struct NoiseSeries {
    std::vector<double> samples;
    bool band_substituted = false; ///< some bins fell outside the PSD band and used its band policy
};

/// Stationary Gaussian series with one-sided PSD `psd` (Hz) by random-phase
/// spectral synthesis. The DC bin is left empty.
inline NoiseSeries synthesize_noise(const noise::NoisePsd& psd, double fs, double duration, std::uint64_t seed) {
    if (psd.kind() != noise::PsdKind::acceleration) throw DomainError("synthesize_noise expects an acceleration PSD");
    if (!(fs > 0.0) || !(duration > 0.0)) throw DomainError("synthesize_noise needs fs > 0 and duration > 0");
    const auto n = static_cast<std::size_t>(std::llround(duration * fs));
    if (n < 2) throw DomainError("synthesize_noise: record shorter than two samples");

    std::mt19937_64 engine(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::vector<std::complex<double>> X(n / 2 + 1, {0.0, 0.0});
    NoiseSeries out;
    const double norm = fs * static_cast<double>(n) / 2.0;
    for (std::size_t k = 1; k < X.size(); ++k) {
        const double re = gauss(engine);
        const double im = gauss(engine);
        const auto s = psd.sample(spectral::bin_frequency(k, n, fs));
        out.band_substituted = out.band_substituted || s.substituted;
        const double amp = std::sqrt(s.value * norm);
        if (n % 2 == 0 && k == X.size() - 1) {
            X[k] = {amp * re, 0.0};
        } else {
            X[k] = {amp * re / std::sqrt(2.0), amp * im / std::sqrt(2.0)};
        }
    }
    out.samples = spectral::irfft(X, n);
    return out;
}

inline void require_resolved_resonance(const omrr::OmrrConfig& cfg, double fs) {
    if (!(fs > 2.5 * cfg.f0())) {
        throw DomainError("sample rate " + format_double(fs) + " Hz does not resolve the " + format_double(cfg.f0()) +
                          " Hz resonance (need fs > 2.5 f0)");
    }
}

/// Test-mass displacement z for input acceleration a (periodic steady state).
inline std::vector<double> oscillator_response(std::span<const double> a, const omrr::OmrrConfig& cfg, double fs) {
    cfg.validate();
    require_resolved_resonance(cfg, fs);
    auto X = spectral::rfft(a);
    for (std::size_t k = 0; k < X.size(); ++k) {
        X[k] *= omrr::disp_to_accel_tf(kTwoPi * spectral::bin_frequency(k, a.size(), fs), cfg);
    }
    return spectral::irfft(X, a.size());
}

/// Adds white displacement noise of ASD sigma_x (per-sample std sigma_x sqrt(fs/2)).
inline std::vector<double> readout(std::span<const double> z, double sigma_x, double fs, std::uint64_t seed) {
    if (!(sigma_x >= 0.0)) throw DomainError("sigma_x must be >= 0");
    std::vector<double> out(z.begin(), z.end());
    if (sigma_x == 0.0) return out;
    std::mt19937_64 engine(seed);
    std::normal_distribution<double> gauss(0.0, sigma_x * std::sqrt(fs / 2.0));
    for (auto& v : out) v += gauss(engine);
    return out;
}

struct EstimatorOptions {
    /// Ambient model used to cap the inversion gain; no cap when null.
    const noise::NoisePsd* ambient = nullptr;
    /// Gain is capped where amplified readout noise exceeds the ambient ASD by this much.
    double cap_db = 40.0;
    /// Zero the reconstruction above the resonance, where the sensor has lost
    /// its inertial sensitivity.
    bool limit_to_bandwidth = true;
};

/// Acceleration reconstructed from measured displacement by inverting z/a.
inline std::vector<double> estimate_accel(std::span<const double> z_meas, const omrr::OmrrConfig& cfg, double fs,
                                          const EstimatorOptions& opts = {}) {
    cfg.validate();
    require_resolved_resonance(cfg, fs);
    auto X = spectral::rfft(z_meas);
    const double cap = std::pow(10.0, opts.cap_db / 20.0);
    for (std::size_t k = 0; k < X.size(); ++k) {
        const double f = spectral::bin_frequency(k, z_meas.size(), fs);
        const double w = kTwoPi * f;
        if (opts.limit_to_bandwidth && w > cfg.omega0) {
            X[k] = 0.0;
            continue;
        }
        std::complex<double> gain = 1.0 / omrr::disp_to_accel_tf(w, cfg);
        if (opts.ambient != nullptr && cfg.sigma_x > 0.0 && k > 0) {
            const double amb_asd = std::sqrt(opts.ambient->sample(f).value);
            const double max_gain = cap * amb_asd / cfg.sigma_x;
            if (std::abs(gain) > max_gain) gain *= max_gain / std::abs(gain);
        }
        X[k] *= gain;
    }
    return spectral::irfft(X, z_meas.size());
}

struct SimConfig {
    explicit SimConfig(hybrid::HybridConfig h) : hybrid(std::move(h)) {}

    hybrid::HybridConfig hybrid;
    double fs = 8192.0;
    std::size_t n_cycles = 256;
    std::uint64_t seed = 1;
    bool correction = true;
    bool thermal_noise = true;
    bool projection_noise = true;  ///< binomial population sampling; off gives the N -> infinity limit
    double omrr_bias = 0.0;        ///< constant OMRR acceleration bias (m/s^2)
    std::size_t debias_cycles = 0; ///< EMA time constant in cycles for the AI-based OMRR debias; 0 = off
    unsigned workers = 1;

    /// Dead time between interferometer windows.
    double dead_time_fraction() const { return 1.0 - hybrid.ai.span() / hybrid.ai.T_c; }
    std::size_t samples_per_cycle() const { return static_cast<std::size_t>(std::llround(fs * hybrid.ai.T_c)); }

    void validate() const {
        hybrid.validate();
        if (!(fs >= 40.0 / hybrid.ai.T)) throw ConfigError("simulate: fs must be >= 40/T");
        if (n_cycles < 8) throw ConfigError("simulate: n_cycles must be >= 8");
        const double per_cycle = fs * hybrid.ai.T_c;
        if (std::abs(per_cycle - std::round(per_cycle)) > 1e-9 * std::max(1.0, per_cycle)) {
            throw ConfigError("simulate: fs * T_c must be an integer");
        }
        if (!(omrr_bias == omrr_bias)) throw ConfigError("simulate: omrr_bias is NaN");
        require_resolved_resonance(hybrid.omrr, fs);
    }
};

struct CycleRecord {
    std::size_t index = 0;
    double t0 = 0.0;             ///< start of the interferometer window (s)
    double phi_true = 0.0;       ///< vibration phase from the true mirror motion (rad)
    double phi_est = 0.0;        ///< vibration phase predicted from the OMRR (rad)
    double phi_residual = 0.0;   ///< phi_true - phi_est
    double phi_measured = 0.0;   ///< vibration phase inferred from the population, branch nearest the prediction
    double population = 0.0;     ///< measured upper-state fraction
    double accel_corrected = 0.0; ///< (phi_measured - phi_est) / (k_eff T^2), m/s^2
    double bias_estimate = 0.0;  ///< running OMRR bias estimate after this cycle (m/s^2)
};

struct SimStats {
    double uncorrected_std = 0.0; ///< std of phi_true / (k_eff T^2)
    double residual_std = 0.0;    ///< std of phi_residual / (k_eff T^2)
    double corrected_std = 0.0;   ///< std of accel_corrected
};

struct SimRun {
    double fs = 0.0;
    std::vector<double> a_true; ///< ambient acceleration at the mirror (m/s^2)
    std::vector<double> z_true; ///< test-mass displacement (m)
    std::vector<double> z_meas; ///< measured displacement (m)
    std::vector<CycleRecord> cycles;
    std::vector<AllanPoint> adev;
    SimStats stats;
    bool ambient_band_substituted = false;
};

inline double sample_std(std::span<const double> x) {
    if (x.size() < 2) return 0.0;
    const double mean = std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
    double acc = 0.0;
    for (double v : x) acc += (v - mean) * (v - mean);
    return std::sqrt(acc / static_cast<double>(x.size() - 1));
}

namespace detail {

/// Mirror velocity by integrating acceleration twice and differencing the
/// resulting position with central differences.
inline std::vector<double> velocity_from_accel(std::span<const double> a, double fs) {
    const double dt = 1.0 / fs;
    const auto v = cumulative_trapezoid(a, dt);
    const auto x = cumulative_trapezoid(v, dt);
    return central_difference(x, dt);
}

/// Phase branch of the measured population closest to `predicted`.
inline double resolve_branch(double population, double predicted, const ai::InterferometerConfig& cfg) {
    const double c = std::clamp(2.0 * (population - cfg.B) / cfg.C0 - 1.0, -1.0, 1.0);
    const double base = std::acos(c);
    const double plus = base + kTwoPi * std::round((predicted - base) / kTwoPi);
    const double minus = -base + kTwoPi * std::round((predicted + base) / kTwoPi);
    return std::abs(plus - predicted) <= std::abs(minus - predicted) ? plus : minus;
}

} // namespace detail

/// Runs the full shot-by-shot simulation.
///
/// The interferometer is locked to mid-fringe: the laser phase cancels
/// k_eff g0 T^2 and adds pi/2, so the total phase is pi/2 + Delta Phi_IN.
inline SimRun run_cycles(const SimConfig& cfg) {
    cfg.validate();
    const auto& ai_cfg = cfg.hybrid.ai;
    const auto& om = cfg.hybrid.omrr;
    const double fs = cfg.fs;
    const std::size_t per_cycle = cfg.samples_per_cycle();
    const double duration = static_cast<double>(cfg.n_cycles) * ai_cfg.T_c;

    SimRun run;
    run.fs = fs;

    // Independent noise streams, generated concurrently when workers > 1.
    NoiseSeries ambient;
    std::vector<double> thermal;
    parallel_for(2, cfg.workers, [&](std::size_t task) {
        if (task == 0) {
            ambient = synthesize_noise(cfg.hybrid.ambient, fs, duration,
                                       rng::stream_seed(cfg.seed, rng::Stream::ambient));
        } else {
            const auto n = static_cast<std::size_t>(std::llround(duration * fs));
            thermal.assign(n, 0.0);
            if (cfg.thermal_noise) {
                auto eng = rng::make_engine(cfg.seed, rng::Stream::thermal);
                std::normal_distribution<double> gauss(0.0, omrr::thermal_accel_floor(om) * std::sqrt(fs / 2.0));
                for (auto& v : thermal) v = gauss(eng);
            }
        }
    });
    run.a_true = std::move(ambient.samples);
    run.ambient_band_substituted = ambient.band_substituted;
    const std::size_t n = run.a_true.size();

    std::vector<double> forcing(n);
    for (std::size_t i = 0; i < n; ++i) forcing[i] = run.a_true[i] + thermal[i];
    thermal.clear();
    thermal.shrink_to_fit();
    run.z_true = oscillator_response(forcing, om, fs);
    forcing.clear();
    forcing.shrink_to_fit();
    run.z_meas = readout(run.z_true, om.sigma_x, fs, rng::stream_seed(cfg.seed, rng::Stream::readout));

    EstimatorOptions est_opts;
    est_opts.ambient = &cfg.hybrid.ambient;
    // A noiseless readout can be inverted at every frequency.
    est_opts.limit_to_bandwidth = om.sigma_x > 0.0;
    auto a_est = estimate_accel(run.z_meas, om, fs, est_opts);
    for (auto& v : a_est) v += cfg.omrr_bias;

    const auto v_true = detail::velocity_from_accel(run.a_true, fs);
    const auto v_est = detail::velocity_from_accel(a_est, fs);
    a_est.clear();
    a_est.shrink_to_fit();
    const SampledView true_view{v_true, 0.0, fs};
    const SampledView est_view{v_est, 0.0, fs};

    // Per-cycle phase integrals are independent of each other.
    run.cycles.resize(cfg.n_cycles);
    parallel_for(cfg.n_cycles, cfg.workers, [&](std::size_t c) {
        auto& rec = run.cycles[c];
        rec.index = c;
        rec.t0 = static_cast<double>(c * per_cycle) / fs;
        rec.phi_true = ai::phase_from_mirror_motion(true_view, rec.t0, ai_cfg);
        rec.phi_est = cfg.correction ? ai::phase_from_mirror_motion(est_view, rec.t0, ai_cfg) : 0.0;
    });

    // Detection and debias run in cycle order.
    const double scale = ai_cfg.scale_factor();
    const double alpha = cfg.debias_cycles > 0 ? 1.0 / static_cast<double>(cfg.debias_cycles) : 0.0;
    double bias = 0.0;
    const auto atoms = static_cast<long long>(std::llround(ai_cfg.N));
    for (auto& rec : run.cycles) {
        const double phi_omrr = rec.phi_est;
        rec.phi_est = phi_omrr - scale * bias;
        rec.phi_residual = rec.phi_true - rec.phi_est;

        const double p = ai::population(kPi / 2.0 + rec.phi_true, ai_cfg);
        if (cfg.projection_noise) {
            auto eng = rng::make_engine(cfg.seed, rng::Stream::population, rec.index);
            std::binomial_distribution<long long> draw(atoms, std::clamp(p, 0.0, 1.0));
            rec.population = static_cast<double>(draw(eng)) / static_cast<double>(atoms);
        } else {
            rec.population = p;
        }
        rec.phi_measured = detail::resolve_branch(rec.population, kPi / 2.0 + rec.phi_est, ai_cfg) - kPi / 2.0;
        rec.accel_corrected = (rec.phi_measured - rec.phi_est) / scale;
        if (alpha > 0.0) {
            const double discrepancy = (phi_omrr - rec.phi_measured) / scale;
            bias += alpha * (discrepancy - bias);
        }
        rec.bias_estimate = bias;

        if (!std::isfinite(rec.phi_true) || !std::isfinite(rec.phi_est) || !std::isfinite(rec.phi_measured) ||
            !std::isfinite(rec.population)) {
            throw SimulationError("non-finite phase", rec.index);
        }
    }

    std::vector<double> uncorrected(run.cycles.size()), residual(run.cycles.size()), corrected(run.cycles.size());
    for (std::size_t i = 0; i < run.cycles.size(); ++i) {
        uncorrected[i] = run.cycles[i].phi_true / scale;
        residual[i] = run.cycles[i].phi_residual / scale;
        corrected[i] = run.cycles[i].accel_corrected;
    }
    run.stats = {sample_std(uncorrected), sample_std(residual), sample_std(corrected)};
    run.adev = overlapping_adev(corrected, ai_cfg.T_c);
    return run;
}

} // namespace hybridsense::fusion
