#include "hybridsense/fusion_sim.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numeric>
#include <vector>

using namespace hybridsense;
using namespace hybridsense::fusion;

namespace {

noise::NoisePsd peterson() { return noise::make_peterson_psd(noise::load_peterson_table(HYBRIDSENSE_TEST_PETERSON)); }

double rms(std::span<const double> x) {
    double s = 0.0;
    for (double v : x) s += v * v;
    return std::sqrt(s / static_cast<double>(x.size()));
}

/// Keeps only the rfft bins with f_lo <= f <= f_hi.
std::vector<double> band_pass(std::span<const double> x, double fs, double f_lo, double f_hi) {
    auto X = spectral::rfft(x);
    for (std::size_t k = 0; k < X.size(); ++k) {
        const double f = spectral::bin_frequency(k, x.size(), fs);
        if (f < f_lo || f > f_hi) X[k] = 0.0;
    }
    return spectral::irfft(X, x.size());
}

SimConfig sim_config(double sigma_x = 1e-16) {
    omrr::OmrrConfig o;
    o.sigma_x = sigma_x;
    SimConfig s(hybrid::HybridConfig({}, o, peterson()));
    s.n_cycles = 64;
    return s;
}

} // namespace

TEST(Synthesis, FlatSpectrumVarianceMatchesParseval) {
    const double A2 = 2.5e-9;
    const double fs = 1000.0;
    const auto psd = noise::NoisePsd::white(noise::PsdKind::acceleration, A2);
    const auto s = synthesize_noise(psd, fs, 200.0, 11);
    ASSERT_EQ(s.samples.size(), 200000u);
    const double var = std::pow(sample_std(s.samples), 2);
    EXPECT_NEAR(var / (A2 * fs / 2.0), 1.0, 0.05);
    EXPECT_FALSE(s.band_substituted);
}

TEST(Synthesis, ZeroSpectrumAndDeterminism) {
    const auto zero = noise::NoisePsd::white(noise::PsdKind::acceleration, 0.0);
    const auto z = synthesize_noise(zero, 100.0, 10.0, 3);
    for (double v : z.samples) EXPECT_EQ(v, 0.0);

    const auto psd = peterson();
    const auto a = synthesize_noise(psd, 512.0, 30.0, 42);
    const auto b = synthesize_noise(psd, 512.0, 30.0, 42);
    const auto c = synthesize_noise(psd, 512.0, 30.0, 43);
    EXPECT_EQ(a.samples, b.samples);
    EXPECT_NE(a.samples, c.samples);
    EXPECT_TRUE(a.band_substituted);
    EXPECT_THROW(synthesize_noise(noise::NoisePsd::white(noise::PsdKind::phase, 1.0), 10.0, 10.0, 1), DomainError);
}

TEST(Synthesis, WelchMatchesPetersonTarget) {
    const double fs = 256.0;
    const double duration = 400.0;
    const auto psd = peterson();
    const auto s = synthesize_noise(psd, fs, duration, 5);
    const auto est = spectral::welch_psd(s.samples, fs, static_cast<std::size_t>(fs * 50.0));
    for (const auto& band : spectral::log_band_average(est, 4.0 / 50.0, fs / 4.0, 8.0, 8)) {
        double target = 0.0;
        std::size_t count = 0;
        for (std::size_t k = 0; k < est.f.size(); ++k) {
            if (est.f[k] >= band.f_lo && est.f[k] < band.f_hi) {
                target += psd(est.f[k]);
                ++count;
            }
        }
        target /= static_cast<double>(count);
        EXPECT_LT(std::abs(10.0 * std::log10(band.mean / target)), 3.0) << "band at " << band.f_center << " Hz";
    }
}

TEST(Oscillator, DcGainAndZeroInput) {
    omrr::OmrrConfig o;
    const double fs = 8192.0;
    std::vector<double> a(8192, 2e-3);
    const auto z = oscillator_response(a, o, fs);
    for (std::size_t i = 0; i < z.size(); i += 997) EXPECT_NEAR(z[i] / (-2e-3 / (o.omega0 * o.omega0)), 1.0, 1e-9);
    std::vector<double> zero(4096, 0.0);
    for (double v : oscillator_response(zero, o, fs)) EXPECT_EQ(v, 0.0);
}

TEST(Oscillator, SteadyStateSinusoidGain) {
    // Reduced Q so the resonance is a few bins wide; the record holds an integer
    // number of periods, which makes the periodic response the steady state.
    omrr::OmrrConfig o;
    o.Q = 50.0;
    o.omega0 = kTwoPi * 256.0;
    const double fs = 8192.0;
    const std::size_t n = 8192;
    for (double f : {10.0, 128.0, 256.0}) {
        std::vector<double> a(n);
        for (std::size_t i = 0; i < n; ++i) a[i] = std::sin(kTwoPi * f * static_cast<double>(i) / fs);
        const auto z = oscillator_response(a, o, fs);
        const double gain = rms(z) / rms(a);
        EXPECT_NEAR(gain / std::abs(omrr::disp_to_accel_tf(kTwoPi * f, o)), 1.0, 0.01) << f;
        if (f == 256.0) EXPECT_NEAR(gain / (o.Q / (o.omega0 * o.omega0)), 1.0, 0.01);
    }
}

TEST(Oscillator, UndersampledResonanceRejected) {
    omrr::OmrrConfig o;
    std::vector<double> a(1000, 0.0);
    EXPECT_THROW(oscillator_response(a, o, 2000.0), DomainError);
    EXPECT_THROW(estimate_accel(a, o, 2000.0), DomainError);
}

TEST(Readout, WhiteNoiseLevelAndIdentity) {
    const double fs = 8192.0;
    std::vector<double> z(1 << 20, 0.0);
    const auto same = readout(z, 0.0, fs, 1);
    EXPECT_EQ(same, z);
    const auto noisy = readout(z, 1e-15, fs, 9);
    EXPECT_NEAR(sample_std(noisy) / (1e-15 * std::sqrt(fs / 2.0)), 1.0, 0.03);
    EXPECT_EQ(noisy, readout(z, 1e-15, fs, 9));
    EXPECT_THROW(readout(z, -1.0, fs, 1), DomainError);
}

TEST(Estimator, NoiselessRoundTripInBand) {
    omrr::OmrrConfig o;
    const double fs = 8192.0;
    const auto a = synthesize_noise(peterson(), fs, 30.0, 21).samples;
    const auto z = oscillator_response(a, o, fs);
    const auto est = estimate_accel(z, o, fs);
    const double lo = 1.0 / 1.5;
    const double hi = 0.8 * o.f0();
    const auto ref = band_pass(a, fs, lo, hi);
    const auto got = band_pass(est, fs, lo, hi);
    std::vector<double> err(ref.size());
    for (std::size_t i = 0; i < ref.size(); ++i) err[i] = got[i] - ref[i];
    EXPECT_LT(rms(err) / rms(ref), 0.01);

    std::vector<double> zero(4096, 0.0);
    for (double v : estimate_accel(zero, o, fs)) EXPECT_EQ(v, 0.0);
}

TEST(Estimator, PureReadoutNoiseMatchesReadoutLimitedAsd) {
    omrr::OmrrConfig o;
    o.sigma_x = 1e-16;
    const double fs = 8192.0;
    const std::size_t n = 8192 * 64;
    const auto ambient = peterson();
    const auto z_meas = readout(std::vector<double>(n, 0.0), o.sigma_x, fs, 77);
    EstimatorOptions opts;
    opts.ambient = &ambient;
    const auto est = estimate_accel(z_meas, o, fs, opts);
    const auto s = spectral::welch_psd(est, fs, 8192);
    for (const auto& band : spectral::log_band_average(s, 1.0, 0.8 * o.f0(), 4.0, 4)) {
        const double expected = omrr::readout_limited_accel_asd(kTwoPi * band.f_center, o);
        EXPECT_LT(std::abs(10.0 * std::log10(std::sqrt(band.mean) / expected)), 3.0) << band.f_center;
    }
}

TEST(Estimator, GainCapAndBandwidthLimit) {
    omrr::OmrrConfig o;
    o.sigma_x = 1e-16;
    const double fs = 8192.0;
    const std::size_t n = 8192;
    // A tone above the resonance is removed by the bandwidth limit.
    std::vector<double> z(n);
    for (std::size_t i = 0; i < n; ++i) z[i] = 1e-12 * std::sin(kTwoPi * 2000.0 * static_cast<double>(i) / fs);
    EstimatorOptions open;
    open.limit_to_bandwidth = false;
    const double unlimited = rms(estimate_accel(z, o, fs, open));
    EXPECT_GT(unlimited, 0.0);
    EXPECT_LT(rms(estimate_accel(z, o, fs)), 1e-9 * unlimited);

    // With a very quiet ambient model the inversion gain is capped.
    const auto quiet = noise::NoisePsd::white(noise::PsdKind::acceleration, 1e-40);
    EstimatorOptions capped;
    capped.ambient = &quiet;
    std::vector<double> low(n);
    for (std::size_t i = 0; i < n; ++i) low[i] = 1e-12 * std::sin(kTwoPi * 100.0 * static_cast<double>(i) / fs);
    const double full = rms(estimate_accel(low, o, fs));
    const double cut = rms(estimate_accel(low, o, fs, capped));
    EXPECT_LT(cut, 1e-3 * full);
}

TEST(RunCycles, NoNoiseGivesZeroResiduals) {
    auto cfg = sim_config(0.0);
    cfg.hybrid.ambient = noise::NoisePsd::white(noise::PsdKind::acceleration, 0.0);
    cfg.thermal_noise = false;
    cfg.projection_noise = false;
    cfg.n_cycles = 8;
    const auto run = run_cycles(cfg);
    ASSERT_EQ(run.cycles.size(), 8u);
    for (const auto& r : run.cycles) {
        EXPECT_EQ(r.phi_true, 0.0);
        EXPECT_EQ(r.phi_residual, 0.0);
        EXPECT_NEAR(r.accel_corrected, 0.0, 1e-15);
    }
}

TEST(RunCycles, PerfectSensorRemovesVibrationPhase) {
    auto cfg = sim_config(0.0);
    cfg.thermal_noise = false;
    cfg.projection_noise = false;
    cfg.n_cycles = 16;
    const auto run = run_cycles(cfg);
    double max_true = 0.0;
    for (const auto& r : run.cycles) {
        EXPECT_LT(std::abs(r.phi_residual), 1e-9) << r.index;
        EXPECT_EQ(r.phi_residual, r.phi_true - r.phi_est);
        max_true = std::max(max_true, std::abs(r.phi_true));
    }
    EXPECT_GT(max_true, 1e-3);
}

TEST(RunCycles, CorrectionReducesScatterAndProjectionNoiseRemains) {
    auto on = sim_config();
    auto off = on;
    off.correction = false;
    const auto a = run_cycles(on);
    const auto b = run_cycles(off);
    EXPECT_LT(a.stats.corrected_std, 0.1 * b.stats.corrected_std);
    EXPECT_EQ(a.stats.uncorrected_std, b.stats.uncorrected_std);
    // Uncorrected per-shot noise far exceeds projection noise.
    const double qpn_shot = ai::qpn_phase(on.hybrid.ai) / on.hybrid.ai.scale_factor();
    EXPECT_GT(b.stats.uncorrected_std, 100.0 * qpn_shot);
    for (const auto& r : a.cycles) {
        EXPECT_EQ(r.phi_residual, r.phi_true - r.phi_est);
        EXPECT_GE(r.population, 0.0);
        EXPECT_LE(r.population, 1.0);
    }
}

TEST(RunCycles, DebiasTracksConstantOmrrBias) {
    auto cfg = sim_config();
    cfg.n_cycles = 96;
    cfg.omrr_bias = 2e-6;
    const auto plain = run_cycles(cfg);
    cfg.debias_cycles = 8;
    const auto debiased = run_cycles(cfg);
    const auto tail_mean = [](const SimRun& r) {
        double s = 0.0;
        for (std::size_t i = r.cycles.size() / 2; i < r.cycles.size(); ++i) s += r.cycles[i].accel_corrected;
        return s / static_cast<double>(r.cycles.size() - r.cycles.size() / 2);
    };
    EXPECT_NEAR(tail_mean(plain), -2e-6, 2e-7);
    EXPECT_LT(std::abs(tail_mean(debiased)), 3e-7);
    EXPECT_NEAR(debiased.cycles.back().bias_estimate, 2e-6, 5e-7);
    for (const auto& r : plain.cycles) EXPECT_EQ(r.bias_estimate, 0.0);
}

TEST(RunCycles, AllanDeviationOfProjectionNoiseFallsAsRootTau) {
    auto cfg = sim_config(0.0);
    cfg.hybrid.ambient = noise::NoisePsd::white(noise::PsdKind::acceleration, 0.0);
    cfg.thermal_noise = false;
    cfg.hybrid.ai.N = 1e5;
    cfg.n_cycles = 1024;
    cfg.fs = 2048.0 + 1024.0;
    cfg.hybrid.omrr.omega0 = kTwoPi * 1000.0;
    const auto run = run_cycles(cfg);
    ASSERT_GE(run.adev.size(), 5u);
    EXPECT_DOUBLE_EQ(run.adev[0].tau, cfg.hybrid.ai.T_c);
    for (std::size_t i = 1; i < run.adev.size(); ++i) EXPECT_DOUBLE_EQ(run.adev[i].tau, 2.0 * run.adev[i - 1].tau);
    // Octaves 1 -> 8 (three octaves): slope -1/2 within 15 %.
    for (std::size_t i = 1; i <= 3; ++i) {
        const double expected = run.adev[0].deviation / std::sqrt(std::pow(2.0, static_cast<double>(i)));
        EXPECT_NEAR(run.adev[i].deviation / expected, 1.0, 0.15) << i;
    }
    const double qpn_shot = ai::qpn_phase(cfg.hybrid.ai) / cfg.hybrid.ai.scale_factor();
    EXPECT_NEAR(run.stats.corrected_std / qpn_shot, 1.0, 0.1);
}

TEST(RunCycles, SerialAndParallelAreBitIdentical) {
    auto cfg = sim_config();
    cfg.n_cycles = 24;
    const auto a = run_cycles(cfg);
    cfg.workers = 4;
    const auto b = run_cycles(cfg);
    EXPECT_EQ(a.a_true, b.a_true);
    EXPECT_EQ(a.z_true, b.z_true);
    EXPECT_EQ(a.z_meas, b.z_meas);
    ASSERT_EQ(a.cycles.size(), b.cycles.size());
    for (std::size_t i = 0; i < a.cycles.size(); ++i) {
        EXPECT_EQ(a.cycles[i].phi_true, b.cycles[i].phi_true);
        EXPECT_EQ(a.cycles[i].phi_est, b.cycles[i].phi_est);
        EXPECT_EQ(a.cycles[i].population, b.cycles[i].population);
        EXPECT_EQ(a.cycles[i].accel_corrected, b.cycles[i].accel_corrected);
    }
    cfg.seed = 2;
    EXPECT_NE(run_cycles(cfg).cycles[0].phi_true, a.cycles[0].phi_true);
}

TEST(SimConfig, Validation) {
    auto cfg = sim_config();
    cfg.n_cycles = 4;
    EXPECT_THROW(cfg.validate(), ConfigError);
    cfg = sim_config();
    cfg.fs = 8192.3;
    EXPECT_THROW(cfg.validate(), ConfigError);
    cfg = sim_config();
    cfg.fs = 400.0;
    EXPECT_THROW(cfg.validate(), ConfigError);
    cfg = sim_config();
    cfg.fs = 2048.0;
    EXPECT_THROW(cfg.validate(), DomainError);
    EXPECT_NEAR(sim_config().dead_time_fraction(), 1.0 - 0.1 / 1.5, 1e-15);
}

TEST(Branch, NearestPhaseBranch) {
    ai::InterferometerConfig c;
    const double phi = 2.0;
    const double p = ai::population(phi, c);
    EXPECT_NEAR(detail::resolve_branch(p, 2.1, c), 2.0, 1e-9);
    EXPECT_NEAR(detail::resolve_branch(p, -1.9, c), -2.0, 1e-9);
    EXPECT_NEAR(detail::resolve_branch(p, 2.0 + kTwoPi + 0.3, c), 2.0 + kTwoPi, 1e-9);
}
