#pragma once

// Optomechanical retro-reflector modelled as a damped harmonic oscillator.

#include "hybridsense/constants.hpp"
#include "hybridsense/error.hpp"

#include <cmath>
#include <complex>

namespace hybridsense::omrr {

enum class LossModel {
    structural, ///< loss angle phi = 1/Q, frequency independent
    velocity,   ///< viscous damping, phi = omega / (omega0 Q)
};

struct OmrrConfig {
    double omega0 = kTwoPi * 1015.0; ///< rad/s
    double Q = 5e5;
    double m = 2e-3;        ///< kg
    double T_TM = 293.0;    ///< K
    double sigma_x = 1e-16; ///< displacement readout ASD, m/sqrt(Hz)
    LossModel loss_model = LossModel::structural;

    double f0() const { return omega0 / kTwoPi; }
    double stiffness() const { return m * omega0 * omega0; }

    void validate() const {
        if (!(omega0 > 0.0)) throw ConfigError("omrr: omega0 must be > 0");
        if (!(Q > 0.5)) throw ConfigError("omrr: Q must be > 0.5");
        if (!(m > 0.0)) throw ConfigError("omrr: m must be > 0");
        if (!(T_TM > 0.0)) throw ConfigError("omrr: T_TM must be > 0");
        if (!(sigma_x >= 0.0)) throw ConfigError("omrr: sigma_x must be >= 0");
    }
};

/// z(omega)/a(omega) = -1 / (omega0^2 - omega^2 + i omega0 omega / Q), in s^2.
inline std::complex<double> disp_to_accel_tf(double omega, const OmrrConfig& cfg) {
    if (!(omega >= 0.0)) throw DomainError("omega must be >= 0");
    const double w0 = cfg.omega0;
    return -1.0 / std::complex<double>(w0 * w0 - omega * omega, w0 * omega / cfg.Q);
}

/// |a/z|^2 = (omega0^2 - omega^2)^2 + (omega0 omega / Q)^2.
inline double accel_per_disp_sq(double omega, const OmrrConfig& cfg) {
    const double w0 = cfg.omega0;
    const double re = w0 * w0 - omega * omega;
    const double im = w0 * omega / cfg.Q;
    return re * re + im * im;
}

/// White thermal acceleration floor sqrt(4 kB T omega0 / (m Q)), m/s^2/sqrt(Hz).
inline double thermal_accel_floor(const OmrrConfig& cfg) {
    cfg.validate();
    return std::sqrt(4.0 * kBoltzmann * cfg.T_TM * cfg.omega0 / (cfg.m * cfg.Q));
}

inline double loss_angle(double omega, const OmrrConfig& cfg) {
    return cfg.loss_model == LossModel::structural ? 1.0 / cfg.Q : omega / (cfg.omega0 * cfg.Q);
}

/// Thermal displacement PSD (m^2/Hz),
///   4 kB T k phi / (omega ((k - m omega^2)^2 + k^2 phi^2)),  k = m omega0^2.
inline double thermal_displacement_psd(double omega, const OmrrConfig& cfg) {
    cfg.validate();
    if (!(omega > 0.0)) throw DomainError("thermal displacement PSD needs omega > 0");
    const double k = cfg.stiffness();
    const double phi = loss_angle(omega, cfg);
    const double spring = k - cfg.m * omega * omega;
    return 4.0 * kBoltzmann * cfg.T_TM * k * phi / (omega * (spring * spring + k * k * phi * phi));
}

/// Acceleration-referred thermal PSD from the loss model, thermal_displacement_psd |a/z|^2.
inline double thermal_accel_psd_loss_model(double omega, const OmrrConfig& cfg) {
    return thermal_displacement_psd(omega, cfg) * accel_per_disp_sq(omega, cfg);
}

/// First-order (white) thermal acceleration PSD used for the sensor self-noise.
inline double thermal_accel_psd(double /*omega*/, const OmrrConfig& cfg) {
    const double f = thermal_accel_floor(cfg);
    return f * f;
}

/// Readout noise referred to acceleration, sigma_x / |z/a|.
inline double readout_limited_accel_asd(double omega, const OmrrConfig& cfg) {
    cfg.validate();
    if (!(omega >= 0.0)) throw DomainError("omega must be >= 0");
    return cfg.sigma_x * std::sqrt(accel_per_disp_sq(omega, cfg));
}

/// Sensor self-noise: thermal floor and readout noise added in quadrature.
inline double self_noise_accel_psd(double omega, const OmrrConfig& cfg) {
    const double r = readout_limited_accel_asd(omega, cfg);
    return thermal_accel_psd(omega, cfg) + r * r;
}

/// Displacement sensitivity needed to resolve the thermal floor at DC.
inline double required_sigma_x(const OmrrConfig& cfg) {
    return thermal_accel_floor(cfg) / (cfg.omega0 * cfg.omega0);
}

} // namespace hybridsense::omrr
