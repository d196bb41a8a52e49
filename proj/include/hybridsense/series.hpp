#pragma once

#include "hybridsense/error.hpp"

#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

namespace hybridsense {

/// Read-only view of a uniformly sampled record.
struct SampledView {
    std::span<const double> values;
    double t_start = 0.0;     ///< time of values[0] (s)
    double sample_rate = 1.0; ///< Hz

    double dt() const { return 1.0 / sample_rate; }
    double t_end() const {
        return values.empty() ? t_start : t_start + static_cast<double>(values.size() - 1) / sample_rate;
    }
    double time_of(std::size_t i) const { return t_start + static_cast<double>(i) / sample_rate; }
};

/// Checks that timestamps are uniformly spaced (relative jitter <= 1e-9) and
/// returns the sample rate.
inline double uniform_rate(std::span<const double> times) {
    if (times.size() < 2) throw DomainError("need at least two timestamps");
    const double span = times.back() - times.front();
    const double step = span / static_cast<double>(times.size() - 1);
    if (!(step > 0.0)) throw DomainError("timestamps must increase");
    for (std::size_t i = 1; i < times.size(); ++i) {
        if (std::abs((times[i] - times[i - 1]) - step) > 1e-9 * step + 1e-15 * std::abs(times[i])) {
            throw DomainError("non-uniform sampling at index " + std::to_string(i));
        }
    }
    return 1.0 / step;
}

/// Running trapezoidal integral, out[0] = 0.
inline std::vector<double> cumulative_trapezoid(std::span<const double> x, double dt) {
    std::vector<double> out(x.size(), 0.0);
    for (std::size_t i = 1; i < x.size(); ++i) out[i] = out[i - 1] + 0.5 * dt * (x[i] + x[i - 1]);
    return out;
}

/// Central differences inside, one-sided at the two ends.
inline std::vector<double> central_difference(std::span<const double> x, double dt) {
    const std::size_t n = x.size();
    std::vector<double> out(n, 0.0);
    if (n < 2) return out;
    out[0] = (x[1] - x[0]) / dt;
    out[n - 1] = (x[n - 1] - x[n - 2]) / dt;
    for (std::size_t i = 1; i + 1 < n; ++i) out[i] = (x[i + 1] - x[i - 1]) / (2.0 * dt);
    return out;
}

} // namespace hybridsense
