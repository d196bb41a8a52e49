#pragma once

#include "hybridsense/error.hpp"

#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

namespace hybridsense {

struct AllanPoint {
    double tau = 0.0;       ///< s
    double deviation = 0.0; ///< same unit as the input samples
    std::size_t terms = 0;  ///< number of overlapping differences averaged
};

/// Overlapping Allan deviation of a series of per-interval averages taken
/// every `interval` seconds, at octave-spaced averaging factors m = 1, 2, 4, ...
/// while at least `min_terms` differences are available.
inline std::vector<AllanPoint> overlapping_adev(std::span<const double> y, double interval, std::size_t min_terms = 4) {
    if (!(interval > 0.0)) throw DomainError("Allan deviation: interval must be > 0");
    const std::size_t n = y.size();
    std::vector<double> cumsum(n + 1, 0.0);
    for (std::size_t i = 0; i < n; ++i) cumsum[i + 1] = cumsum[i] + y[i];

    std::vector<AllanPoint> out;
    for (std::size_t m = 1; n >= 2 * m && n + 1 - 2 * m >= min_terms; m *= 2) {
        const std::size_t terms = n + 1 - 2 * m;
        double acc = 0.0;
        const double md = static_cast<double>(m);
        for (std::size_t j = 0; j < terms; ++j) {
            const double a = (cumsum[j + m] - cumsum[j]) / md;
            const double b = (cumsum[j + 2 * m] - cumsum[j + m]) / md;
            acc += (b - a) * (b - a);
        }
        out.push_back({md * interval, std::sqrt(acc / (2.0 * static_cast<double>(terms))), terms});
    }
    return out;
}

} // namespace hybridsense
