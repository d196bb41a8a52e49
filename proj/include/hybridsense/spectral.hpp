#pragma once

// Real FFTs (FFTW backend), Welch PSD estimation and band averaging.

#include "hybridsense/constants.hpp"
#include "hybridsense/error.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <vector>

namespace hybridsense::spectral {

namespace detail {

/// FFTW planning is not thread-safe; execution with fresh plans is.
inline std::mutex& planner_mutex() {
    static std::mutex m;
    return m;
}

struct FftwFree {
    void operator()(void* p) const noexcept { fftw_free(p); }
};

template <class T>
using FftwBuffer = std::unique_ptr<T[], FftwFree>;

template <class T>
FftwBuffer<T> fftw_alloc(std::size_t n) {
    auto* p = static_cast<T*>(fftw_malloc(sizeof(T) * std::max<std::size_t>(n, 1)));
    if (p == nullptr) throw std::bad_alloc();
    return FftwBuffer<T>(p);
}

class Plan {
public:
    explicit Plan(fftw_plan p) : plan_(p) {
        if (plan_ == nullptr) throw Error("FFTW failed to create a plan");
    }
    Plan(const Plan&) = delete;
    Plan& operator=(const Plan&) = delete;
    ~Plan() {
        std::lock_guard lock(planner_mutex());
        fftw_destroy_plan(plan_);
    }
    void execute() const { fftw_execute(plan_); }

private:
    fftw_plan plan_;
};

} // namespace detail

/// Forward real FFT, unnormalised: X_k = sum_j x_j exp(-2 pi i j k / n), k = 0..n/2.
inline std::vector<std::complex<double>> rfft(std::span<const double> x) {
    const std::size_t n = x.size();
    if (n == 0) return {};
    auto in = detail::fftw_alloc<double>(n);
    auto out = detail::fftw_alloc<fftw_complex>(n / 2 + 1);
    std::optional<detail::Plan> plan;
    {
        std::lock_guard lock(detail::planner_mutex());
        plan.emplace(fftw_plan_dft_r2c_1d(static_cast<int>(n), in.get(), out.get(), FFTW_ESTIMATE));
    }
    std::copy(x.begin(), x.end(), in.get());
    plan->execute();
    std::vector<std::complex<double>> X(n / 2 + 1);
    for (std::size_t k = 0; k < X.size(); ++k) X[k] = {out[k][0], out[k][1]};
    return X;
}

/// Inverse of rfft for a length-n signal, normalised so irfft(rfft(x), n) == x.
inline std::vector<double> irfft(std::span<const std::complex<double>> X, std::size_t n) {
    if (n == 0) return {};
    if (X.size() != n / 2 + 1) throw DomainError("irfft: spectrum length does not match n/2+1");
    auto in = detail::fftw_alloc<fftw_complex>(n / 2 + 1);
    auto out = detail::fftw_alloc<double>(n);
    std::optional<detail::Plan> plan;
    {
        std::lock_guard lock(detail::planner_mutex());
        plan.emplace(fftw_plan_dft_c2r_1d(static_cast<int>(n), in.get(), out.get(), FFTW_ESTIMATE));
    }
    for (std::size_t k = 0; k < X.size(); ++k) {
        in[k][0] = X[k].real();
        in[k][1] = X[k].imag();
    }
    plan->execute();
    std::vector<double> x(n);
    const double scale = 1.0 / static_cast<double>(n);
    for (std::size_t j = 0; j < n; ++j) x[j] = out[j] * scale;
    return x;
}

/// Frequency of rfft bin k.
inline double bin_frequency(std::size_t k, std::size_t n, double fs) {
    return static_cast<double>(k) * fs / static_cast<double>(n);
}

struct Spectrum {
    std::vector<double> f;   ///< Hz
    std::vector<double> psd; ///< one-sided, unit^2/Hz
};

/// Welch estimate with a Hann window, 50 % overlap, mean removed per segment
/// and one-sided density scaling.
inline Spectrum welch_psd(std::span<const double> x, double fs, std::size_t segment) {
    if (!(fs > 0.0)) throw DomainError("welch: sample rate must be > 0");
    if (segment < 8 || segment > x.size()) throw DomainError("welch: segment length must lie in [8, record length]");
    const std::size_t step = segment / 2;
    std::vector<double> w(segment);
    double w_sq = 0.0;
    for (std::size_t i = 0; i < segment; ++i) {
        w[i] = 0.5 - 0.5 * std::cos(kTwoPi * static_cast<double>(i) / static_cast<double>(segment));
        w_sq += w[i] * w[i];
    }
    const std::size_t bins = segment / 2 + 1;
    Spectrum out;
    out.psd.assign(bins, 0.0);
    out.f.resize(bins);
    for (std::size_t k = 0; k < bins; ++k) out.f[k] = bin_frequency(k, segment, fs);

    std::size_t count = 0;
    std::vector<double> buf(segment);
    for (std::size_t start = 0; start + segment <= x.size(); start += step) {
        double mean = 0.0;
        for (std::size_t i = 0; i < segment; ++i) mean += x[start + i];
        mean /= static_cast<double>(segment);
        for (std::size_t i = 0; i < segment; ++i) buf[i] = (x[start + i] - mean) * w[i];
        const auto X = rfft(buf);
        for (std::size_t k = 0; k < bins; ++k) out.psd[k] += std::norm(X[k]);
        ++count;
    }
    const double scale = 1.0 / (fs * w_sq * static_cast<double>(count));
    for (std::size_t k = 0; k < bins; ++k) {
        const bool edge = (k == 0) || (segment % 2 == 0 && k == bins - 1);
        out.psd[k] *= edge ? scale : 2.0 * scale;
    }
    return out;
}

struct Band {
    double f_lo = 0.0;
    double f_hi = 0.0;
    double f_center = 0.0; ///< geometric centre
    double mean = 0.0;
    std::size_t bins = 0;
};

/// Averages a spectrum over log-spaced bands between f_lo and f_hi
/// (bands_per_decade per decade). A band is merged with the next one until
/// it holds at least min_bins bins.
inline std::vector<Band> log_band_average(const Spectrum& s, double f_lo, double f_hi, double bands_per_decade,
                                          std::size_t min_bins = 1) {
    if (!(f_lo > 0.0) || !(f_hi > f_lo)) throw DomainError("band average needs 0 < f_lo < f_hi");
    const double ratio = std::pow(10.0, 1.0 / bands_per_decade);
    std::vector<Band> out;
    double lo = f_lo;
    while (lo < f_hi * (1.0 - 1e-12)) {
        double hi = std::min(lo * ratio, f_hi);
        Band b;
        while (true) {
            b = {lo, hi, std::sqrt(lo * hi), 0.0, 0};
            double sum = 0.0;
            for (std::size_t k = 0; k < s.f.size(); ++k) {
                if (s.f[k] >= lo && s.f[k] < hi) {
                    sum += s.psd[k];
                    ++b.bins;
                }
            }
            b.mean = b.bins ? sum / static_cast<double>(b.bins) : 0.0;
            if (b.bins >= min_bins || hi >= f_hi) break;
            hi = std::min(hi * ratio, f_hi);
        }
        if (b.bins > 0) out.push_back(b);
        lo = hi;
    }
    return out;
}

} // namespace hybridsense::spectral
