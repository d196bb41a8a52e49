#pragma once

// Ambient seismic noise (Peterson New High Noise Model) and generic one-sided
// power spectral density plumbing shared by the rest of the library.

#include "hybridsense/error.hpp"
#include "hybridsense/text.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace hybridsense::noise {

struct LogSegment {
    double period_start; ///< s
    double coeff_a;      ///< dB re 1 (m/s^2)^2/Hz
    double coeff_b;      ///< dB per decade of period
};

/// PSD_dB(P) = A + B log10(P) on each period segment.
///
/// Segments are half-open [period_start, next period_start); a query exactly
/// on a breakpoint therefore resolves to the segment with the larger period.
/// The optional end bound closes the last segment; without it the last
/// segment is unbounded above.
class PiecewiseLogPsd {
public:
    PiecewiseLogPsd() = default;

    PiecewiseLogPsd(std::vector<LogSegment> segments, std::optional<double> period_end)
        : segments_(std::move(segments)), period_end_(period_end) {
        if (segments_.empty()) {
            throw DomainError("piecewise PSD needs at least one segment");
        }
        for (std::size_t i = 1; i < segments_.size(); ++i) {
            if (!(segments_[i].period_start > segments_[i - 1].period_start)) {
                throw DomainError("piecewise PSD segments must have strictly increasing periods");
            }
        }
        if (period_end_ && !(*period_end_ > segments_.back().period_start)) {
            throw DomainError("piecewise PSD end period must exceed the last segment start");
        }
    }

    const std::vector<LogSegment>& segments() const noexcept { return segments_; }
    const std::optional<double>& period_end() const noexcept { return period_end_; }

    double period_min() const { return segments_.front().period_start; }
    double period_max() const {
        return period_end_ ? *period_end_ : std::numeric_limits<double>::infinity();
    }

    bool covers(double period) const { return period >= period_min() && period <= period_max(); }

    std::size_t segment_index(double period) const {
        if (!covers(period)) {
            throw DomainError("period " + format_double(period) + " s outside model range [" +
                              format_double(period_min()) + ", " + format_double(period_max()) + "]");
        }
        auto it = std::upper_bound(segments_.begin(), segments_.end(), period,
                                   [](double p, const LogSegment& s) { return p < s.period_start; });
        return static_cast<std::size_t>(std::distance(segments_.begin(), it)) - 1;
    }

    /// PSD in dB re 1 (m/s^2)^2/Hz at the given period.
    double db_at_period(double period) const {
        const auto& s = segments_[segment_index(period)];
        return s.coeff_a + s.coeff_b * std::log10(period);
    }

private:
    std::vector<LogSegment> segments_;
    std::optional<double> period_end_;
};

enum class ParseErrorKind { empty_file, malformed_row, unsorted_periods, io };

class TableParseError : public Error {
public:
    TableParseError(ParseErrorKind kind, std::size_t line, const std::string& what)
        : Error(what), kind_(kind), line_(line) {}

    ParseErrorKind kind() const noexcept { return kind_; }
    /// 1-based line number, 0 when not tied to a line.
    std::size_t line() const noexcept { return line_; }

private:
    ParseErrorKind kind_;
    std::size_t line_;
};

/// Parses "period_s A_dB B_dB" rows; '#' starts a comment. A trailing row with a
/// single period closes the last segment.
inline PiecewiseLogPsd parse_peterson_table(std::istream& in, std::string_view source = "<stream>") {
    std::vector<LogSegment> segments;
    std::optional<double> end;
    std::string raw;
    std::size_t line_no = 0;
    const auto where = [&](std::size_t ln) { return std::string(source) + ":" + std::to_string(ln) + ": "; };

    while (std::getline(in, raw)) {
        ++line_no;
        auto tokens = split_ws(strip_comment(raw, '#'));
        if (tokens.empty()) continue;
        if (end) {
            throw TableParseError(ParseErrorKind::malformed_row, line_no,
                                  where(line_no) + "row after the closing end-period row");
        }
        std::vector<double> values;
        for (const auto& tok : tokens) {
            auto v = parse_double(tok);
            if (!v || !std::isfinite(*v)) {
                throw TableParseError(ParseErrorKind::malformed_row, line_no,
                                      where(line_no) + "not a number: '" + tok + "'");
            }
            values.push_back(*v);
        }
        if (values.size() != 3 && values.size() != 1) {
            throw TableParseError(ParseErrorKind::malformed_row, line_no,
                                  where(line_no) + "expected 'period A B' (or a single closing period), got " +
                                      std::to_string(values.size()) + " fields");
        }
        if (!(values[0] > 0.0)) {
            throw TableParseError(ParseErrorKind::malformed_row, line_no,
                                  where(line_no) + "period must be positive");
        }
        if (!segments.empty() && !(values[0] > segments.back().period_start)) {
            throw TableParseError(ParseErrorKind::unsorted_periods, line_no,
                                  where(line_no) + "periods must be strictly increasing");
        }
        if (values.size() == 1) {
            if (segments.empty()) {
                throw TableParseError(ParseErrorKind::malformed_row, line_no,
                                      where(line_no) + "closing period without any segment");
            }
            end = values[0];
        } else {
            segments.push_back({values[0], values[1], values[2]});
        }
    }
    if (segments.empty()) {
        throw TableParseError(ParseErrorKind::empty_file, 0, std::string(source) + ": no table rows");
    }
    return PiecewiseLogPsd(std::move(segments), end);
}

inline PiecewiseLogPsd load_peterson_table(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw TableParseError(ParseErrorKind::io, 0, "cannot open Peterson table '" + path.string() + "'");
    }
    return parse_peterson_table(in, path.string());
}

inline std::string serialize_peterson_table(const PiecewiseLogPsd& model) {
    std::ostringstream out;
    out << "# period_s A_dB B_dB\n";
    for (const auto& s : model.segments()) {
        out << format_double(s.period_start) << ' ' << format_double(s.coeff_a) << ' '
            << format_double(s.coeff_b) << '\n';
    }
    if (model.period_end()) out << format_double(*model.period_end()) << '\n';
    return out.str();
}

/// Acceleration PSD, (m/s^2)^2/Hz, at frequency f (Hz).
inline double peterson_accel_psd(const PiecewiseLogPsd& model, double f) {
    if (!(f > 0.0)) throw DomainError("frequency must be positive");
    return std::pow(10.0, model.db_at_period(1.0 / f) / 10.0);
}

inline double asd_of(double psd_value) {
    if (!(psd_value >= 0.0)) throw DomainError("PSD value must be non-negative");
    return std::sqrt(psd_value);
}

enum class PsdKind { acceleration, displacement, phase };

/// How a NoisePsd answers queries outside its declared band.
enum class OutOfBand {
    error,   ///< throw DomainError
    zero,    ///< zero power, flagged
    nearest, ///< value at the nearest band edge, flagged
};

struct PsdSample {
    double value;
    bool substituted; ///< true when the band policy replaced an out-of-band query
};

/// One-sided PSD (unit^2/Hz) as an evaluable function of frequency (Hz).
class NoisePsd {
public:
    using Eval = std::function<double(double)>;

    NoisePsd(PsdKind kind, Eval eval, double f_min, double f_max, OutOfBand policy = OutOfBand::error)
        : kind_(kind), eval_(std::move(eval)), f_min_(f_min), f_max_(f_max), policy_(policy) {
        if (!eval_) throw DomainError("NoisePsd needs an evaluator");
        if (!(f_min_ >= 0.0) || !(f_max_ > f_min_)) throw DomainError("NoisePsd band must satisfy 0 <= f_min < f_max");
    }

    static NoisePsd white(PsdKind kind, double level, double f_min = 0.0,
                          double f_max = std::numeric_limits<double>::infinity(),
                          OutOfBand policy = OutOfBand::zero) {
        if (!(level >= 0.0)) throw DomainError("white PSD level must be non-negative");
        return NoisePsd(kind, [level](double) { return level; }, f_min, f_max, policy);
    }

    PsdKind kind() const noexcept { return kind_; }
    double f_min() const noexcept { return f_min_; }
    double f_max() const noexcept { return f_max_; }
    OutOfBand policy() const noexcept { return policy_; }

    bool in_band(double f) const { return f >= f_min_ && f <= f_max_; }

    PsdSample sample(double f) const {
        if (in_band(f)) return {checked(eval_(f), f), false};
        switch (policy_) {
        case OutOfBand::zero:
            return {0.0, true};
        case OutOfBand::nearest: {
            double edge = f < f_min_ ? f_min_ : f_max_;
            if (edge == 0.0) edge = std::nextafter(0.0, 1.0);
            return {checked(eval_(edge), edge), true};
        }
        case OutOfBand::error:
        default:
            throw DomainError("frequency " + format_double(f) + " Hz outside PSD band [" +
                              format_double(f_min_) + ", " + format_double(f_max_) + "]");
        }
    }

    double operator()(double f) const { return sample(f).value; }

    NoisePsd with_policy(OutOfBand policy) const {
        NoisePsd copy = *this;
        copy.policy_ = policy;
        return copy;
    }

private:
    static double checked(double v, double f) {
        if (!(v >= 0.0) || !std::isfinite(v)) {
            throw DomainError("PSD evaluated to an invalid value at " + format_double(f) + " Hz");
        }
        return v;
    }

    PsdKind kind_;
    Eval eval_;
    double f_min_;
    double f_max_;
    OutOfBand policy_;
};

/// Acceleration NoisePsd backed by a Peterson model. The band is the model's
/// period range mapped to frequency.
inline NoisePsd make_peterson_psd(PiecewiseLogPsd model, OutOfBand policy = OutOfBand::nearest) {
    const double f_max = 1.0 / model.period_min();
    const double f_min = std::isfinite(model.period_max()) ? 1.0 / model.period_max() : 0.0;
    return NoisePsd(
        PsdKind::acceleration,
        [m = std::move(model)](double f) { return peterson_accel_psd(m, f); }, f_min, f_max, policy);
}

} // namespace hybridsense::noise
