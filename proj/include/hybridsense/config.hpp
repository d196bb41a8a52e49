#pragma once

// INI-style configuration for the command-line front end.
//
//   [section]
//   key = value      # comment
//
// Every key is optional; missing keys keep the built-in defaults. Unknown
// sections or keys and malformed values are rejected with the offending line.

#include "hybridsense/atom_interferometer.hpp"
#include "hybridsense/constants.hpp"
#include "hybridsense/error.hpp"
#include "hybridsense/omrr_model.hpp"
#include "hybridsense/text.hpp"

#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

namespace hybridsense::config {

struct IniValue {
    std::string text;
    std::size_t line = 0;
};

/// Parsed key-value sections with the line number of every value.
class IniDocument {
public:
    static IniDocument parse(std::istream& in, const std::string& source) {
        IniDocument doc;
        doc.source_ = source;
        std::string raw;
        std::string section;
        std::size_t line_no = 0;
        while (std::getline(in, raw)) {
            ++line_no;
            auto line = trim(strip_comment(strip_comment(raw, '#'), ';'));
            if (line.empty()) continue;
            if (line.front() == '[') {
                if (line.back() != ']' || line.size() < 3) doc.fail(line_no, "malformed section header");
                section = std::string(trim(line.substr(1, line.size() - 2)));
                doc.sections_[section];
                continue;
            }
            auto eq = line.find('=');
            if (eq == std::string_view::npos) doc.fail(line_no, "expected 'key = value'");
            if (section.empty()) doc.fail(line_no, "key outside of any [section]");
            auto key = std::string(trim(line.substr(0, eq)));
            auto value = std::string(trim(line.substr(eq + 1)));
            if (key.empty()) doc.fail(line_no, "empty key");
            auto& sec = doc.sections_[section];
            if (sec.count(key)) doc.fail(line_no, "duplicate key '" + key + "' in [" + section + "]");
            sec[key] = {value, line_no};
        }
        return doc;
    }

    static IniDocument load(const std::filesystem::path& path) {
        std::ifstream in(path);
        if (!in) throw ConfigError("cannot open config file '" + path.string() + "'");
        return parse(in, path.string());
    }

    const std::string& source() const { return source_; }
    const std::map<std::string, std::map<std::string, IniValue>>& sections() const { return sections_; }

    const IniValue* find(const std::string& section, const std::string& key) const {
        auto s = sections_.find(section);
        if (s == sections_.end()) return nullptr;
        auto k = s->second.find(key);
        return k == s->second.end() ? nullptr : &k->second;
    }

    [[noreturn]] void fail(std::size_t line, const std::string& msg) const {
        throw ConfigError(source_ + ":" + std::to_string(line) + ": " + msg);
    }

private:
    std::string source_;
    std::map<std::string, std::map<std::string, IniValue>> sections_;
};

struct NoiseCmdConfig {
    double f_min = 1e-3;
    double f_max = 1e4;
    std::size_t points = 400;
};

struct OptimizeCmdConfig {
    double f0_min_hz = 50.0;
    double f0_max_hz = 3000.0;
    std::size_t points = 600;
    std::vector<double> sigma_x_list{1e-14, 1e-15, 1e-16};
    unsigned workers = 1;
};

enum class SpectraMode { readout, resonance };

struct SpectraCmdConfig {
    double f_min = 0.01;
    double f_max = 5000.0;
    std::size_t points = 500;
    SpectraMode mode = SpectraMode::readout;
    std::vector<double> resonances_hz{100.0, 500.0, 1200.0};
    std::vector<double> sigma_x_list{1e-14, 1e-15, 1e-16};
};

struct SimulateCmdConfig {
    double fs = 8192.0;
    std::size_t n_cycles = 256;
    std::uint64_t seed = 1;
    bool correction = true;
    bool thermal_noise = true;
    bool projection_noise = true;
    std::size_t debias_cycles = 0;
    double omrr_bias = 0.0;
    unsigned workers = 1;
    bool dump_series = false;
};

struct AppConfig {
    std::string peterson_table; ///< empty selects the front end's built-in table
    ai::InterferometerConfig ai{};
    omrr::OmrrConfig omrr{};
    double wavelength = kRb87D2Wavelength;
    double tau = 1.0;
    std::size_t n_ceiling = std::size_t{1} << 22;
    NoiseCmdConfig noise{};
    OptimizeCmdConfig optimize{};
    SpectraCmdConfig spectra{};
    SimulateCmdConfig simulate{};
};

namespace detail {

inline std::string list_text(const std::vector<double>& v) {
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) s += (i ? ", " : "") + format_double(v[i]);
    return s;
}

class Reader {
public:
    explicit Reader(const IniDocument& doc) : doc_(doc) {}

    void number(const std::string& sec, const std::string& key, double& out, double lo = -HUGE_VAL,
                double hi = HUGE_VAL, bool lo_open = false) {
        if (auto* v = take(sec, key)) {
            auto d = parse_double(v->text);
            if (!d || !std::isfinite(*d)) fail(*v, sec, key, "expected a number, got '" + v->text + "'");
            if (*d < lo || (lo_open && *d == lo) || *d > hi) {
                fail(*v, sec, key, "value " + v->text + " outside allowed range " + (lo_open ? "(" : "[") +
                                       format_double(lo) + ", " + format_double(hi) + "]");
            }
            out = *d;
        }
    }

    template <class Int>
    void integer(const std::string& sec, const std::string& key, Int& out, Int lo) {
        if (auto* v = take(sec, key)) {
            // Plain digits parse exactly (full 64-bit seeds); exponent forms go
            // through double and must be exact integers.
            unsigned long long raw = 0;
            const char* first = v->text.data();
            const char* last = first + v->text.size();
            auto [ptr, ec] = std::from_chars(first, last, raw);
            bool ok = ec == std::errc{} && ptr == last;
            if (!ok) {
                auto d = parse_double(v->text);
                ok = d && *d >= 0.0 && *d == std::floor(*d) && *d <= 9007199254740992.0;
                if (ok) raw = static_cast<unsigned long long>(*d);
            }
            if (!ok || raw < static_cast<unsigned long long>(lo) ||
                raw > static_cast<unsigned long long>(std::numeric_limits<Int>::max())) {
                fail(*v, sec, key, "expected an integer >= " + std::to_string(lo) + ", got '" + v->text + "'");
            }
            out = static_cast<Int>(raw);
        }
    }

    void boolean(const std::string& sec, const std::string& key, bool& out) {
        if (auto* v = take(sec, key)) {
            if (v->text == "on" || v->text == "true" || v->text == "yes" || v->text == "1") {
                out = true;
            } else if (v->text == "off" || v->text == "false" || v->text == "no" || v->text == "0") {
                out = false;
            } else {
                fail(*v, sec, key, "expected on/off, got '" + v->text + "'");
            }
        }
    }

    void text(const std::string& sec, const std::string& key, std::string& out) {
        if (auto* v = take(sec, key)) {
            if (v->text.empty()) fail(*v, sec, key, "empty value");
            out = v->text;
        }
    }

    void numbers(const std::string& sec, const std::string& key, std::vector<double>& out, double lo_exclusive) {
        if (auto* v = take(sec, key)) {
            std::vector<double> vals;
            for (const auto& piece : split_list(v->text)) {
                auto d = parse_double(piece);
                if (!d || !std::isfinite(*d) || !(*d > lo_exclusive)) {
                    fail(*v, sec, key, "bad list element '" + piece + "'");
                }
                vals.push_back(*d);
            }
            if (vals.empty()) fail(*v, sec, key, "empty list");
            out = std::move(vals);
        }
    }

    template <class Enum>
    void choice(const std::string& sec, const std::string& key, Enum& out,
                const std::vector<std::pair<std::string, Enum>>& options) {
        if (auto* v = take(sec, key)) {
            for (const auto& [name, value] : options) {
                if (v->text == name) {
                    out = value;
                    return;
                }
            }
            std::string allowed;
            for (const auto& o : options) allowed += (allowed.empty() ? "" : "|") + o.first;
            fail(*v, sec, key, "expected one of " + allowed + ", got '" + v->text + "'");
        }
    }

    /// Any key not consumed by the schema is an error.
    void reject_unknown() const {
        for (const auto& [sec, keys] : doc_.sections()) {
            for (const auto& [key, val] : keys) {
                if (!used_.count(sec + "\x1f" + key)) {
                    doc_.fail(val.line, "unknown key '" + key + "' in [" + sec + "]");
                }
            }
        }
    }

    const IniValue* peek(const std::string& sec, const std::string& key) const { return doc_.find(sec, key); }

    [[noreturn]] void fail(const IniValue& v, const std::string& sec, const std::string& key,
                           const std::string& msg) const {
        doc_.fail(v.line, "[" + sec + "] " + key + ": " + msg);
    }

private:
    const IniValue* take(const std::string& sec, const std::string& key) {
        used_.insert(sec + "\x1f" + key);
        return doc_.find(sec, key);
    }

    const IniDocument& doc_;
    std::set<std::string> used_;
};

} // namespace detail

/// Applies a parsed document on top of the defaults.
inline AppConfig from_ini(const IniDocument& doc) {
    AppConfig c;
    detail::Reader r(doc);

    r.text("paths", "peterson_table", c.peterson_table);

    r.number("interferometer", "T", c.ai.T, 0.0, HUGE_VAL, true);
    r.number("interferometer", "T_c", c.ai.T_c, 0.0, HUGE_VAL, true);
    r.number("interferometer", "tau_p", c.ai.tau_p, 0.0);
    r.number("interferometer", "N", c.ai.N, 1.0);
    r.number("interferometer", "C0", c.ai.C0, 0.0, 1.0, true);
    r.number("interferometer", "B", c.ai.B, 0.0, 1.0);
    r.number("interferometer", "wavelength", c.wavelength, 0.0, HUGE_VAL, true);
    r.number("interferometer", "g0", c.ai.g0);
    c.ai.k_eff = raman_k_eff(c.wavelength);
    if (auto* v = r.peek("interferometer", "k_eff")) {
        if (r.peek("interferometer", "wavelength")) r.fail(*v, "interferometer", "k_eff", "set either k_eff or wavelength");
        r.number("interferometer", "k_eff", c.ai.k_eff, 0.0, HUGE_VAL, true);
        c.wavelength = 4.0 * kPi / c.ai.k_eff;
    } else {
        double unused = 0.0;
        r.number("interferometer", "k_eff", unused);
    }
    if (!(c.ai.T_c >= c.ai.span())) {
        const std::string msg = "[interferometer] T_c must be >= 2T + 4 tau_p";
        if (const auto* v = r.peek("interferometer", "T_c")) doc.fail(v->line, msg);
        throw ConfigError(doc.source() + ": " + msg);
    }

    double f0 = c.omrr.f0();
    r.number("omrr", "f0_hz", f0, 0.0, HUGE_VAL, true);
    c.omrr.omega0 = kTwoPi * f0;
    r.number("omrr", "Q", c.omrr.Q, 0.5, HUGE_VAL, true);
    r.number("omrr", "mass", c.omrr.m, 0.0, HUGE_VAL, true);
    r.number("omrr", "temperature", c.omrr.T_TM, 0.0, HUGE_VAL, true);
    r.number("omrr", "sigma_x", c.omrr.sigma_x, 0.0);
    r.choice("omrr", "loss_model", c.omrr.loss_model,
             {{"structural", omrr::LossModel::structural}, {"velocity", omrr::LossModel::velocity}});

    r.number("analysis", "tau", c.tau, 0.0, HUGE_VAL, true);
    r.integer("analysis", "n_ceiling", c.n_ceiling, std::size_t{16});

    r.number("noise", "f_min", c.noise.f_min, 0.0, HUGE_VAL, true);
    r.number("noise", "f_max", c.noise.f_max, 0.0, HUGE_VAL, true);
    r.integer("noise", "points", c.noise.points, std::size_t{1});

    r.number("optimize", "f0_min_hz", c.optimize.f0_min_hz, 0.0, HUGE_VAL, true);
    r.number("optimize", "f0_max_hz", c.optimize.f0_max_hz, 0.0, HUGE_VAL, true);
    r.integer("optimize", "points", c.optimize.points, std::size_t{1});
    r.numbers("optimize", "sigma_x_list", c.optimize.sigma_x_list, -1e-300);
    r.integer("optimize", "workers", c.optimize.workers, 1u);

    r.number("spectra", "f_min", c.spectra.f_min, 0.0, HUGE_VAL, true);
    r.number("spectra", "f_max", c.spectra.f_max, 0.0, HUGE_VAL, true);
    r.integer("spectra", "points", c.spectra.points, std::size_t{0});
    r.choice("spectra", "mode", c.spectra.mode,
             {{"readout", SpectraMode::readout}, {"resonance", SpectraMode::resonance}});
    r.numbers("spectra", "resonances_hz", c.spectra.resonances_hz, 0.0);
    r.numbers("spectra", "sigma_x_list", c.spectra.sigma_x_list, -1e-300);

    r.number("simulate", "fs", c.simulate.fs, 0.0, HUGE_VAL, true);
    r.integer("simulate", "n_cycles", c.simulate.n_cycles, std::size_t{0});
    r.integer("simulate", "seed", c.simulate.seed, std::uint64_t{0});
    r.boolean("simulate", "correction", c.simulate.correction);
    r.boolean("simulate", "thermal_noise", c.simulate.thermal_noise);
    r.boolean("simulate", "projection_noise", c.simulate.projection_noise);
    r.integer("simulate", "debias_cycles", c.simulate.debias_cycles, std::size_t{0});
    r.number("simulate", "omrr_bias", c.simulate.omrr_bias);
    r.integer("simulate", "workers", c.simulate.workers, 1u);
    r.boolean("simulate", "dump_series", c.simulate.dump_series);

    r.reject_unknown();
    return c;
}

inline AppConfig load(const std::filesystem::path& path) { return from_ini(IniDocument::load(path)); }

/// Shortest decimal resonance frequency that maps back onto omega0 exactly,
/// so "1015" stays 1015 rather than 1015.0000000000001.
inline double f0_hz_of(double omega0) {
    for (int digits = 1; digits <= 17; ++digits) {
        char buf[40];
        std::snprintf(buf, sizeof buf, "%.*g", digits, omega0 / kTwoPi);
        const double f = std::strtod(buf, nullptr);
        if (kTwoPi * f == omega0) return f;
    }
    return omega0 / kTwoPi;
}

/// Fully resolved configuration as INI text; from_ini(to_ini(c)) reproduces c.
inline std::string to_ini(const AppConfig& c) {
    std::ostringstream o;
    const auto kv = [&](const char* k, const std::string& v) { o << k << " = " << v << '\n'; };
    const auto num = [&](const char* k, double v) { kv(k, format_double(v)); };
    const auto onoff = [&](const char* k, bool v) { kv(k, v ? "on" : "off"); };
    if (!c.peterson_table.empty()) {
        o << "[paths]\n";
        kv("peterson_table", c.peterson_table);
        o << '\n';
    }
    o << "[interferometer]\n";
    num("T", c.ai.T);
    num("T_c", c.ai.T_c);
    num("tau_p", c.ai.tau_p);
    num("N", c.ai.N);
    num("C0", c.ai.C0);
    num("B", c.ai.B);
    num("k_eff", c.ai.k_eff);
    num("g0", c.ai.g0);
    o << "\n[omrr]\n";
    num("f0_hz", f0_hz_of(c.omrr.omega0));
    num("Q", c.omrr.Q);
    num("mass", c.omrr.m);
    num("temperature", c.omrr.T_TM);
    num("sigma_x", c.omrr.sigma_x);
    kv("loss_model", c.omrr.loss_model == omrr::LossModel::structural ? "structural" : "velocity");
    o << "\n[analysis]\n";
    num("tau", c.tau);
    kv("n_ceiling", std::to_string(c.n_ceiling));
    o << "\n[noise]\n";
    num("f_min", c.noise.f_min);
    num("f_max", c.noise.f_max);
    kv("points", std::to_string(c.noise.points));
    o << "\n[optimize]\n";
    num("f0_min_hz", c.optimize.f0_min_hz);
    num("f0_max_hz", c.optimize.f0_max_hz);
    kv("points", std::to_string(c.optimize.points));
    kv("sigma_x_list", detail::list_text(c.optimize.sigma_x_list));
    kv("workers", std::to_string(c.optimize.workers));
    o << "\n[spectra]\n";
    num("f_min", c.spectra.f_min);
    num("f_max", c.spectra.f_max);
    kv("points", std::to_string(c.spectra.points));
    kv("mode", c.spectra.mode == SpectraMode::readout ? "readout" : "resonance");
    kv("resonances_hz", detail::list_text(c.spectra.resonances_hz));
    kv("sigma_x_list", detail::list_text(c.spectra.sigma_x_list));
    o << "\n[simulate]\n";
    num("fs", c.simulate.fs);
    kv("n_cycles", std::to_string(c.simulate.n_cycles));
    kv("seed", std::to_string(c.simulate.seed));
    onoff("correction", c.simulate.correction);
    onoff("thermal_noise", c.simulate.thermal_noise);
    onoff("projection_noise", c.simulate.projection_noise);
    kv("debias_cycles", std::to_string(c.simulate.debias_cycles));
    num("omrr_bias", c.simulate.omrr_bias);
    kv("workers", std::to_string(c.simulate.workers));
    onoff("dump_series", c.simulate.dump_series);
    return o.str();
}

/// Log-spaced grid of `points` values in [lo, hi].
inline std::vector<double> log_grid(double lo, double hi, std::size_t points) {
    std::vector<double> g(points);
    if (points == 1) {
        g[0] = lo;
        return g;
    }
    const double a = std::log10(lo);
    const double b = std::log10(hi);
    for (std::size_t i = 0; i < points; ++i) {
        g[i] = std::pow(10.0, a + (b - a) * static_cast<double>(i) / static_cast<double>(points - 1));
    }
    g.front() = lo;
    g.back() = hi;
    return g;
}

inline std::vector<double> linear_grid(double lo, double hi, std::size_t points) {
    std::vector<double> g(points);
    for (std::size_t i = 0; i < points; ++i) {
        g[i] = points == 1 ? lo : lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(points - 1);
    }
    return g;
}

} // namespace hybridsense::config
