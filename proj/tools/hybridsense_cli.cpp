// hybridsense: command-line front end.
//
//   hybridsense noise    [--config PATH] [--out DIR]
//   hybridsense optimize [--config PATH] [--out DIR]
//   hybridsense spectra  [--config PATH] [--out DIR]
//   hybridsense simulate [--config PATH] [--out DIR] [--seed U64] [--dump-series]
//
// Every command writes comma-separated tables, a resolved_config.ini snapshot
// and a manifest.json into the output directory. On failure every file the
// command created is removed again.

#include "hybridsense/config.hpp"
#include "hybridsense/fusion_sim.hpp"
#include "hybridsense/hybrid_optimizer.hpp"
#include "hybridsense/noise_models.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

namespace fs = std::filesystem;
namespace hs = hybridsense;
using json = nlohmann::ordered_json;

namespace {

constexpr const char* kPetersonEnv = "HYBRIDSENSE_PETERSON_TABLE";

class UsageError : public std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Tracks every file written so a failed run can clean up after itself.
class OutputSet {
public:
    explicit OutputSet(fs::path dir) : dir_(std::move(dir)) {}

    const fs::path& dir() const { return dir_; }
    const std::vector<std::string>& names() const { return names_; }

    /// Writes through a temporary file and renames it into place.
    void write(const std::string& name, const std::string& content, bool binary = false) {
        const fs::path target = dir_ / name;
        const fs::path tmp = dir_ / (name + ".tmp");
        {
            std::ofstream out(tmp, binary ? std::ios::binary : std::ios::out);
            if (!out) throw hs::Error("cannot write '" + tmp.string() + "'");
            out.write(content.data(), static_cast<std::streamsize>(content.size()));
            out.close();
            if (!out) throw hs::Error("failed writing '" + tmp.string() + "'");
        }
        fs::rename(tmp, target);
        names_.push_back(name);
    }

    void remove_all() noexcept {
        std::error_code ec;
        for (const auto& n : names_) {
            fs::remove(dir_ / n, ec);
            fs::remove(dir_ / (n + ".tmp"), ec);
        }
        names_.clear();
    }

private:
    fs::path dir_;
    std::vector<std::string> names_;
};

/// Comma-separated table with a "name [unit]" header row.
class Table {
public:
    explicit Table(std::vector<std::string> header) : cols_(header.size()) {
        row(header);
    }

    template <class... Cells>
    void add(const Cells&... cells) {
        static_assert(sizeof...(Cells) > 0);
        std::vector<std::string> r{cell(cells)...};
        if (r.size() != cols_) throw std::logic_error("table row width mismatch");
        row(r);
    }

    std::string str() const { return out_.str(); }

private:
    static std::string cell(double v) { return hs::format_double(v); }
    static std::string cell(std::size_t v) { return std::to_string(v); }
    static std::string cell(const char* v) { return v; }
    static std::string cell(const std::string& v) { return v; }

    void row(const std::vector<std::string>& r) {
        for (std::size_t i = 0; i < r.size(); ++i) out_ << (i ? "," : "") << r[i];
        out_ << '\n';
    }

    std::size_t cols_;
    std::ostringstream out_;
};

std::string tag_of(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    std::string s = buf;
    for (auto& ch : s) {
        if (ch == '+') ch = 'p';
        if (ch == '-') ch = 'm';
        if (ch == '.') ch = '_';
    }
    return s;
}

struct Options {
    std::string config_path;
    std::string out_dir = ".";
    bool emit_plot_script = false;
    bool dump_series = false;
    std::uint64_t seed = 0;
    bool seed_given = false;
    unsigned workers = 0;
};

/// Peterson table: environment variable, then config (relative to the config
/// file), then the table installed with the tool.
fs::path resolve_peterson(const hs::config::AppConfig& cfg, const Options& opt) {
    if (const char* env = std::getenv(kPetersonEnv); env != nullptr && *env != '\0') return fs::absolute(env);
    if (!cfg.peterson_table.empty()) {
        fs::path p(cfg.peterson_table);
        if (p.is_relative() && !opt.config_path.empty()) p = fs::path(opt.config_path).parent_path() / p;
        return fs::absolute(p);
    }
    return fs::path(HYBRIDSENSE_DEFAULT_PETERSON);
}

struct Context {
    hs::config::AppConfig cfg;
    hs::noise::NoisePsd ambient;
    fs::path peterson_path;

    hs::hybrid::HybridConfig hybrid() const {
        hs::hybrid::HybridConfig h(cfg.ai, cfg.omrr, ambient);
        h.tau = cfg.tau;
        h.sum.n_ceiling = cfg.n_ceiling;
        return h;
    }
};

Context load_context(const Options& opt) {
    Context ctx{opt.config_path.empty() ? hs::config::AppConfig{} : hs::config::load(opt.config_path),
                hs::noise::NoisePsd::white(hs::noise::PsdKind::acceleration, 0.0), {}};
    ctx.peterson_path = resolve_peterson(ctx.cfg, opt);
    ctx.ambient = hs::noise::make_peterson_psd(hs::noise::load_peterson_table(ctx.peterson_path));
    ctx.cfg.peterson_table = ctx.peterson_path.string();
    if (opt.workers > 0) {
        ctx.cfg.optimize.workers = opt.workers;
        ctx.cfg.simulate.workers = opt.workers;
    }
    ctx.cfg.ai.validate();
    ctx.cfg.omrr.validate();
    return ctx;
}

void require_grid(double lo, double hi, std::size_t points, const char* section) {
    if (points == 0) throw UsageError(std::string("[") + section + "] frequency grid is empty (points = 0)");
    if (!(hi >= lo)) throw UsageError(std::string("[") + section + "] f_max must be >= f_min");
}

json noise_command(const Context& ctx, OutputSet& out) {
    const auto& c = ctx.cfg;
    require_grid(c.noise.f_min, c.noise.f_max, c.noise.points, "noise");
    const auto grid = hs::config::log_grid(c.noise.f_min, c.noise.f_max, c.noise.points);

    Table peterson({"f [Hz]", "asd [m/s^2/sqrt(Hz)]", "extrapolated [bool]"});
    Table thermal({"f [Hz]", "floor_asd [m/s^2/sqrt(Hz)]", "loss_model_asd [m/s^2/sqrt(Hz)]"});
    Table readout({"f [Hz]", "readout_asd [m/s^2/sqrt(Hz)]", "self_noise_asd [m/s^2/sqrt(Hz)]"});
    const double floor = hs::omrr::thermal_accel_floor(c.omrr);
    for (double f : grid) {
        const double w = hs::kTwoPi * f;
        const auto s = ctx.ambient.sample(f);
        peterson.add(f, std::sqrt(s.value), s.substituted ? "1" : "0");
        thermal.add(f, floor, std::sqrt(hs::omrr::thermal_accel_psd_loss_model(w, c.omrr)));
        readout.add(f, hs::omrr::readout_limited_accel_asd(w, c.omrr),
                    std::sqrt(hs::omrr::self_noise_accel_psd(w, c.omrr)));
    }
    out.write("peterson_asd.csv", peterson.str());
    out.write("omrr_thermal_asd.csv", thermal.str());
    out.write("omrr_readout_asd.csv", readout.str());
    return {{"thermal_floor_asd", floor},
            {"f0_hz", hs::config::f0_hz_of(c.omrr.omega0)},
            {"required_sigma_x", hs::omrr::required_sigma_x(c.omrr)}};
}

json optimize_command(const Context& ctx, OutputSet& out) {
    const auto& c = ctx.cfg;
    const auto& o = c.optimize;
    if (o.points == 0) throw UsageError("[optimize] bandwidth grid is empty (points = 0)");
    if (!(o.f0_max_hz > o.f0_min_hz) && o.points > 1) throw UsageError("[optimize] f0_max_hz must exceed f0_min_hz");
    auto grid = hs::config::log_grid(o.f0_min_hz, o.f0_max_hz, o.points);
    for (auto& f : grid) f *= hs::kTwoPi;

    auto base = ctx.hybrid();
    json optima = json::array();
    Table summary({"sigma_x [m/sqrt(Hz)]", "f0_opt [Hz]", "sigma_a_opt [m/s^2/sqrt(Hz)]",
                   "required_sigma_x [m/sqrt(Hz)]", "f0_grid_opt [Hz]"});
    for (double sx : o.sigma_x_list) {
        auto h = base;
        h.omrr.sigma_x = sx;
        const auto res = hs::hybrid::sweep_bandwidth(h, grid, o.workers);
        Table t({"f0 [Hz]", "sigma_a [m/s^2/sqrt(Hz)]", "required_sigma_x [m/sqrt(Hz)]"});
        for (const auto& p : res.points) t.add(p.omega0 / hs::kTwoPi, p.sigma_a, p.required_sigma_x);
        const std::string name = "sweep_sigma_x_" + tag_of(sx) + ".csv";
        out.write(name, t.str());
        summary.add(sx, res.optimum.omega0 / hs::kTwoPi, res.optimum.sigma_a, res.optimum.required_sigma_x,
                    res.grid_optimum.omega0 / hs::kTwoPi);
        optima.push_back({{"sigma_x", sx},
                          {"f0_opt_hz", res.optimum.omega0 / hs::kTwoPi},
                          {"sigma_a_opt", res.optimum.sigma_a},
                          {"required_sigma_x", res.optimum.required_sigma_x},
                          {"table", name}});
    }
    out.write("optima.csv", summary.str());
    return {{"optima", optima},
            {"qpn_asd", hs::ai::qpn_accel_asd(c.ai)},
            {"uncorrected_sigma", hs::hybrid::uncorrected_sigma(base).sigma}};
}

json spectra_command(const Context& ctx, OutputSet& out) {
    const auto& c = ctx.cfg;
    const auto& s = c.spectra;
    require_grid(s.f_min, s.f_max, s.points, "spectra");
    const auto grid = hs::config::log_grid(s.f_min, s.f_max, s.points);

    struct Curve {
        double f0_hz;
        double sigma_x;
    };
    std::vector<Curve> curves;
    if (s.mode == hs::config::SpectraMode::readout) {
        for (double sx : s.sigma_x_list) curves.push_back({hs::config::f0_hz_of(c.omrr.omega0), sx});
    } else {
        for (double f0 : s.resonances_hz) curves.push_back({f0, c.omrr.sigma_x});
    }

    json list = json::array();
    for (const auto& cv : curves) {
        auto h = ctx.hybrid();
        h.omrr.omega0 = hs::kTwoPi * cv.f0_hz;
        h.omrr.sigma_x = cv.sigma_x;
        const auto rows = hs::hybrid::hybrid_spectrum(h, grid);
        Table t({"f [Hz]", "asd [m/s^2/sqrt(Hz)]", "regime", "peterson_asd [m/s^2/sqrt(Hz)]",
                 "uncorrected_ai [m/s^2/sqrt(Hz)]", "qpn [m/s^2/sqrt(Hz)]"});
        for (const auto& r : rows) {
            t.add(r.f, r.asd, hs::hybrid::to_string(r.regime), r.peterson_asd, r.uncorrected_ai, r.qpn);
        }
        const std::string name = "spectrum_f0_" + tag_of(cv.f0_hz) + "_sigma_x_" + tag_of(cv.sigma_x) + ".csv";
        out.write(name, t.str());
        list.push_back({{"f0_hz", cv.f0_hz}, {"sigma_x", cv.sigma_x}, {"table", name}});
    }
    return {{"mode", s.mode == hs::config::SpectraMode::readout ? "readout" : "resonance"},
            {"cycle_rate_hz", c.ai.cycle_rate()},
            {"curves", list}};
}

/// Binary series dump: an ASCII header line followed by little-endian float64
/// arrays, one after another in the header's field order.
std::string series_dump(const hs::fusion::SimRun& run) {
    std::ostringstream o(std::ios::binary);
    o << "HSSERIES v1 fields=a_true,z_true,z_meas units=m/s^2,m,m fs=" << hs::format_double(run.fs)
      << " length=" << run.a_true.size() << " dtype=float64le\n";
    for (const auto* v : {&run.a_true, &run.z_true, &run.z_meas}) {
        o.write(reinterpret_cast<const char*>(v->data()), static_cast<std::streamsize>(v->size() * sizeof(double)));
    }
    return o.str();
}

json simulate_command(const Context& ctx, OutputSet& out, const Options& opt) {
    const auto& s = ctx.cfg.simulate;
    if (s.n_cycles == 0) throw UsageError("[simulate] n_cycles must be positive");
    hs::fusion::SimConfig sc(ctx.hybrid());
    sc.fs = s.fs;
    sc.n_cycles = s.n_cycles;
    sc.seed = s.seed;
    sc.correction = s.correction;
    sc.thermal_noise = s.thermal_noise;
    sc.projection_noise = s.projection_noise;
    sc.debias_cycles = s.debias_cycles;
    sc.omrr_bias = s.omrr_bias;
    sc.workers = s.workers;
    try {
        sc.validate();
    } catch (const hs::ConfigError& e) {
        throw UsageError(e.what());
    }
    const auto run = hs::fusion::run_cycles(sc);

    Table cycles({"cycle", "t0 [s]", "phi_true [rad]", "phi_est [rad]", "phi_residual [rad]", "phi_measured [rad]",
                  "population [fraction]", "accel_corrected [m/s^2]", "bias_estimate [m/s^2]"});
    for (const auto& r : run.cycles) {
        cycles.add(r.index, r.t0, r.phi_true, r.phi_est, r.phi_residual, r.phi_measured, r.population,
                   r.accel_corrected, r.bias_estimate);
    }
    Table adev({"tau [s]", "adev [m/s^2]", "terms"});
    for (const auto& p : run.adev) adev.add(p.tau, p.deviation, p.terms);
    out.write("cycles.csv", cycles.str());
    out.write("adev.csv", adev.str());
    if (s.dump_series || opt.dump_series) out.write("series.bin", series_dump(run), true);

    const double pred = hs::hybrid::hybrid_sigma(sc.hybrid).sigma * std::sqrt(sc.hybrid.tau / sc.hybrid.ai.T_c);
    return {{"seed", s.seed},
            {"n_cycles", s.n_cycles},
            {"uncorrected_std", run.stats.uncorrected_std},
            {"residual_std", run.stats.residual_std},
            {"corrected_std", run.stats.corrected_std},
            {"predicted_std", pred},
            {"ambient_band_extrapolated", run.ambient_band_substituted}};
}

std::string plot_script(const std::string& command, const std::vector<std::string>& files) {
    std::ostringstream o;
    o << "#!/usr/bin/env python3\n"
         "# Plots the tables written by `hybridsense "
      << command
      << "`. Needs pandas and matplotlib.\n"
         "import pathlib\n"
         "import matplotlib.pyplot as plt\n"
         "import pandas as pd\n\n"
         "here = pathlib.Path(__file__).resolve().parent\n"
         "tables = [";
    bool first = true;
    for (const auto& f : files) {
        if (f.size() < 4 || f.substr(f.size() - 4) != ".csv") continue;
        o << (first ? "" : ", ") << '"' << f << '"';
        first = false;
    }
    o << "]\n\n"
         "for name in tables:\n"
         "    df = pd.read_csv(here / name)\n"
         "    x = df.columns[0]\n"
         "    ys = [c for c in df.columns[1:] if pd.api.types.is_numeric_dtype(df[c]) and '[' in c]\n"
         "    if not ys:\n"
         "        continue\n"
         "    fig, ax = plt.subplots()\n"
         "    for c in ys:\n"
         "        ax.plot(df[x], df[c].abs(), label=c)\n"
         "    if (df[x] > 0).all() and x.startswith(('f', 'tau')):\n"
         "        ax.set_xscale('log')\n"
         "        ax.set_yscale('log')\n"
         "    ax.set_xlabel(x)\n"
         "    ax.set_title(name)\n"
         "    ax.legend(fontsize='small')\n"
         "    fig.savefig(here / (name[:-4] + '.png'), dpi=150)\n"
         "    plt.close(fig)\n";
    return o.str();
}

int run_command(const std::string& command, const Options& opt) {
    const auto started = std::chrono::steady_clock::now();
    const fs::path dir(opt.out_dir);
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) {
        std::cerr << "hybridsense: cannot create output directory '" << dir.string() << "': " << ec.message() << '\n';
        return 1;
    }
    OutputSet out(dir);
    try {
        Context ctx = load_context(opt);
        if (opt.seed_given) ctx.cfg.simulate.seed = opt.seed;

        json summary;
        if (command == "noise") summary = noise_command(ctx, out);
        else if (command == "optimize") summary = optimize_command(ctx, out);
        else if (command == "spectra") summary = spectra_command(ctx, out);
        else summary = simulate_command(ctx, out, opt);

        out.write("summary.json", summary.dump(2) + "\n");
        out.write("resolved_config.ini", hs::config::to_ini(ctx.cfg));
        if (opt.emit_plot_script) out.write("plot.py", plot_script(command, out.names()));

        const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
        json manifest{{"tool", "hybridsense"},
                      {"version", HYBRIDSENSE_VERSION},
                      {"command", command},
                      {"seed", command == "simulate" ? json(ctx.cfg.simulate.seed) : json(nullptr)},
                      {"peterson_table", ctx.peterson_path.string()},
                      {"config", hs::config::to_ini(ctx.cfg)},
                      {"outputs", out.names()},
                      {"wall_seconds", wall}};
        out.write("manifest.json", manifest.dump(2) + "\n");
        return 0;
    } catch (const UsageError& e) {
        out.remove_all();
        std::cerr << "hybridsense " << command << ": usage error: " << e.what() << '\n';
        return 2;
    } catch (const hs::ConfigError& e) {
        out.remove_all();
        std::cerr << "hybridsense " << command << ": config error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        out.remove_all();
        std::cerr << "hybridsense " << command << ": error: " << e.what() << '\n';
        return 1;
    }
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Hybrid atom-interferometer / optomechanical accelerometer analysis"};
    app.set_version_flag("--version", std::string(HYBRIDSENSE_VERSION));
    app.require_subcommand(1);

    Options opt;
    const auto common = [&](CLI::App* sub) {
        sub->add_option("--config", opt.config_path, "INI configuration file")->check(CLI::ExistingFile);
        sub->add_option("--out", opt.out_dir, "output directory (created if missing)");
        sub->add_flag("--emit-plot-script", opt.emit_plot_script, "also write plot.py for the emitted tables");
        sub->add_option("--workers", opt.workers, "worker threads (overrides the config)")->check(CLI::PositiveNumber);
    };
    auto* noise = app.add_subcommand("noise", "Peterson and OMRR noise curves");
    auto* optimize = app.add_subcommand("optimize", "OMRR bandwidth sweep and optimum");
    auto* spectra = app.add_subcommand("spectra", "hybrid sensor spectral densities");
    auto* simulate = app.add_subcommand("simulate", "time-domain fusion simulation");
    for (auto* sub : {noise, optimize, spectra, simulate}) common(sub);
    simulate->add_option("--seed", opt.seed, "run seed (overrides the config)");
    simulate->add_flag("--dump-series", opt.dump_series, "write the time series to series.bin");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 2;
    }
    opt.seed_given = simulate->count("--seed") > 0;
    const auto* chosen = app.get_subcommands().front();
    return run_command(chosen->get_name(), opt);
}
