#pragma once

// Command registry, configuration parsing and the per-command drivers behind tools/rattle.

#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <map>
#include <numbers>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "rattle/coeff.hpp"
#include "rattle/error.hpp"
#include "rattle/green.hpp"
#include "rattle/io.hpp"
#include "rattle/lattice1d.hpp"
#include "rattle/lattice2d.hpp"
#include "rattle/rattling.hpp"
#include "rattle/relay.hpp"
#include "rattle/slowfast.hpp"
#include "rattle/transverse.hpp"

namespace rattle::cli {

namespace fs = std::filesystem;

inline constexpr const char* kOutputEnv = "RATTLE_OUTPUT_DIR";
inline constexpr const char* kDefaultOutput = "rattle-out";

enum class Kind { Real, Integer, Text, RealList };

struct OptionSpec {
    std::string key;
    Kind kind;
    std::string default_value;  ///< empty: unset
    std::string help;
};

struct CommandSpec {
    std::string name;
    std::string help;
    std::string columns;        ///< CSV outputs, shown in --help
    std::vector<OptionSpec> options;
};

inline const std::vector<CommandSpec>& command_specs() {
    static const std::vector<CommandSpec> specs = {
        {"relay", "Run a relay operator over a piecewise-linear input",
         "relay.csv: t,u,v,xi",
         {{"in", Kind::Text, "", "input CSV with columns t,u"},
          {"alpha", Kind::Text, "", "lower threshold (empty: none)"},
          {"beta", Kind::Real, "1", "upper threshold"},
          {"xi0", Kind::Integer, "1", "initial configuration (+1 or -1)"},
          {"h1", Kind::Real, "1", "output on the +1 branch"},
          {"hm1", Kind::Real, "-1", "output on the -1 branch"},
          {"mode", Kind::Text, "nonideal", "nonideal | alt"}}},
        {"green", "Tabulate the discrete Green function and its similarity profile",
         "green.csv: n,t,y,y_asymptotic,abs_err",
         {{"n-max", Kind::Integer, "20", "largest |n|"}, {"times", Kind::RealList, "1,10,100", "comma-separated times"}}},
        {"solve-a", "Solve for the rattling coefficient a",
         "solve_a.csv: c,h1,a,residual,bracket_lo,bracket_hi",
         {{"c", Kind::Real, "0.5", "curvature of the initial data"}, {"h1", Kind::Real, "2", "branch value h1"}}},
        {"verify", "Simulate and check |t_n - a n^2| <= E sqrt(n) for n <= n0",
         "hypothesis.csv: n,t_n,q_n,q_over_sqrt_n",
         {{"c", Kind::Real, "0.5", "curvature"},
          {"h1", Kind::Real, "2", "branch value h1"},
          {"n0", Kind::Integer, "40", "last node checked"},
          {"E", Kind::Real, "1", "bound constant"},
          {"N", Kind::Integer, "", "window half-width (default 2 n0 + 20)"}}},
        {"simulate1d", "Event-driven simulation of the 1-D relay lattice",
         "switches.csv: n,x,t_n,t_eps,q_n; snapshots.csv: t,n,u,xi",
         {{"c", Kind::Real, "0.5", "curvature"},
          {"h1", Kind::Real, "2", "branch value h1"},
          {"hm1", Kind::Real, "0", "branch value h_-1"},
          {"N", Kind::Integer, "120", "window half-width"},
          {"T", Kind::Real, "1000", "horizon"},
          {"eps", Kind::Real, "1", "grid step for the rescaled output"},
          {"snapshots", Kind::RealList, "", "snapshot times (default: 5 evenly spaced)"},
          {"perturb", Kind::Real, "0", "amplitude A of the perturbation -A sin^2(n)"},
          {"svg", Kind::Integer, "1", "write profile.svg (0 or 1)"}}},
        {"simulate2d", "Relay lattice on the square or triangular grid",
         "switch_map.csv: node,i,j,x,y,ring,switch_time",
         {{"lattice", Kind::Text, "square", "square | triangular"},
          {"radius", Kind::Integer, "60", "graph-ball radius"},
          {"c", Kind::Real, "0.5", "curvature"},
          {"h1", Kind::Real, "3", "branch value h1"},
          {"hm1", Kind::Real, "-3", "branch value h_-1"},
          {"T", Kind::Real, "320", "horizon"},
          {"laplacian-scale", Kind::Real, "1", "edge weight of the graph Laplacian"}}},
        {"slowfast", "Method-of-lines run of the slow-fast system",
         "slowfast.csv: t,x,u,v,branch,defect",
         {{"delta", Kind::Real, "0.001", "fast time scale"},
          {"c", Kind::Real, "0.25", "curvature"},
          {"L", Kind::Real, "8", "half-length of the domain"},
          {"dx", Kind::Real, "0.02", "grid spacing"},
          {"T", Kind::Real, "10", "horizon"},
          {"g", Kind::Text, "rattling", "rattling | fhn"},
          {"snapshots", Kind::RealList, "", "snapshot times (default: T/4, T/2, T)"},
          {"implicit", Kind::Integer, "0", "implicit diffusion (0 or 1)"}}},
        {"transverse", "Fixed-point solve of the 1-D transverse free boundary",
         "boundary.csv: t,b,a; u_snapshots.csv: t,x,u; iterations.csv: iteration,residual",
         {{"phi", Kind::Text, "", "CSV with columns x,phi (default beta + 0.2/pi cos(pi x))"},
          {"bbar", Kind::Real, "0.5", "initial discontinuity point"},
          {"beta", Kind::Real, "0", "upper threshold"},
          {"h1", Kind::Real, "1", "forcing right of b"},
          {"hm1", Kind::Real, "0", "forcing left of b"},
          {"T", Kind::Real, "0.02", "horizon"},
          {"cells", Kind::Integer, "2000", "grid cells"},
          {"steps", Kind::Integer, "200", "time steps"},
          {"tol-fp", Kind::Real, "1e-8", "fixed-point tolerance"},
          {"max-iter", Kind::Integer, "200", "iteration cap per horizon"}}},
        {"analyze", "Rattling statistics from simulate1d output",
         "q.csv: n,t_n,q_n; weak_limit.csv: n,average,reference; report.txt",
         {{"in", Kind::Text, "", "switches.csv from simulate1d"},
          {"traj", Kind::Text, "", "snapshots.csv from simulate1d (optional)"},
          {"a", Kind::Real, "", "coefficient (default: least-squares fit)"},
          {"window", Kind::Integer, "9", "moving-average width"},
          {"n-min", Kind::Integer, "10", "first node of the fit"}}},
        {"reproduce", "Regenerate a figure bundle", "see the figure's CSV headers",
         {{"figure", Kind::Text, "", "fig7 | fig8 | fig9 | fig10"}}},
    };
    return specs;
}

inline const CommandSpec& command_spec(const std::string& name) {
    for (const auto& c : command_specs())
        if (c.name == name) return c;
    throw validation_error("UnknownCommand", "unknown command '" + name + "'");
}

struct RunConfig {
    std::string command;
    std::map<std::string, std::string> params;
    fs::path output_dir = kDefaultOutput;

    bool has(const std::string& key) const {
        const auto it = params.find(key);
        return it != params.end() && !it->second.empty();
    }
    const std::string& text(const std::string& key) const {
        const auto it = params.find(key);
        if (it == params.end()) throw validation_error("UnknownKey", "no parameter '" + key + "' for " + command);
        return it->second;
    }
    double real(const std::string& key) const {
        const std::string& s = text(key);
        try {
            std::size_t pos = 0;
            const double v = std::stod(s, &pos);
            if (pos == s.size()) return v;
        } catch (const std::exception&) {
        }
        throw validation_error("InvalidValue", "key '" + key + "': expected a real number, got '" + s + "'");
    }
    long integer(const std::string& key) const {
        const std::string& s = text(key);
        try {
            std::size_t pos = 0;
            const long v = std::stol(s, &pos);
            if (pos == s.size()) return v;
        } catch (const std::exception&) {
        }
        throw validation_error("InvalidValue", "key '" + key + "': expected an integer, got '" + s + "'");
    }
    std::vector<double> reals(const std::string& key) const {
        std::vector<double> out;
        std::stringstream ss(text(key));
        std::string item;
        while (std::getline(ss, item, ',')) {
            try {
                std::size_t pos = 0;
                out.push_back(std::stod(item, &pos));
                if (pos != item.size()) throw std::invalid_argument(item);
            } catch (const std::exception&) {
                throw validation_error("InvalidValue", "key '" + key + "': bad list entry '" + item + "'");
            }
        }
        return out;
    }
    bool operator==(const RunConfig&) const = default;
};

/// Raised by parse_config when --help was requested; what() is the help text.
class HelpRequested : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Flags override values read from --config; the output directory is taken from
/// RATTLE_OUTPUT_DIR when that variable is set.
inline RunConfig parse_config(const std::vector<std::string>& args) {
    CLI::App app{"Relay hysteresis lattices, rattling and free boundaries", "rattle"};
    app.set_config("--config", "", "INI file with a [command] section");
    app.allow_config_extras(CLI::config_extras_mode::error);
    app.require_subcommand(1, 1);
    app.fallthrough();
    std::string out_dir = kDefaultOutput;
    app.add_option("--out", out_dir, "output directory")->capture_default_str();

    std::map<std::string, std::map<std::string, std::string>> storage;
    std::map<std::string, CLI::App*> subs;
    for (const auto& spec : command_specs()) {
        CLI::App* sub = app.add_subcommand(spec.name, spec.help);
        sub->configurable();
        sub->footer("CSV output: " + spec.columns);
        auto& store = storage[spec.name];
        for (const auto& o : spec.options) {
            store[o.key] = o.default_value;
            CLI::Option* opt = sub->add_option("--" + o.key, store[o.key], o.help);
            if (!o.default_value.empty()) opt->capture_default_str();
            if (o.kind == Kind::Real || o.kind == Kind::Integer) opt->check(CLI::Number);
        }
        subs[spec.name] = sub;
    }

    std::vector<const char*> argv{"rattle"};
    for (const auto& a : args) argv.push_back(a.c_str());
    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::CallForHelp&) {
        throw HelpRequested(app.help());
    } catch (const CLI::CallForAllHelp&) {
        throw HelpRequested(app.help("", CLI::AppFormatMode::All));
    } catch (const CLI::ParseError& e) {
        // --help on a subcommand surfaces as CallForHelp from the subcommand parser
        for (const auto& [name, sub] : subs)
            if (sub->parsed() && std::string(e.what()).empty()) throw HelpRequested(sub->help());
        throw validation_error("InvalidArguments", e.what());
    }

    RunConfig cfg;
    for (const auto& [name, sub] : subs) {
        if (!sub->parsed()) continue;
        cfg.command = name;
        cfg.params = storage[name];
    }
    cfg.output_dir = out_dir;
    if (const char* env = std::getenv(kOutputEnv); env != nullptr && *env != '\0') cfg.output_dir = env;
    return cfg;
}

/// INI text that parse_config reads back into the same RunConfig.
inline std::string serialize(const RunConfig& cfg) {
    std::ostringstream os;
    os << "out=\"" << cfg.output_dir.string() << "\"\n[" << cfg.command << "]\n";
    for (const auto& [k, v] : cfg.params) os << k << "=\"" << v << "\"\n";
    return os.str();
}

namespace detail {

inline Error key_error(const std::string& key, const std::string& what) {
    return validation_error("InvalidValue", "key '" + key + "': " + what);
}

inline void require(bool ok, const std::string& key, const std::string& what) {
    if (!ok) throw key_error(key, what);
}

} // namespace detail

/// Checks every parameter against the owning module's preconditions.
inline void validate(const RunConfig& cfg) {
    const CommandSpec& spec = command_spec(cfg.command);
    for (const auto& [k, v] : cfg.params) {
        const auto it = std::find_if(spec.options.begin(), spec.options.end(), [&](const auto& o) { return o.key == k; });
        if (it == spec.options.end()) throw validation_error("UnknownKey", "unknown key '" + k + "' for " + cfg.command);
        if (v.empty()) continue;
        switch (it->kind) {
        case Kind::Real: (void)cfg.real(k); break;
        case Kind::Integer: (void)cfg.integer(k); break;
        case Kind::RealList: (void)cfg.reals(k); break;
        case Kind::Text: break;
        }
    }
    using detail::require;
    const std::string& c = cfg.command;
    if (c == "relay") {
        require(cfg.has("in"), "in", "an input CSV is required");
        require(cfg.integer("xi0") == 1 || cfg.integer("xi0") == -1, "xi0", "must be +1 or -1");
        require(!cfg.has("alpha") || cfg.real("alpha") < cfg.real("beta"), "alpha", "requires alpha < beta");
        require(cfg.text("mode") == "nonideal" || cfg.text("mode") == "alt", "mode", "must be nonideal or alt");
    } else if (c == "green") {
        require(cfg.integer("n-max") >= 0 && cfg.integer("n-max") <= green::kMaxIndex, "n-max", "must lie in [0, 1e6]");
        for (double t : cfg.reals("times")) require(t >= 0.0 && t <= green::kMaxTime, "times", "need 0 <= t <= 1e6");
    } else if (c == "solve-a" || c == "verify") {
        require(cfg.real("c") > 0.0, "c", "requires c > 0");
        require(cfg.real("h1") > 2.0 * cfg.real("c"), "h1", "requires h1 > 2c");
        if (c == "verify") {
            require(cfg.integer("n0") >= 0, "n0", "must be >= 0");
            require(cfg.real("E") > 0.0, "E", "must be positive");
            require(!cfg.has("N") || cfg.integer("N") >= std::max<long>(10, cfg.integer("n0") + 5), "N",
                    "must be >= max(10, n0 + 5)");
        }
    } else if (c == "simulate1d") {
        require(cfg.real("c") > 0.0, "c", "requires c > 0");
        require(cfg.real("hm1") <= 0.0 && cfg.real("h1") >= 0.0, "h1", "requires h_m1 <= 0 <= h1");
        require(cfg.integer("N") >= 10, "N", "must be >= 10");
        require(cfg.real("T") > 0.0, "T", "must be positive");
        require(cfg.real("eps") > 0.0, "eps", "must be positive");
        require(cfg.real("perturb") >= 0.0, "perturb", "amplitude must be >= 0");
        if (cfg.has("snapshots"))
            for (double t : cfg.reals("snapshots")) require(t >= 0.0 && t <= cfg.real("T"), "snapshots", "need 0 <= t <= T");
    } else if (c == "simulate2d") {
        (void)lattice2d::parse_kind(cfg.text("lattice"));
        require(cfg.integer("radius") >= 0, "radius", "must be >= 0");
        require(cfg.real("c") > 0.0, "c", "requires c > 0");
        require(cfg.real("hm1") <= 0.0 && cfg.real("h1") >= 0.0, "h1", "requires h_m1 <= 0 <= h1");
        require(cfg.real("T") > 0.0, "T", "must be positive");
        require(cfg.real("laplacian-scale") > 0.0, "laplacian-scale", "must be positive");
    } else if (c == "slowfast") {
        require(cfg.real("delta") > 0.0, "delta", "must be positive");
        require(cfg.real("c") > 0.0, "c", "must be positive");
        require(cfg.real("L") > 0.0, "L", "must be positive");
        require(cfg.real("dx") > 0.0 && cfg.real("dx") <= cfg.real("L"), "dx", "need 0 < dx <= L");
        require(cfg.real("T") > 0.0, "T", "must be positive");
        require(cfg.text("g") == "rattling" || cfg.text("g") == "fhn", "g", "must be rattling or fhn");
        require(cfg.integer("implicit") == 0 || cfg.integer("implicit") == 1, "implicit", "must be 0 or 1");
        if (cfg.has("snapshots"))
            for (double t : cfg.reals("snapshots")) require(t >= 0.0 && t <= cfg.real("T"), "snapshots", "need 0 <= t <= T");
    } else if (c == "transverse") {
        require(cfg.real("bbar") > 0.0 && cfg.real("bbar") < 1.0, "bbar", "must lie in (0, 1)");
        require(cfg.real("T") > 0.0, "T", "must be positive");
        require(cfg.integer("cells") >= 8, "cells", "must be >= 8");
        require(cfg.integer("steps") >= 1, "steps", "must be >= 1");
        require(cfg.real("tol-fp") > 0.0, "tol-fp", "must be positive");
        require(cfg.integer("max-iter") >= 1, "max-iter", "must be >= 1");
    } else if (c == "analyze") {
        require(cfg.has("in"), "in", "switches.csv is required");
        require(cfg.integer("window") >= 1, "window", "must be >= 1");
        require(!cfg.has("a") || cfg.real("a") > 0.0, "a", "must be positive");
    } else if (c == "reproduce") {
        const std::string& f = cfg.text("figure");
        require(f == "fig7" || f == "fig8" || f == "fig9" || f == "fig10", "figure", "must be fig7, fig8, fig9 or fig10");
    }
}

namespace detail {

inline io::CsvTable table(const RunConfig& cfg, std::vector<std::string> header) {
    io::CsvTable t;
    t.meta.emplace_back("command", cfg.command);
    for (const auto& [k, v] : cfg.params) t.meta.emplace_back(k, v.empty() ? "(default)" : v);
    t.header = std::move(header);
    return t;
}

inline std::vector<double> default_times(double T, int count) {
    std::vector<double> out;
    for (int k = 1; k <= count; ++k) out.push_back(T * k / count);
    return out;
}

inline double q_of(double t, long n, std::optional<double> a) {
    if (!a || !std::isfinite(t)) return NAN;
    return t - *a * static_cast<double>(n) * static_cast<double>(n);
}

inline std::string profile_svg(const lattice1d::Trajectory& traj, const std::string& title) {
    static const char* colors[] = {"#1b5e20", "#0d47a1", "#b71c1c", "#4a148c", "#e65100", "#006064"};
    std::vector<io::Series> series;
    for (std::size_t k = 0; k < traj.times.size(); ++k) {
        io::Series s{"t=" + io::fmt(traj.times[k]), colors[k % 6], {}};
        for (long n = -traj.N; n <= traj.N; ++n)
            s.points.emplace_back(traj.spacing * static_cast<double>(n), traj.value(n, k));
        series.push_back(std::move(s));
    }
    return io::line_plot(series, title);
}

inline std::vector<std::string> written;

inline void emit_csv(const fs::path& p, const io::CsvTable& t) {
    io::write_csv(p, t);
    written.push_back(p.string());
}
inline void emit_text(const fs::path& p, const std::string& s) {
    io::write_text(p, s);
    written.push_back(p.string());
}

} // namespace detail

inline int run_relay(const RunConfig& cfg, std::ostream& log) {
    const io::CsvTable in = io::read_csv(cfg.text("in"));
    const std::size_t ct = io::column(in, "t"), cu = io::column(in, "u");
    std::vector<double> ts, us;
    for (const auto& row : in.rows) ts.push_back(io::parse_double(row[ct])), us.push_back(io::parse_double(row[cu]));
    const relay::Signal input(ts, us);
    std::optional<double> alpha;
    if (cfg.has("alpha")) alpha = cfg.real("alpha");
    const auto params = relay::RelayParams::constant(alpha, cfg.real("beta"), cfg.real("h1"), cfg.real("hm1"));
    const int xi0 = static_cast<int>(cfg.integer("xi0"));

    auto t = detail::table(cfg, {"t", "u", "v", "xi"});
    if (cfg.text("mode") == "alt") {
        const relay::Signal out = relay::alt_relay_trace(params, xi0, input);
        for (std::size_t i = 0; i < out.times().size(); ++i) {
            const double v = out.value(i);
            t.add(out.time(i), input.at(out.time(i)), v, v >= 1.0 ? 1 : (v <= -1.0 ? -1 : 0));
        }
    } else {
        const auto state = relay::relay_init(params, xi0, us.front(), ts.front());
        const auto tr = relay::relay_trace(params, state, input);
        for (std::size_t i = 0; i < tr.output.times().size(); ++i)
            t.add(tr.output.time(i), input.at(tr.output.time(i)), tr.output.value(i), tr.xi[i]);
        log << "switches: " << tr.switch_times.size() << '\n';
    }
    detail::emit_csv(cfg.output_dir / "relay.csv", t);
    return 0;
}

inline int run_green(const RunConfig& cfg, std::ostream& log) {
    auto t = detail::table(cfg, {"n", "t", "y", "y_asymptotic", "abs_err"});
    t.meta.emplace_back("tol_green", io::fmt(green::kTolGreen));
    for (double time : cfg.reals("times"))
        for (long n = 0; n <= cfg.integer("n-max"); ++n) {
            const double y = green::green_y_checked(n, time);
            const double ya = time > 0.0 ? green::green_asymptotic(n, time) : 0.0;
            t.add(n, time, y, ya, std::abs(y - ya));
        }
    detail::emit_csv(cfg.output_dir / "green.csv", t);
    log << "rows: " << t.rows.size() << '\n';
    return 0;
}

inline int run_solve_a(const RunConfig& cfg, std::ostream& log) {
    const auto r = coeff::solve_a(cfg.real("c"), cfg.real("h1"));
    log << "a = " << io::fmt(r.a) << "\nresidual = " << io::fmt(r.residual) << '\n';
    auto t = detail::table(cfg, {"c", "h1", "a", "residual", "bracket_lo", "bracket_hi"});
    t.add(r.c, r.h1, r.a, r.residual, r.bracket.first, r.bracket.second);
    detail::emit_csv(cfg.output_dir / "solve_a.csv", t);
    return 0;
}

inline int run_verify(const RunConfig& cfg, std::ostream& log) {
    const double c = cfg.real("c"), h1 = cfg.real("h1"), E = cfg.real("E");
    const long n0 = cfg.integer("n0");
    const auto co = coeff::solve_a(c, h1);
    lattice1d::LatticeConfig lc;
    lc.c = c;
    lc.h1 = h1;
    lc.N = cfg.has("N") ? cfg.integer("N") : 2 * n0 + 20;
    const double nn = static_cast<double>(n0);
    lc.T = co.a * nn * nn + 3.0 * std::max(E, 1.0) * std::sqrt(nn) + 10.0;
    const auto sim = lattice1d::simulate(lc);
    const auto rep = coeff::verify_hypothesis(c, h1, co.a, E, n0, sim.log);
    auto t = detail::table(cfg, {"n", "t_n", "q_n", "q_over_sqrt_n"});
    t.meta.emplace_back("a", io::fmt(co.a));
    t.meta.emplace_back("T", io::fmt(lc.T));
    for (std::size_t i = 0; i < rep.records.size(); ++i) {
        const long n = rep.records[i].n;
        t.add(n, rep.records[i].t_switch, rep.q[i], n > 0 ? std::abs(rep.q[i]) / std::sqrt(static_cast<double>(n)) : 0.0);
    }
    detail::emit_csv(cfg.output_dir / "hypothesis.csv", t);
    std::ostringstream rs;
    rs << "a = " << io::fmt(co.a) << "\nE = " << io::fmt(E) << "\nn0 = " << n0 << "\nverdict = "
       << (rep.verdict ? "true" : "false") << "\nmax_normalized_residual = " << io::fmt(rep.max_normalized_residual)
       << "\nE_min = " << io::fmt(rep.E_min) << '\n';
    detail::emit_text(cfg.output_dir / "hypothesis.txt", rs.str());
    log << rs.str();
    return 0;
}

inline lattice1d::LatticeConfig lattice_from(const RunConfig& cfg) {
    lattice1d::LatticeConfig lc;
    lc.c = cfg.real("c");
    lc.h1 = cfg.real("h1");
    lc.h_m1 = cfg.real("hm1");
    lc.N = cfg.integer("N");
    lc.T = cfg.real("T");
    lc.sample_times = cfg.has("snapshots") ? cfg.reals("snapshots") : detail::default_times(lc.T, 5);
    lc.sample_times.insert(lc.sample_times.begin(), 0.0);
    std::sort(lc.sample_times.begin(), lc.sample_times.end());
    lc.sample_times.erase(std::unique(lc.sample_times.begin(), lc.sample_times.end()), lc.sample_times.end());
    const double amp = cfg.real("perturb");
    if (amp > 0.0) {
        lc.perturb.resize(static_cast<std::size_t>(lc.N + 1));
        for (long n = 0; n <= lc.N; ++n) {
            const double s = std::sin(static_cast<double>(n));
            lc.perturb[static_cast<std::size_t>(n)] = -amp * s * s;
        }
    }
    return lc;
}

inline int run_simulate1d(const RunConfig& cfg, std::ostream& log) {
    const auto lc = lattice_from(cfg);
    const auto sim = lattice1d::simulate(lc);
    const double eps = cfg.real("eps");
    std::optional<double> a;
    if (lc.h1 > 2.0 * lc.c) a = coeff::solve_a(lc.c, lc.h1).a;

    auto sw = detail::table(cfg, {"n", "x", "t_n", "t_eps", "q_n"});
    sw.meta.emplace_back("a", a ? io::fmt(*a) : "none");
    sw.meta.emplace_back("tol_event", io::fmt(lc.tol_event));
    sw.meta.emplace_back("tol_touch", io::fmt(lc.touch()));
    sw.meta.emplace_back("boundary_margin", io::fmt(lc.margin()));
    long switched = 0;
    for (const auto& r : sim.log.records) {
        sw.add(r.n, eps * static_cast<double>(r.n), r.t_switch, eps * eps * r.t_switch, detail::q_of(r.t_switch, r.n, a));
        switched += r.switched();
    }
    detail::emit_csv(cfg.output_dir / "switches.csv", sw);

    const auto traj = lattice1d::rescale(eps, sim.trajectory);
    auto sn = detail::table(cfg, {"t", "n", "u", "xi"});
    for (std::size_t k = 0; k < traj.times.size(); ++k)
        for (long n = -traj.N; n <= traj.N; ++n) sn.add(traj.times[k], n, traj.value(n, k), traj.config(n, k));
    detail::emit_csv(cfg.output_dir / "snapshots.csv", sn);
    if (cfg.integer("svg") != 0) detail::emit_text(cfg.output_dir / "profile.svg", detail::profile_svg(traj, "u profiles"));
    log << "switched nodes: " << switched << " of " << sim.log.records.size() << "\nsteps: " << sim.steps << '\n';
    return 0;
}

inline lattice2d::Config2D lattice2d_from(const RunConfig& cfg) {
    lattice2d::Config2D c2;
    c2.kind = lattice2d::parse_kind(cfg.text("lattice"));
    c2.radius = cfg.integer("radius");
    c2.c = cfg.real("c");
    c2.h1 = cfg.real("h1");
    c2.h_m1 = cfg.real("hm1");
    c2.T = cfg.real("T");
    c2.laplacian_scale = cfg.real("laplacian-scale");
    return c2;
}

inline void write_switch_map(const RunConfig& cfg, const lattice2d::Grid2D& g, const std::string& stem) {
    auto t = detail::table(cfg, {"node", "i", "j", "x", "y", "ring", "switch_time"});
    for (std::size_t i = 0; i < g.size(); ++i)
        t.add(i, g.coords[i][0], g.coords[i][1], g.positions[i].first, g.positions[i].second, g.rings[i], g.switch_time[i]);
    detail::emit_csv(cfg.output_dir / (stem + ".csv"), t);
    detail::emit_text(cfg.output_dir / (stem + ".svg"), lattice2d::render_switch_map(g, g.horizon));
}

inline int run_simulate2d(const RunConfig& cfg, std::ostream& log) {
    const auto g = lattice2d::simulate2d(lattice2d_from(cfg));
    write_switch_map(cfg, g, "switch_map");
    long sw = 0;
    int reach = 0;
    for (std::size_t i = 0; i < g.size(); ++i)
        if (g.switched_by(i, g.horizon)) ++sw, reach = std::max(reach, g.rings[i]);
    log << "nodes: " << g.size() << "\nswitched: " << sw << "\noutermost switched ring: " << reach << '\n';
    return 0;
}

inline slowfast::SlowFastConfig slowfast_from(const RunConfig& cfg) {
    slowfast::SlowFastConfig sc;
    sc.delta = cfg.real("delta");
    sc.c = cfg.real("c");
    sc.L = cfg.real("L");
    sc.dx = cfg.real("dx");
    sc.T = cfg.real("T");
    sc.g = cfg.text("g") == "fhn" ? slowfast::fitzhugh_nagumo() : slowfast::rattling_cubic(0.0);
    sc.implicit = cfg.integer("implicit") != 0;
    if (sc.implicit) sc.dt = 0.5 * sc.dx;
    sc.snapshot_times = cfg.has("snapshots") ? cfg.reals("snapshots") : std::vector<double>{sc.T / 4, sc.T / 2, sc.T};
    return sc;
}

inline std::string slowfast_svg(const slowfast::SlowFastResult& r, const std::string& title) {
    static const char* colors[] = {"#0d47a1", "#b71c1c", "#1b5e20", "#4a148c"};
    std::vector<io::Series> us, vs;
    for (std::size_t k = 0; k < r.snapshots.size(); ++k) {
        io::Series su{"u, t=" + io::fmt(r.snapshots[k].t), colors[k % 4], {}};
        io::Series sv{"v, t=" + io::fmt(r.snapshots[k].t), colors[k % 4], {}};
        for (std::size_t i = 0; i < r.x.size(); ++i) {
            su.points.emplace_back(r.x[i], r.snapshots[k].u[i]);
            sv.points.emplace_back(r.x[i], r.snapshots[k].v[i]);
        }
        us.push_back(std::move(su));
        vs.push_back(std::move(sv));
    }
    // stack the two plots: v on top, u below
    std::string top = io::line_plot(vs, title + ": v"), bottom = io::line_plot(us, title + ": u");
    const auto strip = [](const std::string& s) {
        const auto b = s.find('>') + 1;
        return s.substr(b, s.rfind("</svg>") - b);
    };
    return "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"720.00\" height=\"720.00\" viewBox=\"0 0 720 720\">\n"
           "<g>" + strip(top) + "</g>\n<g transform=\"translate(0,360)\">" + strip(bottom) + "</g>\n</svg>\n";
}

inline int run_slowfast(const RunConfig& cfg, std::ostream& log) {
    const auto sc = slowfast_from(cfg);
    const auto r = slowfast::simulate_slowfast(sc);
    auto t = detail::table(cfg, {"t", "x", "u", "v", "branch", "defect"});
    t.meta.emplace_back("dt", io::fmt(sc.step()));
    t.meta.emplace_back("fast_substeps", io::fmt(r.fast_substeps));
    for (const auto& s : r.snapshots) {
        const auto b = slowfast::branch_classify(sc.g, r.x, s.u, s.v);
        for (std::size_t i = 0; i < r.x.size(); ++i)
            t.add(s.t, r.x[i], s.u[i], s.v[i], static_cast<int>(b.label[i]), b.defect[i]);
        log << "t=" << io::fmt(s.t) << " on_branch=" << io::fmt(b.on_branch_fraction)
            << " median_interval=" << io::fmt(b.median_run) << " intervals=" << b.run_lengths.size() << '\n';
    }
    detail::emit_csv(cfg.output_dir / "slowfast.csv", t);
    detail::emit_text(cfg.output_dir / "slowfast.svg", slowfast_svg(r, "delta=" + io::fmt(sc.delta)));
    return 0;
}

inline transverse::TransverseProblem transverse_from(const RunConfig& cfg) {
    const double beta = cfg.real("beta");
    const auto cells = static_cast<std::size_t>(cfg.integer("cells"));
    std::function<double(double)> phi = [beta](double x) { return beta + 0.2 / std::numbers::pi * std::cos(std::numbers::pi * x); };
    if (cfg.has("phi")) {
        const auto in = io::read_csv(cfg.text("phi"));
        const std::size_t cx = io::column(in, "x"), cp = io::column(in, "phi");
        std::vector<double> xs, ps;
        for (const auto& row : in.rows) xs.push_back(io::parse_double(row[cx])), ps.push_back(io::parse_double(row[cp]));
        const relay::Signal sig(xs, ps);  // strictly increasing x, linear interpolation
        phi = [sig](double x) { return sig.at(x); };
    }
    auto p = transverse::make_problem(phi, cells, cfg.real("bbar"), beta, cfg.real("h1"), cfg.real("hm1"), cfg.real("T"));
    p.time_steps = static_cast<std::size_t>(cfg.integer("steps"));
    return p;
}

inline int run_transverse(const RunConfig& cfg, std::ostream& log) {
    const auto p = transverse_from(cfg);
    const auto r = transverse::fixed_point_solve(p, cfg.real("tol-fp"), static_cast<std::size_t>(cfg.integer("max-iter")));
    auto tb = detail::table(cfg, {"t", "b", "a"});
    tb.meta.emplace_back("T_solved", io::fmt(r.T));
    tb.meta.emplace_back("residual", io::fmt(r.residual));
    for (std::size_t k = 0; k < r.curve.times.size(); ++k) tb.add(r.curve.times[k], r.curve.b[k], r.curve.a[k]);
    detail::emit_csv(cfg.output_dir / "boundary.csv", tb);
    auto tu = detail::table(cfg, {"t", "x", "u"});
    const std::size_t stride = std::max<std::size_t>(1, r.u.times.size() / 10);
    for (std::size_t k = 0; k < r.u.times.size(); k += stride)
        for (std::size_t i = 0; i < r.u.x.size(); ++i) tu.add(r.u.times[k], r.u.x[i], r.u.values[k][i]);
    detail::emit_csv(cfg.output_dir / "u_snapshots.csv", tu);
    auto ti = detail::table(cfg, {"iteration", "residual"});
    for (std::size_t i = 0; i < r.history.size(); ++i) ti.add(i + 1, r.history[i]);
    detail::emit_csv(cfg.output_dir / "iterations.csv", ti);
    log << "iterations: " << r.iterations << "\nresidual: " << io::fmt(r.residual) << "\nT: " << io::fmt(r.T)
        << "\nb(T): " << io::fmt(r.curve.b.back()) << '\n';
    return 0;
}

namespace detail {

inline std::string meta_value(const io::CsvTable& t, const std::string& key) {
    for (const auto& [k, v] : t.meta)
        if (k == key) return v;
    throw validation_error("MalformedCsv", "metadata key '" + key + "' missing");
}

} // namespace detail

inline int run_analyze(const RunConfig& cfg, std::ostream& log) {
    const auto in = io::read_csv(cfg.text("in"));
    SwitchLog slog;
    slog.horizon = io::parse_double(detail::meta_value(in, "T"));
    const double h1 = io::parse_double(detail::meta_value(in, "h1"));
    const double h_m1 = io::parse_double(detail::meta_value(in, "hm1"));
    const long N = std::stol(detail::meta_value(in, "N"));
    const std::size_t cn = io::column(in, "n"), ct = io::column(in, "t_n");
    for (const auto& row : in.rows) slog.records.push_back({std::stol(row[cn]), io::parse_double(row[ct])});

    std::optional<double> hint;
    if (cfg.has("a")) hint = cfg.real("a");
    const auto law = rattling::fit_quadratic_law(slog.records, hint, cfg.integer("n-min"));
    const auto ratio = rattling::switch_ratio(slog, 0, rattling::guarded_extent(N), law);

    std::ostringstream rs;
    rs << "a_fit = " << io::fmt(law.a_fit) << "\nE_min = " << io::fmt(law.E_min) << "\nswitched = " << ratio.switched
       << "\nnon_switching = " << ratio.non_switching << "\nundetermined = " << ratio.undetermined
       << "\nratio = " << io::fmt(ratio.ratio) << "\nexpected_ratio = " << io::fmt(std::abs(h_m1) / h1) << '\n';
    try {
        rs << "residual_exponent = " << io::fmt(rattling::residual_exponent(law.q, cfg.integer("n-min"))) << '\n';
    } catch (const Error&) {
        rs << "residual_exponent = nan\n";
    }
    auto tq = detail::table(cfg, {"n", "t_n", "q_n"});
    for (const auto& q : law.q) tq.add(q.n, q.q + law.a_fit * static_cast<double>(q.n * q.n), q.q);
    detail::emit_csv(cfg.output_dir / "q.csv", tq);

    if (cfg.has("traj")) {
        const auto tr = io::read_csv(cfg.text("traj"));
        const std::size_t c_t = io::column(tr, "t"), c_n = io::column(tr, "n"), c_u = io::column(tr, "u"),
                          c_x = io::column(tr, "xi");
        lattice1d::Trajectory traj;
        traj.N = N;
        for (const auto& row : tr.rows) {
            const double t = io::parse_double(row[c_t]);
            if (traj.times.empty() || traj.times.back() != t) {
                traj.times.push_back(t);
                traj.u.emplace_back(static_cast<std::size_t>(2 * N + 1), NAN);
                traj.xi.emplace_back(static_cast<std::size_t>(2 * N + 1), 1);
            }
            const auto idx = static_cast<std::size_t>(std::stol(row[c_n]) + N);
            traj.u.back().at(idx) = io::parse_double(row[c_u]);
            traj.xi.back().at(idx) = std::stoi(row[c_x]);
        }
        const auto gb = rattling::gradient_bound(traj, slog);
        rs << "gradient_bound = " << io::fmt(gb.b) << "\ngradient_samples = " << gb.samples << '\n';
        const auto prof = rattling::weak_limit_profile(traj, traj.times.size() - 1, law.a_fit, cfg.integer("window"), h1, h_m1);
        auto tw = detail::table(cfg, {"n", "average", "reference"});
        tw.meta.emplace_back("t", io::fmt(traj.times.back()));
        for (const auto& pt : prof) tw.add(pt.n, pt.average, pt.reference);
        detail::emit_csv(cfg.output_dir / "weak_limit.csv", tw);
    }
    detail::emit_text(cfg.output_dir / "report.txt", rs.str());
    log << rs.str();
    return 0;
}

int reproduce(const RunConfig& cfg, std::ostream& log);

/// Validates and dispatches; returns the process exit code.
inline int run(const RunConfig& cfg, std::ostream& log) {
    validate(cfg);
    const std::string& c = cfg.command;
    if (c == "relay") return run_relay(cfg, log);
    if (c == "green") return run_green(cfg, log);
    if (c == "solve-a") return run_solve_a(cfg, log);
    if (c == "verify") return run_verify(cfg, log);
    if (c == "simulate1d") return run_simulate1d(cfg, log);
    if (c == "simulate2d") return run_simulate2d(cfg, log);
    if (c == "slowfast") return run_slowfast(cfg, log);
    if (c == "transverse") return run_transverse(cfg, log);
    if (c == "analyze") return run_analyze(cfg, log);
    return reproduce(cfg, log);
}

/// RunConfig for `command` with every parameter at its default.
inline RunConfig defaults(const std::string& command, const fs::path& out) {
    RunConfig cfg;
    cfg.command = command;
    cfg.output_dir = out;
    for (const auto& o : command_spec(command).options) cfg.params[o.key] = o.default_value;
    return cfg;
}

inline int reproduce_fig7(const fs::path& out, std::ostream& log) {
    // initial data and the two rattling regimes at c = 1/2, h1 = 2
    const fs::path dir = out / "fig7";
    auto base = defaults("simulate1d", dir);
    base.params["N"] = "80";
    base.params["T"] = "2400";
    base.params["snapshots"] = "0,2400";
    base.params["svg"] = "0";
    io::CsvTable t;
    t.meta = {{"figure", "fig7"}, {"c", "0.5"}, {"h1", "2"}, {"N", "80"}, {"T", "2400"}};
    t.header = {"panel", "t", "n", "u", "xi"};
    const std::vector<std::pair<std::string, std::string>> panels{{"b", "0"}, {"c", "-2"}};
    for (const auto& [panel, hm1] : panels) {
        auto cfg = base;
        cfg.params["hm1"] = hm1;
        const auto sim = lattice1d::simulate(lattice_from(cfg));
        const auto& tr = sim.trajectory;
        if (panel == "b") {
            for (long n = -tr.N; n <= tr.N; ++n) t.add("a", 0.0, n, tr.value(n, 0), tr.config(n, 0));
            lattice1d::Trajectory init = tr;
            init.times.resize(1), init.u.resize(1), init.xi.resize(1);
            detail::emit_text(dir / "fig7a.svg", detail::profile_svg(init, "a) initial data u_n(0) = -c n^2"));
        }
        const std::size_t k = tr.times.size() - 1;
        for (long n = -tr.N; n <= tr.N; ++n) t.add(panel, tr.times[k], n, tr.value(n, k), tr.config(n, k));
        lattice1d::Trajectory last = tr;
        last.times = {tr.times[k]}, last.u = {tr.u[k]}, last.xi = {tr.xi[k]};
        detail::emit_text(dir / ("fig7" + panel + ".svg"),
                          detail::profile_svg(last, panel + ") h_-1 = " + hm1 + ", t = " + io::fmt(tr.times[k])));
    }
    detail::emit_csv(dir / "fig7_profiles.csv", t);
    log << "fig7: profiles for h_-1 = 0 and h_-1 = -h1\n";
    return 0;
}

inline int reproduce_fig8(const fs::path& out, std::ostream& log) {
    const fs::path dir = out / "fig8";
    io::CsvTable t;
    t.meta = {{"figure", "fig8"}, {"c", "0.5"}, {"n0", "20"}};
    t.header = {"h1", "a", "E_min", "n0"};
    std::vector<io::Series> series{{"a(h1)", "#0d47a1", {}}, {"E_min(h1)", "#b71c1c", {}}};
    const long n0 = 20;
    for (int k = 11; k <= 25; ++k) {
        const double h1 = k / 10.0;
        const auto co = coeff::solve_a(0.5, h1);
        lattice1d::LatticeConfig lc;
        lc.c = 0.5;
        lc.h1 = h1;
        lc.N = 2 * n0 + 20;
        lc.T = co.a * static_cast<double>(n0 * n0) * 1.05 + 20.0;
        const auto sim = lattice1d::simulate(lc);
        const auto probe = coeff::verify_hypothesis(0.5, h1, co.a, 1e300, n0, sim.log);
        const auto rep = coeff::verify_hypothesis(0.5, h1, co.a, std::max(probe.E_min, 1e-12), n0, sim.log);
        t.add(h1, co.a, rep.E_min, n0);
        series[0].points.emplace_back(h1, std::log10(co.a));
        series[1].points.emplace_back(h1, rep.E_min);
        log << "h1=" << io::fmt(h1) << " a=" << io::fmt(co.a) << " E_min=" << io::fmt(rep.E_min) << '\n';
    }
    detail::emit_csv(dir / "fig8_table.csv", t);
    detail::emit_text(dir / "fig8a.svg", io::line_plot({series[0]}, "log10 a versus h1 (c = 1/2)"));
    detail::emit_text(dir / "fig8b.svg", io::line_plot({series[1]}, "E_min versus h1 (c = 1/2, n0 = 20)"));
    return 0;
}

inline int reproduce_fig9(const fs::path& out, std::ostream& log) {
    const fs::path dir = out / "fig9";
    auto sq = defaults("simulate2d", dir);
    auto tri = sq;
    tri.params["lattice"] = "triangular";
    tri.params["h1"] = "4.5";
    tri.params["hm1"] = "-4.5";
    for (auto* cfg : {&sq, &tri}) {
        const auto g = lattice2d::simulate2d(lattice2d_from(*cfg));
        write_switch_map(*cfg, g, "fig9_" + cfg->text("lattice"));
        log << "fig9: " << cfg->text("lattice") << " map, " << g.size() << " nodes\n";
    }
    return 0;
}

inline int reproduce_fig10(const fs::path& out, std::ostream& log) {
    const fs::path dir = out / "fig10";
    for (const std::string delta : {"0.01", "0.001"}) {
        auto cfg = defaults("slowfast", dir);
        cfg.params["delta"] = delta;
        cfg.params["snapshots"] = "2.5,5,10";
        const auto sc = slowfast_from(cfg);
        const auto r = slowfast::simulate_slowfast(sc);
        auto t = detail::table(cfg, {"t", "x", "u", "v", "branch", "defect"});
        for (const auto& s : r.snapshots) {
            const auto b = slowfast::branch_classify(sc.g, r.x, s.u, s.v);
            for (std::size_t i = 0; i < r.x.size(); ++i)
                t.add(s.t, r.x[i], s.u[i], s.v[i], static_cast<int>(b.label[i]), b.defect[i]);
            if (&s == &r.snapshots.back())
                log << "fig10: delta=" << delta << " median interval " << io::fmt(b.median_run) << '\n';
        }
        detail::emit_csv(dir / ("fig10_delta_" + delta + ".csv"), t);
        detail::emit_text(dir / ("fig10_delta_" + delta + ".svg"), slowfast_svg(r, "delta=" + delta));
    }
    return 0;
}

inline int reproduce(const RunConfig& cfg, std::ostream& log) {
    const std::string& f = cfg.text("figure");
    if (f == "fig7") return reproduce_fig7(cfg.output_dir, log);
    if (f == "fig8") return reproduce_fig8(cfg.output_dir, log);
    if (f == "fig9") return reproduce_fig9(cfg.output_dir, log);
    return reproduce_fig10(cfg.output_dir, log);
}

} // namespace rattle::cli
