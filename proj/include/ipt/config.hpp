// Run configuration: flat dotted-key text format with unit-suffixed scalars
// (`topology.l_tx = 140uH`).  Strict parse — unknown keys, duplicate keys,
// malformed values and unit mismatches are all reported with their line
// number.  Every optional key has a documented default; the fully resolved
// key set can be re-serialized for embedding into reports.
#pragma once

#include <cstdlib>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "network.hpp"
#include "optimizer.hpp"

namespace ipt {

struct config_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct RunConfig {
    IptNetwork net;
    // solver block
    int harmonics = 30;
    double residual_tol = 1e-10;
    int samples = 4096;
    // sweep block
    SweepSpec sweep;
    // oracle block
    int oracle_cycles = 5000;
    int oracle_steps = 8192;
    double oracle_tol = 1e-6;
    // output block
    std::string out_dir = "out";
    std::string formats = "csv,json,plot";
};

namespace detail {

enum class Dim { none, volt, hertz, henry, farad, ohm };

inline const char* dim_unit(Dim d) {
    switch (d) {
        case Dim::volt: return "V";
        case Dim::hertz: return "Hz";
        case Dim::henry: return "H";
        case Dim::farad: return "F";
        case Dim::ohm: return "ohm";
        default: return "";
    }
}

// "140uH" -> 140e-6 for Dim::henry; bare numbers are taken as base SI units.
inline double parse_quantity(const std::string& raw, Dim dim, const std::string& key,
                             int line) {
    auto fail = [&](const std::string& why) -> double {
        std::ostringstream os;
        os << "line " << line << ": " << key << ": " << why << " (got '" << raw << "')";
        throw config_error(os.str());
    };
    std::string s = raw;
    double scale = 1.0;
    const std::string unit = dim_unit(dim);
    if (!unit.empty() && s.size() > unit.size() &&
        s.compare(s.size() - unit.size(), unit.size(), unit) == 0) {
        s.erase(s.size() - unit.size());
        if (!s.empty()) {
            switch (s.back()) {
                case 'p': scale = 1e-12; s.pop_back(); break;
                case 'n': scale = 1e-9; s.pop_back(); break;
                case 'u': scale = 1e-6; s.pop_back(); break;
                case 'm': scale = 1e-3; s.pop_back(); break;
                case 'k': scale = 1e3; s.pop_back(); break;
                case 'M': scale = 1e6; s.pop_back(); break;
                case 'G': scale = 1e9; s.pop_back(); break;
                default: break;
            }
        }
    }
    char* end = nullptr;
    double v = std::strtod(s.c_str(), &end);
    if (end == s.c_str() || *end != '\0') {
        if (dim == Dim::none) return fail("expected a plain number");
        return fail("expected a number with optional SI prefix and unit '" + unit + "'");
    }
    return v * scale;
}

inline long parse_integer(const std::string& raw, const std::string& key, int line) {
    char* end = nullptr;
    long v = std::strtol(raw.c_str(), &end, 10);
    if (end == raw.c_str() || *end != '\0') {
        std::ostringstream os;
        os << "line " << line << ": " << key << ": expected an integer (got '" << raw << "')";
        throw config_error(os.str());
    }
    return v;
}

inline bool parse_bool(const std::string& raw, const std::string& key, int line) {
    if (raw == "true") return true;
    if (raw == "false") return false;
    std::ostringstream os;
    os << "line " << line << ": " << key << ": expected true or false (got '" << raw << "')";
    throw config_error(os.str());
}

inline std::string trim(const std::string& s) {
    size_t a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    size_t b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

} // namespace detail

// Parses config text.  `source` names the input in diagnostics.
inline RunConfig parse_config(const std::string& text, const std::string& source = "config") {
    using detail::Dim;
    RunConfig cfg;

    // sweep grid staging: min/max/steps triples
    double delta_min = 0.7, delta_max = 1.3;
    long delta_steps = 25;
    double x_min = 0.0, x_max = 0.0;
    long x_steps = 0;
    bool saw_x_grid = false, saw_c0 = false, saw_x = false;
    bool saw_l1 = false, saw_lf = false;
    double x_value = 0.0;

    struct Handler {
        Dim dim;
        char kind;  // 'q' quantity, 'i' integer, 'b' bool, 's' string
        std::function<void(const std::string&, int)> set;
    };
    std::map<std::string, Handler> reg;
    auto q = [&](const char* key, Dim dim, auto setter) {
        reg[key] = Handler{dim, 'q', [&, key, dim, setter](const std::string& v, int line) {
                               setter(detail::parse_quantity(v, dim, key, line));
                           }};
    };
    auto qi = [&](const char* key, auto setter) {
        reg[key] = Handler{Dim::none, 'i', [&, key, setter](const std::string& v, int line) {
                               setter(detail::parse_integer(v, key, line));
                           }};
    };
    auto qb = [&](const char* key, auto setter) {
        reg[key] = Handler{Dim::none, 'b', [&, key, setter](const std::string& v, int line) {
                               setter(detail::parse_bool(v, key, line));
                           }};
    };
    auto qs = [&](const char* key, auto setter) {
        reg[key] = Handler{Dim::none, 's',
                           [setter](const std::string& v, int line) { setter(v, line); }};
    };

    qs("topology.variant", [&](const std::string& v, int line) {
        if (v == "class-e")
            cfg.net.variant = Variant::class_e;
        else if (v == "class-ef")
            cfg.net.variant = Variant::class_ef;
        else {
            std::ostringstream os;
            os << "line " << line << ": topology.variant must be class-e or class-ef (got '"
               << v << "')";
            throw config_error(os.str());
        }
    });
    q("topology.v_in", Dim::volt, [&](double v) { cfg.net.v_in = v; });
    q("topology.f_s", Dim::hertz, [&](double v) { cfg.net.f_s = v; });
    q("topology.duty", Dim::none, [&](double v) { cfg.net.sw.duty = v; });
    q("topology.r_on", Dim::ohm, [&](double v) { cfg.net.sw.r_on = v; });
    q("topology.r_off", Dim::ohm, [&](double v) { cfg.net.sw.r_off = v; });
    q("topology.l1", Dim::henry, [&](double v) { cfg.net.l1 = v; saw_l1 = true; });
    q("topology.l_f", Dim::henry, [&](double v) { cfg.net.l1 = v; saw_lf = true; });
    q("topology.c1", Dim::farad, [&](double v) { cfg.net.c1 = v; });
    q("topology.junction_c", Dim::farad, [&](double v) { cfg.net.junction_c = v; });
    qb("topology.fold_junction", [&](bool v) { cfg.net.fold_junction = v; });
    q("topology.l2", Dim::henry, [&](double v) { cfg.net.l2 = v; });
    q("topology.c2", Dim::farad, [&](double v) { cfg.net.c2 = v; });
    q("topology.c0", Dim::farad, [&](double v) { cfg.net.c0 = v; saw_c0 = true; });
    q("topology.x", Dim::ohm, [&](double v) { x_value = v; saw_x = true; });
    q("topology.l_tx", Dim::henry, [&](double v) { cfg.net.l_tx = v; });
    q("topology.l_rx", Dim::henry, [&](double v) { cfg.net.l_rx = v; });
    q("topology.q_tx", Dim::none, [&](double v) { cfg.net.q_tx = v; });
    q("topology.q_rx", Dim::none, [&](double v) { cfg.net.q_rx = v; });
    q("topology.c_rx", Dim::farad, [&](double v) { cfg.net.c_rx = v; });
    q("topology.r_load", Dim::ohm, [&](double v) { cfg.net.r_load = v; });
    q("topology.k", Dim::none, [&](double v) { cfg.net.k = v; });

    qi("solver.harmonics", [&](long v) { cfg.harmonics = static_cast<int>(v); });
    q("solver.residual_tol", Dim::none, [&](double v) { cfg.residual_tol = v; });
    qi("solver.samples", [&](long v) { cfg.samples = static_cast<int>(v); });

    q("sweep.k_min", Dim::none, [&](double v) { cfg.sweep.k_min = v; });
    q("sweep.k_max", Dim::none, [&](double v) { cfg.sweep.k_max = v; });
    qi("sweep.k_steps", [&](long v) { cfg.sweep.k_steps = static_cast<int>(v); });
    q("sweep.delta_min", Dim::none, [&](double v) { delta_min = v; });
    q("sweep.delta_max", Dim::none, [&](double v) { delta_max = v; });
    qi("sweep.delta_steps", [&](long v) { delta_steps = v; });
    q("sweep.x_min", Dim::ohm, [&](double v) { x_min = v; saw_x_grid = true; });
    q("sweep.x_max", Dim::ohm, [&](double v) { x_max = v; saw_x_grid = true; });
    qi("sweep.x_steps", [&](long v) { x_steps = v; saw_x_grid = true; });

    qi("oracle.cycles", [&](long v) { cfg.oracle_cycles = static_cast<int>(v); });
    qi("oracle.steps_per_cycle", [&](long v) { cfg.oracle_steps = static_cast<int>(v); });
    q("oracle.tol", Dim::none, [&](double v) { cfg.oracle_tol = v; });

    qs("output.directory", [&](const std::string& v, int) { cfg.out_dir = v; });
    qs("output.formats", [&](const std::string& v, int line) {
        std::stringstream ss(v);
        std::string tok;
        while (std::getline(ss, tok, ',')) {
            tok = detail::trim(tok);
            if (tok != "csv" && tok != "json" && tok != "plot") {
                std::ostringstream os;
                os << "line " << line << ": output.formats: unknown format '" << tok
                   << "' (choose from csv, json, plot)";
                throw config_error(os.str());
            }
        }
        cfg.formats = v;
    });

    std::map<std::string, int> seen;  // key -> first line
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = detail::trim(line);
        if (line.empty()) continue;
        auto eq = line.find('=');
        if (eq == std::string::npos) {
            std::ostringstream os;
            os << source << ": line " << lineno << ": expected `key = value`, got '" << line
               << "'";
            throw config_error(os.str());
        }
        std::string key = detail::trim(line.substr(0, eq));
        std::string value = detail::trim(line.substr(eq + 1));
        auto it = reg.find(key);
        if (it == reg.end()) {
            std::ostringstream os;
            os << source << ": line " << lineno << ": unknown key '" << key << "'";
            throw config_error(os.str());
        }
        auto prev = seen.find(key);
        if (prev != seen.end()) {
            std::ostringstream os;
            os << source << ": line " << lineno << ": duplicate key '" << key
               << "' (first set on line " << prev->second << ")";
            throw config_error(os.str());
        }
        seen[key] = lineno;
        try {
            it->second.set(value, lineno);
        } catch (const config_error& e) {
            throw config_error(source + ": " + e.what());
        } catch (const std::exception& e) {
            std::ostringstream os;
            os << source << ": line " << lineno << ": " << key << ": " << e.what();
            throw config_error(os.str());
        }
    }

    // cross-key resolution and validation
    auto bail = [&](const std::string& msg) { throw config_error(source + ": " + msg); };
    if (saw_l1 && saw_lf) bail("give either topology.l1 or topology.l_f, not both");
    if (saw_l1 && cfg.net.variant == Variant::class_ef)
        bail("class-ef uses the choke key topology.l_f, not topology.l1");
    if (saw_lf && cfg.net.variant == Variant::class_e)
        bail("class-e uses the resonant-inductor key topology.l1, not topology.l_f");
    if (saw_c0 && saw_x) bail("give either topology.c0 or topology.x, not both");
    if (saw_x) {
        if (!(cfg.net.omega() * cfg.net.l_tx > x_value))
            bail("topology.x must stay below the L_tx reactance for a realizable C0");
        cfg.net.c0 = tuned_c0(cfg.net.l_tx, cfg.net.omega(), x_value);
    }
    if (saw_x_grid && !(x_steps >= 1 && (x_steps == 1 || x_min < x_max)))
        bail("sweep.x_min/x_max/x_steps must describe a non-empty increasing grid");
    if (!(delta_steps >= 1 && (delta_steps == 1 || delta_min < delta_max)))
        bail("sweep.delta_min/delta_max/delta_steps must describe a non-empty increasing grid");

    cfg.sweep.delta_grid = linspace_grid(delta_min, delta_max, static_cast<int>(delta_steps));
    if (saw_x_grid)
        cfg.sweep.x_grid = linspace_grid(x_min, x_max, static_cast<int>(x_steps));

    auto errors = validate(cfg.net);
    if (!errors.empty()) {
        std::ostringstream os;
        os << source << ": invalid topology:";
        for (const auto& e : errors) os << "\n  - " << e;
        throw config_error(os.str());
    }
    if (cfg.harmonics < 1) bail("solver.harmonics must be >= 1");
    if (!(cfg.residual_tol > 0.0)) bail("solver.residual_tol must be positive");
    if (cfg.samples < 2) bail("solver.samples must be >= 2");
    if (cfg.oracle_cycles < 2) bail("oracle.cycles must be >= 2");
    if (cfg.oracle_steps < 2048) bail("oracle.steps_per_cycle must be >= 2048");
    if (!(cfg.oracle_tol > 0.0)) bail("oracle.tol must be positive");
    try {
        validate_sweep_spec(cfg.sweep);
    } catch (const std::invalid_argument& e) {
        bail(e.what());
    }
    return cfg;
}

inline RunConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw config_error("cannot open config file: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str(), path);
}

// The effective configuration with all defaults expanded, in declaration
// order and base SI units.  Feeding this back through the parser reproduces
// the same run; reports embed it for reproducibility.
inline std::vector<std::pair<std::string, std::string>> resolved_config(const RunConfig& cfg) {
    std::vector<std::pair<std::string, std::string>> out;
    auto num = [&](const char* key, double v) {
        char buf[64];
        std::snprintf(buf, sizeof buf, "%.12g", v);
        out.emplace_back(key, buf);
    };
    auto integer = [&](const char* key, long v) {
        out.emplace_back(key, std::to_string(v));
    };
    const bool ef = cfg.net.variant == Variant::class_ef;
    out.emplace_back("topology.variant", variant_name(cfg.net.variant));
    num("topology.v_in", cfg.net.v_in);
    num("topology.f_s", cfg.net.f_s);
    num("topology.duty", cfg.net.sw.duty);
    num("topology.r_on", cfg.net.sw.r_on);
    num("topology.r_off", cfg.net.sw.r_off);
    num(ef ? "topology.l_f" : "topology.l1", cfg.net.l1);
    num("topology.c1", cfg.net.c1);
    num("topology.junction_c", cfg.net.junction_c);
    out.emplace_back("topology.fold_junction", cfg.net.fold_junction ? "true" : "false");
    if (ef) {
        num("topology.l2", cfg.net.l2.value_or(0.0));
        num("topology.c2", cfg.net.c2.value_or(0.0));
    }
    num("topology.c0", cfg.net.c0);
    num("topology.l_tx", cfg.net.l_tx);
    num("topology.l_rx", cfg.net.l_rx);
    num("topology.q_tx", cfg.net.q_tx);
    num("topology.q_rx", cfg.net.q_rx);
    num("topology.c_rx", cfg.net.c_rx);
    num("topology.r_load", cfg.net.r_load);
    num("topology.k", cfg.net.k);
    integer("solver.harmonics", cfg.harmonics);
    num("solver.residual_tol", cfg.residual_tol);
    integer("solver.samples", cfg.samples);
    num("sweep.k_min", cfg.sweep.k_min);
    num("sweep.k_max", cfg.sweep.k_max);
    integer("sweep.k_steps", cfg.sweep.k_steps);
    num("sweep.delta_min", cfg.sweep.delta_grid.front());
    num("sweep.delta_max", cfg.sweep.delta_grid.back());
    integer("sweep.delta_steps", static_cast<long>(cfg.sweep.delta_grid.size()));
    if (!cfg.sweep.x_grid.empty()) {
        num("sweep.x_min", cfg.sweep.x_grid.front());
        num("sweep.x_max", cfg.sweep.x_grid.back());
        integer("sweep.x_steps", static_cast<long>(cfg.sweep.x_grid.size()));
    }
    integer("oracle.cycles", cfg.oracle_cycles);
    integer("oracle.steps_per_cycle", cfg.oracle_steps);
    num("oracle.tol", cfg.oracle_tol);
    out.emplace_back("output.directory", cfg.out_dir);
    out.emplace_back("output.formats", cfg.formats);
    return out;
}

} // namespace ipt
