#pragma once

// Run configuration: flat `key = value` text.
//
//   file    := { line }
//   line    := blank | comment | key ws* "=" ws* value [comment]
//   comment := "#" any-text
//   key     := [a-z_][a-z0-9_]*
//
// Every key may appear at most once. Values are decimal numbers, integers,
// booleans (true/false, yes/no, 1/0), words (law = exponential | weibull) or
// comma-separated number lists (figure_k). Overrides are applied in the order
// file < environment (ILLIQ_<KEY>, key upper-cased) < command line (key=value).
// Parsing never stops at the first problem: every error is collected.

#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "exponential_solver.hpp"
#include "liquidation.hpp"
#include "market_model.hpp"
#include "simulation.hpp"
#include "weibull_solver.hpp"

namespace illiq {

struct Thresholds {
    double merton = 0.01;          // exponential policy limits at the top node
    double merton_weibull = 0.02;  // same for a surface at t = 0
    double residual = 1e-6;        // stationary residual
    double ode = 1e-6;             // Psi2 / Theta ODE residuals
    double gamma = 1e-8;           // incomplete gamma and Psi1 oracles
    double homotheticity = 1e-6;
    double degeneration = 1e-3;    // Weibull k = 1 against exponential
};

struct RunConfig {
    MarketParams market;
    LiquidationLaw law = Exponential{0.2};
    bool relax_drift_check = false;

    double z_min = 1e-2, z_max = 1e4;
    int n_nodes = 2000;
    double buffer_decades = 4.0;      // extra nodes below z_min
    double top_buffer_decades = 2.0;  // extra nodes above z_max

    ExpSolveOptions exp;
    WeibullSolveOptions weibull;
    int surface_stride = 20;  // stored time levels written to surface CSVs

    PathConfig mc;
    double l0 = 1.0, h0 = 1.0;

    std::vector<double> figure_k{1.5, 2.0, 3.0};
    std::string output_dir = ".";
    Thresholds thresholds;

    ZGrid grid() const { return ZGrid::log_uniform(z_min, z_max, n_nodes, buffer_decades, top_buffer_decades); }
};

struct ConfigResult {
    RunConfig config;
    std::vector<std::string> errors;
    bool ok() const { return errors.empty(); }
};

using EnvLookup = std::function<const char*(const char*)>;

namespace detail {

struct RawValue {
    std::string text;
    std::string origin;  // "file:line", "env ILLIQ_X" or "command line"
};

inline std::string trim(const std::string& s) {
    std::size_t a = 0, b = s.size();
    while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
    while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
    return s.substr(a, b - a);
}

inline bool valid_key(const std::string& k) {
    if (k.empty() || !(std::islower(static_cast<unsigned char>(k[0])) || k[0] == '_')) return false;
    for (char ch : k)
        if (!(std::islower(static_cast<unsigned char>(ch)) || std::isdigit(static_cast<unsigned char>(ch)) || ch == '_'))
            return false;
    return true;
}

inline std::optional<double> to_double(const std::string& s) {
    double v = 0;
    const char* b = s.data();
    const char* e = b + s.size();
    if (b != e && *b == '+') ++b;
    auto [ptr, ec] = std::from_chars(b, e, v);
    if (ec != std::errc() || ptr != e || b == e || !std::isfinite(v)) return std::nullopt;
    return v;
}

inline std::optional<long long> to_integer(const std::string& s) {
    long long v = 0;
    const char* b = s.data();
    const char* e = b + s.size();
    auto [ptr, ec] = std::from_chars(b, e, v);
    if (ec == std::errc() && ptr == e && b != e) return v;
    // allow integral values written in floating notation, e.g. 1e5
    if (auto d = to_double(s); d && std::floor(*d) == *d && std::abs(*d) < 9e15) return static_cast<long long>(*d);
    return std::nullopt;
}

inline std::optional<bool> to_bool(const std::string& s) {
    if (s == "true" || s == "yes" || s == "1") return true;
    if (s == "false" || s == "no" || s == "0") return false;
    return std::nullopt;
}

inline void parse_lines(const std::string& text, const std::string& origin, std::map<std::string, RawValue>& out,
                        std::vector<std::string>& errors) {
    std::istringstream in(text);
    std::string line;
    int no = 0;
    while (std::getline(in, line)) {
        ++no;
        const std::string where = origin + ":" + std::to_string(no);
        if (const auto h = line.find('#'); h != std::string::npos) line.erase(h);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            errors.push_back(where + ": expected 'key = value'");
            continue;
        }
        const std::string key = trim(line.substr(0, eq));
        const std::string val = trim(line.substr(eq + 1));
        if (!valid_key(key)) {
            errors.push_back(where + ": invalid key '" + key + "'");
            continue;
        }
        if (val.empty()) {
            errors.push_back(where + ": empty value for '" + key + "'");
            continue;
        }
        if (out.count(key)) {
            errors.push_back(where + ": duplicate key '" + key + "' (first set at " + out[key].origin + ")");
            continue;
        }
        out[key] = {val, where};
    }
}

}  // namespace detail

inline ConfigResult parse_config_text(const std::string& text, const std::string& origin = "config",
                                      const std::vector<std::string>& overrides = {},
                                      const EnvLookup& env = [](const char* n) { return std::getenv(n); }) {
    ConfigResult res;
    auto& cfg = res.config;
    auto& errors = res.errors;
    std::map<std::string, detail::RawValue> raw;
    detail::parse_lines(text, origin, raw, errors);

    using Setter = std::function<std::optional<std::string>(const std::string&)>;
    std::map<std::string, Setter> keys;
    auto real = [&](const char* k, double& dst) {
        keys[k] = [&dst](const std::string& v) -> std::optional<std::string> {
            if (auto d = detail::to_double(v)) {
                dst = *d;
                return std::nullopt;
            }
            return "expected a finite number, got '" + v + "'";
        };
    };
    auto integer = [&](const char* k, auto& dst) {
        keys[k] = [&dst](const std::string& v) -> std::optional<std::string> {
            if (auto d = detail::to_integer(v)) {
                dst = static_cast<std::remove_reference_t<decltype(dst)>>(*d);
                return std::nullopt;
            }
            return "expected an integer, got '" + v + "'";
        };
    };
    auto boolean = [&](const char* k, bool& dst) {
        keys[k] = [&dst](const std::string& v) -> std::optional<std::string> {
            if (auto b = detail::to_bool(v)) {
                dst = *b;
                return std::nullopt;
            }
            return "expected true or false, got '" + v + "'";
        };
    };

    auto& m = cfg.market;
    for (auto [k, dst] : {std::pair<const char*, double*>{"r", &m.r}, {"alpha", &m.alpha}, {"sigma", &m.sigma},
                          {"mu", &m.mu}, {"delta", &m.delta}, {"eta", &m.eta}, {"rho", &m.rho}})
        real(k, *dst);
    double kappa = 0, lambda = 0, kshape = 0;
    std::string law_word;
    real("kappa", kappa);
    real("lambda", lambda);
    real("k", kshape);
    keys["law"] = [&](const std::string& v) -> std::optional<std::string> {
        if (v != "exponential" && v != "weibull") return "expected 'exponential' or 'weibull', got '" + v + "'";
        law_word = v;
        return std::nullopt;
    };
    boolean("relax_drift_check", cfg.relax_drift_check);
    real("z_min", cfg.z_min);
    real("z_max", cfg.z_max);
    integer("n_nodes", cfg.n_nodes);
    real("buffer_decades", cfg.buffer_decades);
    real("top_buffer_decades", cfg.top_buffer_decades);
    real("tol", cfg.exp.tol);
    integer("max_iter", cfg.exp.max_iter);
    real("residual_tol", cfg.exp.residual_tol);
    real("pmax", cfg.exp.scheme.pmax);
    integer("time_steps", cfg.weibull.time_steps);
    real("survival_cutoff", cfg.weibull.survival_cutoff);
    real("time_grading", cfg.weibull.grading);
    real("inner_tol", cfg.weibull.tol);
    integer("inner_max_iter", cfg.weibull.max_iter);
    integer("surface_stride", cfg.surface_stride);
    real("dt", cfg.mc.dt);
    integer("n_paths", cfg.mc.n_paths);
    integer("seed", cfg.mc.seed);
    boolean("antithetic", cfg.mc.antithetic);
    real("horizon_cutoff", cfg.mc.horizon_cutoff);
    real("mc_horizon", cfg.mc.horizon);
    real("mc_budget", cfg.mc.budget);
    real("max_absorbed", cfg.mc.max_absorbed);
    real("l0", cfg.l0);
    real("h0", cfg.h0);
    keys["figure_k"] = [&](const std::string& v) -> std::optional<std::string> {
        std::vector<double> ks;
        std::stringstream ss(v);
        std::string item;
        while (std::getline(ss, item, ',')) {
            auto d = detail::to_double(detail::trim(item));
            if (!d) return "expected a comma-separated list of numbers, got '" + v + "'";
            ks.push_back(*d);
        }
        if (ks.empty()) return "empty list";
        cfg.figure_k = ks;
        return std::nullopt;
    };
    keys["output_dir"] = [&](const std::string& v) -> std::optional<std::string> {
        cfg.output_dir = v;
        return std::nullopt;
    };
    auto& th = cfg.thresholds;
    real("merton_tol", th.merton);
    real("merton_weibull_tol", th.merton_weibull);
    real("stationary_residual_tol", th.residual);
    real("ode_tol", th.ode);
    real("gamma_tol", th.gamma);
    real("homotheticity_tol", th.homotheticity);
    real("degeneration_tol", th.degeneration);

    for (const auto& [k, v] : raw)
        if (!keys.count(k)) errors.push_back(v.origin + ": unknown key '" + k + "'");

    // environment overrides for known keys
    if (env) {
        for (const auto& [k, setter] : keys) {
            std::string name = "ILLIQ_";
            for (char ch : k) name += static_cast<char>(std::toupper(static_cast<unsigned char>(ch)));
            if (const char* val = env(name.c_str())) raw[k] = {detail::trim(val), "env " + name};
        }
    }
    for (const auto& o : overrides) {
        const auto eq = o.find('=');
        const std::string k = detail::trim(o.substr(0, eq));
        if (eq == std::string::npos || !keys.count(k)) {
            errors.push_back("command line: bad override '" + o + "' (expected known_key=value)");
            continue;
        }
        raw[k] = {detail::trim(o.substr(eq + 1)), "command line"};
    }

    for (const auto& [k, v] : raw) {
        auto it = keys.find(k);
        if (it == keys.end()) continue;
        if (auto err = it->second(v.text)) errors.push_back(v.origin + ": " + k + ": " + *err);
    }

    for (const char* k : {"r", "alpha", "sigma", "mu", "delta", "eta", "rho"})
        if (!raw.count(k)) errors.push_back(std::string("missing required key '") + k + "'");

    const bool has_exp = raw.count("kappa") > 0;
    const bool has_weib = raw.count("lambda") > 0 || raw.count("k") > 0;
    if (has_exp && has_weib) {
        errors.push_back("ambiguous law: both exponential (kappa) and weibull (lambda, k) keys are set");
    } else if (law_word == "exponential" && has_weib) {
        errors.push_back("law = exponential but weibull keys (lambda, k) are set");
    } else if (law_word == "weibull" && has_exp) {
        errors.push_back("law = weibull but the exponential key kappa is set");
    } else if (has_exp || law_word == "exponential") {
        if (!has_exp) errors.push_back("law = exponential needs 'kappa'");
        else if (!(kappa > 0)) errors.push_back("kappa must be > 0");
        else cfg.law = Exponential{kappa};
    } else if (has_weib || law_word == "weibull") {
        if (!raw.count("lambda")) errors.push_back("weibull law needs 'lambda'");
        if (!raw.count("k")) errors.push_back("weibull law needs 'k'");
        if (raw.count("lambda") && raw.count("k")) {
            if (!(lambda > 0)) errors.push_back("lambda must be > 0");
            if (!(kshape >= 1)) errors.push_back("k must be >= 1");
            cfg.law = Weibull{lambda, kshape};
        }
    } else {
        errors.push_back("missing law: set kappa (exponential) or lambda and k (weibull)");
    }

    for (const auto& e : validate(cfg.market, cfg.relax_drift_check)) errors.push_back(e.message);

    auto need = [&](bool cond, const char* msg) {
        if (!cond) errors.emplace_back(msg);
    };
    need(cfg.z_min > 0 && cfg.z_max > cfg.z_min, "grid needs 0 < z_min < z_max");
    need(cfg.n_nodes >= 3, "n_nodes must be >= 3");
    need(cfg.buffer_decades >= 0, "buffer_decades must be >= 0");
    need(cfg.top_buffer_decades >= 0, "top_buffer_decades must be >= 0");
    need(cfg.exp.tol > 0, "tol must be > 0");
    need(cfg.exp.max_iter >= 1, "max_iter must be >= 1");
    need(cfg.exp.residual_tol > 0, "residual_tol must be > 0");
    need(cfg.exp.scheme.pmax > 0, "pmax must be > 0");
    need(cfg.weibull.time_steps >= 1, "time_steps must be >= 1");
    need(cfg.weibull.survival_cutoff > 0 && cfg.weibull.survival_cutoff < 1, "survival_cutoff must be in (0, 1)");
    need(cfg.weibull.grading >= 1, "time_grading must be >= 1");
    need(cfg.weibull.tol > 0, "inner_tol must be > 0");
    need(cfg.weibull.max_iter >= 1, "inner_max_iter must be >= 1");
    need(cfg.surface_stride >= 1, "surface_stride must be >= 1");
    need(cfg.mc.dt > 0, "dt must be > 0");
    need(cfg.mc.n_paths >= 1, "n_paths must be >= 1");
    need(cfg.mc.horizon_cutoff > 0 && cfg.mc.horizon_cutoff < 1, "horizon_cutoff must be in (0, 1)");
    need(cfg.mc.horizon >= 0, "mc_horizon must be >= 0 (0 selects the survival cutoff)");
    need(cfg.mc.budget > 0, "mc_budget must be > 0");
    need(cfg.mc.max_absorbed >= 0 && cfg.mc.max_absorbed <= 1, "max_absorbed must be in [0, 1]");
    need(cfg.l0 > 0 && cfg.h0 > 0, "l0 and h0 must be > 0");
    for (double k : cfg.figure_k) need(k >= 1, "figure_k values must be >= 1");
    for (double t : {th.merton, th.merton_weibull, th.residual, th.ode, th.gamma, th.homotheticity, th.degeneration})
        need(t > 0, "thresholds must be > 0");
    cfg.weibull.store_stride = 1;
    return res;
}

inline ConfigResult parse_config(const std::string& path, const std::vector<std::string>& overrides = {},
                                 const EnvLookup& env = [](const char* n) { return std::getenv(n); }) {
    std::ifstream in(path);
    if (!in) {
        ConfigResult r;
        r.errors.push_back("cannot read config file '" + path + "'");
        return r;
    }
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config_text(ss.str(), path, overrides, env);
}

}  // namespace illiq
