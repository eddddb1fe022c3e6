// Command-line entry point: solvers, simulation, validation and figure data.
//
// Exit codes: 0 success, 1 configuration or input error, 2 solver failure
// (non-convergence, concavity loss), 3 failed validation check.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "illiq/config.hpp"
#include "illiq/exponential_solver.hpp"
#include "illiq/figure.hpp"
#include "illiq/io.hpp"
#include "illiq/simulation.hpp"
#include "illiq/validation.hpp"
#include "illiq/weibull_solver.hpp"

using namespace illiq;

namespace {

enum Exit { kOk = 0, kConfig = 1, kSolver = 2, kValidation = 3 };

struct ConfigFailure {
    std::vector<std::string> errors;
};

struct Common {
    std::string config;
    std::vector<std::string> sets;
    bool relax = false;
};

RunConfig load(const Common& c, std::vector<std::string> extra = {}) {
    std::vector<std::string> ov = c.sets;
    if (c.relax) ov.push_back("relax_drift_check=true");
    ov.insert(ov.end(), extra.begin(), extra.end());
    auto r = parse_config(c.config, ov);
    if (!r.ok()) throw ConfigFailure{r.errors};
    const auto& m = r.config.market;
    if (!(m.r - (m.mu - m.delta) > 0))
        std::fprintf(stderr, "warning: r - (mu - delta) = %g <= 0, drift check relaxed\n", m.r - (m.mu - m.delta));
    return r.config;
}

std::string out_path(const RunConfig& cfg, const std::string& given, const char* fallback) {
    if (!given.empty()) return given;
    std::filesystem::create_directories(cfg.output_dir);
    return cfg.output_dir + "/" + fallback;
}

const Exponential& need_exponential(const RunConfig& cfg, const char* cmd) {
    if (auto* e = std::get_if<Exponential>(&cfg.law)) return *e;
    throw ConfigFailure{{std::string(cmd) + " needs law = exponential (kappa)"}};
}

const Weibull& need_weibull(const RunConfig& cfg, const char* cmd) {
    if (auto* w = std::get_if<Weibull>(&cfg.law)) return *w;
    throw ConfigFailure{{std::string(cmd) + " needs law = weibull (lambda, k)"}};
}

int cmd_solve_exp(const Common& c, const std::string& out) {
    const RunConfig cfg = load(c);
    const auto& e = need_exponential(cfg, "solve-exp");
    const ValueCurve curve = solve_stationary(cfg.market, e.kappa, cfg.grid(), cfg.exp);
    const std::string path = out_path(cfg, out, "curve.csv");
    write_curve_csv(curve, path);
    std::printf("solve-exp: %d iterations, max residual %.3g, V(0,1,1) = %.10g, wrote %s\n", curve.iterations,
                curve.max_residual, reconstruct_value(0, 1, 1, curve), path.c_str());
    return kOk;
}

int cmd_solve_weibull(const Common& c, const std::string& out, const std::string& policy_out, double t_pol) {
    const RunConfig cfg = load(c);
    const auto& w = need_weibull(cfg, "solve-weibull");
    const ValueSurface s = solve_parabolic(cfg.market, w, cfg.grid(), cfg.weibull);
    if (!(t_pol >= 0 && t_pol <= s.horizon)) throw ConfigFailure{{"--policies-at-t must lie in [0, horizon]"}};
    const std::string path = out_path(cfg, out, "surface.csv");
    write_surface_csv(s, path, cfg.surface_stride);
    const std::string ppath = out_path(cfg, policy_out, "weibull_policy.csv");
    write_weibull_policy_csv(surface_policy_rows(s, t_pol), w, ppath);
    std::printf("solve-weibull: %d steps to T = %.6g, max residual %.3g, V(0,1,1) = %.10g, wrote %s and %s\n",
                s.steps, s.horizon, s.max_residual, reconstruct_value(s, 0, 1, 1), path.c_str(), ppath.c_str());
    return kOk;
}

int cmd_merton(const Common& c, const std::string& out) {
    const RunConfig cfg = load(c);
    const auto& e = need_exponential(cfg, "merton");
    const ZGrid g = cfg.grid();
    const std::string path = out_path(cfg, out, "merton.csv");
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw IoError("cannot write '" + path + "'");
    f << "z,value,pi_over_l,c_over_l\n";
    for (int i = g.report_begin(); i < g.report_end(); ++i) {
        const double z = g.z[i];
        const Policy pol = merton_policies(z, e.kappa, cfg.market);
        f << detail::num(z) << ',' << detail::num(merton_value(z, e.kappa, cfg.market)) << ','
          << detail::num(pol.pi / z) << ',' << detail::num(pol.c / z) << '\n';
    }
    std::printf("merton: M = %.10g, pi/l = %.10g, c/l = %.10g, wrote %s\n", merton_constant(cfg.market, e.kappa),
                (cfg.market.alpha - cfg.market.r) / (cfg.market.sigma * cfg.market.sigma), e.kappa, path.c_str());
    return kOk;
}

int cmd_simulate(const Common& c, const std::string& policy_csv, const std::string& out,
                 const std::vector<std::string>& flags) {
    const RunConfig cfg = load(c, flags);
    MCResult r;
    double solver_value = 0;
    if (auto* e = std::get_if<Exponential>(&cfg.law)) {
        const ValueCurve curve = policy_csv.empty() ? solve_stationary(cfg.market, e->kappa, cfg.grid(), cfg.exp)
                                                    : read_curve_csv(policy_csv, cfg.market, e->kappa);
        r = estimate_utility(PolicyTable::from_curve(curve), cfg.market, cfg.law, cfg.l0, cfg.h0, cfg.mc);
        solver_value = reconstruct_value(0, cfg.l0, cfg.h0, curve);
    } else {
        if (!policy_csv.empty())
            throw ConfigFailure{{"--policy reads a stationary curve; weibull runs solve the surface in-process"}};
        const ValueSurface s = solve_parabolic(cfg.market, std::get<Weibull>(cfg.law), cfg.grid(), cfg.weibull);
        r = estimate_utility(PolicyTable::from_surface(s), cfg.market, cfg.law, cfg.l0, cfg.h0, cfg.mc);
        solver_value = reconstruct_value(s, 0, cfg.l0, cfg.h0);
    }
    std::ostringstream row;
    row << "law,l0,h0,n_paths,dt,horizon,mean,std_error,random_tau_mean,random_tau_std_error,absorbed_fraction,"
           "solver_value\n"
        << law_name(cfg.law) << ',' << detail::num(cfg.l0) << ',' << detail::num(cfg.h0) << ',' << r.n_paths << ','
        << detail::num(r.dt) << ',' << detail::num(r.horizon) << ',' << detail::num(r.survival_weighted.mean) << ','
        << detail::num(r.survival_weighted.std_error) << ',' << detail::num(r.random_tau.mean) << ','
        << detail::num(r.random_tau.std_error) << ',' << detail::num(r.absorbed_fraction) << ','
        << detail::num(solver_value) << '\n';
    if (out.empty()) {
        std::cout << row.str();
    } else {
        std::ofstream f(out, std::ios::binary | std::ios::trunc);
        if (!f) throw IoError("cannot write '" + out + "'");
        f << row.str();
    }
    if (r.flagged) {
        std::fprintf(stderr, "simulate: absorbed fraction %.4g exceeds the limit %.4g\n", r.absorbed_fraction,
                     cfg.mc.max_absorbed);
        return kValidation;
    }
    return kOk;
}

int cmd_validate(const Common& c) {
    const RunConfig cfg = load(c);
    const auto& th = cfg.thresholds;
    std::vector<CheckReport> reps;
    const ZGrid g = cfg.grid();
    if (auto* e = std::get_if<Exponential>(&cfg.law)) {
        const ValueCurve curve = solve_stationary(cfg.market, e->kappa, g, cfg.exp);
        reps.push_back(check_stationary_residual(curve, th.residual));
        auto [mc, mp] = check_merton_limit(curve, 1e4, th.merton);
        reps.push_back(mc);
        reps.push_back(mp);
        reps.push_back(check_value_bounds(curve));
        const ZGrid fine =
            ZGrid::log_uniform(cfg.z_min, cfg.z_max, 2 * cfg.n_nodes - 1, cfg.buffer_decades, cfg.top_buffer_decades);
        const ValueCurve cf = solve_stationary(cfg.market, e->kappa, fine, cfg.exp);
        reps.push_back(check_upper_bound_stability(fit_upper_bound_constant(curve), fit_upper_bound_constant(cf)));
        reps.push_back(check_homotheticity(curve, 7, th.homotheticity));
    } else {
        const auto& w = std::get<Weibull>(cfg.law);
        const ValueSurface s = solve_parabolic(cfg.market, w, g, cfg.weibull);
        auto [mc, mp] = check_merton_limit(s, 0.0, 1e4, th.merton_weibull);
        reps.push_back(mc);
        reps.push_back(mp);
        reps.push_back(check_surface_lower_bound(s));
        reps.push_back(check_homotheticity(s, 7, th.homotheticity));
        reps.push_back(check_psi1_gamma_form(w, 20, th.gamma));
    }
    for (const auto& r : check_psi_odes(cfg.law, cfg.market, 50, th.ode)) reps.push_back(r);
    reps.push_back(check_gamma(200, 20240601, th.gamma));

    bool all = true;
    for (const auto& r : reps) {
        nlohmann::json j;
        j["name"] = r.name;
        j["passed"] = r.passed;
        j["measured"] = r.measured;
        if (std::isfinite(r.threshold))
            j["threshold"] = r.threshold;
        else
            j["threshold"] = "informational";
        j["context"] = r.context;
        std::cout << j.dump() << '\n';
        all = all && r.passed;
    }
    return all ? kOk : kValidation;
}

int cmd_figure1(const Common& c, const std::string& dir_flag) {
    const RunConfig cfg = load(c);
    const std::string dir = dir_flag.empty() ? cfg.output_dir : dir_flag;
    std::filesystem::create_directories(dir);
    const auto curves = figure1_curves(cfg);
    for (const auto& f : write_figure1(curves, dir)) std::printf("wrote %s\n", f.c_str());
    return kOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Optimal consumption and investment with an illiquid asset liquidated at a random time"};
    app.require_subcommand(1);
    Common common;
    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", common.config, "configuration file (key = value)")->required();
        sub->add_option("--set", common.sets, "override a config key, key=value (repeatable)");
        sub->add_flag("--relax-drift-check", common.relax, "accept r <= mu - delta with a warning");
    };

    std::string out, policy_out, policy_csv, out_dir;
    double t_pol = 0;
    auto* s_exp = app.add_subcommand("solve-exp", "solve the stationary reduced equation (exponential law)");
    add_common(s_exp);
    s_exp->add_option("--out", out, "curve CSV (default <output_dir>/curve.csv)");

    auto* s_wei = app.add_subcommand("solve-weibull", "solve the time-dependent reduced equation (Weibull law)");
    add_common(s_wei);
    s_wei->add_option("--out", out, "surface CSV (default <output_dir>/surface.csv)");
    s_wei->add_option("--policies-at-t", t_pol, "time of the policy slice");
    s_wei->add_option("--policy-out", policy_out, "policy CSV (default <output_dir>/weibull_policy.csv)");

    auto* s_mer = app.add_subcommand("merton", "liquid-only closed form on the grid");
    add_common(s_mer);
    s_mer->add_option("--out", out, "CSV (default <output_dir>/merton.csv)");

    std::optional<double> l0, h0, dt;
    std::optional<long> paths;
    std::optional<std::uint64_t> seed;
    auto* s_sim = app.add_subcommand("simulate", "Monte Carlo utility of the solved policy");
    add_common(s_sim);
    s_sim->add_option("--policy", policy_csv, "curve CSV written by solve-exp (exponential law only)");
    s_sim->add_option("--l0", l0, "initial liquid wealth");
    s_sim->add_option("--h0", h0, "initial illiquid value");
    s_sim->add_option("--paths", paths, "number of paths");
    s_sim->add_option("--seed", seed, "random seed");
    s_sim->add_option("--dt", dt, "time step");
    s_sim->add_option("--out", out, "output CSV (default stdout)");

    auto* s_val = app.add_subcommand("validate", "run the numerical checks, one JSON record per line");
    add_common(s_val);

    auto* s_fig = app.add_subcommand("figure1", "policy curves for the shipped figure configuration");
    add_common(s_fig);
    s_fig->add_option("--out-dir", out_dir, "directory for the CSVs (default <output_dir>)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? kOk : kConfig;
    }

    try {
        if (*s_exp) return cmd_solve_exp(common, out);
        if (*s_wei) return cmd_solve_weibull(common, out, policy_out, t_pol);
        if (*s_mer) return cmd_merton(common, out);
        if (*s_sim) {
            std::vector<std::string> flags;
            auto num = [](double x) { return detail::num(x); };
            if (l0) flags.push_back("l0=" + num(*l0));
            if (h0) flags.push_back("h0=" + num(*h0));
            if (dt) flags.push_back("dt=" + num(*dt));
            if (paths) flags.push_back("n_paths=" + std::to_string(*paths));
            if (seed) flags.push_back("seed=" + std::to_string(*seed));
            return cmd_simulate(common, policy_csv, out, flags);
        }
        if (*s_val) return cmd_validate(common);
        if (*s_fig) return cmd_figure1(common, out_dir);
    } catch (const ConfigFailure& f) {
        for (const auto& e : f.errors) std::fprintf(stderr, "config error: %s\n", e.c_str());
        return kConfig;
    } catch (const NonConvergence& e) {
        std::fprintf(stderr, "solver failure: %s\n", e.what());
        return kSolver;
    } catch (const ConcavityLoss& e) {
        std::fprintf(stderr, "solver failure: %s\n", e.what());
        return kSolver;
    } catch (const DomainError& e) {
        std::fprintf(stderr, "input error: %s\n", e.what());
        return kConfig;
    } catch (const IoError& e) {
        std::fprintf(stderr, "i/o error: %s\n", e.what());
        return kConfig;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kSolver;
    }
    return kConfig;
}
