#pragma once

// Policy curves c/l and pi/l against z = l/h at t = 0: the liquid-only
// (Merton) baseline, the exponential law with the same scale (kappa = 1/lambda)
// and Weibull laws for several shapes k.

#include <cstdio>
#include <string>
#include <vector>

#include "config.hpp"
#include "exponential_solver.hpp"
#include "io.hpp"
#include "liquidation.hpp"
#include "weibull_solver.hpp"

namespace illiq {

struct FigureCurve {
    std::string name;
    std::vector<PolicyRow> rows;
    double pi_limit = 0;  // large-z limits
    double c_limit = 0;
};

inline double figure_lambda(const RunConfig& cfg) {
    if (auto* w = std::get_if<Weibull>(&cfg.law)) return w->lambda;
    return 1.0 / std::get<Exponential>(cfg.law).kappa;
}

inline std::string figure_curve_name(double k) {
    char buf[48];
    std::snprintf(buf, sizeof buf, "weibull_k%g", k);
    return buf;
}

inline std::vector<FigureCurve> figure1_curves(const RunConfig& cfg) {
    const auto& p = cfg.market;
    const double lambda = figure_lambda(cfg);
    const double kappa = 1.0 / lambda;
    const double pi_lim = (p.alpha - p.r) / (p.sigma * p.sigma);
    const ZGrid g = cfg.grid();
    std::vector<FigureCurve> out;

    const ValueCurve c = solve_stationary(p, kappa, g, cfg.exp);
    FigureCurve merton{"merton", {}, pi_lim, kappa};
    for (int i = g.report_begin(); i < g.report_end(); ++i) merton.rows.push_back({g.z[i], pi_lim, kappa});
    out.push_back(merton);
    out.push_back({"exponential", curve_policy_rows(c), pi_lim, kappa});

    for (double k : cfg.figure_k) {
        const Weibull w{lambda, k};
        const ValueSurface s = solve_parabolic(p, w, g, cfg.weibull);
        out.push_back({figure_curve_name(k), surface_policy_rows(s, 0.0), pi_lim, 1.0 / mean_time(w)});
    }
    return out;
}

// One CSV per curve, a combined long-format file and the asymptotes.
inline std::vector<std::string> write_figure1(const std::vector<FigureCurve>& curves, const std::string& dir) {
    std::vector<std::string> files;
    for (const auto& c : curves) {
        const std::string path = dir + "/figure1_" + c.name + ".csv";
        write_policy_csv(c.rows, path);
        files.push_back(path);
    }
    {
        const std::string path = dir + "/figure1.csv";
        auto out = detail::open_out(path);
        out << "curve,z,pi_over_l,c_over_l\n";
        for (const auto& c : curves)
            for (const auto& r : c.rows)
                out << c.name << ',' << detail::num(r.z) << ',' << detail::num(r.pi_over_l) << ','
                    << detail::num(r.c_over_l) << '\n';
        files.push_back(path);
    }
    {
        const std::string path = dir + "/figure1_asymptotes.csv";
        auto out = detail::open_out(path);
        out << "curve,pi_over_l_limit,c_over_l_limit\n";
        for (const auto& c : curves)
            out << c.name << ',' << detail::num(c.pi_limit) << ',' << detail::num(c.c_limit) << '\n';
        files.push_back(path);
    }
    return files;
}

}  // namespace illiq
