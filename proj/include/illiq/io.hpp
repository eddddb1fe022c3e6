#pragma once

// Plain CSV output (fixed headers, %.17g numbers so reruns are byte-identical)
// and reading back a stationary curve for the simulator.

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "exponential_solver.hpp"
#include "liquidation.hpp"
#include "weibull_solver.hpp"

namespace illiq {

class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

namespace detail {

inline std::string num(double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

inline std::ofstream open_out(const std::string& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write '" + path + "'");
    return out;
}

}  // namespace detail

// Columns z,v,vz,vzz,pi_over_l,c_over_l. All nodes are written, including
// the buffers outside [z_min, z_max], so that the policy table read back
// covers the same range the solver used.
inline void write_curve_csv(const ValueCurve& c, const std::string& path) {
    auto out = detail::open_out(path);
    out << "z,v,vz,vzz,pi_over_l,c_over_l\n";
    for (int i = 0; i < c.size(); ++i)
        out << detail::num(c.grid.z[i]) << ',' << detail::num(c.v[i]) << ',' << detail::num(c.vz[i]) << ','
            << detail::num(c.vzz[i]) << ',' << detail::num(c.pi_over_l[i]) << ',' << detail::num(c.c_over_l[i])
            << '\n';
}

// Reads a curve written by write_curve_csv. The grid is rebuilt from the z
// column (log-uniform required); the whole file becomes the reporting range.
inline ValueCurve read_curve_csv(const std::string& path, const MarketParams& p, double kappa) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot read '" + path + "'");
    std::string line;
    if (!std::getline(in, line) || line != "z,v,vz,vzz,pi_over_l,c_over_l")
        throw IoError(path + ": expected header z,v,vz,vzz,pi_over_l,c_over_l");
    ValueCurve c;
    std::vector<double> z;
    int no = 1;
    while (std::getline(in, line)) {
        ++no;
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string cell;
        double f[6];
        int n = 0;
        while (n < 6 && std::getline(ss, cell, ',')) {
            char* end = nullptr;
            f[n] = std::strtod(cell.c_str(), &end);
            if (end == cell.c_str() || *end != '\0' || !std::isfinite(f[n]))
                throw IoError(path + ":" + std::to_string(no) + ": bad number '" + cell + "'");
            ++n;
        }
        if (n != 6 || std::getline(ss, cell, ','))
            throw IoError(path + ":" + std::to_string(no) + ": expected 6 columns");
        z.push_back(f[0]);
        c.v.push_back(f[1]);
        c.vz.push_back(f[2]);
        c.vzz.push_back(f[3]);
        c.pi_over_l.push_back(f[4]);
        c.c_over_l.push_back(f[5]);
    }
    if (z.size() < 3) throw IoError(path + ": need at least 3 rows");
    const int n = static_cast<int>(z.size());
    ZGrid g;
    g.n = n;
    g.buffer = 0;
    g.z_min = z.front();
    g.z_max = z.back();
    g.x0 = std::log(z.front());
    g.dx = (std::log(z.back()) - g.x0) / (n - 1);
    for (int i = 0; i < n; ++i)
        if (!(z[i] > 0) || std::abs(std::log(z[i]) - (g.x0 + i * g.dx)) > 1e-9 * std::max(1.0, std::abs(g.x0)))
            throw IoError(path + ": z column is not log-uniform");
    g.z = z;
    c.grid = g;
    c.kappa = kappa;
    c.params = p;
    return c;
}

// Long format t,z,W,Wz,Wzz over every `stride`-th stored level (t = 0 and
// the horizon always included) and all nodes.
inline void write_surface_csv(const ValueSurface& s, const std::string& path, int stride) {
    auto out = detail::open_out(path);
    out << "t,z,W,Wz,Wzz\n";
    const int L = static_cast<int>(s.t.size());
    for (int j = 0; j < L; ++j) {
        if (j % stride != 0 && j != L - 1) continue;
        for (int i = 0; i < s.grid.size(); ++i) {
            double wz, wzz;
            surface_node_derivatives(s, j, i, wz, wzz);
            out << detail::num(s.t[j]) << ',' << detail::num(s.grid.z[i]) << ',' << detail::num(s.W[j][i]) << ','
                << detail::num(wz) << ',' << detail::num(wzz) << '\n';
        }
    }
}

struct PolicyRow {
    double z, pi_over_l, c_over_l;
};

// Optimal ratios at the reporting nodes, from the first-order conditions.
inline std::vector<PolicyRow> curve_policy_rows(const ValueCurve& c) {
    std::vector<PolicyRow> rows;
    for (int i = c.grid.report_begin(); i < c.grid.report_end(); ++i) {
        const double z = c.grid.z[i];
        const Policy pol = policy_from_derivatives(1.0, z, c.vz[i], c.vzz[i], c.params);
        rows.push_back({z, pol.pi / z, pol.c / z});
    }
    return rows;
}

inline std::vector<PolicyRow> surface_policy_rows(const ValueSurface& s, double t) {
    std::vector<PolicyRow> rows;
    for (int i = s.grid.report_begin(); i < s.grid.report_end(); ++i) {
        const double z = s.grid.z[i];
        const Policy pol = policies_at(s, t, z, 1.0);
        rows.push_back({z, pol.pi / z, pol.c / z});
    }
    return rows;
}

inline void write_weibull_policy_csv(const std::vector<PolicyRow>& rows, const Weibull& w, const std::string& path) {
    auto out = detail::open_out(path);
    out << "z,pi_over_l,c_over_l,k,lambda\n";
    for (const auto& r : rows)
        out << detail::num(r.z) << ',' << detail::num(r.pi_over_l) << ',' << detail::num(r.c_over_l) << ','
            << detail::num(w.k) << ',' << detail::num(w.lambda) << '\n';
}

inline void write_policy_csv(const std::vector<PolicyRow>& rows, const std::string& path) {
    auto out = detail::open_out(path);
    out << "z,pi_over_l,c_over_l\n";
    for (const auto& r : rows)
        out << detail::num(r.z) << ',' << detail::num(r.pi_over_l) << ',' << detail::num(r.c_over_l) << '\n';
}

}  // namespace illiq
