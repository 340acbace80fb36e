#pragma once

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "morkit/dense.hpp"
#include "morkit/errors.hpp"

namespace mor {

/// Uniform 1D grid on [x_min, x_max].
struct Grid1D {
    double x_min = -1.0;
    double x_max = 3.0;
    std::size_t n_points = 256;

    Grid1D() = default;
    Grid1D(double lo, double hi, std::size_t n) : x_min(lo), x_max(hi), n_points(n) { validate(); }

    void validate() const {
        if (!(x_min < x_max)) throw ValidationError("Grid1D: x_min must be below x_max");
        if (n_points < 8) throw ValidationError("Grid1D: need at least 8 points");
    }

    double dx() const { return (x_max - x_min) / static_cast<double>(n_points - 1); }
    double point(std::size_t i) const { return x_min + static_cast<double>(i) * dx(); }

    Vector points() const {
        Vector x(n_points);
        for (std::size_t i = 0; i < n_points; ++i) x[i] = point(i);
        return x;
    }
};

/// Coefficients of the advection-diffusion benchmark with Gaussian initial data.
struct AdvDiffConfig {
    double c_T = 4.0;      // advection speed
    double c_D = 0.0;      // diffusivity
    double sigma0 = 0.1;   // initial Gaussian width
    double t_final = 0.5;

    void validate() const {
        if (c_D < 0.0) throw ValidationError("AdvDiffConfig: c_D must be >= 0");
        if (!(sigma0 > 0.0)) throw ValidationError("AdvDiffConfig: sigma0 must be positive");
        if (!(t_final > 0.0)) throw ValidationError("AdvDiffConfig: t_final must be positive");
    }
};

/*
 * Free-space solution of u_t + c_T u_x - c_D u_xx = 0 with Gaussian initial
 * data u0(x) = exp(-x^2 / (2 sigma0^2)): a pulse of width
 * s(t)^2 = sigma0^2 + 2 c_D t translating at speed c_T with amplitude
 * sigma0 / s(t). At benchmark parameters the pulse support stays inside the
 * domain, so boundary conditions never enter.
 */
inline double exact_solution(const AdvDiffConfig& cfg, double x, double t) {
    cfg.validate();
    if (t < 0.0) throw ValidationError("exact_solution: t must be >= 0");
    const double s2 = cfg.sigma0 * cfg.sigma0 + 2.0 * cfg.c_D * t;
    const double arg = x - cfg.c_T * t;
    return cfg.sigma0 / std::sqrt(s2) * std::exp(-arg * arg / (2.0 * s2));
}

/// Rows of PDE solutions indexed by time.
struct SnapshotSet {
    Grid1D grid;
    Vector times;      // sorted, within [0, t_final]
    DenseMatrix data;  // n_snapshots x n_points
    std::string label; // advection | diffusion | advection_diffusion
    AdvDiffConfig config;

    std::size_t size() const { return times.size(); }
};

inline SnapshotSet build_snapshot_set(const AdvDiffConfig& cfg, const Grid1D& grid,
                                      std::size_t n_snapshots, const std::string& label) {
    cfg.validate();
    grid.validate();
    if (n_snapshots < 2) throw ValidationError("build_snapshot_set: need at least 2 snapshots");
    SnapshotSet set;
    set.grid = grid;
    set.label = label;
    set.config = cfg;
    set.times.resize(n_snapshots);
    set.data = DenseMatrix(n_snapshots, grid.n_points);
    for (std::size_t i = 0; i < n_snapshots; ++i) {
        const double t = cfg.t_final * static_cast<double>(i) / static_cast<double>(n_snapshots - 1);
        set.times[i] = t;
        for (std::size_t j = 0; j < grid.n_points; ++j)
            set.data(i, j) = exact_solution(cfg, grid.point(j), t);
    }
    return set;
}

namespace detail {

inline std::string fmt17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

inline double parse_double(const std::string& tok, std::size_t line_no) {
    char* end = nullptr;
    const double v = std::strtod(tok.c_str(), &end);
    if (end == tok.c_str() || *end != '\0')
        throw ValidationError("snapshot csv: non-numeric cell '" + tok + "' at line " +
                              std::to_string(line_no));
    return v;
}

inline std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            out.push_back(cur);
            cur.clear();
        } else if (c != ' ' && c != '\r') {
            cur += c;
        }
    }
    out.push_back(cur);
    return out;
}

}  // namespace detail

// Format: line 1 is "# case,c_T,c_D,sigma0,x_min,x_max,n_points" with the
// values filled in, line 2 the grid, then one "t, u(x_1), ..., u(x_D)" row
// per snapshot. All floats carry 17 significant digits so the round trip is
// bitwise exact.
inline void save_csv(const SnapshotSet& set, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw ValidationError("save_csv: cannot open " + path);
    using detail::fmt17;
    out << "# " << set.label << ',' << fmt17(set.config.c_T) << ',' << fmt17(set.config.c_D) << ','
        << fmt17(set.config.sigma0) << ',' << fmt17(set.grid.x_min) << ',' << fmt17(set.grid.x_max)
        << ',' << set.grid.n_points << '\n';
    for (std::size_t j = 0; j < set.grid.n_points; ++j) {
        if (j) out << ',';
        out << fmt17(set.grid.point(j));
    }
    out << '\n';
    for (std::size_t i = 0; i < set.size(); ++i) {
        out << fmt17(set.times[i]);
        for (std::size_t j = 0; j < set.grid.n_points; ++j) out << ',' << fmt17(set.data(i, j));
        out << '\n';
    }
}

inline SnapshotSet load_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("load_csv: cannot open " + path);
    std::string line;
    std::size_t line_no = 0;

    if (!std::getline(in, line)) throw ValidationError("load_csv: empty file " + path);
    ++line_no;
    if (line.size() < 2 || line[0] != '#')
        throw ValidationError("load_csv: missing '#' header at line 1");
    auto head = detail::split_csv(line.substr(1));
    if (head.size() != 7) throw ValidationError("load_csv: malformed header at line 1");

    SnapshotSet set;
    set.label = head[0];
    set.config.c_T = detail::parse_double(head[1], 1);
    set.config.c_D = detail::parse_double(head[2], 1);
    set.config.sigma0 = detail::parse_double(head[3], 1);
    const double x_min = detail::parse_double(head[4], 1);
    const double x_max = detail::parse_double(head[5], 1);
    const std::size_t n_points = static_cast<std::size_t>(detail::parse_double(head[6], 1));
    set.grid = Grid1D(x_min, x_max, n_points);

    if (!std::getline(in, line)) throw ValidationError("load_csv: missing grid row at line 2");
    ++line_no;
    auto grid_cells = detail::split_csv(line);
    if (grid_cells.size() != n_points)
        throw ValidationError("load_csv: header n_points mismatch vs grid row at line 2");

    std::vector<Vector> rows;
    Vector times;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        auto cells = detail::split_csv(line);
        if (cells.size() != n_points + 1)
            throw ValidationError("load_csv: ragged row at line " + std::to_string(line_no));
        times.push_back(detail::parse_double(cells[0], line_no));
        Vector row(n_points);
        for (std::size_t j = 0; j < n_points; ++j) row[j] = detail::parse_double(cells[j + 1], line_no);
        rows.push_back(std::move(row));
    }
    if (rows.size() < 2) throw ValidationError("load_csv: need at least 2 snapshot rows");

    set.times = std::move(times);
    set.config.t_final = set.times.back() > 0.0 ? set.times.back() : set.config.t_final;
    set.data = DenseMatrix(rows.size(), n_points);
    for (std::size_t i = 0; i < rows.size(); ++i)
        for (std::size_t j = 0; j < n_points; ++j) set.data(i, j) = rows[i][j];
    require_finite(set.data.data(), "load_csv");
    return set;
}

}  // namespace mor
