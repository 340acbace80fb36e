#pragma once

#include <algorithm>
#include <cmath>
#include <deque>
#include <string>
#include <vector>

#include "morkit/dense.hpp"
#include "morkit/errors.hpp"
#include "morkit/interp.hpp"
#include "morkit/pod.hpp"
#include "morkit/quadrature.hpp"
#include "morkit/snapshots.hpp"

namespace mor {

struct RegistrationHyper {
    std::size_t n_basis = 6;      // Legendre expansion length M
    double xi = 1e-4;             // H2 seminorm weight
    double eps_jac = 0.1;         // Jacobian lower bound epsilon, upper bound 1/epsilon
    double c_jac = 0.025;         // barrier sharpness C
    double delta = 1e-3;          // barrier budget
    double penalty_weight = 1e3;  // exterior quadratic penalty weight
    std::size_t max_iters = 500;
    double grad_tol = 1e-8;
    bool use_lbfgs = true;        // two-loop acceleration; plain Armijo descent otherwise
    std::size_t lbfgs_mem = 8;
    double min_slope = 1e-6;      // monotonicity audit threshold
    std::size_t audit_refine = 4;
    double ot_density_floor = 1e-9;  // relative density floor for OT CDFs

    void validate() const {
        if (n_basis < 1) throw ValidationError("RegistrationHyper: n_basis must be >= 1");
        if (xi < 0.0) throw ValidationError("RegistrationHyper: xi must be >= 0");
        if (!(eps_jac > 0.0 && eps_jac < 1.0)) throw ValidationError("RegistrationHyper: eps_jac in (0,1)");
        if (!(c_jac > 0.0)) throw ValidationError("RegistrationHyper: c_jac must be positive");
        if (!(delta > 0.0)) throw ValidationError("RegistrationHyper: delta must be positive");
        if (penalty_weight < 0.0) throw ValidationError("RegistrationHyper: penalty_weight must be >= 0");
    }
};

/// Legendre polynomial P_m at x mapped affinely from the grid's domain onto [-1, 1].
inline double legendre_basis(std::size_t m, double x, const Grid1D& grid) {
    const double xi = (2.0 * x - (grid.x_min + grid.x_max)) / (grid.x_max - grid.x_min);
    double p_prev = 1.0;
    if (m == 0) return p_prev;
    double p = xi;
    for (std::size_t k = 1; k < m; ++k) {
        const double kk = static_cast<double>(k);
        const double p_next = ((2.0 * kk + 1.0) * xi * p - kk * p_prev) / (kk + 1.0);
        p_prev = p;
        p = p_next;
    }
    return p;
}

/// d/dx of legendre_basis, through the affine domain map.
inline double legendre_basis_deriv(std::size_t m, double x, const Grid1D& grid) {
    const double c = 2.0 / (grid.x_max - grid.x_min);
    if (m == 0) return 0.0;
    const double xi = (2.0 * x - (grid.x_min + grid.x_max)) / (grid.x_max - grid.x_min);
    double p_prev = 1.0, d_prev = 0.0;
    double p = xi, d = 1.0;
    for (std::size_t k = 1; k < m; ++k) {
        const double kk = static_cast<double>(k);
        const double p_next = ((2.0 * kk + 1.0) * xi * p - kk * p_prev) / (kk + 1.0);
        const double d_next = ((2.0 * kk + 1.0) * (p + xi * d) - kk * d_prev) / (kk + 1.0);
        p_prev = p;
        d_prev = d;
        p = p_next;
        d = d_next;
    }
    return d * c;
}

namespace detail {

/// Values and x-derivatives of P_0..P_{M-1} on the grid nodes.
struct LegendreTable {
    DenseMatrix p, dp, d2p;  // M x n

    LegendreTable(const Grid1D& grid, std::size_t m_count)
        : p(m_count, grid.n_points), dp(m_count, grid.n_points), d2p(m_count, grid.n_points) {
        const double c = 2.0 / (grid.x_max - grid.x_min);
        for (std::size_t j = 0; j < grid.n_points; ++j) {
            const double xi = (2.0 * grid.point(j) - (grid.x_min + grid.x_max)) / (grid.x_max - grid.x_min);
            // upward recurrences for P, P', P'' in xi
            double pm1 = 1.0, dm1 = 0.0, sm1 = 0.0;
            if (m_count > 0) {
                p(0, j) = 1.0;
            }
            if (m_count > 1) {
                p(1, j) = xi;
                dp(1, j) = c;
            }
            double pv = xi, dv = 1.0, sv = 0.0;
            for (std::size_t k = 1; k + 1 < m_count; ++k) {
                const double kk = static_cast<double>(k);
                const double pn = ((2 * kk + 1) * xi * pv - kk * pm1) / (kk + 1);
                const double dn = ((2 * kk + 1) * (pv + xi * dv) - kk * dm1) / (kk + 1);
                const double sn = ((2 * kk + 1) * (2 * dv + xi * sv) - kk * sm1) / (kk + 1);
                pm1 = pv;
                dm1 = dv;
                sm1 = sv;
                pv = pn;
                dv = dn;
                sv = sn;
                p(k + 1, j) = pv;
                dp(k + 1, j) = dv * c;
                d2p(k + 1, j) = sv * c * c;
            }
        }
    }
};

}  // namespace detail

struct RegistrationMap {
    enum class Kind { legendre, ot };
    Kind kind = Kind::legendre;
    Vector coeffs;          // Legendre coefficients (legendre kind)
    Vector ot_map_on_grid;  // T(x_j) samples (ot kind)
    double t_value = 0.0;
    double ref_t = 0.0;
    Grid1D grid;

    /// Phi evaluated at the grid nodes.
    Vector values_on_grid() const {
        if (kind == Kind::ot) return ot_map_on_grid;
        Vector phi(grid.n_points);
        for (std::size_t j = 0; j < grid.n_points; ++j) {
            double s = grid.point(j);
            for (std::size_t m = 0; m < coeffs.size(); ++m)
                s += coeffs[m] * legendre_basis(m, grid.point(j), grid);
            phi[j] = s;
        }
        return phi;
    }

    /// Minimum slope of the induced map on a refined audit grid.
    double min_slope_on_audit_grid(std::size_t refine = 4) const {
        const std::size_t n_fine = (grid.n_points - 1) * refine + 1;
        const double dx_fine = (grid.x_max - grid.x_min) / static_cast<double>(n_fine - 1);
        double lo = 1e300;
        if (kind == Kind::legendre) {
            for (std::size_t j = 0; j < n_fine; ++j) {
                const double x = grid.x_min + static_cast<double>(j) * dx_fine;
                double slope = 1.0;
                for (std::size_t m = 0; m < coeffs.size(); ++m)
                    slope += coeffs[m] * legendre_basis_deriv(m, x, grid);
                lo = std::min(lo, slope);
            }
            return lo;
        }
        CubicInterpolant itp(grid.points(), ot_map_on_grid);
        for (std::size_t j = 0; j < n_fine; ++j) {
            const double x = grid.x_min + static_cast<double>(j) * dx_fine;
            lo = std::min(lo, itp.deriv(std::min(x, grid.x_max)));
        }
        return lo;
    }
};

struct ObjectiveResult {
    double value = 0.0;
    Vector gradient;
    double misfit = 0.0;
    double h2_term = 0.0;
    double barrier_integral = 0.0;
    std::size_t clamped_nodes = 0;
};

namespace detail {

struct ObjectiveContext {
    const Grid1D& grid;
    Vector x;
    Vector w;
    const LegendreTable& table;
    const CubicInterpolant& u_t;
    const Vector& u_ref;
    const RegistrationHyper& hyper;
    DenseMatrix h2_gram;  // S_mk = int phi_m'' phi_k'' dx

    ObjectiveContext(const Grid1D& g, const LegendreTable& tab, const CubicInterpolant& ut,
                     const Vector& uref, const RegistrationHyper& hy)
        : grid(g), x(g.points()), w(trapezoid_weights(g.n_points, g.dx())), table(tab), u_t(ut),
          u_ref(uref), hyper(hy), h2_gram(hy.n_basis, hy.n_basis) {
        for (std::size_t m = 0; m < hy.n_basis; ++m)
            for (std::size_t k = m; k < hy.n_basis; ++k) {
                double s = 0.0;
                for (std::size_t j = 0; j < g.n_points; ++j)
                    s += w[j] * table.d2p(m, j) * table.d2p(k, j);
                h2_gram(m, k) = h2_gram(k, m) = s;
            }
    }

    ObjectiveResult eval(const Vector& a) const {
        const std::size_t n = grid.n_points;
        const std::size_t m_count = hyper.n_basis;
        ObjectiveResult out;
        out.gradient.assign(m_count, 0.0);
        Vector barrier_slope(n);  // d(e1+e2)/dJ at each node

        for (std::size_t j = 0; j < n; ++j) {
            double phi = x[j];
            double jac = 1.0;
            for (std::size_t m = 0; m < m_count; ++m) {
                phi += a[m] * table.p(m, j);
                jac += a[m] * table.dp(m, j);
            }
            const bool inside = phi >= grid.x_min && phi <= grid.x_max;
            if (!inside) ++out.clamped_nodes;
            const double phic = std::clamp(phi, grid.x_min, grid.x_max);
            const double v = u_t.eval(phic);
            const double vp = inside ? u_t.deriv(phic) : 0.0;
            const double r = v - u_ref[j];

            out.misfit += w[j] * r * r;
            const double gcoef = 2.0 * w[j] * r * vp;
            for (std::size_t m = 0; m < m_count; ++m) out.gradient[m] += gcoef * table.p(m, j);

            const double e1 = std::exp(std::min((hyper.eps_jac - jac) / hyper.c_jac, 60.0));
            const double e2 = std::exp(std::min((jac - 1.0 / hyper.eps_jac) / hyper.c_jac, 60.0));
            out.barrier_integral += w[j] * (e1 + e2);
            barrier_slope[j] = (e2 - e1) / hyper.c_jac;
        }

        // H2 seminorm aT S a and its gradient
        Vector sa(m_count, 0.0);
        for (std::size_t m = 0; m < m_count; ++m)
            for (std::size_t k = 0; k < m_count; ++k) sa[m] += h2_gram(m, k) * a[k];
        for (std::size_t m = 0; m < m_count; ++m) {
            out.h2_term += a[m] * sa[m];
            out.gradient[m] += 2.0 * hyper.xi * sa[m];
        }

        double penalty = 0.0;
        if (out.barrier_integral > hyper.delta) {
            const double excess = out.barrier_integral - hyper.delta;
            penalty = hyper.penalty_weight * excess * excess;
            for (std::size_t m = 0; m < m_count; ++m) {
                double db = 0.0;
                for (std::size_t j = 0; j < n; ++j) db += w[j] * barrier_slope[j] * table.dp(m, j);
                out.gradient[m] += 2.0 * hyper.penalty_weight * excess * db;
            }
        }
        out.value = out.misfit + hyper.xi * out.h2_term + penalty;
        return out;
    }
};

/// Armijo line search along d; optional L-BFGS two-loop direction.
/// Accepted steps never increase the objective.
inline ObjectiveResult minimize(const ObjectiveContext& ctx, Vector& a, std::size_t max_iters,
                                double grad_tol, bool use_lbfgs, std::size_t mem,
                                Vector* value_trace = nullptr) {
    ObjectiveResult cur = ctx.eval(a);
    if (value_trace) value_trace->push_back(cur.value);
    std::deque<Vector> s_hist, y_hist;

    for (std::size_t it = 0; it < max_iters; ++it) {
        double gnorm = 0.0;
        for (double g : cur.gradient) gnorm += g * g;
        gnorm = std::sqrt(gnorm);
        if (gnorm < grad_tol) break;

        Vector d = cur.gradient;
        for (auto& v : d) v = -v;
        if (use_lbfgs && !s_hist.empty()) {
            const std::size_t hist = s_hist.size();
            auto dot = [](const Vector& u, const Vector& v) {
                double s = 0.0;
                for (std::size_t m = 0; m < u.size(); ++m) s += u[m] * v[m];
                return s;
            };
            Vector q = cur.gradient;
            std::vector<double> alpha(hist), rho(hist);
            for (std::size_t h = hist; h-- > 0;) {
                rho[h] = 1.0 / dot(s_hist[h], y_hist[h]);
                alpha[h] = rho[h] * dot(s_hist[h], q);
                for (std::size_t m = 0; m < q.size(); ++m) q[m] -= alpha[h] * y_hist[h][m];
            }
            const double gamma = dot(s_hist.back(), y_hist.back()) / dot(y_hist.back(), y_hist.back());
            for (auto& v : q) v *= gamma;
            for (std::size_t h = 0; h < hist; ++h) {
                const double beta = rho[h] * dot(y_hist[h], q);
                for (std::size_t m = 0; m < q.size(); ++m) q[m] += (alpha[h] - beta) * s_hist[h][m];
            }
            if (dot(q, cur.gradient) > 0.0) {
                d = q;
                for (auto& v : d) v = -v;
            } else {
                s_hist.clear();
                y_hist.clear();
            }
        }

        double gd = 0.0;
        for (std::size_t m = 0; m < d.size(); ++m) gd += cur.gradient[m] * d[m];

        double step = 1.0;
        bool accepted = false;
        while (step > 1e-16) {
            Vector a2 = a;
            for (std::size_t m = 0; m < a.size(); ++m) a2[m] += step * d[m];
            ObjectiveResult nxt = ctx.eval(a2);
            if (nxt.value <= cur.value + 1e-4 * step * gd) {
                if (use_lbfgs) {
                    Vector s_vec(a.size()), y_vec(a.size());
                    double sy = 0.0;
                    for (std::size_t m = 0; m < a.size(); ++m) {
                        s_vec[m] = a2[m] - a[m];
                        y_vec[m] = nxt.gradient[m] - cur.gradient[m];
                        sy += s_vec[m] * y_vec[m];
                    }
                    if (sy > 1e-14) {
                        s_hist.push_back(std::move(s_vec));
                        y_hist.push_back(std::move(y_vec));
                        if (s_hist.size() > mem) {
                            s_hist.pop_front();
                            y_hist.pop_front();
                        }
                    }
                }
                a = std::move(a2);
                cur = std::move(nxt);
                if (value_trace) value_trace->push_back(cur.value);
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if (!accepted) break;
    }
    return cur;
}

}  // namespace detail

/// Value and analytic gradient of the registration objective at coefficients a.
inline ObjectiveResult registration_objective(const Vector& a, const Vector& u_t, const Vector& u_ref,
                                              const RegistrationHyper& hyper, const Grid1D& grid) {
    hyper.validate();
    if (a.size() != hyper.n_basis) throw ValidationError("registration_objective: coefficient length");
    if (u_t.size() != grid.n_points || u_ref.size() != grid.n_points)
        throw ValidationError("registration_objective: snapshots must live on the grid");
    detail::LegendreTable table(grid, hyper.n_basis);
    CubicInterpolant itp(grid.points(), u_t);
    detail::ObjectiveContext ctx(grid, table, itp, u_ref, hyper);
    return ctx.eval(a);
}

/*
 * Per-snapshot alignment to the reference: minimizes the clamped L2 misfit
 * plus the H2 regularizer and the Jacobian barrier penalty, warm-starting
 * each snapshot from its neighbour in time order. The reference snapshot
 * keeps the identity map exactly. Every returned map must pass the
 * strict-monotonicity audit.
 */
inline std::vector<RegistrationMap> fit_registration(const SnapshotSet& set,
                                                     const RegistrationHyper& hyper, double ref_t) {
    hyper.validate();
    const std::size_t n = set.size();
    std::size_t ref_idx = n;
    for (std::size_t i = 0; i < n; ++i)
        if (std::abs(set.times[i] - ref_t) <= 1e-12) ref_idx = i;
    if (ref_idx == n) throw ValidationError("fit_registration: ref_t is not a snapshot time");

    detail::LegendreTable table(set.grid, hyper.n_basis);
    const Vector u_ref(set.data.row(ref_idx).begin(), set.data.row(ref_idx).end());

    std::vector<RegistrationMap> maps(n);
    for (std::size_t i = 0; i < n; ++i) {
        maps[i].kind = RegistrationMap::Kind::legendre;
        maps[i].coeffs.assign(hyper.n_basis, 0.0);
        maps[i].t_value = set.times[i];
        maps[i].ref_t = ref_t;
        maps[i].grid = set.grid;
    }

    auto fit_one = [&](std::size_t i, const Vector& warm) {
        Vector u_i(set.data.row(i).begin(), set.data.row(i).end());
        CubicInterpolant itp(set.grid.points(), u_i);
        detail::ObjectiveContext ctx(set.grid, table, itp, u_ref, hyper);
        Vector a = warm;
        detail::minimize(ctx, a, hyper.max_iters, hyper.grad_tol, hyper.use_lbfgs, hyper.lbfgs_mem);
        maps[i].coeffs = a;
        if (maps[i].min_slope_on_audit_grid(hyper.audit_refine) <= hyper.min_slope)
            throw NumericalError("fit_registration: map for t=" + std::to_string(set.times[i]) +
                                 " failed the monotonicity audit; raise xi or penalty_weight");
        return a;
    };

    Vector warm(hyper.n_basis, 0.0);
    for (std::size_t i = ref_idx + 1; i < n; ++i) warm = fit_one(i, warm);
    warm.assign(hyper.n_basis, 0.0);
    for (std::size_t ii = ref_idx; ii-- > 0;) warm = fit_one(ii, warm);
    return maps;
}

/// Shift recovered from a fitted map: the displacement Phi(x) - x averaged
/// with weight u_ref(x)^2. Off the reference support the misfit does not
/// constrain the map, so single coefficients are not identifiable.
inline double recovered_shift(const RegistrationMap& map, const Vector& u_ref) {
    const Vector phi = map.values_on_grid();
    const Vector w = trapezoid_weights(map.grid.n_points, map.grid.dx());
    double num = 0.0, den = 0.0;
    for (std::size_t j = 0; j < map.grid.n_points; ++j) {
        const double weight = w[j] * u_ref[j] * u_ref[j];
        num += weight * (phi[j] - map.grid.point(j));
        den += weight;
    }
    if (den <= 0.0) throw ValidationError("recovered_shift: reference has no mass");
    return num / den;
}

/*
 * 1D optimal transport between non-negative profiles: the monotone
 * rearrangement T = F_ref^{-1} o F_t of the normalized cumulative integrals.
 * A relative density floor keeps the CDFs strictly increasing where the
 * profiles underflow to zero, so T stays a strict bijection of the domain.
 */
inline RegistrationMap ot_map_1d(const Vector& u_t, const Vector& u_ref, const Grid1D& grid,
                                 double density_floor_rel = 1e-9) {
    if (u_t.size() != grid.n_points || u_ref.size() != grid.n_points)
        throw ValidationError("ot_map_1d: snapshots must live on the grid");

    auto cdf_of = [&](const Vector& u) {
        double peak = 0.0;
        for (double v : u) {
            if (v < -1e-12) throw ValidationError("ot_map_1d: negative density");
            peak = std::max(peak, v);
        }
        if (peak <= 0.0) throw ValidationError("ot_map_1d: zero total mass");
        const double floor = density_floor_rel * peak;
        Vector cdf(grid.n_points, 0.0);
        for (std::size_t j = 1; j < grid.n_points; ++j)
            cdf[j] = cdf[j - 1] +
                     0.5 * grid.dx() * ((std::max(u[j - 1], 0.0) + floor) + (std::max(u[j], 0.0) + floor));
        for (auto& v : cdf) v /= cdf.back();
        return cdf;
    };

    const Vector f_t = cdf_of(u_t);
    const Vector f_ref = cdf_of(u_ref);
    const Vector x = grid.points();

    // Invert F_ref by bisection run to x-resolution. The generic f-tolerance
    // stop is too coarse where the CDF slope is at the density floor.
    CubicInterpolant f_itp(x, f_ref);
    auto invert_cdf = [&](double y) {
        double lo = grid.x_min, hi = grid.x_max;
        for (int it = 0; it < 100 && hi - lo > 1e-14 * (grid.x_max - grid.x_min); ++it) {
            const double mid = 0.5 * (lo + hi);
            (f_itp.eval(mid) < y ? lo : hi) = mid;
        }
        return 0.5 * (lo + hi);
    };

    RegistrationMap map;
    map.kind = RegistrationMap::Kind::ot;
    map.grid = grid;
    map.ot_map_on_grid.resize(grid.n_points);
    map.ot_map_on_grid.front() = grid.x_min;
    map.ot_map_on_grid.back() = grid.x_max;
    for (std::size_t j = 1; j + 1 < grid.n_points; ++j)
        map.ot_map_on_grid[j] = invert_cdf(f_t[j]);

    for (std::size_t j = 0; j + 1 < grid.n_points; ++j)
        if (!(map.ot_map_on_grid[j] < map.ot_map_on_grid[j + 1]))
            throw NumericalError("ot_map_1d: transport map is not strictly increasing");
    return map;
}

struct TransformResult {
    SnapshotSet set;
    std::size_t clamped_nodes = 0;
};

/// Row i of the result is u_i evaluated at Phi_i(x_j), clamped at the domain edges.
inline TransformResult transform_manifold(const SnapshotSet& set,
                                          const std::vector<RegistrationMap>& maps) {
    if (maps.size() != set.size())
        throw ValidationError("transform_manifold: need one map per snapshot");
    TransformResult out;
    out.set = set;
    for (std::size_t i = 0; i < set.size(); ++i) {
        Vector u_i(set.data.row(i).begin(), set.data.row(i).end());
        CubicInterpolant itp(set.grid.points(), u_i);
        const Vector phi = maps[i].values_on_grid();
        for (std::size_t j = 0; j < set.grid.n_points; ++j) {
            double q = phi[j];
            if (q < set.grid.x_min || q > set.grid.x_max) {
                ++out.clamped_nodes;
                q = std::clamp(q, set.grid.x_min, set.grid.x_max);
            }
            out.set.data(i, j) = itp.eval(q);
        }
    }
    return out;
}

struct MapInverse {
    Vector y;  // y_j with Phi(y_j) = x_j, clamped at the domain edges
    std::size_t clamped_nodes = 0;
};

/// Per-node inverse of the map: solves Phi(y) = x_j for every grid node.
inline MapInverse invert_map_on_grid(const RegistrationMap& map, const Grid1D& grid) {
    const Vector phi = map.values_on_grid();
    const Vector x = grid.points();
    MapInverse out;
    out.y.resize(grid.n_points);
    for (std::size_t j = 0; j < grid.n_points; ++j) {
        if (x[j] <= phi.front()) {
            out.y[j] = grid.x_min;
            if (x[j] < phi.front()) ++out.clamped_nodes;
        } else if (x[j] >= phi.back()) {
            out.y[j] = grid.x_max;
            if (x[j] > phi.back()) ++out.clamped_nodes;
        } else {
            out.y[j] = std::clamp(monotone_invert(x, phi, x[j]), grid.x_min, grid.x_max);
        }
    }
    return out;
}

struct RegisteredReconstruction {
    Vector u;
    std::size_t clamped_nodes = 0;
};

/// Reconstruct in the transformed frame, then pull back through the map:
/// u(x_j) = v(Phi^{-1}(x_j)) with v = basis.reconstruct(z).
inline RegisteredReconstruction reconstruct_registered(const ReducedBasis& basis,
                                                       const RegistrationMap& map,
                                                       const Vector& z, const Grid1D& grid) {
    const Vector v = reconstruct(basis, z);
    CubicInterpolant itp_v(grid.points(), v);
    MapInverse inv = invert_map_on_grid(map, grid);

    RegisteredReconstruction out;
    out.clamped_nodes = inv.clamped_nodes;
    out.u.resize(grid.n_points);
    for (std::size_t j = 0; j < grid.n_points; ++j) out.u[j] = itp_v.eval(inv.y[j]);
    return out;
}

}  // namespace mor
