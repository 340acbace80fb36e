#pragma once

#include <algorithm>
#include <cmath>
#include <span>

#include "morkit/dense.hpp"
#include "morkit/errors.hpp"

namespace mor {

enum class InterpKind { monotone_cubic, linear };

/*
 * Piecewise-cubic Hermite interpolant with shape-preserving slope limiting.
 *
 * Node slopes start from the weighted three-point formula (one-sided
 * quadratic at the ends). On locally monotone patches the Fritsch-Carlson
 * rules are applied: slopes that oppose the local secant are zeroed and the
 * pair (m_i, m_{i+1}) is pulled into the alpha^2 + beta^2 <= 9 disc, which
 * makes the interpolant monotone wherever the data is. At interior data
 * extrema (secant sign changes) the three-point slope is kept; zeroing it
 * there would cost two orders of accuracy for smooth non-monotone data.
 */
class CubicInterpolant {
public:
    CubicInterpolant(Vector grid, Vector values, InterpKind kind = InterpKind::monotone_cubic)
        : x_(std::move(grid)), y_(std::move(values)), kind_(kind) {
        if (x_.size() != y_.size()) throw ValidationError("interp: grid/value length mismatch");
        if (x_.size() < 2) throw ValidationError("interp: need at least 2 nodes");
        for (std::size_t i = 0; i + 1 < x_.size(); ++i)
            if (!(x_[i] < x_[i + 1])) throw ValidationError("interp: grid not strictly increasing");
        require_finite(y_, "interp");
        if (kind_ == InterpKind::monotone_cubic) compute_slopes();
    }

    double x_min() const { return x_.front(); }
    double x_max() const { return x_.back(); }

    double eval(double q) const {
        const std::size_t i = locate(q);
        if (kind_ == InterpKind::linear) {
            const double t = (q - x_[i]) / (x_[i + 1] - x_[i]);
            return (1.0 - t) * y_[i] + t * y_[i + 1];
        }
        const double h = x_[i + 1] - x_[i];
        const double t = (q - x_[i]) / h;
        const double t2 = t * t, t3 = t2 * t;
        return (2 * t3 - 3 * t2 + 1) * y_[i] + (t3 - 2 * t2 + t) * h * m_[i] +
               (-2 * t3 + 3 * t2) * y_[i + 1] + (t3 - t2) * h * m_[i + 1];
    }

    double deriv(double q) const {
        const std::size_t i = locate(q);
        const double h = x_[i + 1] - x_[i];
        if (kind_ == InterpKind::linear) return (y_[i + 1] - y_[i]) / h;
        const double t = (q - x_[i]) / h;
        const double t2 = t * t;
        return (6 * t2 - 6 * t) * y_[i] / h + (3 * t2 - 4 * t + 1) * m_[i] +
               (-6 * t2 + 6 * t) * y_[i + 1] / h + (3 * t2 - 2 * t) * m_[i + 1];
    }

private:
    std::size_t locate(double q) const {
        if (q < x_.front() || q > x_.back())
            throw ValidationError("interp: query outside grid (extrapolation)");
        auto it = std::upper_bound(x_.begin(), x_.end(), q);
        std::size_t i = (it == x_.begin()) ? 0 : static_cast<std::size_t>(it - x_.begin()) - 1;
        return std::min(i, x_.size() - 2);
    }

    void compute_slopes() {
        const std::size_t n = x_.size();
        Vector h(n - 1), d(n - 1);
        for (std::size_t i = 0; i + 1 < n; ++i) {
            h[i] = x_[i + 1] - x_[i];
            d[i] = (y_[i + 1] - y_[i]) / h[i];
        }
        m_.assign(n, 0.0);
        if (n == 2) {
            m_[0] = m_[1] = d[0];
            return;
        }
        m_[0] = ((2 * h[0] + h[1]) * d[0] - h[0] * d[1]) / (h[0] + h[1]);
        m_[n - 1] = ((2 * h[n - 2] + h[n - 3]) * d[n - 2] - h[n - 2] * d[n - 3]) / (h[n - 2] + h[n - 3]);
        for (std::size_t i = 1; i + 1 < n; ++i)
            m_[i] = (h[i] * d[i - 1] + h[i - 1] * d[i]) / (h[i] + h[i - 1]);

        // A zero secant counts as monotone context; only a strict sign flip
        // (an interior data extremum) exempts the node from limiting.
        auto mono_left = [&](std::size_t i) { return i == 0 || d[i - 1] * d[i] >= 0.0; };
        auto mono_right = [&](std::size_t i) { return i + 2 == n || d[i] * d[i + 1] >= 0.0; };

        for (std::size_t i = 0; i + 1 < n; ++i) {
            if (d[i] == 0.0) {
                if (mono_left(i)) m_[i] = 0.0;
                if (mono_right(i)) m_[i + 1] = 0.0;
                continue;
            }
            const bool ml = mono_left(i), mr = mono_right(i);
            if (ml && m_[i] / d[i] < 0.0) m_[i] = 0.0;
            if (mr && m_[i + 1] / d[i] < 0.0) m_[i + 1] = 0.0;
            if (ml && mr) {
                const double alpha = m_[i] / d[i];
                const double beta = m_[i + 1] / d[i];
                const double s2 = alpha * alpha + beta * beta;
                if (s2 > 9.0) {
                    const double f = 3.0 / std::sqrt(s2);
                    m_[i] = f * alpha * d[i];
                    m_[i + 1] = f * beta * d[i];
                }
            }
        }
    }

    Vector x_, y_, m_;
    InterpKind kind_;
};

/// Evaluate the interpolant of (grid, values) at each query point.
inline Vector interp_eval(const Vector& grid, const Vector& values, const Vector& queries,
                          InterpKind kind = InterpKind::monotone_cubic) {
    CubicInterpolant itp(grid, values, kind);
    Vector out(queries.size());
    for (std::size_t i = 0; i < queries.size(); ++i) out[i] = itp.eval(queries[i]);
    return out;
}

/// Invert a strictly increasing sampled function: find x with f(x) = y,
/// bisecting on the monotone interpolant until |f(x) - y| < 1e-10.
inline double monotone_invert(const Vector& grid, const Vector& f_on_grid, double y) {
    if (grid.size() != f_on_grid.size()) throw ValidationError("monotone_invert: length mismatch");
    for (std::size_t i = 0; i + 1 < f_on_grid.size(); ++i)
        if (!(f_on_grid[i] < f_on_grid[i + 1]))
            throw ValidationError("monotone_invert: samples not strictly increasing");
    if (y < f_on_grid.front() || y > f_on_grid.back())
        throw ValidationError("monotone_invert: target outside sampled range");

    CubicInterpolant itp(grid, f_on_grid);
    double lo = grid.front(), hi = grid.back();
    double mid = 0.5 * (lo + hi);
    for (int it = 0; it < 200; ++it) {
        mid = 0.5 * (lo + hi);
        const double fm = itp.eval(mid);
        if (std::abs(fm - y) < 1e-10) return mid;
        (fm < y ? lo : hi) = mid;
        if (hi - lo < 1e-15 * std::max(1.0, std::abs(mid))) break;
    }
    return mid;
}

}  // namespace mor
