#pragma once

#include <span>

#include "morkit/dense.hpp"
#include "morkit/errors.hpp"

namespace mor {

/// Composite trapezoidal rule on a uniform grid.
inline double quadrature(std::span<const double> values, double dx) {
    if (values.size() < 2) throw ValidationError("quadrature: need at least 2 samples");
    double s = 0.5 * (values.front() + values.back());
    for (std::size_t i = 1; i + 1 < values.size(); ++i) s += values[i];
    return s * dx;
}

/// Trapezoid quadrature weights: dx * [1/2, 1, ..., 1, 1/2].
inline Vector trapezoid_weights(std::size_t n, double dx) {
    if (n < 2) throw ValidationError("trapezoid_weights: need at least 2 samples");
    Vector w(n, dx);
    w.front() *= 0.5;
    w.back() *= 0.5;
    return w;
}

inline double weighted_dot(std::span<const double> w, std::span<const double> a,
                           std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < w.size(); ++i) s += w[i] * a[i] * b[i];
    return s;
}

inline double weighted_norm(std::span<const double> w, std::span<const double> a) {
    return std::sqrt(weighted_dot(w, a, a));
}

}  // namespace mor
