#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <utility>

#include "morkit/dense.hpp"
#include "morkit/eig.hpp"
#include "morkit/errors.hpp"
#include "morkit/quadrature.hpp"
#include "morkit/snapshots.hpp"

namespace mor {

enum class InnerProduct { euclidean, trapezoid };

/*
 * Orthonormal reduction basis from the snapshot covariance. Eigenvalues carry
 * the 1/n covariance scaling and run down to min(n-1, D); modes are stored
 * only for eigenvalues above a numerical-rank floor, since directions with
 * vanishing energy cannot be normalised meaningfully.
 */
struct ReducedBasis {
    Vector mean;
    DenseMatrix modes;   // D x r, W-orthonormal columns
    Vector eigenvalues;  // length min(n-1, D), non-increasing
    InnerProduct inner_product = InnerProduct::trapezoid;
    Vector weights;      // quadrature weights of the declared inner product

    std::size_t mode_count() const { return modes.cols(); }

    double total_energy() const {
        double s = 0.0;
        for (double l : eigenvalues) s += std::max(l, 0.0);
        return s;
    }
};

/// Method-of-snapshots POD on raw data rows with explicit quadrature weights.
inline ReducedBasis fit_pod_data(const DenseMatrix& data, Vector weights,
                                 InnerProduct ip_tag = InnerProduct::euclidean) {
    const std::size_t n = data.rows();
    const std::size_t dim = data.cols();
    if (n < 2) throw ValidationError("fit_pod: need at least 2 snapshots");
    if (weights.size() != dim) throw ValidationError("fit_pod: weights length mismatch");
    require_finite(data.data(), "fit_pod");

    ReducedBasis basis;
    basis.inner_product = ip_tag;
    basis.weights = std::move(weights);
    basis.mean.assign(dim, 0.0);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < dim; ++j) basis.mean[j] += data(i, j);
    for (double& m : basis.mean) m /= static_cast<double>(n);

    DenseMatrix centered(n, dim);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < dim; ++j) centered(i, j) = data(i, j) - basis.mean[j];

    // Gram matrix of the covariance operator: G_ik = (1/n) <u_i - mean, u_k - mean>_W
    DenseMatrix gram(n, n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t k = i; k < n; ++k) {
            const double g = weighted_dot(basis.weights, centered.row(i), centered.row(k)) /
                             static_cast<double>(n);
            gram(i, k) = g;
            gram(k, i) = g;
        }

    SpectralDecomposition dec = sym_eig(gram);

    const std::size_t spectrum_len = std::min(n - 1, dim);
    basis.eigenvalues.assign(dec.eigenvalues.begin(),
                             dec.eigenvalues.begin() + static_cast<std::ptrdiff_t>(spectrum_len));

    const double lam1 = basis.eigenvalues.empty() ? 0.0 : std::max(basis.eigenvalues[0], 0.0);
    // Absolute guard: centering bitwise-identical rows leaves roundoff of
    // order eps^2 relative to the data's second moment; such directions are
    // noise, not modes.
    double second_moment = 0.0;
    for (std::size_t i = 0; i < n; ++i)
        second_moment += weighted_dot(basis.weights, data.row(i), data.row(i));
    second_moment /= static_cast<double>(n);
    const double mode_floor = std::max(1e-13 * lam1, 1e-28 * second_moment);
    std::size_t r = 0;
    while (r < spectrum_len && basis.eigenvalues[r] > mode_floor && basis.eigenvalues[r] > 0.0) ++r;

    basis.modes = DenseMatrix(dim, r);
    for (std::size_t j = 0; j < r; ++j) {
        const double scale = 1.0 / std::sqrt(static_cast<double>(n) * basis.eigenvalues[j]);
        for (std::size_t d = 0; d < dim; ++d) {
            double s = 0.0;
            for (std::size_t i = 0; i < n; ++i) s += dec.eigenvectors(i, j) * centered(i, d);
            basis.modes(d, j) = s * scale;
        }
    }

    // Modified Gram-Schmidt pass in the W inner product; tiny-eigenvalue
    // directions come out of the Gram solve only approximately orthonormal.
    for (std::size_t j = 0; j < r; ++j) {
        for (std::size_t k = 0; k < j; ++k) {
            double proj = 0.0;
            for (std::size_t d = 0; d < dim; ++d)
                proj += basis.weights[d] * basis.modes(d, j) * basis.modes(d, k);
            for (std::size_t d = 0; d < dim; ++d) basis.modes(d, j) -= proj * basis.modes(d, k);
        }
        double nrm = 0.0;
        for (std::size_t d = 0; d < dim; ++d)
            nrm += basis.weights[d] * basis.modes(d, j) * basis.modes(d, j);
        nrm = std::sqrt(nrm);
        if (nrm > 0.0)
            for (std::size_t d = 0; d < dim; ++d) basis.modes(d, j) /= nrm;
    }

    // Deterministic sign: largest-magnitude entry of each mode positive.
    for (std::size_t j = 0; j < r; ++j) {
        std::size_t arg = 0;
        double best = 0.0;
        for (std::size_t d = 0; d < dim; ++d) {
            const double v = std::abs(basis.modes(d, j));
            if (v > best) {
                best = v;
                arg = d;
            }
        }
        if (basis.modes(arg, j) < 0.0)
            for (std::size_t d = 0; d < dim; ++d) basis.modes(d, j) = -basis.modes(d, j);
    }
    return basis;
}

inline Vector inner_product_weights(const Grid1D& grid, InnerProduct ip) {
    if (ip == InnerProduct::trapezoid) return trapezoid_weights(grid.n_points, grid.dx());
    return Vector(grid.n_points, 1.0);
}

inline ReducedBasis fit_pod(const SnapshotSet& set, InnerProduct ip = InnerProduct::trapezoid) {
    return fit_pod_data(set.data, inner_product_weights(set.grid, ip), ip);
}

/// Coefficients of the centered snapshot on the first N modes.
inline Vector project(const ReducedBasis& basis, std::span<const double> u, std::size_t n_modes) {
    if (n_modes > basis.mode_count()) throw ValidationError("project: N exceeds stored modes");
    if (u.size() != basis.mean.size()) throw ValidationError("project: dimension mismatch");
    Vector z(n_modes, 0.0);
    for (std::size_t j = 0; j < n_modes; ++j) {
        double s = 0.0;
        for (std::size_t d = 0; d < u.size(); ++d)
            s += basis.weights[d] * (u[d] - basis.mean[d]) * basis.modes(d, j);
        z[j] = s;
    }
    return z;
}

inline Vector reconstruct(const ReducedBasis& basis, std::span<const double> z) {
    if (z.size() > basis.mode_count()) throw ValidationError("reconstruct: too many coefficients");
    Vector u = basis.mean;
    for (std::size_t j = 0; j < z.size(); ++j)
        for (std::size_t d = 0; d < u.size(); ++d) u[d] += z[j] * basis.modes(d, j);
    return u;
}

/// Returns (mean-square training residual at N, sum of eigenvalues beyond N).
/// The two agree for any N: the spectral form of the projection error.
inline std::pair<double, double> energy_error_identity(const ReducedBasis& basis,
                                                       const SnapshotSet& set, std::size_t n_modes) {
    const std::size_t n = set.size();
    double lhs = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        Vector z = project(basis, set.data.row(i), n_modes);
        Vector rec = reconstruct(basis, z);
        double r2 = 0.0;
        for (std::size_t d = 0; d < rec.size(); ++d) {
            const double e = set.data(i, d) - rec[d];
            r2 += basis.weights[d] * e * e;
        }
        lhs += r2;
    }
    lhs /= static_cast<double>(n);
    double rhs = 0.0;
    for (std::size_t j = n_modes; j < basis.eigenvalues.size(); ++j)
        rhs += std::max(basis.eigenvalues[j], 0.0);
    return {lhs, rhs};
}

/// Spectrum of the uncentered second-moment matrix (1/n) <u_i, u_k>_W.
/// This is the right near-rank-one diagnostic for manifolds aligned to a
/// fixed reference: centering identical-up-to-noise rows leaves only noise.
inline Vector second_moment_spectrum(const SnapshotSet& set,
                                     InnerProduct ip = InnerProduct::trapezoid) {
    const std::size_t n = set.size();
    Vector w = inner_product_weights(set.grid, ip);
    DenseMatrix gram(n, n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t k = i; k < n; ++k) {
            const double g =
                weighted_dot(w, set.data.row(i), set.data.row(k)) / static_cast<double>(n);
            gram(i, k) = g;
            gram(k, i) = g;
        }
    return sym_eig(gram).eigenvalues;
}

}  // namespace mor
