#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "morkit/dense.hpp"
#include "morkit/errors.hpp"

namespace mor {

/// Eigenvalues sorted non-increasing with matching column-orthonormal eigenvectors.
struct SpectralDecomposition {
    Vector eigenvalues;
    DenseMatrix eigenvectors;  // column j pairs with eigenvalues[j]
};

namespace detail {

inline double off_diagonal_norm(const DenseMatrix& a) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = i + 1; j < a.cols(); ++j) s += 2.0 * a(i, j) * a(i, j);
    return std::sqrt(s);
}

}  // namespace detail

/*
 * Cyclic Jacobi eigensolver for dense symmetric matrices. Sweeps over the
 * upper triangle applying 2x2 rotations until the off-diagonal norm falls
 * below machine-level relative to ||A||_F. Sizes here stay in the hundreds,
 * where Jacobi is simple and very accurate.
 */
inline SpectralDecomposition sym_eig(const DenseMatrix& a_in, double sym_tol = 1e-10) {
    if (!a_in.is_square()) throw ValidationError("sym_eig: matrix not square");
    require_finite(a_in.data(), "sym_eig");
    if (a_in.asymmetry() > sym_tol) throw ValidationError("sym_eig: matrix not symmetric within tolerance");

    const std::size_t n = a_in.rows();
    DenseMatrix a = a_in;
    DenseMatrix v = DenseMatrix::identity(n);

    const double scale = frobenius_norm(a);
    const double stop = std::max(scale * 1e-15, 1e-300);
    const int max_sweeps = 64;

    int sweep = 0;
    for (; sweep < max_sweeps; ++sweep) {
        if (detail::off_diagonal_norm(a) <= stop) break;
        for (std::size_t p = 0; p + 1 < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) {
                const double apq = a(p, q);
                if (std::abs(apq) <= 1e-18 * scale) {
                    a(p, q) = a(q, p) = 0.0;
                    continue;
                }
                const double tau = (a(q, q) - a(p, p)) / (2.0 * apq);
                const double t = (tau >= 0.0 ? 1.0 : -1.0) / (std::abs(tau) + std::sqrt(1.0 + tau * tau));
                const double c = 1.0 / std::sqrt(1.0 + t * t);
                const double s = t * c;

                for (std::size_t k = 0; k < n; ++k) {
                    const double akp = a(k, p), akq = a(k, q);
                    a(k, p) = c * akp - s * akq;
                    a(k, q) = s * akp + c * akq;
                }
                for (std::size_t k = 0; k < n; ++k) {
                    const double apk = a(p, k), aqk = a(q, k);
                    a(p, k) = c * apk - s * aqk;
                    a(q, k) = s * apk + c * aqk;
                }
                for (std::size_t k = 0; k < n; ++k) {
                    const double vkp = v(k, p), vkq = v(k, q);
                    v(k, p) = c * vkp - s * vkq;
                    v(k, q) = s * vkp + c * vkq;
                }
            }
        }
    }
    if (sweep == max_sweeps && detail::off_diagonal_norm(a) > stop)
        throw NumericalError("sym_eig: Jacobi did not converge after " + std::to_string(max_sweeps) + " sweeps");

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t i, std::size_t j) { return a(i, i) > a(j, j); });

    SpectralDecomposition out;
    out.eigenvalues.resize(n);
    out.eigenvectors = DenseMatrix(n, n);
    for (std::size_t j = 0; j < n; ++j) {
        out.eigenvalues[j] = a(order[j], order[j]);
        for (std::size_t i = 0; i < n; ++i) out.eigenvectors(i, j) = v(i, order[j]);
    }
    return out;
}

/// Moore-Penrose inverse of a symmetric PSD matrix via its spectrum.
/// Eigenvalues below rank_tol * lambda_max count as zero.
inline DenseMatrix pseudo_inverse(const DenseMatrix& a, double rank_tol = 1e-10) {
    SpectralDecomposition d = sym_eig(a);
    const std::size_t n = a.rows();
    const double lam_max = d.eigenvalues.empty() ? 0.0 : std::max(d.eigenvalues.front(), 0.0);
    const double cut = rank_tol * lam_max;
    for (double lam : d.eigenvalues)
        if (lam < -cut && lam < -1e-300)
            throw ValidationError("pseudo_inverse: matrix not PSD (eigenvalue " + std::to_string(lam) + ")");

    DenseMatrix out(n, n);
    for (std::size_t j = 0; j < n; ++j) {
        const double lam = d.eigenvalues[j];
        if (lam <= cut || lam <= 0.0) continue;
        const double inv = 1.0 / lam;
        for (std::size_t r = 0; r < n; ++r) {
            const double f = inv * d.eigenvectors(r, j);
            if (f == 0.0) continue;
            for (std::size_t c = 0; c < n; ++c) out(r, c) += f * d.eigenvectors(c, j);
        }
    }
    return out;
}

}  // namespace mor
