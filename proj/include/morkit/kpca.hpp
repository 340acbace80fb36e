#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>
#include <vector>

#include "morkit/dense.hpp"
#include "morkit/eig.hpp"
#include "morkit/errors.hpp"
#include "morkit/pod.hpp"
#include "morkit/snapshots.hpp"

namespace mor {

enum class KernelKind { linear, mds, isomap, spectral_clustering, lle };

inline std::string to_string(KernelKind k) {
    switch (k) {
        case KernelKind::linear: return "linear";
        case KernelKind::mds: return "mds";
        case KernelKind::isomap: return "isomap";
        case KernelKind::spectral_clustering: return "spectral_clustering";
        case KernelKind::lle: return "lle";
    }
    return "?";
}

struct KernelHyper {
    std::size_t k_neighbors = 4;
    double weight_scale = 0.0;  // Gaussian width for SC edges; <= 0 means the median pairwise distance
    double lle_reg = 1e-3;
    double rank_tol = 1e-10;
};

/// Kernel matrix with its spectrum and the normalized training embedding.
struct KernelModel {
    KernelKind kind = KernelKind::linear;
    DenseMatrix kernel;       // n x n, symmetric PSD
    Vector eigenvalues;       // all n, descending, zeros retained
    DenseMatrix eigenvectors; // unit columns matching eigenvalues
    DenseMatrix embedding;    // n x r scores; column j = sqrt(lambda_j) * v_j
    KernelHyper hyper;
};

namespace detail {

inline double row_distance(const DenseMatrix& data, std::size_t i, std::size_t j) {
    double s = 0.0;
    for (std::size_t d = 0; d < data.cols(); ++d) {
        const double e = data(i, d) - data(j, d);
        s += e * e;
    }
    return std::sqrt(s);
}

inline DenseMatrix pairwise_distances(const DenseMatrix& data) {
    const std::size_t n = data.rows();
    DenseMatrix dist(n, n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) dist(i, j) = dist(j, i) = row_distance(data, i, j);
    return dist;
}

/// k nearest neighbours of each row by Euclidean distance, ties to the smaller index.
inline std::vector<std::vector<std::size_t>> knn_lists(const DenseMatrix& dist, std::size_t k) {
    const std::size_t n = dist.rows();
    if (k < 1 || k >= n) throw ValidationError("kpca: k_neighbors must be in [1, n)");
    std::vector<std::vector<std::size_t>> nbrs(n);
    for (std::size_t i = 0; i < n; ++i) {
        std::vector<std::size_t> order;
        for (std::size_t j = 0; j < n; ++j)
            if (j != i) order.push_back(j);
        std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
            if (dist(i, a) != dist(i, b)) return dist(i, a) < dist(i, b);
            return a < b;
        });
        nbrs[i].assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k));
    }
    return nbrs;
}

inline double median_pairwise(const DenseMatrix& dist) {
    Vector vals;
    for (std::size_t i = 0; i < dist.rows(); ++i)
        for (std::size_t j = i + 1; j < dist.cols(); ++j) vals.push_back(dist(i, j));
    if (vals.empty()) return 1.0;
    std::sort(vals.begin(), vals.end());
    const std::size_t m = vals.size();
    return m % 2 ? vals[m / 2] : 0.5 * (vals[m / 2 - 1] + vals[m / 2]);
}

}  // namespace detail

/// -1/2 H D H with H = I - (1/n) 11^T. D must hold squared distances.
inline DenseMatrix double_center(const DenseMatrix& dist2) {
    const std::size_t n = dist2.rows();
    if (!dist2.is_square()) throw ValidationError("double_center: matrix not square");
    if (dist2.asymmetry() > 1e-10) throw ValidationError("double_center: matrix not symmetric");
    const double scale = dist2.max_abs();
    for (std::size_t i = 0; i < n; ++i) {
        if (std::abs(dist2(i, i)) > 1e-12 * std::max(1.0, scale))
            throw ValidationError("double_center: nonzero diagonal");
        for (std::size_t j = 0; j < n; ++j)
            if (dist2(i, j) < -1e-12 * std::max(1.0, scale))
                throw ValidationError("double_center: negative squared distance");
    }
    Vector row_mean(n, 0.0), col_mean(n, 0.0);
    double grand = 0.0;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) {
            row_mean[i] += dist2(i, j);
            col_mean[j] += dist2(i, j);
            grand += dist2(i, j);
        }
    for (auto& v : row_mean) v /= static_cast<double>(n);
    for (auto& v : col_mean) v /= static_cast<double>(n);
    grand /= static_cast<double>(n * n);

    DenseMatrix out(n, n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
            out(i, j) = -0.5 * (dist2(i, j) - row_mean[i] - col_mean[j] + grand);
    return out;
}

/// All-pairs shortest paths over the union-symmetrized kNN graph with
/// Euclidean edge weights (Floyd-Warshall; n stays small here).
inline DenseMatrix geodesic_distances(const SnapshotSet& set, std::size_t k_neighbors) {
    const std::size_t n = set.size();
    DenseMatrix dist = detail::pairwise_distances(set.data);
    auto nbrs = detail::knn_lists(dist, k_neighbors);

    const double inf = std::numeric_limits<double>::infinity();
    DenseMatrix geo(n, n, inf);
    for (std::size_t i = 0; i < n; ++i) geo(i, i) = 0.0;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j : nbrs[i]) geo(i, j) = geo(j, i) = dist(i, j);

    for (std::size_t k = 0; k < n; ++k)
        for (std::size_t i = 0; i < n; ++i) {
            if (geo(i, k) == inf) continue;
            for (std::size_t j = 0; j < n; ++j) {
                const double alt = geo(i, k) + geo(k, j);
                if (alt < geo(i, j)) geo(i, j) = geo(j, i) = alt;
            }
        }

    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
            if (geo(i, j) == inf) {
                // name the components so the caller can raise k_neighbors
                std::vector<int> comp(n, -1);
                int n_comp = 0;
                for (std::size_t s = 0; s < n; ++s) {
                    if (comp[s] >= 0) continue;
                    comp[s] = n_comp;
                    std::vector<std::size_t> stack{s};
                    while (!stack.empty()) {
                        const std::size_t u = stack.back();
                        stack.pop_back();
                        for (std::size_t v = 0; v < n; ++v)
                            if (comp[v] < 0 && geo(u, v) < inf) {
                                comp[v] = n_comp;
                                stack.push_back(v);
                            }
                    }
                    ++n_comp;
                }
                std::string msg = "geodesic_distances: kNN graph disconnected; components:";
                for (int c = 0; c < n_comp; ++c) {
                    msg += " {";
                    bool first = true;
                    for (std::size_t s = 0; s < n; ++s)
                        if (comp[s] == c) {
                            if (!first) msg += ",";
                            msg += std::to_string(s);
                            first = false;
                        }
                    msg += "}";
                }
                throw ValidationError(msg + " — raise k_neighbors");
            }
    return geo;
}

/// Median of all pairwise snapshot distances; the default SC weight scale.
inline double median_pairwise_distance(const SnapshotSet& set) {
    return detail::median_pairwise(detail::pairwise_distances(set.data));
}

/// Gaussian-weighted adjacency on symmetrized kNN edges, zero diagonal.
inline DenseMatrix adjacency(const SnapshotSet& set, const KernelHyper& hyper) {
    const std::size_t n = set.size();
    if (!(hyper.weight_scale > 0.0)) throw ValidationError("adjacency: weight_scale must be positive");
    const double scale = hyper.weight_scale;
    DenseMatrix dist = detail::pairwise_distances(set.data);
    auto nbrs = detail::knn_lists(dist, hyper.k_neighbors);

    DenseMatrix w(n, n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j : nbrs[i]) {
            const double d = dist(i, j);
            const double v = std::exp(-d * d / (2.0 * scale * scale));
            w(i, j) = w(j, i) = v;  // union symmetrization
        }
    for (std::size_t i = 0; i < n; ++i) w(i, i) = 0.0;
    return w;
}

/// Pseudo-inverse of the graph Laplacian L = diag(W 1) - W.
inline DenseMatrix laplacian_kernel(const DenseMatrix& w, double rank_tol = 1e-10) {
    const std::size_t n = w.rows();
    if (!w.is_square() || w.asymmetry() > 1e-10)
        throw ValidationError("laplacian_kernel: adjacency not symmetric");
    DenseMatrix lap(n, n);
    for (std::size_t i = 0; i < n; ++i) {
        double deg = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            if (w(i, j) < -1e-14) throw ValidationError("laplacian_kernel: negative weight");
            deg += w(i, j);
            lap(i, j) = -w(i, j);
        }
        lap(i, i) = deg;
    }
    return pseudo_inverse(lap, rank_tol);
}

/// Row i solves min ||u_i - sum_j w_ij u_j|| over its kNN, subject to sum_j w_ij = 1.
/// The local Gram gets reg * trace(C) * I before the constrained solve.
inline DenseMatrix lle_weights(const SnapshotSet& set, std::size_t k_neighbors, double reg) {
    const std::size_t n = set.size();
    if (reg < 0.0) throw ValidationError("lle_weights: reg must be >= 0");
    DenseMatrix dist = detail::pairwise_distances(set.data);
    auto nbrs = detail::knn_lists(dist, k_neighbors);
    const std::size_t dim = set.data.cols();

    DenseMatrix w(n, n);
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t k = nbrs[i].size();
        DenseMatrix c(k, k);
        for (std::size_t a = 0; a < k; ++a)
            for (std::size_t b = a; b < k; ++b) {
                double s = 0.0;
                for (std::size_t d = 0; d < dim; ++d)
                    s += (set.data(i, d) - set.data(nbrs[i][a], d)) *
                         (set.data(i, d) - set.data(nbrs[i][b], d));
                c(a, b) = c(b, a) = s;
            }
        double tr = 0.0;
        for (std::size_t a = 0; a < k; ++a) tr += c(a, a);
        for (std::size_t a = 0; a < k; ++a) c(a, a) += reg * tr;

        // KKT system for the sum-to-one constraint
        DenseMatrix kkt(k + 1, k + 1);
        Vector rhs(k + 1, 0.0);
        for (std::size_t a = 0; a < k; ++a) {
            for (std::size_t b = 0; b < k; ++b) kkt(a, b) = c(a, b);
            kkt(a, k) = kkt(k, a) = 1.0;
        }
        rhs[k] = 1.0;
        Vector sol;
        if (tr <= 0.0) {
            sol.assign(k + 1, 0.0);  // all neighbours coincide with u_i: any convex weights fit
            for (std::size_t a = 0; a < k; ++a) sol[a] = 1.0 / static_cast<double>(k);
        } else {
            sol = lu_solve(kkt, rhs);
        }
        for (std::size_t a = 0; a < k; ++a) w(i, nbrs[i][a]) = sol[a];
    }
    return w;
}

/// Pseudo-inverse of M = (I - W)^T (I - W).
inline DenseMatrix lle_kernel(const DenseMatrix& w, double rank_tol = 1e-10) {
    const std::size_t n = w.rows();
    for (std::size_t i = 0; i < n; ++i) {
        double s = 0.0;
        for (std::size_t j = 0; j < n; ++j) s += w(i, j);
        if (std::abs(s - 1.0) > 1e-10)
            throw ValidationError("lle_kernel: weight rows must sum to 1");
    }
    DenseMatrix iw(n, n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) iw(i, j) = (i == j ? 1.0 : 0.0) - w(i, j);
    DenseMatrix m = iw.transpose().multiply(iw);
    // symmetrize roundoff before the spectral pinv
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) {
            const double v = 0.5 * (m(i, j) + m(j, i));
            m(i, j) = m(j, i) = v;
        }
    return pseudo_inverse(m, rank_tol);
}

/*
 * Unified kernel-PCA fit. Builds the kernel matrix for the requested method
 * (centered Gram for the linear kernel, double-centered squared distances
 * for MDS/Isomap, Laplacian / LLE pseudo-inverses as-is), takes its spectral
 * decomposition, clamps the roundoff-or-embedding negatives of the centered
 * kernels to zero, and stores component scores normalized by
 * lambda_j (v_j . v_j) = 1, i.e. score column j = sqrt(lambda_j) v_j.
 */
inline KernelModel fit_kpca(const SnapshotSet& set, KernelKind kind, const KernelHyper& hyper) {
    const std::size_t n = set.size();
    KernelModel model;
    model.kind = kind;
    model.hyper = hyper;

    switch (kind) {
        case KernelKind::linear: {
            Vector mean(set.data.cols(), 0.0);
            for (std::size_t i = 0; i < n; ++i)
                for (std::size_t d = 0; d < set.data.cols(); ++d) mean[d] += set.data(i, d);
            for (auto& v : mean) v /= static_cast<double>(n);
            model.kernel = DenseMatrix(n, n);
            for (std::size_t i = 0; i < n; ++i)
                for (std::size_t j = i; j < n; ++j) {
                    double s = 0.0;
                    for (std::size_t d = 0; d < set.data.cols(); ++d)
                        s += (set.data(i, d) - mean[d]) * (set.data(j, d) - mean[d]);
                    model.kernel(i, j) = model.kernel(j, i) = s;
                }
            break;
        }
        case KernelKind::mds: {
            DenseMatrix dist = detail::pairwise_distances(set.data);
            DenseMatrix d2(n, n);
            for (std::size_t i = 0; i < n; ++i)
                for (std::size_t j = 0; j < n; ++j) d2(i, j) = dist(i, j) * dist(i, j);
            model.kernel = double_center(d2);
            break;
        }
        case KernelKind::isomap: {
            DenseMatrix geo = geodesic_distances(set, hyper.k_neighbors);
            DenseMatrix d2(n, n);
            for (std::size_t i = 0; i < n; ++i)
                for (std::size_t j = 0; j < n; ++j) d2(i, j) = geo(i, j) * geo(i, j);
            model.kernel = double_center(d2);
            break;
        }
        case KernelKind::spectral_clustering: {
            KernelHyper resolved = hyper;
            if (resolved.weight_scale <= 0.0) resolved.weight_scale = median_pairwise_distance(set);
            model.hyper = resolved;
            model.kernel = laplacian_kernel(adjacency(set, resolved), hyper.rank_tol);
            break;
        }
        case KernelKind::lle:
            model.kernel = lle_kernel(lle_weights(set, hyper.k_neighbors, hyper.lle_reg), hyper.rank_tol);
            break;
    }

    SpectralDecomposition dec = sym_eig(model.kernel);

    if (kind == KernelKind::mds || kind == KernelKind::isomap) {
        // classical scaling: drop the non-embeddable negative part
        bool clamped = false;
        for (auto& l : dec.eigenvalues)
            if (l < 0.0) {
                l = 0.0;
                clamped = true;
            }
        if (clamped) {
            DenseMatrix k2(n, n);
            for (std::size_t j = 0; j < n; ++j) {
                if (dec.eigenvalues[j] == 0.0) continue;
                for (std::size_t r = 0; r < n; ++r)
                    for (std::size_t c = 0; c < n; ++c)
                        k2(r, c) += dec.eigenvalues[j] * dec.eigenvectors(r, j) * dec.eigenvectors(c, j);
            }
            model.kernel = k2;
        }
    }

    // deterministic eigenvector signs
    for (std::size_t j = 0; j < n; ++j) {
        std::size_t arg = 0;
        double best = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double v = std::abs(dec.eigenvectors(i, j));
            if (v > best) {
                best = v;
                arg = i;
            }
        }
        if (dec.eigenvectors(arg, j) < 0.0)
            for (std::size_t i = 0; i < n; ++i) dec.eigenvectors(i, j) = -dec.eigenvectors(i, j);
    }

    model.eigenvalues = dec.eigenvalues;
    model.eigenvectors = dec.eigenvectors;

    const double lam1 = std::max(model.eigenvalues.empty() ? 0.0 : model.eigenvalues[0], 0.0);
    std::size_t r = 0;
    while (r < n && model.eigenvalues[r] > hyper.rank_tol * lam1 && model.eigenvalues[r] > 0.0) ++r;
    model.embedding = DenseMatrix(n, r);
    for (std::size_t j = 0; j < r; ++j) {
        const double s = std::sqrt(model.eigenvalues[j]);
        for (std::size_t i = 0; i < n; ++i) model.embedding(i, j) = s * dec.eigenvectors(i, j);
    }
    return model;
}

}  // namespace mor
