#pragma once

#include <cmath>
#include <cstddef>

#include "morkit/dense.hpp"
#include "morkit/errors.hpp"

namespace mor {

/// Kernel ridge regression t -> R^d with inverse multiquadric kernel
/// k(t, t') = 1 / sqrt(1 + (eps |t - t'|)^2).
struct KrrModel {
    Vector centers;
    DenseMatrix dual_weights;  // n x output_dim
    double rbf_shape = 4.0;
    double ridge = 1e-10;

    bool in_hull(double t) const {
        double lo = centers.front(), hi = centers.front();
        for (double c : centers) {
            lo = std::min(lo, c);
            hi = std::max(hi, c);
        }
        return t >= lo && t <= hi;
    }
};

inline double imq_kernel(double t1, double t2, double eps) {
    const double d = eps * (t1 - t2);
    return 1.0 / std::sqrt(1.0 + d * d);
}

inline KrrModel krr_fit(const Vector& ts, const DenseMatrix& targets, double rbf_shape,
                        double ridge) {
    const std::size_t n = ts.size();
    if (n == 0) throw ValidationError("krr_fit: no training points");
    if (targets.rows() != n) throw ValidationError("krr_fit: targets row count mismatch");
    if (ridge < 0.0) throw ValidationError("krr_fit: ridge must be >= 0");
    if (!(rbf_shape > 0.0)) throw ValidationError("krr_fit: rbf_shape must be positive");
    require_finite(ts, "krr_fit");

    DenseMatrix gram(n, n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i; j < n; ++j)
            gram(i, j) = gram(j, i) = imq_kernel(ts[i], ts[j], rbf_shape) + (i == j ? ridge : 0.0);

    DenseMatrix l = cholesky(gram);  // throws NumericalError on a singular system

    KrrModel model;
    model.centers = ts;
    model.rbf_shape = rbf_shape;
    model.ridge = ridge;
    model.dual_weights = DenseMatrix(n, targets.cols());
    Vector col(n);
    for (std::size_t c = 0; c < targets.cols(); ++c) {
        for (std::size_t i = 0; i < n; ++i) col[i] = targets(i, c);
        Vector sol = cholesky_solve(l, col);
        for (std::size_t i = 0; i < n; ++i) model.dual_weights(i, c) = sol[i];
    }
    return model;
}

inline DenseMatrix krr_predict(const KrrModel& model, const Vector& t_query) {
    const std::size_t n = model.centers.size();
    const std::size_t q = t_query.size();
    DenseMatrix out(q, model.dual_weights.cols());
    for (std::size_t i = 0; i < q; ++i)
        for (std::size_t j = 0; j < n; ++j) {
            const double k = imq_kernel(t_query[i], model.centers[j], model.rbf_shape);
            for (std::size_t c = 0; c < out.cols(); ++c) out(i, c) += k * model.dual_weights(j, c);
        }
    return out;
}

/// Extrapolation diagnostic: queries outside the training hull are allowed but flagged.
inline std::size_t count_outside_hull(const KrrModel& model, const Vector& t_query) {
    std::size_t count = 0;
    for (double t : t_query)
        if (!model.in_hull(t)) ++count;
    return count;
}

}  // namespace mor
