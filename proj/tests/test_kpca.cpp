#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "morkit/kpca.hpp"
#include "morkit/pod.hpp"
#include "morkit/rng.hpp"

using namespace mor;

namespace {

// Snapshot set whose rows are prescribed points embedded in R^8.
SnapshotSet points_set(const std::vector<Vector>& pts) {
    SnapshotSet set;
    set.grid = Grid1D(0.0, 1.0, 8);
    set.times.resize(pts.size());
    set.data = DenseMatrix(pts.size(), 8);
    for (std::size_t i = 0; i < pts.size(); ++i) {
        set.times[i] = static_cast<double>(i);
        for (std::size_t d = 0; d < pts[i].size(); ++d) set.data(i, d) = pts[i][d];
    }
    set.label = "points";
    return set;
}

SnapshotSet benchmark_case(double cT, double cD, const char* label) {
    AdvDiffConfig cfg;
    cfg.c_T = cT;
    cfg.c_D = cD;
    return build_snapshot_set(cfg, Grid1D(), 20, label);
}

DenseMatrix from_rows(std::initializer_list<std::initializer_list<double>> rows) {
    DenseMatrix m(rows.size(), rows.begin()->size());
    std::size_t i = 0;
    for (const auto& r : rows) {
        std::size_t j = 0;
        for (double v : r) m(i, j++) = v;
        ++i;
    }
    return m;
}

}  // namespace

TEST_CASE("double_center basics") {
    auto z = double_center(DenseMatrix(3, 3));
    for (double v : z.data()) REQUIRE(v == 0.0);

    auto b = double_center(from_rows({{0, 1}, {1, 0}}));
    REQUIRE(b(0, 0) == Catch::Approx(0.25).margin(1e-14));
    REQUIRE(b(0, 1) == Catch::Approx(-0.25).margin(1e-14));
    REQUIRE(b(1, 0) == Catch::Approx(-0.25).margin(1e-14));
    REQUIRE(b(1, 1) == Catch::Approx(0.25).margin(1e-14));

    REQUIRE_THROWS_AS(double_center(from_rows({{1, 0}, {0, 0}})), ValidationError);
}

TEST_CASE("double-centered squared distances equal the centered Gram") {
    auto set = benchmark_case(4.0, 0.0, "advection");
    const std::size_t n = set.size();

    DenseMatrix d2(n, n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) {
            double s = 0.0;
            for (std::size_t d = 0; d < set.data.cols(); ++d) {
                const double e = set.data(i, d) - set.data(j, d);
                s += e * e;
            }
            d2(i, j) = s;
        }
    auto dc = double_center(d2);

    Vector mean(set.data.cols(), 0.0);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t d = 0; d < set.data.cols(); ++d) mean[d] += set.data(i, d) / n;
    DenseMatrix gram(n, n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) {
            double s = 0.0;
            for (std::size_t d = 0; d < set.data.cols(); ++d)
                s += (set.data(i, d) - mean[d]) * (set.data(j, d) - mean[d]);
            gram(i, j) = s;
        }
    const double scale = gram.max_abs();
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
            REQUIRE(dc(i, j) == Catch::Approx(gram(i, j)).margin(1e-8 * scale));

    // row and column sums vanish after double-centering
    for (std::size_t i = 0; i < n; ++i) {
        double rs = 0.0, cs = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            rs += dc(i, j);
            cs += dc(j, i);
        }
        REQUIRE(rs == Catch::Approx(0.0).margin(1e-8 * scale));
        REQUIRE(cs == Catch::Approx(0.0).margin(1e-8 * scale));
    }
}

TEST_CASE("geodesic distances on a collinear chain") {
    auto set = points_set({{0, 0, 0, 0, 0, 0, 0, 0},
                           {1, 0, 0, 0, 0, 0, 0, 0},
                           {2, 0, 0, 0, 0, 0, 0, 0}});
    auto geo = geodesic_distances(set, 1);
    REQUIRE(geo(0, 2) == Catch::Approx(2.0).margin(1e-12));
    REQUIRE(geo(0, 1) == Catch::Approx(1.0).margin(1e-12));
}

TEST_CASE("geodesic equals Euclidean on a complete graph") {
    auto set = benchmark_case(0.0, 0.1, "diffusion");
    auto geo = geodesic_distances(set, set.size() - 1);
    for (std::size_t i = 0; i < set.size(); ++i)
        for (std::size_t j = 0; j < set.size(); ++j) {
            double s = 0.0;
            for (std::size_t d = 0; d < set.data.cols(); ++d) {
                const double e = set.data(i, d) - set.data(j, d);
                s += e * e;
            }
            REQUIRE(geo(i, j) == Catch::Approx(std::sqrt(s)).margin(1e-12));
        }
}

TEST_CASE("geodesic on a single pair") {
    auto set = points_set({{0, 0, 0, 0, 0, 0, 0, 0}, {0, 3, 0, 0, 0, 0, 0, 0}});
    auto geo = geodesic_distances(set, 1);
    REQUIRE(geo(0, 1) == Catch::Approx(3.0).margin(1e-12));
}

TEST_CASE("disconnected kNN graph names its components") {
    auto set = points_set({{0, 0, 0, 0, 0, 0, 0, 0},
                           {0.1, 0, 0, 0, 0, 0, 0, 0},
                           {50, 0, 0, 0, 0, 0, 0, 0},
                           {50.1, 0, 0, 0, 0, 0, 0, 0}});
    REQUIRE_THROWS_WITH(geodesic_distances(set, 1),
                        Catch::Matchers::ContainsSubstring("components") &&
                            Catch::Matchers::ContainsSubstring("k_neighbors"));
}

TEST_CASE("adjacency weights") {
    auto set = points_set({{0, 0, 0, 0, 0, 0, 0, 0},
                           {1, 0, 0, 0, 0, 0, 0, 0},
                           {2.5, 0, 0, 0, 0, 0, 0, 0}});
    KernelHyper hyper;
    hyper.k_neighbors = 1;
    hyper.weight_scale = 1e12;  // limit: every kept edge gets weight 1
    auto w = adjacency(set, hyper);
    for (std::size_t i = 0; i < 3; ++i) REQUIRE(w(i, i) == 0.0);
    REQUIRE(w(0, 1) == Catch::Approx(1.0).margin(1e-12));
    REQUIRE(w(1, 0) == w(0, 1));

    hyper.weight_scale = 0.0;
    REQUIRE_THROWS_AS(adjacency(set, hyper), ValidationError);
    hyper.weight_scale = -1.0;
    REQUIRE_THROWS_AS(adjacency(set, hyper), ValidationError);

    // coincident points joined by an edge get weight exp(0) = 1
    auto twin = points_set({{0, 0, 0, 0, 0, 0, 0, 0},
                            {0, 0, 0, 0, 0, 0, 0, 0},
                            {5, 0, 0, 0, 0, 0, 0, 0}});
    hyper.weight_scale = 0.7;
    auto wt = adjacency(twin, hyper);
    REQUIRE(wt(0, 1) == Catch::Approx(1.0).margin(1e-14));
}

TEST_CASE("laplacian kernel on the unit path graph") {
    auto w = from_rows({{0, 1, 0}, {1, 0, 1}, {0, 1, 0}});
    auto k = laplacian_kernel(w);
    auto dk = sym_eig(k);
    REQUIRE(dk.eigenvalues[0] == Catch::Approx(1.0).margin(1e-10));
    REQUIRE(dk.eigenvalues[1] == Catch::Approx(1.0 / 3.0).margin(1e-10));
    REQUIRE(dk.eigenvalues[2] == Catch::Approx(0.0).margin(1e-12));
    for (std::size_t i = 0; i < 3; ++i) {
        double s = k(i, 0) + k(i, 1) + k(i, 2);
        REQUIRE(s == Catch::Approx(0.0).margin(1e-12));
    }
}

TEST_CASE("laplacian of a disconnected graph has two zero eigenvalues") {
    auto w = from_rows({{0, 1, 0, 0}, {1, 0, 0, 0}, {0, 0, 0, 2}, {0, 0, 2, 0}});
    DenseMatrix lap(4, 4);
    for (std::size_t i = 0; i < 4; ++i) {
        double deg = 0.0;
        for (std::size_t j = 0; j < 4; ++j) {
            deg += w(i, j);
            lap(i, j) = -w(i, j);
        }
        lap(i, i) = deg;
    }
    auto d = sym_eig(lap);
    REQUIRE(d.eigenvalues[2] == Catch::Approx(0.0).margin(1e-12));
    REQUIRE(d.eigenvalues[3] == Catch::Approx(0.0).margin(1e-12));

    // single weighted edge
    auto l1 = from_rows({{0, 0.5}, {0.5, 0}});
    DenseMatrix lap1(2, 2);
    lap1(0, 0) = lap1(1, 1) = 0.5;
    lap1(0, 1) = lap1(1, 0) = -0.5;
    auto k1 = laplacian_kernel(l1);
    auto check = lap1.multiply(k1).multiply(lap1);
    for (std::size_t i = 0; i < 2; ++i)
        for (std::size_t j = 0; j < 2; ++j)
            REQUIRE(check(i, j) == Catch::Approx(lap1(i, j)).margin(1e-12));
}

TEST_CASE("lle weights: midpoint, coincident, quarter point") {
    auto mid = points_set({{0, 0, 0, 0, 0, 0, 0, 0},
                           {1, 0, 0, 0, 0, 0, 0, 0},
                           {2, 0, 0, 0, 0, 0, 0, 0}});
    auto w = lle_weights(mid, 2, 1e-3);
    REQUIRE(w(1, 0) == Catch::Approx(0.5).margin(1e-12));
    REQUIRE(w(1, 2) == Catch::Approx(0.5).margin(1e-12));

    auto twin = points_set({{0, 0, 0, 0, 0, 0, 0, 0},
                            {0, 0, 0, 0, 0, 0, 0, 0},
                            {4, 0, 0, 0, 0, 0, 0, 0}});
    auto wt = lle_weights(twin, 1, 1e-3);
    REQUIRE(wt(0, 1) == Catch::Approx(1.0).margin(1e-12));

    auto quarter = points_set({{0, 0, 0, 0, 0, 0, 0, 0},
                               {0.25, 0, 0, 0, 0, 0, 0, 0},
                               {1, 0, 0, 0, 0, 0, 0, 0}});
    auto wq = lle_weights(quarter, 2, 1e-8);
    REQUIRE(wq(1, 0) == Catch::Approx(0.75).margin(1e-6));
    REQUIRE(wq(1, 2) == Catch::Approx(0.25).margin(1e-6));
    auto wq_default = lle_weights(quarter, 2, 1e-3);
    REQUIRE(wq_default(1, 0) == Catch::Approx(0.75).margin(1e-3));
    REQUIRE(wq_default(1, 2) == Catch::Approx(0.25).margin(1e-3));
}

TEST_CASE("lle weight rows sum to one") {
    auto set = benchmark_case(4.0, 0.0, "advection");
    auto w = lle_weights(set, 4, 1e-3);
    for (std::size_t i = 0; i < set.size(); ++i) {
        double s = 0.0;
        for (std::size_t j = 0; j < set.size(); ++j) s += w(i, j);
        REQUIRE(s == Catch::Approx(1.0).margin(1e-12));
    }
}

TEST_CASE("lle kernel structure") {
    auto k0 = lle_kernel(DenseMatrix::identity(4));
    for (double v : k0.data()) REQUIRE(v == Catch::Approx(0.0).margin(1e-14));

    // random row-stochastic weights keep the 1-vector in the null space of M
    SplitMix64 rng(5);
    DenseMatrix w(5, 5);
    for (std::size_t i = 0; i < 5; ++i) {
        double s = 0.0;
        for (std::size_t j = 0; j < 5; ++j) {
            w(i, j) = rng.uniform();
            s += w(i, j);
        }
        for (std::size_t j = 0; j < 5; ++j) w(i, j) /= s;
    }
    auto k = lle_kernel(w);
    for (std::size_t i = 0; i < 5; ++i) {
        double s = 0.0;
        for (std::size_t j = 0; j < 5; ++j) s += k(i, j);
        REQUIRE(s == Catch::Approx(0.0).margin(1e-10));
    }

    DenseMatrix bad = DenseMatrix::identity(3);
    bad(0, 0) = 0.5;
    REQUIRE_THROWS_AS(lle_kernel(bad), ValidationError);
}

TEST_CASE("lle chain kernel matches direct assembly oracle") {
    auto chain = points_set({{0, 0, 0, 0, 0, 0, 0, 0},
                             {1, 0, 0, 0, 0, 0, 0, 0},
                             {2, 0, 0, 0, 0, 0, 0, 0}});
    const double reg = 1e-6;
    auto w = lle_weights(chain, 2, reg);
    auto k = lle_kernel(w);

    DenseMatrix iw(3, 3);
    for (std::size_t i = 0; i < 3; ++i)
        for (std::size_t j = 0; j < 3; ++j) iw(i, j) = (i == j ? 1.0 : 0.0) - w(i, j);
    auto m = iw.transpose().multiply(iw);
    auto dm = sym_eig(m);
    auto dk = sym_eig(k);

    // reciprocate M's nonzero eigenvalues (order reverses), pad with zeros
    Vector expected;
    for (std::size_t j = 0; j < 3; ++j)
        if (dm.eigenvalues[j] > 1e-10 * dm.eigenvalues[0]) expected.push_back(1.0 / dm.eigenvalues[j]);
    std::sort(expected.begin(), expected.end(), std::greater<double>());
    expected.resize(3, 0.0);

    for (std::size_t j = 0; j < 3; ++j) {
        if (expected[j] > 0.0)
            REQUIRE(dk.eigenvalues[j] == Catch::Approx(expected[j]).epsilon(1e-8));
        else
            REQUIRE(std::abs(dk.eigenvalues[j]) <= 1e-10 * dk.eigenvalues[0]);
    }
}

TEST_CASE("linear kPCA matches the POD Gram spectrum and coefficients") {
    auto set = benchmark_case(4.0, 0.0, "advection");
    const double n = static_cast<double>(set.size());
    KernelHyper hyper;
    auto model = fit_kpca(set, KernelKind::linear, hyper);
    auto basis = fit_pod_data(set.data, Vector(set.data.cols(), 1.0), InnerProduct::euclidean);

    for (std::size_t j = 0; j < basis.eigenvalues.size(); ++j)
        REQUIRE(model.eigenvalues[j] ==
                Catch::Approx(n * basis.eigenvalues[j]).margin(1e-8 * model.eigenvalues[0]));

    // embedding columns equal POD coefficients up to a per-mode sign
    for (std::size_t j = 0; j < std::min<std::size_t>(5, model.embedding.cols()); ++j) {
        double flip = 0.0;
        for (std::size_t i = 0; i < set.size() && flip == 0.0; ++i) {
            auto z = project(basis, set.data.row(i), j + 1);
            if (std::abs(z[j]) > 1e-8) flip = z[j] / model.embedding(i, j);
        }
        REQUIRE(std::abs(std::abs(flip) - 1.0) < 1e-6);
        for (std::size_t i = 0; i < set.size(); ++i) {
            auto z = project(basis, set.data.row(i), j + 1);
            REQUIRE(model.embedding(i, j) * flip ==
                    Catch::Approx(z[j]).margin(1e-8 * std::sqrt(model.eigenvalues[0])));
        }
    }
}

TEST_CASE("MDS spectrum equals linear kPCA; complete-graph Isomap equals MDS") {
    for (auto [cT, cD, label] : {std::tuple{4.0, 0.0, "advection"}, std::tuple{0.0, 0.1, "diffusion"}}) {
        auto set = benchmark_case(cT, cD, label);
        KernelHyper hyper;
        auto lin = fit_kpca(set, KernelKind::linear, hyper);
        auto mds = fit_kpca(set, KernelKind::mds, hyper);
        for (std::size_t j = 0; j < set.size(); ++j)
            REQUIRE(mds.eigenvalues[j] ==
                    Catch::Approx(lin.eigenvalues[j]).margin(1e-8 * lin.eigenvalues[0]));

        KernelHyper complete = hyper;
        complete.k_neighbors = set.size() - 1;
        auto iso = fit_kpca(set, KernelKind::isomap, complete);
        for (std::size_t j = 0; j < set.size(); ++j)
            REQUIRE(iso.eigenvalues[j] ==
                    Catch::Approx(mds.eigenvalues[j]).margin(1e-8 * mds.eigenvalues[0]));
    }
}

TEST_CASE("every kernel is symmetric PSD with the expected null structure") {
    for (auto [cT, cD, label] : {std::tuple{4.0, 0.0, "advection"}, std::tuple{0.0, 0.1, "diffusion"},
                                 std::tuple{4.0, 0.1, "advection_diffusion"}}) {
        auto set = benchmark_case(cT, cD, label);
        KernelHyper hyper;
        for (KernelKind kind : {KernelKind::linear, KernelKind::mds, KernelKind::isomap,
                                KernelKind::spectral_clustering, KernelKind::lle}) {
            auto model = fit_kpca(set, kind, hyper);
            REQUIRE(model.kernel.asymmetry() <= 1e-10);
            const double lam1 = model.eigenvalues[0];
            for (double l : model.eigenvalues) REQUIRE(l >= -1e-10 * lam1);

            if (kind == KernelKind::mds || kind == KernelKind::isomap ||
                kind == KernelKind::spectral_clustering || kind == KernelKind::lle) {
                for (std::size_t i = 0; i < set.size(); ++i) {
                    double s = 0.0;
                    for (std::size_t j = 0; j < set.size(); ++j) s += model.kernel(i, j);
                    REQUIRE(s == Catch::Approx(0.0).margin(1e-8 * std::max(1.0, lam1)));
                }
            }

            // normalization lambda_j (v_j . v_j) = 1 for retained components
            for (std::size_t j = 0; j < model.embedding.cols(); ++j) {
                double s = 0.0;
                for (std::size_t i = 0; i < set.size(); ++i)
                    s += model.embedding(i, j) * model.embedding(i, j);
                // embedding column norm^2 = lambda_j  <=>  lambda (v.v) = 1 for v = col / lambda
                REQUIRE(s == Catch::Approx(model.eigenvalues[j]).epsilon(1e-10));
            }
        }
    }
}
