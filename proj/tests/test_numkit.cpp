#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "morkit/dense.hpp"
#include "morkit/eig.hpp"
#include "morkit/interp.hpp"
#include "morkit/quadrature.hpp"
#include "morkit/rng.hpp"

using namespace mor;

namespace {

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

DenseMatrix random_symmetric(std::size_t n, SplitMix64& rng) {
    DenseMatrix a(n, n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i; j < n; ++j) a(i, j) = a(j, i) = rng.uniform(-1.0, 1.0);
    return a;
}

DenseMatrix random_psd(std::size_t n, SplitMix64& rng) {
    DenseMatrix r(n, n);
    for (auto& v : r.data()) v = rng.uniform(-1.0, 1.0);
    return r.multiply(r.transpose());
}

}  // namespace

TEST_CASE("sym_eig identity") {
    auto d = sym_eig(DenseMatrix::identity(3));
    for (double l : d.eigenvalues) REQUIRE(l == Catch::Approx(1.0).margin(1e-12));
}

TEST_CASE("sym_eig hand 2x2") {
    auto d = sym_eig(from_rows({{2, 0}, {0, 0}}));
    REQUIRE(d.eigenvalues[0] == Catch::Approx(2.0).margin(1e-12));
    REQUIRE(d.eigenvalues[1] == Catch::Approx(0.0).margin(1e-12));
    REQUIRE(std::abs(d.eigenvectors(0, 0)) == Catch::Approx(1.0).margin(1e-12));
    REQUIRE(std::abs(d.eigenvectors(1, 0)) == Catch::Approx(0.0).margin(1e-12));
}

TEST_CASE("sym_eig path-graph Laplacian") {
    auto d = sym_eig(from_rows({{1, -1, 0}, {-1, 2, -1}, {0, -1, 1}}));
    REQUIRE(d.eigenvalues[0] == Catch::Approx(3.0).margin(1e-10));
    REQUIRE(d.eigenvalues[1] == Catch::Approx(1.0).margin(1e-10));
    REQUIRE(d.eigenvalues[2] == Catch::Approx(0.0).margin(1e-10));
}

TEST_CASE("sym_eig reconstruction and orthonormality on random symmetric") {
    SplitMix64 rng(2024);
    for (int trial = 0; trial < 5; ++trial) {
        auto a = random_symmetric(10, rng);
        auto d = sym_eig(a);
        const double scale = frobenius_norm(a);
        // V diag(lambda) V^T == A
        DenseMatrix vl = d.eigenvectors;
        for (std::size_t i = 0; i < 10; ++i)
            for (std::size_t j = 0; j < 10; ++j) vl(i, j) *= d.eigenvalues[j];
        DenseMatrix rec = vl.multiply(d.eigenvectors.transpose());
        double err = 0.0;
        for (std::size_t i = 0; i < 10; ++i)
            for (std::size_t j = 0; j < 10; ++j) err = std::max(err, std::abs(rec(i, j) - a(i, j)));
        REQUIRE(err <= 1e-8 * scale);

        DenseMatrix vtv = d.eigenvectors.transpose().multiply(d.eigenvectors);
        for (std::size_t i = 0; i < 10; ++i)
            for (std::size_t j = 0; j < 10; ++j)
                REQUIRE(vtv(i, j) == Catch::Approx(i == j ? 1.0 : 0.0).margin(1e-10));

        // eigenvalues sorted non-increasing
        for (std::size_t j = 1; j < 10; ++j) REQUIRE(d.eigenvalues[j - 1] >= d.eigenvalues[j]);
    }
}

TEST_CASE("sym_eig input validation") {
    REQUIRE_THROWS_AS(sym_eig(DenseMatrix(2, 3)), ValidationError);
    REQUIRE_THROWS_AS(sym_eig(from_rows({{1, 2}, {0, 1}})), ValidationError);
    DenseMatrix bad(2, 2);
    bad(0, 0) = std::nan("");
    REQUIRE_THROWS_AS(sym_eig(bad), ValidationError);
}

TEST_CASE("pseudo_inverse diagonal and identity") {
    auto p = pseudo_inverse(from_rows({{2, 0}, {0, 0}}));
    REQUIRE(p(0, 0) == Catch::Approx(0.5).margin(1e-12));
    REQUIRE(p(1, 1) == Catch::Approx(0.0).margin(1e-12));
    auto pid = pseudo_inverse(DenseMatrix::identity(4));
    for (std::size_t i = 0; i < 4; ++i)
        for (std::size_t j = 0; j < 4; ++j)
            REQUIRE(pid(i, j) == Catch::Approx(i == j ? 1.0 : 0.0).margin(1e-12));
}

TEST_CASE("pseudo_inverse preserves Laplacian null space") {
    auto lap = from_rows({{1, -1, 0}, {-1, 2, -1}, {0, -1, 1}});
    auto p = pseudo_inverse(lap);
    for (std::size_t i = 0; i < 3; ++i) {
        double s = p(i, 0) + p(i, 1) + p(i, 2);
        REQUIRE(s == Catch::Approx(0.0).margin(1e-10));
    }
    // cross-check spectrum against sym_eig oracle: nonzero eigenvalues reciprocated
    auto dl = sym_eig(lap);
    auto dp = sym_eig(p);
    REQUIRE(dp.eigenvalues[0] == Catch::Approx(1.0 / dl.eigenvalues[1]).margin(1e-10));
    REQUIRE(dp.eigenvalues[1] == Catch::Approx(1.0 / dl.eigenvalues[0]).margin(1e-10));
    REQUIRE(dp.eigenvalues[2] == Catch::Approx(0.0).margin(1e-12));
}

TEST_CASE("pseudo_inverse Moore-Penrose identities on random PSD") {
    SplitMix64 rng(99);
    for (int trial = 0; trial < 4; ++trial) {
        auto a = random_psd(6, rng);
        auto p = pseudo_inverse(a);
        auto apa = a.multiply(p).multiply(a);
        auto pap = p.multiply(a).multiply(p);
        const double scale_a = a.max_abs();
        const double scale_p = p.max_abs();
        for (std::size_t i = 0; i < 6; ++i)
            for (std::size_t j = 0; j < 6; ++j) {
                REQUIRE(apa(i, j) == Catch::Approx(a(i, j)).margin(1e-8 * scale_a));
                REQUIRE(pap(i, j) == Catch::Approx(p(i, j)).margin(1e-8 * scale_p));
            }
    }
}

TEST_CASE("pseudo_inverse rejects indefinite input") {
    REQUIRE_THROWS_AS(pseudo_inverse(from_rows({{1, 0}, {0, -1}})), ValidationError);
}

TEST_CASE("interp exact at nodes and on linear data") {
    Vector x{0, 0.5, 1.2, 2.0, 3.5, 4.0, 5.5, 6.0};
    Vector y;
    for (double v : x) y.push_back(2.0 * v);
    CubicInterpolant itp(x, y);
    for (std::size_t i = 0; i < x.size(); ++i) REQUIRE(itp.eval(x[i]) == Catch::Approx(y[i]).margin(1e-14));
    for (double q : {0.25, 1.0, 2.7, 5.9}) REQUIRE(itp.eval(q) == Catch::Approx(2.0 * q).margin(1e-12));
}

TEST_CASE("interp sine accuracy at midpoints") {
    const std::size_t n = 512;
    Vector x(n), y(n);
    for (std::size_t i = 0; i < n; ++i) {
        x[i] = -1.0 + 4.0 * static_cast<double>(i) / static_cast<double>(n - 1);
        y[i] = std::sin(x[i]);
    }
    CubicInterpolant itp(x, y);
    double max_err = 0.0;
    for (std::size_t i = 0; i + 1 < n; ++i) {
        const double q = 0.5 * (x[i] + x[i + 1]);
        max_err = std::max(max_err, std::abs(itp.eval(q) - std::sin(q)));
    }
    REQUIRE(max_err < 1e-6);
}

TEST_CASE("interp stays monotone on monotone data") {
    const std::size_t n = 128;
    Vector x(n), y(n);
    for (std::size_t i = 0; i < n; ++i) {
        x[i] = -1.0 + 4.0 * static_cast<double>(i) / static_cast<double>(n - 1);
        y[i] = x[i] + 0.5 * std::tanh(3.0 * x[i]);
    }
    CubicInterpolant itp(x, y);
    double prev = itp.eval(x.front());
    for (int k = 1; k <= 4 * 128; ++k) {
        const double q = -1.0 + 4.0 * static_cast<double>(k) / (4.0 * 128.0);
        const double v = itp.eval(std::min(q, x.back()));
        REQUIRE(v >= prev - 1e-13);
        prev = v;
    }
}

TEST_CASE("interp has no overshoot on step-like monotone data") {
    Vector x{0, 1, 2, 3, 4, 5, 6, 7};
    Vector y{0, 0, 0, 0.1, 0.9, 1, 1, 1};
    CubicInterpolant itp(x, y);
    for (int k = 0; k <= 700; ++k) {
        const double v = itp.eval(7.0 * k / 700.0);
        REQUIRE(v >= -1e-12);
        REQUIRE(v <= 1.0 + 1e-12);
    }
}

TEST_CASE("interp rejects extrapolation and bad grids") {
    Vector x{0, 1, 2, 3, 4, 5, 6, 7}, y{0, 1, 2, 3, 4, 5, 6, 7};
    CubicInterpolant itp(x, y);
    REQUIRE_THROWS_AS(itp.eval(-0.1), ValidationError);
    REQUIRE_THROWS_AS(itp.eval(7.1), ValidationError);
    REQUIRE_THROWS_AS(CubicInterpolant({0, 0, 1}, {1, 2, 3}), ValidationError);
    REQUIRE_THROWS_AS(CubicInterpolant({0, 1}, {1, 2, 3}), ValidationError);
}

TEST_CASE("monotone_invert identity and shift") {
    Vector x(64), fx(64);
    for (std::size_t i = 0; i < 64; ++i) {
        x[i] = -1.0 + 4.0 * static_cast<double>(i) / 63.0;
        fx[i] = x[i];
    }
    REQUIRE(monotone_invert(x, fx, 0.3) == Catch::Approx(0.3).margin(1e-9));
    for (auto& v : fx) v += 1.0;
    REQUIRE(monotone_invert(x, fx, 1.0) == Catch::Approx(0.0).margin(1e-9));
}

TEST_CASE("monotone_invert cube root") {
    const std::size_t n = 512;
    Vector x(n), fx(n);
    for (std::size_t i = 0; i < n; ++i) {
        x[i] = 2.0 * static_cast<double>(i) / static_cast<double>(n - 1);
        fx[i] = x[i] * x[i] * x[i];
    }
    REQUIRE(monotone_invert(x, fx, 1.0) == Catch::Approx(1.0).margin(1e-6));
}

TEST_CASE("monotone_invert errors") {
    Vector x{0, 1, 2, 3, 4, 5, 6, 7};
    Vector bad{0, 1, 0.5, 2, 3, 4, 5, 6};
    REQUIRE_THROWS_AS(monotone_invert(x, bad, 0.5), ValidationError);
    Vector good{0, 1, 2, 3, 4, 5, 6, 7};
    REQUIRE_THROWS_AS(monotone_invert(x, good, -0.5), ValidationError);
    REQUIRE_THROWS_AS(monotone_invert(x, good, 7.5), ValidationError);
}

TEST_CASE("invert composed with eval is identity") {
    SplitMix64 rng(7);
    Vector x(40), fx(40);
    double acc = 0.0;
    for (std::size_t i = 0; i < 40; ++i) {
        x[i] = static_cast<double>(i) * 0.25;
        acc += 0.05 + rng.uniform();
        fx[i] = acc;
    }
    CubicInterpolant itp(x, fx);
    for (int k = 0; k < 25; ++k) {
        const double q = rng.uniform(x.front(), x.back());
        REQUIRE(monotone_invert(x, fx, itp.eval(q)) == Catch::Approx(q).margin(1e-8));
    }
}

TEST_CASE("quadrature basics") {
    Vector ones(101, 1.0);
    REQUIRE(quadrature(ones, 4.0 / 100.0) == Catch::Approx(4.0).margin(1e-13));

    Vector lin(101);
    for (std::size_t i = 0; i < 101; ++i) lin[i] = static_cast<double>(i) / 100.0;
    REQUIRE(quadrature(lin, 0.01) == Catch::Approx(0.5).margin(1e-14));

    Vector sq(1001);
    for (std::size_t i = 0; i < 1001; ++i) {
        const double v = static_cast<double>(i) / 1000.0;
        sq[i] = v * v;
    }
    REQUIRE(quadrature(sq, 0.001) == Catch::Approx(1.0 / 3.0).margin(1e-6));

    Vector one(1, 1.0);
    REQUIRE_THROWS_AS(quadrature(one, 0.1), ValidationError);
}

TEST_CASE("linear solvers") {
    auto a = from_rows({{4, 1, 0}, {1, 3, 1}, {0, 1, 2}});
    Vector b{1, 2, 3};
    auto x = lu_solve(a, b);
    auto ax = a.multiply(std::span<const double>(x));
    for (std::size_t i = 0; i < 3; ++i) REQUIRE(ax[i] == Catch::Approx(b[i]).margin(1e-12));

    auto l = cholesky(a);
    auto xc = cholesky_solve(l, b);
    for (std::size_t i = 0; i < 3; ++i) REQUIRE(xc[i] == Catch::Approx(x[i]).margin(1e-12));

    REQUIRE_THROWS_AS(cholesky(from_rows({{1, 2}, {2, 1}})), NumericalError);
    REQUIRE_THROWS_AS(lu_solve(DenseMatrix(2, 2), {1, 1}), NumericalError);
}
