#include <doctest.h>

#include <atomic>
#include <limits>

#include "netselect/errors.hpp"
#include "netselect/numerics.hpp"
#include "test_support.hpp"

using namespace netselect;
using namespace testsupport;

TEST_CASE("SymMatrix stores an exactly symmetric matrix") {
    Matrix m(2, 2);
    m << 1.0, 2.0, 2.0 + 1e-14, 3.0;
    const SymMatrix s(m);
    CHECK(s(0, 1) == s(1, 0));
    Matrix bad(2, 2);
    bad << 1.0, 2.0, 3.0, 4.0;
    CHECK_THROWS_AS(SymMatrix{bad}, InputError);
    CHECK_THROWS_AS(SymMatrix{Matrix(2, 3)}, InputError);
}

TEST_CASE("sym_eig on closed-form cases") {
    const auto id = sym_eig(SymMatrix::identity(3));
    CHECK(max_abs(id.values - Vector::Ones(3)) < 1e-14);

    Matrix m(2, 2);
    m << 2, 1, 1, 2;
    const auto e = sym_eig(SymMatrix(m));
    CHECK(e.values(0) == doctest::Approx(1.0));
    CHECK(e.values(1) == doctest::Approx(3.0));
}

TEST_CASE("sym_eig reconstructs a random symmetric matrix") {
    const SymMatrix m(random_symmetric(6, 11));
    const auto e = sym_eig(m);
    CHECK(max_abs(e.vectors.transpose() * e.vectors - Matrix::Identity(6, 6)) <= 1e-10);
    const Matrix back = e.vectors * e.values.asDiagonal() * e.vectors.transpose();
    CHECK(max_abs(back - m.mat()) <= 1e-8 * max_abs(m.mat()));
    CHECK(e.values.sum() == doctest::Approx(m.trace()).epsilon(1e-8));
    for (Index i = 1; i < 6; ++i) {
        CHECK(e.values(i - 1) <= e.values(i));
    }
    // sign convention: the largest-magnitude entry of each vector is nonnegative
    for (Index j = 0; j < 6; ++j) {
        Index k;
        e.vectors.col(j).cwiseAbs().maxCoeff(&k);
        CHECK(e.vectors(k, j) >= 0.0);
    }
}

TEST_CASE("sym_eig rejects non-finite input") {
    Matrix m = Matrix::Identity(2, 2);
    m(0, 0) = std::numeric_limits<double>::quiet_NaN();
    CHECK_THROWS_AS(sym_eig(SymMatrix(m)), InputError);
}

TEST_CASE("solve_spd closed-form and eigen-oracle cases") {
    const Matrix b = random_normal(3, 2, 5);
    CHECK(max_abs(solve_spd(SymMatrix::identity(3), b) - b) < 1e-14);

    Vector d(2);
    d << 2, 4;
    Vector rhs(2);
    rhs << 2, 4;
    const Matrix x = solve_spd(SymMatrix::diagonal(d), rhs);
    CHECK(x(0, 0) == doctest::Approx(1.0));
    CHECK(x(1, 0) == doctest::Approx(1.0));

    const SymMatrix a = random_spd(10, 3);
    const Matrix rhs2 = random_normal(10, 3, 4);
    const Matrix sol = solve_spd(a, rhs2);
    const auto e = sym_eig(a);
    const Matrix oracle = e.vectors * e.values.cwiseInverse().asDiagonal() * e.vectors.transpose() * rhs2;
    CHECK(max_abs(sol - oracle) <= 1e-8 * std::max(1.0, max_abs(oracle)));
    CHECK(max_abs(a.mat() * sol - rhs2) <= 1e-8 * max_abs(rhs2));
}

TEST_CASE("solve_spd jitter and singularity") {
    // rank-one PSD matrix: the jittered solve still satisfies the system on its range
    Vector u(3);
    u << 1, 2, 3;
    const SymMatrix rank1(u * u.transpose());
    const Matrix sol = solve_spd(rank1, u);
    CHECK(all_finite(sol));

    SolveOptions raw;
    raw.allow_jitter = false;
    CHECK_THROWS_AS(solve_spd(rank1, u, raw), SingularityError);

    const SymMatrix zero(Matrix::Zero(3, 3));
    try {
        solve_spd(zero, u);
        FAIL("expected SingularityError");
    } catch (const SingularityError& e) {
        CHECK(e.smallest_eigenvalue() == doctest::Approx(0.0));
    }
}

TEST_CASE("conjugate_gradient closed-form cases") {
    const Vector b = random_normal(4, 1, 9);
    const auto r = conjugate_gradient(SymMatrix::identity(4), b, 1e-12);
    CHECK(r.iterations == 1);
    CHECK(max_abs(r.x - b) < 1e-14);

    Vector d(2);
    d << 1, 2;
    Vector rhs(2);
    rhs << 2, 2;
    const auto r2 = conjugate_gradient(SymMatrix::diagonal(d), rhs, 1e-12);
    CHECK(r2.x(0) == doctest::Approx(2.0));
    CHECK(r2.x(1) == doctest::Approx(1.0));
}

TEST_CASE("conjugate_gradient agrees with the direct solve") {
    const SymMatrix a = random_spd(50, 21);
    const Vector b = random_normal(50, 1, 22);
    const auto r = conjugate_gradient(a, b, 1e-10);
    CHECK((a.mat() * r.x - b).norm() <= 1e-10 * b.norm() * 1.0000001);
    CHECK(r.iterations <= 500);
    const Vector direct = solve_spd(a, b);
    CHECK((r.x - direct).norm() <= 1e-6 * b.norm());
}

TEST_CASE("conjugate_gradient reports non-convergence") {
    // indefinite matrix: CG cannot reach the tolerance
    Vector d(2);
    d << 1, -1;
    Vector b(2);
    b << 1, 1;
    CHECK_THROWS_AS(conjugate_gradient(SymMatrix::diagonal(d), b, 1e-12), ConvergenceError);
    CHECK_THROWS_AS(conjugate_gradient(SymMatrix::identity(2), b, 0.0), InputError);
}

TEST_CASE("power_method") {
    Vector d(2);
    d << 3, 1;
    CHECK(power_method(SymMatrix::diagonal(d)).value == doctest::Approx(3.0));
    CHECK(power_method(SymMatrix::identity(4)).value == doctest::Approx(1.0));
    const Matrix g = random_normal(20, 20, 31);
    const SymMatrix psd(g * g.transpose());
    const auto pm = power_method(psd);
    CHECK(pm.converged);
    CHECK(rel_diff(pm.value, sym_eig(psd).values.maxCoeff()) <= 1e-6);
}

TEST_CASE("log_det_spd and take") {
    const SymMatrix a = random_spd(5, 8);
    CHECK(log_det_spd(a.mat()) == doctest::Approx(std::log(a.mat().determinant())).epsilon(1e-10));
    CHECK_THROWS_AS(log_det_spd(-Matrix::Identity(2, 2)), Error);
    const std::vector<Index> rows{2, 0};
    const std::vector<Index> cols{1};
    const Matrix t = take(a.mat(), rows, cols);
    CHECK(t(0, 0) == a(2, 1));
    CHECK(t(1, 0) == a(0, 1));
}

TEST_CASE("parallel_for visits every index once") {
    std::vector<std::atomic<int>> hits(257);
    parallel_for(hits.size(), 4, [&](std::size_t i) { hits[i]++; });
    for (const auto& h : hits) {
        CHECK(h.load() == 1);
    }
}
