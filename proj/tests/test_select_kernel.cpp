#include <doctest.h>

#include "netselect/errors.hpp"
#include "netselect/reconstructor.hpp"
#include "netselect/select_kernel.hpp"
#include "netselect/select_linear.hpp"
#include "test_support.hpp"

using namespace netselect;
using namespace testsupport;

namespace {

double padded_training_mse(const Reconstructor& rec, const Matrix& x, int H) {
    Matrix ext = Matrix::Zero(x.rows(), x.cols() + H);
    ext.leftCols(x.cols()) = x;
    return reconstruction_mse(rec, ext, 0, ext.cols()) * static_cast<double>(ext.cols()) /
           static_cast<double>(x.cols());
}

SensorGraph random_graph(Index n, std::uint64_t seed) {
    const Matrix r = random_normal(n, 2, seed);
    std::vector<Coord> c;
    for (Index i = 0; i < n; ++i) {
        c.push_back({r(i, 0), r(i, 1)});
    }
    return build_knn_graph(c, std::min<int>(4, static_cast<int>(n) - 1), 2);
}

}  // namespace

TEST_CASE("kernel kind tags round-trip") {
    for (auto k : {KernelKind::Laplacian, KernelKind::SpatialTemporal, KernelKind::Autocovariance, KernelKind::Linear,
                   KernelKind::Rbf}) {
        CHECK(parse_kernel_kind(to_string(k)) == k);
    }
    CHECK_THROWS_AS(parse_kernel_kind("poly"), InputError);
    KernelConfig bad;
    bad.lambda = -1.0;
    CHECK_THROWS_AS(bad.validate(), InputError);
}

TEST_CASE("kernel_reconstructor closed forms") {
    const Matrix cross = random_normal(2, 3, 60);
    CHECK(max_abs(kernel_reconstructor(cross, Matrix::Identity(3, 3), 0.0) - cross) < 1e-14);
    const Matrix g = random_normal(3, 3, 61);
    const Matrix obs = g * g.transpose() + Matrix::Identity(3, 3);
    double prev = 1e300;
    for (double lam : {1.0, 10.0, 100.0}) {
        const double m = max_abs(kernel_reconstructor(cross, obs, lam));
        CHECK(m < prev);
        prev = m;
    }
    CHECK_THROWS_AS(kernel_reconstructor(cross, obs, -1.0), InputError);
    CHECK_THROWS_AS(kernel_reconstructor(cross, Matrix::Identity(2, 2), 0.0), InputError);
}

TEST_CASE("autocovariance kernel at lambda 0 reproduces the linear fit") {
    const Matrix x = var1_sample(6, 1500, 62);
    for (int H : {0, 2}) {
        const auto b = estimate_blocks(x, H);
        const auto k = autocovariance_kernel(b, H);
        const std::vector<Index> I{2, 5};
        const auto lin = fit_predict_linear(b, I, H);
        const auto ker = fit_predict_kernel(k, I, 0.0, H);
        CHECK(max_abs(lin.theta() - ker.theta()) <= 1e-8 * std::max(1.0, max_abs(lin.theta())));
        CHECK(std::abs(criterion_kernel(b, k, I, 0.0, H) - criterion_linear_h(b, I, H)) <= 1e-8);
    }
}

TEST_CASE("kernel criterion equals the kernel reconstructor's training error") {
    const Index n = 7;
    const Matrix x = var1_sample(n, 1200, 63);
    const auto g = random_graph(n, 64);
    const auto spec = make_spectrum(combinatorial_laplacian(g));
    const auto kg = laplacian_kernel(spec);
    const std::vector<Index> I{0, 4};
    SUBCASE("laplacian kernel, lambda 0") {
        const auto b = estimate_blocks(x, 0);
        const LagKernel k{{kg.mat()}};
        const auto rec = fit_predict_kernel(k, I, 0.0, 0);
        CHECK(rel_diff(criterion_kernel(b, k, I, 0.0, 0), padded_training_mse(rec, x, 0)) <= 1e-8);
    }
    SUBCASE("spatial-temporal kernel, H = 2") {
        const auto b = estimate_blocks(x, 2);
        const auto k = spatial_temporal_kernel(kg, 0.17, 2);
        const auto rec = fit_predict_kernel(k, I, 0.3, 2);
        CHECK(rel_diff(criterion_kernel(b, k, I, 0.3, 2), padded_training_mse(rec, x, 2)) <= 1e-8);
    }
    SUBCASE("rbf node kernel") {
        const auto b = estimate_blocks(x, 0);
        const auto k = rbf_node_kernel(x, 0.5);
        CHECK(k.lags[0](1, 1) == 1.0);
        const double d01 = (x.row(0) - x.row(1)).squaredNorm() / static_cast<double>(x.cols());
        CHECK(k.lags[0](0, 1) == doctest::Approx(std::exp(-0.5 * d01)));
        const auto rec = fit_predict_kernel(k, I, 0.1, 0);
        CHECK(rel_diff(criterion_kernel(b, k, I, 0.1, 0), padded_training_mse(rec, x, 0)) <= 1e-8);
    }
    SUBCASE("huge lambda shrinks to tr(Sigma_I)") {
        const auto b = estimate_blocks(x, 0);
        const LagKernel k{{kg.mat()}};
        const double trace_i = b.sigma(0, 0) + b.sigma(4, 4);
        CHECK(std::abs(criterion_kernel(b, k, I, 1e9, 0) - trace_i) <= 0.01 * trace_i);
    }
}

TEST_CASE("make_lag_kernel dispatch") {
    const Matrix x = var1_sample(5, 300, 65);
    const auto b = estimate_blocks(x, 1);
    const auto spec = make_spectrum(combinatorial_laplacian(random_graph(5, 66)));
    KernelConfig c;
    c.kind = KernelKind::SpatialTemporal;
    c.H = 1;
    c.gamma = 0.4;
    const auto st = make_lag_kernel(c, &spec, b);
    REQUIRE(st.lags.size() == 2);
    CHECK(max_abs(st.lags[1] - laplacian_kernel(spec).mat() * std::exp(-0.4)) < 1e-14);
    c.kind = KernelKind::Autocovariance;
    CHECK(max_abs(make_lag_kernel(c, nullptr, b).lags[1] - b.gammas[1]) == 0.0);
    c.kind = KernelKind::Laplacian;
    CHECK_THROWS_AS(make_lag_kernel(c, &spec, b), InputError);
    c.H = 0;
    CHECK_NOTHROW(make_lag_kernel(c, &spec, b));
    CHECK_THROWS_AS(make_lag_kernel(c, nullptr, b), InputError);
    c.kind = KernelKind::Linear;
    CHECK(max_abs(make_lag_kernel(c, nullptr, b).lags[0] - b.gammas[0]) == 0.0);
    c.kind = KernelKind::Rbf;
    CHECK_THROWS_AS(make_lag_kernel(c, nullptr, b), InputError);
    CHECK_NOTHROW(make_lag_kernel(c, nullptr, b, &x));
}

TEST_CASE("kernel greedy: autocovariance at lambda 0 follows linear greedy") {
    const Matrix x = var1_sample(7, 1000, 67);
    for (int H : {0, 1, 3}) {
        const auto b = estimate_blocks(x, H);
        KernelGreedyOptions o;
        o.H = H;
        const auto ker = greedy_select_kernel(b, autocovariance_kernel(b, H), 3, o);
        const auto lin = greedy_select_linear(b, 3, H);
        CHECK(ker.order == lin.order);
        for (std::size_t k = 0; k < 3; ++k) {
            CHECK(std::abs(ker.step_values[k] - lin.step_values[k]) <= 1e-8);
        }
        CHECK(ker.method == (H == 0 ? "kernel-h0" : "kernel-h"));
    }
}

TEST_CASE("kernel greedy: CG path, p = 1 and threads") {
    const Matrix x = var1_sample(8, 800, 68);
    const auto b = estimate_blocks(x, 1);
    const auto spec = make_spectrum(combinatorial_laplacian(random_graph(8, 69)));
    const auto k = spatial_temporal_kernel(laplacian_kernel(spec), 0.3, 1);
    KernelGreedyOptions o;
    o.H = 1;
    o.lambda = 0.05;
    const auto direct = greedy_select_kernel(b, k, 4, o);
    o.use_cg = true;
    o.cg_eps = 1e-10;
    const auto cg = greedy_select_kernel(b, k, 4, o);
    CHECK(cg.order == direct.order);
    o.threads = 3;
    CHECK(greedy_select_kernel(b, k, 4, o).order == direct.order);

    o.use_cg = false;
    o.threads = 1;
    const auto one = greedy_select_kernel(b, k, 1, o);
    double best = 1e300;
    Index arg = -1;
    for (Index i = 0; i < 8; ++i) {
        const double v = criterion_kernel(b, k, {i}, 0.05, 1);
        if (v < best) {
            best = v;
            arg = i;
        }
    }
    CHECK(one.order[0] == arg);
    CHECK(one.step_values[0] == doctest::Approx(best).epsilon(1e-10));
}

TEST_CASE("kernel greedy: CG failure falls back with a warning") {
    // an unreachable tolerance makes every CG solve fail
    const Matrix x = var1_sample(8, 400, 70);
    const auto b = estimate_blocks(x, 0);
    LagKernel k{{random_spd(8, 73).mat()}};
    KernelGreedyOptions o;
    o.use_cg = true;
    o.cg_eps = 1e-300;
    const auto r = greedy_select_kernel(b, k, 1, o);
    CHECK_FALSE(r.warnings.empty());
    o.use_cg = false;
    CHECK(greedy_select_kernel(b, k, 1, o).order == r.order);
}

TEST_CASE("criterion is nondecreasing in lambda") {
    const Matrix x = var1_sample(5, 1000, 71);
    const auto b = estimate_blocks(x, 1);
    const auto rep = lambda_monotonicity_check(b, {1, 3}, {0.0, 0.1, 1.0, 10.0}, 1);
    CHECK(rep.nondecreasing);
    CHECK(rep.minimum_at_first);
    CHECK(std::abs(rep.values[0] - criterion_linear_h(b, {1, 3}, 1)) <= 1e-8);
    const auto flat = lambda_monotonicity_check(b, {1, 3}, {0.0, 0.0, 0.0}, 1);
    CHECK(flat.values[0] == flat.values[1]);
    CHECK(flat.values[1] == flat.values[2]);
    CHECK_THROWS_AS(lambda_monotonicity_check(b, {1}, {1.0, 0.5}, 1), InputError);
}

TEST_CASE("ridge Gram condition number bound") {
    const auto spec = make_spectrum(combinatorial_laplacian(random_graph(9, 72)));
    const auto k = spatial_temporal_kernel(laplacian_kernel(spec), 0.2, 2);
    const std::vector<Index> s{0, 2, 3, 5, 8};
    const auto ab = assemble_lag_blocks(k.lags, {1}, s, 2);
    const double lmax = Eigen::SelfAdjointEigenSolver<Matrix>(ab.alpha).eigenvalues().maxCoeff();
    for (double lam : {1e-3, 0.1, 1.0}) {
        Matrix reg = ab.alpha;
        reg.diagonal().array() += lam;
        const Vector ev = Eigen::SelfAdjointEigenSolver<Matrix>(reg).eigenvalues();
        CHECK(ev.maxCoeff() / ev.minCoeff() <= lmax / lam + 1.0 + 1e-8);
    }
}
