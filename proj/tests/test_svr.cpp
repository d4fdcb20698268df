#include <doctest.h>

#include "loadcast/error.hpp"
#include "loadcast/svr.hpp"
#include "svr_fixtures.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <filesystem>
#include <random>

using namespace loadcast;
using fixtures::raw_pipeline;

TEST_CASE("rbf kernel values") {
    const std::vector<double> x{0.3, -1.2}, z{1.0, 0.5};
    CHECK(rbf_kernel(x, x, 7.0) == 1.0);
    const std::vector<double> a{0.0}, b{1.0};
    CHECK(rbf_kernel(a, b, 1.0) == doctest::Approx(0.36787944117144233).epsilon(1e-15));
    CHECK(rbf_kernel(x, z, 0.4) == rbf_kernel(z, x, 0.4));
    const double k = rbf_kernel(x, z, 0.4);
    CHECK(k > 0.0);
    CHECK(k <= 1.0);
    CHECK_THROWS_AS(rbf_kernel(x, a, 1.0), InvalidInput);
}

TEST_CASE("gram matrix is positive semidefinite") {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(-3.0, 3.0);
    for (int trial = 0; trial < 25; ++trial) {
        const std::size_t p = 1 + static_cast<std::size_t>(trial % 5);
        Matrix x(20, p);
        for (std::size_t i = 0; i < 20; ++i) {
            for (std::size_t j = 0; j < p; ++j) x(i, j) = u(rng);
        }
        const double gamma = 0.05 + 0.2 * trial;
        KernelCache cache(x, gamma, 1 << 20);
        Eigen::MatrixXd k(20, 20);
        for (std::size_t i = 0; i < 20; ++i) {
            const auto row = cache.row(i);
            for (std::size_t j = 0; j < 20; ++j) k(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = row[j];
        }
        CHECK((k - k.transpose()).cwiseAbs().maxCoeff() == 0.0);
        const double smallest = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(k).eigenvalues().minCoeff();
        CHECK(smallest >= -1e-8);
    }
}

TEST_CASE("kernel cache evicts least recently used rows and recomputes them identically") {
    Matrix x(6, 1, {0.0, 1.0, 2.0, 3.0, 4.0, 5.0});
    KernelCache small(x, 0.5, 2 * 6 * sizeof(double));
    KernelCache big(x, 0.5, 1 << 20);
    const std::vector<std::size_t> order{0, 1, 0, 2, 3, 0, 1, 5, 4, 4, 1};
    for (const std::size_t u : order) {
        const auto a = small.row(u);
        const auto b = big.row(u);
        CHECK(std::equal(a.begin(), a.end(), b.begin()));
    }
    CHECK(small.misses() > big.misses());
    // 0, 1 miss; 0 hits; 2, 3 miss (evicting 1, 0); ...
    CHECK(big.misses() == 6);
}

TEST_CASE("constant target fits inside the tube with no support vectors") {
    const auto inst = fixtures::small_instance(3);
    std::vector<double> y(inst.y.size(), 42.5);
    SvrParams params = inst.params;
    params.epsilon = 0.1;
    const SvrModel m = train_svr(inst.x, y, params, raw_pipeline());
    CHECK(m.dual_coefs.empty());
    CHECK(m.bias == doctest::Approx(42.5).epsilon(1e-15));
    for (const double f : predict(m, inst.probe)) CHECK(f == doctest::Approx(42.5).epsilon(1e-15));
    CHECK(m.meta.converged);
}

TEST_CASE("hand-built models predict by formula") {
    SvrModel m;
    m.preprocessing = Preprocessor::identity({"a", "b"});
    m.params.gamma = 0.7;
    m.support_vectors = Matrix(0, 2);
    m.bias = 42.0;
    const FeatureMatrix pts({"a", "b"}, Matrix(3, 2, {0.0, 1.0, 2.0, -1.0, 5.0, 5.0}));
    for (const double f : predict(m, pts)) CHECK(f == 42.0);

    m.bias = 0.0;
    m.support_vectors = Matrix(1, 2, {2.0, -1.0});
    m.dual_coefs = {1.0};
    m.support_indices = {0};
    CHECK(predict(m, pts)[1] == 1.0);

    const FeatureMatrix wrong({"a"}, Matrix(1, 1, {0.0}));
    CHECK_THROWS_AS(predict(m, wrong), InvalidInput);
}

TEST_CASE("inactive problem has zero duality gap") {
    const auto inst = fixtures::small_instance(8);
    double mean = 0.0;
    for (const double v : inst.y) mean += v;
    mean /= static_cast<double>(inst.y.size());
    SvrModel m;
    m.preprocessing = Preprocessor::identity(inst.x.column_names);
    m.params = inst.params;
    m.params.epsilon = 1e6;
    m.support_vectors = Matrix(0, inst.x.cols());
    m.bias = mean;
    CHECK(std::abs(duality_gap(m, inst.x, inst.y)) <= 1e-9);
}

TEST_CASE("SMO matches the projected-gradient oracle on random small instances") {
    int checked = 0;
    for (unsigned seed = 0; seed < 120; ++seed) {
        CAPTURE(seed);
        const auto inst = fixtures::small_instance(seed);
        const SvrModel m = train_svr(inst.x, inst.y, inst.params, raw_pipeline());
        const auto prob = fixtures::to_oracle(inst.x, inst.y, inst.params);
        const auto ref = oracle::solve_svr(prob);
        REQUIRE(ref.gap <= 1e-10 * std::max(1.0, std::abs(ref.dual)));

        CHECK(m.meta.converged);
        CHECK(m.meta.duality_gap <= gap_certificate_threshold(m.meta.dual_objective));
        CHECK(std::abs(m.meta.dual_objective - ref.dual) <= 1e-4 * std::max(1.0, std::abs(ref.dual)));

        const auto f = predict(m, inst.x);
        const auto g = fixtures::oracle_predict(prob, ref, inst.x);
        for (std::size_t i = 0; i < f.size(); ++i) CHECK(std::abs(f[i] - g[i]) <= 1e-4);
        const auto fp = predict(m, inst.probe);
        const auto gp = fixtures::oracle_predict(prob, ref, inst.probe);
        for (std::size_t i = 0; i < fp.size(); ++i) CHECK(std::abs(fp[i] - gp[i]) <= 1e-4);

        // Dual feasibility.
        double sum = 0.0;
        for (const double b : m.dual_coefs) {
            CHECK(std::abs(b) <= inst.params.c + 1e-12);
            CHECK(b != 0.0);
            sum += b;
        }
        CHECK(std::abs(sum) <= 1e-8 * inst.params.c * std::max<double>(1.0, static_cast<double>(m.dual_coefs.size())));
        ++checked;
    }
    CHECK(checked >= 100);
}

TEST_CASE("duality_gap agrees with the oracle's independent evaluation") {
    for (unsigned seed = 200; seed < 230; ++seed) {
        CAPTURE(seed);
        const auto inst = fixtures::small_instance(seed);
        const SvrModel m = train_svr(inst.x, inst.y, inst.params, raw_pipeline());
        const auto prob = fixtures::to_oracle(inst.x, inst.y, inst.params);
        const Eigen::MatrixXd k = oracle::gram(prob.x, prob.gamma);
        Eigen::VectorXd beta = Eigen::VectorXd::Zero(prob.x.rows());
        for (std::size_t s = 0; s < m.dual_coefs.size(); ++s) {
            beta(static_cast<Eigen::Index>(m.support_indices[s])) = m.dual_coefs[s];
        }
        const double ref_gap = oracle::primal_objective(prob, k, beta, m.bias) - oracle::dual_objective(prob, k, beta);
        const double gap = duality_gap(m, inst.x, inst.y);
        CHECK(std::abs(gap - ref_gap) <= 1e-8);
        CHECK(gap >= -1e-9);
        CHECK(std::abs(gap - m.meta.duality_gap) <= 1e-8);
    }
}

TEST_CASE("a duplicated point equals doubling that point's box") {
    for (unsigned seed = 300; seed < 320; ++seed) {
        CAPTURE(seed);
        const auto inst = fixtures::small_instance(seed);
        const std::size_t n = inst.x.rows();
        const std::size_t dup = n / 2;

        Matrix xd(n + 1, inst.x.cols());
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = 0; j < inst.x.cols(); ++j) xd(i, j) = inst.x.values(i, j);
        }
        for (std::size_t j = 0; j < inst.x.cols(); ++j) xd(n, j) = inst.x.values(dup, j);
        std::vector<double> yd = inst.y;
        yd.push_back(inst.y[dup]);
        const FeatureMatrix x_dup(inst.x.column_names, std::move(xd));

        std::vector<double> box(n, 1.0);
        box[dup] = 2.0;
        SvrParams params = inst.params;
        params.tol = 1e-8;
        const SvrModel with_dup = train_svr(x_dup, yd, params, raw_pipeline());
        const SvrModel weighted =
            train_svr(inst.x, inst.y, params, Preprocessor::identity(inst.x.column_names), box);

        // Independent check of the weighted problem.
        const auto ref = oracle::solve_svr(fixtures::to_oracle(inst.x, inst.y, params, box));
        const auto g = fixtures::oracle_predict(fixtures::to_oracle(inst.x, inst.y, params, box), ref, inst.probe);

        const auto a = predict(with_dup, inst.probe);
        const auto b = predict(weighted, inst.probe);
        for (std::size_t i = 0; i < a.size(); ++i) {
            CHECK(std::abs(a[i] - b[i]) <= 1e-6);
            CHECK(std::abs(b[i] - g[i]) <= 1e-6);
        }
    }
}

TEST_CASE("shifting targets shifts the bias and leaves the coefficients") {
    for (unsigned seed = 400; seed < 420; ++seed) {
        CAPTURE(seed);
        const auto inst = fixtures::small_instance(seed);
        const double delta = 37.25;
        std::vector<double> shifted = inst.y;
        for (double& v : shifted) v += delta;
        // y + delta is rounded, so at a loose tolerance the two runs stop at
        // different points inside the KKT band. The optimum itself is unique.
        SvrParams params = inst.params;
        params.tol = 1e-10;
        const SvrModel a = train_svr(inst.x, inst.y, params, raw_pipeline());
        const SvrModel b = train_svr(inst.x, shifted, params, raw_pipeline());
        REQUIRE(a.dual_coefs.size() == b.dual_coefs.size());
        CHECK(a.support_indices == b.support_indices);
        for (std::size_t k = 0; k < a.dual_coefs.size(); ++k) CHECK(std::abs(a.dual_coefs[k] - b.dual_coefs[k]) <= 1e-8);
        CHECK(std::abs(b.bias - a.bias - delta) <= 1e-8);
        const auto fa = predict(a, inst.probe);
        const auto fb = predict(b, inst.probe);
        for (std::size_t i = 0; i < fa.size(); ++i) CHECK(std::abs(fb[i] - fa[i] - delta) <= 1e-8);
    }
}

TEST_CASE("training points off the support set lie inside the tube") {
    for (unsigned seed = 500; seed < 520; ++seed) {
        const auto inst = fixtures::small_instance(seed);
        const SvrModel m = train_svr(inst.x, inst.y, inst.params, raw_pipeline());
        std::vector<bool> is_sv(inst.y.size(), false);
        for (const std::size_t i : m.support_indices) is_sv[i] = true;
        const auto f = predict(m, inst.x);
        for (std::size_t i = 0; i < f.size(); ++i) {
            if (!is_sv[i]) CHECK(std::abs(f[i] - inst.y[i]) <= inst.params.epsilon + inst.params.tol);
        }
    }
}

TEST_CASE("training is deterministic and the artifact round-trips bit-exactly") {
    const auto inst = fixtures::small_instance(42);
    const SvrModel a = train_svr(inst.x, inst.y, inst.params);
    const SvrModel b = train_svr(inst.x, inst.y, inst.params);
    CHECK(to_json(a).dump() == to_json(b).dump());

    const auto path = std::filesystem::temp_directory_path() / "loadcast_test_model.json";
    save_model(a, path);
    const SvrModel c = load_model(path);
    CHECK(to_json(c).dump() == to_json(a).dump());
    CHECK(c.bias == a.bias);
    CHECK(c.dual_coefs == a.dual_coefs);
    CHECK(c.support_vectors == a.support_vectors);
    CHECK(predict(c, inst.probe) == predict(a, inst.probe));
    std::filesystem::remove(path);

    nlohmann::json broken = to_json(a);
    broken["format_version"] = 99;
    CHECK_THROWS_AS(model_from_json(broken), InvalidInput);
}

TEST_CASE("iteration cap yields a flagged, usable model") {
    const auto inst = fixtures::small_instance(5);
    SvrParams params = inst.params;
    params.max_iter = 1;
    const SvrModel m = train_svr(inst.x, inst.y, params, raw_pipeline());
    CHECK_FALSE(m.meta.converged);
    CHECK(m.meta.iterations == 1);
    for (const double f : predict(m, inst.probe)) CHECK(std::isfinite(f));
}

TEST_CASE("invalid training input is rejected") {
    const auto inst = fixtures::small_instance(1);
    const FeatureMatrix one = inst.x.slice_rows(0, 1);
    CHECK_THROWS_AS(train_svr(one, std::vector<double>{1.0}, inst.params), InvalidInput);
    std::vector<double> short_y(inst.y.begin(), inst.y.end() - 1);
    CHECK_THROWS_AS(train_svr(inst.x, short_y, inst.params, raw_pipeline()), InvalidInput);
    SvrParams bad = inst.params;
    bad.c = 0.0;
    CHECK_THROWS_AS(train_svr(inst.x, inst.y, bad), InvalidInput);
    bad = inst.params;
    bad.gamma = -1.0;
    CHECK_THROWS_AS(train_svr(inst.x, inst.y, bad), InvalidInput);
    std::vector<double> nan_y = inst.y;
    nan_y[0] = std::nan("");
    CHECK_THROWS_AS(train_svr(inst.x, nan_y, inst.params, raw_pipeline()), InvalidInput);
}
