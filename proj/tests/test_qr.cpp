#include <doctest.h>

#include <cmath>

#include "oracles.hpp"
#include "qshrink/errors.hpp"
#include "qshrink/qr.hpp"
#include "qshrink/rng.hpp"
#include "qshrink/specfun.hpp"

using namespace qshrink;

namespace {

Dataset intercept_only(std::initializer_list<double> ys) {
    Eigen::VectorXd y(static_cast<int>(ys.size()));
    int i = 0;
    for (double v : ys) y[i++] = v;
    return make_dataset(y, Eigen::MatrixXd::Ones(y.size(), 1), 1);
}

Dataset random_dataset(int n, int p, double rho, std::uint64_t seed,
                       const Eigen::VectorXd& beta, double noise_sd,
                       bool intercept = false) {
    Rng rng(seed);
    Eigen::MatrixXd S(p, p);
    for (int i = 0; i < p; ++i)
        for (int j = 0; j < p; ++j) S(i, j) = std::pow(rho, std::abs(i - j));
    const Eigen::MatrixXd L = Eigen::LLT<Eigen::MatrixXd>(S).matrixL();
    Eigen::MatrixXd X(n, p);
    Eigen::VectorXd z(p), y(n);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < p; ++j) z[j] = rng.normal();
        X.row(i) = (L * z).transpose();
        if (intercept) X(i, 0) = 1.0;
        y[i] = X.row(i).dot(beta) + noise_sd * rng.normal();
    }
    return make_dataset(y, X, std::max(1, p / 2));
}

} // namespace

TEST_CASE("intercept-only median") {
    const auto fit = fit_full(intercept_only({1.0, 2.0, 3.0}), 0.5);
    CHECK(fit.beta[0] == doctest::Approx(2.0).epsilon(1e-8));
}

TEST_CASE("quartile fit matches a one-dimensional grid search") {
    const auto data = intercept_only({1.0, 2.0, 3.0, 10.0});
    const auto fit = fit_full(data, 0.25);
    double grid_obj = 0.0;
    oracles::grid_minimize(
        0.0, 11.0, 1e-4,
        [&](double b) {
            return check_loss(0.25, data.y.array() - b);
        },
        &grid_obj);
    // the 0.25 objective is flat on [1, 2]; any point there is optimal
    CHECK(fit.beta[0] >= 1.0 - 1e-6);
    CHECK(fit.beta[0] <= 2.0 + 1e-6);
    CHECK(fit.objective <= grid_obj + 1e-9 * (1.0 + grid_obj));
}

TEST_CASE("bivariate fit matches the basic-solution enumeration oracle") {
    Eigen::VectorXd beta_true(2);
    beta_true << 1.0, 2.0;
    const auto data = random_dataset(20, 2, 0.3, 99001u, beta_true, 0.1);
    const auto fit = fit_full(data, 0.5);
    Eigen::VectorXd best_beta;
    const double best = oracles::enumerate_basic_solutions(data.X, data.y, 0.5, &best_beta);
    CHECK(fit.objective <= best + 1e-9 * (1.0 + best));
    CHECK((fit.beta - beta_true).cwiseAbs().maxCoeff() < 0.1);
    CHECK((fit.beta - best_beta).cwiseAbs().maxCoeff() < 1e-3);
}

TEST_CASE("sub-model fit") {
    SUBCASE("zero X2 columns behave as absent") {
        Rng rng(31u);
        const int n = 30;
        Eigen::MatrixXd X = Eigen::MatrixXd::Zero(n, 3);
        Eigen::VectorXd y(n);
        for (int i = 0; i < n; ++i) {
            X(i, 0) = 1.0;
            X(i, 1) = rng.normal();
            y[i] = 1.0 + 0.5 * X(i, 1) + 0.2 * rng.normal();
        }
        const auto data = make_dataset(y, X, 2);
        const auto full = fit_full(data, 0.5);
        const auto sub = fit_sub(data, 0.5);
        CHECK((full.beta.head(2) - sub.beta.head(2)).cwiseAbs().maxCoeff() < 1e-8);
        CHECK(full.beta[2] == 0.0);
    }
    SUBCASE("intercept median") {
        Eigen::MatrixXd X(3, 2);
        X << 1, 0.1, 1, -0.2, 1, 0.15;
        Eigen::VectorXd y(3);
        y << 1, 2, 3;
        const auto sub = fit_sub(make_dataset(y, X, 1), 0.5);
        CHECK(sub.beta[0] == doctest::Approx(2.0).epsilon(1e-8));
        CHECK(sub.beta[1] == 0.0);
    }
    SUBCASE("nested objective ordering") {
        Eigen::VectorXd beta_true(4);
        beta_true << 1.0, -1.0, 0.5, 0.25;
        const auto data = random_dataset(40, 4, 0.5, 1234u, beta_true, 1.0);
        const auto full = fit_full(data, 0.5);
        const auto sub = fit_sub(data, 0.5);
        CHECK(sub.objective >= full.objective - 1e-8 * (1.0 + full.objective));
    }
}

TEST_CASE("objective trace never increases and residual signs balance") {
    // the sign-balance invariant needs the constant vector in the column span
    Eigen::VectorXd beta_true(5);
    beta_true << 1, 2, -1, 0.5, 0;
    const auto data = random_dataset(120, 5, 0.5, 777u, beta_true, 1.0, /*intercept=*/true);
    for (double tau : {0.25, 0.5, 0.75}) {
        const auto fit = fit_full(data, tau);
        for (std::size_t i = 1; i < fit.objective_trace.size(); ++i)
            CHECK(fit.objective_trace[i] <=
                  fit.objective_trace[i - 1] + 1e-12 * (1.0 + fit.objective_trace[i - 1]));
        const double frac_neg =
            static_cast<double>((fit.residuals.array() < 0.0).count()) / data.n();
        CHECK(frac_neg >= tau - static_cast<double>(data.p()) / data.n());
        CHECK(frac_neg <= tau + static_cast<double>(data.p()) / data.n());
        const auto kkt = kkt_check(data.X, data.y, tau, fit.beta, 1e-4, fit.active_tol);
        CHECK(kkt.ok);
        CHECK(kkt.active_count <= data.p());
    }
}

TEST_CASE("equivariance under response scaling and regression shift") {
    Eigen::VectorXd beta_true(3);
    beta_true << 0.5, -1.0, 2.0;
    const auto data = random_dataset(80, 3, 0.4, 2024u, beta_true, 0.7);
    const auto base = fit_full(data, 0.3);

    const double c = 3.7;
    const auto scaled = fit_full(make_dataset(c * data.y, data.X, data.p1), 0.3);
    CHECK((scaled.beta - c * base.beta).cwiseAbs().maxCoeff() < 1e-6 * c);

    Eigen::VectorXd shift(3);
    shift << -1.0, 2.0, 0.5;
    const auto shifted =
        fit_full(make_dataset(data.y + data.X * shift, data.X, data.p1), 0.3);
    CHECK((shifted.beta - (base.beta + shift)).cwiseAbs().maxCoeff() < 1e-6);
}

TEST_CASE("Powell sparsity estimate under iid errors") {
    // iid N(0,1) errors at tau = 0.5: D1 should be close to phi(0) D0
    Eigen::VectorXd beta_true(2);
    beta_true << 1.0, -0.5;
    const auto data = random_dataset(2000, 2, 0.8, 424244u, beta_true, 1.0);
    const auto fit = fit_full(data, 0.5);
    const double f0 = normal_pdf(0.0);
    const Eigen::MatrixXd target = f0 * fit.D0;
    const double rel = ((fit.D1 - target).cwiseAbs().array() / target.cwiseAbs().array())
                           .maxCoeff();
    CHECK(rel < 0.15);
    // sandwich covariance against the iid closed form
    const Eigen::MatrixXd closed = 0.25 / (f0 * f0) *
                                   fit.D0.ldlt().solve(Eigen::MatrixXd::Identity(2, 2)) /
                                   data.n();
    const double rel_cov =
        ((fit.cov - closed).cwiseAbs().array() / closed.cwiseAbs().array()).maxCoeff();
    CHECK(rel_cov < 0.15);
}

TEST_CASE("Powell sparsity degenerate and heteroskedastic branches") {
    SUBCASE("all residuals outside the bandwidth") {
        Eigen::VectorXd r(6);
        r << 5, 6, 7, -5, -6, -7;
        Eigen::MatrixXd X = Eigen::MatrixXd::Random(6, 2);
        bool degenerate = false;
        BandwidthSpec bw;
        bw.rule = BandwidthSpec::Rule::fixed;
        bw.value = 0.01;
        const Eigen::MatrixXd D1 = estimate_sparsity(r, X, 0.5, bw, nullptr, &degenerate);
        CHECK(degenerate);
        CHECK(D1.norm() < 1e-6);
        CHECK(Eigen::LLT<Eigen::MatrixXd>(D1).info() == Eigen::Success);
    }
    SUBCASE("bandwidth must be positive") {
        BandwidthSpec bw;
        bw.rule = BandwidthSpec::Rule::fixed;
        bw.value = -1.0;
        Eigen::VectorXd r = Eigen::VectorXd::Zero(4);
        Eigen::MatrixXd X = Eigen::MatrixXd::Ones(4, 1);
        CHECK_THROWS_AS(estimate_sparsity(r, X, 0.5, bw), validation_error);
    }
    SUBCASE("heteroskedastic errors break proportionality to D0") {
        Rng rng(5150u);
        const int n = 3000;
        Eigen::MatrixXd X(n, 2);
        Eigen::VectorXd y(n);
        for (int i = 0; i < n; ++i) {
            X(i, 0) = 1.0;
            X(i, 1) = rng.normal();
            const double sd = std::sqrt(1.0 + X(i, 1) * X(i, 1));
            y[i] = 1.0 + X(i, 1) + sd * rng.normal();
        }
        const auto fit = fit_full(make_dataset(y, X, 1), 0.5);
        // best scalar multiple of D0 still misses D1
        const double c = (fit.D1.cwiseProduct(fit.D0)).sum() / fit.D0.squaredNorm();
        const double rel = (fit.D1 - c * fit.D0).norm() / fit.D1.norm();
        CHECK(rel > 0.05);
    }
}

TEST_CASE("gamma blocks") {
    SUBCASE("hand Schur complement") {
        Eigen::MatrixXd G(2, 2);
        G << 2, 1, 1, 2;
        const auto b = gamma_blocks(G, 1);
        CHECK(b.G22_1(0, 0) == doctest::Approx(1.5).epsilon(1e-12));
        CHECK(b.G11_2(0, 0) == doctest::Approx(1.5).epsilon(1e-12));
    }
    SUBCASE("orthogonal design decouples the blocks") {
        Rng rng(7207u);
        const int n = 4000;
        Eigen::MatrixXd X(n, 4);
        Eigen::VectorXd y(n);
        for (int i = 0; i < n; ++i) {
            for (int j = 0; j < 4; ++j) X(i, j) = rng.normal();
            y[i] = X(i, 0) - X(i, 1) + rng.normal();
        }
        const auto fit = fit_full(make_dataset(y, X, 2), 0.5);
        const auto b = gamma_blocks(fit);
        const double scale = b.G22.norm();
        CHECK((b.G22_1 - b.G22).norm() / scale < 0.02);
        CHECK((b.G11_2 - b.G11).norm() / scale < 0.02);
    }
    SUBCASE("Gamma times its inverse from the sandwich") {
        Eigen::VectorXd beta_true(4);
        beta_true << 1, 0.5, -0.5, 0.2;
        const auto data = random_dataset(400, 4, 0.5, 90210u, beta_true, 1.0);
        const auto fit = fit_full(data, 0.5);
        const Eigen::MatrixXd gamma_inv = fit.cov * data.n() / (0.25);
        CHECK((fit.Gamma * gamma_inv - Eigen::MatrixXd::Identity(4, 4)).cwiseAbs().maxCoeff() <
              1e-6);
        const auto blocks = gamma_blocks(fit);
        CHECK((blocks.G21 - blocks.G12.transpose()).cwiseAbs().maxCoeff() < 1e-8);
        // linear relation between the restricted fits, exposed for comparison
        const auto sub = fit_sub(data, 0.5);
        const Eigen::VectorXd lin = submodel_linear_approx(fit, blocks);
        CHECK((lin - sub.beta.head(data.p1)).norm() < 0.5); // same target, finite-n gap
    }
}

TEST_CASE("solver error paths") {
    SUBCASE("rank-deficient design") {
        Eigen::MatrixXd X(10, 2);
        for (int i = 0; i < 10; ++i) {
            X(i, 0) = i + 1.0;
            X(i, 1) = 2.0 * (i + 1.0); // exact duplicate direction
        }
        Eigen::VectorXd y = Eigen::VectorXd::LinSpaced(10, 0.0, 1.0);
        CHECK_THROWS_AS(fit_full(make_dataset(y, X, 1), 0.5), singular_design_error);
    }
    SUBCASE("tau outside the supported range") {
        const auto data = intercept_only({1.0, 2.0, 3.0});
        CHECK_THROWS_AS(fit_full(data, 0.999), validation_error);
        CHECK_THROWS_AS(fit_full(data, 0.001), validation_error);
    }
    SUBCASE("fit_sub needs an X2 block") {
        Eigen::VectorXd y(3);
        y << 1, 2, 3;
        const auto data = make_dataset(y, Eigen::MatrixXd::Ones(3, 1), 1);
        CHECK_THROWS_AS(fit_sub(data, 0.5), validation_error);
    }
}
