#include <doctest.h>

#include <cmath>

#include "oracles.hpp"
#include "qshrink/errors.hpp"
#include "qshrink/rng.hpp"
#include "qshrink/shrinkage.hpp"
#include "qshrink/simlab.hpp"
#include "qshrink/specfun.hpp"

using namespace qshrink;

namespace {

Eigen::VectorXd vec(std::initializer_list<double> xs) {
    Eigen::VectorXd v(static_cast<int>(xs.size()));
    int i = 0;
    for (double x : xs) v[i++] = x;
    return v;
}

// Hand-built fit carrying just what wald_statistic reads.
QuantileFit synthetic_fit(int n, double tau, const Eigen::VectorXd& beta, int p1) {
    QuantileFit f;
    f.tau = tau;
    f.beta = beta;
    f.residuals = Eigen::VectorXd::Zero(n);
    f.p1 = p1;
    return f;
}

} // namespace

TEST_CASE("wald statistic") {
    SUBCASE("zero beta2 gives zero") {
        GammaBlocks b = gamma_blocks(Eigen::MatrixXd(2.0 * Eigen::MatrixXd::Identity(4, 4)), 2);
        const auto fit = synthetic_fit(50, 0.5, Eigen::VectorXd::Zero(4), 2);
        CHECK(wald_statistic(fit, b) == 0.0);
    }
    SUBCASE("scalar arithmetic") {
        // p2 = 1, n = 100, tau = 0.5, beta2 = 0.3, G22.1 = 2 -> 100/0.25 * 0.09 * 2 = 72
        Eigen::MatrixXd G(2, 2);
        G << 4, 1, 1, 2.25; // G22.1 = 2.25 - 1/4 = 2
        const auto b = gamma_blocks(G, 1);
        CHECK(b.G22_1(0, 0) == doctest::Approx(2.0));
        const auto fit = synthetic_fit(100, 0.5, vec({1.0, 0.3}), 1);
        CHECK(wald_statistic(fit, b) == doctest::Approx(72.0).epsilon(1e-12));
    }
}

TEST_CASE("pretest selection and boundary convention") {
    const auto fm = vec({1.0, 1.0});
    const auto sm = vec({0.0, 0.0});
    CHECK(pretest(fm, sm, 0.0, 4, 0.05) == sm);
    CHECK(pretest(fm, sm, 1e6, 4, 0.05) == fm);
    const double crit = chi_squared_quantile(4, 0.95);
    CHECK(pretest(fm, sm, crit, 4, 0.05) == sm);              // boundary accepts
    CHECK(pretest(fm, sm, crit + 1e-9, 4, 0.05) == fm);
    CHECK_THROWS_AS(pretest(fm, sm, 1.0, 4, 0.0), validation_error);
}

TEST_CASE("stein and positive-part arithmetic") {
    const auto fm = vec({1.0, 1.0});
    const auto sm = vec({0.0, 0.0});
    SUBCASE("zero factor at W = p2 - 2") {
        CHECK((stein(fm, sm, 3.0, 5) - sm).norm() == doctest::Approx(0.0));
    }
    SUBCASE("limit toward FM") {
        const auto s = stein(fm, sm, 1e12, 5);
        CHECK((s - fm).norm() < 1e-9 * (fm - sm).norm());
    }
    SUBCASE("half-way factor") {
        const auto s = stein(fm, sm, 6.0, 5);
        CHECK(s == vec({0.5, 0.5}));
        const auto ps = positive_stein(fm, sm, 2.0 * 3.0, 5);
        CHECK(ps == vec({0.5, 0.5}));
    }
    SUBCASE("positive part truncates") {
        const auto ps = positive_stein(fm, sm, 1.0, 5); // W < p2-2
        CHECK(ps == sm);
        const auto s = stein(fm, sm, 1.0, 5); // factor = -2: overshoot past SM
        CHECK(s == vec({-2.0, -2.0}));
    }
    SUBCASE("degenerate W = 0 maps to SM with a flag") {
        bool degenerate = false;
        CHECK(stein(fm, sm, 0.0, 5, &degenerate) == sm);
        CHECK(degenerate);
    }
    SUBCASE("dimension guard") {
        CHECK_THROWS_AS(stein(fm, sm, 5.0, 2), validation_error);
        CHECK_THROWS_AS(positive_stein(fm, sm, 5.0, 1), validation_error);
    }
}

TEST_CASE("positive part equals stein above the threshold, else SM; segment property") {
    Rng rng(88u);
    for (int rep = 0; rep < 200; ++rep) {
        const int p1 = 3, p2 = 4;
        Eigen::VectorXd fm(p1), sm(p1);
        for (int j = 0; j < p1; ++j) {
            fm[j] = rng.normal();
            sm[j] = rng.normal();
        }
        const double w = rng.uniform() * 10.0;
        const auto s = stein(fm, sm, w, p2);
        const auto ps = positive_stein(fm, sm, w, p2);
        if (w >= p2 - 2.0) {
            CHECK((s - ps).norm() < 1e-14);
        } else {
            CHECK((ps - sm).norm() < 1e-14);
        }
        // PS always on the segment [SM, FM]
        const double denom = (fm - sm).squaredNorm();
        const double tcoef = denom > 0.0 ? (ps - sm).dot(fm - sm) / denom : 0.0;
        CHECK(tcoef >= -1e-12);
        CHECK(tcoef <= 1.0 + 1e-12);
        CHECK(((sm + tcoef * (fm - sm)) - ps).norm() < 1e-10);
    }
}

TEST_CASE("full pipeline on simulated data with scale invariance") {
    SimulationConfig cfg;
    cfg.n_train = 120;
    cfg.p1 = 3;
    cfg.p2 = 4;
    cfg.beta_true = vec({1.0, -0.5, 0.25, 0.0, 0.0, 0.0, 0.0});
    cfg.error = case2(0.0);
    cfg.replications = 1;
    cfg.seed = 4242;
    const auto data = generate(cfg, 0).train;

    const auto full = fit_full(data, 0.5);
    const auto sub = fit_sub(data, 0.5);
    const auto blocks = gamma_blocks(full);
    const auto res = shrinkage_estimate(full, sub, blocks, 0.05);

    CHECK(res.wald >= 0.0);
    CHECK(res.shrink_factor <= 1.0);
    // selection, not blending
    const bool is_sm = (res.beta_pt1 - res.beta_sm1).norm() == 0.0;
    const bool is_fm = (res.beta_pt1 - res.beta_fm1).norm() == 0.0;
    CHECK((is_sm || is_fm));
    CHECK(is_sm == res.pretest_accepts);
    if (res.shrink_factor <= 0.0) CHECK((res.beta_ps1 - res.beta_sm1).norm() == 0.0);

    // y -> c y rescales every estimator by c and leaves W_n unchanged
    const double c = 2.5;
    const auto data_c = make_dataset(c * data.y, data.X, data.p1);
    const auto full_c = fit_full(data_c, 0.5);
    const auto sub_c = fit_sub(data_c, 0.5);
    const auto blocks_c = gamma_blocks(full_c);
    const auto res_c = shrinkage_estimate(full_c, sub_c, blocks_c, 0.05);
    CHECK(res_c.wald == doctest::Approx(res.wald).epsilon(1e-6));
    CHECK((res_c.beta_s1 - c * res.beta_s1).cwiseAbs().maxCoeff() < 1e-5 * c);
    CHECK((res_c.beta_ps1 - c * res.beta_ps1).cwiseAbs().maxCoeff() < 1e-5 * c);
    CHECK((res_c.full_vector(Estimator::PS) - c * res.full_vector(Estimator::PS))
              .cwiseAbs()
              .maxCoeff() < 1e-5 * c);
}

TEST_CASE("shrinkage layer refuses a missing X2 block") {
    Eigen::VectorXd y(5);
    y << 1, 2, 3, 4, 5;
    Eigen::MatrixXd X = Eigen::MatrixXd::Ones(5, 1);
    const auto data = make_dataset(y, X, 1);
    const auto full = fit_full(data, 0.5);
    CHECK_THROWS_AS(gamma_blocks(full), validation_error);
}

TEST_CASE("empirical size of the Wald test is near alpha") {
    // fast version of the acceptance check: n = 200, 400 replicates
    SimulationConfig cfg;
    cfg.n_train = 200;
    cfg.p1 = 3;
    cfg.p2 = 5;
    cfg.beta_true = Eigen::VectorXd::Zero(8);
    cfg.beta_true.head(3) << 1.0, 0.5, -0.5;
    cfg.error = case2(0.0);
    cfg.seed = 31415;
    cfg.replications = 400;
    const double crit = chi_squared_quantile(5, 0.95);
    int reject = 0;
    for (int r = 0; r < cfg.replications; ++r) {
        const auto data = generate(cfg, r).train;
        const auto full = fit_full(data, 0.5);
        const auto blocks = gamma_blocks(full);
        if (wald_statistic(full, blocks) > crit) ++reject;
    }
    const double rate = static_cast<double>(reject) / cfg.replications;
    CHECK(rate > 0.015);
    CHECK(rate < 0.105);
}
