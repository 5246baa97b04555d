#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <sstream>

#include "qshrink/errors.hpp"
#include "qshrink/report.hpp"
#include "qshrink/simlab.hpp"

using namespace qshrink;

namespace {

SimulationConfig base_config() {
    SimulationConfig cfg;
    cfg.n_train = 60;
    cfg.p1 = 5;
    cfg.p2 = 5;
    cfg.beta_true = Eigen::VectorXd::Zero(10);
    cfg.beta_true.head(5).setOnes();
    cfg.error = case2(0.5);
    cfg.seed = 20240601;
    cfg.replications = 8;
    return cfg;
}

double column_corr(const Eigen::MatrixXd& X, int a, int b) {
    const auto ca = X.col(a).array() - X.col(a).mean();
    const auto cb = X.col(b).array() - X.col(b).mean();
    return (ca * cb).sum() / std::sqrt(ca.square().sum() * cb.square().sum());
}

} // namespace

TEST_CASE("generator moments") {
    SUBCASE("rho = 0 leaves columns uncorrelated") {
        SimulationConfig cfg = base_config();
        cfg.rho = 0.0;
        cfg.n_train = 2000;
        const auto data = generate(cfg, 0).train;
        for (int a = 0; a < 4; ++a)
            CHECK(std::fabs(column_corr(data.X, a, a + 1)) < 4.0 / std::sqrt(2000.0));
    }
    SUBCASE("design correlation follows rho^|j-k|") {
        SimulationConfig cfg = base_config();
        cfg.n_train = 5000;
        const auto data = generate(cfg, 1).train;
        CHECK(column_corr(data.X, 0, 1) == doctest::Approx(0.5).epsilon(0.1));
        CHECK(column_corr(data.X, 0, 2) == doctest::Approx(0.25).epsilon(0.25));
    }
    SUBCASE("gamma = 0 gives plain normal errors") {
        SimulationConfig cfg = base_config();
        cfg.error = case2(0.0);
        cfg.n_train = 5000;
        cfg.beta_true.setZero();
        const auto data = generate(cfg, 2).train;
        const auto& e = data.y;
        const double m2 = e.array().square().mean();
        const double m4 = e.array().pow(4).mean();
        const double kurt = m4 / (m2 * m2);
        // SE of sample kurtosis for a normal is about sqrt(24/n)
        CHECK(std::fabs(kurt - 3.0) < 4.0 * std::sqrt(24.0 / 5000.0));
    }
    SUBCASE("contaminated variance identity") {
        SimulationConfig cfg = base_config();
        cfg.error = case2(0.25);
        cfg.n_train = 100000;
        cfg.p1 = 1;
        cfg.p2 = 1;
        cfg.beta_true = Eigen::VectorXd::Zero(2);
        const auto data = generate(cfg, 3).train;
        const double var = data.y.array().square().mean();
        const double expect = 0.75 * 1.0 + 0.25 * 100.0;
        const double m4 = 0.75 * 3.0 + 0.25 * 3.0 * 1e4;
        const double se = std::sqrt((m4 - expect * expect) / 100000.0);
        CHECK(std::fabs(var - expect) < 3.0 * se);
    }
    SUBCASE("invalid correlation is rejected") {
        SimulationConfig cfg = base_config();
        cfg.rho = 1.0;
        CHECK_THROWS_AS(generate(cfg, 0), validation_error);
    }
    SUBCASE("variance schedule extension") {
        SimulationConfig cfg = base_config();
        cfg.error.variance_schedule = {1.0, 4.0};
        cfg.n_train = 40000;
        cfg.p1 = 1;
        cfg.p2 = 1;
        cfg.beta_true = Eigen::VectorXd::Zero(2);
        const auto data = generate(cfg, 5).train;
        double even = 0.0, odd = 0.0;
        for (int i = 0; i < data.n(); i += 2) even += data.y[i] * data.y[i];
        for (int i = 1; i < data.n(); i += 2) odd += data.y[i] * data.y[i];
        CHECK(even / (data.n() / 2) == doctest::Approx(1.0).epsilon(0.1));
        CHECK(odd / (data.n() / 2) == doctest::Approx(4.0).epsilon(0.1));
    }
}

TEST_CASE("model error arithmetic") {
    Eigen::VectorXd a(2), b(2);
    a << 1, 2;
    b << 1, 2;
    CHECK(model_error(a, b) == 0.0);
    b << 0, 2;
    CHECK(model_error(a, b) == 1.0);
    b << 0, 0;
    CHECK(model_error(a, b) == 5.0);
    Eigen::VectorXd c(3);
    CHECK_THROWS_AS(model_error(a, c), validation_error);
}

TEST_CASE("mrme ratio definition") {
    const std::vector<double> fm = {1.0, 2.0, 3.0, 4.0};
    CHECK(mrme_from_errors(fm, fm) == doctest::Approx(1.0));
    const std::vector<double> twice = {2.0, 4.0, 6.0, 8.0};
    CHECK(mrme_from_errors(fm, twice) == doctest::Approx(0.5));
    const std::vector<double> zero(4, 0.0);
    CHECK(std::isnan(mrme_from_errors(fm, zero)));
}

TEST_CASE("replicate streams are independent of evaluation order") {
    SimulationConfig cfg = base_config();
    const auto d3 = generate(cfg, 3).train;
    const auto d1 = generate(cfg, 1).train;
    const auto d1_again = generate(cfg, 1).train;
    CHECK(d1.y == d1_again.y);
    CHECK(d1.X == d1_again.X);
    CHECK(d3.y != d1.y);
}

TEST_CASE("mrme sweep sanity on a small run") {
    SimulationConfig cfg = base_config();
    cfg.replications = 40;
    const auto report = mrme_sweep(cfg, {0.0, 4.0});
    REQUIRE(report.rows.size() == 10);
    double sm_at_0 = 0.0, sm_at_4 = 0.0, pt_at_4 = 0.0;
    for (const auto& row : report.rows) {
        if (row.estimator == "SM" && row.delta_star == 0.0) sm_at_0 = row.mrme;
        if (row.estimator == "SM" && row.delta_star == 4.0) sm_at_4 = row.mrme;
        if (row.estimator == "PT" && row.delta_star == 4.0) pt_at_4 = row.mrme;
    }
    CHECK(sm_at_0 > 1.0);
    CHECK(sm_at_4 < 0.5);
    CHECK(pt_at_4 == doctest::Approx(1.0).epsilon(0.05));
}

TEST_CASE("pmad experiment output shape, determinism, and degenerate exactness") {
    SimulationConfig cfg;
    cfg.n_train = 50;
    cfg.n_valid = 50;
    cfg.n_test = 200;
    cfg.p1 = 3;
    cfg.p2 = 5;
    cfg.beta_true = Eigen::VectorXd::Zero(8);
    cfg.beta_true << 3.0, 1.5, 2.0, 0.0, 0.0, 0.0, 0.0, 0.0;
    cfg.taus = {0.25, 0.5};
    cfg.replications = 3;
    cfg.seed = 5.0e5;
    cfg.standardize_columns = true;

    SUBCASE("deterministic given the seed, across thread settings") {
        const std::vector<PmadCaseSpec> cases = {{"case1", case1(0.10)}};
        const auto a = pmad_experiment(cfg, cases);
        const auto b = pmad_experiment(cfg, cases);
        CHECK(report_to_json(a.model_error) == report_to_json(b.model_error));
        CHECK(report_to_json(a.pmad) == report_to_json(b.pmad));
        setenv("QSHRINK_THREADS", "1", 1);
        const auto serial = pmad_experiment(cfg, cases);
        unsetenv("QSHRINK_THREADS");
        CHECK(report_to_json(a.model_error) == report_to_json(serial.model_error));
        // schema: 2 taus x 7 estimators + LSE
        CHECK(a.model_error.rows.size() == 15);
        CHECK(std::isnan(a.model_error.rows.back().tau));
        CHECK(a.model_error.rows.back().estimator == "LSE");
    }
    SUBCASE("noiseless data is fit exactly") {
        SimulationConfig clean = cfg;
        clean.taus = {0.5};
        clean.error.variance_schedule = {0.0};
        const auto out = pmad_experiment(clean, {{"clean", clean.error}});
        for (const auto& row : out.pmad.rows) {
            if (row.estimator == "FM") CHECK(row.mean < 1e-6);
        }
    }
    SUBCASE("SM beats FM when the sub-model is true") {
        SimulationConfig h0 = cfg;
        h0.taus = {0.5};
        h0.replications = 40;
        const auto out = pmad_experiment(h0, {{"case1", case1(0.10)}});
        double fm = 0, sm = 0, fm_se = 0, sm_se = 0;
        for (const auto& row : out.model_error.rows) {
            if (row.estimator == "FM") fm = row.mean, fm_se = row.se;
            if (row.estimator == "SM") sm = row.mean, sm_se = row.se;
        }
        CHECK(sm + 2.0 * (fm_se + sm_se) < fm);
    }
}
