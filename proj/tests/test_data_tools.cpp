#include <doctest.h>

#include <cmath>
#include <sstream>

#include "qshrink/ape.hpp"
#include "qshrink/csv.hpp"
#include "qshrink/errors.hpp"
#include "qshrink/model_select.hpp"
#include "qshrink/qr.hpp"
#include "qshrink/report.hpp"
#include "qshrink/rng.hpp"

using namespace qshrink;

namespace {

CsvTable table_from(const std::string& text) {
    std::istringstream in(text);
    return parse_csv(in);
}

Dataset regression_fixture(int n, std::uint64_t seed, bool intercept,
                           const Eigen::VectorXd& beta, double noise) {
    Rng rng(seed);
    const int p = static_cast<int>(beta.size());
    Eigen::MatrixXd X(n, p);
    Eigen::VectorXd y(n);
    std::vector<std::string> names;
    for (int j = 0; j < p; ++j)
        names.push_back(intercept && j == 0 ? "(Intercept)" : "x" + std::to_string(j));
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < p; ++j) X(i, j) = (intercept && j == 0) ? 1.0 : rng.normal();
        y[i] = X.row(i).dot(beta) + noise * rng.normal();
    }
    return make_dataset(y, X, p, names);
}

} // namespace

TEST_CASE("csv parsing") {
    SUBCASE("hand-written three-row file round trips exactly") {
        const std::string text = "y,a,b\n1,2,3\n4,5,6\n7,8,9\n";
        const auto t = table_from(text);
        REQUIRE(t.rows.size() == 3);
        CHECK(t.header == std::vector<std::string>{"y", "a", "b"});
        std::ostringstream out;
        write_csv(out, t);
        CHECK(out.str() == text);
        const auto r = ingest_csv(t, "y");
        CHECK(r.data.n() == 3);
        CHECK(r.data.p() == 2);
        CHECK(r.data.y[1] == 4.0);
        CHECK(r.data.X(2, 1) == 9.0);
    }
    SUBCASE("quotes, embedded commas, and CRLF") {
        const auto t = table_from("name,\"va,l\"\r\n\"a\"\"b\",7\r\n");
        CHECK(t.header[1] == "va,l");
        CHECK(t.rows[0][0] == "a\"b");
        CHECK(t.rows[0][1] == "7");
    }
    SUBCASE("ragged rows are rejected") {
        CHECK_THROWS_AS(table_from("a,b\n1\n"), validation_error);
    }
    SUBCASE("zero data rows") {
        CHECK_THROWS_AS(ingest_csv(table_from("y,a\n"), "y"), validation_error);
    }
}

TEST_CASE("csv ingestion") {
    SUBCASE("missing values drop rows only when asked") {
        const std::string text = "y,a,b\n1,2,3\n4,NA,6\n7,8,\n10,11,12\n";
        IngestOptions opts;
        opts.drop_missing = true;
        const auto r = ingest_csv(table_from(text), "y", opts);
        CHECK(r.data.n() == 2);
        CHECK(r.rows_dropped == 2);
        try {
            ingest_csv(table_from(text), "y");
            FAIL("expected schema_error");
        } catch (const schema_error& e) {
            CHECK(e.offending_columns == std::vector<std::string>{"a", "b"});
        }
    }
    SUBCASE("categorical one-hot with the first level dropped") {
        const std::string text = "y,league,score\n1,A,3\n2,N,4\n3,A,5\n4,B,6\n";
        const auto r = ingest_csv(table_from(text), "y");
        REQUIRE(r.data.names.size() == 3);
        CHECK(r.data.names[0] == "league_B");
        CHECK(r.data.names[1] == "league_N");
        CHECK(r.data.names[2] == "score");
        CHECK(r.data.X(0, 0) == 0.0); // A row: both dummies zero
        CHECK(r.data.X(1, 1) == 1.0);
        CHECK(r.data.X(3, 0) == 1.0);
    }
    SUBCASE("response transforms") {
        const std::string text = "y,a\n100,1\n400,2\n";
        IngestOptions opts;
        opts.transform = ResponseTransform::sqrt_half;
        CHECK(ingest_csv(table_from(text), "y", opts).data.y[1] == doctest::Approx(20.0));
        opts.transform = ResponseTransform::log_e;
        CHECK(ingest_csv(table_from(text), "y", opts).data.y[0] ==
              doctest::Approx(std::log(100.0)));
        opts.transform = ResponseTransform::scale;
        opts.scale_factor = 100.0;
        CHECK(ingest_csv(table_from(text), "y", opts).data.y[1] == doctest::Approx(4.0));
        CHECK(parse_transform("sqrt") == ResponseTransform::sqrt_half);
        CHECK_THROWS_AS(parse_transform("cube"), validation_error);
    }
    SUBCASE("intercept column") {
        const auto r = ingest_csv(table_from("y,a\n1,2\n3,4\n5,6\n"), "y",
                                  IngestOptions{false, true, ResponseTransform::none, 1.0});
        CHECK(r.data.names[0] == "(Intercept)");
        CHECK(r.data.X.col(0).minCoeff() == 1.0);
    }
    SUBCASE("ingest, emit, ingest is idempotent on numeric data") {
        const auto r1 = ingest_csv(table_from("y,a,b\n1.5,2,3\n4,5.25,6\n7,8,9.125\n"), "y");
        const auto t2 = dataset_to_table(r1.data, "y");
        std::ostringstream out;
        write_csv(out, t2);
        std::istringstream in(out.str());
        const auto r2 = ingest_csv(parse_csv(in), "y");
        CHECK(r2.data.y == r1.data.y);
        CHECK(r2.data.X == r1.data.X);
    }
}

TEST_CASE("report emission") {
    ExperimentReport rep;
    rep.meta = {"pmad", "model_error_test", 7u, 2, "cfg", provenance_string("cfg", 7u)};
    SUBCASE("empty report emits the header only") {
        std::ostringstream os;
        write_report_csv(os, rep);
        CHECK(os.str() == "tau,estimator,case,gamma,mean,se\n");
    }
    rep.rows.push_back(ReportRow{0.25, "FM", "case1", 0.10, 0.335, 0.012});
    rep.rows.push_back(ReportRow{std::nan(""), "LSE", "case1", 0.10, 1.18, 0.075});
    SUBCASE("csv schema matches the documented columns") {
        std::ostringstream os;
        write_report_csv(os, rep);
        const std::string text = os.str();
        CHECK(text.rfind("tau,estimator,case,gamma,mean,se\n", 0) == 0);
        CHECK(text.find("0.25,FM,case1,0.10000000000000001,0.33500000000000002,0.012") !=
              std::string::npos);
        CHECK(text.find("mean,LSE,") != std::string::npos);
    }
    SUBCASE("json round trip is the identity") {
        const std::string j = report_to_json(rep);
        const auto back = report_from_json(j);
        CHECK(back == rep);
        CHECK(report_to_json(back) == j);
    }
    SUBCASE("byte-stable emission") {
        std::ostringstream a, b;
        write_report_csv(a, rep);
        write_report_csv(b, rep);
        CHECK(a.str() == b.str());
        std::ostringstream t;
        write_report_table(t, rep);
        CHECK(t.str().find("provenance=qshrink-") != std::string::npos);
    }
}

TEST_CASE("forward stepwise BIC selection") {
    SUBCASE("a single dominant predictor is picked first") {
        Eigen::VectorXd beta(4);
        beta << 0.0, 5.0, 0.0, 0.0; // x1 dominates
        const auto data = regression_fixture(80, 11u, false, beta, 1.0);
        const auto sel = select_submodel_bic(data);
        REQUIRE(!sel.empty());
        CHECK(sel[0] == 1);
    }
    SUBCASE("pure noise keeps the model tiny") {
        Eigen::VectorXd beta = Eigen::VectorXd::Zero(6);
        const auto data = regression_fixture(100, 13u, false, beta, 1.0);
        CHECK(select_submodel_bic(data).size() <= 2);
        SelectOptions qopts;
        qopts.quantile_bic = true;
        CHECK(select_submodel_bic(data, qopts).size() <= 2);
    }
    SUBCASE("intercept is always retained") {
        Eigen::VectorXd beta(3);
        beta << 2.0, 1.0, 0.0;
        const auto data = regression_fixture(60, 17u, true, beta, 0.5);
        const auto sel = select_submodel_bic(data);
        REQUIRE(!sel.empty());
        CHECK(sel[0] == 0);
        CHECK(std::find(sel.begin(), sel.end(), 1) != sel.end());
    }
    SUBCASE("needs n > p") {
        Eigen::VectorXd beta = Eigen::VectorXd::Zero(5);
        const auto data = regression_fixture(5, 19u, false, beta, 1.0);
        CHECK_THROWS_AS(select_submodel_bic(data), validation_error);
    }
}

TEST_CASE("partitioning by named columns") {
    Eigen::VectorXd beta(3);
    beta << 1.0, 2.0, 3.0;
    const auto data = regression_fixture(30, 23u, false, beta, 0.1);
    const auto part = partition_by_columns(data, {2, 0});
    CHECK(part.p1 == 2);
    CHECK(part.names[0] == "x2");
    CHECK(part.names[1] == "x0");
    CHECK(part.names[2] == "x1");
    CHECK(part.X.col(0) == data.X.col(2));
    CHECK_THROWS_AS(partition_by_columns(data, {0, 0}), validation_error);
    CHECK_THROWS_AS(partition_by_columns(data, {4}), validation_error);
}

TEST_CASE("ape protocol") {
    Eigen::VectorXd beta(4);
    beta << 5.0, 2.0, -1.0, 0.0; // last covariate inert
    auto data = regression_fixture(60, 29u, true, beta, 0.4);
    data.p1 = 3; // intercept + two live covariates in X1

    SUBCASE("degenerate split scores on the training rows") {
        ApeOptions opts;
        opts.train_fraction = 1.0;
        opts.include_penalized = false;
        const auto rep = ape_protocol(data, {0.5}, 1, 99u, opts);
        const auto fit = fit_full(data, 0.5);
        double fm = -1.0;
        for (const auto& row : rep.rows)
            if (row.estimator == "FM") fm = row.mean;
        CHECK(fm == doctest::Approx((data.y - data.X * fit.beta).cwiseAbs().mean())
                        .epsilon(1e-10));
    }
    SUBCASE("constant response is fit exactly") {
        Dataset flat = data;
        flat.y.setConstant(4.0);
        ApeOptions opts;
        opts.include_penalized = false;
        const auto rep = ape_protocol(flat, {0.5}, 3, 7u, opts);
        for (const auto& row : rep.rows)
            if (row.estimator == "FM") CHECK(row.mean < 1e-8);
    }
    SUBCASE("deterministic given the seed") {
        ApeOptions opts;
        opts.include_penalized = false;
        const auto a = ape_protocol(data, {0.5}, 5, 123u, opts);
        const auto b = ape_protocol(data, {0.5}, 5, 123u, opts);
        CHECK(report_to_json(a) == report_to_json(b));
        const auto c = ape_protocol(data, {0.5}, 5, 124u, opts);
        CHECK(report_to_json(a) != report_to_json(c));
    }
    SUBCASE("row schema") {
        ApeOptions opts;
        const auto rep = ape_protocol(data, {0.25, 0.5}, 2, 5u, opts);
        // 2 taus x (4 quantile + 3 penalized) + LSE
        CHECK(rep.rows.size() == 15);
        CHECK(rep.rows.back().estimator == "LSE");
        CHECK(rep.meta.experiment == "ape");
    }
    SUBCASE("validation") {
        CHECK_THROWS_AS(ape_protocol(data, {0.5}, 0, 1u), validation_error);
        CHECK_THROWS_AS(ape_protocol(data, {}, 1, 1u), validation_error);
        Dataset nopart = data;
        nopart.p1 = nopart.p(); // no X2 block
        CHECK_THROWS_AS(ape_protocol(nopart, {0.5}, 1, 1u), validation_error);
    }
}
