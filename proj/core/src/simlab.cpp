#include "qshrink/simlab.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <sstream>

#include "qshrink/errors.hpp"
#include "qshrink/parallel.hpp"
#include "qshrink/penalized.hpp"
#include "qshrink/qr.hpp"
#include "qshrink/rng.hpp"
#include "qshrink/shrinkage.hpp"

namespace qshrink {

namespace {

double median_of(std::vector<double> v) {
    if (v.empty()) return std::nan("");
    const std::size_t mid = v.size() / 2;
    std::nth_element(v.begin(), v.begin() + mid, v.end());
    double m = v[mid];
    if (v.size() % 2 == 0) {
        std::nth_element(v.begin(), v.begin() + mid - 1, v.end());
        m = 0.5 * (m + v[mid - 1]);
    }
    return m;
}

double draw_error(const ErrorSpec& spec, Rng& rng, std::int64_t index) {
    if (!spec.variance_schedule.empty()) {
        const double v = spec.variance_schedule[index % spec.variance_schedule.size()];
        return std::sqrt(v) * rng.normal();
    }
    if (spec.gamma > 0.0 && rng.uniform() < spec.gamma) {
        if (spec.model == ErrorSpec::Model::cauchy_mixture) return rng.cauchy();
        return std::sqrt(spec.sigma2) * rng.normal();
    }
    return rng.normal();
}

Eigen::MatrixXd toeplitz_cholesky(int p, double rho) {
    Eigen::MatrixXd S(p, p);
    for (int i = 0; i < p; ++i)
        for (int j = 0; j < p; ++j) S(i, j) = std::pow(rho, std::abs(i - j));
    Eigen::LLT<Eigen::MatrixXd> llt(S);
    if (llt.info() != Eigen::Success)
        throw validation_error("generate: design correlation matrix is not positive definite");
    return llt.matrixL();
}

struct PipelineOut {
    // metric values per estimator label, both metrics
    std::vector<std::pair<std::string, std::pair<double, double>>> rows; // (me, pmad)
};

double mean_abs_dev(const Eigen::VectorXd& y, const Eigen::MatrixXd& X,
                    const Eigen::VectorXd& beta) {
    return (y - X * beta).cwiseAbs().mean();
}

double signal_error(const Eigen::MatrixXd& X, const Eigen::VectorXd& beta_hat,
                    const Eigen::VectorXd& beta_true) {
    return (X * (beta_hat - beta_true)).squaredNorm() / static_cast<double>(X.rows());
}

std::string echo_config(const SimulationConfig& c) {
    std::ostringstream os;
    os << "n_train=" << c.n_train << " n_valid=" << c.n_valid << " n_test=" << c.n_test
       << " p1=" << c.p1 << " p2=" << c.p2 << " rho=" << c.rho
       << " error=" << (c.error.model == ErrorSpec::Model::cauchy_mixture ? "case1" : "case2")
       << " gamma=" << c.error.gamma << " sigma2=" << c.error.sigma2 << " taus=";
    for (double t : c.taus) os << t << ";";
    os << " alpha=" << c.alpha << " enet_alpha=" << c.enet_alpha
       << " replications=" << c.replications << " seed=" << c.seed
       << " standardize=" << (c.standardize_columns ? 1 : 0)
       << " metric=" << to_string(c.metric);
    return os.str();
}

} // namespace

void validate_config(const SimulationConfig& config) {
    const int p = config.p1 + config.p2;
    if (config.p1 < 1 || config.p2 < 0) throw validation_error("config: need p1 >= 1, p2 >= 0");
    if (config.n_train < p) throw validation_error("config: n_train must be >= p");
    if (config.n_valid < 0 || config.n_test < 0)
        throw validation_error("config: split sizes must be >= 0");
    if (config.beta_true.size() != p)
        throw validation_error("config: beta_true must have length p1 + p2");
    if (!(std::fabs(config.rho) < 1.0))
        throw validation_error("config: rho must satisfy |rho| < 1");
    if (!(config.error.gamma >= 0.0 && config.error.gamma <= 1.0))
        throw validation_error("config: contamination gamma must be in [0,1]");
    if (config.replications < 1) throw validation_error("config: replications must be >= 1");
    if (config.taus.empty()) throw validation_error("config: need at least one tau");
    for (double t : config.taus)
        if (!(t >= 0.01 && t <= 0.99))
            throw validation_error("config: tau values must lie in [0.01, 0.99]");
}

ReplicateData generate(const SimulationConfig& config, std::uint64_t replicate_index) {
    validate_config(config);
    const int p = config.p1 + config.p2;
    const int n_total = config.n_train + config.n_valid + config.n_test;
    Rng rng = Rng::stream_for(config.seed ^ (0x9e3779b97f4a7c15ULL * (config.stream_salt + 1)),
                              replicate_index);

    const Eigen::MatrixXd L = toeplitz_cholesky(p, config.rho);
    Eigen::MatrixXd X(n_total, p);
    Eigen::VectorXd z(p);
    for (int i = 0; i < n_total; ++i) {
        for (int j = 0; j < p; ++j) z[j] = rng.normal();
        X.row(i) = (L * z).transpose();
    }
    if (config.standardize_columns) {
        for (int j = 0; j < p; ++j) {
            const double mu = X.col(j).mean();
            const double sd = std::sqrt((X.col(j).array() - mu).square().sum() /
                                        static_cast<double>(n_total));
            X.col(j) = (X.col(j).array() - mu) / (sd > 0.0 ? sd : 1.0);
        }
    }
    Eigen::VectorXd y(n_total);
    for (int i = 0; i < n_total; ++i)
        y[i] = X.row(i).dot(config.beta_true) + draw_error(config.error, rng, i);

    ReplicateData out{
        make_dataset(y.head(config.n_train), X.topRows(config.n_train), config.p1), {}, {}};
    if (config.n_valid > 0)
        out.valid = make_dataset(y.segment(config.n_train, config.n_valid),
                                 X.middleRows(config.n_train, config.n_valid), config.p1);
    if (config.n_test > 0)
        out.test = make_dataset(y.tail(config.n_test), X.bottomRows(config.n_test), config.p1);
    return out;
}

double model_error(const Eigen::VectorXd& beta_hat, const Eigen::VectorXd& beta_true) {
    if (beta_hat.size() != beta_true.size())
        throw validation_error("model_error: coefficient lengths differ");
    return (beta_hat - beta_true).squaredNorm();
}

double mrme_from_errors(const std::vector<double>& me_fm, const std::vector<double>& me_est) {
    if (me_fm.size() != me_est.size() || me_fm.empty())
        throw validation_error("mrme: replicate vectors must be nonempty and equal length");
    const double num = median_of(me_fm);
    const double den = median_of(me_est);
    if (!(den > 0.0)) return std::nan(""); // degenerate
    return num / den;
}

MrmeReport mrme_sweep(const SimulationConfig& base, const std::vector<double>& delta_star_grid) {
    SimulationConfig config = base;
    config.n_valid = 0;
    config.n_test = 0;
    validate_config(config);
    if (config.p2 < 3) throw validation_error("mrme_sweep: S and PS need p2 >= 3");
    for (double d : delta_star_grid)
        if (!(d >= 0.0)) throw validation_error("mrme_sweep: Delta* grid must be nonnegative");

    const double tau = config.taus.front();
    static const Estimator kEst[] = {Estimator::FM, Estimator::SM, Estimator::PT, Estimator::S,
                                     Estimator::PS};
    MrmeReport report;
    report.meta.experiment = "mrme";
    report.meta.metric = "mrme";
    report.meta.seed = config.seed;
    report.meta.replications = config.replications;
    report.meta.config_echo = echo_config(config);
    report.meta.provenance = provenance_string(report.meta.config_echo, config.seed);

    for (std::size_t gi = 0; gi < delta_star_grid.size(); ++gi) {
        const double dstar = delta_star_grid[gi];
        SimulationConfig cfg = config;
        cfg.stream_salt = config.stream_salt + gi;
        cfg.beta_true = Eigen::VectorXd::Zero(config.p1 + config.p2);
        cfg.beta_true.head(config.p1).setOnes();
        cfg.beta_true[config.p1] = dstar;

        const int R = cfg.replications;
        std::vector<std::array<double, 5>> me(R);
        parallel_for(R, [&](std::int64_t lo, std::int64_t hi) {
            for (std::int64_t r = lo; r < hi; ++r) {
                const ReplicateData data = generate(cfg, static_cast<std::uint64_t>(r));
                const QuantileFit full = fit_full(data.train, tau);
                const QuantileFit sub = fit_sub(data.train, tau);
                const GammaBlocks blocks = gamma_blocks(full);
                const ShrinkageResult sh = shrinkage_estimate(full, sub, blocks, cfg.alpha);
                for (int e = 0; e < 5; ++e)
                    me[r][e] = model_error(sh.full_vector(kEst[e]), cfg.beta_true);
            }
        });
        std::vector<double> fm(R);
        for (int r = 0; r < R; ++r) fm[r] = me[r][0];
        for (int e = 0; e < 5; ++e) {
            std::vector<double> v(R);
            for (int r = 0; r < R; ++r) v[r] = me[r][e];
            report.rows.push_back(MrmeRow{dstar, to_string(kEst[e]), mrme_from_errors(fm, v)});
        }
    }
    return report;
}

PmadReports pmad_experiment(const SimulationConfig& base, const std::vector<PmadCaseSpec>& cases) {
    SimulationConfig probe = base;
    validate_config(probe);
    if (probe.n_valid < 1 || probe.n_test < 1)
        throw validation_error("pmad_experiment: needs validation and test splits");
    if (cases.empty()) throw validation_error("pmad_experiment: no error cases given");

    static const char* kQuantEst[] = {"FM", "SM", "PT", "PS"};
    static const char* kPenEst[] = {"Ridge", "Lasso", "ENET"};

    PmadReports out;
    for (ExperimentReport* rep : {&out.model_error, &out.pmad}) {
        rep->meta.experiment = "pmad";
        rep->meta.seed = base.seed;
        rep->meta.replications = base.replications;
        rep->meta.config_echo = echo_config(base);
        rep->meta.provenance = provenance_string(rep->meta.config_echo, base.seed);
    }
    out.model_error.meta.metric = to_string(Metric::model_error_test);
    out.pmad.meta.metric = to_string(Metric::pmad);

    const int n_tau = static_cast<int>(base.taus.size());
    const int rows_per_case = n_tau * (4 + 3) + 1; // quantile + penalized per tau, LSE once

    for (std::size_t ci = 0; ci < cases.size(); ++ci) {
        SimulationConfig cfg = base;
        cfg.error = cases[ci].error;
        cfg.stream_salt = base.stream_salt + 1000 + ci;
        const int R = cfg.replications;
        // metric values: [replicate][row within case][metric]
        std::vector<std::vector<std::array<double, 2>>> vals(
            R, std::vector<std::array<double, 2>>(rows_per_case));

        parallel_for(R, [&](std::int64_t lo, std::int64_t hi) {
            for (std::int64_t r = lo; r < hi; ++r) {
                const ReplicateData data = generate(cfg, static_cast<std::uint64_t>(r));
                const Dataset& train = data.train;
                const Dataset& valid = *data.valid;
                const Dataset& test = *data.test;
                auto score = [&](const Eigen::VectorXd& b) -> std::array<double, 2> {
                    return {signal_error(test.X, b, cfg.beta_true),
                            mean_abs_dev(test.y, test.X, b)};
                };
                int row = 0;
                for (double tau : cfg.taus) {
                    const QuantileFit full = fit_full(train, tau);
                    const QuantileFit sub = fit_sub(train, tau);
                    const GammaBlocks blocks = gamma_blocks(full);
                    const ShrinkageResult sh = shrinkage_estimate(full, sub, blocks, cfg.alpha);
                    vals[r][row++] = score(sh.full_vector(Estimator::FM));
                    vals[r][row++] = score(sh.full_vector(Estimator::SM));
                    vals[r][row++] = score(sh.full_vector(Estimator::PT));
                    vals[r][row++] = score(sh.full_vector(Estimator::PS));
                    for (const char* pen : kPenEst) {
                        PenaltySpec spec;
                        spec.alpha = (pen == kPenEst[0]) ? 0.0
                                     : (pen == kPenEst[1]) ? 1.0
                                                           : cfg.enet_alpha;
                        spec.standardize = true;
                        spec.intercept_first_column = false;
                        const TuneResult tuned = tune(train, valid, tau, spec);
                        vals[r][row++] = score(tuned.beta);
                    }
                }
                const Eigen::VectorXd lse =
                    (train.X.transpose() * train.X)
                        .ldlt()
                        .solve(train.X.transpose() * train.y);
                vals[r][row++] = score(lse);
            }
        });

        // aggregate rows in the fixed emission order used above
        int row = 0;
        auto emit = [&](double tau, const std::string& est) {
            double m[2] = {0.0, 0.0}, s[2] = {0.0, 0.0};
            for (int k = 0; k < 2; ++k) {
                for (int r = 0; r < R; ++r) m[k] += vals[r][row][k];
                m[k] /= R;
                for (int r = 0; r < R; ++r) {
                    const double d = vals[r][row][k] - m[k];
                    s[k] += d * d;
                }
                s[k] = R > 1 ? std::sqrt(s[k] / (R - 1.0) / R) : 0.0;
            }
            out.model_error.rows.push_back(
                ReportRow{tau, est, cases[ci].label, cfg.error.gamma, m[0], s[0]});
            out.pmad.rows.push_back(
                ReportRow{tau, est, cases[ci].label, cfg.error.gamma, m[1], s[1]});
            ++row;
        };
        for (double tau : cfg.taus) {
            for (const char* est : kQuantEst) emit(tau, est);
            for (const char* est : kPenEst) emit(tau, est);
        }
        emit(std::nan(""), "LSE");
    }
    return out;
}

} // namespace qshrink
