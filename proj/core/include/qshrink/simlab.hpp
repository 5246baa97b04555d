#ifndef QSHRINK_SIMLAB_HPP
#define QSHRINK_SIMLAB_HPP

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "qshrink/dataset.hpp"
#include "qshrink/report.hpp"

namespace qshrink {

// Error models of the simulation study.  `gamma` is the contamination
// fraction; cauchy_mixture draws a standard Cauchy with probability gamma,
// contaminated_normal draws N(0, sigma2).  A nonempty variance_schedule
// replaces the mixture with independent N(0, schedule[i mod len]) errors
// (per-index heteroskedastic stress extension).
struct ErrorSpec {
    enum class Model { cauchy_mixture, contaminated_normal };
    Model model = Model::contaminated_normal;
    double gamma = 0.0;
    double sigma2 = 100.0;
    std::vector<double> variance_schedule;
};

inline ErrorSpec case1(double gamma) {
    return ErrorSpec{ErrorSpec::Model::cauchy_mixture, gamma, 100.0, {}};
}
inline ErrorSpec case2(double gamma, double sigma2 = 100.0) {
    return ErrorSpec{ErrorSpec::Model::contaminated_normal, gamma, sigma2, {}};
}

enum class Metric { model_error_test, pmad };

inline const char* to_string(Metric m) {
    return m == Metric::model_error_test ? "model_error_test" : "pmad";
}

struct SimulationConfig {
    int n_train = 60;
    int n_valid = 0;
    int n_test = 0;
    int p1 = 5;
    int p2 = 5;
    Eigen::VectorXd beta_true;       // length p1 + p2
    double rho = 0.5;                // design correlation rho^|j-k|
    ErrorSpec error;
    std::vector<double> taus{0.5};
    double alpha = 0.05;             // pretest size
    double enet_alpha = 0.5;         // elastic-net mixing for the ENET baseline
    int replications = 1000;
    std::uint64_t seed = 42;
    std::uint64_t stream_salt = 0;   // extra key so distinct cases use distinct streams
    bool standardize_columns = false;
    Metric metric = Metric::model_error_test;
};

void validate_config(const SimulationConfig& config);

struct ReplicateData {
    Dataset train;
    std::optional<Dataset> valid;
    std::optional<Dataset> test;
};

// Deterministic given (seed, stream_salt, replicate_index).  Rows are drawn
// as one pool of n_train + n_valid + n_test observations; when
// standardize_columns is set the pooled columns are scaled to mean zero and
// unit variance before responses are formed.
ReplicateData generate(const SimulationConfig& config, std::uint64_t replicate_index);

// Squared coefficient error (b - beta)'(b - beta).
double model_error(const Eigen::VectorXd& beta_hat, const Eigen::VectorXd& beta_true);

// median(ME of FM) / median(ME of estimator); NaN when the denominator median
// is zero (degenerate).
double mrme_from_errors(const std::vector<double>& me_fm, const std::vector<double>& me_est);

// Sweep over Delta* = ||beta - beta0||: the true coefficient vector is
// (1,...,1, Delta*, 0, ..., 0) with the perturbation on the first X2
// coordinate.  Estimators FM, SM, PT, S, PS at taus[0].
MrmeReport mrme_sweep(const SimulationConfig& config,
                      const std::vector<double>& delta_star_grid);

struct PmadCaseSpec {
    std::string label; // "case1", "case2"
    ErrorSpec error;
};

// Train/validation/test protocol: quantile estimators fit on train, penalized
// baselines tuned on validation, all scored on test.  Produces one report per
// metric: squared signal error (1/n_test)||X_test (b - beta)||^2 and the mean
// absolute deviation of noisy test responses.
struct PmadReports {
    ExperimentReport model_error; // metric "model_error_test"
    ExperimentReport pmad;        // metric "pmad"
};

PmadReports pmad_experiment(const SimulationConfig& config,
                            const std::vector<PmadCaseSpec>& cases);

} // namespace qshrink

#endif
