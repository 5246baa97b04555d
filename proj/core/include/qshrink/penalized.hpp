#ifndef QSHRINK_PENALIZED_HPP
#define QSHRINK_PENALIZED_HPP

#include <Eigen/Dense>
#include <vector>

#include "qshrink/dataset.hpp"

namespace qshrink {

// Elastic-net penalized check-loss regression:
//   min_beta  sum_i rho_tau(y_i - x_i' beta) + lambda (alpha ||b||_1 + (1-alpha)/2 ||b||_2^2)
// where the penalty runs over the penalized coordinates only.
struct PenaltySpec {
    double alpha = 1.0;               // 1 = lasso, 0 = ridge
    std::vector<double> lambda_grid;  // strictly decreasing, >= 0 (0 = unpenalized)
    bool standardize = true;          // scale columns to unit variance before fitting
    bool intercept_first_column = false; // column 0 is an unpenalized intercept
};

void validate_penalty_spec(const PenaltySpec& spec);

// lambda above which the lasso subgradient condition holds at beta = 0
// (intercept, when present, at its own optimum).  For alpha < 0.01 the
// alpha = 0.01 bound is used since the ridge path has no finite lambda_max.
double lambda_max(const Dataset& data, double tau, const PenaltySpec& spec);

// 50 log-spaced values from lambda_max down to 1e-4 * lambda_max.
std::vector<double> default_lambda_grid(const Dataset& data, double tau,
                                        const PenaltySpec& spec, int count = 50);

struct PenalizedFit {
    Eigen::VectorXd beta;   // original scale
    double lambda = 0.0;
    double objective = 0.0; // check loss + penalty, original scale
    int passes = 0;
};

PenalizedFit fit_penalized(const Dataset& data, double tau, const PenaltySpec& spec,
                           double lambda);

struct TuneResult {
    double lambda = 0.0;
    Eigen::VectorXd beta;
    double validation_loss = 0.0;
    std::vector<double> path_validation_loss; // one per grid entry
};

// Warm-started path down spec.lambda_grid (or the default grid when empty);
// selects the lambda minimizing mean validation check loss, breaking ties
// toward the smaller lambda.
TuneResult tune(const Dataset& train, const Dataset& valid, double tau,
                const PenaltySpec& spec);

// Per-coordinate subgradient residual of the penalized problem, scaled by
// max(1, ||x_j||_1).  Residuals with |r| <= active_tol contribute any value
// in [tau-1, tau].
double penalized_kkt_residual(const Dataset& data, double tau, const PenaltySpec& spec,
                              double lambda, const Eigen::VectorXd& beta,
                              double active_tol);

} // namespace qshrink

#endif
