#ifndef QSHRINK_QR_HPP
#define QSHRINK_QR_HPP

#include <Eigen/Dense>
#include <vector>

#include "qshrink/dataset.hpp"

namespace qshrink {

// Check loss rho_tau(u) = u * (tau - I(u < 0)); its sum is the fit objective.
double check_loss(double tau, const Eigen::VectorXd& residuals);

struct BandwidthSpec {
    enum class Rule { hall_sheather, fixed };
    Rule rule = Rule::hall_sheather;
    double value = 0.0; // used when rule == fixed
};

struct FitOptions {
    double tol_kkt = 1e-4;        // subgradient certificate, per column, scaled
    int max_iter = 500;           // total accepted solver iterations
    double smoothing_min = 1e-8;  // final smoothing level relative to residual scale
    BandwidthSpec bandwidth{};
    bool compute_covariance = true;
};

// Result of a check-loss fit.  For sub-model fits beta is padded with zeros
// over the X2 block and the covariance objects refer to the X1 design only.
struct QuantileFit {
    double tau = 0.0;
    Eigen::VectorXd beta;
    Eigen::VectorXd residuals;
    Eigen::MatrixXd D0;    // (1/n) X'X
    Eigen::MatrixXd D1;    // Powell kernel weighted Gram matrix
    Eigen::MatrixXd Gamma; // D1 D0^-1 D1
    Eigen::MatrixXd cov;   // tau(1-tau) D1^-1 D0 D1^-1 / n
    double objective = 0.0;
    int iterations = 0;
    std::vector<double> objective_trace; // objective after each accepted step
    double bandwidth = 0.0;
    double active_tol = 0.0; // residuals at or below this count as interpolated
    bool d1_degenerate = false;
    bool d0_degenerate = false; // D0 needed a ridge repair (zero columns)
    int p1 = 0;
    bool submodel = false;
};

QuantileFit fit_full(const Dataset& data, double tau, const FitOptions& opts = {});

// Restricted fit over X1 with the X2 coefficients pinned at zero.
QuantileFit fit_sub(const Dataset& data, double tau, const FitOptions& opts = {});

// Bandwidth rule: n^{-1/3} z_{0.975}^{2/3} (1.5 phi(q)^2 / (2 q^2 + 1))^{1/3}
// with q = Phi^{-1}(tau), multiplied by the residual interquartile range.
double hall_sheather_bandwidth(double tau, int n, const Eigen::VectorXd& residuals);

// Powell kernel estimate D1 = (1/n) sum (2h)^{-1} I(|r_i| <= h) x_i x_i'.
// Residuals with |r| <= exclude_tol are left out of the indicator: a check
// loss fit interpolates up to p observations exactly, and those mechanically
// zero residuals carry no density information (keeping them inflates the
// estimate by about p/(2hn) and makes the Wald test over-reject).
// Not-positive-definite results are ridge repaired (eps = 1e-8 trace/p, with an
// absolute floor when the matrix is all zero) and flagged via `degenerate`.
Eigen::MatrixXd estimate_sparsity(const Eigen::VectorXd& residuals, const Eigen::MatrixXd& X,
                                  double tau, const BandwidthSpec& bw,
                                  double* bandwidth_out = nullptr,
                                  bool* degenerate_out = nullptr, double exclude_tol = 0.0);

struct GammaBlocks {
    Eigen::MatrixXd G11, G12, G21, G22;
    Eigen::MatrixXd G22_1; // G22 - G21 G11^-1 G12
    Eigen::MatrixXd G11_2; // G11 - G12 G22^-1 G21
    int p1 = 0, p2 = 0;
};

// Partitions Gamma from a full-model fit and forms both Schur complements.
GammaBlocks gamma_blocks(const QuantileFit& full_fit);
GammaBlocks gamma_blocks(const Eigen::MatrixXd& Gamma, int p1);

// The linearized restricted estimator beta1_FM + G11^-1 G12 beta2_FM; the
// asymptotic identity counterpart of fit_sub, exposed for comparisons.
Eigen::VectorXd submodel_linear_approx(const QuantileFit& full_fit, const GammaBlocks& blocks);

struct KktReport {
    double max_residual = 0.0; // worst column, after scaling by max(1, ||x_j||_1)
    int active_count = 0;
    bool ok = false;
};

// Subgradient certificate: residuals with |r| <= active_tol contribute any
// value in [tau-1, tau]; all other terms are fixed at psi_tau(r).  For each
// column the fixed part must be cancellable by an admissible choice on the
// active set, within tol_kkt * max(1, ||x_j||_1).
KktReport kkt_check(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, double tau,
                    const Eigen::VectorXd& beta, double tol_kkt, double active_tol);

} // namespace qshrink

#endif
