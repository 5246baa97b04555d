#ifndef QSHRINK_SHRINKAGE_HPP
#define QSHRINK_SHRINKAGE_HPP

#include <Eigen/Dense>

#include "qshrink/estimators.hpp"
#include "qshrink/qr.hpp"

namespace qshrink {

// W_n = n / (tau(1-tau)) * beta2' Gamma_22.1 beta2, asymptotically chi-square
// with p2 degrees of freedom under beta2 = 0.
double wald_statistic(const QuantileFit& full_fit, const GammaBlocks& blocks);

// Selection estimator: SM when wald <= upper-alpha chi-square quantile
// (boundary counts as accept), FM otherwise.
Eigen::VectorXd pretest(const Eigen::VectorXd& beta1_fm, const Eigen::VectorXd& beta1_sm,
                        double wald, int p2, double alpha);

// SM + (FM - SM)(1 - (p2-2)/W); needs p2 >= 3.  W == 0 maps to SM with the
// degenerate flag (the limit of the positive-part formula).
Eigen::VectorXd stein(const Eigen::VectorXd& beta1_fm, const Eigen::VectorXd& beta1_sm,
                      double wald, int p2, bool* degenerate = nullptr);

// SM + (FM - SM) max(0, 1 - (p2-2)/W); always a convex combination.
Eigen::VectorXd positive_stein(const Eigen::VectorXd& beta1_fm,
                               const Eigen::VectorXd& beta1_sm, double wald, int p2,
                               bool* degenerate = nullptr);

struct ShrinkageResult {
    double tau = 0.0;
    double alpha = 0.0;
    double wald = 0.0;
    double critical_value = 0.0;
    double shrink_factor = 0.0; // 1 - (p2-2)/W
    bool pretest_accepts = false;
    bool positive_part_truncated = false;
    bool wald_degenerate = false;
    int p1 = 0, p2 = 0;
    Eigen::VectorXd beta_fm1, beta_sm1, beta_pt1, beta_s1, beta_ps1; // beta1 targets
    Eigen::VectorXd beta_fm2;                                       // FM's beta2 block

    // Length-p coefficient vector for prediction.  The combination weight is
    // applied to the whole vector with the sub-model padded by zeros, so the
    // beta2 part is scaled by the same data-driven factor.
    Eigen::VectorXd full_vector(Estimator which) const;
};

// Runs the complete pipeline from a full and a sub fit.  The S and PS fields
// are only populated when p2 >= 3; reading them otherwise throws.
ShrinkageResult shrinkage_estimate(const QuantileFit& full_fit, const QuantileFit& sub_fit,
                                   const GammaBlocks& blocks, double alpha);

} // namespace qshrink

#endif
