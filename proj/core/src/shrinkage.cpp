#include "qshrink/shrinkage.hpp"

#include <cmath>
#include <limits>

#include "qshrink/errors.hpp"
#include "qshrink/specfun.hpp"

namespace qshrink {

namespace {

void check_stein_inputs(const Eigen::VectorXd& fm, const Eigen::VectorXd& sm, double wald,
                        int p2) {
    if (fm.size() != sm.size())
        throw validation_error("shrinkage: FM and SM coefficient lengths differ");
    if (p2 < 3) throw validation_error("shrinkage: S and PS require p2 >= 3");
    if (!(wald >= 0.0)) throw validation_error("shrinkage: Wald statistic must be >= 0");
}

} // namespace

double wald_statistic(const QuantileFit& full_fit, const GammaBlocks& blocks) {
    if (full_fit.submodel) throw validation_error("wald_statistic: requires a full-model fit");
    if (blocks.p2 < 1) throw validation_error("wald_statistic: needs p2 >= 1");
    const int n = static_cast<int>(full_fit.residuals.size());
    const Eigen::VectorXd beta2 = full_fit.beta.tail(blocks.p2);
    const double tt = full_fit.tau * (1.0 - full_fit.tau);
    const double q = beta2.dot(blocks.G22_1 * beta2);
    if (!(q >= -1e-12))
        throw singular_block_error("wald_statistic: Gamma_22.1 quadratic form is negative");
    return std::max(0.0, static_cast<double>(n) / tt * q);
}

Eigen::VectorXd pretest(const Eigen::VectorXd& beta1_fm, const Eigen::VectorXd& beta1_sm,
                        double wald, int p2, double alpha) {
    if (beta1_fm.size() != beta1_sm.size())
        throw validation_error("pretest: FM and SM coefficient lengths differ");
    if (p2 < 1) throw validation_error("pretest: needs p2 >= 1");
    if (!(alpha > 0.0 && alpha < 1.0)) throw validation_error("pretest: alpha must be in (0,1)");
    if (!(wald >= 0.0)) throw validation_error("pretest: Wald statistic must be >= 0");
    const double crit = chi_squared_quantile(p2, 1.0 - alpha);
    return (wald <= crit) ? beta1_sm : beta1_fm;
}

Eigen::VectorXd stein(const Eigen::VectorXd& beta1_fm, const Eigen::VectorXd& beta1_sm,
                      double wald, int p2, bool* degenerate) {
    check_stein_inputs(beta1_fm, beta1_sm, wald, p2);
    if (degenerate) *degenerate = false;
    if (wald == 0.0) {
        if (degenerate) *degenerate = true;
        return beta1_sm;
    }
    const double factor = 1.0 - (p2 - 2.0) / wald;
    return beta1_sm + factor * (beta1_fm - beta1_sm);
}

Eigen::VectorXd positive_stein(const Eigen::VectorXd& beta1_fm,
                               const Eigen::VectorXd& beta1_sm, double wald, int p2,
                               bool* degenerate) {
    check_stein_inputs(beta1_fm, beta1_sm, wald, p2);
    if (degenerate) *degenerate = false;
    if (wald == 0.0) {
        if (degenerate) *degenerate = true;
        return beta1_sm;
    }
    const double factor = std::max(0.0, 1.0 - (p2 - 2.0) / wald);
    return beta1_sm + factor * (beta1_fm - beta1_sm);
}

Eigen::VectorXd ShrinkageResult::full_vector(Estimator which) const {
    const int p = p1 + p2;
    Eigen::VectorXd out = Eigen::VectorXd::Zero(p);
    switch (which) {
        case Estimator::FM:
            out.head(p1) = beta_fm1;
            out.tail(p2) = beta_fm2;
            return out;
        case Estimator::SM:
            out.head(p1) = beta_sm1;
            return out;
        case Estimator::PT:
            if (pretest_accepts) {
                out.head(p1) = beta_sm1;
            } else {
                out.head(p1) = beta_fm1;
                out.tail(p2) = beta_fm2;
            }
            return out;
        case Estimator::S: {
            if (beta_s1.size() == 0)
                throw validation_error("full_vector: S estimator unavailable (p2 < 3)");
            const double f = wald_degenerate ? 0.0 : shrink_factor;
            out.head(p1) = beta_s1;
            out.tail(p2) = f * beta_fm2;
            return out;
        }
        case Estimator::PS: {
            if (beta_ps1.size() == 0)
                throw validation_error("full_vector: PS estimator unavailable (p2 < 3)");
            const double f = wald_degenerate ? 0.0 : std::max(0.0, shrink_factor);
            out.head(p1) = beta_ps1;
            out.tail(p2) = f * beta_fm2;
            return out;
        }
    }
    throw validation_error("full_vector: unknown estimator");
}

ShrinkageResult shrinkage_estimate(const QuantileFit& full_fit, const QuantileFit& sub_fit,
                                   const GammaBlocks& blocks, double alpha) {
    if (!(alpha > 0.0 && alpha < 1.0))
        throw validation_error("shrinkage_estimate: alpha must be in (0,1)");
    if (!sub_fit.submodel)
        throw validation_error("shrinkage_estimate: second argument must be a sub-model fit");
    if (full_fit.beta.size() != sub_fit.beta.size())
        throw validation_error("shrinkage_estimate: fits come from different designs");

    ShrinkageResult res;
    res.tau = full_fit.tau;
    res.alpha = alpha;
    res.p1 = blocks.p1;
    res.p2 = blocks.p2;
    res.beta_fm1 = full_fit.beta.head(blocks.p1);
    res.beta_fm2 = full_fit.beta.tail(blocks.p2);
    res.beta_sm1 = sub_fit.beta.head(blocks.p1);

    res.wald = wald_statistic(full_fit, blocks);
    res.critical_value = chi_squared_quantile(blocks.p2, 1.0 - alpha);
    res.pretest_accepts = res.wald <= res.critical_value;
    res.beta_pt1 = res.pretest_accepts ? res.beta_sm1 : res.beta_fm1;

    if (res.wald > 0.0) {
        res.shrink_factor = 1.0 - (blocks.p2 - 2.0) / res.wald;
    } else {
        res.shrink_factor = -std::numeric_limits<double>::infinity();
    }
    if (blocks.p2 >= 3) {
        res.beta_s1 = stein(res.beta_fm1, res.beta_sm1, res.wald, blocks.p2, &res.wald_degenerate);
        res.beta_ps1 = positive_stein(res.beta_fm1, res.beta_sm1, res.wald, blocks.p2);
        res.positive_part_truncated = res.wald_degenerate || res.shrink_factor <= 0.0;
    }
    return res;
}

} // namespace qshrink
