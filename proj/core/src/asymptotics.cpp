#include "qshrink/asymptotics.hpp"

#include <cmath>
#include <ostream>

#include "qshrink/errors.hpp"
#include "qshrink/specfun.hpp"

namespace qshrink {

namespace {

struct Functionals {
    // H_m(x; Delta) at the two cutoffs, inverse moments, and the truncated
    // pieces needed by the PS expressions; df offsets are p2+2 and p2+4.
    double crit = 0.0; // chi2_{p2, alpha} upper quantile
    double H2_crit = 0.0, H4_crit = 0.0;
    double H2_t = 0.0, H4_t = 0.0; // cutoff t = p2 - 2
    double E2 = 0.0, E4 = 0.0;     // E[X^-1], df p2+2 / p2+4
    double E22 = 0.0, E44 = 0.0;   // E[X^-2]
    double A2_below = 0.0, A4_below = 0.0; // E[X^-1 I(X<=t)]
    double B2_below = 0.0, B4_below = 0.0; // E[X^-2 I(X<=t)]
};

Functionals compute_functionals(int p2, double alpha, double Delta, bool need_stein) {
    Functionals f;
    const NoncentralChiSq d2 = make_noncentral_chi_sq(p2 + 2, Delta);
    const NoncentralChiSq d4 = make_noncentral_chi_sq(p2 + 4, Delta);
    f.crit = chi_squared_quantile(p2, 1.0 - alpha);
    f.H2_crit = cdf(d2, f.crit);
    f.H4_crit = cdf(d4, f.crit);
    if (need_stein) {
        const double t = p2 - 2.0;
        f.H2_t = cdf(d2, t);
        f.H4_t = cdf(d4, t);
        f.E2 = inv_moment(d2, 1);
        f.E4 = inv_moment(d4, 1);
        f.E22 = inv_moment(d2, 2);
        f.E44 = inv_moment(d4, 2);
        f.A2_below = truncated_inv_moment(d2, 1, t, TailSide::below);
        f.A4_below = truncated_inv_moment(d4, 1, t, TailSide::below);
        f.B2_below = truncated_inv_moment(d2, 2, t, TailSide::below);
        f.B4_below = truncated_inv_moment(d4, 2, t, TailSide::below);
    }
    return f;
}

void check_weight(const Eigen::MatrixXd& W, int p1) {
    if (W.rows() != p1 || W.cols() != p1)
        throw validation_error("asymptotics: weight matrix must be p1 x p1");
    if (!W.isApprox(W.transpose(), 1e-10))
        throw validation_error("asymptotics: weight matrix must be symmetric");
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(W);
    if (!(es.eigenvalues().minCoeff() > 0.0))
        throw validation_error("asymptotics: weight matrix must be positive definite");
}

} // namespace

LocalAlternative make_local_alternative(const Eigen::VectorXd& gamma, const GammaBlocks& blocks,
                                        double tau, NoncentralityRule rule) {
    if (gamma.size() != blocks.p2)
        throw validation_error("local alternative: gamma must have length p2");
    if (!(tau > 0.0 && tau < 1.0))
        throw validation_error("local alternative: tau must be in (0,1)");
    LocalAlternative alt;
    alt.gamma = gamma;
    alt.tau = tau;
    alt.delta = blocks.G11.ldlt().solve(blocks.G12 * gamma);
    const double tt = tau * (1.0 - tau);
    if (rule == NoncentralityRule::wald_form) {
        alt.noncentrality = gamma.dot(blocks.G22_1 * gamma) / tt;
    } else {
        if (blocks.p1 != blocks.p2)
            throw validation_error(
                "local alternative: the delta-based noncentrality needs p1 == p2");
        alt.noncentrality = alt.delta.dot(blocks.G22_1 * alt.delta) / tt;
    }
    if (alt.noncentrality < 0.0) alt.noncentrality = 0.0;
    return alt;
}

AsymptoticInputs make_asymptotic_inputs(GammaBlocks blocks, double tau, Eigen::MatrixXd weight,
                                        double alpha) {
    if (!(tau > 0.0 && tau < 1.0)) throw validation_error("asymptotics: tau must be in (0,1)");
    if (!(alpha > 0.0 && alpha < 1.0))
        throw validation_error("asymptotics: alpha must be in (0,1)");
    check_weight(weight, blocks.p1);
    return AsymptoticInputs{std::move(blocks), tau, std::move(weight), alpha};
}

CovarianceObjects covariance_objects(const AsymptoticInputs& inputs) {
    const GammaBlocks& b = inputs.blocks;
    const double tt = inputs.tau * (1.0 - inputs.tau);
    const Eigen::MatrixXd I1 = Eigen::MatrixXd::Identity(b.p1, b.p1);
    const Eigen::MatrixXd G11_inv = b.G11.ldlt().solve(I1);
    const Eigen::MatrixXd G221_inv =
        b.G22_1.ldlt().solve(Eigen::MatrixXd::Identity(b.p2, b.p2));
    const Eigen::MatrixXd G112_inv = b.G11_2.ldlt().solve(I1);

    CovarianceObjects c;
    c.phi = tt * G11_inv * b.G12 * G221_inv * b.G21 * G11_inv;
    c.phi = 0.5 * (c.phi + c.phi.transpose()).eval();
    c.sigma12 = -tt * b.G12 * b.G21 * G11_inv;
    c.sigma_star = tt * (G112_inv + b.G12 * b.G21 * G11_inv - b.G11);
    return c;
}

Eigen::VectorXd asymptotic_bias(Estimator which, const LocalAlternative& alt,
                                const AsymptoticInputs& inputs) {
    const int p2 = inputs.blocks.p2;
    const double Delta = alt.noncentrality;
    switch (which) {
        case Estimator::FM:
            return Eigen::VectorXd::Zero(inputs.blocks.p1);
        case Estimator::SM:
            return alt.delta;
        case Estimator::PT: {
            const Functionals f = compute_functionals(p2, inputs.alpha, Delta, false);
            return alt.delta * f.H2_crit;
        }
        case Estimator::S: {
            if (p2 < 3) throw validation_error("asymptotic_bias: S requires p2 >= 3");
            const NoncentralChiSq d2 = make_noncentral_chi_sq(p2 + 2, Delta);
            return (p2 - 2.0) * inv_moment(d2, 1) * alt.delta;
        }
        case Estimator::PS: {
            if (p2 < 3) throw validation_error("asymptotic_bias: PS requires p2 >= 3");
            const NoncentralChiSq d2 = make_noncentral_chi_sq(p2 + 2, Delta);
            const double t = p2 - 2.0;
            const double factor =
                cdf(d2, t) + (p2 - 2.0) * truncated_inv_moment(d2, 1, t, TailSide::above);
            return factor * alt.delta;
        }
    }
    throw validation_error("asymptotic_bias: unknown estimator");
}

double quadratic_bias(Estimator which, const LocalAlternative& alt,
                      const AsymptoticInputs& inputs) {
    const Eigen::VectorXd b = asymptotic_bias(which, alt, inputs);
    return b.dot(inputs.blocks.G11_2 * b);
}

double asymptotic_risk(Estimator which, const LocalAlternative& alt,
                       const AsymptoticInputs& inputs, CrossCovConvention convention) {
    const GammaBlocks& blk = inputs.blocks;
    const int p2 = blk.p2;
    const double tt = inputs.tau * (1.0 - inputs.tau);
    const double Delta = alt.noncentrality;
    const Eigen::MatrixXd& W = inputs.weight;
    const Eigen::MatrixXd I1 = Eigen::MatrixXd::Identity(blk.p1, blk.p1);

    const CovarianceObjects cov = covariance_objects(inputs);
    // Cross-covariance of the estimator gap with the full-model component.
    const Eigen::MatrixXd cross =
        (convention == CrossCovConvention::joint_law) ? cov.phi : cov.sigma12;

    const double risk_fm = tt * (W * blk.G11_2.ldlt().solve(I1)).trace();
    const double dWd = alt.delta.dot(W * alt.delta);
    const double trWPhi = (W * cov.phi).trace();
    const double trWCross = (W * cross).trace();
    // tr(W delta delta' Phi^-1 cross); collapses to dWd when cross == phi.
    const Eigen::MatrixXd phi_inv_cross = [&] {
        if (convention == CrossCovConvention::joint_law)
            return Eigen::MatrixXd(Eigen::MatrixXd::Identity(blk.p1, blk.p1));
        Eigen::LDLT<Eigen::MatrixXd> phi_f(cov.phi);
        if (phi_f.info() != Eigen::Success || !(phi_f.vectorD().minCoeff() > 0.0))
            throw singular_block_error("asymptotic_risk: Phi is singular");
        return Eigen::MatrixXd(phi_f.solve(cross));
    }();
    const double dWd_cross = (W * alt.delta * alt.delta.transpose() * phi_inv_cross).trace();

    switch (which) {
        case Estimator::FM:
            return risk_fm;
        case Estimator::SM:
            return tt * (W * blk.G11.ldlt().solve(I1)).trace() + dWd;
        case Estimator::PT: {
            const Functionals f = compute_functionals(p2, inputs.alpha, Delta, false);
            return risk_fm - 2.0 * trWCross * f.H2_crit + trWPhi * f.H2_crit +
                   dWd * f.H4_crit + 2.0 * dWd_cross * (f.H2_crit - f.H4_crit);
        }
        case Estimator::S: {
            if (p2 < 3) throw validation_error("asymptotic_risk: S requires p2 >= 3");
            const Functionals f = compute_functionals(p2, inputs.alpha, Delta, true);
            const double t = p2 - 2.0;
            return risk_fm - 2.0 * t * (trWCross * f.E2 + dWd_cross * (f.E4 - f.E2)) +
                   t * t * (trWPhi * f.E22 + dWd * f.E44);
        }
        case Estimator::PS: {
            if (p2 < 3) throw validation_error("asymptotic_risk: PS requires p2 >= 3");
            const Functionals f = compute_functionals(p2, inputs.alpha, Delta, true);
            const double t = p2 - 2.0;
            const double risk_s =
                risk_fm - 2.0 * t * (trWCross * f.E2 + dWd_cross * (f.E4 - f.E2)) +
                t * t * (trWPhi * f.E22 + dWd * f.E44);
            // Truncated functionals of g(X) = (1 - t/X) I(X <= t) at df p2+2, p2+4:
            //   g_m = E[g], u_m = E[g/X], gsq_m = E[g^2].
            const double g2 = f.H2_t - t * f.A2_below;
            const double g4 = f.H4_t - t * f.A4_below;
            const double u2 = f.A2_below - t * f.B2_below;
            const double u4 = f.A4_below - t * f.B4_below;
            const double gsq2 = f.H2_t - 2.0 * t * f.A2_below + t * t * f.B2_below;
            const double gsq4 = f.H4_t - 2.0 * t * f.A4_below + t * t * f.B4_below;
            // risk_s - 2 tr(W E[gap fm' g]) + 2t tr(W E[gap gap' g/X]) + tr(W E[gap gap' g^2])
            return risk_s - 2.0 * (g2 * trWCross + (g4 - g2) * dWd_cross) +
                   2.0 * t * (trWPhi * u2 + dWd * u4) + trWPhi * gsq2 + dWd * gsq4;
        }
    }
    throw validation_error("asymptotic_risk: unknown estimator");
}

std::vector<CurvePoint> risk_curves(const AsymptoticInputs& inputs,
                                    const Eigen::VectorXd& gamma_direction,
                                    const std::vector<double>& delta_grid,
                                    const std::vector<Estimator>& estimators) {
    if (delta_grid.empty()) throw validation_error("risk_curves: empty grid");
    double prev = -1.0;
    for (double d : delta_grid) {
        if (!(d >= 0.0) || d <= prev)
            throw validation_error("risk_curves: grid must be nonnegative and increasing");
        prev = d;
    }
    if (gamma_direction.size() != inputs.blocks.p2)
        throw validation_error("risk_curves: direction must have length p2");
    const double tt = inputs.tau * (1.0 - inputs.tau);
    const double base = gamma_direction.dot(inputs.blocks.G22_1 * gamma_direction) / tt;
    if (!(base > 0.0)) throw validation_error("risk_curves: direction has zero length");

    std::vector<CurvePoint> out;
    out.reserve(delta_grid.size() * estimators.size());
    for (double d : delta_grid) {
        const Eigen::VectorXd gamma = gamma_direction * std::sqrt(d / base);
        const LocalAlternative alt = make_local_alternative(gamma, inputs.blocks, inputs.tau);
        for (Estimator est : estimators) {
            CurvePoint pt;
            pt.delta = d;
            pt.estimator = est;
            pt.bias_norm = asymptotic_bias(est, alt, inputs).norm();
            pt.qb = quadratic_bias(est, alt, inputs);
            pt.risk = asymptotic_risk(est, alt, inputs);
            out.push_back(pt);
        }
    }
    return out;
}

void write_curves_csv(std::ostream& os, const std::vector<CurvePoint>& points) {
    os << "delta,estimator,bias_norm,qb,risk\n";
    char buf[128];
    for (const auto& pt : points) {
        std::snprintf(buf, sizeof(buf), "%.17g,%s,%.17g,%.17g,%.17g\n", pt.delta,
                      to_string(pt.estimator), pt.bias_norm, pt.qb, pt.risk);
        os << buf;
    }
}

} // namespace qshrink
