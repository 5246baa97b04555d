#ifndef QSHRINK_ASYMPTOTICS_HPP
#define QSHRINK_ASYMPTOTICS_HPP

#include <Eigen/Dense>
#include <iosfwd>
#include <vector>

#include "qshrink/estimators.hpp"
#include "qshrink/qr.hpp"

namespace qshrink {

// How the noncentrality scalar is formed from the alternative direction.
//   wald_form:    Delta = gamma' G22.1 gamma / (tau(1-tau))
//                 (the quadratic form matching the Wald statistic; default)
//   delta_form:   Delta = delta' G22.1 delta / (tau(1-tau)), defined only when
//                 p1 == p2; kept for comparison with the wald_form reading.
enum class NoncentralityRule { wald_form, delta_form };

// Which cross-covariance enters the PT/S/PS risk expressions.
//   joint_law: Cov(theta1, theta3) = Phi, the value implied by the joint
//              normal law of the component estimators; agrees with the
//              Monte Carlo construction and is the default.
//   sigma12_object: substitutes the Sigma12 = -tau(1-tau) G12 G21 G11^-1
//              object instead; kept so the two conventions can be compared.
enum class CrossCovConvention { joint_law, sigma12_object };

struct LocalAlternative {
    Eigen::VectorXd gamma;  // length p2, the root-n local direction
    Eigen::VectorXd delta;  // G11^-1 G12 gamma
    double noncentrality = 0.0;
    double tau = 0.0;
};

LocalAlternative make_local_alternative(const Eigen::VectorXd& gamma, const GammaBlocks& blocks,
                                        double tau,
                                        NoncentralityRule rule = NoncentralityRule::wald_form);

struct AsymptoticInputs {
    GammaBlocks blocks;
    double tau = 0.5;
    Eigen::MatrixXd weight; // p1 x p1 positive definite
    double alpha = 0.05;    // pretest size
};

AsymptoticInputs make_asymptotic_inputs(GammaBlocks blocks, double tau, Eigen::MatrixXd weight,
                                        double alpha);

struct CovarianceObjects {
    Eigen::MatrixXd phi;        // tau(1-tau) G11^-1 G12 G22.1^-1 G21 G11^-1
    Eigen::MatrixXd sigma12;    // -tau(1-tau) G12 G21 G11^-1
    Eigen::MatrixXd sigma_star; // tau(1-tau) (G11.2^-1 + G12 G21 G11^-1 - G11)
};

CovarianceObjects covariance_objects(const AsymptoticInputs& inputs);

// Asymptotic bias vector of sqrt(n)(estimator - beta1).
Eigen::VectorXd asymptotic_bias(Estimator which, const LocalAlternative& alt,
                                const AsymptoticInputs& inputs);

// bias' G11.2 bias.
double quadratic_bias(Estimator which, const LocalAlternative& alt,
                      const AsymptoticInputs& inputs);

// tr(W * second moment matrix) of the limiting law.
double asymptotic_risk(Estimator which, const LocalAlternative& alt,
                       const AsymptoticInputs& inputs,
                       CrossCovConvention convention = CrossCovConvention::joint_law);

struct CurvePoint {
    double delta = 0.0; // noncentrality grid value
    Estimator estimator = Estimator::FM;
    double bias_norm = 0.0;
    double qb = 0.0;
    double risk = 0.0;
};

// Sweeps the noncentrality grid along a fixed direction (gamma scaled so each
// grid value is attained exactly) and evaluates bias norm, QB, and risk.
std::vector<CurvePoint> risk_curves(const AsymptoticInputs& inputs,
                                    const Eigen::VectorXd& gamma_direction,
                                    const std::vector<double>& delta_grid,
                                    const std::vector<Estimator>& estimators);

// CSV with columns delta, estimator, bias_norm, qb, risk.
void write_curves_csv(std::ostream& os, const std::vector<CurvePoint>& points);

} // namespace qshrink

#endif
