#include "qshrink/penalized.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "qshrink/errors.hpp"
#include "qshrink/qr.hpp"

namespace qshrink {

namespace {

// Derivative of the uniform-kernel smoothed check loss; C^0, linear on
// [-h, h], curvature bound 1/(2h).
double smoothed_deriv(double tau, double h, double u) {
    if (u >= h) return tau;
    if (u <= -h) return tau - 1.0;
    return (u + (2.0 * tau - 1.0) * h) / (2.0 * h);
}

double soft_threshold(double z, double t) {
    if (z > t) return z - t;
    if (z < -t) return z + t;
    return 0.0;
}

double sample_quantile(std::vector<double> v, double q) {
    std::sort(v.begin(), v.end());
    if (v.empty()) return 0.0;
    const double pos = q * (static_cast<double>(v.size()) - 1.0);
    const std::size_t lo = static_cast<std::size_t>(pos);
    const std::size_t hi = std::min(lo + 1, v.size() - 1);
    return v[lo] + (pos - lo) * (v[hi] - v[lo]);
}

struct WorkSpace {
    Eigen::MatrixXd X;     // standardized design
    Eigen::VectorXd y;
    Eigen::VectorXd center, scale; // per column (identity when standardize off)
    Eigen::VectorXd col_sq;        // sum of squares per standardized column
    std::vector<bool> penalized;
    double y_scale = 1.0;
};

WorkSpace prepare(const Dataset& data, const PenaltySpec& spec) {
    WorkSpace w;
    const int n = data.n(), p = data.p();
    w.X = data.X;
    w.y = data.y;
    w.center = Eigen::VectorXd::Zero(p);
    w.scale = Eigen::VectorXd::Ones(p);
    w.penalized.assign(p, true);
    if (spec.intercept_first_column) w.penalized[0] = false;
    if (spec.standardize) {
        for (int j = 0; j < p; ++j) {
            if (spec.intercept_first_column && j == 0) continue;
            // center only when an intercept can absorb the shift
            if (spec.intercept_first_column)
                w.center[j] = w.X.col(j).mean();
            const double var =
                (w.X.col(j).array() - w.center[j]).square().sum() / static_cast<double>(n);
            if (var > 0.0) w.scale[j] = std::sqrt(var);
            w.X.col(j) = (w.X.col(j).array() - w.center[j]) / w.scale[j];
        }
    }
    w.col_sq.resize(p);
    for (int j = 0; j < p; ++j) w.col_sq[j] = w.X.col(j).squaredNorm();
    std::vector<double> ay(data.y.data(), data.y.data() + n);
    const double q75 = sample_quantile(ay, 0.75), q25 = sample_quantile(ay, 0.25);
    w.y_scale = std::max(q75 - q25, 1e-12);
    return w;
}

// Proximal coordinate descent on the smoothed objective at fixed h and lambda.
int cd_solve(const WorkSpace& w, double tau, double alpha, double lambda, double h,
             Eigen::VectorXd& beta, Eigen::VectorXd& r, int max_passes) {
    const int p = static_cast<int>(w.X.cols());
    const double tol = 1e-13 * std::max(1.0, w.y_scale);
    int pass = 0;
    for (; pass < max_passes; ++pass) {
        double max_step = 0.0;
        for (int j = 0; j < p; ++j) {
            if (w.col_sq[j] <= 0.0) continue;
            double g = 0.0;
            for (Eigen::Index i = 0; i < r.size(); ++i)
                g -= w.X(i, j) * smoothed_deriv(tau, h, r[i]);
            const double L = w.col_sq[j] / (2.0 * h);
            const double z = L * beta[j] - g;
            double bn;
            if (w.penalized[j]) {
                bn = soft_threshold(z, lambda * alpha) / (L + lambda * (1.0 - alpha));
            } else {
                bn = z / L;
            }
            const double d = bn - beta[j];
            if (d != 0.0) {
                r -= d * w.X.col(j);
                beta[j] = bn;
                max_step = std::max(max_step, std::fabs(d) * std::sqrt(w.col_sq[j]));
            }
        }
        if (max_step < tol) break;
    }
    return pass + 1;
}

// Exact minimizer over d of the one-dimensional coordinate problem
//   g(d) = sum_i rho_tau(r_i - x_i d) + l1 |b + d| + (ridge/2) (b + d)^2,
// a convex piecewise quadratic with kinks at r_i/x_i and at -b.  Walks the
// sorted kinks accumulating the derivative.
double coordinate_min(const Eigen::VectorXd& x, const Eigen::VectorXd& r, double tau,
                      double b, double l1, double ridge) {
    struct Kink {
        double d;
        double jump;
    };
    std::vector<Kink> kinks;
    kinks.reserve(static_cast<std::size_t>(r.size()) + 1);
    double slope = 0.0; // derivative as d -> -inf, excluding the ridge part
    for (Eigen::Index i = 0; i < r.size(); ++i) {
        const double xi = x[i];
        if (xi == 0.0) continue;
        kinks.push_back({r[i] / xi, std::fabs(xi)});
        slope += (xi > 0.0) ? -xi * tau : -xi * (tau - 1.0);
    }
    if (l1 > 0.0) {
        kinks.push_back({-b, 2.0 * l1});
        slope -= l1;
    }
    if (kinks.empty()) return ridge > 0.0 ? -b : 0.0;
    std::sort(kinks.begin(), kinks.end(),
              [](const Kink& a, const Kink& c) { return a.d < c.d; });

    double prev = -std::numeric_limits<double>::infinity();
    for (const Kink& k : kinks) {
        // on (prev, k.d) the derivative is slope + ridge (b + d)
        if (ridge > 0.0) {
            const double zero = -slope / ridge - b;
            if (zero <= prev) return prev;
            if (zero < k.d) return zero;
        } else if (slope >= 0.0) {
            return prev;
        }
        slope += k.jump;
        prev = k.d;
    }
    if (ridge > 0.0) {
        const double zero = -slope / ridge - b;
        return std::max(zero, prev);
    }
    return prev; // derivative beyond the last kink is positive for any x != 0
}

// Cyclic passes of exact coordinate minimization on the unsmoothed objective;
// finishes the smoothed warm start so the per-coordinate subgradient
// conditions hold exactly and lasso zeros are exact.
int exact_cd(const WorkSpace& w, double tau, double alpha, double lambda,
             Eigen::VectorXd& beta, Eigen::VectorXd& r, int max_passes) {
    const int p = static_cast<int>(w.X.cols());
    const double tol = 1e-14 * std::max(1.0, w.y_scale);
    int pass = 0;
    for (; pass < max_passes; ++pass) {
        double max_move = 0.0;
        for (int j = 0; j < p; ++j) {
            const double l1 = w.penalized[j] ? lambda * alpha : 0.0;
            const double ridge = w.penalized[j] ? lambda * (1.0 - alpha) : 0.0;
            if (w.col_sq[j] <= 0.0) {
                if ((l1 > 0.0 || ridge > 0.0) && beta[j] != 0.0) beta[j] = 0.0;
                continue;
            }
            const double d = coordinate_min(w.X.col(j), r, tau, beta[j], l1, ridge);
            if (d != 0.0 && std::isfinite(d)) {
                r -= d * w.X.col(j);
                beta[j] += d;
                if (beta[j] != 0.0 && std::fabs(beta[j]) < 1e-300) beta[j] = 0.0;
                max_move = std::max(max_move, std::fabs(d) * std::sqrt(w.col_sq[j]));
            }
        }
        if (max_move < tol) break;
    }
    return pass + 1;
}

std::vector<double> smoothing_schedule(const Eigen::VectorXd& r0, double y_scale) {
    const double h_min = std::max(1e-5 * y_scale, 1e-12);
    std::vector<double> abs_r(r0.size());
    for (Eigen::Index i = 0; i < r0.size(); ++i) abs_r[i] = std::fabs(r0[i]);
    double h = std::max(sample_quantile(abs_r, 0.9), 8.0 * h_min);
    std::vector<double> hs;
    while (h > h_min) {
        hs.push_back(h);
        h *= 0.2;
    }
    hs.push_back(h_min);
    return hs;
}

double penalty_value(const PenaltySpec& spec, const WorkSpace& w, double alpha, double lambda,
                     const Eigen::VectorXd& beta_std) {
    double l1 = 0.0, l2 = 0.0;
    for (int j = 0; j < beta_std.size(); ++j) {
        if (!w.penalized[j]) continue;
        l1 += std::fabs(beta_std[j]);
        l2 += beta_std[j] * beta_std[j];
    }
    (void)spec;
    return lambda * (alpha * l1 + 0.5 * (1.0 - alpha) * l2);
}

Eigen::VectorXd to_original_scale(const WorkSpace& w, const PenaltySpec& spec,
                                  const Eigen::VectorXd& beta_std) {
    const int p = static_cast<int>(beta_std.size());
    Eigen::VectorXd beta = beta_std.array() / w.scale.array();
    if (spec.intercept_first_column && spec.standardize) {
        double shift = 0.0;
        for (int j = 1; j < p; ++j) shift += w.center[j] * beta[j];
        beta[0] = beta_std[0] - shift;
    }
    return beta;
}

} // namespace

void validate_penalty_spec(const PenaltySpec& spec) {
    if (!(spec.alpha >= 0.0 && spec.alpha <= 1.0))
        throw validation_error("penalty: alpha must be in [0,1]");
    double prev = std::numeric_limits<double>::infinity();
    for (double l : spec.lambda_grid) {
        if (!std::isfinite(l) || l < 0.0)
            throw validation_error("penalty: lambda values must be finite and >= 0");
        if (!(l < prev)) throw validation_error("penalty: lambda grid must be strictly decreasing");
        prev = l;
    }
}

double lambda_max(const Dataset& data, double tau, const PenaltySpec& spec) {
    validate_penalty_spec(spec);
    if (!(tau > 0.0 && tau < 1.0)) throw validation_error("lambda_max: tau must be in (0,1)");
    WorkSpace w = prepare(data, spec);
    Eigen::VectorXd r = w.y;
    if (spec.intercept_first_column) {
        std::vector<double> vals(w.y.data(), w.y.data() + w.y.size());
        r.array() -= sample_quantile(vals, tau);
    }
    const double h_min = std::max(1e-5 * w.y_scale, 1e-12);
    double m = 0.0;
    for (int j = 0; j < data.p(); ++j) {
        if (!w.penalized[j]) continue;
        double g_exact = 0.0, g_smooth = 0.0;
        for (Eigen::Index i = 0; i < r.size(); ++i) {
            g_exact += w.X(i, j) * (tau - (r[i] < 0.0 ? 1.0 : 0.0));
            g_smooth += w.X(i, j) * smoothed_deriv(tau, h_min, r[i]);
        }
        m = std::max({m, std::fabs(g_exact), std::fabs(g_smooth)});
    }
    const double a = std::max(spec.alpha, 0.01);
    return 1.01 * m / a;
}

std::vector<double> default_lambda_grid(const Dataset& data, double tau,
                                        const PenaltySpec& spec, int count) {
    if (count < 2) throw validation_error("default_lambda_grid: count must be >= 2");
    const double lmax = lambda_max(data, tau, spec);
    const double lmin = 1e-4 * lmax;
    std::vector<double> grid(count);
    for (int k = 0; k < count; ++k)
        grid[k] = lmax * std::pow(lmin / lmax, static_cast<double>(k) / (count - 1));
    return grid;
}

PenalizedFit fit_penalized(const Dataset& data, double tau, const PenaltySpec& spec,
                           double lambda) {
    validate_penalty_spec(spec);
    if (!(tau >= 0.01 && tau <= 0.99))
        throw validation_error("fit_penalized: tau must lie in [0.01, 0.99]");
    if (!std::isfinite(lambda) || lambda < 0.0)
        throw validation_error("fit_penalized: lambda must be finite and >= 0");
    WorkSpace w = prepare(data, spec);
    Eigen::VectorXd beta = Eigen::VectorXd::Zero(data.p());
    Eigen::VectorXd r = w.y;
    PenalizedFit fit;
    for (double h : smoothing_schedule(r, w.y_scale))
        fit.passes += cd_solve(w, tau, spec.alpha, lambda, h, beta, r, 500);
    fit.passes += exact_cd(w, tau, spec.alpha, lambda, beta, r, 500);
    fit.lambda = lambda;
    fit.objective = check_loss(tau, r) + penalty_value(spec, w, spec.alpha, lambda, beta);
    fit.beta = to_original_scale(w, spec, beta);
    return fit;
}

TuneResult tune(const Dataset& train, const Dataset& valid, double tau,
                const PenaltySpec& spec) {
    validate_penalty_spec(spec);
    if (train.p() != valid.p())
        throw validation_error("tune: train and validation designs have different widths");
    std::vector<double> grid =
        spec.lambda_grid.empty() ? default_lambda_grid(train, tau, spec) : spec.lambda_grid;
    if (grid.empty()) throw validation_error("tune: empty lambda grid");

    WorkSpace w = prepare(train, spec);
    Eigen::VectorXd beta = Eigen::VectorXd::Zero(train.p());
    Eigen::VectorXd r = w.y;
    const std::vector<double> hs = smoothing_schedule(r, w.y_scale);
    const double h_min = hs.back();

    TuneResult best;
    best.validation_loss = std::numeric_limits<double>::infinity();
    bool first = true;
    for (double lambda : grid) {
        if (first) {
            for (double h : hs) cd_solve(w, tau, spec.alpha, lambda, h, beta, r, 500);
            first = false;
        } else {
            cd_solve(w, tau, spec.alpha, lambda, h_min, beta, r, 200); // warm start
        }
        exact_cd(w, tau, spec.alpha, lambda, beta, r, 500);
        const Eigen::VectorXd beta_orig = to_original_scale(w, spec, beta);
        const Eigen::VectorXd rv = valid.y - valid.X * beta_orig;
        const double loss = check_loss(tau, rv) / static_cast<double>(valid.n());
        best.path_validation_loss.push_back(loss);
        if (loss <= best.validation_loss + 1e-12 * (1.0 + std::fabs(best.validation_loss))) {
            best.validation_loss = std::min(loss, best.validation_loss);
            best.lambda = lambda;
            best.beta = beta_orig;
        }
    }
    return best;
}

double penalized_kkt_residual(const Dataset& data, double tau, const PenaltySpec& spec,
                              double lambda, const Eigen::VectorXd& beta,
                              double active_tol) {
    validate_penalty_spec(spec);
    WorkSpace w = prepare(data, spec);
    // move the reported beta back to the standardized coordinates the
    // penalty is defined on
    Eigen::VectorXd beta_std = beta.array() * w.scale.array();
    if (spec.intercept_first_column && spec.standardize) {
        double shift = 0.0;
        for (int j = 1; j < data.p(); ++j) shift += w.center[j] * beta[j];
        beta_std[0] = beta[0] + shift;
    }
    const Eigen::VectorXd r = w.y - w.X * beta_std;
    double worst = 0.0;
    for (int j = 0; j < data.p(); ++j) {
        double lo = 0.0, hi = 0.0, norm1 = 0.0;
        for (Eigen::Index i = 0; i < r.size(); ++i) {
            const double xij = w.X(i, j);
            norm1 += std::fabs(xij);
            if (std::fabs(r[i]) <= active_tol) {
                const double a = -xij * tau, b = -xij * (tau - 1.0);
                lo += std::min(a, b);
                hi += std::max(a, b);
            } else {
                const double g = -xij * (tau - (r[i] < 0.0 ? 1.0 : 0.0));
                lo += g;
                hi += g;
            }
        }
        if (w.penalized[j]) {
            const double ridge = lambda * (1.0 - spec.alpha) * beta_std[j];
            lo += ridge;
            hi += ridge;
            if (beta_std[j] != 0.0) {
                const double l1 = lambda * spec.alpha * (beta_std[j] > 0.0 ? 1.0 : -1.0);
                lo += l1;
                hi += l1;
            } else {
                lo -= lambda * spec.alpha;
                hi += lambda * spec.alpha;
            }
        }
        double dist = 0.0;
        if (0.0 < lo) dist = lo;
        else if (0.0 > hi) dist = -hi;
        worst = std::max(worst, dist / std::max(1.0, norm1));
    }
    return worst;
}

} // namespace qshrink
