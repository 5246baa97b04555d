#include "qshrink/qr.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "qshrink/errors.hpp"
#include "qshrink/specfun.hpp"

namespace qshrink {

namespace {

double quantile_of(std::vector<double> v, double q) {
    if (v.empty()) return 0.0;
    const double pos = q * (static_cast<double>(v.size()) - 1.0);
    const std::size_t lo = static_cast<std::size_t>(pos);
    const std::size_t hi = std::min(lo + 1, v.size() - 1);
    std::nth_element(v.begin(), v.begin() + lo, v.end());
    const double a = v[lo];
    std::nth_element(v.begin(), v.begin() + hi, v.end());
    const double b = v[hi];
    return a + (pos - lo) * (b - a);
}

double iqr(const Eigen::VectorXd& r) {
    std::vector<double> v(r.data(), r.data() + r.size());
    return quantile_of(v, 0.75) - quantile_of(v, 0.25);
}

void check_tau(double tau) {
    if (!(tau >= 0.01 && tau <= 0.99))
        throw validation_error("tau must lie in [0.01, 0.99]");
}

// Condition screen on the design; also rejects rank deficiency.
void check_design(const Eigen::MatrixXd& X) {
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(X);
    const int p = static_cast<int>(X.cols());
    if (qr.rank() < p)
        throw singular_design_error("design matrix is rank deficient");
    const auto& R = qr.matrixR();
    const double r0 = std::fabs(R(0, 0));
    const double rp = std::fabs(R(p - 1, p - 1));
    if (rp <= 0.0 || r0 / rp > 1e10)
        throw singular_design_error("design matrix condition number exceeds 1e10");
}

struct SolveResult {
    Eigen::VectorXd beta;
    Eigen::VectorXd residuals;
    double objective = 0.0;
    int iterations = 0;
    std::vector<double> trace;
    double scale = 0.0;
};

// Iteratively reweighted least squares on the majorized check loss.  The
// absolute-value part is majorized by r^2/(2 max(|r0|, eps)) and eps is driven
// down a fixed schedule; each WLS step that does not increase the exact check
// loss is accepted.  A final interpolation polish tries the basis through the
// p smallest residuals, which is where the exact optimum generically sits.
SolveResult solve_quantile_dense(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                                 double tau, const FitOptions& opts) {
    const int n = static_cast<int>(X.rows());
    const int p = static_cast<int>(X.cols());
    check_design(X);

    SolveResult out;
    out.beta = X.colPivHouseholderQr().solve(y);
    out.residuals = y - X * out.beta;
    out.objective = check_loss(tau, out.residuals);
    out.trace.push_back(out.objective);

    double scale = iqr(out.residuals);
    if (!(scale > 0.0)) scale = out.residuals.cwiseAbs().maxCoeff();
    if (!(scale > 0.0)) {
        out.scale = 1.0;
        return out; // exact interpolation already
    }
    out.scale = scale;

    Eigen::VectorXd w(n), yt(n);
    Eigen::MatrixXd Xw(n, p);
    double eps = 1e-2 * scale;
    const double eps_min = opts.smoothing_min * scale;
    bool budget_left = true;
    while (budget_left) {
        for (int inner = 0; inner < 100 && budget_left; ++inner) {
            for (int i = 0; i < n; ++i) {
                const double a = std::max(std::fabs(out.residuals[i]), eps);
                w[i] = std::sqrt(1.0 / (2.0 * a));
                yt[i] = y[i] + (2.0 * tau - 1.0) * a;
            }
            Xw = w.asDiagonal() * X;
            const Eigen::VectorXd beta_new =
                Xw.colPivHouseholderQr().solve(w.asDiagonal() * yt);
            const Eigen::VectorXd r_new = y - X * beta_new;
            const double obj_new = check_loss(tau, r_new);
            ++out.iterations;
            if (out.iterations >= opts.max_iter) budget_left = false;
            if (obj_new <= out.objective + 1e-12 * (1.0 + out.objective)) {
                const double gain = out.objective - obj_new;
                out.beta = beta_new;
                out.residuals = r_new;
                out.objective = std::min(out.objective, obj_new);
                out.trace.push_back(out.objective);
                if (gain <= 1e-12 * (1.0 + out.objective)) break;
            } else {
                break; // step rejected: tighten the smoothing instead
            }
        }
        if (eps <= eps_min) break;
        eps = std::max(eps * 0.1, eps_min);
    }

    // Interpolation polish.
    if (n >= p) {
        std::vector<int> idx(n);
        std::iota(idx.begin(), idx.end(), 0);
        std::partial_sort(idx.begin(), idx.begin() + p, idx.end(), [&](int a, int b) {
            return std::fabs(out.residuals[a]) < std::fabs(out.residuals[b]);
        });
        Eigen::MatrixXd Xb(p, p);
        Eigen::VectorXd yb(p);
        for (int k = 0; k < p; ++k) {
            Xb.row(k) = X.row(idx[k]);
            yb[k] = y[idx[k]];
        }
        Eigen::FullPivLU<Eigen::MatrixXd> lu(Xb);
        if (lu.isInvertible()) {
            const Eigen::VectorXd beta_b = lu.solve(yb);
            const Eigen::VectorXd r_b = y - X * beta_b;
            const double obj_b = check_loss(tau, r_b);
            if (obj_b < out.objective) {
                out.beta = beta_b;
                out.residuals = r_b;
                out.objective = obj_b;
                out.trace.push_back(obj_b);
                ++out.iterations;
            }
        }
    }
    return out;
}

// Columns that are identically zero are inert: they are excluded from the
// solve and reported with a zero coefficient.
SolveResult solve_quantile(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, double tau,
                           const FitOptions& opts) {
    const int p = static_cast<int>(X.cols());
    std::vector<int> live;
    for (int j = 0; j < p; ++j)
        if (X.col(j).cwiseAbs().maxCoeff() > 0.0) live.push_back(j);
    if (static_cast<int>(live.size()) == p) return solve_quantile_dense(X, y, tau, opts);
    if (live.empty()) throw singular_design_error("design matrix is identically zero");
    Eigen::MatrixXd Xr(X.rows(), static_cast<int>(live.size()));
    for (std::size_t k = 0; k < live.size(); ++k) Xr.col(k) = X.col(live[k]);
    SolveResult sol = solve_quantile_dense(Xr, y, tau, opts);
    Eigen::VectorXd beta = Eigen::VectorXd::Zero(p);
    for (std::size_t k = 0; k < live.size(); ++k) beta[live[k]] = sol.beta[k];
    sol.beta = std::move(beta);
    return sol;
}

void repair_if_needed(Eigen::MatrixXd& M, bool* flag) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(M);
    const double min_eig = es.eigenvalues().minCoeff();
    if (min_eig > 0.0) return;
    if (flag) *flag = true;
    double ridge = 1e-8 * M.trace() / static_cast<double>(M.rows());
    if (!(ridge > 0.0)) ridge = 1e-8;
    M += (ridge - std::min(min_eig, 0.0)) *
         Eigen::MatrixXd::Identity(M.rows(), M.cols());
}

void attach_covariance(QuantileFit& fit, const Eigen::MatrixXd& X, const FitOptions& opts) {
    const int n = static_cast<int>(X.rows());
    const int p = static_cast<int>(X.cols());
    fit.D0 = (X.transpose() * X) / static_cast<double>(n);
    repair_if_needed(fit.D0, &fit.d0_degenerate);
    fit.D1 = estimate_sparsity(fit.residuals, X, fit.tau, opts.bandwidth, &fit.bandwidth,
                               &fit.d1_degenerate, fit.active_tol);
    Eigen::LDLT<Eigen::MatrixXd> d0(fit.D0);
    Eigen::LDLT<Eigen::MatrixXd> d1(fit.D1);
    if (d0.info() != Eigen::Success || d1.info() != Eigen::Success)
        throw singular_block_error("D0 or D1 factorization failed");
    const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(p, p);
    const Eigen::MatrixXd d0_inv = d0.solve(I);
    const Eigen::MatrixXd d1_inv = d1.solve(I);
    fit.Gamma = fit.D1 * d0_inv * fit.D1;
    fit.Gamma = 0.5 * (fit.Gamma + fit.Gamma.transpose()).eval();
    fit.cov = fit.tau * (1.0 - fit.tau) * d1_inv * fit.D0 * d1_inv / static_cast<double>(n);
    fit.cov = 0.5 * (fit.cov + fit.cov.transpose()).eval();
}

QuantileFit run_fit(const Dataset& data, double tau, const FitOptions& opts, bool submodel) {
    check_tau(tau);
    const Eigen::MatrixXd X = submodel ? data.X1() : data.X;
    SolveResult sol = solve_quantile(X, data.y, tau, opts);

    QuantileFit fit;
    fit.tau = tau;
    fit.residuals = sol.residuals;
    fit.objective = sol.objective;
    fit.iterations = sol.iterations;
    fit.objective_trace = std::move(sol.trace);
    fit.active_tol = 1e-6 * std::max(sol.scale, 1e-300);
    fit.p1 = data.p1;
    fit.submodel = submodel;
    if (submodel) {
        fit.beta = Eigen::VectorXd::Zero(data.p());
        fit.beta.head(data.p1) = sol.beta;
    } else {
        fit.beta = sol.beta;
    }

    const KktReport kkt =
        kkt_check(X, data.y, tau, sol.beta, opts.tol_kkt, fit.active_tol);
    if (!kkt.ok) {
        throw convergence_error(
            "quantile fit failed the subgradient certificate (max residual " +
                std::to_string(kkt.max_residual) + ")",
            std::vector<double>(fit.beta.data(), fit.beta.data() + fit.beta.size()),
            fit.objective);
    }
    if (opts.compute_covariance) attach_covariance(fit, X, opts);
    return fit;
}

} // namespace

double check_loss(double tau, const Eigen::VectorXd& residuals) {
    double s = 0.0;
    for (Eigen::Index i = 0; i < residuals.size(); ++i) {
        const double r = residuals[i];
        s += r * (tau - (r < 0.0 ? 1.0 : 0.0));
    }
    return s;
}

QuantileFit fit_full(const Dataset& data, double tau, const FitOptions& opts) {
    return run_fit(data, tau, opts, false);
}

QuantileFit fit_sub(const Dataset& data, double tau, const FitOptions& opts) {
    if (data.p2() < 1)
        throw validation_error("fit_sub: dataset has no X2 block to restrict");
    return run_fit(data, tau, opts, true);
}

double hall_sheather_bandwidth(double tau, int n, const Eigen::VectorXd& residuals) {
    check_tau(tau);
    if (n < 2) throw validation_error("hall_sheather_bandwidth: need n >= 2");
    const double q = normal_quantile(tau);
    const double num = 1.5 * normal_pdf(q) * normal_pdf(q);
    const double rate = std::pow(static_cast<double>(n), -1.0 / 3.0) *
                        std::pow(normal_quantile(0.975), 2.0 / 3.0) *
                        std::cbrt(num / (2.0 * q * q + 1.0));
    double scale = iqr(residuals);
    if (!(scale > 0.0)) {
        const double sd = std::sqrt(residuals.squaredNorm() / std::max(1.0, residuals.size() - 1.0));
        scale = sd;
    }
    if (!(scale > 0.0)) scale = 1.0;
    return rate * scale;
}

Eigen::MatrixXd estimate_sparsity(const Eigen::VectorXd& residuals, const Eigen::MatrixXd& X,
                                  double tau, const BandwidthSpec& bw, double* bandwidth_out,
                                  bool* degenerate_out, double exclude_tol) {
    const int n = static_cast<int>(X.rows());
    const int p = static_cast<int>(X.cols());
    if (residuals.size() != n)
        throw validation_error("estimate_sparsity: residual length mismatch");
    double h;
    if (bw.rule == BandwidthSpec::Rule::fixed) {
        h = bw.value;
    } else {
        h = hall_sheather_bandwidth(tau, n, residuals);
        // Widen the window until it holds enough informative residuals for a
        // full-rank estimate; at small n the rule-of-thumb window can cover
        // fewer than p points.
        std::vector<double> eligible;
        eligible.reserve(n);
        for (int i = 0; i < n; ++i) {
            const double a = std::fabs(residuals[i]);
            if (a > exclude_tol) eligible.push_back(a);
        }
        const int min_count = std::min<int>(
            static_cast<int>(eligible.size()),
            std::max(p + 2, static_cast<int>(std::ceil(1.5 * std::sqrt(double(n))))));
        if (min_count > 0 && static_cast<int>(eligible.size()) >= min_count) {
            std::nth_element(eligible.begin(), eligible.begin() + (min_count - 1),
                             eligible.end());
            h = std::max(h, eligible[min_count - 1] * (1.0 + 1e-12));
        }
    }
    if (!(h > 0.0)) throw validation_error("estimate_sparsity: bandwidth must be > 0");
    if (bandwidth_out) *bandwidth_out = h;

    Eigen::MatrixXd D1 = Eigen::MatrixXd::Zero(p, p);
    const double kernel = 1.0 / (2.0 * h);
    for (int i = 0; i < n; ++i) {
        const double a = std::fabs(residuals[i]);
        if (a <= h && a > exclude_tol)
            D1.selfadjointView<Eigen::Lower>().rankUpdate(X.row(i).transpose(), kernel);
    }
    D1 = D1.selfadjointView<Eigen::Lower>();
    D1 /= static_cast<double>(n);

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(D1);
    const double min_eig = es.eigenvalues().minCoeff();
    bool degenerate = false;
    if (!(min_eig > 0.0)) {
        degenerate = true;
        double ridge = 1e-8 * D1.trace() / static_cast<double>(p);
        if (!(ridge > 0.0)) ridge = 1e-8;
        D1 += (ridge - std::min(min_eig, 0.0)) * Eigen::MatrixXd::Identity(p, p);
    }
    if (degenerate_out) *degenerate_out = degenerate;
    return D1;
}

GammaBlocks gamma_blocks(const Eigen::MatrixXd& Gamma, int p1) {
    const int p = static_cast<int>(Gamma.rows());
    if (Gamma.cols() != p) throw validation_error("gamma_blocks: Gamma must be square");
    if (p1 < 1 || p1 >= p)
        throw validation_error("gamma_blocks: need 1 <= p1 < p (nonempty X2 block)");
    const int p2 = p - p1;
    GammaBlocks b;
    b.p1 = p1;
    b.p2 = p2;
    Eigen::MatrixXd G = 0.5 * (Gamma + Gamma.transpose());
    b.G11 = G.topLeftCorner(p1, p1);
    b.G12 = G.topRightCorner(p1, p2);
    b.G21 = G.bottomLeftCorner(p2, p1);
    b.G22 = G.bottomRightCorner(p2, p2);

    Eigen::LDLT<Eigen::MatrixXd> g11(b.G11);
    Eigen::LDLT<Eigen::MatrixXd> g22(b.G22);
    if (g11.info() != Eigen::Success || !(g11.vectorD().minCoeff() > 0.0))
        throw singular_block_error("Gamma_11 is not positive definite");
    if (g22.info() != Eigen::Success || !(g22.vectorD().minCoeff() > 0.0))
        throw singular_block_error("Gamma_22 is not positive definite");
    b.G22_1 = b.G22 - b.G21 * g11.solve(b.G12);
    b.G11_2 = b.G11 - b.G12 * g22.solve(b.G21);
    b.G22_1 = 0.5 * (b.G22_1 + b.G22_1.transpose()).eval();
    b.G11_2 = 0.5 * (b.G11_2 + b.G11_2.transpose()).eval();

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> e221(b.G22_1);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> e112(b.G11_2);
    if (!(e221.eigenvalues().minCoeff() > 0.0))
        throw singular_block_error("Gamma_22.1 is not positive definite");
    if (!(e112.eigenvalues().minCoeff() > 0.0))
        throw singular_block_error("Gamma_11.2 is not positive definite");
    return b;
}

GammaBlocks gamma_blocks(const QuantileFit& full_fit) {
    if (full_fit.submodel)
        throw validation_error("gamma_blocks: requires a full-model fit");
    if (full_fit.Gamma.size() == 0)
        throw validation_error("gamma_blocks: fit carries no covariance objects");
    return gamma_blocks(full_fit.Gamma, full_fit.p1);
}

Eigen::VectorXd submodel_linear_approx(const QuantileFit& full_fit, const GammaBlocks& blocks) {
    const Eigen::VectorXd beta1 = full_fit.beta.head(blocks.p1);
    const Eigen::VectorXd beta2 = full_fit.beta.tail(blocks.p2);
    return beta1 + blocks.G11.ldlt().solve(blocks.G12 * beta2);
}

KktReport kkt_check(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, double tau,
                    const Eigen::VectorXd& beta, double tol_kkt, double active_tol) {
    const int n = static_cast<int>(X.rows());
    const int p = static_cast<int>(X.cols());
    const Eigen::VectorXd r = y - X * beta;
    KktReport rep;
    for (int j = 0; j < p; ++j) {
        double fixed = 0.0, lo = 0.0, hi = 0.0, norm1 = 0.0;
        for (int i = 0; i < n; ++i) {
            const double xij = X(i, j);
            norm1 += std::fabs(xij);
            if (std::fabs(r[i]) <= active_tol) {
                const double a = xij * (tau - 1.0);
                const double b = xij * tau;
                lo += std::min(a, b);
                hi += std::max(a, b);
            } else {
                fixed += xij * (tau - (r[i] < 0.0 ? 1.0 : 0.0));
            }
        }
        // need an admissible active-set subgradient with fixed + active = 0
        const double target = -fixed;
        double dist = 0.0;
        if (target < lo) dist = lo - target;
        else if (target > hi) dist = target - hi;
        rep.max_residual = std::max(rep.max_residual, dist / std::max(1.0, norm1));
    }
    for (int i = 0; i < n; ++i)
        if (std::fabs(r[i]) <= active_tol) ++rep.active_count;
    rep.ok = rep.max_residual <= tol_kkt;
    return rep;
}

} // namespace qshrink
