#include "qshrink/model_select.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "qshrink/errors.hpp"
#include "qshrink/qr.hpp"

namespace qshrink {

namespace {

double ls_rss(const Eigen::MatrixXd& X, const Eigen::VectorXd& y) {
    const Eigen::VectorXd beta = X.colPivHouseholderQr().solve(y);
    return (y - X * beta).squaredNorm();
}

double quantile_loss(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, double tau) {
    Dataset d = make_dataset(y, X, static_cast<int>(X.cols()));
    FitOptions opts;
    opts.compute_covariance = false;
    return fit_full(d, tau, opts).objective;
}

Eigen::MatrixXd select_cols(const Eigen::MatrixXd& X, const std::vector<int>& cols) {
    Eigen::MatrixXd out(X.rows(), static_cast<Eigen::Index>(cols.size()));
    for (std::size_t k = 0; k < cols.size(); ++k) out.col(k) = X.col(cols[k]);
    return out;
}

} // namespace

std::vector<int> select_submodel_bic(const Dataset& data, const SelectOptions& opts) {
    const int n = data.n();
    const int p = data.p();
    if (n <= p) throw validation_error("select_submodel_bic: needs n > p");

    int intercept = -1;
    if (opts.keep_intercept && !data.names.empty()) {
        for (int j = 0; j < p; ++j)
            if (data.names[j] == "(Intercept)") intercept = j;
    }

    auto score = [&](const std::vector<int>& cols) {
        const Eigen::MatrixXd Xs = select_cols(data.X, cols);
        const double k = static_cast<double>(cols.size());
        if (opts.quantile_bic) {
            const double loss = quantile_loss(Xs, data.y, opts.tau) / n;
            return 2.0 * n * std::log(std::max(loss, 1e-300)) + k * std::log(n);
        }
        const double rss = ls_rss(Xs, data.y) / n;
        return n * std::log(std::max(rss, 1e-300)) + k * std::log(n);
    };

    std::vector<int> selected;
    std::vector<bool> used(p, false);
    if (intercept >= 0) {
        selected.push_back(intercept);
        used[intercept] = true;
    }

    // Greedy forward path, then the BIC-minimizing prefix.
    std::vector<std::vector<int>> path;
    std::vector<double> bic;
    if (!selected.empty()) {
        path.push_back(selected);
        bic.push_back(score(selected));
    }
    std::vector<int> current = selected;
    while (static_cast<int>(current.size()) < p) {
        int best_j = -1;
        double best = std::numeric_limits<double>::infinity();
        for (int j = 0; j < p; ++j) {
            if (used[j]) continue;
            std::vector<int> trial = current;
            trial.push_back(j);
            const Eigen::MatrixXd Xs = select_cols(data.X, trial);
            double val;
            if (opts.quantile_bic) {
                val = quantile_loss(Xs, data.y, opts.tau);
            } else {
                val = ls_rss(Xs, data.y);
            }
            if (val < best) {
                best = val;
                best_j = j;
            }
        }
        if (best_j < 0) break;
        current.push_back(best_j);
        used[best_j] = true;
        path.push_back(current);
        bic.push_back(score(current));
    }

    std::size_t best_k = 0;
    for (std::size_t k = 1; k < bic.size(); ++k)
        if (bic[k] < bic[best_k]) best_k = k;
    std::vector<int> result = path[best_k];
    // the partition layer needs a nonempty X1 block
    if (result.empty()) result = path.size() > 1 ? path[1] : std::vector<int>{0};
    return result;
}

} // namespace qshrink
