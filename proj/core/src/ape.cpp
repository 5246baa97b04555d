#include "qshrink/ape.hpp"

#include <array>
#include <cmath>
#include <sstream>

#include "qshrink/errors.hpp"
#include "qshrink/parallel.hpp"
#include "qshrink/penalized.hpp"
#include "qshrink/qr.hpp"
#include "qshrink/rng.hpp"
#include "qshrink/shrinkage.hpp"

namespace qshrink {

namespace {

Dataset take_rows(const Dataset& data, const std::vector<int>& idx, int from, int count) {
    Eigen::MatrixXd X(count, data.p());
    Eigen::VectorXd y(count);
    for (int i = 0; i < count; ++i) {
        X.row(i) = data.X.row(idx[from + i]);
        y[i] = data.y[idx[from + i]];
    }
    return make_dataset(std::move(y), std::move(X), data.p1, data.names);
}

double mad(const Dataset& d, const Eigen::VectorXd& beta) {
    return (d.y - d.X * beta).cwiseAbs().mean();
}

} // namespace

ExperimentReport ape_protocol(const Dataset& data, const std::vector<double>& taus,
                              int splits, std::uint64_t seed, const ApeOptions& opts) {
    if (splits < 1) throw validation_error("ape: splits must be >= 1");
    if (taus.empty()) throw validation_error("ape: need at least one tau");
    if (!(opts.train_fraction > 0.0 && opts.train_fraction <= 1.0))
        throw validation_error("ape: train fraction must be in (0, 1]");
    if (data.p2() < 1)
        throw validation_error("ape: dataset must carry a partition with a nonempty X2 block");

    const int n = data.n();
    const bool self_test = opts.train_fraction >= 1.0;
    const int n_train = self_test ? n
                                  : std::max(data.p() + 1,
                                             static_cast<int>(std::lround(opts.train_fraction * n)));
    if (!self_test && n - n_train < 1)
        throw validation_error("ape: split leaves an empty test set");

    const int n_tau = static_cast<int>(taus.size());
    const int quant_rows = 4;                                   // FM SM PT PS
    const int pen_rows = opts.include_penalized ? 3 : 0;        // Ridge Lasso ENET
    const int rows_per_split = n_tau * (quant_rows + pen_rows) + 1; // + LSE

    std::vector<std::vector<double>> vals(splits, std::vector<double>(rows_per_split));
    parallel_for(splits, [&](std::int64_t lo, std::int64_t hi) {
        for (std::int64_t s = lo; s < hi; ++s) {
            Rng rng = Rng::stream_for(seed, static_cast<std::uint64_t>(s));
            std::vector<int> idx;
            rng.shuffle_indices(idx, static_cast<std::size_t>(n));
            const Dataset train = take_rows(data, idx, 0, n_train);
            const Dataset test =
                self_test ? train : take_rows(data, idx, n_train, n - n_train);

            int row = 0;
            for (double tau : taus) {
                const QuantileFit full = fit_full(train, tau);
                const QuantileFit sub = fit_sub(train, tau);
                const GammaBlocks blocks = gamma_blocks(full);
                const ShrinkageResult sh = shrinkage_estimate(full, sub, blocks, opts.alpha);
                vals[s][row++] = mad(test, sh.full_vector(Estimator::FM));
                vals[s][row++] = mad(test, sh.full_vector(Estimator::SM));
                vals[s][row++] = mad(test, sh.full_vector(Estimator::PT));
                vals[s][row++] = mad(test, sh.full_vector(Estimator::PS));
                if (opts.include_penalized) {
                    // inner half split of the training part selects lambda
                    const int n_inner = std::max(data.p() + 1, n_train / 2);
                    const Dataset tr_fit = take_rows(data, idx, 0, n_inner);
                    const Dataset tr_val =
                        n_train - n_inner >= 1 ? take_rows(data, idx, n_inner, n_train - n_inner)
                                               : tr_fit;
                    for (double a : {0.0, 1.0, opts.enet_alpha}) {
                        PenaltySpec spec;
                        spec.alpha = a;
                        spec.standardize = true;
                        spec.intercept_first_column = opts.intercept_first_column;
                        const TuneResult tuned = tune(tr_fit, tr_val, tau, spec);
                        const PenalizedFit refit = fit_penalized(train, tau, spec, tuned.lambda);
                        vals[s][row++] = mad(test, refit.beta);
                    }
                }
            }
            const Eigen::VectorXd lse =
                (train.X.transpose() * train.X).ldlt().solve(train.X.transpose() * train.y);
            vals[s][row++] = mad(test, lse);
        }
    });

    ExperimentReport report;
    report.meta.experiment = "ape";
    report.meta.metric = "ape";
    report.meta.seed = seed;
    report.meta.replications = splits;
    {
        std::ostringstream os;
        os << "n=" << n << " p=" << data.p() << " p1=" << data.p1
           << " train_fraction=" << opts.train_fraction << " splits=" << splits
           << " alpha=" << opts.alpha << " enet_alpha=" << opts.enet_alpha
           << " penalized=" << (opts.include_penalized ? 1 : 0) << " taus=";
        for (double t : taus) os << t << ";";
        report.meta.config_echo = os.str();
    }
    report.meta.provenance = provenance_string(report.meta.config_echo, seed);

    int row = 0;
    auto emit = [&](double tau, const std::string& est) {
        double m = 0.0, sd = 0.0;
        for (int s = 0; s < splits; ++s) m += vals[s][row];
        m /= splits;
        for (int s = 0; s < splits; ++s) {
            const double d = vals[s][row] - m;
            sd += d * d;
        }
        const double se = splits > 1 ? std::sqrt(sd / (splits - 1.0) / splits) : 0.0;
        report.rows.push_back(ReportRow{tau, est, "ape", 0.0, m, se});
        ++row;
    };
    for (double tau : taus) {
        for (const char* est : {"FM", "SM", "PT", "PS"}) emit(tau, est);
        if (opts.include_penalized)
            for (const char* est : {"Ridge", "Lasso", "ENET"}) emit(tau, est);
    }
    emit(std::nan(""), "LSE");
    return report;
}

} // namespace qshrink
