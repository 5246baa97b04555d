#ifndef QSHRINK_APE_HPP
#define QSHRINK_APE_HPP

#include <cstdint>
#include <vector>

#include "qshrink/dataset.hpp"
#include "qshrink/report.hpp"

namespace qshrink {

struct ApeOptions {
    double train_fraction = 0.5; // 1.0 scores on the training rows themselves
    double alpha = 0.05;         // pretest size
    double enet_alpha = 0.5;
    bool include_penalized = true;
    bool intercept_first_column = true; // column 0 is an unpenalized intercept
};

// Repeated random-split prediction error.  For each split: quantile FM/SM and
// the PT/PS combinations are fit on the training part at every tau, penalized
// baselines pick lambda on an inner half-split of the training part and are
// refit on all of it, least squares runs once; each predictor is scored by
// mean absolute deviation on the held-out part.  Rows report the average over
// splits and its standard error; the least-squares row carries a NaN tau.
// Deterministic given (data, taus, splits, seed).
ExperimentReport ape_protocol(const Dataset& data, const std::vector<double>& taus,
                              int splits, std::uint64_t seed, const ApeOptions& opts = {});

} // namespace qshrink

#endif
