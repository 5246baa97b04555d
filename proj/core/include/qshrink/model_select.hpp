#ifndef QSHRINK_MODEL_SELECT_HPP
#define QSHRINK_MODEL_SELECT_HPP

#include <vector>

#include "qshrink/dataset.hpp"

namespace qshrink {

struct SelectOptions {
    bool quantile_bic = false; // score with check loss at `tau` instead of RSS
    double tau = 0.5;
    bool keep_intercept = true; // an "(Intercept)" column is always retained
};

// Forward-stepwise selection scored by BIC.  Least-squares scoring uses
// n log(RSS/n) + k log(n); the check-loss variant uses
// 2 n log(mean check loss) + k log(n).  Returns the selected column indices
// (intercept first when present); at least one column is always selected.
std::vector<int> select_submodel_bic(const Dataset& data, const SelectOptions& opts = {});

} // namespace qshrink

#endif
