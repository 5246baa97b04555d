#include "qshrink/dataset.hpp"

#include <algorithm>
#include <set>

#include "qshrink/errors.hpp"

namespace qshrink {

Dataset make_dataset(Eigen::VectorXd y, Eigen::MatrixXd X, int p1,
                     std::vector<std::string> names) {
    const int n = static_cast<int>(X.rows());
    const int p = static_cast<int>(X.cols());
    if (y.size() != n) throw validation_error("dataset: y length does not match X rows");
    if (p < 1) throw validation_error("dataset: need at least one column");
    if (n < p) throw validation_error("dataset: need n >= p");
    if (p1 < 1 || p1 > p) throw validation_error("dataset: p1 must be in [1, p]");
    if (!y.allFinite() || !X.allFinite())
        throw validation_error("dataset: nonfinite entries in y or X");
    if (!names.empty() && static_cast<int>(names.size()) != p)
        throw validation_error("dataset: names must be empty or one per column");
    return Dataset{std::move(y), std::move(X), p1, std::move(names)};
}

Dataset partition_by_columns(const Dataset& data, const std::vector<int>& keep) {
    const int p = data.p();
    if (keep.empty()) throw validation_error("partition: keep set must be nonempty");
    std::set<int> seen;
    for (int j : keep) {
        if (j < 0 || j >= p) throw validation_error("partition: column index out of range");
        if (!seen.insert(j).second) throw validation_error("partition: duplicate column index");
    }
    std::vector<int> order(keep);
    for (int j = 0; j < p; ++j)
        if (!seen.count(j)) order.push_back(j);

    Eigen::MatrixXd X(data.n(), p);
    std::vector<std::string> names;
    if (!data.names.empty()) names.resize(p);
    for (int j = 0; j < p; ++j) {
        X.col(j) = data.X.col(order[j]);
        if (!data.names.empty()) names[j] = data.names[order[j]];
    }
    return make_dataset(data.y, std::move(X), static_cast<int>(keep.size()), std::move(names));
}

} // namespace qshrink
