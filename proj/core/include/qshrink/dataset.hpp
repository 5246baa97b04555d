#ifndef QSHRINK_DATASET_HPP
#define QSHRINK_DATASET_HPP

#include <Eigen/Dense>
#include <string>
#include <vector>

namespace qshrink {

// Regression data with a two-block column partition X = [X1 | X2]:
// the first p1 columns form the retained block, the remaining p2 = p - p1
// columns are the block tested against zero.
struct Dataset {
    Eigen::VectorXd y;
    Eigen::MatrixXd X;
    int p1 = 0;
    std::vector<std::string> names; // empty or size p

    int n() const { return static_cast<int>(X.rows()); }
    int p() const { return static_cast<int>(X.cols()); }
    int p2() const { return p() - p1; }

    Eigen::MatrixXd X1() const { return X.leftCols(p1); }
    Eigen::MatrixXd X2() const { return X.rightCols(p2()); }
};

// Validates: n >= p >= 1, 1 <= p1 <= p, all entries finite, names empty or
// matching p.  Throws validation_error otherwise.
Dataset make_dataset(Eigen::VectorXd y, Eigen::MatrixXd X, int p1,
                     std::vector<std::string> names = {});

// Reorders columns so that `keep` (in the given order) becomes the X1 block
// and everything else follows as X2.  Indices must be unique and in range.
Dataset partition_by_columns(const Dataset& data, const std::vector<int>& keep);

} // namespace qshrink

#endif
