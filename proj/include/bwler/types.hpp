#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>

namespace bwler {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;
using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using SparseRowMat = Eigen::SparseMatrix<double, Eigen::RowMajor>;

/// Thrown when training or a solve produces non-finite values.
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace bwler
