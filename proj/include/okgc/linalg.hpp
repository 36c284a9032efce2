#pragma once

#include <Eigen/Dense>

namespace okgc {

// Row-major so a row is a contiguous mention/sample vector.
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;

}  // namespace okgc
