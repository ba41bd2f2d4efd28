#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>

namespace sem {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using RowVector = Eigen::RowVectorXd;
using SpMat = Eigen::SparseMatrix<double, Eigen::RowMajor>;
using Vec2 = Eigen::Vector2d;

} // namespace sem
