#pragma once

#include <Eigen/Dense>

namespace ttf {

// Time runs down the rows, series across the columns.
using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

} // namespace ttf
