#pragma once

#include <Eigen/Dense>
#include <cstdint>

namespace gel {

using Scalar = double;
using Index = Eigen::Index;
using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

}  // namespace gel
