#pragma once

#include <Eigen/Dense>

namespace gtfs2vec {

// Row-major so each region's vector is contiguous.
using matrix =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using vector = Eigen::VectorXd;

}  // namespace gtfs2vec
