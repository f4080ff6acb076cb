#pragma once

#include <Eigen/Dense>

namespace stms {

template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

using Index = Eigen::Index;

template <typename Scalar>
bool all_finite(const Matrix<Scalar>& m) {
    return m.array().isFinite().all();
}

}  // namespace stms
