#pragma once

#include <cmath>

#include "stms/errors.hpp"
#include "stms/matrix.hpp"

namespace stms::internal {

// Mean over all (frame, joint) pairs of the Euclidean distance between two
// stacked pose matrices (rows = frames, columns = joint-major coordinates).
// `squared` swaps the norm for its square. Shared by the value-level metric
// and the autodiff node so both produce bit-identical sums.
template <typename Scalar>
Scalar mean_pose_distance(const Matrix<Scalar>& a, const Matrix<Scalar>& b, Index dims,
                          bool squared) {
    if (a.rows() != b.rows() || a.cols() != b.cols())
        throw DimensionError("pose distance: shapes differ");
    if (dims < 1 || a.cols() % dims != 0)
        throw DimensionError("pose distance: column count is not a multiple of D");
    const Index joints = a.cols() / dims;
    Scalar acc = 0;
    for (Index t = 0; t < a.rows(); ++t) {
        for (Index j = 0; j < joints; ++j) {
            Scalar sq = 0;
            for (Index d = 0; d < dims; ++d) {
                const Scalar diff = a(t, j * dims + d) - b(t, j * dims + d);
                sq += diff * diff;
            }
            acc += squared ? sq : static_cast<Scalar>(std::sqrt(sq));
        }
    }
    return acc / static_cast<Scalar>(a.rows() * joints);
}

// d(mean_pose_distance)/da scaled by `seed`; the gradient with respect to b is
// the negation. The norm's subgradient at zero distance is taken as zero.
template <typename Scalar>
Matrix<Scalar> pose_distance_gradient(const Matrix<Scalar>& a, const Matrix<Scalar>& b, Index dims,
                                      bool squared, Scalar seed) {
    const Index joints = a.cols() / dims;
    const Scalar scale = seed / static_cast<Scalar>(a.rows() * joints);
    Matrix<Scalar> grad = Matrix<Scalar>::Zero(a.rows(), a.cols());
    for (Index t = 0; t < a.rows(); ++t) {
        for (Index j = 0; j < joints; ++j) {
            Scalar sq = 0;
            for (Index d = 0; d < dims; ++d) {
                const Scalar diff = a(t, j * dims + d) - b(t, j * dims + d);
                sq += diff * diff;
            }
            if (squared) {
                for (Index d = 0; d < dims; ++d)
                    grad(t, j * dims + d) =
                        Scalar(2) * scale * (a(t, j * dims + d) - b(t, j * dims + d));
            } else if (sq > Scalar(0)) {
                const Scalar norm = static_cast<Scalar>(std::sqrt(sq));
                for (Index d = 0; d < dims; ++d)
                    grad(t, j * dims + d) = scale * (a(t, j * dims + d) - b(t, j * dims + d)) / norm;
            }
        }
    }
    return grad;
}

}  // namespace stms::internal
