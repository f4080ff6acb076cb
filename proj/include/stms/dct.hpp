#pragma once

#include <cmath>
#include <numbers>

#include "stms/errors.hpp"
#include "stms/matrix.hpp"

namespace stms {

// Orthonormal DCT-II along the time axis of joint-coordinate trajectories,
// realized as multiplication by a precomputed basis. B(k, t) = s_k *
// cos(pi*(2t+1)*k / (2T)) with s_0 = sqrt(1/T) and s_k = sqrt(2/T) for k > 0,
// so B * B^T = I and the inverse (DCT-III) is the transpose.
//
// `keep` selects how many leading coefficient rows to build; the full square
// basis is the default. Truncated bases drop high frequencies and are used
// only when a model explicitly asks for coefficient truncation.
template <typename Scalar>
Matrix<Scalar> dct_basis(Index T, Index keep = -1) {
    if (T < 1) throw InvalidInputError("dct: T must be at least 1");
    if (keep < 0) keep = T;
    if (keep < 1 || keep > T)
        throw InvalidInputError("dct: kept coefficient count must lie in [1, T]");
    Matrix<Scalar> basis(keep, T);
    const double norm0 = std::sqrt(1.0 / static_cast<double>(T));
    const double norm = std::sqrt(2.0 / static_cast<double>(T));
    for (Index k = 0; k < keep; ++k) {
        const double s = (k == 0) ? norm0 : norm;
        for (Index t = 0; t < T; ++t) {
            const double angle = std::numbers::pi * (2.0 * static_cast<double>(t) + 1.0) *
                                 static_cast<double>(k) / (2.0 * static_cast<double>(T));
            basis(k, t) = static_cast<Scalar>(s * std::cos(angle));
        }
    }
    return basis;
}

// Each row of `traj` is one coordinate's trajectory over T steps; each row of
// the result holds its T DCT-II coefficients.
template <typename Scalar>
Matrix<Scalar> dct_forward(const Matrix<Scalar>& traj) {
    if (traj.cols() < 1) throw InvalidInputError("dct_forward: empty trajectory");
    if (!all_finite(traj)) throw InvalidInputError("dct_forward: non-finite input");
    const Matrix<Scalar> basis = dct_basis<Scalar>(traj.cols());
    return traj * basis.transpose();
}

// Exact inverse of dct_forward.
template <typename Scalar>
Matrix<Scalar> dct_inverse(const Matrix<Scalar>& coeffs) {
    if (coeffs.cols() < 1) throw InvalidInputError("dct_inverse: empty coefficient matrix");
    if (!all_finite(coeffs)) throw InvalidInputError("dct_inverse: non-finite input");
    const Matrix<Scalar> basis = dct_basis<Scalar>(coeffs.cols());
    return coeffs * basis;
}

}  // namespace stms
