#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <numbers>

#include "stms/dct.hpp"
#include "stms/random.hpp"
#include "test_util.hpp"

using namespace stms;
using testutil::mat;

namespace {

template <typename Scalar>
Matrix<Scalar> random_matrix(Index rows, Index cols, Rng& rng, double scale = 1.0) {
    Matrix<Scalar> m(rows, cols);
    for (Index i = 0; i < rows; ++i)
        for (Index j = 0; j < cols; ++j)
            m(i, j) = static_cast<Scalar>(rng.uniform(-scale, scale));
    return m;
}

}  // namespace

TEST_CASE("constant rows map to the DC coefficient") {
    const Index T = 7;
    const double c = 3.25;
    Matrix<double> traj = Matrix<double>::Constant(1, T, c);
    const Matrix<double> coeffs = dct_forward(traj);
    REQUIRE(coeffs(0, 0) == Catch::Approx(c * std::sqrt(double(T))).margin(1e-12));
    for (Index k = 1; k < T; ++k) REQUIRE(std::abs(coeffs(0, k)) < 1e-12);

    // And back: a pure DC spectrum recovers the constant row.
    Matrix<double> dc = Matrix<double>::Zero(1, T);
    dc(0, 0) = c * std::sqrt(double(T));
    const Matrix<double> recovered = dct_inverse(dc);
    for (Index t = 0; t < T; ++t) REQUIRE(recovered(0, t) == Catch::Approx(c).margin(1e-12));
}

TEST_CASE("zero matrix transforms to zero") {
    const Matrix<double> z = Matrix<double>::Zero(3, 5);
    REQUIRE(dct_forward(z) == z);
    REQUIRE(dct_inverse(z) == z);
}

TEST_CASE("row 1 2 3 4 matches the definition sum") {
    const Matrix<double> traj = mat({{1.0, 2.0, 3.0, 4.0}});
    const Matrix<double> coeffs = dct_forward(traj);
    // Independent oracle: evaluate C_k = s_k * sum_t x_t cos(pi (2t+1) k / (2T))
    // directly.
    const Index T = 4;
    for (Index k = 0; k < T; ++k) {
        const double s = k == 0 ? std::sqrt(1.0 / double(T)) : std::sqrt(2.0 / double(T));
        double acc = 0.0;
        for (Index t = 0; t < T; ++t)
            acc += traj(0, t) *
                   std::cos(std::numbers::pi * (2.0 * double(t) + 1.0) * double(k) /
                            (2.0 * double(T)));
        REQUIRE(coeffs(0, k) == Catch::Approx(s * acc).margin(1e-12));
    }
    // Frozen spot checks of the same oracle.
    REQUIRE(coeffs(0, 0) == Catch::Approx(5.0).margin(1e-12));
    REQUIRE(coeffs(0, 1) == Catch::Approx(-2.2304424973876631).margin(1e-12));
    REQUIRE(coeffs(0, 3) == Catch::Approx(-0.15851266778110815).margin(1e-12));
}

TEST_CASE("roundtrip and Parseval in double precision") {
    Rng rng(101);
    double worst_roundtrip = 0.0;
    double worst_parseval = 0.0;
    for (int trial = 0; trial < 200; ++trial) {
        const Index rows = 1 + static_cast<Index>(rng.below(8));
        const Index cols = 1 + static_cast<Index>(rng.below(32));
        const Matrix<double> x = random_matrix<double>(rows, cols, rng, 100.0);
        const Matrix<double> coeffs = dct_forward(x);
        worst_roundtrip = std::max(worst_roundtrip, testutil::max_abs_diff(dct_inverse(coeffs), x));
        worst_parseval = std::max(worst_parseval, std::abs(coeffs.norm() - x.norm()));
    }
    REQUIRE(worst_roundtrip < 1e-10);
    REQUIRE(worst_parseval < 1e-10);
}

TEST_CASE("roundtrip and Parseval in single precision") {
    Rng rng(202);
    double worst_roundtrip = 0.0;
    double worst_parseval = 0.0;
    for (int trial = 0; trial < 200; ++trial) {
        const Index rows = 1 + static_cast<Index>(rng.below(8));
        const Index cols = 1 + static_cast<Index>(rng.below(32));
        const Matrix<float> x = random_matrix<float>(rows, cols, rng);
        const Matrix<float> coeffs = dct_forward(x);
        worst_roundtrip = std::max(worst_roundtrip, testutil::max_abs_diff(dct_inverse(coeffs), x));
        worst_parseval =
            std::max(worst_parseval, std::abs(double(coeffs.norm()) - double(x.norm())));
    }
    REQUIRE(worst_roundtrip < 1e-5);
    REQUIRE(worst_parseval < 1e-5);
}

TEST_CASE("linearity") {
    Rng rng(303);
    const Matrix<double> x = random_matrix<double>(3, 9, rng);
    const Matrix<double> y = random_matrix<double>(3, 9, rng);
    const double a = 1.7, b = -0.4;
    const Matrix<double> lhs = dct_forward(Matrix<double>(a * x + b * y));
    const Matrix<double> rhs = a * dct_forward(x) + b * dct_forward(y);
    REQUIRE(testutil::max_abs_diff(lhs, Matrix<double>(rhs)) < 1e-12);
}

TEST_CASE("truncated basis is the leading rows of the full basis") {
    const Matrix<double> full = dct_basis<double>(12);
    const Matrix<double> trunc = dct_basis<double>(12, 5);
    REQUIRE(trunc.rows() == 5);
    REQUIRE(testutil::max_abs_diff(Matrix<double>(full.topRows(5)), trunc) == 0.0);
    REQUIRE_THROWS_AS(dct_basis<double>(4, 5), InvalidInputError);
    REQUIRE_THROWS_AS(dct_basis<double>(0), InvalidInputError);
}

TEST_CASE("non-finite input is rejected") {
    Matrix<double> bad = Matrix<double>::Zero(1, 3);
    bad(0, 1) = std::nan("");
    REQUIRE_THROWS_AS(dct_forward(bad), InvalidInputError);
    REQUIRE_THROWS_AS(dct_inverse(bad), InvalidInputError);
}
