#include <catch2/catch_amalgamated.hpp>

#include <functional>
#include <vector>

#include "stms/autodiff.hpp"
#include "stms/random.hpp"
#include "test_util.hpp"

using namespace stms;
using testutil::mat;

namespace {

using BuildFn = std::function<int(ad::Graph<double>&, const std::vector<int>&)>;

// Checks the tape gradient of a scalar-valued builder against central
// differences over every entry of every input.
void check_gradients(std::vector<Matrix<double>> inputs, const BuildFn& build,
                     double eps = 1e-6, double tol = 1e-7) {
    ad::Graph<double> g;
    std::vector<int> ids;
    for (const auto& m : inputs) ids.push_back(g.leaf(m));
    g.backward(build(g, ids));

    const auto evaluate = [&](const std::vector<Matrix<double>>& xs) {
        ad::Graph<double> h;
        std::vector<int> cs;
        for (const auto& m : xs) cs.push_back(h.constant(m));
        return h.value(build(h, cs))(0, 0);
    };

    for (std::size_t n = 0; n < inputs.size(); ++n) {
        const Matrix<double> analytic = g.grad(ids[n]);
        for (Index i = 0; i < inputs[n].rows(); ++i) {
            for (Index j = 0; j < inputs[n].cols(); ++j) {
                std::vector<Matrix<double>> up = inputs, down = inputs;
                up[n](i, j) += eps;
                down[n](i, j) -= eps;
                const double numeric = (evaluate(up) - evaluate(down)) / (2.0 * eps);
                REQUIRE(analytic(i, j) == Catch::Approx(numeric).margin(tol));
            }
        }
    }
}

Matrix<double> random_matrix(Index rows, Index cols, Rng& rng) {
    Matrix<double> m(rows, cols);
    for (Index i = 0; i < rows; ++i)
        for (Index j = 0; j < cols; ++j) m(i, j) = rng.uniform(-1.0, 1.0);
    return m;
}

}  // namespace

TEST_CASE("forward values of the primitive ops") {
    ad::Graph<double> g;
    const int a = g.constant(mat({{1.0, 2.0}, {3.0, 4.0}}));
    const int b = g.constant(mat({{0.5, -1.0}, {2.0, 0.0}}));
    REQUIRE(g.value(g.matmul(a, b)) == mat({{4.5, -1.0}, {9.5, -3.0}}));
    REQUIRE(g.value(g.add(a, b)) == mat({{1.5, 1.0}, {5.0, 4.0}}));
    REQUIRE(g.value(g.sub(a, b)) == mat({{0.5, 3.0}, {1.0, 4.0}}));
    REQUIRE(g.value(g.scale(a, 2.0)) == mat({{2.0, 4.0}, {6.0, 8.0}}));
    REQUIRE(g.value(g.transpose(a)) == mat({{1.0, 3.0}, {2.0, 4.0}}));
    REQUIRE(g.value(g.relu(g.constant(mat({{-1.0, 2.0}})))) == mat({{0.0, 2.0}}));
    REQUIRE(g.value(g.add_row(a, g.constant(mat({{10.0, 20.0}})))) ==
            mat({{11.0, 22.0}, {13.0, 24.0}}));
    REQUIRE(g.value(g.sum_squares(a))(0, 0) == 30.0);
    const int m = g.mean({g.constant(mat({{4.0}})), g.constant(mat({{10.0}}))});
    REQUIRE(g.value(m)(0, 0) == 7.0);
}

TEST_CASE("shape errors") {
    ad::Graph<double> g;
    const int a = g.constant(mat({{1.0, 2.0}}));
    const int b = g.constant(mat({{1.0, 2.0, 3.0}}));
    REQUIRE_THROWS_AS(g.matmul(a, b), DimensionError);
    REQUIRE_THROWS_AS(g.add(a, b), DimensionError);
    REQUIRE_THROWS_AS(g.add_row(a, b), DimensionError);
    REQUIRE_THROWS_AS(g.backward(a), DimensionError);  // root must be 1x1
    REQUIRE_THROWS_AS(g.grad(a), InvalidInputError);   // constants carry no grad
}

TEST_CASE("matmul chain gradient") {
    Rng rng(7);
    check_gradients({random_matrix(3, 2, rng), random_matrix(2, 4, rng)},
                    [](ad::Graph<double>& g, const std::vector<int>& in) {
                        return g.sum_squares(g.matmul(in[0], in[1]));
                    });
}

TEST_CASE("affine row gradient with relu") {
    Rng rng(8);
    check_gradients(
        {random_matrix(4, 3, rng), random_matrix(3, 2, rng), random_matrix(1, 2, rng)},
        [](ad::Graph<double>& g, const std::vector<int>& in) {
            return g.sum_squares(g.relu(g.add_row(g.matmul(in[0], in[1]), in[2])));
        });
}

TEST_CASE("transpose, scale and sub gradients") {
    Rng rng(9);
    check_gradients({random_matrix(2, 3, rng), random_matrix(2, 3, rng)},
                    [](ad::Graph<double>& g, const std::vector<int>& in) {
                        const int t = g.transpose(g.sub(in[0], g.scale(in[1], 1.5)));
                        return g.sum_squares(t);
                    });
}

TEST_CASE("node reused by several consumers accumulates gradient") {
    Rng rng(10);
    check_gradients({random_matrix(2, 2, rng)},
                    [](ad::Graph<double>& g, const std::vector<int>& in) {
                        const int sq = g.matmul(in[0], in[0]);  // same leaf twice
                        return g.add(g.sum_squares(sq), g.sum_squares(in[0]));
                    });
}

TEST_CASE("mean pose distance gradients") {
    Rng rng(11);
    SECTION("euclidean") {
        check_gradients({random_matrix(3, 6, rng), random_matrix(3, 6, rng)},
                        [](ad::Graph<double>& g, const std::vector<int>& in) {
                            return g.mean_pose_distance(in[0], in[1], 3, false);
                        });
    }
    SECTION("squared") {
        check_gradients({random_matrix(3, 6, rng), random_matrix(3, 6, rng)},
                        [](ad::Graph<double>& g, const std::vector<int>& in) {
                            return g.mean_pose_distance(in[0], in[1], 2, true);
                        });
    }
}

TEST_CASE("mean pose distance matches the shared kernel and handles zero") {
    const Matrix<double> a = mat({{3.0, 4.0, 0.0, 0.0, 0.0, 0.0}});
    const Matrix<double> b = Matrix<double>::Zero(1, 6);
    ad::Graph<double> g;
    const int leaf = g.leaf(a);
    const int d = g.mean_pose_distance(leaf, g.constant(b), 3, false);
    REQUIRE(g.value(d)(0, 0) == Catch::Approx(2.5));  // (5 + 0) / 2
    g.backward(d);  // the zero-distance joint must contribute a zero gradient
    const Matrix<double> grad = g.grad(leaf);
    REQUIRE(grad(0, 3) == 0.0);
    REQUIRE(grad(0, 0) == Catch::Approx(0.5 * 3.0 / 5.0));
}

TEST_CASE("gradient does not flow into constants") {
    ad::Graph<double> g;
    const int leaf = g.leaf(mat({{2.0}}));
    const int con = g.constant(mat({{3.0}}));
    const int out = g.sum_squares(g.matmul(leaf, con));
    g.backward(out);
    REQUIRE(g.grad(leaf)(0, 0) == Catch::Approx(2.0 * 2.0 * 9.0));
    REQUIRE(g.tracked(con) == false);
}
