#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "stms/autodiff.hpp"
#include "stms/errors.hpp"
#include "stms/matrix.hpp"
#include "stms/random.hpp"

namespace stms {

enum class Activation { relu, identity };

// One graph convolution sigma(A * x * W) with a fully learnable dense
// adjacency A (N x N) and feature transform W (C_in x C_out). No
// normalization, no symmetry constraint, no bias.
template <typename Scalar>
struct SubgraphKernel {
    Matrix<Scalar> adjacency;
    Matrix<Scalar> weight;
    Activation activation = Activation::relu;

    Index nodes() const { return adjacency.rows(); }
    Index in_channels() const { return weight.rows(); }
    Index out_channels() const { return weight.cols(); }

    void validate() const {
        if (adjacency.rows() != adjacency.cols())
            throw DimensionError("kernel adjacency must be square");
        if (adjacency.rows() < 1 || weight.rows() < 1 || weight.cols() < 1)
            throw DimensionError("kernel has empty parameter matrices");
        if (!all_finite(adjacency) || !all_finite(weight))
            throw InvalidInputError("kernel parameters contain non-finite values");
    }
};

// K parallel kernels over the same input whose outputs are elementwise
// averaged.
template <typename Scalar>
struct MultiSubgraphLayer {
    std::vector<SubgraphKernel<Scalar>> kernels;

    Index kernel_count() const { return static_cast<Index>(kernels.size()); }

    void validate() const {
        if (kernels.empty()) throw InvalidInputError("layer needs at least one kernel");
        kernels.front().validate();
        for (std::size_t k = 1; k < kernels.size(); ++k) {
            kernels[k].validate();
            if (kernels[k].nodes() != kernels.front().nodes() ||
                kernels[k].in_channels() != kernels.front().in_channels() ||
                kernels[k].out_channels() != kernels.front().out_channels())
                throw DimensionError("kernel " + std::to_string(k + 1) +
                                     " does not match the layer shape");
        }
    }
};

struct LayerShape {
    Index nodes;
    Index in_channels;
    Index out_channels;
    Index kernels;
};

namespace detail {

// Uniform weight bound proportional to 1/sqrt(C_in). The sqrt(6) factor is
// the ReLU-preserving choice: anything smaller shrinks activations layer by
// layer and starves gradient descent through the deep stack.
inline double weight_init_bound(Index c_in) {
    return std::sqrt(6.0 / static_cast<double>(c_in));
}

// Weights uniform with the 1/sqrt(C_in) scaling; adjacency identity plus
// uniform noise so the K kernels start near pass-through but never
// identical. Draw order is row-major, adjacency first.
template <typename Scalar>
SubgraphKernel<Scalar> init_kernel(Index nodes, Index c_in, Index c_out, Rng& rng,
                                   double adjacency_noise, Activation act) {
    SubgraphKernel<Scalar> kernel;
    kernel.activation = act;
    kernel.adjacency = Matrix<Scalar>::Identity(nodes, nodes);
    for (Index i = 0; i < nodes; ++i)
        for (Index j = 0; j < nodes; ++j)
            kernel.adjacency(i, j) +=
                static_cast<Scalar>(adjacency_noise * rng.uniform(-1.0, 1.0));
    const double bound = weight_init_bound(c_in);
    kernel.weight.resize(c_in, c_out);
    for (Index i = 0; i < c_in; ++i)
        for (Index j = 0; j < c_out; ++j)
            kernel.weight(i, j) = static_cast<Scalar>(rng.uniform(-bound, bound));
    return kernel;
}

}  // namespace detail

template <typename Scalar>
MultiSubgraphLayer<Scalar> init_layer(const LayerShape& shape, Rng& rng,
                                      double adjacency_noise = 1e-2) {
    if (shape.nodes < 1 || shape.in_channels < 1 || shape.out_channels < 1 || shape.kernels < 1)
        throw InvalidInputError("init_layer: all shape parameters must be positive");
    MultiSubgraphLayer<Scalar> layer;
    layer.kernels.reserve(static_cast<std::size_t>(shape.kernels));
    for (Index k = 0; k < shape.kernels; ++k)
        layer.kernels.push_back(detail::init_kernel<Scalar>(
            shape.nodes, shape.in_channels, shape.out_channels, rng, adjacency_noise,
            Activation::relu));
    return layer;
}

template <typename Scalar>
MultiSubgraphLayer<Scalar> init_layer(const LayerShape& shape, std::uint64_t seed,
                                      double adjacency_noise = 1e-2) {
    Rng rng(seed);
    return init_layer<Scalar>(shape, rng, adjacency_noise);
}

// --- tape builders ---------------------------------------------------------

template <typename Scalar>
int kernel_node(ad::Graph<Scalar>& g, int x, int adjacency, int weight, Activation act) {
    const int lin = g.matmul(g.matmul(adjacency, x), weight);
    return act == Activation::relu ? g.relu(lin) : lin;
}

template <typename Scalar>
int layer_node(ad::Graph<Scalar>& g, int x, const std::vector<std::pair<int, int>>& kernel_params,
               Activation act) {
    std::vector<int> outs;
    outs.reserve(kernel_params.size());
    for (const auto& [adjacency, weight] : kernel_params)
        outs.push_back(kernel_node(g, x, adjacency, weight, act));
    return g.mean(outs);
}

// Sum over unordered kernel pairs of the squared Frobenius distance between
// the given parameter matrices.
template <typename Scalar>
int pairwise_divergence_node(ad::Graph<Scalar>& g, const std::vector<int>& mats) {
    int acc = g.constant(Matrix<Scalar>::Zero(1, 1));
    for (std::size_t k = 0; k < mats.size(); ++k)
        for (std::size_t u = k + 1; u < mats.size(); ++u)
            acc = g.add(acc, g.sum_squares(g.sub(mats[k], mats[u])));
    return acc;
}

// --- value-level operations -------------------------------------------------
// Thin wrappers that run the same tape builders, so there is exactly one
// definition of the math.

template <typename Scalar>
Matrix<Scalar> kernel_forward(const SubgraphKernel<Scalar>& kernel, const Matrix<Scalar>& x) {
    kernel.validate();
    if (x.rows() != kernel.nodes() || x.cols() != kernel.in_channels())
        throw DimensionError("kernel_forward: input is " + std::to_string(x.rows()) + "x" +
                             std::to_string(x.cols()) + ", kernel expects " +
                             std::to_string(kernel.nodes()) + "x" +
                             std::to_string(kernel.in_channels()));
    ad::Graph<Scalar> g;
    const int out = kernel_node(g, g.constant(x), g.constant(kernel.adjacency),
                                g.constant(kernel.weight), kernel.activation);
    return g.value(out);
}

template <typename Scalar>
Matrix<Scalar> layer_forward(const MultiSubgraphLayer<Scalar>& layer, const Matrix<Scalar>& x) {
    layer.validate();
    if (x.rows() != layer.kernels.front().nodes() ||
        x.cols() != layer.kernels.front().in_channels())
        throw DimensionError("layer_forward: input shape does not match the layer");
    ad::Graph<Scalar> g;
    const int xn = g.constant(x);
    std::vector<std::pair<int, int>> params;
    params.reserve(layer.kernels.size());
    for (const auto& kernel : layer.kernels)
        params.emplace_back(g.constant(kernel.adjacency), g.constant(kernel.weight));
    return g.value(layer_node(g, xn, params, layer.kernels.front().activation));
}

// Which parameter matrices the homogeneous-information penalty compares.
enum class PenaltyTarget { none, adjacency, weight, both };

// Pairwise squared-Frobenius divergence across this layer's kernels. The
// adjacency flavor is the default; the weight flavor backs the W-constraint
// ablation.
template <typename Scalar>
Scalar adjacency_divergence(const MultiSubgraphLayer<Scalar>& layer,
                            PenaltyTarget target = PenaltyTarget::adjacency) {
    layer.validate();
    if (target == PenaltyTarget::none) return Scalar(0);
    Scalar acc = 0;
    const std::size_t K = layer.kernels.size();
    for (std::size_t k = 0; k < K; ++k) {
        for (std::size_t u = k + 1; u < K; ++u) {
            if (target != PenaltyTarget::weight)
                acc += (layer.kernels[k].adjacency - layer.kernels[u].adjacency).squaredNorm();
            if (target != PenaltyTarget::adjacency)
                acc += (layer.kernels[k].weight - layer.kernels[u].weight).squaredNorm();
        }
    }
    return acc;
}

}  // namespace stms
