#pragma once

#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "stms/errors.hpp"
#include "stms/internal/pose_distance.hpp"
#include "stms/matrix.hpp"

namespace stms::ad {

// A small single-use reverse-mode tape over dense matrices. Values are
// computed eagerly when a node is created; backward() sweeps the tape in
// reverse creation order. Nodes reached from no tracked leaf carry no
// gradient and their backward step is skipped entirely.
//
// The op set is exactly what the model needs: matrix product, elementwise
// add/sub/scale, transpose, ReLU, row-broadcast add, squared Frobenius norm,
// and the mean per-joint distance used by the prediction losses.
template <typename Scalar>
class Graph {
  public:
    using Mat = Matrix<Scalar>;

    Graph() = default;
    Graph(const Graph&) = delete;
    Graph& operator=(const Graph&) = delete;

    // Untracked input: no gradient flows into it.
    int constant(Mat v) { return push(std::move(v), false, {}); }

    // Tracked input (a parameter); grad(id) is valid after backward().
    int leaf(Mat v) { return push(std::move(v), true, {}); }

    int matmul(int a, int b) {
        const Mat& va = value(a);
        const Mat& vb = value(b);
        if (va.cols() != vb.rows())
            throw DimensionError("matmul: " + shape_of(va) + " x " + shape_of(vb));
        return push(va * vb, tracked(a) || tracked(b), [a, b](Graph& g, int self) {
            const Mat& grad_out = g.node(self).grad;
            if (g.tracked(a)) g.node(a).grad.noalias() += grad_out * g.value(b).transpose();
            if (g.tracked(b)) g.node(b).grad.noalias() += g.value(a).transpose() * grad_out;
        });
    }

    int add(int a, int b) {
        require_same_shape(a, b, "add");
        return push(value(a) + value(b), tracked(a) || tracked(b), [a, b](Graph& g, int self) {
            const Mat& grad_out = g.node(self).grad;
            if (g.tracked(a)) g.node(a).grad += grad_out;
            if (g.tracked(b)) g.node(b).grad += grad_out;
        });
    }

    int sub(int a, int b) {
        require_same_shape(a, b, "sub");
        return push(value(a) - value(b), tracked(a) || tracked(b), [a, b](Graph& g, int self) {
            const Mat& grad_out = g.node(self).grad;
            if (g.tracked(a)) g.node(a).grad += grad_out;
            if (g.tracked(b)) g.node(b).grad -= grad_out;
        });
    }

    int scale(int a, Scalar c) {
        return push(value(a) * c, tracked(a), [a, c](Graph& g, int self) {
            if (g.tracked(a)) g.node(a).grad += g.node(self).grad * c;
        });
    }

    int transpose(int a) {
        return push(value(a).transpose(), tracked(a), [a](Graph& g, int self) {
            if (g.tracked(a)) g.node(a).grad += g.node(self).grad.transpose();
        });
    }

    int relu(int a) {
        return push(value(a).cwiseMax(Scalar(0)), tracked(a), [a](Graph& g, int self) {
            if (!g.tracked(a)) return;
            const Mat mask =
                (g.value(a).array() > Scalar(0)).template cast<Scalar>().matrix();
            g.node(a).grad += g.node(self).grad.cwiseProduct(mask);
        });
    }

    // Adds a 1 x C row vector to every row of a.
    int add_row(int a, int row) {
        const Mat& va = value(a);
        const Mat& vr = value(row);
        if (vr.rows() != 1 || vr.cols() != va.cols())
            throw DimensionError("add_row: " + shape_of(va) + " + " + shape_of(vr));
        Mat out = va;
        out.rowwise() += vr.row(0);
        return push(std::move(out), tracked(a) || tracked(row), [a, row](Graph& g, int self) {
            const Mat& grad_out = g.node(self).grad;
            if (g.tracked(a)) g.node(a).grad += grad_out;
            if (g.tracked(row)) g.node(row).grad += grad_out.colwise().sum();
        });
    }

    // Squared Frobenius norm, as a 1x1 node.
    int sum_squares(int a) {
        Mat out(1, 1);
        out(0, 0) = value(a).squaredNorm();
        return push(std::move(out), tracked(a), [a](Graph& g, int self) {
            if (g.tracked(a))
                g.node(a).grad += g.value(a) * (Scalar(2) * g.node(self).grad(0, 0));
        });
    }

    // Mean per-joint distance between two stacked pose matrices, as a 1x1
    // node. `dims` is the coordinate count per joint.
    int mean_pose_distance(int a, int b, Index dims, bool squared) {
        Mat out(1, 1);
        out(0, 0) = internal::mean_pose_distance(value(a), value(b), dims, squared);
        return push(std::move(out), tracked(a) || tracked(b),
                    [a, b, dims, squared](Graph& g, int self) {
                        const Scalar seed = g.node(self).grad(0, 0);
                        const Mat grad = internal::pose_distance_gradient(
                            g.value(a), g.value(b), dims, squared, seed);
                        if (g.tracked(a)) g.node(a).grad += grad;
                        if (g.tracked(b)) g.node(b).grad -= grad;
                    });
    }

    // Sequential left-to-right mean; the accumulation order is fixed so runs
    // are bit-reproducible.
    int mean(const std::vector<int>& ids) {
        if (ids.empty()) throw InvalidInputError("mean of no nodes");
        int acc = ids.front();
        for (std::size_t i = 1; i < ids.size(); ++i) acc = add(acc, ids[i]);
        return scale(acc, Scalar(1) / static_cast<Scalar>(ids.size()));
    }

    const Mat& value(int id) const { return nodes_.at(static_cast<std::size_t>(id)).value; }

    // Valid after backward(); zero matrix for tracked nodes the root does not
    // depend on.
    const Mat& grad(int id) const {
        const Node& n = nodes_.at(static_cast<std::size_t>(id));
        if (!n.track) throw InvalidInputError("grad requested for an untracked node");
        return n.grad;
    }

    bool tracked(int id) const { return nodes_.at(static_cast<std::size_t>(id)).track; }

    std::size_t size() const { return nodes_.size(); }

    void backward(int root) {
        Node& r = node(root);
        if (r.value.rows() != 1 || r.value.cols() != 1)
            throw DimensionError("backward root must be a 1x1 node");
        for (Node& n : nodes_)
            if (n.track) n.grad = Mat::Zero(n.value.rows(), n.value.cols());
        if (!r.track) return;  // nothing upstream is tracked
        r.grad(0, 0) = Scalar(1);
        for (int id = root; id >= 0; --id) {
            Node& n = node(id);
            if (n.track && n.backward) n.backward(*this, id);
        }
    }

  private:
    struct Node {
        Mat value;
        Mat grad;
        bool track = false;
        std::function<void(Graph&, int)> backward;
    };

    Node& node(int id) { return nodes_.at(static_cast<std::size_t>(id)); }

    int push(Mat v, bool track, std::function<void(Graph&, int)> back) {
        nodes_.push_back(Node{std::move(v), {}, track, std::move(back)});
        return static_cast<int>(nodes_.size()) - 1;
    }

    void require_same_shape(int a, int b, const char* op) const {
        if (value(a).rows() != value(b).rows() || value(a).cols() != value(b).cols())
            throw DimensionError(std::string(op) + ": " + shape_of(value(a)) + " vs " +
                                 shape_of(value(b)));
    }

    static std::string shape_of(const Mat& m) {
        return std::to_string(m.rows()) + "x" + std::to_string(m.cols());
    }

    std::vector<Node> nodes_;
};

}  // namespace stms::ad
