#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "stms/autodiff.hpp"
#include "stms/graph_layers.hpp"
#include "stms/internal/pose_distance.hpp"
#include "stms/matrix.hpp"
#include "stms/model.hpp"

namespace stms {

// How the prediction losses and the consistency penalty are weighted and
// wired. w_st and w_con both default to the best-performing lambda; setting
// them independently realizes the generalized beta objective (w_con may be
// negative there, the diversity variant).
struct LossOptions {
    double w_st = 0.1;
    double w_con = 0.1;
    bool squared = false;  // literal squared-distance reading of the objective
    PenaltyTarget constraint_target = PenaltyTarget::adjacency;
};

template <typename Scalar>
struct LossBreakdown {
    Scalar l1 = 0;
    Scalar l_st = 0;
    Scalar l_con_s = 0;
    Scalar l_con_t = 0;
    Scalar total = 0;
    Scalar w_st = 0;
    Scalar w_con = 0;
};

// Mean over all (frame, joint) pairs of the Euclidean distance, in the input
// unit (millimeters throughout this library). `dims` is the coordinate count
// per joint.
template <typename Scalar>
Scalar pose_error(const Matrix<Scalar>& pred, const Matrix<Scalar>& gt, Index dims,
                  bool squared = false) {
    return internal::mean_pose_distance(pred, gt, dims, squared);
}

// Prediction loss against the padded ground truth: the sum in the objective
// runs over the whole horizon t = 1..T_p+T_f, so reconstruction of the
// observed frames is part of it.
template <typename Scalar>
Scalar loss_l1(const ForwardResult<Scalar>& result, const Matrix<Scalar>& target_padded,
               Index dims, bool squared = false) {
    return pose_error(result.final, target_padded, dims, squared);
}

// Cross-domain consistency: per-layer discrepancy between the two branches'
// decoded predictions, summed over layers.
template <typename Scalar>
Scalar loss_st(const std::vector<Matrix<Scalar>>& temporal_preds,
               const std::vector<Matrix<Scalar>>& spatial_preds, Index dims,
               bool squared = false) {
    if (temporal_preds.empty() || temporal_preds.size() != spatial_preds.size())
        throw DimensionError("loss_st: branch prediction lists must have equal nonzero length");
    Scalar acc = 0;
    for (std::size_t l = 0; l < temporal_preds.size(); ++l)
        acc += pose_error(temporal_preds[l], spatial_preds[l], dims, squared);
    return acc;
}

// Homogeneous-information penalty of one branch: per-layer pairwise kernel
// divergence summed over the encoder stack (the decoder has a single kernel
// and contributes nothing).
template <typename Scalar>
Scalar branch_consistency(const Branch<Scalar>& branch,
                          PenaltyTarget target = PenaltyTarget::adjacency) {
    Scalar acc = 0;
    for (const auto& layer : branch.encoders) acc += adjacency_divergence(layer, target);
    return acc;
}

// total = L1 + w_st * L_ST + w_con * (L_con^S + L_con^T). The uniform-lambda
// objective is the case w_st = w_con = lambda.
template <typename Scalar>
LossBreakdown<Scalar> loss_total(Scalar l1, Scalar l_st, Scalar l_con_s, Scalar l_con_t,
                                 Scalar w_st, Scalar w_con) {
    LossBreakdown<Scalar> out;
    out.l1 = l1;
    out.l_st = l_st;
    out.l_con_s = l_con_s;
    out.l_con_t = l_con_t;
    out.w_st = w_st;
    out.w_con = w_con;
    out.total = l1 + w_st * l_st + w_con * (l_con_s + l_con_t);
    return out;
}

// Full breakdown for one forward result on one padded target.
template <typename Scalar>
LossBreakdown<Scalar> model_loss(const StmsModel<Scalar>& model, const ForwardResult<Scalar>& fwd,
                                 const Matrix<Scalar>& target_padded, const LossOptions& opts) {
    const Index dims = model.config().dims;
    const Scalar l1 = loss_l1(fwd, target_padded, dims, opts.squared);
    const Scalar st = (model.has_temporal() && model.has_spatial())
                          ? loss_st(fwd.temporal_preds, fwd.spatial_preds, dims, opts.squared)
                          : Scalar(0);
    const Scalar con_t =
        (model.has_temporal() && opts.constraint_target != PenaltyTarget::none)
            ? branch_consistency(model.temporal(), opts.constraint_target)
            : Scalar(0);
    const Scalar con_s =
        (model.has_spatial() && opts.constraint_target != PenaltyTarget::none)
            ? branch_consistency(model.spatial(), opts.constraint_target)
            : Scalar(0);
    return loss_total(l1, st, con_s, con_t, static_cast<Scalar>(opts.w_st),
                      static_cast<Scalar>(opts.w_con));
}

// --- tape builders -----------------------------------------------------------

template <typename Scalar>
struct LossNodes {
    int l1 = -1;
    int l_st = -1;
    int l_con_s = -1;
    int l_con_t = -1;
    int total = -1;
};

namespace detail {

template <typename Scalar>
int consistency_node(ad::Graph<Scalar>& g, const Branch<Scalar>& branch,
                     ParamBinder<Scalar>& bind, PenaltyTarget target) {
    int acc = g.constant(Matrix<Scalar>::Zero(1, 1));
    for (const auto& layer : branch.encoders) {
        if (target != PenaltyTarget::weight) {
            std::vector<int> mats;
            for (const auto& kernel : layer.kernels) mats.push_back(bind(kernel.adjacency));
            acc = g.add(acc, pairwise_divergence_node(g, mats));
        }
        if (target != PenaltyTarget::adjacency) {
            std::vector<int> mats;
            for (const auto& kernel : layer.kernels) mats.push_back(bind(kernel.weight));
            acc = g.add(acc, pairwise_divergence_node(g, mats));
        }
    }
    return acc;
}

}  // namespace detail

// Builds the per-sample data losses on the tape. `target_padded` covers the
// whole horizon (ground-truth frames 1..T_p+T_f).
template <typename Scalar>
LossNodes<Scalar> build_sample_loss(ad::Graph<Scalar>& g, const StmsModel<Scalar>& model,
                                    const ForwardNodes<Scalar>& fwd,
                                    const Matrix<Scalar>& target_padded,
                                    const LossOptions& opts) {
    const Index dims = model.config().dims;
    LossNodes<Scalar> nodes;
    const int target = g.constant(target_padded);
    nodes.l1 = g.mean_pose_distance(fwd.final, target, dims, opts.squared);
    if (model.has_temporal() && model.has_spatial()) {
        int acc = g.mean_pose_distance(fwd.temporal_preds[0], fwd.spatial_preds[0], dims,
                                       opts.squared);
        for (std::size_t l = 1; l < fwd.temporal_preds.size(); ++l)
            acc = g.add(acc, g.mean_pose_distance(fwd.temporal_preds[l], fwd.spatial_preds[l],
                                                  dims, opts.squared));
        nodes.l_st = acc;
    } else {
        nodes.l_st = g.constant(Matrix<Scalar>::Zero(1, 1));
    }
    return nodes;
}

// Adds the parameter-only consistency penalties and combines everything into
// the weighted total node.
template <typename Scalar>
LossNodes<Scalar> build_total_loss(ad::Graph<Scalar>& g, const StmsModel<Scalar>& model,
                                   ParamBinder<Scalar>& bind, int l1, int l_st,
                                   const LossOptions& opts) {
    LossNodes<Scalar> nodes;
    nodes.l1 = l1;
    nodes.l_st = l_st;
    const int zero = g.constant(Matrix<Scalar>::Zero(1, 1));
    nodes.l_con_t = (model.has_temporal() && opts.constraint_target != PenaltyTarget::none)
                        ? detail::consistency_node(g, model.temporal(), bind,
                                                   opts.constraint_target)
                        : zero;
    nodes.l_con_s = (model.has_spatial() && opts.constraint_target != PenaltyTarget::none)
                        ? detail::consistency_node(g, model.spatial(), bind,
                                                   opts.constraint_target)
                        : zero;
    const int weighted_st = g.scale(l_st, static_cast<Scalar>(opts.w_st));
    const int weighted_con =
        g.scale(g.add(nodes.l_con_s, nodes.l_con_t), static_cast<Scalar>(opts.w_con));
    nodes.total = g.add(nodes.l1, g.add(weighted_st, weighted_con));
    return nodes;
}

}  // namespace stms
