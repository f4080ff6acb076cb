#pragma once

#include <cmath>
#include <cstdio>
#include <numeric>
#include <ostream>
#include <string>
#include <vector>

#include "stms/autodiff.hpp"
#include "stms/losses.hpp"
#include "stms/metrics.hpp"
#include "stms/model.hpp"
#include "stms/motion.hpp"
#include "stms/motion_io.hpp"
#include "stms/random.hpp"
#include "stms/synthetic.hpp"
#include "stms/train_config.hpp"

namespace stms {

// Materializes the dataset: load or synthesize the sequence, then slide the
// model's (T_p, T_f) window across it.
inline std::vector<Sample> load_dataset(const DatasetSpec& data, const ModelConfig& model) {
    data.validate();
    const MotionSequence seq =
        data.path ? load_canonical(*data.path) : synthesize_motion(*data.synth);
    if (seq.joint_count() != model.joints || seq.dims() != model.dims)
        throw ConfigError("dataset has (J=" + std::to_string(seq.joint_count()) + ", D=" +
                          std::to_string(seq.dims()) + "), model expects (J=" +
                          std::to_string(model.joints) + ", D=" + std::to_string(model.dims) +
                          ")");
    std::vector<Sample> samples =
        window_sequence(seq, static_cast<std::size_t>(model.t_p),
                        static_cast<std::size_t>(model.t_f), data.stride);
    if (samples.empty())
        throw InvalidInputError("dataset yields no samples: sequence of " +
                                std::to_string(seq.size()) + " frames cannot fit a window of " +
                                std::to_string(model.horizon()) + " frames");
    return samples;
}

struct EpochLog {
    std::size_t epoch;
    double l1;
    double l_st;
    double l_con_s;
    double l_con_t;
    double total;
    double lr;
};

inline void write_train_log_csv(std::ostream& out, const std::vector<EpochLog>& log) {
    out << "epoch,l1,l_st,l_con_s,l_con_t,total,lr\n";
    char buf[256];
    for (const EpochLog& row : log) {
        std::snprintf(buf, sizeof(buf), "%zu,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g\n", row.epoch, row.l1,
                      row.l_st, row.l_con_s, row.l_con_t, row.total, row.lr);
        out << buf;
    }
}

template <typename Scalar>
struct TrainResult {
    StmsModel<Scalar> model;
    std::vector<EpochLog> log;
    std::uint64_t steps = 0;
    std::vector<Sample> samples;  // the windowed training set, for reuse by eval
};

namespace detail {

inline void require_finite(double value, const char* component, std::size_t epoch) {
    if (!std::isfinite(value))
        throw Error("non-finite loss component " + std::string(component) + " at epoch " +
                    std::to_string(epoch) + "; aborting");
}

}  // namespace detail

// Plain mini-batch gradient descent with multiplicative per-epoch learning
// rate decay. Everything — initialization, data order, summation order — is
// a pure function of (config, seed), so two runs produce bit-identical
// checkpoints.
template <typename Scalar>
TrainResult<Scalar> train(const TrainConfigData& cfg) {
    cfg.validate();
    std::vector<Sample> samples = load_dataset(cfg.data, cfg.model);

    // Per-sample padded inputs and padded targets, cast once.
    std::vector<Matrix<Scalar>> inputs, targets;
    inputs.reserve(samples.size());
    targets.reserve(samples.size());
    for (const Sample& s : samples) {
        const MotionSequence padded =
            pad_observation(s.observed, static_cast<std::size_t>(cfg.model.t_f));
        inputs.push_back(padded.flat().template cast<Scalar>());
        Matrix<double> target(cfg.model.horizon(), cfg.model.coords());
        target.topRows(cfg.model.t_p) = s.observed.flat();
        target.bottomRows(cfg.model.t_f) = s.future.flat();
        targets.push_back(target.template cast<Scalar>());
    }

    TrainResult<Scalar> result{
        StmsModel<Scalar>(cfg.model, cfg.train.seed, cfg.train.adjacency_init_noise), {}, 0, {}};

    // Separate stream for the data order so it never aliases the init draws.
    Rng order_rng(cfg.train.seed ^ 0x6a09e667f3bcc909ULL);
    std::vector<std::size_t> indices(samples.size());
    std::iota(indices.begin(), indices.end(), std::size_t{0});

    double lr = cfg.train.learning_rate;
    for (std::size_t epoch = 1; epoch <= cfg.train.epochs; ++epoch) {
        shuffle_indices(indices, order_rng);
        double sum_l1 = 0, sum_st = 0, sum_con_s = 0, sum_con_t = 0, sum_total = 0;
        for (std::size_t begin = 0; begin < indices.size(); begin += cfg.train.batch_size) {
            const std::size_t end = std::min(begin + cfg.train.batch_size, indices.size());
            const auto batch_n = static_cast<double>(end - begin);

            ad::Graph<Scalar> g;
            ParamBinder<Scalar> bind(g, /*track=*/true);
            std::vector<int> l1_nodes, st_nodes;
            for (std::size_t i = begin; i < end; ++i) {
                const std::size_t idx = indices[i];
                const ForwardNodes<Scalar> fwd = build_forward(g, result.model, bind, inputs[idx]);
                const LossNodes<Scalar> per_sample =
                    build_sample_loss(g, result.model, fwd, targets[idx], cfg.loss);
                l1_nodes.push_back(per_sample.l1);
                st_nodes.push_back(per_sample.l_st);
            }
            const int l1_mean = g.mean(l1_nodes);
            const int st_mean = g.mean(st_nodes);
            const LossNodes<Scalar> loss =
                build_total_loss(g, result.model, bind, l1_mean, st_mean, cfg.loss);

            const double v_l1 = static_cast<double>(g.value(loss.l1)(0, 0));
            const double v_st = static_cast<double>(g.value(loss.l_st)(0, 0));
            const double v_con_s = static_cast<double>(g.value(loss.l_con_s)(0, 0));
            const double v_con_t = static_cast<double>(g.value(loss.l_con_t)(0, 0));
            const double v_total = static_cast<double>(g.value(loss.total)(0, 0));
            detail::require_finite(v_l1, "L1", epoch);
            detail::require_finite(v_st, "L_ST", epoch);
            detail::require_finite(v_con_s, "L_con^S", epoch);
            detail::require_finite(v_con_t, "L_con^T", epoch);
            detail::require_finite(v_total, "total", epoch);

            g.backward(loss.total);
            result.model.for_each_parameter([&](const std::string&, Matrix<Scalar>& p) {
                p -= static_cast<Scalar>(lr) * g.grad(bind.id_of(p));
            });
            ++result.steps;

            sum_l1 += v_l1 * batch_n;
            sum_st += v_st * batch_n;
            sum_con_s += v_con_s * batch_n;
            sum_con_t += v_con_t * batch_n;
            sum_total += v_total * batch_n;
        }
        const auto n = static_cast<double>(indices.size());
        result.log.push_back({epoch, sum_l1 / n, sum_st / n, sum_con_s / n, sum_con_t / n,
                              sum_total / n, lr});
        lr *= cfg.train.lr_decay;
    }
    result.samples = std::move(samples);
    return result;
}

}  // namespace stms
