#pragma once

#include <cmath>
#include <cstdint>
#include <string>

#include "stms/autodiff.hpp"
#include "stms/losses.hpp"
#include "stms/model.hpp"
#include "stms/random.hpp"

namespace stms {

struct GradCheckReport {
    double max_rel_error = 0.0;
    std::string worst_parameter;  // "name[i,j]"
    double worst_analytic = 0.0;
    double worst_numeric = 0.0;
    std::size_t entries_checked = 0;
};

namespace detail {

// Relative-error floor: central differences on an O(1)-scale loss are good to
// about 1e-10 absolute, so pairs of gradients this small are treated as
// matching rather than amplified into spurious relative errors.
inline constexpr double kGradCheckFloor = 1e-5;

inline double relative_error(double a, double b) {
    const double denom = std::max({std::abs(a), std::abs(b), kGradCheckFloor});
    return std::abs(a - b) / denom;
}

}  // namespace detail

// Double-precision finite-difference oracle over every parameter of the full
// model. Builds a random model and a random O(1)-scale sample from the seed,
// then compares the analytic gradient of the weighted total loss against
// central differences, entry by entry.
inline GradCheckReport gradient_check(const ModelConfig& config, std::uint64_t seed,
                                      double epsilon, LossOptions opts = {}) {
    if (!(epsilon >= 1e-8 && epsilon <= 1e-4))
        throw ConfigError("gradient_check: epsilon must lie in [1e-8, 1e-4]");
    config.validate();
    StmsModel<double> model(config, seed);

    // Unit-scale coordinates keep the loss O(1), which keeps the cancellation
    // noise of the central difference far below the relative-error floor.
    Rng rng(seed ^ 0xbb67ae8584caa73bULL);

    // Redraw every parameter uniformly: the check must run at a generic point,
    // away from the training init's zero decoder where the cross-branch loss
    // sits exactly on its norm kink.
    model.for_each_parameter([&](const std::string&, Matrix<double>& p) {
        for (Index i = 0; i < p.rows(); ++i)
            for (Index j = 0; j < p.cols(); ++j) p(i, j) = rng.uniform(-0.7, 0.7);
    });
    const Index horizon = config.horizon();
    const Index coords = config.coords();
    Matrix<double> observed(config.t_p, coords);
    Matrix<double> future(config.t_f, coords);
    for (Index i = 0; i < config.t_p; ++i)
        for (Index j = 0; j < coords; ++j) observed(i, j) = rng.uniform(-1.0, 1.0);
    for (Index i = 0; i < config.t_f; ++i)
        for (Index j = 0; j < coords; ++j) future(i, j) = rng.uniform(-1.0, 1.0);

    Matrix<double> padded(horizon, coords);
    padded.topRows(config.t_p) = observed;
    padded.bottomRows(config.t_f).rowwise() = observed.row(config.t_p - 1);
    Matrix<double> target(horizon, coords);
    target.topRows(config.t_p) = observed;
    target.bottomRows(config.t_f) = future;

    const auto loss_value = [&](ad::Graph<double>& g, ParamBinder<double>& bind) {
        const ForwardNodes<double> fwd = build_forward(g, model, bind, padded);
        const LossNodes<double> sample = build_sample_loss(g, model, fwd, target, opts);
        return build_total_loss(g, model, bind, sample.l1, sample.l_st, opts);
    };

    const auto evaluate = [&]() -> double {
        ad::Graph<double> g;
        ParamBinder<double> bind(g, false);
        return g.value(loss_value(g, bind).total)(0, 0);
    };

    // Analytic pass.
    ad::Graph<double> g;
    ParamBinder<double> bind(g, true);
    const LossNodes<double> loss = loss_value(g, bind);
    g.backward(loss.total);

    GradCheckReport report;
    model.for_each_parameter([&](const std::string& name, Matrix<double>& p) {
        const Matrix<double> analytic = g.grad(bind.id_of(p));
        for (Index i = 0; i < p.rows(); ++i) {
            for (Index j = 0; j < p.cols(); ++j) {
                const double saved = p(i, j);
                p(i, j) = saved + epsilon;
                const double up = evaluate();
                p(i, j) = saved - epsilon;
                const double down = evaluate();
                p(i, j) = saved;
                const double numeric = (up - down) / (2.0 * epsilon);
                const double rel = detail::relative_error(analytic(i, j), numeric);
                ++report.entries_checked;
                if (rel > report.max_rel_error) {
                    report.max_rel_error = rel;
                    report.worst_parameter = name + "[" + std::to_string(i) + "," +
                                             std::to_string(j) + "]";
                    report.worst_analytic = analytic(i, j);
                    report.worst_numeric = numeric;
                }
            }
        }
    });
    return report;
}

}  // namespace stms
