#pragma once

#include <cstdio>
#include <istream>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "stms/errors.hpp"
#include "stms/metrics.hpp"
#include "stms/train.hpp"
#include "stms/train_config.hpp"

namespace stms {

// One ablation configuration: which branches exist, which loss terms are
// active, and what the consistency penalty compares. `lambda` overrides both
// loss weights at once (the uniform objective); w_st / w_con override them
// independently (the generalized beta objective).
struct AblationSpec {
    std::string label;
    bool use_spatial_branch = true;
    bool use_temporal_branch = true;
    bool use_l_con = true;
    bool use_l_st = true;
    PenaltyTarget constraint_target = PenaltyTarget::adjacency;
    std::optional<double> lambda;
    std::optional<double> w_st;
    std::optional<double> w_con;

    void validate() const {
        if (label.empty()) throw ConfigError("ablation spec needs a label");
        if (!use_spatial_branch && !use_temporal_branch)
            throw ConfigError("ablation '" + label + "': at least one branch must be enabled");
        if (use_l_st && !(use_spatial_branch && use_temporal_branch))
            throw ConfigError("ablation '" + label + "': L_ST requires both branches");
        if (use_l_con && constraint_target == PenaltyTarget::none)
            throw ConfigError("ablation '" + label +
                              "': L_con enabled but constraint target is none");
    }
};

// Spec file format: one spec per line,
//   <label> [branches=ts|t|s] [lst=on|off] [lcon=off|a|w|both]
//           [lambda=<x>] [w_st=<x>] [w_con=<x>]
// '#' comments and blank lines are skipped.
inline std::vector<AblationSpec> parse_ablation_specs(std::istream& in,
                                                      const std::string& source = "<specs>") {
    std::vector<AblationSpec> specs;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        std::istringstream ls(line);
        std::string label;
        if (!(ls >> label)) continue;
        AblationSpec spec;
        spec.label = label;
        std::string token;
        while (ls >> token) {
            const auto eq = token.find('=');
            if (eq == std::string::npos)
                throw ParseError(source + ":" + std::to_string(line_no) +
                                 ": expected key=value, got '" + token + "'");
            const std::string key = token.substr(0, eq);
            const std::string value = token.substr(eq + 1);
            if (key == "branches") {
                spec.use_temporal_branch = value.find('t') != std::string::npos;
                spec.use_spatial_branch = value.find('s') != std::string::npos;
                if (!spec.use_temporal_branch && !spec.use_spatial_branch)
                    throw ParseError(source + ":" + std::to_string(line_no) +
                                     ": branches must name t, s, or both");
            } else if (key == "lst") {
                spec.use_l_st = (value == "on");
                if (value != "on" && value != "off")
                    throw ParseError(source + ":" + std::to_string(line_no) +
                                     ": lst must be on or off");
            } else if (key == "lcon") {
                if (value == "off") {
                    spec.use_l_con = false;
                    spec.constraint_target = PenaltyTarget::none;
                } else {
                    spec.use_l_con = true;
                    spec.constraint_target = parse_penalty_target(value);
                }
            } else if (key == "lambda") {
                spec.lambda = std::stod(value);
            } else if (key == "w_st") {
                spec.w_st = std::stod(value);
            } else if (key == "w_con") {
                spec.w_con = std::stod(value);
            } else {
                throw ParseError(source + ":" + std::to_string(line_no) + ": unknown key '" +
                                 key + "'");
            }
        }
        spec.validate();
        specs.push_back(std::move(spec));
    }
    return specs;
}

// Rewrites a base config for one ablation run. Disabled loss terms are
// realized as zero weights, so a run with L_con and L_ST off is exactly the
// full wiring at lambda = 0.
inline TrainConfigData apply_ablation(TrainConfigData cfg, const AblationSpec& spec) {
    spec.validate();
    cfg.model.use_temporal = spec.use_temporal_branch;
    cfg.model.use_spatial = spec.use_spatial_branch;
    if (spec.lambda) {
        cfg.loss.w_st = *spec.lambda;
        cfg.loss.w_con = *spec.lambda;
    }
    if (spec.w_st) cfg.loss.w_st = *spec.w_st;
    if (spec.w_con) cfg.loss.w_con = *spec.w_con;
    if (spec.use_l_con) {
        cfg.loss.constraint_target = spec.constraint_target;
    } else {
        cfg.loss.constraint_target = PenaltyTarget::none;
        cfg.loss.w_con = 0.0;
    }
    if (!spec.use_l_st) cfg.loss.w_st = 0.0;
    cfg.validate();
    return cfg;
}

template <typename Scalar>
struct AblationRun {
    AblationSpec spec;
    TrainConfigData config;
    std::vector<EpochLog> log;
    HorizonTable table;
    std::size_t parameter_scalars = 0;
};

// Trains one model per spec on the same data and seed, then evaluates each
// with the shared horizon list. Single-branch specs report that branch's
// final-layer output through the usual final-prediction rule.
template <typename Scalar>
std::vector<AblationRun<Scalar>> run_ablation(const TrainConfigData& base,
                                              const std::vector<AblationSpec>& specs) {
    if (specs.empty()) throw ConfigError("run_ablation: no specs given");
    std::vector<AblationRun<Scalar>> runs;
    runs.reserve(specs.size());
    for (const AblationSpec& spec : specs) {
        AblationRun<Scalar> run;
        run.spec = spec;
        run.config = apply_ablation(base, spec);
        TrainResult<Scalar> trained = train<Scalar>(run.config);
        run.parameter_scalars = trained.model.scalar_parameter_count();
        run.log = std::move(trained.log);
        run.table = evaluate_horizons(make_model_predictor(std::move(trained.model)),
                                      trained.samples, base.eval_horizons);
        runs.push_back(std::move(run));
    }
    return runs;
}

template <typename Scalar>
void write_ablation_csv(std::ostream& out, const std::vector<AblationRun<Scalar>>& runs) {
    out << "label,horizon_ms,frame_index,mpjpe_mm\n";
    char buf[64];
    for (const auto& run : runs) {
        for (const HorizonRow& row : run.table.rows) {
            std::snprintf(buf, sizeof(buf), "%.9g", row.horizon_ms);
            out << run.spec.label << ',' << buf << ',' << row.frame_index << ',';
            std::snprintf(buf, sizeof(buf), "%.9g", row.mpjpe_mm);
            out << buf << '\n';
        }
        std::snprintf(buf, sizeof(buf), "%.9g", run.table.average_mm);
        out << run.spec.label << ",average,," << buf << '\n';
    }
}

// --- preset spec lists -------------------------------------------------------

// The six block-design rows: each branch alone with and without the
// consistency penalty, both branches with the cross-domain loss, and the
// full model.
inline std::vector<AblationSpec> block_design_specs() {
    std::vector<AblationSpec> specs(6);
    specs[0] = {"gs_l1", true, false, false, false, PenaltyTarget::none, {}, {}, {}};
    specs[1] = {"gs_lcon_l1", true, false, true, false, PenaltyTarget::adjacency, {}, {}, {}};
    specs[2] = {"gt_l1", false, true, false, false, PenaltyTarget::none, {}, {}, {}};
    specs[3] = {"gt_lcon_l1", false, true, true, false, PenaltyTarget::adjacency, {}, {}, {}};
    specs[4] = {"gs_gt_lst_l1", true, true, false, true, PenaltyTarget::none, {}, {}, {}};
    specs[5] = {"full", true, true, true, true, PenaltyTarget::adjacency, {}, {}, {}};
    return specs;
}

// The four constraint-placement variants: none, weights only, adjacency
// only, both.
inline std::vector<AblationSpec> constraint_variant_specs() {
    std::vector<AblationSpec> specs(4);
    specs[0] = {"constraint_none", true, true, false, true, PenaltyTarget::none, {}, {}, {}};
    specs[1] = {"constraint_w", true, true, true, true, PenaltyTarget::weight, {}, {}, {}};
    specs[2] = {"constraint_a", true, true, true, true, PenaltyTarget::adjacency, {}, {}, {}};
    specs[3] = {"constraint_wa", true, true, true, true, PenaltyTarget::both, {}, {}, {}};
    return specs;
}

// Uniform-lambda sweep over the full wiring.
inline std::vector<AblationSpec> lambda_sweep_specs(const std::vector<double>& lambdas) {
    std::vector<AblationSpec> specs;
    specs.reserve(lambdas.size());
    for (const double lambda : lambdas) {
        char buf[64];
        std::snprintf(buf, sizeof(buf), "lambda_%g", lambda);
        AblationSpec spec{buf, true, true, true, true, PenaltyTarget::adjacency, lambda, {}, {}};
        specs.push_back(std::move(spec));
    }
    return specs;
}

}  // namespace stms
