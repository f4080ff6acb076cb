#pragma once

#include <cstdint>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "stms/errors.hpp"
#include "stms/flat_config.hpp"
#include "stms/graph_layers.hpp"
#include "stms/losses.hpp"
#include "stms/model.hpp"
#include "stms/synthetic.hpp"

namespace stms {

enum class Precision { single, double_prec };

inline Precision parse_precision(const std::string& s) {
    if (s == "single" || s == "float") return Precision::single;
    if (s == "double") return Precision::double_prec;
    throw ConfigError("precision must be 'single' or 'double', got '" + s + "'");
}

inline std::string precision_name(Precision p) {
    return p == Precision::single ? "single" : "double";
}

inline PenaltyTarget parse_penalty_target(const std::string& s) {
    if (s == "none") return PenaltyTarget::none;
    if (s == "adjacency" || s == "a") return PenaltyTarget::adjacency;
    if (s == "weight" || s == "w") return PenaltyTarget::weight;
    if (s == "both" || s == "wa" || s == "aw") return PenaltyTarget::both;
    throw ConfigError("constraint target must be none|adjacency|weight|both, got '" + s + "'");
}

inline std::string penalty_target_name(PenaltyTarget t) {
    switch (t) {
        case PenaltyTarget::none: return "none";
        case PenaltyTarget::adjacency: return "adjacency";
        case PenaltyTarget::weight: return "weight";
        case PenaltyTarget::both: return "both";
    }
    return "none";
}

struct TrainOptions {
    // Defaults are calibrated for unit-scale coordinates; millimeter-scale
    // corpora need a proportionally smaller rate (see README).
    double learning_rate = 0.1;
    double lr_decay = 0.995;  // multiplicative, per epoch
    std::size_t epochs = 200;
    std::size_t batch_size = 8;
    std::uint64_t seed = 0;
    Precision precision = Precision::single;
    double adjacency_init_noise = 1e-2;

    void validate() const {
        if (!(learning_rate > 0.0)) throw ConfigError("train: learning_rate must be positive");
        if (!(lr_decay > 0.0 && lr_decay <= 1.0))
            throw ConfigError("train: lr_decay must lie in (0, 1]");
        if (epochs < 1) throw ConfigError("train: epochs must be at least 1");
        if (batch_size < 1) throw ConfigError("train: batch_size must be at least 1");
        if (adjacency_init_noise < 0.0)
            throw ConfigError("train: adjacency_init_noise must be non-negative");
    }
};

// Either a canonical motion file or a synthetic generator spec; windowed with
// the model's (T_p, T_f) at the given stride.
struct DatasetSpec {
    std::optional<std::string> path;
    std::optional<SynthSpec> synth;
    std::size_t stride = 1;

    void validate() const {
        if (path.has_value() == synth.has_value())
            throw ConfigError("data: exactly one of data.path and data.synth.* must be set");
        if (stride < 1) throw ConfigError("data: stride must be at least 1");
    }
};

struct TrainConfigData {
    ModelConfig model;
    LossOptions loss;
    TrainOptions train;
    DatasetSpec data;
    std::vector<double> eval_horizons = {80.0, 160.0, 320.0, 400.0};

    void validate() const {
        model.validate();
        train.validate();
        data.validate();
    }
};

inline ModelConfig parse_model_config(const FlatConfig& cfg) {
    ModelConfig model;
    model.t_p = cfg.get_int("model.t_p", model.t_p);
    model.t_f = cfg.get_int("model.t_f", model.t_f);
    model.joints = cfg.get_int("model.joints", model.joints);
    model.dims = cfg.get_int("model.dims", model.dims);
    model.channels = cfg.get_int("model.channels", model.channels);
    model.depth = cfg.get_int("model.depth", model.depth);
    model.kernels = cfg.get_int("model.kernels", model.kernels);
    if (cfg.has("model.dct_truncation"))
        model.dct_truncation = cfg.get_int("model.dct_truncation");
    model.use_temporal = cfg.get_bool("model.use_temporal", model.use_temporal);
    model.use_spatial = cfg.get_bool("model.use_spatial", model.use_spatial);
    model.validate();
    return model;
}

inline TrainConfigData parse_train_config(const FlatConfig& cfg) {
    TrainConfigData out;
    out.model = parse_model_config(cfg);

    out.loss.w_st = cfg.get_double("loss.w_st", out.loss.w_st);
    out.loss.w_con = cfg.get_double("loss.w_con", out.loss.w_con);
    out.loss.squared = cfg.get_bool("loss.squared", out.loss.squared);
    out.loss.constraint_target =
        parse_penalty_target(cfg.get_string("loss.constraint_target", "adjacency"));

    out.train.learning_rate = cfg.get_double("train.learning_rate", out.train.learning_rate);
    out.train.lr_decay = cfg.get_double("train.lr_decay", out.train.lr_decay);
    out.train.epochs = static_cast<std::size_t>(cfg.get_int("train.epochs", static_cast<std::int64_t>(out.train.epochs)));
    out.train.batch_size = static_cast<std::size_t>(cfg.get_int("train.batch_size", static_cast<std::int64_t>(out.train.batch_size)));
    out.train.seed = cfg.get_uint("train.seed", out.train.seed);
    out.train.precision = parse_precision(cfg.get_string("train.precision", "single"));
    out.train.adjacency_init_noise =
        cfg.get_double("train.adjacency_init_noise", out.train.adjacency_init_noise);

    if (cfg.has("data.path")) out.data.path = cfg.get_string("data.path");
    if (cfg.has("data.synth.frames")) {
        SynthSpec synth;
        synth.joints = out.model.joints;
        synth.dims = out.model.dims;
        synth.frames = static_cast<std::size_t>(cfg.get_int("data.synth.frames"));
        synth.frame_rate_hz = cfg.get_double("data.synth.rate", synth.frame_rate_hz);
        synth.seed = cfg.get_uint("data.synth.seed", synth.seed);
        synth.amplitude_range[0] = cfg.get_double("data.synth.amp_lo", synth.amplitude_range[0]);
        synth.amplitude_range[1] = cfg.get_double("data.synth.amp_hi", synth.amplitude_range[1]);
        synth.frequency_range[0] = cfg.get_double("data.synth.freq_lo", synth.frequency_range[0]);
        synth.frequency_range[1] = cfg.get_double("data.synth.freq_hi", synth.frequency_range[1]);
        synth.validate();
        out.data.synth = synth;
    }
    out.data.stride = static_cast<std::size_t>(cfg.get_int("data.stride", 1));

    if (cfg.has("eval.horizons_ms")) out.eval_horizons = cfg.get_double_list("eval.horizons_ms");

    cfg.reject_unused();
    out.validate();
    return out;
}

// Round-trippable flat text form; this is what checkpoints embed as their
// config snapshot.
inline std::string serialize_train_config(const TrainConfigData& cfg) {
    std::ostringstream out;
    out.precision(17);
    out << "model.t_p = " << cfg.model.t_p << "\n";
    out << "model.t_f = " << cfg.model.t_f << "\n";
    out << "model.joints = " << cfg.model.joints << "\n";
    out << "model.dims = " << cfg.model.dims << "\n";
    out << "model.channels = " << cfg.model.channels << "\n";
    out << "model.depth = " << cfg.model.depth << "\n";
    out << "model.kernels = " << cfg.model.kernels << "\n";
    if (cfg.model.dct_truncation)
        out << "model.dct_truncation = " << *cfg.model.dct_truncation << "\n";
    out << "model.use_temporal = " << (cfg.model.use_temporal ? "true" : "false") << "\n";
    out << "model.use_spatial = " << (cfg.model.use_spatial ? "true" : "false") << "\n";
    out << "loss.w_st = " << cfg.loss.w_st << "\n";
    out << "loss.w_con = " << cfg.loss.w_con << "\n";
    out << "loss.squared = " << (cfg.loss.squared ? "true" : "false") << "\n";
    out << "loss.constraint_target = " << penalty_target_name(cfg.loss.constraint_target) << "\n";
    out << "train.learning_rate = " << cfg.train.learning_rate << "\n";
    out << "train.lr_decay = " << cfg.train.lr_decay << "\n";
    out << "train.epochs = " << cfg.train.epochs << "\n";
    out << "train.batch_size = " << cfg.train.batch_size << "\n";
    out << "train.seed = " << cfg.train.seed << "\n";
    out << "train.precision = " << precision_name(cfg.train.precision) << "\n";
    out << "train.adjacency_init_noise = " << cfg.train.adjacency_init_noise << "\n";
    if (cfg.data.path) out << "data.path = " << *cfg.data.path << "\n";
    if (cfg.data.synth) {
        const SynthSpec& s = *cfg.data.synth;
        out << "data.synth.frames = " << s.frames << "\n";
        out << "data.synth.rate = " << s.frame_rate_hz << "\n";
        out << "data.synth.seed = " << s.seed << "\n";
        out << "data.synth.amp_lo = " << s.amplitude_range[0] << "\n";
        out << "data.synth.amp_hi = " << s.amplitude_range[1] << "\n";
        out << "data.synth.freq_lo = " << s.frequency_range[0] << "\n";
        out << "data.synth.freq_hi = " << s.frequency_range[1] << "\n";
    }
    out << "data.stride = " << cfg.data.stride << "\n";
    out << "eval.horizons_ms = ";
    for (std::size_t i = 0; i < cfg.eval_horizons.size(); ++i)
        out << (i ? "," : "") << cfg.eval_horizons[i];
    out << "\n";
    return out.str();
}

}  // namespace stms
