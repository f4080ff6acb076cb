// Command-line surface for the STMS-GCN library: training, evaluation,
// gradient checking, ablation sweeps, and synthetic data generation.
//
// Exit codes: 0 success, 1 usage error (bad arguments, missing input files),
// 2 runtime failure.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "stms/stms.hpp"

namespace fs = std::filesystem;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitRuntime = 2;

// Thrown for problems the user can fix on the command line.
struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct CommonFlags {
    std::optional<std::uint64_t> seed;
    std::optional<std::string> precision;
    std::optional<std::string> out_dir;
};

void add_common(CLI::App* cmd, CommonFlags& flags) {
    cmd->add_option("--seed", flags.seed, "Override the config seed");
    cmd->add_option("--precision", flags.precision, "single or double")
        ->check(CLI::IsMember({"single", "double"}));
    cmd->add_option("--out", flags.out_dir, "Directory for CSV and checkpoint output");
}

fs::path ensure_out_dir(const CommonFlags& flags) {
    const fs::path dir = flags.out_dir ? fs::path(*flags.out_dir) : fs::path(".");
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw stms::IoError("cannot create output directory " + dir.string());
    return dir;
}

stms::TrainConfigData load_train_config(const std::string& path, const CommonFlags& flags) {
    if (!fs::exists(path)) throw UsageError("config file not found: " + path);
    stms::TrainConfigData cfg = stms::parse_train_config(stms::FlatConfig::parse_file(path));
    if (flags.seed) cfg.train.seed = *flags.seed;
    if (flags.precision) cfg.train.precision = stms::parse_precision(*flags.precision);
    return cfg;
}

void write_file(const fs::path& path, const std::string& contents) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw stms::IoError("cannot write " + path.string());
    out << contents;
}

// --- train --------------------------------------------------------------------

template <typename Scalar>
int run_train_typed(const stms::TrainConfigData& cfg, const fs::path& out_dir) {
    const stms::TrainResult<Scalar> result = stms::train<Scalar>(cfg);
    const stms::EpochLog& last = result.log.back();
    std::printf("trained %zu epochs (%llu steps): l1=%.6g l_st=%.6g l_con_s=%.6g l_con_t=%.6g total=%.6g\n",
                result.log.size(), static_cast<unsigned long long>(result.steps), last.l1,
                last.l_st, last.l_con_s, last.l_con_t, last.total);

    std::ostringstream log_csv;
    stms::write_train_log_csv(log_csv, result.log);
    write_file(out_dir / "train_log.csv", log_csv.str());
    stms::save_checkpoint(result.model, result.steps, stms::serialize_train_config(cfg),
                          (out_dir / "checkpoint.stms").string());
    std::printf("wrote %s and %s\n", (out_dir / "checkpoint.stms").c_str(),
                (out_dir / "train_log.csv").c_str());
    return kExitOk;
}

int run_train(const std::string& config_path, const CommonFlags& flags) {
    const stms::TrainConfigData cfg = load_train_config(config_path, flags);
    const fs::path out_dir = ensure_out_dir(flags);
    return cfg.train.precision == stms::Precision::double_prec
               ? run_train_typed<double>(cfg, out_dir)
               : run_train_typed<float>(cfg, out_dir);
}

// --- eval ---------------------------------------------------------------------

struct EvalFlags {
    std::string checkpoint;
    std::string data;
    std::string horizons;
    std::string predictor = "model";
    bool fusion = false;
    std::optional<std::int64_t> t_p, t_f;
    std::size_t stride = 1;
};

template <typename Scalar>
stms::Predictor checkpoint_predictor(const std::string& path, bool fusion,
                                     stms::ModelConfig& model_cfg) {
    stms::LoadedCheckpoint<Scalar> loaded = stms::load_checkpoint<Scalar>(path);
    model_cfg = loaded.model.config();
    return stms::make_model_predictor(std::move(loaded.model), fusion);
}

int run_eval(const EvalFlags& eval, const CommonFlags& flags) {
    std::vector<double> horizons;
    {
        std::stringstream ss(eval.horizons);
        std::string item;
        while (std::getline(ss, item, ','))
            if (!item.empty()) horizons.push_back(std::stod(item));
        if (horizons.empty()) throw UsageError("--horizons must list at least one value");
    }
    if (!fs::exists(eval.data)) throw UsageError("data file not found: " + eval.data);

    stms::ModelConfig model_cfg;
    stms::Predictor predictor;
    if (eval.predictor == "model") {
        if (eval.checkpoint == "-")
            throw UsageError("predictor 'model' needs a checkpoint path");
        if (!fs::exists(eval.checkpoint))
            throw UsageError("checkpoint not found: " + eval.checkpoint);
        const std::string precision =
            flags.precision.value_or("");  // sniff from the file if unspecified
        if (precision == "double") {
            predictor = checkpoint_predictor<double>(eval.checkpoint, eval.fusion, model_cfg);
        } else if (precision == "single") {
            predictor = checkpoint_predictor<float>(eval.checkpoint, eval.fusion, model_cfg);
        } else {
            try {
                predictor = checkpoint_predictor<float>(eval.checkpoint, eval.fusion, model_cfg);
            } catch (const stms::ConfigError&) {
                predictor = checkpoint_predictor<double>(eval.checkpoint, eval.fusion, model_cfg);
            }
        }
    } else {
        // Oracle and zero-velocity predictors have no checkpoint; they need
        // window lengths from the command line (or a checkpoint given anyway).
        if (eval.checkpoint != "-" && fs::exists(eval.checkpoint)) {
            try {
                model_cfg = stms::load_checkpoint<float>(eval.checkpoint).model.config();
            } catch (const stms::ConfigError&) {
                model_cfg = stms::load_checkpoint<double>(eval.checkpoint).model.config();
            }
        } else if (eval.t_p && eval.t_f) {
            model_cfg.t_p = *eval.t_p;
            model_cfg.t_f = *eval.t_f;
        } else {
            throw UsageError("predictor '" + eval.predictor +
                             "' needs either a checkpoint or --tp and --tf");
        }
        predictor = (eval.predictor == "oracle") ? stms::make_oracle_predictor()
                                                 : stms::make_zero_velocity_predictor();
    }

    const stms::MotionSequence seq = stms::load_canonical(eval.data);
    const std::vector<stms::Sample> samples =
        stms::window_sequence(seq, static_cast<std::size_t>(model_cfg.t_p),
                              static_cast<std::size_t>(model_cfg.t_f), eval.stride);
    if (samples.empty())
        throw stms::InvalidInputError("data yields no evaluation windows for T_p=" +
                                      std::to_string(model_cfg.t_p) +
                                      ", T_f=" + std::to_string(model_cfg.t_f));

    const stms::HorizonTable table = stms::evaluate_horizons(predictor, samples, horizons);
    const std::string csv = stms::horizon_csv(table);
    std::fputs(csv.c_str(), stdout);
    if (flags.out_dir) write_file(ensure_out_dir(flags) / "horizons.csv", csv);
    return kExitOk;
}

// --- gradcheck ------------------------------------------------------------------

int run_gradcheck(double epsilon, const CommonFlags& flags) {
    // Canonical desk-scale model; gradient checks always run in double
    // precision because finite differences drown in single.
    stms::ModelConfig cfg;
    cfg.t_p = 3;
    cfg.t_f = 2;
    cfg.joints = 2;
    cfg.dims = 2;
    cfg.channels = 4;
    cfg.depth = 2;
    cfg.kernels = 2;
    const std::uint64_t seed = flags.seed.value_or(1);
    const stms::GradCheckReport report = stms::gradient_check(cfg, seed, epsilon);
    std::printf("max relative error %.3e at %s (analytic %.6e, numeric %.6e, %zu entries)\n",
                report.max_rel_error, report.worst_parameter.c_str(), report.worst_analytic,
                report.worst_numeric, report.entries_checked);
    if (flags.out_dir) {
        char buf[512];
        std::snprintf(buf, sizeof(buf),
                      "max_rel_error,worst_parameter,analytic,numeric,entries\n%.9e,%s,%.9e,%.9e,%zu\n",
                      report.max_rel_error, report.worst_parameter.c_str(),
                      report.worst_analytic, report.worst_numeric, report.entries_checked);
        write_file(ensure_out_dir(flags) / "gradcheck.csv", buf);
    }
    return kExitOk;
}

// --- ablate ---------------------------------------------------------------------

template <typename Scalar>
int run_ablate_typed(const stms::TrainConfigData& base, const std::vector<stms::AblationSpec>& specs,
                     const fs::path& out_dir) {
    const std::vector<stms::AblationRun<Scalar>> runs = stms::run_ablation<Scalar>(base, specs);
    std::ostringstream csv;
    stms::write_ablation_csv(csv, runs);
    std::fputs(csv.str().c_str(), stdout);
    write_file(out_dir / "ablation.csv", csv.str());
    std::printf("wrote %s (%zu runs)\n", (out_dir / "ablation.csv").c_str(), runs.size());
    return kExitOk;
}

int run_ablate(const std::string& config_path, const std::string& specs_path,
               const CommonFlags& flags) {
    const stms::TrainConfigData base = load_train_config(config_path, flags);
    if (!fs::exists(specs_path)) throw UsageError("specs file not found: " + specs_path);
    std::ifstream in(specs_path);
    const std::vector<stms::AblationSpec> specs = stms::parse_ablation_specs(in, specs_path);
    if (specs.empty()) throw UsageError("specs file lists no ablation specs: " + specs_path);
    const fs::path out_dir = ensure_out_dir(flags);
    return base.train.precision == stms::Precision::double_prec
               ? run_ablate_typed<double>(base, specs, out_dir)
               : run_ablate_typed<float>(base, specs, out_dir);
}

// --- synth ----------------------------------------------------------------------

int run_synth(const std::string& spec_path, const std::string& out_path,
              const CommonFlags& flags) {
    if (!fs::exists(spec_path)) throw UsageError("synth spec file not found: " + spec_path);
    const stms::FlatConfig cfg = stms::FlatConfig::parse_file(spec_path);
    stms::SynthSpec spec;
    spec.joints = cfg.get_int("joints", spec.joints);
    spec.dims = cfg.get_int("dims", spec.dims);
    spec.frames = static_cast<std::size_t>(cfg.get_int("frames", static_cast<std::int64_t>(spec.frames)));
    spec.frame_rate_hz = cfg.get_double("rate", spec.frame_rate_hz);
    spec.seed = cfg.get_uint("seed", spec.seed);
    spec.amplitude_range[0] = cfg.get_double("amp_lo", spec.amplitude_range[0]);
    spec.amplitude_range[1] = cfg.get_double("amp_hi", spec.amplitude_range[1]);
    spec.frequency_range[0] = cfg.get_double("freq_lo", spec.frequency_range[0]);
    spec.frequency_range[1] = cfg.get_double("freq_hi", spec.frequency_range[1]);
    cfg.reject_unused();
    if (flags.seed) spec.seed = *flags.seed;
    const stms::MotionSequence seq = stms::synthesize_motion(spec);
    stms::save_canonical(seq, out_path);
    std::printf("wrote %s: %zu frames, J=%lld D=%lld at %g Hz\n", out_path.c_str(), seq.size(),
                static_cast<long long>(seq.joint_count()), static_cast<long long>(seq.dims()),
                seq.frame_rate_hz());
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"STMS-GCN motion prediction: dual-branch multi-subgraph GCN training and evaluation"};
    app.require_subcommand(1);

    CommonFlags train_flags, eval_flags_common, grad_flags, ablate_flags, synth_flags;

    std::string train_config;
    CLI::App* train_cmd = app.add_subcommand("train", "Train a model from a config file");
    train_cmd->add_option("config", train_config, "Flat key=value config file")->required();
    add_common(train_cmd, train_flags);

    EvalFlags eval;
    CLI::App* eval_cmd = app.add_subcommand("eval", "Evaluate MPJPE at fixed horizons");
    eval_cmd->add_option("checkpoint", eval.checkpoint, "Checkpoint file, or '-' with --tp/--tf")
        ->required();
    eval_cmd->add_option("data", eval.data, "Canonical motion file")->required();
    eval_cmd->add_option("--horizons", eval.horizons, "Comma-separated horizons in ms")
        ->required();
    eval_cmd->add_option("--predictor", eval.predictor, "model, oracle, or zero-velocity")
        ->check(CLI::IsMember({"model", "oracle", "zero-velocity"}));
    eval_cmd->add_flag("--fusion", eval.fusion,
                       "Average the deepest temporal and spatial predictions");
    eval_cmd->add_option("--tp", eval.t_p, "Observed window length for checkpoint-free eval");
    eval_cmd->add_option("--tf", eval.t_f, "Future window length for checkpoint-free eval");
    eval_cmd->add_option("--stride", eval.stride, "Window stride over the data file");
    add_common(eval_cmd, eval_flags_common);

    double epsilon = 1e-6;
    CLI::App* grad_cmd =
        app.add_subcommand("gradcheck", "Finite-difference gradient check on the desk model");
    grad_cmd->add_option("--eps", epsilon, "Central-difference perturbation");
    add_common(grad_cmd, grad_flags);

    std::string ablate_config, ablate_specs;
    CLI::App* ablate_cmd = app.add_subcommand("ablate", "Train and evaluate a list of ablation specs");
    ablate_cmd->add_option("config", ablate_config, "Base train config")->required();
    ablate_cmd->add_option("specs", ablate_specs, "Ablation spec file, one spec per line")
        ->required();
    add_common(ablate_cmd, ablate_flags);

    std::string synth_spec, synth_out;
    CLI::App* synth_cmd = app.add_subcommand("synth", "Generate deterministic synthetic motion");
    synth_cmd->add_option("spec", synth_spec, "Flat key=value synth spec file")->required();
    synth_cmd->add_option("output", synth_out, "Output canonical motion file")->required();
    add_common(synth_cmd, synth_flags);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? kExitOk : kExitUsage;
    }

    try {
        if (train_cmd->parsed()) return run_train(train_config, train_flags);
        if (eval_cmd->parsed()) return run_eval(eval, eval_flags_common);
        if (grad_cmd->parsed()) return run_gradcheck(epsilon, grad_flags);
        if (ablate_cmd->parsed()) return run_ablate(ablate_config, ablate_specs, ablate_flags);
        if (synth_cmd->parsed()) return run_synth(synth_spec, synth_out, synth_flags);
    } catch (const UsageError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitUsage;
    } catch (const stms::ConfigError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitUsage;
    } catch (const stms::ParseError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitUsage;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "runtime failure: %s\n", e.what());
        return kExitRuntime;
    }
    return kExitUsage;
}
