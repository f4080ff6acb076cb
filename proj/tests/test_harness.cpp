#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "stms/ablation.hpp"
#include "stms/checkpoint.hpp"
#include "stms/flat_config.hpp"
#include "stms/gradcheck.hpp"
#include "stms/train.hpp"
#include "stms/train_config.hpp"
#include "test_util.hpp"

using namespace stms;

namespace {

namespace fs = std::filesystem;

fs::path temp_file(const char* name) { return fs::temp_directory_path() / name; }

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// Desk-scale config over a tiny unit-scale synthetic dataset; cheap enough
// for unit tests at a few hundred epochs.
TrainConfigData desk_config() {
    TrainConfigData cfg;
    cfg.model.t_p = 3;
    cfg.model.t_f = 2;
    cfg.model.joints = 2;
    cfg.model.dims = 2;
    cfg.model.channels = 4;
    cfg.model.depth = 2;
    cfg.model.kernels = 2;
    cfg.train.epochs = 10;
    cfg.train.batch_size = 2;
    cfg.train.seed = 5;
    cfg.train.learning_rate = 1e-3;
    SynthSpec synth;
    synth.joints = 2;
    synth.dims = 2;
    synth.frames = 6;  // two stride-1 windows of length 5
    synth.seed = 21;
    synth.amplitude_range = {0.5, 2.0};
    cfg.data.synth = synth;
    cfg.eval_horizons = {80.0};
    return cfg;
}

template <typename Scalar>
std::vector<Matrix<Scalar>> snapshot_params(const StmsModel<Scalar>& model) {
    std::vector<Matrix<Scalar>> out;
    model.for_each_parameter(
        [&](const std::string&, const Matrix<Scalar>& m) { out.push_back(m); });
    return out;
}

}  // namespace

TEST_CASE("flat config parsing") {
    const std::string text =
        "# comment\n"
        "model.t_p = 4\n"
        "model.channels=8   # trailing comment\n"
        "\n"
        "loss.w_st = 0.25\n";
    const FlatConfig cfg = FlatConfig::parse_string(text);
    REQUIRE(cfg.get_int("model.t_p") == 4);
    REQUIRE(cfg.get_int("model.channels") == 8);
    REQUIRE(cfg.get_double("loss.w_st") == 0.25);
    REQUIRE(cfg.get_double("loss.w_con", 0.1) == 0.1);

    REQUIRE_THROWS_AS(FlatConfig::parse_string("novalue\n"), ParseError);
    REQUIRE_THROWS_AS(FlatConfig::parse_string("a=1\na=2\n"), ParseError);
    REQUIRE_THROWS_AS(cfg.get_string("missing.key"), ConfigError);
    REQUIRE_THROWS_AS(FlatConfig::parse_string("x = abc\n").get_double("x"), ConfigError);
    REQUIRE_THROWS_AS(FlatConfig::parse_string("x = maybe\n").get_bool("x"), ConfigError);
}

TEST_CASE("train config parse, defaults and round-trip") {
    const std::string text =
        "model.t_p = 3\n"
        "model.t_f = 2\n"
        "model.joints = 2\n"
        "model.dims = 2\n"
        "model.channels = 4\n"
        "model.depth = 2\n"
        "model.kernels = 2\n"
        "train.epochs = 7\n"
        "train.seed = 11\n"
        "data.synth.frames = 6\n"
        "data.synth.seed = 3\n"
        "eval.horizons_ms = 80,160\n";
    const TrainConfigData cfg = parse_train_config(FlatConfig::parse_string(text));
    REQUIRE(cfg.model.depth == 2);
    REQUIRE(cfg.loss.w_st == 0.1);  // paper-default lambda
    REQUIRE(cfg.loss.w_con == 0.1);
    REQUIRE(cfg.loss.constraint_target == PenaltyTarget::adjacency);
    REQUIRE(cfg.train.epochs == 7);
    REQUIRE(cfg.train.precision == Precision::single);
    REQUIRE(cfg.data.synth.has_value());
    REQUIRE(cfg.data.synth->joints == 2);
    REQUIRE(cfg.eval_horizons == std::vector<double>{80.0, 160.0});

    // Serialization round-trips through the parser.
    const TrainConfigData back =
        parse_train_config(FlatConfig::parse_string(serialize_train_config(cfg)));
    REQUIRE(back.model.t_p == cfg.model.t_p);
    REQUIRE(back.loss.w_st == cfg.loss.w_st);
    REQUIRE(back.train.seed == cfg.train.seed);
    REQUIRE(back.data.synth->frames == cfg.data.synth->frames);

    REQUIRE_THROWS_AS(parse_train_config(FlatConfig::parse_string(text + "bogus.key = 1\n")),
                      ConfigError);
    REQUIRE_THROWS_AS(parse_train_config(FlatConfig::parse_string(
                          text + "data.path = x.motion\n")),
                      ConfigError);  // both dataset flavors at once
}

TEST_CASE("checkpoint round-trip is bit-exact") {
    const TrainConfigData cfg = desk_config();
    StmsModel<double> model(cfg.model, 123);
    const auto path = temp_file("stms_ckpt_roundtrip.stms");
    save_checkpoint(model, 42, serialize_train_config(cfg), path.string());

    const LoadedCheckpoint<double> loaded = load_checkpoint<double>(path.string());
    REQUIRE(loaded.step == 42);
    REQUIRE(loaded.config.model.channels == cfg.model.channels);
    const auto a = snapshot_params(model);
    const auto b = snapshot_params(loaded.model);
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) REQUIRE(a[i] == b[i]);
}

TEST_CASE("checkpoint round-trips a truncated-DCT model") {
    TrainConfigData cfg = desk_config();
    cfg.model.dct_truncation = 3;
    StmsModel<double> model(cfg.model, 8);
    const auto path = temp_file("stms_ckpt_trunc.stms");
    save_checkpoint(model, 7, serialize_train_config(cfg), path.string());
    const LoadedCheckpoint<double> loaded = load_checkpoint<double>(path.string());
    REQUIRE(loaded.config.model.dct_truncation == 3);
    REQUIRE(loaded.model.spatial().decoder.weight.cols() == 3);
    const auto a = snapshot_params(model);
    const auto b = snapshot_params(loaded.model);
    for (std::size_t i = 0; i < a.size(); ++i) REQUIRE(a[i] == b[i]);
}

TEST_CASE("paper-scale default dimensions train and evaluate") {
    TrainConfigData cfg;  // C=64, L=4, K=4, T_p=T_f=10
    cfg.train.epochs = 2;
    cfg.train.batch_size = 8;
    cfg.train.seed = 2;
    cfg.train.learning_rate = 0.01;
    SynthSpec synth;
    synth.joints = cfg.model.joints;
    synth.dims = cfg.model.dims;
    synth.frames = 40;
    synth.seed = 6;
    synth.amplitude_range = {0.5, 2.0};
    cfg.data.synth = synth;
    const TrainResult<float> result = train<float>(cfg);
    REQUIRE(result.log.size() == 2);
    const HorizonTable table = evaluate_horizons(make_model_predictor(result.model),
                                                 result.samples, {80.0, 160.0, 320.0, 400.0});
    for (const auto& row : table.rows) REQUIRE(std::isfinite(row.mpjpe_mm));
}

TEST_CASE("checkpoint rejects mismatch and corruption") {
    const TrainConfigData cfg = desk_config();
    StmsModel<float> model(cfg.model, 1);
    const auto path = temp_file("stms_ckpt_bad.stms");

    SECTION("wrong dtype on load") {
        save_checkpoint(model, 1, serialize_train_config(cfg), path.string());
        REQUIRE_THROWS_AS(load_checkpoint<double>(path.string()), ConfigError);
    }
    SECTION("snapshot disagrees with the manifest") {
        TrainConfigData wider = cfg;
        wider.model.channels = 8;  // snapshot promises C=8, payload holds C=4
        save_checkpoint(model, 1, serialize_train_config(wider), path.string());
        try {
            load_checkpoint<float>(path.string());
            FAIL("expected ConfigError");
        } catch (const ConfigError& e) {
            REQUIRE(std::string(e.what()).find("temporal.embed.w1") != std::string::npos);
        }
    }
    SECTION("truncated payload") {
        save_checkpoint(model, 1, serialize_train_config(cfg), path.string());
        std::string bytes = slurp(path);
        bytes.pop_back();
        std::ofstream(path, std::ios::binary) << bytes;
        REQUIRE_THROWS_AS(load_checkpoint<float>(path.string()), IntegrityError);
    }
    SECTION("bad magic") {
        std::ofstream(path, std::ios::binary) << "NOPE";
        REQUIRE_THROWS_AS(load_checkpoint<float>(path.string()), IntegrityError);
    }
    SECTION("missing file") {
        REQUIRE_THROWS_AS(load_checkpoint<float>("/nonexistent/x.stms"), IoError);
    }
}

TEST_CASE("vanishing learning rate leaves parameters unchanged") {
    TrainConfigData cfg = desk_config();
    cfg.train.epochs = 1;
    cfg.train.learning_rate = 1e-30;
    const TrainResult<double> result = train<double>(cfg);
    const StmsModel<double> fresh(cfg.model, cfg.train.seed, cfg.train.adjacency_init_noise);
    const auto trained = snapshot_params(result.model);
    const auto initial = snapshot_params(fresh);
    for (std::size_t i = 0; i < trained.size(); ++i)
        REQUIRE(testutil::max_abs_diff(trained[i], initial[i]) < 1e-12);
}

TEST_CASE("training is deterministic and reduces the loss") {
    TrainConfigData cfg = desk_config();
    cfg.train.epochs = 60;
    cfg.train.learning_rate = 0.05;

    const TrainResult<float> a = train<float>(cfg);
    const TrainResult<float> b = train<float>(cfg);
    const auto pa = snapshot_params(a.model);
    const auto pb = snapshot_params(b.model);
    for (std::size_t i = 0; i < pa.size(); ++i) REQUIRE(pa[i] == pb[i]);
    REQUIRE(a.log.size() == 60);
    REQUIRE(a.steps == 60);  // 2 samples, batch 2 -> one step per epoch
    REQUIRE(a.log.back().l1 < a.log.front().l1);

    // Identical checkpoint bytes, not just identical parameters.
    const auto path_a = temp_file("stms_det_a.stms");
    const auto path_b = temp_file("stms_det_b.stms");
    save_checkpoint(a.model, a.steps, serialize_train_config(cfg), path_a.string());
    save_checkpoint(b.model, b.steps, serialize_train_config(cfg), path_b.string());
    REQUIRE(slurp(path_a) == slurp(path_b));
}

TEST_CASE("a reloaded model evaluates exactly like the in-memory one") {
    TrainConfigData cfg = desk_config();
    cfg.train.epochs = 15;
    const TrainResult<float> result = train<float>(cfg);

    const auto path = temp_file("stms_reload_eval.stms");
    save_checkpoint(result.model, result.steps, serialize_train_config(cfg), path.string());
    const LoadedCheckpoint<float> loaded = load_checkpoint<float>(path.string());

    const HorizonTable direct = evaluate_horizons(make_model_predictor(result.model),
                                                  result.samples, cfg.eval_horizons);
    const HorizonTable reloaded = evaluate_horizons(make_model_predictor(loaded.model),
                                                    result.samples, cfg.eval_horizons);
    REQUIRE(direct.rows.size() == reloaded.rows.size());
    for (std::size_t i = 0; i < direct.rows.size(); ++i)
        REQUIRE(direct.rows[i].mpjpe_mm == reloaded.rows[i].mpjpe_mm);  // exact
    REQUIRE(direct.average_mm == reloaded.average_mm);
}

TEST_CASE("training aborts on non-finite loss naming the component") {
    TrainConfigData cfg = desk_config();
    cfg.train.epochs = 50;
    cfg.train.learning_rate = 1e25;  // guaranteed blow-up
    try {
        (void)train<double>(cfg);
        FAIL("expected abort");
    } catch (const Error& e) {
        REQUIRE(std::string(e.what()).find("non-finite loss component") != std::string::npos);
    }
}

TEST_CASE("empty dataset is rejected") {
    TrainConfigData cfg = desk_config();
    cfg.data.synth->frames = 4;  // shorter than T_p + T_f
    REQUIRE_THROWS_AS(train<double>(cfg), InvalidInputError);
}

TEST_CASE("dataset loading from file honors stride") {
    SynthSpec spec;
    spec.joints = 2;
    spec.dims = 2;
    spec.frames = 11;
    spec.seed = 8;
    const auto path = temp_file("stms_dataset.motion");
    save_canonical(synthesize_motion(spec), path.string());

    DatasetSpec data;
    data.path = path.string();
    data.stride = 3;
    ModelConfig model;
    model.t_p = 3;
    model.t_f = 2;
    model.joints = 2;
    model.dims = 2;
    const auto samples = load_dataset(data, model);
    REQUIRE(samples.size() == 3);  // starts at frames 1, 4, 7

    model.joints = 3;
    REQUIRE_THROWS_AS(load_dataset(data, model), ConfigError);
}

TEST_CASE("gradient check passes on the desk model") {
    ModelConfig cfg;
    cfg.t_p = 3;
    cfg.t_f = 2;
    cfg.joints = 2;
    cfg.dims = 2;
    cfg.channels = 4;
    cfg.depth = 2;
    cfg.kernels = 2;

    const GradCheckReport report = gradient_check(cfg, 1, 1e-6);
    INFO("worst " << report.worst_parameter << " analytic " << report.worst_analytic
                  << " numeric " << report.worst_numeric);
    REQUIRE(report.entries_checked > 400);
    REQUIRE(report.max_rel_error < 1e-4);

    // Zero weights silence the temporal branch (it only feeds L_ST): both
    // gradient routes agree that those gradients vanish.
    LossOptions silent;
    silent.w_st = 0.0;
    silent.w_con = 0.0;
    const GradCheckReport zero = gradient_check(cfg, 1, 1e-6, silent);
    REQUIRE(zero.max_rel_error < 1e-4);

    REQUIRE_THROWS_AS(gradient_check(cfg, 1, 1e-2), ConfigError);  // epsilon range
}

TEST_CASE("gradient check covers the squared loss and truncation") {
    ModelConfig cfg;
    cfg.t_p = 2;
    cfg.t_f = 2;
    cfg.joints = 1;
    cfg.dims = 2;
    cfg.channels = 3;
    cfg.depth = 1;
    cfg.kernels = 2;
    cfg.dct_truncation = 3;

    LossOptions opts;
    opts.squared = true;
    opts.constraint_target = PenaltyTarget::both;
    const GradCheckReport report = gradient_check(cfg, 3, 1e-6, opts);
    REQUIRE(report.max_rel_error < 1e-4);
}

TEST_CASE("ablation specs parse and validate") {
    std::istringstream in(
        "# table rows\n"
        "gs_l1 branches=s lst=off lcon=off\n"
        "full branches=ts lst=on lcon=a\n"
        "beta branches=ts lst=on lcon=a w_st=0.1 w_con=-0.1\n"
        "sweep branches=ts lst=on lcon=a lambda=0.01\n");
    const auto specs = parse_ablation_specs(in);
    REQUIRE(specs.size() == 4);
    REQUIRE(specs[0].use_spatial_branch);
    REQUIRE(!specs[0].use_temporal_branch);
    REQUIRE(!specs[0].use_l_con);
    REQUIRE(specs[2].w_con == -0.1);
    REQUIRE(specs[3].lambda == 0.01);

    std::istringstream bad("broken branches=t lst=on lcon=a\n");
    REQUIRE_THROWS_AS(parse_ablation_specs(bad), ConfigError);  // lst with one branch

    AblationSpec spec;
    spec.label = "x";
    spec.use_l_con = true;
    spec.constraint_target = PenaltyTarget::none;
    REQUIRE_THROWS_AS(spec.validate(), ConfigError);
}

TEST_CASE("apply_ablation forces weights and branches") {
    const TrainConfigData base = desk_config();

    AblationSpec off;
    off.label = "off";
    off.use_l_con = false;
    off.use_l_st = false;
    off.constraint_target = PenaltyTarget::none;
    const TrainConfigData cfg = apply_ablation(base, off);
    REQUIRE(cfg.loss.w_st == 0.0);
    REQUIRE(cfg.loss.w_con == 0.0);
    REQUIRE(cfg.loss.constraint_target == PenaltyTarget::none);

    AblationSpec sweep;
    sweep.label = "sweep";
    sweep.lambda = 0.01;
    REQUIRE(apply_ablation(base, sweep).loss.w_st == 0.01);

    AblationSpec spatial_only;
    spatial_only.label = "s";
    spatial_only.use_temporal_branch = false;
    spatial_only.use_l_st = false;
    const TrainConfigData s_cfg = apply_ablation(base, spatial_only);
    REQUIRE(!s_cfg.model.use_temporal);
    REQUIRE(s_cfg.model.use_spatial);
}

TEST_CASE("disabled losses match the full wiring at lambda zero") {
    TrainConfigData base = desk_config();
    base.train.epochs = 20;
    base.train.learning_rate = 0.02;

    AblationSpec off;
    off.label = "off";
    off.use_l_con = false;
    off.use_l_st = false;
    AblationSpec zero;
    zero.label = "zero";
    zero.lambda = 0.0;

    const TrainResult<double> a = train<double>(apply_ablation(base, off));
    const TrainResult<double> b = train<double>(apply_ablation(base, zero));
    const auto pa = snapshot_params(a.model);
    const auto pb = snapshot_params(b.model);
    for (std::size_t i = 0; i < pa.size(); ++i) REQUIRE(pa[i] == pb[i]);
    for (std::size_t e = 0; e < a.log.size(); ++e) {
        REQUIRE(a.log[e].l1 == b.log[e].l1);
        REQUIRE(a.log[e].total == b.log[e].total);
    }
}

TEST_CASE("run_ablation produces a labeled table set") {
    TrainConfigData base = desk_config();
    base.train.epochs = 3;

    auto specs = constraint_variant_specs();
    const auto runs = run_ablation<float>(base, specs);
    REQUIRE(runs.size() == 4);

    // A-vs-W variants share the parameter count; single-branch specs do not.
    REQUIRE(runs[1].parameter_scalars == runs[2].parameter_scalars);
    REQUIRE(runs[1].parameter_scalars == runs[3].parameter_scalars);

    std::ostringstream csv;
    write_ablation_csv(csv, runs);
    std::istringstream lines(csv.str());
    std::string line;
    std::getline(lines, line);
    REQUIRE(line == "label,horizon_ms,frame_index,mpjpe_mm");
    std::size_t rows = 0;
    while (std::getline(lines, line)) ++rows;
    REQUIRE(rows == 4 * (base.eval_horizons.size() + 1));  // +1 average row per label
    REQUIRE(csv.str().find("constraint_w,average,,") != std::string::npos);
}

TEST_CASE("train log CSV format") {
    std::vector<EpochLog> log = {{1, 1.5, 0.25, 0.5, 0.75, 1.7, 0.001}};
    std::ostringstream out;
    write_train_log_csv(out, log);
    REQUIRE(out.str() == "epoch,l1,l_st,l_con_s,l_con_t,total,lr\n1,1.5,0.25,0.5,0.75,1.7,0.001\n");
}
