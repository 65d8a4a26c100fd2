#include <cstdio>
#include <filesystem>
#include <iostream>

#include <CLI11.hpp>

#include "cough/config.hpp"
#include "cough/dataset.hpp"
#include "cough/error.hpp"
#include "cough/eval.hpp"
#include "cough/hash.hpp"
#include "cough/model.hpp"
#include "cough/pipeline.hpp"
#include "cough/preprocess.hpp"
#include "cough/segmenter.hpp"
#include "cough/service.hpp"
#include "cough/synth.hpp"
#include "cough/wav.hpp"

namespace fs = std::filesystem;
using namespace cough;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitData = 1;
constexpr int kExitUsage = 2;

struct CommonArgs {
    std::string config_path;
    bool dry_run = false;
    std::uint64_t seed = 0;
    bool seed_given = false;
};

void add_common(CLI::App* cmd, CommonArgs& args) {
    cmd->add_option("--config", args.config_path, "pipeline config file")
        ->check(CLI::ExistingFile);
    cmd->add_flag("--dry-run", args.dry_run,
                  "print the effective config and exit");
    cmd->add_option("--seed", args.seed, "random seed")
        ->each([&args](const std::string&) { args.seed_given = true; });
}

// Config file, then environment, then explicit flags. Config problems are
// usage errors, not data errors.
PipelineConfig resolve_config(const CommonArgs& args) {
    try {
        PipelineConfig cfg;
        if (!args.config_path.empty()) cfg = load_config(args.config_path);
        apply_env_overrides(cfg);
        if (args.seed_given) cfg.train.seed = args.seed;
        return cfg;
    } catch (const Error& e) {
        throw CLI::ValidationError("--config", e.what());
    }
}

int finish_dry_run(const PipelineConfig& cfg) {
    std::cout << config_text(cfg);
    return kExitOk;
}

void require_exists(const std::string& path, const std::string& what) {
    if (path.empty()) {
        throw CLI::ValidationError(what, "path not set");
    }
    if (!fs::exists(path)) {
        throw CLI::ValidationError(what, "does not exist: " + path);
    }
}

AudioBuffer read_audio_any(const std::string& path, const std::string& converter) {
    if (fs::path(path).extension() == ".wav" || converter.empty()) {
        return read_wav(path);
    }
    const std::string temp = convert_external(path, converter);
    try {
        AudioBuffer buf = read_wav(temp);
        buf.source_id = path;
        fs::remove(temp);
        return buf;
    } catch (...) {
        fs::remove(temp);
        throw;
    }
}

GateModel train_default_gate(std::uint64_t seed) {
    auto corpus = synth_gate_corpus(500, 16000, seed);
    return train_gate(corpus).model;
}

std::size_t expected_frames(const PipelineConfig& cfg) {
    return 1 + static_cast<std::size_t>(cfg.preprocess.target_rate_hz -
                                        cfg.features.frame_len) /
                   static_cast<std::size_t>(cfg.features.hop);
}

int cmd_preprocess(const CommonArgs& common, const std::string& manifest_path,
                   const std::string& out_dir) {
    PipelineConfig cfg = resolve_config(common);
    if (common.dry_run) return finish_dry_run(cfg);
    require_exists(manifest_path, "--manifest");

    ManifestLoad manifest = load_manifest(manifest_path);
    for (const auto& issue : manifest.issues) {
        std::cerr << manifest_path << ':' << issue.line_no << ": "
                  << issue.message << '\n';
    }
    if (manifest.records.empty()) {
        std::cerr << "warning: manifest has no records, nothing to do\n";
        return manifest.issues.empty() ? kExitOk : kExitData;
    }

    fs::create_directories(out_dir);
    const std::string base_dir = fs::path(manifest_path).parent_path().string();
    std::ofstream reports(fs::path(out_dir) / "reports.jsonl");

    std::size_t failed = manifest.issues.size();
    for (const auto& rec : manifest.records) {
        fs::path in_path(rec.audio_path);
        if (in_path.is_relative() && !base_dir.empty()) {
            in_path = fs::path(base_dir) / in_path;
        }
        try {
            AudioBuffer raw = read_audio_any(in_path.string(), cfg.converter_command);
            PreprocessResult result = preprocess(raw, cfg.preprocess);
            const fs::path out_path =
                fs::path(out_dir) / fs::path(rec.audio_path).filename();
            write_wav(result.buffer, out_path.string());

            nlohmann::json j;
            j["audio_path"] = rec.audio_path;
            j["output"] = out_path.filename().string();
            j["sample_rate_hz"] = result.buffer.sample_rate_hz;
            j["snr_db"] = result.report.snr_db;
            j["denoise_applied"] = result.report.denoise_applied;
            j["scale_factor"] = result.report.scale_factor;
            reports << j.dump() << '\n';
        } catch (const Error& e) {
            std::cerr << rec.audio_path << ": " << e.what() << '\n';
            ++failed;
        }
    }
    std::cerr << "processed " << (manifest.records.size() - failed) << '/'
              << manifest.records.size() << " files\n";
    return failed == 0 ? kExitOk : kExitData;
}

int cmd_train(const CommonArgs& common, const std::string& manifest_path,
              const std::string& out_path, std::string history_path) {
    PipelineConfig cfg = resolve_config(common);
    if (common.dry_run) return finish_dry_run(cfg);
    require_exists(manifest_path, "--manifest");

    ManifestLoad manifest = load_manifest(manifest_path);
    for (const auto& issue : manifest.issues) {
        std::cerr << manifest_path << ':' << issue.line_no << ": "
                  << issue.message << '\n';
    }
    if (manifest.records.empty()) throw EmptyInput("manifest has no records");

    const std::string base_dir = fs::path(manifest_path).parent_path().string();
    SplitPlan plan = split_by_individual(manifest.records, {0.8, 0.1, 0.1},
                                         cfg.train.seed);
    auto in_split = [](const std::vector<std::string>& ids, const std::string& id) {
        return std::binary_search(ids.begin(), ids.end(), id);
    };

    std::cerr << "training gate on synthetic labelled chunks\n";
    GateModel gate = train_default_gate(cfg.train.seed);

    std::cerr << "featurizing " << manifest.records.size() << " recordings\n";
    FeaturizedCorpus corpus = featurize_corpus(manifest.records, base_dir,
                                               cfg.preprocess, cfg.features, gate);
    for (const auto& issue : corpus.issues) {
        std::cerr << issue.audio_path << ": skipped: " << issue.message << '\n';
    }

    std::vector<TrainSample> train_set, val_set;
    for (auto& sample : corpus.samples) {
        if (in_split(plan.train, sample.individual_id)) {
            train_set.push_back({std::move(sample.feature), sample.label});
        } else if (in_split(plan.val, sample.individual_id)) {
            val_set.push_back({std::move(sample.feature), sample.label});
        }
    }
    if (train_set.empty() || val_set.empty()) {
        throw EmptyInput("train or validation split ended up empty");
    }

    std::vector<MelFeature> feats;
    feats.reserve(train_set.size());
    for (auto& t : train_set) feats.push_back(std::move(t.feature));
    FeatureStats stats = standardize(feats);
    for (std::size_t i = 0; i < train_set.size(); ++i) {
        train_set[i].feature = std::move(feats[i]);
    }
    feats.clear();
    for (auto& t : val_set) feats.push_back(std::move(t.feature));
    standardize(feats, stats);
    for (std::size_t i = 0; i < val_set.size(); ++i) {
        val_set[i].feature = std::move(feats[i]);
    }

    ModelConfig model_cfg = cfg.model;
    model_cfg.input_rows = static_cast<std::size_t>(cfg.features.n_mels);
    model_cfg.input_cols = expected_frames(cfg);

    std::cerr << "training on " << train_set.size() << " chunks, validating on "
              << val_set.size() << '\n';
    auto [bundle, history] = train(train_set, val_set, model_cfg, cfg.train);
    bundle.feature_stats = stats;
    bundle.gate = gate;
    bundle.feature_config = cfg.features;
    bundle.preprocess = cfg.preprocess;

    save_bundle(bundle, out_path);
    if (history_path.empty()) history_path = out_path + ".history.csv";
    save_history_csv(history, history_path);

    nlohmann::json j;
    j["bundle"] = out_path;
    j["history"] = history_path;
    j["train_chunks"] = train_set.size();
    j["val_chunks"] = val_set.size();
    j["best_epoch"] = history.best_epoch;
    j["best_val_accuracy"] =
        history.best_epoch >= 0
            ? history.val_accuracy[static_cast<std::size_t>(history.best_epoch)]
            : 0.0;
    std::cout << j.dump() << '\n';
    return kExitOk;
}

int cmd_eval(const CommonArgs& common, const std::string& manifest_path,
             const std::string& bundle_path, const std::string& level,
             const std::string& json_path, const std::string& roc_path) {
    PipelineConfig cfg = resolve_config(common);
    if (common.dry_run) return finish_dry_run(cfg);
    require_exists(manifest_path, "--manifest");
    require_exists(bundle_path, "--bundle");

    ModelBundle bundle = load_bundle(bundle_path);
    ManifestLoad manifest = load_manifest(manifest_path);
    if (manifest.records.empty()) throw EmptyInput("manifest has no records");

    const std::string base_dir = fs::path(manifest_path).parent_path().string();
    FeaturizedCorpus corpus = featurize_corpus(
        manifest.records, base_dir, bundle.preprocess, bundle.feature_config,
        bundle.gate);
    for (const auto& issue : corpus.issues) {
        std::cerr << issue.audio_path << ": skipped: " << issue.message << '\n';
    }
    if (corpus.samples.empty()) throw EmptyInput("no scoreable chunks");

    std::vector<ScoredChunk> chunks;
    for (auto& sample : corpus.samples) {
        std::vector<MelFeature> one{std::move(sample.feature)};
        standardize(one, bundle.feature_stats);
        ScoredChunk c;
        c.individual_id = sample.individual_id;
        c.file_id = sample.file_id;
        c.label = sample.label == 1;
        c.score = predict(bundle, one.front()).score;
        chunks.push_back(std::move(c));
    }

    LevelReports reports =
        evaluate_levels(chunks, cfg.aggregation, bundle.decision_threshold);
    const EvalReport& report = level == "file"         ? reports.file
                               : level == "individual" ? reports.individual
                                                       : reports.chunk;

    nlohmann::json j = report_to_json(report);
    j["level"] = level;
    j["n_chunks"] = chunks.size();
    std::cout << j.dump() << '\n';
    if (!json_path.empty()) {
        std::ofstream out(json_path);
        out << j.dump(2) << '\n';
    }
    if (!roc_path.empty()) save_roc_csv(report.roc_points, roc_path);
    return kExitOk;
}

int cmd_infer(const CommonArgs& common, const std::string& bundle_path,
              const std::string& audio_path) {
    PipelineConfig cfg = resolve_config(common);
    if (common.dry_run) return finish_dry_run(cfg);
    require_exists(bundle_path, "--bundle");
    require_exists(audio_path, "audio");

    ModelBundle bundle = load_bundle(bundle_path);
    AudioBuffer buffer = read_audio_any(audio_path, cfg.converter_command);

    ScreeningResult result;
    try {
        result = screen_buffer(buffer, bundle, cfg.aggregation,
                               sha256_file_hex(bundle_path));
    } catch (const SilentAudio&) {
        result.label = "no_cough_detected";
        result.model_version = sha256_file_hex(bundle_path);
        result.advisory = kAdvisoryText;
    }
    std::cout << screening_to_json(result).dump() << '\n';
    return kExitOk;
}

int cmd_synth(const CommonArgs& common, const std::string& out_dir, int n) {
    PipelineConfig cfg = resolve_config(common);
    if (common.dry_run) return finish_dry_run(cfg);

    auto records = synth_corpus(out_dir, n, cfg.train.seed);
    CorpusStats stats = corpus_summary(records);
    nlohmann::json j;
    j["out_dir"] = out_dir;
    j["manifest"] = out_dir + "/manifest.jsonl";
    j["n_files"] = stats.n_files;
    j["n_individuals"] = stats.n_individuals;
    std::cout << j.dump() << '\n';
    return kExitOk;
}

int cmd_serve(const CommonArgs& common, std::string bundle_path, int port,
              std::string data_dir) {
    PipelineConfig cfg = resolve_config(common);
    if (!bundle_path.empty()) cfg.service.model_path = bundle_path;
    if (port > 0) cfg.service.port = port;
    if (!data_dir.empty()) cfg.service.data_dir = data_dir;
    if (common.dry_run) return finish_dry_run(cfg);

    if (cfg.service.model_path.empty() || !fs::exists(cfg.service.model_path)) {
        throw CLI::ValidationError("--bundle",
                                   "model bundle missing: " + cfg.service.model_path);
    }
    Service service(cfg.service);
    std::cerr << "model " << service.model_version().substr(0, 12)
              << " listening on port " << cfg.service.port << '\n';
    if (!service.listen("0.0.0.0")) {
        throw Error("cannot listen on port " + std::to_string(cfg.service.port));
    }
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"cough-audio pre-screening pipeline"};
    app.require_subcommand(1);

    CommonArgs common;

    auto* preprocess_cmd =
        app.add_subcommand("preprocess", "resample, denoise and normalize a corpus");
    std::string pre_manifest, pre_out = "out/preprocessed";
    preprocess_cmd->add_option("--manifest", pre_manifest, "input manifest")->required();
    preprocess_cmd->add_option("--out", pre_out, "output directory");
    add_common(preprocess_cmd, common);

    auto* train_cmd = app.add_subcommand("train", "train a model bundle");
    std::string train_manifest, train_out = "model.cghm", train_history;
    train_cmd->add_option("--manifest", train_manifest, "training manifest")->required();
    train_cmd->add_option("--out", train_out, "bundle output path");
    train_cmd->add_option("--history", train_history, "train history CSV path");
    add_common(train_cmd, common);

    auto* eval_cmd = app.add_subcommand("eval", "evaluate a bundle on a manifest");
    std::string eval_manifest, eval_bundle, eval_level = "chunk";
    std::string eval_json, eval_roc;
    eval_cmd->add_option("--manifest", eval_manifest, "evaluation manifest")->required();
    eval_cmd->add_option("--bundle", eval_bundle, "model bundle")->required();
    eval_cmd->add_option("--level", eval_level, "chunk|file|individual")
        ->check(CLI::IsMember({"chunk", "file", "individual"}));
    eval_cmd->add_option("--json", eval_json, "write report JSON here");
    eval_cmd->add_option("--roc", eval_roc, "write ROC CSV here");
    add_common(eval_cmd, common);

    auto* infer_cmd = app.add_subcommand("infer", "score a single recording");
    std::string infer_bundle, infer_audio;
    infer_cmd->add_option("--bundle", infer_bundle, "model bundle")->required();
    infer_cmd->add_option("audio", infer_audio, "recording to score")->required();
    add_common(infer_cmd, common);

    auto* synth_cmd =
        app.add_subcommand("synth", "generate a synthetic labelled corpus");
    std::string synth_out = "out/synth";
    int synth_n = 20;
    synth_cmd->add_option("--out", synth_out, "output directory");
    synth_cmd->add_option("--n", synth_n, "number of recordings")
        ->check(CLI::NonNegativeNumber);
    add_common(synth_cmd, common);

    auto* serve_cmd = app.add_subcommand("serve", "run the HTTP triage service");
    std::string serve_bundle, serve_data;
    int serve_port = 0;
    serve_cmd->add_option("--bundle", serve_bundle, "model bundle");
    serve_cmd->add_option("--port", serve_port, "listen port");
    serve_cmd->add_option("--data-dir", serve_data, "submission storage directory");
    add_common(serve_cmd, common);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitUsage;
    }

    try {
        if (preprocess_cmd->parsed()) {
            return cmd_preprocess(common, pre_manifest, pre_out);
        }
        if (train_cmd->parsed()) {
            return cmd_train(common, train_manifest, train_out, train_history);
        }
        if (eval_cmd->parsed()) {
            return cmd_eval(common, eval_manifest, eval_bundle, eval_level,
                            eval_json, eval_roc);
        }
        if (infer_cmd->parsed()) {
            return cmd_infer(common, infer_bundle, infer_audio);
        }
        if (synth_cmd->parsed()) {
            return cmd_synth(common, synth_out, synth_n);
        }
        if (serve_cmd->parsed()) {
            return cmd_serve(common, serve_bundle, serve_port, serve_data);
        }
    } catch (const CLI::ValidationError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitData;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitData;
    }
    return kExitUsage;
}
