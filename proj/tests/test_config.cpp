#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>

#include "cough/config.hpp"
#include "cough/error.hpp"

using namespace cough;
namespace fs = std::filesystem;

TEST_CASE("defaults survive an empty config") {
    auto cfg = parse_config_text("");
    CHECK(cfg.preprocess.target_rate_hz == 16000);
    CHECK(cfg.features.n_mels == 64);
    CHECK(cfg.model.hidden_units == 64);
    CHECK(cfg.train.epochs == 70);
    CHECK(cfg.service.port == 8080);
    CHECK(cfg.aggregation == AggregatePolicy::mean);
}

TEST_CASE("sections, comments and whitespace parse") {
    const char* text =
        "# top comment\n"
        "[preprocess]\n"
        "target_rate_hz = 8000\n"
        "snr_denoise_threshold_db = 12.5   ; trailing comment\n"
        "\n"
        "[features]\n"
        "n_mels=32\n"
        "use_mfcc = true\n"
        "[model]\n"
        "conv_channels = 4, 8\n"
        "hidden_units = 16\n"
        "dropout_rate = 0.2\n"
        "[train]\n"
        "epochs = 9\n"
        "optimizer = sgd_momentum\n"
        "seed = 1234\n"
        "[pipeline]\n"
        "aggregation = majority\n"
        "output_dir = /tmp/xyz\n"
        "[service]\n"
        "port = 9911\n"
        "max_upload = 2048\n"
        "admin_token = sesame\n";
    auto cfg = parse_config_text(text);
    CHECK(cfg.preprocess.target_rate_hz == 8000);
    CHECK(cfg.preprocess.snr_denoise_threshold_db == 12.5);
    CHECK(cfg.features.n_mels == 32);
    CHECK(cfg.features.use_mfcc);
    CHECK(cfg.model.conv_channels == std::vector<int>{4, 8});
    CHECK(cfg.model.hidden_units == 16);
    CHECK(cfg.model.dropout_rate == 0.2);
    CHECK(cfg.train.epochs == 9);
    CHECK(cfg.train.optimizer == TrainConfig::Optimizer::sgd_momentum);
    CHECK(cfg.train.seed == 1234);
    CHECK(cfg.aggregation == AggregatePolicy::majority);
    CHECK(cfg.output_dir == "/tmp/xyz");
    CHECK(cfg.service.port == 9911);
    CHECK(cfg.service.max_upload == 2048);
    CHECK(cfg.service.admin_token == "sesame");
}

TEST_CASE("strictness: unknown keys, sections and bad values error") {
    CHECK_THROWS_AS(parse_config_text("[preprocess]\nrate = 1\n"), Error);
    CHECK_THROWS_AS(parse_config_text("[nosuch]\nx = 1\n"), Error);
    CHECK_THROWS_AS(parse_config_text("orphan = 1\n"), Error);
    CHECK_THROWS_AS(parse_config_text("[train]\nepochs = many\n"), Error);
    CHECK_THROWS_AS(parse_config_text("[features]\nuse_mfcc = yes\n"), Error);
    CHECK_THROWS_AS(parse_config_text("[train]\noptimizer = adamw\n"), Error);
    CHECK_THROWS_AS(parse_config_text("[pipeline]\naggregation = all\n"), Error);
    CHECK_THROWS_AS(parse_config_text("[train]\nepochs\n"), Error);
}

TEST_CASE("round trip through text is stable") {
    PipelineConfig cfg;
    cfg.train.epochs = 13;
    cfg.train.learning_rate = 2.5e-4;
    cfg.model.conv_channels = {8, 16};
    cfg.features.fmax_hz = 7000.5;
    cfg.service.admin_token = "tok";
    cfg.aggregation = AggregatePolicy::max;

    const std::string text = config_text(cfg);
    auto parsed = parse_config_text(text);
    CHECK(config_text(parsed) == text);
    CHECK(parsed.train.epochs == 13);
    CHECK(parsed.train.learning_rate == 2.5e-4);
    CHECK(parsed.model.conv_channels == std::vector<int>{8, 16});
    CHECK(parsed.features.fmax_hz == 7000.5);
    CHECK(parsed.aggregation == AggregatePolicy::max);
}

TEST_CASE("file save and load") {
    PipelineConfig cfg;
    cfg.manifest_path = "m.jsonl";
    const std::string path = (fs::temp_directory_path() / "cfg.ini").string();
    save_config(cfg, path);
    auto back = load_config(path);
    CHECK(back.manifest_path == "m.jsonl");
    fs::remove(path);
    CHECK_THROWS_AS(load_config("/nonexistent/cfg.ini"), Error);
}

TEST_CASE("environment overrides") {
    PipelineConfig cfg;
    setenv("COUGH_PORT", "7001", 1);
    setenv("COUGH_MODEL_PATH", "/models/x.cghm", 1);
    setenv("COUGH_DATA_DIR", "/srv/data", 1);
    setenv("COUGH_MAX_UPLOAD", "4096", 1);
    setenv("COUGH_CONVERTER", "ffmpeg -i {in} {out}", 1);
    apply_env_overrides(cfg);
    CHECK(cfg.service.port == 7001);
    CHECK(cfg.service.model_path == "/models/x.cghm");
    CHECK(cfg.bundle_path == "/models/x.cghm");
    CHECK(cfg.service.data_dir == "/srv/data");
    CHECK(cfg.service.max_upload == 4096);
    CHECK(cfg.converter_command == "ffmpeg -i {in} {out}");
    unsetenv("COUGH_PORT");
    unsetenv("COUGH_MODEL_PATH");
    unsetenv("COUGH_DATA_DIR");
    unsetenv("COUGH_MAX_UPLOAD");
    unsetenv("COUGH_CONVERTER");

    // Bad numeric env values are errors, not silent fallbacks.
    setenv("COUGH_PORT", "not-a-port", 1);
    PipelineConfig cfg2;
    CHECK_THROWS_AS(apply_env_overrides(cfg2), Error);
    unsetenv("COUGH_PORT");
}
