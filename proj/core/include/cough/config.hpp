#pragma once

#include <cstddef>
#include <string>

#include "cough/features.hpp"
#include "cough/model.hpp"
#include "cough/preprocess.hpp"

namespace cough {

struct ServiceConfig {
    int port = 8080;
    std::string model_path;
    std::string data_dir = "data";
    std::size_t max_upload = 10 * 1024 * 1024;
    std::string admin_token;  // empty disables audio retrieval
};

struct PipelineConfig {
    PreprocessConfig preprocess;
    FeatureConfig features;
    ModelConfig model;
    TrainConfig train;
    AggregatePolicy aggregation = AggregatePolicy::mean;
    std::string manifest_path;
    std::string bundle_path;
    std::string output_dir = "out";
    std::string converter_command;  // non-WAV fallback, {in} / {out} holes
    ServiceConfig service;
};

// Sectioned key=value text. Parsing is strict: unknown sections or keys
// are errors so typos cannot silently change behavior.
PipelineConfig parse_config_text(const std::string& text);
PipelineConfig load_config(const std::string& path);
std::string config_text(const PipelineConfig& cfg);
void save_config(const PipelineConfig& cfg, const std::string& path);

// COUGH_PORT, COUGH_MODEL_PATH, COUGH_DATA_DIR, COUGH_MAX_UPLOAD and
// COUGH_CONVERTER override file values.
void apply_env_overrides(PipelineConfig& cfg);

const char* to_string(AggregatePolicy policy);

}  // namespace cough
