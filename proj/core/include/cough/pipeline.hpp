#pragma once

#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "cough/audio.hpp"
#include "cough/dataset.hpp"
#include "cough/eval.hpp"
#include "cough/model.hpp"

namespace cough {

// Mandatory disclaimer attached to every screening result.
extern const char* const kAdvisoryText;

struct ScreeningResult {
    std::string submission_id;
    int n_chunks_total = 0;
    int n_chunks_cough = 0;
    std::vector<double> chunk_scores;
    double recording_score = 0.0;
    std::string label;  // positive_screen | negative_screen | no_cough_detected
    std::string model_version;
    std::string advisory;
};

nlohmann::json screening_to_json(const ScreeningResult& result);

// Full pipeline on one decoded recording: preprocess, chunk, gate,
// featurize, predict, aggregate. A recording with no cough chunks comes
// back labeled no_cough_detected; silence propagates as SilentAudio.
ScreeningResult screen_buffer(const AudioBuffer& buffer,
                              const ModelBundle& bundle,
                              AggregatePolicy policy = AggregatePolicy::mean,
                              const std::string& model_version = "");

struct FeaturizeIssue {
    std::string audio_path;
    std::string message;
};

struct FeaturizedCorpus {
    std::vector<FeaturizedSample> samples;  // one per kept chunk, unstandardized
    std::vector<FeaturizeIssue> issues;     // skipped files and why
};

// Featurizes every manifest record: load WAV, preprocess, chunk, gate,
// log-Mel per kept chunk. Files that are silent, unreadable, or fully
// gated away are collected as issues and skipped.
FeaturizedCorpus featurize_corpus(const std::vector<SampleRecord>& records,
                                  const std::string& base_dir,
                                  const PreprocessConfig& pre_cfg,
                                  const FeatureConfig& feat_cfg,
                                  const GateModel& gate);

}  // namespace cough
