#include "cough/pipeline.hpp"

#include <filesystem>

#include "cough/error.hpp"
#include "cough/preprocess.hpp"
#include "cough/wav.hpp"

namespace cough {

const char* const kAdvisoryText =
    "Pre-screening aid only: this score is not a diagnosis and is never a "
    "replacement for other diagnostic methods such as a laboratory test. "
    "Consult a health professional.";

nlohmann::json screening_to_json(const ScreeningResult& result) {
    nlohmann::json j;
    j["submission_id"] = result.submission_id;
    j["n_chunks_total"] = result.n_chunks_total;
    j["n_chunks_cough"] = result.n_chunks_cough;
    j["chunk_scores"] = result.chunk_scores;
    j["recording_score"] = result.recording_score;
    j["label"] = result.label;
    j["model_version"] = result.model_version;
    j["advisory"] = result.advisory;
    return j;
}

ScreeningResult screen_buffer(const AudioBuffer& buffer,
                              const ModelBundle& bundle,
                              AggregatePolicy policy,
                              const std::string& model_version) {
    ScreeningResult result;
    result.model_version = model_version;
    result.advisory = kAdvisoryText;

    PreprocessResult pre = preprocess(buffer, bundle.preprocess);
    std::vector<Chunk> chunks = chunk_audio(pre.buffer);
    result.n_chunks_total = static_cast<int>(chunks.size());

    std::vector<Chunk> kept;
    try {
        kept = filter_cough_chunks(chunks, bundle.gate);
    } catch (const NoCoughDetected&) {
        result.label = "no_cough_detected";
        return result;
    }
    result.n_chunks_cough = static_cast<int>(kept.size());

    std::vector<double> scores;
    for (const auto& chunk : kept) {
        std::vector<MelFeature> feats{log_mel(chunk, bundle.feature_config)};
        standardize(feats, bundle.feature_stats);
        scores.push_back(predict(bundle, feats.front()).score);
    }
    Aggregate agg = aggregate_recording(scores, policy, bundle.decision_threshold);
    result.chunk_scores = std::move(scores);
    result.recording_score = agg.score;
    result.label = agg.positive ? "positive_screen" : "negative_screen";
    return result;
}

FeaturizedCorpus featurize_corpus(const std::vector<SampleRecord>& records,
                                  const std::string& base_dir,
                                  const PreprocessConfig& pre_cfg,
                                  const FeatureConfig& feat_cfg,
                                  const GateModel& gate) {
    namespace fs = std::filesystem;
    FeaturizedCorpus out;

    for (const auto& rec : records) {
        fs::path path(rec.audio_path);
        if (path.is_relative() && !base_dir.empty()) {
            path = fs::path(base_dir) / path;
        }
        try {
            AudioBuffer raw = read_wav(path.string());
            PreprocessResult pre = preprocess(raw, pre_cfg);
            std::vector<Chunk> chunks = chunk_audio(pre.buffer);
            std::vector<Chunk> kept = filter_cough_chunks(chunks, gate);
            for (const auto& chunk : kept) {
                FeaturizedSample sample;
                sample.individual_id = rec.individual_id;
                sample.file_id = rec.audio_path;
                sample.label = rec.label == Label::positive ? 1 : 0;
                sample.feature = log_mel(chunk, feat_cfg);
                out.samples.push_back(std::move(sample));
            }
        } catch (const Error& e) {
            out.issues.push_back({rec.audio_path, e.what()});
        }
    }
    return out;
}

}  // namespace cough
