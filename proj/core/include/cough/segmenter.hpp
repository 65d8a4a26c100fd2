#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "cough/audio.hpp"

namespace cough {

// One second of audio at the pipeline rate; the classifier's unit of work.
struct Chunk {
    std::vector<float> samples;  // exactly sample_rate_hz * 1 s
    std::string source_id;
    double start_offset_s = 0.0;
    int padded_samples = 0;
    std::optional<double> gate_score;
};

// Tail windows that would be >= 95% zero padding are never emitted.
constexpr double kMaxPaddingFraction = 0.95;

// Cut a buffer into consecutive non-overlapping 1 s windows; the final
// partial window is zero padded and its padding recorded.
std::vector<Chunk> chunk_audio(const AudioBuffer& buffer);

// Reassemble the original samples from chunks (padding stripped).
std::vector<float> concat_chunks(const std::vector<Chunk>& chunks);

// Scalar descriptors feeding the cough/noise gate:
//   [0] log RMS energy in dB (floored at -80)
//   [1] zero-crossing rate (fraction of samples)
//   [2] spectral centroid in Hz
//   [3] spectral flatness in [0, 1]
//   [4] peak-to-RMS ratio
//   [5] burst count: 10 ms frames above 3x the median frame energy
using GateFeatures = std::array<double, 6>;

GateFeatures extract_gate_features(const Chunk& chunk);

// Logistic discriminator separating cough-bearing chunks from noise/silence.
struct GateModel {
    std::array<double, 7> weights{};  // 6 feature weights + bias
    double decision_threshold = 0.5;
};

double gate_score(const Chunk& chunk, const GateModel& model);

struct GateTrainResult {
    GateModel model;
    double train_accuracy = 0.0;
    std::vector<double> loss_per_epoch;
};

// Full-batch gradient descent on cross-entropy. Throws SingleClass when all
// labels agree.
GateTrainResult train_gate(const std::vector<std::pair<Chunk, bool>>& labeled,
                           int epochs = 400, double learning_rate = 0.5);

// Chunks scoring at or above the model threshold, in input order, with
// scores recorded. Throws NoCoughDetected when nothing passes.
std::vector<Chunk> filter_cough_chunks(const std::vector<Chunk>& chunks,
                                       const GateModel& model);

}  // namespace cough
