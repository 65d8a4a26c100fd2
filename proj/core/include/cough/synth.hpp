#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "cough/audio.hpp"
#include "cough/dataset.hpp"
#include "cough/segmenter.hpp"

namespace cough {

// Labeled 1-second chunks for gate training and evaluation: cough-like
// burst chunks (true) against silence, steady tones, and stationary noise
// (false), roughly balanced. Deterministic for a given seed.
std::vector<std::pair<Chunk, bool>> synth_gate_corpus(int n_chunks,
                                                      int sample_rate_hz,
                                                      std::uint64_t seed);

// One synthetic recording: 2-3 s with cough-like bursts every second.
// positive_proxy selects the 300-1400 Hz timbre, otherwise 900-3200 Hz;
// the two classes make the classification task learnable at desk scale
// without claiming any medical content.
AudioBuffer synth_recording(bool positive_proxy, int sample_rate_hz,
                            std::uint64_t seed, const std::string& source_id);

// Writes n_files WAVs plus manifest.jsonl under out_dir. Individuals get
// 2-3 files each, half of the individuals positive-proxy; sample rates
// cycle through 16/8/48 kHz. Byte-reproducible for a fixed seed.
std::vector<SampleRecord> synth_corpus(const std::string& out_dir, int n_files,
                                       std::uint64_t seed);

}  // namespace cough
