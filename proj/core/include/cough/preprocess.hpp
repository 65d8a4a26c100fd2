#pragma once

#include "cough/audio.hpp"

namespace cough {

struct PreprocessConfig {
    int target_rate_hz = 16000;
    double target_peak = 0.9;
    double snr_denoise_threshold_db = 15.0;
    double noise_floor_percentile = 0.1;
    double gate_over_subtraction = 1.5;
    // Per-bin magnitude kept as a fraction of the input when subtraction
    // would drive it below zero; preserves waveform shape in clean signals.
    double spectral_floor = 0.05;
};

// Per-file audit record emitted alongside the processed audio.
struct ProcessingReport {
    double snr_db = 0.0;
    bool denoise_applied = false;
    double scale_factor = 1.0;
};

struct PreprocessResult {
    AudioBuffer buffer;
    ProcessingReport report;
};

// Windowed-sinc rate conversion (Kaiser beta 8.6, 64 taps per phase).
// Output length is round(input_len * target/source). A buffer already at the
// target rate is returned unchanged.
AudioBuffer resample(const AudioBuffer& buffer, int target_rate_hz);

// Pure rescale so that max |sample| lands on target_peak. Throws SilentAudio
// when the input peak is below 1e-6.
AudioBuffer peak_normalize(const AudioBuffer& buffer, double target_peak);

// Ratio of the loudest 10% of 32 ms frames to the quietest
// noise_floor_percentile of frames, in dB. The quiet-frame floor is weighted
// by its spectral flatness: a tonal quiet floor is signal, not noise, and is
// discounted accordingly. Result clamped to [-40, 80] dB.
double estimate_snr_db(const AudioBuffer& buffer, const PreprocessConfig& cfg);

// STFT magnitude subtraction (frame 512, hop 256, Hann, overlap-add).
// The noise profile is the mean magnitude spectrum of the quietest
// noise_floor_percentile of frames; gate_over_subtraction scales it before
// subtraction and spectral_floor bounds the attenuation per bin.
AudioBuffer spectral_gate_denoise(const AudioBuffer& buffer,
                                  const PreprocessConfig& cfg);

// resample -> (denoise iff SNR below threshold) -> peak_normalize.
PreprocessResult preprocess(const AudioBuffer& buffer,
                            const PreprocessConfig& cfg);

}  // namespace cough
