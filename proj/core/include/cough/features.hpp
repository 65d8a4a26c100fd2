#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "cough/segmenter.hpp"

namespace cough {

// Row-major matrix of doubles. Feature matrices are frequency-major:
// rows index Mel bands (or DFT bins), columns index time frames.
struct Matrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> v;

    Matrix() = default;
    Matrix(std::size_t r, std::size_t c) : rows(r), cols(c), v(r * c, 0.0) {}

    double& at(std::size_t r, std::size_t c) { return v[r * cols + c]; }
    double at(std::size_t r, std::size_t c) const { return v[r * cols + c]; }
};

struct FeatureConfig {
    int frame_len = 400;  // 25 ms at 16 kHz
    int hop = 160;        // 10 ms
    int fft_size = 512;
    int n_mels = 64;
    double fmin_hz = 50.0;
    double fmax_hz = 8000.0;
    int n_mfcc = 13;
    double log_floor = 1e-10;
    // The classifier consumes log-Mel images by default; set to feed it
    // MFCC images instead.
    bool use_mfcc = false;

    bool valid(int sample_rate_hz) const {
        return fft_size >= frame_len && fmax_hz <= sample_rate_hz / 2.0 &&
               n_mels >= 2 && n_mfcc <= n_mels && frame_len > 0 && hop > 0;
    }
};

struct AugmentConfig {
    double scale_min = 0.9;
    double scale_max = 1.1;
    double rotate_max_deg = 5.0;
    bool enabled = false;
};

struct MelFeature {
    Matrix matrix;                // n_mels x n_frames log-Mel energies
    std::optional<Matrix> mfcc;   // n_mfcc x n_frames when configured
    std::string chunk_ref;
    bool standardized = false;

    // The image the classifier sees under the given config.
    const Matrix& image(const FeatureConfig& cfg) const {
        return cfg.use_mfcc && mfcc ? *mfcc : matrix;
    }
};

struct FeatureStats {
    double mean = 0.0;
    double std_dev = 1.0;
};

// Hann-windowed power spectrogram, (fft_size/2+1) x n_frames. The chunk's
// sample rate is its length (chunks are one second by construction).
Matrix stft_power(const Chunk& chunk, const FeatureConfig& cfg);

// Triangular filters, n_mels x (fft_size/2+1), centers equally spaced on
// the Mel scale between fmin and fmax. A filter too narrow to cover any
// bin gets weight 1 at the bin nearest its center.
Matrix mel_filterbank(const FeatureConfig& cfg, int sample_rate_hz);

double hz_to_mel(double hz);
double mel_to_hz(double mel);

MelFeature log_mel(const Chunk& chunk, const FeatureConfig& cfg);

// Orthonormal DCT-II over the Mel axis, per frame.
Matrix mfcc_from_mel(const Matrix& mel_matrix, int n_mfcc);

// Default augment fill: ln(1e-10), the log-Mel silence floor.
inline constexpr double kLogFloorFill = -23.025850929940457;

// Random affine (scale + rotation) with bilinear resampling; out-of-image
// samples read as fill_value. Identity when disabled. Standardized
// features should pass the standardized floor as the fill.
MelFeature augment(const MelFeature& feature, std::uint64_t rng_seed,
                   const AugmentConfig& cfg, double fill_value = kLogFloorFill);

// Scalar z-scoring. The stats-free overload computes mean/std over every
// entry of the given (training) features, applies, and returns the stats;
// the other applies previously computed stats. Both refuse features that
// were already standardized.
FeatureStats standardize(std::vector<MelFeature>& features);
void standardize(std::vector<MelFeature>& features, const FeatureStats& stats);

// Tensor exchange file: magic "CFT1", dims (count, rows, cols) as
// little-endian u32, then row-major 32-bit floats.
void save_tensor(const std::vector<Matrix>& matrices, const std::string& path);
std::vector<Matrix> load_tensor(const std::string& path);

}  // namespace cough
