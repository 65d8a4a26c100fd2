#include "cough/features.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <random>

#include "cough/error.hpp"
#include "cough/fft.hpp"

namespace cough {

double hz_to_mel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }

double mel_to_hz(double mel) {
    return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0);
}

Matrix stft_power(const Chunk& chunk, const FeatureConfig& cfg) {
    const auto& x = chunk.samples;
    if (x.size() < static_cast<std::size_t>(cfg.frame_len)) {
        throw ShapeMismatch("chunk shorter than one frame");
    }
    const std::size_t frame_len = static_cast<std::size_t>(cfg.frame_len);
    const std::size_t hop = static_cast<std::size_t>(cfg.hop);
    const std::size_t fft_size = static_cast<std::size_t>(cfg.fft_size);
    const std::size_t n_frames = 1 + (x.size() - frame_len) / hop;
    const std::size_t n_bins = fft_size / 2 + 1;

    const std::vector<double> window = hann_window(frame_len);
    FftPlan plan(fft_size);

    Matrix power(n_bins, n_frames);
    std::vector<double> frame(fft_size);
    for (std::size_t t = 0; t < n_frames; ++t) {
        std::fill(frame.begin(), frame.end(), 0.0);
        const std::size_t off = t * hop;
        for (std::size_t j = 0; j < frame_len; ++j) {
            frame[j] = window[j] * x[off + j];
        }
        auto spec = plan.forward_real(frame);
        for (std::size_t k = 0; k < n_bins; ++k) {
            power.at(k, t) = std::norm(spec[k]);
        }
    }
    return power;
}

Matrix mel_filterbank(const FeatureConfig& cfg, int sample_rate_hz) {
    const std::size_t n_bins = static_cast<std::size_t>(cfg.fft_size) / 2 + 1;
    const std::size_t n_mels = static_cast<std::size_t>(cfg.n_mels);
    const double bin_hz =
        static_cast<double>(sample_rate_hz) / static_cast<double>(cfg.fft_size);

    const double mel_lo = hz_to_mel(cfg.fmin_hz);
    const double mel_hi = hz_to_mel(cfg.fmax_hz);
    std::vector<double> edge_hz(n_mels + 2);
    for (std::size_t i = 0; i < edge_hz.size(); ++i) {
        double mel = mel_lo + (mel_hi - mel_lo) * static_cast<double>(i) /
                                  static_cast<double>(n_mels + 1);
        edge_hz[i] = mel_to_hz(mel);
    }

    Matrix fb(n_mels, n_bins);
    for (std::size_t m = 0; m < n_mels; ++m) {
        const double left = edge_hz[m];
        const double center = edge_hz[m + 1];
        const double right = edge_hz[m + 2];
        bool any = false;
        for (std::size_t k = 0; k < n_bins; ++k) {
            const double f = static_cast<double>(k) * bin_hz;
            double w = 0.0;
            if (f > left && f < center) {
                w = (f - left) / (center - left);
            } else if (f >= center && f < right) {
                w = (right - f) / (right - center);
            }
            if (w > 0.0) {
                fb.at(m, k) = w;
                any = true;
            }
        }
        if (!any) {
            auto k = static_cast<std::size_t>(
                std::clamp(std::lround(center / bin_hz), 0L,
                           static_cast<long>(n_bins - 1)));
            fb.at(m, k) = 1.0;
        }
    }
    return fb;
}

MelFeature log_mel(const Chunk& chunk, const FeatureConfig& cfg) {
    const int sample_rate_hz = static_cast<int>(chunk.samples.size());
    Matrix power = stft_power(chunk, cfg);
    Matrix fb = mel_filterbank(cfg, sample_rate_hz);

    MelFeature feat;
    feat.chunk_ref = chunk.source_id;
    feat.matrix = Matrix(fb.rows, power.cols);
    for (std::size_t m = 0; m < fb.rows; ++m) {
        for (std::size_t t = 0; t < power.cols; ++t) {
            double e = 0.0;
            for (std::size_t k = 0; k < fb.cols; ++k) {
                double w = fb.at(m, k);
                if (w != 0.0) e += w * power.at(k, t);
            }
            feat.matrix.at(m, t) = std::log(std::max(e, cfg.log_floor));
        }
    }
    if (cfg.use_mfcc) {
        feat.mfcc = mfcc_from_mel(feat.matrix, cfg.n_mfcc);
    }
    return feat;
}

Matrix mfcc_from_mel(const Matrix& mel_matrix, int n_mfcc) {
    const std::size_t n = mel_matrix.rows;
    const std::size_t keep = static_cast<std::size_t>(n_mfcc);
    if (keep > n) throw ShapeMismatch("n_mfcc exceeds n_mels");

    // Orthonormal DCT-II basis over the Mel axis.
    Matrix basis(keep, n);
    const double s0 = std::sqrt(1.0 / static_cast<double>(n));
    const double sj = std::sqrt(2.0 / static_cast<double>(n));
    for (std::size_t j = 0; j < keep; ++j) {
        for (std::size_t i = 0; i < n; ++i) {
            double angle = M_PI / static_cast<double>(n) *
                           (static_cast<double>(i) + 0.5) * static_cast<double>(j);
            basis.at(j, i) = (j == 0 ? s0 : sj) * std::cos(angle);
        }
    }

    Matrix out(keep, mel_matrix.cols);
    for (std::size_t j = 0; j < keep; ++j) {
        for (std::size_t t = 0; t < mel_matrix.cols; ++t) {
            double acc = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                acc += basis.at(j, i) * mel_matrix.at(i, t);
            }
            out.at(j, t) = acc;
        }
    }
    return out;
}

namespace {

double bilinear(const Matrix& m, double r, double c, double fill) {
    const long r0 = static_cast<long>(std::floor(r));
    const long c0 = static_cast<long>(std::floor(c));
    const double fr = r - static_cast<double>(r0);
    const double fc = c - static_cast<double>(c0);

    auto sample = [&](long rr, long cc) {
        if (rr < 0 || cc < 0 || rr >= static_cast<long>(m.rows) ||
            cc >= static_cast<long>(m.cols)) {
            return fill;
        }
        return m.at(static_cast<std::size_t>(rr), static_cast<std::size_t>(cc));
    };

    return (1.0 - fr) * ((1.0 - fc) * sample(r0, c0) + fc * sample(r0, c0 + 1)) +
           fr * ((1.0 - fc) * sample(r0 + 1, c0) + fc * sample(r0 + 1, c0 + 1));
}

Matrix affine_resample(const Matrix& in, double scale, double rot_rad,
                       double fill) {
    // Inverse mapping about the image center: for each output pixel, find
    // where it came from and sample bilinearly.
    const double cr = (static_cast<double>(in.rows) - 1.0) / 2.0;
    const double cc = (static_cast<double>(in.cols) - 1.0) / 2.0;
    const double cos_t = std::cos(-rot_rad);
    const double sin_t = std::sin(-rot_rad);

    Matrix out(in.rows, in.cols);
    for (std::size_t r = 0; r < in.rows; ++r) {
        for (std::size_t c = 0; c < in.cols; ++c) {
            const double dr = (static_cast<double>(r) - cr) / scale;
            const double dc = (static_cast<double>(c) - cc) / scale;
            const double src_r = cr + cos_t * dr - sin_t * dc;
            const double src_c = cc + sin_t * dr + cos_t * dc;
            out.at(r, c) = bilinear(in, src_r, src_c, fill);
        }
    }
    return out;
}

}  // namespace

MelFeature augment(const MelFeature& feature, std::uint64_t rng_seed,
                   const AugmentConfig& cfg, double fill_value) {
    if (!cfg.enabled) return feature;

    std::mt19937_64 rng(rng_seed);
    std::uniform_real_distribution<double> scale_draw(cfg.scale_min,
                                                      cfg.scale_max);
    std::uniform_real_distribution<double> rot_draw(-cfg.rotate_max_deg,
                                                    cfg.rotate_max_deg);
    const double scale = scale_draw(rng);
    const double rot_rad = rot_draw(rng) * M_PI / 180.0;

    MelFeature out = feature;
    out.matrix = affine_resample(feature.matrix, scale, rot_rad, fill_value);
    if (feature.mfcc) {
        out.mfcc = affine_resample(*feature.mfcc, scale, rot_rad, fill_value);
    }
    return out;
}

namespace {

void apply_stats(std::vector<MelFeature>& features, const FeatureStats& stats) {
    const double denom = std::max(stats.std_dev, 1e-6);
    for (auto& f : features) {
        if (f.standardized) {
            throw Error("feature already standardized: " + f.chunk_ref);
        }
        for (auto& x : f.matrix.v) x = (x - stats.mean) / denom;
        if (f.mfcc) {
            for (auto& x : f.mfcc->v) x = (x - stats.mean) / denom;
        }
        f.standardized = true;
    }
}

}  // namespace

FeatureStats standardize(std::vector<MelFeature>& features) {
    double sum = 0.0;
    std::size_t count = 0;
    for (const auto& f : features) {
        for (double x : f.matrix.v) sum += x;
        count += f.matrix.v.size();
        if (f.mfcc) {
            for (double x : f.mfcc->v) sum += x;
            count += f.mfcc->v.size();
        }
    }
    if (count == 0) throw EmptyInput("no features to standardize");

    FeatureStats stats;
    stats.mean = sum / static_cast<double>(count);
    double sq = 0.0;
    for (const auto& f : features) {
        for (double x : f.matrix.v) sq += (x - stats.mean) * (x - stats.mean);
        if (f.mfcc) {
            for (double x : f.mfcc->v) sq += (x - stats.mean) * (x - stats.mean);
        }
    }
    stats.std_dev = std::sqrt(sq / static_cast<double>(count));
    apply_stats(features, stats);
    return stats;
}

void standardize(std::vector<MelFeature>& features, const FeatureStats& stats) {
    apply_stats(features, stats);
}

namespace {

void put_u32(std::ofstream& out, std::uint32_t v) {
    unsigned char b[4] = {static_cast<unsigned char>(v & 0xff),
                          static_cast<unsigned char>((v >> 8) & 0xff),
                          static_cast<unsigned char>((v >> 16) & 0xff),
                          static_cast<unsigned char>((v >> 24) & 0xff)};
    out.write(reinterpret_cast<const char*>(b), 4);
}

std::uint32_t get_u32(std::ifstream& in) {
    unsigned char b[4];
    if (!in.read(reinterpret_cast<char*>(b), 4)) {
        throw TruncatedFile("tensor file ended early");
    }
    return static_cast<std::uint32_t>(b[0]) |
           (static_cast<std::uint32_t>(b[1]) << 8) |
           (static_cast<std::uint32_t>(b[2]) << 16) |
           (static_cast<std::uint32_t>(b[3]) << 24);
}

}  // namespace

void save_tensor(const std::vector<Matrix>& matrices, const std::string& path) {
    if (matrices.empty()) throw EmptyInput("nothing to save");
    const std::size_t rows = matrices.front().rows;
    const std::size_t cols = matrices.front().cols;
    for (const auto& m : matrices) {
        if (m.rows != rows || m.cols != cols) {
            throw ShapeMismatch("tensor slices differ in shape");
        }
    }

    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoFailure("cannot open for write: " + path);
    out.write("CFT1", 4);
    put_u32(out, static_cast<std::uint32_t>(matrices.size()));
    put_u32(out, static_cast<std::uint32_t>(rows));
    put_u32(out, static_cast<std::uint32_t>(cols));
    for (const auto& m : matrices) {
        for (double x : m.v) {
            float f = static_cast<float>(x);
            std::uint32_t bits;
            std::memcpy(&bits, &f, 4);
            unsigned char b[4] = {static_cast<unsigned char>(bits & 0xff),
                                  static_cast<unsigned char>((bits >> 8) & 0xff),
                                  static_cast<unsigned char>((bits >> 16) & 0xff),
                                  static_cast<unsigned char>((bits >> 24) & 0xff)};
            out.write(reinterpret_cast<const char*>(b), 4);
        }
    }
    if (!out) throw IoFailure("write failed: " + path);
}

std::vector<Matrix> load_tensor(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoFailure("cannot open: " + path);
    char magic[4];
    if (!in.read(magic, 4)) throw TruncatedFile("tensor file too short");
    if (std::memcmp(magic, "CFT1", 4) != 0) {
        throw BadMagic("not a tensor file: " + path);
    }
    const std::uint32_t count = get_u32(in);
    const std::uint32_t rows = get_u32(in);
    const std::uint32_t cols = get_u32(in);

    std::vector<Matrix> matrices;
    matrices.reserve(count);
    for (std::uint32_t i = 0; i < count; ++i) {
        Matrix m(rows, cols);
        for (auto& x : m.v) {
            std::uint32_t bits = get_u32(in);
            float f;
            std::memcpy(&f, &bits, 4);
            x = static_cast<double>(f);
        }
        matrices.push_back(std::move(m));
    }
    return matrices;
}

}  // namespace cough
