#include "cough/preprocess.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <numeric>
#include <vector>

#include "cough/error.hpp"
#include "cough/fft.hpp"

namespace cough {

namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr int kHalfTaps = 32;  // 64-tap kernel
constexpr int kPhases = 512;
constexpr double kKaiserBeta = 8.6;
constexpr double kDownsampleRolloff = 0.945;

double bessel_i0(double x) {
    double sum = 1.0, term = 1.0;
    double half = x / 2.0;
    for (int k = 1; k < 64; ++k) {
        term *= (half / k) * (half / k);
        sum += term;
        if (term < sum * 1e-18) break;
    }
    return sum;
}

double kaiser(double u) {
    double v = u / kHalfTaps;
    if (v <= -1.0 || v >= 1.0) return 0.0;
    return bessel_i0(kKaiserBeta * std::sqrt(1.0 - v * v)) /
           bessel_i0(kKaiserBeta);
}

double sinc(double x) {
    if (std::abs(x) < 1e-12) return 1.0;
    return std::sin(kPi * x) / (kPi * x);
}

// Filter bank: kPhases+1 rows of 64 taps, row p holding the kernel sampled
// at fractional offset p/kPhases. Rows are normalized to unit DC gain.
std::vector<double> build_phase_table(double cutoff) {
    std::vector<double> table(static_cast<std::size_t>(kPhases + 1) * 64);
    for (int p = 0; p <= kPhases; ++p) {
        double frac = static_cast<double>(p) / kPhases;
        double sum = 0.0;
        double* row = table.data() + static_cast<std::size_t>(p) * 64;
        for (int j = 0; j < 64; ++j) {
            double u = (j - (kHalfTaps - 1)) - frac;
            row[j] = cutoff * sinc(cutoff * u) * kaiser(u);
            sum += row[j];
        }
        for (int j = 0; j < 64; ++j) row[j] /= sum;
    }
    return table;
}

struct FrameStats {
    std::vector<double> powers;        // mean square power per frame
    std::vector<std::size_t> offsets;  // frame start sample
    std::size_t frame_len = 0;
};

FrameStats frame_powers(const std::vector<float>& x, std::size_t frame_len) {
    FrameStats st;
    st.frame_len = frame_len;
    if (x.size() < frame_len) {
        double acc = 0.0;
        for (float v : x) acc += static_cast<double>(v) * v;
        st.powers.push_back(x.empty() ? 0.0 : acc / static_cast<double>(x.size()));
        st.offsets.push_back(0);
        return st;
    }
    for (std::size_t off = 0; off + frame_len <= x.size(); off += frame_len) {
        double acc = 0.0;
        for (std::size_t i = 0; i < frame_len; ++i) {
            acc += static_cast<double>(x[off + i]) * x[off + i];
        }
        st.powers.push_back(acc / static_cast<double>(frame_len));
        st.offsets.push_back(off);
    }
    return st;
}

std::size_t next_pow2(std::size_t n) {
    std::size_t p = 1;
    while (p < n) p <<= 1;
    return p;
}

// Geometric over arithmetic mean of a power spectrum (DC excluded).
double spectral_flatness_of(const std::vector<double>& power_bins) {
    double log_acc = 0.0, lin_acc = 0.0;
    std::size_t n = 0;
    for (std::size_t k = 1; k < power_bins.size(); ++k) {
        double v = power_bins[k];
        log_acc += std::log(v + 1e-30);
        lin_acc += v;
        ++n;
    }
    if (n == 0 || lin_acc <= 1e-30) return 1.0;
    double geo = std::exp(log_acc / static_cast<double>(n));
    return std::min(1.0, geo / (lin_acc / static_cast<double>(n)));
}

}  // namespace

AudioBuffer resample(const AudioBuffer& buffer, int target_rate_hz) {
    if (!buffer.valid() || target_rate_hz <= 0) {
        throw Error("resample: invalid buffer or target rate");
    }
    if (buffer.sample_rate_hz == target_rate_hz) {
        return buffer;
    }

    const std::int64_t src = buffer.sample_rate_hz;
    const std::int64_t dst = target_rate_hz;
    const std::int64_t in_len = static_cast<std::int64_t>(buffer.samples.size());
    const std::int64_t out_len = (in_len * dst + src / 2) / src;

    double ratio = static_cast<double>(dst) / static_cast<double>(src);
    double cutoff = ratio >= 1.0 ? 1.0 : kDownsampleRolloff * ratio;
    std::vector<double> table = build_phase_table(cutoff);

    AudioBuffer out;
    out.sample_rate_hz = target_rate_hz;
    out.source_id = buffer.source_id;
    out.clipped = buffer.clipped;
    out.samples.resize(static_cast<std::size_t>(std::max<std::int64_t>(out_len, 0)));

    const float* x = buffer.samples.data();
    for (std::int64_t n = 0; n < out_len; ++n) {
        // Exact rational input position: t = n * src / dst.
        std::int64_t num = n * src;
        std::int64_t i0 = num / dst;
        double frac = static_cast<double>(num % dst) / static_cast<double>(dst);

        double fp = frac * kPhases;
        int p = static_cast<int>(fp);
        double blend = fp - p;
        const double* row0 = table.data() + static_cast<std::size_t>(p) * 64;
        const double* row1 = row0 + 64;

        double acc = 0.0;
        std::int64_t base = i0 - (kHalfTaps - 1);
        std::int64_t j_lo = std::max<std::int64_t>(0, -base);
        std::int64_t j_hi = std::min<std::int64_t>(64, in_len - base);
        for (std::int64_t j = j_lo; j < j_hi; ++j) {
            double h = row0[j] + blend * (row1[j] - row0[j]);
            acc += h * x[base + j];
        }
        out.samples[static_cast<std::size_t>(n)] = static_cast<float>(acc);
    }
    return out;
}

AudioBuffer peak_normalize(const AudioBuffer& buffer, double target_peak) {
    if (!buffer.valid()) throw Error("peak_normalize: invalid buffer");
    float peak = 0.0f;
    for (float v : buffer.samples) peak = std::max(peak, std::abs(v));
    if (peak < 1e-6f) {
        throw SilentAudio("peak " + std::to_string(peak) +
                          " below silence floor: " + buffer.source_id);
    }
    if (peak == static_cast<float>(target_peak)) {
        return buffer;  // already normalized; keep bit-exact idempotence
    }
    AudioBuffer out = buffer;
    double scale = target_peak / static_cast<double>(peak);
    for (auto& v : out.samples) {
        v = static_cast<float>(static_cast<double>(v) * scale);
    }
    return out;
}

double estimate_snr_db(const AudioBuffer& buffer, const PreprocessConfig& cfg) {
    if (!buffer.valid()) throw Error("estimate_snr_db: invalid buffer");
    std::size_t frame_len = static_cast<std::size_t>(
        std::max(1L, std::lround(0.032 * buffer.sample_rate_hz)));
    FrameStats st = frame_powers(buffer.samples, frame_len);

    std::vector<std::size_t> order(st.powers.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return st.powers[a] < st.powers[b];
    });

    std::size_t n_frames = order.size();
    std::size_t n_noise = std::max<std::size_t>(
        1, static_cast<std::size_t>(cfg.noise_floor_percentile *
                                    static_cast<double>(n_frames)));
    std::size_t n_signal = std::max<std::size_t>(
        1, static_cast<std::size_t>(0.1 * static_cast<double>(n_frames)));

    double noise_power = 0.0;
    for (std::size_t i = 0; i < n_noise; ++i) noise_power += st.powers[order[i]];
    noise_power /= static_cast<double>(n_noise);

    double signal_power = 0.0;
    for (std::size_t i = 0; i < n_signal; ++i) {
        signal_power += st.powers[order[n_frames - 1 - i]];
    }
    signal_power /= static_cast<double>(n_signal);

    // Mean spectrum of the quiet frames; tonal content there is leakage from
    // the signal, so the floor only counts in proportion to its flatness.
    std::size_t fft_len = next_pow2(frame_len);
    FftPlan plan(fft_len);
    std::vector<double> window = hann_window(frame_len);
    std::vector<double> mean_spectrum(fft_len / 2 + 1, 0.0);
    for (std::size_t i = 0; i < n_noise; ++i) {
        std::size_t off = st.offsets[order[i]];
        std::vector<double> frame(frame_len, 0.0);
        std::size_t m = std::min(frame_len, buffer.samples.size() - off);
        for (std::size_t j = 0; j < m; ++j) {
            frame[j] = window[j] * buffer.samples[off + j];
        }
        auto spec = plan.forward_real(frame);
        for (std::size_t k = 0; k <= fft_len / 2; ++k) {
            mean_spectrum[k] += std::norm(spec[k]);
        }
    }
    double flatness = spectral_flatness_of(mean_spectrum);

    double snr = 10.0 * std::log10((signal_power + 1e-12) /
                                   (noise_power * flatness + 1e-12));
    return std::clamp(snr, -40.0, 80.0);
}

AudioBuffer spectral_gate_denoise(const AudioBuffer& buffer,
                                  const PreprocessConfig& cfg) {
    if (!buffer.valid()) throw Error("spectral_gate_denoise: invalid buffer");
    constexpr std::size_t kFrame = 512;
    constexpr std::size_t kHop = 256;

    const std::size_t len = buffer.samples.size();
    // Lead/tail padding keeps the Hann overlap sum at exactly 1 across the
    // whole original span.
    std::size_t padded_len = kFrame + len + 2 * kFrame;
    padded_len = ((padded_len + kHop - 1) / kHop) * kHop;
    std::vector<double> x(padded_len, 0.0);
    for (std::size_t i = 0; i < len; ++i) x[kFrame + i] = buffer.samples[i];

    std::vector<double> window = hann_window(kFrame);
    FftPlan plan(kFrame);

    std::size_t n_frames = (padded_len - kFrame) / kHop + 1;
    std::vector<std::vector<std::complex<double>>> spectra(n_frames);
    std::vector<double> powers(n_frames);
    std::vector<bool> interior(n_frames, false);
    for (std::size_t f = 0; f < n_frames; ++f) {
        std::size_t off = f * kHop;
        std::vector<double> frame(kFrame);
        double p = 0.0;
        for (std::size_t j = 0; j < kFrame; ++j) {
            frame[j] = window[j] * x[off + j];
            p += frame[j] * frame[j];
        }
        spectra[f] = plan.forward_real(frame);
        powers[f] = p / kFrame;
        interior[f] = off >= kFrame && off + kFrame <= kFrame + len;
    }

    // Noise profile from the quietest fraction of frames fully inside the
    // signal (padding frames are artificial silence and must not count).
    std::vector<std::size_t> candidates;
    for (std::size_t f = 0; f < n_frames; ++f) {
        if (interior[f]) candidates.push_back(f);
    }
    if (candidates.empty()) {
        for (std::size_t f = 0; f < n_frames; ++f) candidates.push_back(f);
    }
    std::sort(candidates.begin(), candidates.end(),
              [&](std::size_t a, std::size_t b) { return powers[a] < powers[b]; });
    std::size_t n_noise = std::max<std::size_t>(
        1, static_cast<std::size_t>(cfg.noise_floor_percentile *
                                    static_cast<double>(candidates.size())));

    std::vector<double> noise_mag(kFrame, 0.0);
    for (std::size_t i = 0; i < n_noise; ++i) {
        const auto& spec = spectra[candidates[i]];
        for (std::size_t k = 0; k < kFrame; ++k) {
            noise_mag[k] += std::abs(spec[k]);
        }
    }
    for (auto& v : noise_mag) v /= static_cast<double>(n_noise);

    // Subtract, floor, resynthesize.
    std::vector<double> y(padded_len, 0.0);
    std::vector<std::complex<double>> work(kFrame);
    for (std::size_t f = 0; f < n_frames; ++f) {
        auto& spec = spectra[f];
        for (std::size_t k = 0; k < kFrame; ++k) {
            double m = std::abs(spec[k]);
            if (m <= 0.0) continue;
            double kept = std::max(m - cfg.gate_over_subtraction * noise_mag[k],
                                   cfg.spectral_floor * m);
            spec[k] *= kept / m;
        }
        work = spec;
        plan.inverse(work);
        std::size_t off = f * kHop;
        for (std::size_t j = 0; j < kFrame; ++j) {
            y[off + j] += work[j].real();
        }
    }

    AudioBuffer out;
    out.sample_rate_hz = buffer.sample_rate_hz;
    out.source_id = buffer.source_id;
    out.clipped = buffer.clipped;
    out.samples.resize(len);
    for (std::size_t i = 0; i < len; ++i) {
        out.samples[i] = static_cast<float>(y[kFrame + i]);
    }
    return out;
}

PreprocessResult preprocess(const AudioBuffer& buffer,
                            const PreprocessConfig& cfg) {
    PreprocessResult result;
    AudioBuffer working = resample(buffer, cfg.target_rate_hz);

    result.report.snr_db = estimate_snr_db(working, cfg);
    if (result.report.snr_db < cfg.snr_denoise_threshold_db) {
        working = spectral_gate_denoise(working, cfg);
        result.report.denoise_applied = true;
    }

    float peak = 0.0f;
    for (float v : working.samples) peak = std::max(peak, std::abs(v));
    result.buffer = peak_normalize(working, cfg.target_peak);
    result.report.scale_factor =
        peak > 0.0f ? cfg.target_peak / static_cast<double>(peak) : 1.0;
    return result;
}

}  // namespace cough
