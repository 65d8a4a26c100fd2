#include "cough/segmenter.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "cough/error.hpp"
#include "cough/fft.hpp"

namespace cough {

namespace {

// Fixed rescaling that brings the six descriptors to comparable ranges
// before the logistic dot product. Part of the score definition, not
// learned state.
constexpr std::array<double, 6> kFeatureScale = {
    1.0 / 80.0,    // log RMS dB
    2.0,           // zero-crossing rate
    1.0 / 8000.0,  // centroid Hz
    1.0,           // flatness
    1.0 / 20.0,    // crest factor
    1.0 / 50.0,    // burst count
};

double logistic(double z) {
    if (z >= 0.0) {
        return 1.0 / (1.0 + std::exp(-z));
    }
    double e = std::exp(z);
    return e / (1.0 + e);
}

double scaled_dot(const GateFeatures& f, const std::array<double, 7>& w) {
    double z = w[6];
    for (std::size_t i = 0; i < 6; ++i) z += w[i] * f[i] * kFeatureScale[i];
    return z;
}

// Mean Hann-windowed power spectrum, 512-point frames, hop 256.
std::vector<double> welch_spectrum(const std::vector<float>& x) {
    constexpr std::size_t kFrame = 512;
    constexpr std::size_t kHop = 256;
    static const std::vector<double> window = hann_window(kFrame);
    FftPlan plan(kFrame);

    std::vector<double> mean(kFrame / 2 + 1, 0.0);
    std::size_t count = 0;
    for (std::size_t off = 0; off + kFrame <= x.size(); off += kHop) {
        std::vector<double> frame(kFrame);
        for (std::size_t j = 0; j < kFrame; ++j) frame[j] = window[j] * x[off + j];
        auto spec = plan.forward_real(frame);
        for (std::size_t k = 0; k <= kFrame / 2; ++k) mean[k] += std::norm(spec[k]);
        ++count;
    }
    if (count > 0) {
        for (auto& v : mean) v /= static_cast<double>(count);
    }
    return mean;
}

}  // namespace

std::vector<Chunk> chunk_audio(const AudioBuffer& buffer) {
    if (!buffer.valid()) throw Error("chunk_audio: invalid buffer");
    const std::size_t chunk_len = static_cast<std::size_t>(buffer.sample_rate_hz);

    std::vector<Chunk> chunks;
    for (std::size_t off = 0; off < buffer.samples.size(); off += chunk_len) {
        std::size_t avail = std::min(chunk_len, buffer.samples.size() - off);
        std::size_t padding = chunk_len - avail;
        if (static_cast<double>(padding) >=
            kMaxPaddingFraction * static_cast<double>(chunk_len)) {
            break;
        }

        Chunk c;
        c.samples.assign(chunk_len, 0.0f);
        std::copy_n(buffer.samples.begin() + static_cast<std::ptrdiff_t>(off),
                    avail, c.samples.begin());
        c.source_id = buffer.source_id;
        c.start_offset_s =
            static_cast<double>(off) / static_cast<double>(buffer.sample_rate_hz);
        c.padded_samples = static_cast<int>(padding);
        chunks.push_back(std::move(c));
    }
    return chunks;
}

std::vector<float> concat_chunks(const std::vector<Chunk>& chunks) {
    std::vector<float> out;
    for (const auto& c : chunks) {
        out.insert(out.end(), c.samples.begin(),
                   c.samples.end() - c.padded_samples);
    }
    return out;
}

GateFeatures extract_gate_features(const Chunk& chunk) {
    const auto& x = chunk.samples;
    const std::size_t n = x.size();
    GateFeatures f{};
    if (n == 0) return f;

    double energy = 0.0;
    float peak = 0.0f;
    std::size_t crossings = 0;
    for (std::size_t i = 0; i < n; ++i) {
        energy += static_cast<double>(x[i]) * x[i];
        peak = std::max(peak, std::abs(x[i]));
        if (i > 0 && (x[i] > 0.0f) != (x[i - 1] > 0.0f)) ++crossings;
    }
    double rms = std::sqrt(energy / static_cast<double>(n));

    f[0] = 20.0 * std::log10(std::max(rms, 1e-4));
    f[1] = static_cast<double>(crossings) / static_cast<double>(n);

    std::vector<double> spectrum = welch_spectrum(x);
    double total = std::accumulate(spectrum.begin(), spectrum.end(), 0.0);
    if (total > 1e-20) {
        double weighted = 0.0;
        double bin_hz = static_cast<double>(n) / 512.0;  // rate/fft at 1 s chunks
        for (std::size_t k = 0; k < spectrum.size(); ++k) {
            weighted += spectrum[k] * (static_cast<double>(k) * bin_hz);
        }
        f[2] = weighted / total;

        double log_acc = 0.0, lin_acc = 0.0;
        for (std::size_t k = 1; k < spectrum.size(); ++k) {
            log_acc += std::log(spectrum[k] + 1e-30);
            lin_acc += spectrum[k];
        }
        double bins = static_cast<double>(spectrum.size() - 1);
        f[3] = std::min(1.0, std::exp(log_acc / bins) / (lin_acc / bins));
    } else {
        f[2] = 0.0;
        f[3] = 1.0;  // silence has no spectral shape
    }

    f[4] = rms > 1e-8 ? static_cast<double>(peak) / rms : 0.0;

    // 10 ms frame energies vs. their median.
    std::size_t frame_len = std::max<std::size_t>(1, n / 100);
    std::vector<double> frame_energy;
    for (std::size_t off = 0; off + frame_len <= n; off += frame_len) {
        double e = 0.0;
        for (std::size_t j = 0; j < frame_len; ++j) {
            e += static_cast<double>(x[off + j]) * x[off + j];
        }
        frame_energy.push_back(e);
    }
    std::vector<double> sorted = frame_energy;
    std::sort(sorted.begin(), sorted.end());
    double median = sorted.empty() ? 0.0 : sorted[sorted.size() / 2];
    std::size_t bursts = 0;
    for (double e : frame_energy) {
        if (e > 3.0 * median) ++bursts;
    }
    f[5] = static_cast<double>(bursts);
    return f;
}

double gate_score(const Chunk& chunk, const GateModel& model) {
    return logistic(scaled_dot(extract_gate_features(chunk), model.weights));
}

GateTrainResult train_gate(const std::vector<std::pair<Chunk, bool>>& labeled,
                           int epochs, double learning_rate) {
    bool saw_true = false, saw_false = false;
    for (const auto& [chunk, label] : labeled) {
        (label ? saw_true : saw_false) = true;
    }
    if (!saw_true || !saw_false) {
        throw SingleClass("gate training needs both classes");
    }

    const std::size_t n = labeled.size();
    std::vector<GateFeatures> feats(n);
    std::vector<double> targets(n);
    for (std::size_t i = 0; i < n; ++i) {
        feats[i] = extract_gate_features(labeled[i].first);
        targets[i] = labeled[i].second ? 1.0 : 0.0;
    }

    GateTrainResult result;
    auto& w = result.model.weights;
    w.fill(0.0);
    result.loss_per_epoch.reserve(static_cast<std::size_t>(epochs));

    for (int epoch = 0; epoch < epochs; ++epoch) {
        std::array<double, 7> grad{};
        double loss = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            double p = logistic(scaled_dot(feats[i], w));
            double pc = std::clamp(p, 1e-12, 1.0 - 1e-12);
            loss -= targets[i] * std::log(pc) + (1.0 - targets[i]) * std::log(1.0 - pc);
            double err = p - targets[i];
            for (std::size_t j = 0; j < 6; ++j) {
                grad[j] += err * feats[i][j] * kFeatureScale[j];
            }
            grad[6] += err;
        }
        loss /= static_cast<double>(n);
        result.loss_per_epoch.push_back(loss);
        for (std::size_t j = 0; j < 7; ++j) {
            w[j] -= learning_rate * grad[j] / static_cast<double>(n);
        }
    }

    std::size_t correct = 0;
    for (std::size_t i = 0; i < n; ++i) {
        double p = logistic(scaled_dot(feats[i], w));
        bool predicted = p >= result.model.decision_threshold;
        if (predicted == labeled[i].second) ++correct;
    }
    result.train_accuracy = static_cast<double>(correct) / static_cast<double>(n);
    return result;
}

std::vector<Chunk> filter_cough_chunks(const std::vector<Chunk>& chunks,
                                       const GateModel& model) {
    std::vector<Chunk> kept;
    for (const auto& chunk : chunks) {
        Chunk scored = chunk;
        scored.gate_score = gate_score(chunk, model);
        if (*scored.gate_score >= model.decision_threshold) {
            kept.push_back(std::move(scored));
        }
    }
    if (kept.empty()) {
        throw NoCoughDetected("no chunk passed the cough gate");
    }
    return kept;
}

}  // namespace cough
