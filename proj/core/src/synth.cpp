#include "cough/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <random>

#include "cough/error.hpp"
#include "cough/wav.hpp"

namespace cough {

namespace {

struct BurstBand {
    double f_lo, f_hi;
    double tilt;  // component weight = (f/f_lo)^tilt
};

constexpr BurstBand kPositiveBand{300.0, 1400.0, -0.7};
constexpr BurstBand kNegativeBand{900.0, 3200.0, 0.3};
constexpr BurstBand kGateBand{300.0, 2800.0, -0.5};

void add_noise(std::vector<float>& x, double amp, std::mt19937_64& rng) {
    std::normal_distribution<double> n(0.0, amp);
    for (auto& v : x) v += static_cast<float>(n(rng));
}

// A short excitation with sharp attack and exponential decay, built from a
// handful of random sinusoids inside the band.
void add_burst(std::vector<float>& x, int rate, double t_start, double dur_s,
               const BurstBand& band, double amp, std::mt19937_64& rng) {
    constexpr int kComponents = 14;
    std::uniform_real_distribution<double> u(0.0, 1.0);

    double freqs[kComponents], phases[kComponents], weights[kComponents];
    double wsum = 0.0;
    for (int c = 0; c < kComponents; ++c) {
        freqs[c] = band.f_lo + (band.f_hi - band.f_lo) * u(rng);
        phases[c] = 2.0 * M_PI * u(rng);
        weights[c] = std::pow(freqs[c] / band.f_lo, band.tilt);
        wsum += weights[c];
    }
    for (double& w : weights) w /= wsum;

    const long start = std::lround(t_start * rate);
    const long len = std::lround(dur_s * rate);
    const double attack_s = 0.008;
    const double tau = dur_s / 3.0;
    for (long i = 0; i < len; ++i) {
        const long idx = start + i;
        if (idx < 0 || idx >= static_cast<long>(x.size())) continue;
        const double t = static_cast<double>(i) / rate;
        double env = t < attack_s ? t / attack_s : std::exp(-(t - attack_s) / tau);
        double s = 0.0;
        for (int c = 0; c < kComponents; ++c) {
            s += weights[c] * std::sin(2.0 * M_PI * freqs[c] * t + phases[c]);
        }
        x[static_cast<std::size_t>(idx)] += static_cast<float>(amp * env * s * 3.0);
    }
}

void clamp_peak(std::vector<float>& x, float limit) {
    for (auto& v : x) v = std::clamp(v, -limit, limit);
}

}  // namespace

std::vector<std::pair<Chunk, bool>> synth_gate_corpus(int n_chunks,
                                                      int sample_rate_hz,
                                                      std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<std::pair<Chunk, bool>> out;
    out.reserve(static_cast<std::size_t>(n_chunks));

    char name[48];
    for (int i = 0; i < n_chunks; ++i) {
        Chunk chunk;
        chunk.samples.assign(static_cast<std::size_t>(sample_rate_hz), 0.0f);
        const bool cough = i % 2 == 0;
        if (cough) {
            add_noise(chunk.samples, 3e-4, rng);
            const int n_bursts = 1 + static_cast<int>(u(rng) * 3.0);
            for (int b = 0; b < n_bursts; ++b) {
                add_burst(chunk.samples, sample_rate_hz, 0.05 + 0.7 * u(rng),
                          0.08 + 0.17 * u(rng), kGateBand, 0.3 + 0.6 * u(rng),
                          rng);
            }
            std::snprintf(name, sizeof name, "gate_cough_%04d", i);
        } else {
            switch ((i / 2) % 3) {
                case 0:  // near-silence
                    add_noise(chunk.samples, 2e-5 + 3e-5 * u(rng), rng);
                    break;
                case 1: {  // steady tone
                    const double f = 120.0 + 3300.0 * u(rng);
                    const double a = 0.1 + 0.6 * u(rng);
                    const double phase = 2.0 * M_PI * u(rng);
                    for (std::size_t j = 0; j < chunk.samples.size(); ++j) {
                        chunk.samples[j] += static_cast<float>(
                            a * std::sin(2.0 * M_PI * f * j / sample_rate_hz +
                                         phase));
                    }
                    break;
                }
                case 2:  // stationary noise
                    add_noise(chunk.samples, 0.03 + 0.1 * u(rng), rng);
                    break;
            }
            std::snprintf(name, sizeof name, "gate_other_%04d", i);
        }
        clamp_peak(chunk.samples, 0.98f);
        chunk.source_id = name;
        out.emplace_back(std::move(chunk), cough);
    }
    return out;
}

AudioBuffer synth_recording(bool positive_proxy, int sample_rate_hz,
                            std::uint64_t seed, const std::string& source_id) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);

    const double dur_s = 2.0 + u(rng);
    AudioBuffer buf;
    buf.sample_rate_hz = sample_rate_hz;
    buf.source_id = source_id;
    buf.samples.assign(static_cast<std::size_t>(std::lround(dur_s * sample_rate_hz)),
                       0.0f);
    add_noise(buf.samples, 2e-4, rng);

    const BurstBand& band = positive_proxy ? kPositiveBand : kNegativeBand;
    const int whole_seconds = static_cast<int>(dur_s);
    for (int s = 0; s < whole_seconds; ++s) {
        const int n_bursts = 1 + (u(rng) < 0.4 ? 1 : 0);
        for (int b = 0; b < n_bursts; ++b) {
            add_burst(buf.samples, sample_rate_hz, s + 0.05 + 0.5 * u(rng),
                      0.12 + 0.18 * u(rng), band, 0.4 + 0.45 * u(rng), rng);
        }
    }
    const double tail = dur_s - whole_seconds;
    if (tail >= 0.5) {
        add_burst(buf.samples, sample_rate_hz, whole_seconds + 0.05,
                  std::min(0.3, tail - 0.15), band, 0.4 + 0.45 * u(rng), rng);
    }
    clamp_peak(buf.samples, 0.98f);
    return buf;
}

std::vector<SampleRecord> synth_corpus(const std::string& out_dir, int n_files,
                                       std::uint64_t seed) {
    namespace fs = std::filesystem;
    fs::create_directories(out_dir);

    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    constexpr int kRates[3] = {16000, 48000, 8000};
    constexpr Sex kSexCycle[4] = {Sex::female, Sex::male, Sex::other, Sex::unknown};

    std::vector<SampleRecord> records;
    int file_idx = 0, individual = 0;
    while (file_idx < n_files) {
        const bool positive = individual % 2 == 1;
        const int files_here =
            std::min(n_files - file_idx, 2 + ((individual >> 1) & 1));
        char ind_id[16];
        std::snprintf(ind_id, sizeof ind_id, "ind%04d", individual);

        const Date test_date{2020, 6 + individual % 3, 1 + individual % 24};
        const int rec_delay = individual % 4;  // 0..3 days after the swab

        for (int f = 0; f < files_here; ++f) {
            char name[32];
            std::snprintf(name, sizeof name, "synth_%04d.wav", file_idx);
            const int rate = kRates[file_idx % 3];

            AudioBuffer buf = synth_recording(
                positive, rate, rng(), std::string(ind_id) + "/" + name);
            write_wav(buf, out_dir + "/" + name);

            SampleRecord rec;
            rec.audio_path = name;
            rec.individual_id = ind_id;
            rec.label = positive ? Label::positive : Label::negative;
            rec.test_type = TestType::pcr;
            rec.test_date = test_date;
            rec.recording_date =
                Date{test_date.year, test_date.month, test_date.day + rec_delay};
            rec.age = 18 + static_cast<int>(u(rng) * 70.0);
            rec.sex = kSexCycle[individual % 4];
            rec.triage.symptomatic_now = positive ? u(rng) < 0.7 : u(rng) < 0.2;
            rec.triage.close_contact = u(rng) < 0.3;
            if (positive) {
                rec.symptoms["cough"] = rec.recording_date;
                if (u(rng) < 0.5) {
                    rec.symptoms["fever"] = test_date;
                }
            }
            rec.swab_window_ok = true;
            records.push_back(std::move(rec));
            ++file_idx;
        }
        ++individual;
    }

    save_manifest(records, out_dir + "/manifest.jsonl");
    return records;
}

}  // namespace cough
