#include <benchmark/benchmark.h>

#include <cmath>
#include <random>

#include "cough/features.hpp"
#include "cough/model.hpp"
#include "cough/preprocess.hpp"
#include "cough/wav.hpp"

namespace {

cough::AudioBuffer make_tone(std::size_t rate, double seconds) {
    cough::AudioBuffer buf;
    buf.sample_rate_hz = static_cast<std::uint32_t>(rate);
    const std::size_t n = static_cast<std::size_t>(seconds * static_cast<double>(rate));
    buf.samples.resize(n);
    std::mt19937_64 rng(7);
    std::normal_distribution<float> noise(0.0f, 0.05f);
    for (std::size_t i = 0; i < n; ++i) {
        const double t = static_cast<double>(i) / static_cast<double>(rate);
        buf.samples[i] = 0.4f * std::sin(2.0 * 3.14159265358979 * 440.0 * t) + noise(rng);
    }
    return buf;
}

void bm_resample_48k_to_16k(benchmark::State& state) {
    const auto buf = make_tone(48000, 1.0);
    for (auto _ : state) {
        auto out = cough::resample(buf, 16000);
        benchmark::DoNotOptimize(out.samples.data());
    }
}
BENCHMARK(bm_resample_48k_to_16k);

void bm_log_mel_one_second(benchmark::State& state) {
    const auto buf = make_tone(16000, 1.0);
    cough::Chunk chunk;
    chunk.samples = buf.samples;
    cough::FeatureConfig cfg;
    for (auto _ : state) {
        auto feat = cough::log_mel(chunk, cfg);
        benchmark::DoNotOptimize(feat.matrix.v.data());
    }
}
BENCHMARK(bm_log_mel_one_second);

void bm_cnn_forward(benchmark::State& state) {
    cough::ModelConfig cfg;
    auto bundle = cough::init_bundle(cfg, 11);
    cough::MelFeature input;
    input.matrix = cough::Matrix(cfg.input_rows, cfg.input_cols);
    std::mt19937_64 rng(3);
    std::normal_distribution<double> d(0.0, 1.0);
    for (auto& x : input.matrix.v) x = d(rng);
    for (auto _ : state) {
        auto probs = cough::forward(bundle, input);
        benchmark::DoNotOptimize(probs.data());
    }
}
BENCHMARK(bm_cnn_forward);

void bm_wav_decode(benchmark::State& state) {
    const auto buf = make_tone(16000, 1.0);
    const std::string bytes = cough::encode_wav(buf);
    for (auto _ : state) {
        auto out = cough::decode_wav(bytes, "bench");
        benchmark::DoNotOptimize(out.samples.data());
    }
}
BENCHMARK(bm_wav_decode);

}  // namespace

BENCHMARK_MAIN();
