// End-to-end acceptance gate. Each check prints one PASS/FAIL line with its
// runtime; the process exits nonzero if any check fails or overruns its
// budget. Run through ctest or directly.

#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <complex>
#include <csignal>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "cough/dataset.hpp"
#include "cough/error.hpp"
#include "cough/eval.hpp"
#include "cough/features.hpp"
#include "cough/fft.hpp"
#include "cough/hash.hpp"
#include "cough/model.hpp"
#include "cough/pipeline.hpp"
#include "cough/preprocess.hpp"
#include "cough/record_log.hpp"
#include "cough/segmenter.hpp"
#include "cough/service.hpp"
#include "cough/synth.hpp"
#include "cough/wav.hpp"

using namespace cough;
namespace fs = std::filesystem;

namespace {

constexpr double kPi = 3.14159265358979323846;

struct CheckFailure {
    std::string detail;
};

void expect(bool ok, const std::string& detail) {
    if (!ok) throw CheckFailure{detail};
}

fs::path work_dir() {
    static fs::path dir = [] {
        auto d = fs::temp_directory_path() / "acceptance_work";
        fs::remove_all(d);
        fs::create_directories(d);
        return d;
    }();
    return dir;
}

std::string file_bytes(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), {}};
}

// ---------------------------------------------------------------- dsp oracles

std::vector<std::complex<double>> naive_dft(
    const std::vector<std::complex<double>>& x) {
    const std::size_t n = x.size();
    std::vector<std::complex<double>> out(n);
    for (std::size_t k = 0; k < n; ++k) {
        std::complex<double> acc{0.0, 0.0};
        for (std::size_t t = 0; t < n; ++t) {
            const double a = -2.0 * kPi * static_cast<double>(k * t) /
                             static_cast<double>(n);
            acc += x[t] * std::complex<double>(std::cos(a), std::sin(a));
        }
        out[k] = acc;
    }
    return out;
}

std::string check_dsp_oracles() {
    std::mt19937_64 rng(0xD5F);
    std::normal_distribution<double> dist(0.0, 1.0);

    // 200 random frames, fast vs naive, relative error <= 1e-6.
    double worst_dft = 0.0;
    const std::size_t sizes[] = {64, 128, 256, 512};
    for (int rep = 0; rep < 200; ++rep) {
        const std::size_t n = sizes[rep % 4];
        FftPlan plan(n);
        std::vector<std::complex<double>> x(n);
        for (auto& v : x) v = {dist(rng), dist(rng)};
        auto want = naive_dft(x);
        auto got = x;
        plan.forward(got);
        double scale = 0.0;
        for (const auto& w : want) scale = std::max(scale, std::abs(w));
        for (std::size_t i = 0; i < n; ++i) {
            worst_dft = std::max(worst_dft, std::abs(got[i] - want[i]) / scale);
        }

        // Per-frame Parseval on the real part.
        std::vector<double> frame(n);
        double te = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            frame[i] = x[i].real();
            te += frame[i] * frame[i];
        }
        auto spec = plan.forward_real(frame);
        double fe = 0.0;
        for (const auto& c : spec) fe += std::norm(c);
        fe /= static_cast<double>(n);
        expect(std::abs(fe - te) / te <= 1e-6, "parseval violated");
    }
    expect(worst_dft <= 1e-6, "fft vs naive dft worst rel " +
                                  std::to_string(worst_dft));

    // Resampled 440 Hz tone: FFT peak within one bin of 440.
    AudioBuffer tone;
    tone.sample_rate_hz = 48000;
    tone.samples.resize(48000);
    for (std::size_t i = 0; i < tone.samples.size(); ++i) {
        tone.samples[i] = 0.5f * static_cast<float>(
            std::sin(2.0 * kPi * 440.0 * static_cast<double>(i) / 48000.0));
    }
    auto down = resample(tone, 16000);
    const std::size_t nfft = 4096;
    FftPlan plan(nfft);
    std::vector<double> frame(nfft);
    auto win = hann_window(nfft);
    for (std::size_t i = 0; i < nfft; ++i) {
        frame[i] = win[i] * static_cast<double>(down.samples[4000 + i]);
    }
    auto spec = plan.forward_real(frame);
    std::size_t peak = 1;
    for (std::size_t k = 1; k < nfft / 2; ++k) {
        if (std::abs(spec[k]) > std::abs(spec[peak])) peak = k;
    }
    const double bin_hz = 16000.0 / static_cast<double>(nfft);
    const double peak_hz = static_cast<double>(peak) * bin_hz;
    expect(std::abs(peak_hz - 440.0) <= bin_hz,
           "resampled tone peak at " + std::to_string(peak_hz));

    // Mel centers invert to uniform Mel spacing within 1e-9.
    FeatureConfig fc;
    const double lo = hz_to_mel(fc.fmin_hz);
    const double hi = hz_to_mel(fc.fmax_hz);
    const double step = (hi - lo) / (fc.n_mels + 1);
    double worst_mel = 0.0;
    for (int m = 0; m <= fc.n_mels + 1; ++m) {
        const double mel = lo + step * m;
        worst_mel = std::max(worst_mel, std::abs(hz_to_mel(mel_to_hz(mel)) - mel));
    }
    expect(worst_mel <= 1e-9, "mel inversion worst " + std::to_string(worst_mel));

    char buf[128];
    std::snprintf(buf, sizeof buf, "dft<=%.1e mel<=%.1e peak %.1f Hz",
                  worst_dft, worst_mel, peak_hz);
    return buf;
}

// -------------------------------------------------------------- gradient check

std::string check_gradients() {
    ModelConfig cfg;
    cfg.conv_channels = {4};  // one conv/pool block
    cfg.hidden_units = 8;
    cfg.input_rows = 8;
    cfg.input_cols = 8;
    cfg.dropout_rate = 0.25;
    ModelBundle bundle = init_bundle(cfg, 17);

    std::vector<TrainSample> batch;
    std::mt19937_64 rng(0x6AD);
    std::normal_distribution<double> dist(0.0, 1.0);
    for (int i = 0; i < 3; ++i) {
        TrainSample s;
        s.feature.matrix = Matrix(8, 8);
        for (auto& x : s.feature.matrix.v) x = dist(rng);
        s.label = i % 2;
        batch.push_back(std::move(s));
    }

    auto [loss, grad] = loss_and_gradients(bundle, batch, 99, true);
    expect(std::isfinite(loss), "non-finite loss");
    expect(grad.size() == bundle.weights.size(), "gradient size mismatch");

    const double h = 1e-3;
    double worst = 0.0;
    for (std::size_t i = 0; i < bundle.weights.size(); ++i) {
        ModelBundle probe = bundle;
        probe.weights[i] = static_cast<float>(bundle.weights[i] + h);
        const double up = loss_and_gradients(probe, batch, 99, true).first;
        probe.weights[i] = static_cast<float>(bundle.weights[i] - h);
        const double down = loss_and_gradients(probe, batch, 99, true).first;
        const double fd = (up - down) / (2.0 * h);
        const double bp = static_cast<double>(grad[i]);
        const double rel = std::abs(fd - bp) / std::max(1.0, std::abs(fd));
        worst = std::max(worst, rel);
    }
    expect(worst <= 1e-2,
           "worst relative gradient error " + std::to_string(worst));
    char buf[96];
    std::snprintf(buf, sizeof buf, "%zu coordinates, worst rel %.2e",
                  bundle.weights.size(), worst);
    return buf;
}

// ------------------------------------------------------------------ gate analog

std::string check_gate_accuracy() {
    auto corpus = synth_gate_corpus(500, 16000, 0xC0FFEE);
    expect(corpus.size() == 500, "corpus size");

    // Held-out evaluation: 70/30 split after a seeded shuffle.
    std::vector<std::size_t> order(corpus.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::mt19937_64 rng(7);
    std::shuffle(order.begin(), order.end(), rng);

    std::vector<std::pair<Chunk, bool>> train_part, held_out;
    for (std::size_t i = 0; i < order.size(); ++i) {
        (i < 350 ? train_part : held_out).push_back(corpus[order[i]]);
    }
    auto result = train_gate(train_part);

    int correct = 0;
    for (const auto& [chunk, label] : held_out) {
        const bool pred =
            gate_score(chunk, result.model) >= result.model.decision_threshold;
        if (pred == label) ++correct;
    }
    const double acc = static_cast<double>(correct) /
                       static_cast<double>(held_out.size());
    expect(acc >= 0.97, "held-out gate accuracy " + std::to_string(acc));
    char buf[96];
    std::snprintf(buf, sizeof buf, "held-out accuracy %.4f (%d/%zu)", acc,
                  correct, held_out.size());
    return buf;
}

// --------------------------------------------------------- end-to-end learning

std::string check_end_to_end() {
    const fs::path dir = work_dir() / "e2e_corpus";
    auto records = synth_corpus(dir.string(), 400, 0xE2E);
    expect(records.size() == 400, "corpus size");

    auto plan = split_by_individual(records, {0.8, 0.1, 0.1}, 0xE2E);
    auto in = [](const std::vector<std::string>& ids, const std::string& id) {
        return std::binary_search(ids.begin(), ids.end(), id);
    };

    GateModel gate = train_gate(synth_gate_corpus(500, 16000, 0xE2E)).model;
    auto corpus = featurize_corpus(records, dir.string(), PreprocessConfig{},
                                   FeatureConfig{}, gate);
    expect(corpus.issues.empty(), "featurize issues");

    std::vector<TrainSample> train_set, val_set;
    std::vector<MelFeature> test_feats;
    std::vector<bool> test_labels;
    for (auto& s : corpus.samples) {
        if (in(plan.train, s.individual_id)) {
            train_set.push_back({std::move(s.feature), s.label});
        } else if (in(plan.val, s.individual_id)) {
            val_set.push_back({std::move(s.feature), s.label});
        } else {
            test_feats.push_back(std::move(s.feature));
            test_labels.push_back(s.label == 1);
        }
    }
    expect(!train_set.empty() && !val_set.empty() && !test_feats.empty(),
           "a split is empty");

    std::vector<MelFeature> fs_train;
    fs_train.reserve(train_set.size());
    for (auto& t : train_set) fs_train.push_back(std::move(t.feature));
    FeatureStats stats = standardize(fs_train);
    for (std::size_t i = 0; i < train_set.size(); ++i) {
        train_set[i].feature = std::move(fs_train[i]);
    }
    std::vector<MelFeature> fs_val;
    for (auto& t : val_set) fs_val.push_back(std::move(t.feature));
    standardize(fs_val, stats);
    for (std::size_t i = 0; i < val_set.size(); ++i) {
        val_set[i].feature = std::move(fs_val[i]);
    }
    standardize(test_feats, stats);

    TrainConfig tc;  // 70 epochs, adam, lr 1e-3, batch 32
    tc.seed = 0xE2E;
    auto [bundle, history] = train(train_set, val_set, ModelConfig{}, tc);

    std::vector<double> scores;
    scores.reserve(test_feats.size());
    for (const auto& f : test_feats) scores.push_back(predict(bundle, f).score);
    auto report = evaluate_scores(test_labels, scores, bundle.decision_threshold);
    expect(report.metrics.accuracy.has_value(), "no accuracy");
    expect(report.auc.has_value(), "no auc");

    expect(*report.metrics.accuracy >= 0.95,
           "test accuracy " + std::to_string(*report.metrics.accuracy));
    expect(*report.auc >= 0.98, "test auc " + std::to_string(*report.auc));

    // Training loss must be non-increasing in trend. Per-epoch loss is a
    // stochastic estimate (fresh dropout masks every batch), so even a
    // healthy run is not pointwise monotone; the 5-epoch moving average
    // must fall overall and any transient uptick must stay small next to
    // that fall. A plateau or divergence fails either way.
    const auto& loss = history.train_loss;
    expect(loss.size() == 70, "epoch count");
    std::vector<double> smooth;
    for (std::size_t i = 0; i + 5 <= loss.size(); ++i) {
        double s = 0.0;
        for (std::size_t k = i; k < i + 5; ++k) s += loss[k];
        smooth.push_back(s / 5.0);
    }
    const double drop = smooth.front() - smooth.back();
    expect(drop > 0.0, "smoothed loss did not decrease");
    double worst_uptick = 0.0;
    for (std::size_t i = 1; i < smooth.size(); ++i) {
        worst_uptick = std::max(worst_uptick, smooth[i] - smooth[i - 1]);
    }
    expect(worst_uptick <= 0.10 * drop,
           "smoothed loss rises by " + std::to_string(worst_uptick) +
               " against a total fall of " + std::to_string(drop));

    char buf[160];
    std::snprintf(
        buf, sizeof buf,
        "%zu/%zu/%zu chunks, test acc %.4f auc %.4f uptick %.1e of %.1e fall",
        train_set.size(), val_set.size(), test_feats.size(),
        *report.metrics.accuracy, *report.auc, worst_uptick, drop);
    return buf;
}

// ----------------------------------------------------------- metric identities

double concordance_oracle(const std::vector<bool>& labels,
                          const std::vector<double>& scores) {
    long long num2 = 0, pairs = 0;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (!labels[i]) continue;
        for (std::size_t j = 0; j < labels.size(); ++j) {
            if (labels[j]) continue;
            ++pairs;
            if (scores[i] > scores[j]) num2 += 2;
            else if (scores[i] == scores[j]) num2 += 1;
        }
    }
    return static_cast<double>(num2) / (2.0 * static_cast<double>(pairs));
}

std::string check_metric_identities() {
    std::mt19937_64 rng(0x3117);

    // AUC == concordance, exactly, across tie-heavy random suites.
    double worst = 0.0;
    for (int rep = 0; rep < 200; ++rep) {
        const std::size_t n = 2 + rng() % 199;
        std::vector<bool> labels(n);
        std::vector<double> scores(n);
        for (std::size_t i = 0; i < n; ++i) {
            labels[i] = rng() % 2 == 1;
            scores[i] = static_cast<double>(rng() % 16) / 15.0;
        }
        labels[0] = true;
        labels[n - 1] = false;
        const double auc = roc_auc(labels, scores).second;
        worst = std::max(worst, std::abs(auc - concordance_oracle(labels, scores)));
    }
    expect(worst <= 1e-12, "auc vs concordance diff " + std::to_string(worst));

    // Precision implied by recall 0.89 and F1 0.87.
    const double precision = 0.87 * 0.89 / (2.0 * 0.89 - 0.87);
    expect(std::abs(precision - 0.8509) <= 0.005,
           "implied precision " + std::to_string(precision));

    // 1000 random confusion matrices against hand formulas.
    std::uniform_int_distribution<long long> cell(0, 40);
    for (int rep = 0; rep < 1000; ++rep) {
        ConfusionMatrix m{cell(rng), cell(rng), cell(rng), cell(rng)};
        if (m.total() == 0) m.tn = 1;
        auto got = compute_metrics(m);
        const double tp = static_cast<double>(m.tp), fp = static_cast<double>(m.fp);
        const double tn = static_cast<double>(m.tn), fn = static_cast<double>(m.fn);
        expect(std::abs(*got.accuracy - (tp + tn) / (tp + fp + tn + fn)) <= 1e-12,
               "accuracy mismatch");
        if (m.tp + m.fn > 0) {
            expect(std::abs(*got.sensitivity - tp / (tp + fn)) <= 1e-12,
                   "sensitivity mismatch");
        }
        if (m.tn + m.fp > 0) {
            expect(std::abs(*got.specificity - tn / (tn + fp)) <= 1e-12,
                   "specificity mismatch");
        }
        if (m.tp + m.fp > 0) {
            expect(std::abs(*got.precision - tp / (tp + fp)) <= 1e-12,
                   "precision mismatch");
        }
    }

    char buf[96];
    std::snprintf(buf, sizeof buf, "auc diff <= %.1e, precision %.4f", worst,
                  precision);
    return buf;
}

// ---------------------------------------------------------------- determinism

std::string check_determinism() {
    const fs::path d1 = work_dir() / "det1";
    const fs::path d2 = work_dir() / "det2";
    auto r1 = synth_corpus(d1.string(), 12, 0xDE7);
    auto r2 = synth_corpus(d2.string(), 12, 0xDE7);
    expect(file_bytes(d1 / "manifest.jsonl") == file_bytes(d2 / "manifest.jsonl"),
           "manifests differ");
    for (const auto& rec : r1) {
        expect(file_bytes(d1 / rec.audio_path) == file_bytes(d2 / rec.audio_path),
               "wav differs: " + rec.audio_path);
    }

    // Same corpus, same seed: training twice gives byte-identical bundle
    // and history files.
    auto one_run = [&](const fs::path& out_bundle, const fs::path& out_hist) {
        GateModel gate = train_gate(synth_gate_corpus(120, 16000, 0xDE7)).model;
        auto corpus = featurize_corpus(r1, d1.string(), PreprocessConfig{},
                                       FeatureConfig{}, gate);
        auto plan = split_by_individual(r1, {0.8, 0.1, 0.1}, 0xDE7);
        auto in = [](const std::vector<std::string>& ids, const std::string& id) {
            return std::binary_search(ids.begin(), ids.end(), id);
        };
        std::vector<TrainSample> train_set, val_set;
        for (auto& s : corpus.samples) {
            if (in(plan.train, s.individual_id)) {
                train_set.push_back({std::move(s.feature), s.label});
            } else {
                val_set.push_back({std::move(s.feature), s.label});
            }
        }
        std::vector<MelFeature> feats;
        for (auto& t : train_set) feats.push_back(std::move(t.feature));
        FeatureStats stats = standardize(feats);
        for (std::size_t i = 0; i < train_set.size(); ++i) {
            train_set[i].feature = std::move(feats[i]);
        }
        feats.clear();
        for (auto& t : val_set) feats.push_back(std::move(t.feature));
        standardize(feats, stats);
        for (std::size_t i = 0; i < val_set.size(); ++i) {
            val_set[i].feature = std::move(feats[i]);
        }
        TrainConfig tc;
        tc.epochs = 3;
        tc.batch_size = 16;
        tc.seed = 0xDE7;
        auto [bundle, history] = train(train_set, val_set, ModelConfig{}, tc);
        bundle.feature_stats = stats;
        bundle.gate = gate;
        save_bundle(bundle, out_bundle.string());
        save_history_csv(history, out_hist.string());
    };
    one_run(work_dir() / "det_a.cghm", work_dir() / "det_a.csv");
    one_run(work_dir() / "det_b.cghm", work_dir() / "det_b.csv");
    expect(file_bytes(work_dir() / "det_a.cghm") ==
               file_bytes(work_dir() / "det_b.cghm"),
           "bundles differ");
    expect(file_bytes(work_dir() / "det_a.csv") ==
               file_bytes(work_dir() / "det_b.csv"),
           "histories differ");
    return "corpus, bundle and history bytes identical across runs";
}

// ---------------------------------------------------------- chunking exactness

std::string check_chunking() {
    std::mt19937_64 rng(0xC4);
    std::uniform_int_distribution<std::size_t> len_dist(1, 120000);
    const std::uint32_t rates[] = {16000, 8000, 44100, 48000};
    for (int rep = 0; rep < 1000; ++rep) {
        const std::uint32_t rate = rates[rep % 4];
        const std::size_t n = len_dist(rng);
        AudioBuffer buf;
        buf.sample_rate_hz = rate;
        buf.samples.resize(n);
        for (std::size_t i = 0; i < n; ++i) {
            buf.samples[i] = static_cast<float>((i * 31 + 7) % 211) / 256.0f;
        }
        auto chunks = chunk_audio(buf);

        const std::size_t chunk_len = rate;
        const std::size_t full = n / chunk_len;
        const std::size_t tail = n % chunk_len;
        const std::size_t padding = tail == 0 ? 0 : chunk_len - tail;
        const bool tail_kept = tail != 0 && padding * 20 < chunk_len * 19;
        expect(chunks.size() == full + (tail_kept ? 1 : 0), "chunk count");
        for (std::size_t c = 0; c < chunks.size(); ++c) {
            expect(chunks[c].samples.size() == chunk_len, "chunk length");
            const bool padded = tail_kept && c + 1 == chunks.size();
            expect(chunks[c].padded_samples ==
                       (padded ? static_cast<int>(padding) : 0),
                   "padding record");
        }
        auto rebuilt = concat_chunks(chunks);
        const std::size_t covered = tail_kept ? n : full * chunk_len;
        expect(rebuilt.size() == covered, "reconstruction length");
        for (std::size_t i = 0; i < covered; ++i) {
            expect(rebuilt[i] == buf.samples[i], "reconstruction bytes");
        }
    }
    return "1000 durations, counts/padding/reconstruction exact";
}

// ----------------------------------------------------------------- persistence

std::string check_serialization() {
    // Bundle round trip, byte identical.
    ModelConfig small;
    small.conv_channels = {4};
    small.hidden_units = 8;
    small.input_rows = 8;
    small.input_cols = 8;
    ModelBundle bundle = init_bundle(small, 3);
    bundle.gate.weights = {1, -2, 3, -4, 5, -6, 0.5};
    const fs::path b1 = work_dir() / "s1.cghm";
    const fs::path b2 = work_dir() / "s2.cghm";
    save_bundle(bundle, b1.string());
    save_bundle(load_bundle(b1.string()), b2.string());
    expect(file_bytes(b1) == file_bytes(b2), "bundle round trip");

    // Record log: 100 kill -9 cycles, zero partial records.
    const fs::path log_path = work_dir() / "kill.log";
    std::uint64_t total = 0;
    for (int iter = 0; iter < 100; ++iter) {
        const pid_t pid = fork();
        expect(pid >= 0, "fork failed");
        if (pid == 0) {
            try {
                RecordLog log(log_path.string());
                const std::uint64_t base = log.size();
                for (std::uint64_t i = 0;; ++i) {
                    nlohmann::json j;
                    j["n"] = base + i;
                    j["pad"] = std::string((base + i) % 83, 'q');
                    log.append(j);
                }
            } catch (...) {
            }
            _exit(0);
        }
        usleep(static_cast<useconds_t>(150 + (iter * 211) % 1900));
        kill(pid, SIGKILL);
        int status = 0;
        waitpid(pid, &status, 0);

        RecordLog log(log_path.string());
        auto records = log.records();
        expect(records.size() >= total, "log shrank");
        for (std::size_t i = 0; i < records.size(); ++i) {
            expect(records[i].contains("n") &&
                       records[i]["n"].get<std::uint64_t>() == i,
                   "record sequence broken at " + std::to_string(i));
        }
        total = records.size();
    }
    expect(total > 0, "no records survived");
    char buf[96];
    std::snprintf(buf, sizeof buf,
                  "bundle bytes stable; %llu records after 100 kills",
                  static_cast<unsigned long long>(total));
    return buf;
}

// ------------------------------------------------------------ service contract

std::string check_service() {
    const fs::path dir = work_dir() / "svc";
    fs::create_directories(dir);
    const std::string bundle_path = (dir / "model.cghm").string();
    ModelBundle bundle = init_bundle(ModelConfig{}, 5);
    bundle.gate = train_gate(synth_gate_corpus(120, 16000, 4)).model;
    save_bundle(bundle, bundle_path);

    ServiceConfig cfg;
    cfg.model_path = bundle_path;
    cfg.data_dir = (dir / "data").string();
    Service service(cfg);
    const int port = service.bind_any();
    expect(port > 0, "bind failed");
    std::thread runner([&] { service.listen_after_bind(); });

    httplib::Client cli("127.0.0.1", port);
    cli.set_read_timeout(60, 0);
    for (int i = 0; i < 100; ++i) {
        if (auto r = cli.Get("/v1/health")) break;
        std::this_thread::sleep_for(std::chrono::milliseconds(10));
    }

    auto post = [&](const std::string& wav, const std::string& meta) {
        httplib::MultipartFormDataItems items{
            {"audio", wav, "r.wav", "audio/wav"}};
        if (!meta.empty()) {
            items.push_back({"metadata", meta, "", "application/json"});
        }
        return cli.Post("/v1/submissions", items);
    };

    // Valid submission: 201 with every result field.
    const std::string cough = encode_wav(synth_recording(true, 16000, 8, "a"));
    auto ok = post(cough, R"({"consent":true})");
    expect(ok && ok->status == 201, "valid submission not 201");
    auto body = nlohmann::json::parse(ok->body);
    for (const char* field :
         {"submission_id", "n_chunks_total", "n_chunks_cough", "chunk_scores",
          "recording_score", "label", "model_version", "advisory"}) {
        expect(body.contains(field), std::string("missing field ") + field);
    }

    // Silence: 422, no_cough_detected, persisted.
    AudioBuffer silent;
    silent.sample_rate_hz = 16000;
    silent.samples.assign(32000, 0.0f);
    auto sil = post(encode_wav(silent), R"({"consent":true})");
    expect(sil && sil->status == 422, "silence not 422");
    expect(nlohmann::json::parse(sil->body)["label"] == "no_cough_detected",
           "silence label");

    // Withheld consent: 400 and nothing stored.
    const auto before = service.submission_count();
    auto no = post(cough, R"({"consent":false})");
    expect(no && no->status == 400, "consent=false not 400");
    expect(service.submission_count() == before, "refused upload persisted");

    // 50 concurrent submissions: all acknowledged, distinct, durable.
    const int n = 50;
    std::vector<int> statuses(n, 0);
    std::vector<std::string> ids(n);
    std::vector<std::thread> posters;
    for (int i = 0; i < n; ++i) {
        posters.emplace_back([&, i] {
            httplib::Client c("127.0.0.1", port);
            c.set_read_timeout(60, 0);
            const std::string wav = encode_wav(synth_recording(
                i % 2 == 0, 16000, 100 + static_cast<std::uint64_t>(i), "c"));
            httplib::MultipartFormDataItems items{
                {"audio", wav, "r.wav", "audio/wav"},
                {"metadata", R"({"consent":true})", "", "application/json"}};
            if (auto r = c.Post("/v1/submissions", items)) {
                statuses[static_cast<std::size_t>(i)] = r->status;
                auto b = nlohmann::json::parse(r->body, nullptr, false);
                if (b.is_object() && b.contains("submission_id")) {
                    ids[static_cast<std::size_t>(i)] = b["submission_id"];
                }
            }
        });
    }
    for (auto& t : posters) t.join();
    std::set<std::string> distinct;
    for (int i = 0; i < n; ++i) {
        expect(statuses[static_cast<std::size_t>(i)] == 201 ||
                   statuses[static_cast<std::size_t>(i)] == 422,
               "concurrent post not acknowledged");
        distinct.insert(ids[static_cast<std::size_t>(i)]);
    }
    expect(distinct.size() == static_cast<std::size_t>(n), "ids collide");

    service.stop();
    runner.join();

    RecordLog reopened((dir / "data" / "submissions.log").string());
    expect(reopened.recovered_bytes() == 0, "log needed recovery");
    expect(reopened.size() == static_cast<std::size_t>(n) + 2,
           "log record count " + std::to_string(reopened.size()));
    char buf[96];
    std::snprintf(buf, sizeof buf, "%zu log records, all frames clean",
                  reopened.size());
    return buf;
}

struct Criterion {
    const char* name;
    double budget_s;
    std::function<std::string()> fn;
};

}  // namespace

int main() {
    const std::vector<Criterion> criteria = {
        {"dsp-oracle-suite", 30.0, check_dsp_oracles},
        {"gradient-check", 60.0, check_gradients},
        {"gate-accuracy", 120.0, check_gate_accuracy},
        {"end-to-end-learnability", 900.0, check_end_to_end},
        {"metric-identities", 120.0, check_metric_identities},
        {"determinism", 300.0, check_determinism},
        {"chunking-exactness", 60.0, check_chunking},
        {"serialization-safety", 300.0, check_serialization},
        {"service-contract", 120.0, check_service},
    };

    int failures = 0;
    for (const auto& c : criteria) {
        const auto t0 = std::chrono::steady_clock::now();
        std::string detail;
        bool ok = true;
        try {
            detail = c.fn();
        } catch (const CheckFailure& f) {
            ok = false;
            detail = f.detail;
        } catch (const std::exception& e) {
            ok = false;
            detail = std::string("exception: ") + e.what();
        }
        const double secs =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
                .count();
        if (ok && secs > c.budget_s) {
            ok = false;
            detail = "over budget (" + std::to_string(c.budget_s) + " s)";
        }
        if (!ok) ++failures;
        std::printf("[%s] %-24s %7.1fs  %s\n", ok ? "PASS" : "FAIL", c.name,
                    secs, detail.c_str());
        std::fflush(stdout);
    }
    fs::remove_all(work_dir());
    if (failures > 0) {
        std::printf("%d of %zu acceptance criteria failed\n", failures,
                    criteria.size());
        return 1;
    }
    std::printf("all %zu acceptance criteria passed\n", criteria.size());
    return 0;
}
