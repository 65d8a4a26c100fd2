#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>

#include <nlohmann/json.hpp>

#include "cough/dataset.hpp"
#include "cough/synth.hpp"
#include "cough/wav.hpp"

using namespace cough;
using nlohmann::json;
namespace fs = std::filesystem;

#ifndef COUGH_CLI_PATH
#define COUGH_CLI_PATH "coughscreen"
#endif

namespace {

struct RunResult {
    int exit_code = -1;
    std::string out;
    std::string err;
};

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), {}};
}

RunResult run_cli(const std::string& args) {
    static int n = 0;
    const auto out_path = fs::temp_directory_path() / ("cli_out_" + std::to_string(n));
    const auto err_path = fs::temp_directory_path() / ("cli_err_" + std::to_string(n));
    ++n;
    const std::string cmd = std::string(COUGH_CLI_PATH) + " " + args + " >" +
                            out_path.string() + " 2>" + err_path.string();
    const int status = std::system(cmd.c_str());
    RunResult r;
    r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    r.out = slurp(out_path);
    r.err = slurp(err_path);
    fs::remove(out_path);
    fs::remove(err_path);
    return r;
}

// One corpus + trained bundle shared across the command tests.
struct CliWorld {
    fs::path dir;
    std::string manifest;
    std::string bundle;

    CliWorld() {
        dir = fs::temp_directory_path() / "cli_world";
        fs::remove_all(dir);
        fs::create_directories(dir);

        auto synth = run_cli("synth --out " + (dir / "corpus").string() +
                             " --n 12 --seed 3");
        REQUIRE(synth.exit_code == 0);
        manifest = (dir / "corpus" / "manifest.jsonl").string();

        std::ofstream cfg(dir / "fast.ini");
        cfg << "[train]\nepochs = 2\nbatch_size = 8\n";
        cfg.close();

        bundle = (dir / "model.cghm").string();
        auto train = run_cli("train --manifest " + manifest + " --out " + bundle +
                             " --config " + (dir / "fast.ini").string() +
                             " --seed 3");
        REQUIRE(train.exit_code == 0);
    }

    ~CliWorld() { fs::remove_all(dir); }
};

CliWorld& world() {
    static CliWorld w;
    return w;
}

}  // namespace

TEST_CASE("usage errors exit 2") {
    CHECK(run_cli("").exit_code == 2);
    CHECK(run_cli("launder").exit_code == 2);
    CHECK(run_cli("train").exit_code == 2);             // missing required flag
    CHECK(run_cli("eval --manifest m").exit_code == 2); // missing bundle
    CHECK(run_cli("infer --bundle b.cghm").exit_code == 2);
    CHECK(run_cli("synth --n -3").exit_code == 2);
    CHECK(run_cli("train --manifest /nonexistent.jsonl").exit_code == 2);

    const auto bad_cfg = fs::temp_directory_path() / "bad.ini";
    std::ofstream out(bad_cfg);
    out << "[train]\nepochz = 2\n";
    out.close();
    auto r = run_cli("synth --out /tmp/cli_unused --n 0 --config " +
                     bad_cfg.string());
    CHECK(r.exit_code == 2);
    CHECK(r.err.find("epochz") != std::string::npos);
    fs::remove(bad_cfg);
}

TEST_CASE("help exits 0") {
    auto r = run_cli("--help");
    CHECK(r.exit_code == 0);
    CHECK(r.out.find("preprocess") != std::string::npos);
    CHECK(run_cli("train --help").exit_code == 0);
}

TEST_CASE("dry run prints the effective config without side effects") {
    const auto out_dir = fs::temp_directory_path() / "cli_dry";
    fs::remove_all(out_dir);
    auto r = run_cli("synth --out " + out_dir.string() + " --n 5 --dry-run");
    CHECK(r.exit_code == 0);
    CHECK(r.out.find("[train]") != std::string::npos);
    CHECK(r.out.find("epochs") != std::string::npos);
    CHECK_FALSE(fs::exists(out_dir));
}

TEST_CASE("synth then train then eval then infer") {
    auto& w = world();
    CHECK(fs::exists(w.bundle));
    CHECK(fs::exists(w.bundle + ".history.csv"));

    auto eval = run_cli("eval --manifest " + w.manifest + " --bundle " +
                        w.bundle + " --level file");
    REQUIRE(eval.exit_code == 0);
    auto report = json::parse(eval.out);
    CHECK(report["level"] == "file");
    CHECK(report["confusion"].contains("tp"));
    CHECK(report["n_chunks"].get<int>() > 0);

    // ROC and JSON artifacts land where asked.
    const auto roc = w.dir / "roc.csv";
    const auto rep = w.dir / "report.json";
    auto eval2 = run_cli("eval --manifest " + w.manifest + " --bundle " +
                         w.bundle + " --roc " + roc.string() + " --json " +
                         rep.string());
    REQUIRE(eval2.exit_code == 0);
    CHECK(fs::exists(roc));
    CHECK(fs::exists(rep));

    // Pick any corpus wav for inference.
    auto load = load_manifest(w.manifest);
    REQUIRE(!load.records.empty());
    const std::string wav =
        (w.dir / "corpus" / load.records[0].audio_path).string();
    auto infer = run_cli("infer --bundle " + w.bundle + " " + wav);
    REQUIRE(infer.exit_code == 0);
    auto result = json::parse(infer.out);
    CHECK(result.contains("label"));
    CHECK(result.contains("recording_score"));
    CHECK(!result["advisory"].get<std::string>().empty());
}

TEST_CASE("infer handles silence gracefully and corrupt files as errors") {
    auto& w = world();

    AudioBuffer silent;
    silent.sample_rate_hz = 16000;
    silent.samples.assign(16000 * 2, 0.0f);
    const std::string silent_path = (w.dir / "silent.wav").string();
    write_wav(silent, silent_path);
    auto r = run_cli("infer --bundle " + w.bundle + " " + silent_path);
    CHECK(r.exit_code == 0);
    CHECK(json::parse(r.out)["label"] == "no_cough_detected");

    const std::string corrupt_path = (w.dir / "corrupt.wav").string();
    std::ofstream out(corrupt_path, std::ios::binary);
    out << "RIFFgarbage that is not a wav";
    out.close();
    auto bad = run_cli("infer --bundle " + w.bundle + " " + corrupt_path);
    CHECK(bad.exit_code == 1);
    CHECK(!bad.err.empty());
}

TEST_CASE("preprocess writes converted wavs and reports") {
    auto& w = world();
    const auto out_dir = w.dir / "pre";
    auto r = run_cli("preprocess --manifest " + w.manifest + " --out " +
                     out_dir.string());
    REQUIRE(r.exit_code == 0);
    auto load = load_manifest(w.manifest);
    for (const auto& rec : load.records) {
        auto buf = read_wav((out_dir / rec.audio_path).string());
        CHECK(buf.sample_rate_hz == 16000);
    }
    CHECK(fs::exists(out_dir / "reports.jsonl"));
    std::ifstream reports(out_dir / "reports.jsonl");
    std::string line;
    int rows = 0;
    while (std::getline(reports, line)) {
        auto j = json::parse(line);
        CHECK(j.contains("snr_db"));
        CHECK(j.contains("denoise_applied"));
        ++rows;
    }
    CHECK(rows == static_cast<int>(load.records.size()));
}

TEST_CASE("single-class corpora fail with a data error") {
    auto& w = world();
    auto load = load_manifest(w.manifest);
    std::vector<SampleRecord> negatives;
    for (auto rec : load.records) {
        rec.label = Label::negative;
        negatives.push_back(rec);
    }
    const std::string mono = (w.dir / "corpus" / "mono.jsonl").string();
    save_manifest(negatives, mono);
    auto r = run_cli("train --manifest " + mono + " --out " +
                     (w.dir / "mono.cghm").string() + " --config " +
                     (w.dir / "fast.ini").string());
    CHECK(r.exit_code == 1);
    CHECK(r.err.find("class") != std::string::npos);
}

TEST_CASE("serve refuses to boot without a model") {
    auto r = run_cli("serve --bundle /nonexistent/model.cghm --port 19999");
    CHECK(r.exit_code == 2);
    CHECK(!r.err.empty());
}
