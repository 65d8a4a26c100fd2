#include "cough/config.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "cough/error.hpp"

namespace cough {

const char* to_string(AggregatePolicy policy) {
    switch (policy) {
        case AggregatePolicy::mean: return "mean";
        case AggregatePolicy::max: return "max";
        case AggregatePolicy::majority: return "majority";
    }
    return "mean";
}

namespace {

std::string fmt_real(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

double to_real(const std::string& section, const std::string& key,
               const std::string& v) {
    char* end = nullptr;
    double x = std::strtod(v.c_str(), &end);
    if (end == v.c_str() || *end != '\0') {
        throw Error("config [" + section + "] " + key + ": bad number '" + v + "'");
    }
    return x;
}

long long to_int(const std::string& section, const std::string& key,
                 const std::string& v) {
    char* end = nullptr;
    long long x = std::strtoll(v.c_str(), &end, 10);
    if (end == v.c_str() || *end != '\0') {
        throw Error("config [" + section + "] " + key + ": bad integer '" + v + "'");
    }
    return x;
}

bool to_bool(const std::string& section, const std::string& key,
             const std::string& v) {
    if (v == "true" || v == "1") return true;
    if (v == "false" || v == "0") return false;
    throw Error("config [" + section + "] " + key + ": bad bool '" + v + "'");
}

std::vector<int> to_int_list(const std::string& section, const std::string& key,
                             const std::string& v) {
    std::vector<int> out;
    std::istringstream in(v);
    std::string tok;
    while (std::getline(in, tok, ',')) {
        out.push_back(static_cast<int>(to_int(section, key, trim(tok))));
    }
    if (out.empty()) {
        throw Error("config [" + section + "] " + key + ": empty list");
    }
    return out;
}

}  // namespace

PipelineConfig parse_config_text(const std::string& text) {
    PipelineConfig cfg;
    std::istringstream in(text);
    std::string line, section;
    int line_no = 0;

    while (std::getline(in, line)) {
        ++line_no;
        std::string t = trim(line);
        if (t.empty() || t[0] == '#' || t[0] == ';') continue;
        // Inline comments start at whitespace followed by # or ;.
        for (std::size_t i = 1; i < t.size(); ++i) {
            if ((t[i] == '#' || t[i] == ';') &&
                (t[i - 1] == ' ' || t[i - 1] == '\t')) {
                t = trim(t.substr(0, i));
                break;
            }
        }
        if (t.front() == '[') {
            if (t.back() != ']') {
                throw Error("config line " + std::to_string(line_no) +
                            ": unterminated section header");
            }
            section = t.substr(1, t.size() - 2);
            if (section != "preprocess" && section != "features" &&
                section != "model" && section != "train" &&
                section != "pipeline" && section != "service") {
                throw Error("config: unknown section [" + section + "]");
            }
            continue;
        }
        const auto eq = t.find('=');
        if (eq == std::string::npos) {
            throw Error("config line " + std::to_string(line_no) +
                        ": expected key = value");
        }
        const std::string key = trim(t.substr(0, eq));
        const std::string value = trim(t.substr(eq + 1));

        if (section == "preprocess") {
            auto& p = cfg.preprocess;
            if (key == "target_rate_hz") p.target_rate_hz = static_cast<int>(to_int(section, key, value));
            else if (key == "target_peak") p.target_peak = to_real(section, key, value);
            else if (key == "snr_denoise_threshold_db") p.snr_denoise_threshold_db = to_real(section, key, value);
            else if (key == "noise_floor_percentile") p.noise_floor_percentile = to_real(section, key, value);
            else if (key == "gate_over_subtraction") p.gate_over_subtraction = to_real(section, key, value);
            else if (key == "spectral_floor") p.spectral_floor = to_real(section, key, value);
            else throw Error("config [preprocess]: unknown key " + key);
        } else if (section == "features") {
            auto& f = cfg.features;
            if (key == "frame_len") f.frame_len = static_cast<int>(to_int(section, key, value));
            else if (key == "hop") f.hop = static_cast<int>(to_int(section, key, value));
            else if (key == "fft_size") f.fft_size = static_cast<int>(to_int(section, key, value));
            else if (key == "n_mels") f.n_mels = static_cast<int>(to_int(section, key, value));
            else if (key == "fmin_hz") f.fmin_hz = to_real(section, key, value);
            else if (key == "fmax_hz") f.fmax_hz = to_real(section, key, value);
            else if (key == "n_mfcc") f.n_mfcc = static_cast<int>(to_int(section, key, value));
            else if (key == "log_floor") f.log_floor = to_real(section, key, value);
            else if (key == "use_mfcc") f.use_mfcc = to_bool(section, key, value);
            else throw Error("config [features]: unknown key " + key);
        } else if (section == "model") {
            auto& m = cfg.model;
            if (key == "conv_channels") m.conv_channels = to_int_list(section, key, value);
            else if (key == "hidden_units") m.hidden_units = static_cast<int>(to_int(section, key, value));
            else if (key == "n_classes") m.n_classes = static_cast<int>(to_int(section, key, value));
            else if (key == "dropout_rate") m.dropout_rate = to_real(section, key, value);
            else if (key == "input_rows") m.input_rows = static_cast<std::size_t>(to_int(section, key, value));
            else if (key == "input_cols") m.input_cols = static_cast<std::size_t>(to_int(section, key, value));
            else throw Error("config [model]: unknown key " + key);
        } else if (section == "train") {
            auto& t2 = cfg.train;
            if (key == "epochs") t2.epochs = static_cast<int>(to_int(section, key, value));
            else if (key == "batch_size") t2.batch_size = static_cast<int>(to_int(section, key, value));
            else if (key == "learning_rate") t2.learning_rate = to_real(section, key, value);
            else if (key == "optimizer") {
                if (value == "adam") t2.optimizer = TrainConfig::Optimizer::adam;
                else if (value == "sgd_momentum") t2.optimizer = TrainConfig::Optimizer::sgd_momentum;
                else throw Error("config [train] optimizer: unknown value " + value);
            }
            else if (key == "momentum") t2.momentum = to_real(section, key, value);
            else if (key == "beta1") t2.beta1 = to_real(section, key, value);
            else if (key == "beta2") t2.beta2 = to_real(section, key, value);
            else if (key == "seed") t2.seed = static_cast<std::uint64_t>(to_int(section, key, value));
            else if (key == "augment_enabled") t2.augment.enabled = to_bool(section, key, value);
            else if (key == "augment_scale_min") t2.augment.scale_min = to_real(section, key, value);
            else if (key == "augment_scale_max") t2.augment.scale_max = to_real(section, key, value);
            else if (key == "augment_rotate_max_deg") t2.augment.rotate_max_deg = to_real(section, key, value);
            else throw Error("config [train]: unknown key " + key);
        } else if (section == "pipeline") {
            if (key == "aggregation") {
                if (value == "mean") cfg.aggregation = AggregatePolicy::mean;
                else if (value == "max") cfg.aggregation = AggregatePolicy::max;
                else if (value == "majority") cfg.aggregation = AggregatePolicy::majority;
                else throw Error("config [pipeline] aggregation: unknown value " + value);
            }
            else if (key == "manifest") cfg.manifest_path = value;
            else if (key == "bundle") cfg.bundle_path = value;
            else if (key == "output_dir") cfg.output_dir = value;
            else if (key == "converter") cfg.converter_command = value;
            else throw Error("config [pipeline]: unknown key " + key);
        } else if (section == "service") {
            auto& s = cfg.service;
            if (key == "port") s.port = static_cast<int>(to_int(section, key, value));
            else if (key == "model_path") s.model_path = value;
            else if (key == "data_dir") s.data_dir = value;
            else if (key == "max_upload") s.max_upload = static_cast<std::size_t>(to_int(section, key, value));
            else if (key == "admin_token") s.admin_token = value;
            else throw Error("config [service]: unknown key " + key);
        } else {
            throw Error("config line " + std::to_string(line_no) +
                        ": key outside any section");
        }
    }
    return cfg;
}

PipelineConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open config: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_config_text(buf.str());
}

std::string config_text(const PipelineConfig& cfg) {
    std::ostringstream out;
    out << "[preprocess]\n";
    out << "target_rate_hz = " << cfg.preprocess.target_rate_hz << '\n';
    out << "target_peak = " << fmt_real(cfg.preprocess.target_peak) << '\n';
    out << "snr_denoise_threshold_db = " << fmt_real(cfg.preprocess.snr_denoise_threshold_db) << '\n';
    out << "noise_floor_percentile = " << fmt_real(cfg.preprocess.noise_floor_percentile) << '\n';
    out << "gate_over_subtraction = " << fmt_real(cfg.preprocess.gate_over_subtraction) << '\n';
    out << "spectral_floor = " << fmt_real(cfg.preprocess.spectral_floor) << '\n';

    out << "\n[features]\n";
    out << "frame_len = " << cfg.features.frame_len << '\n';
    out << "hop = " << cfg.features.hop << '\n';
    out << "fft_size = " << cfg.features.fft_size << '\n';
    out << "n_mels = " << cfg.features.n_mels << '\n';
    out << "fmin_hz = " << fmt_real(cfg.features.fmin_hz) << '\n';
    out << "fmax_hz = " << fmt_real(cfg.features.fmax_hz) << '\n';
    out << "n_mfcc = " << cfg.features.n_mfcc << '\n';
    out << "log_floor = " << fmt_real(cfg.features.log_floor) << '\n';
    out << "use_mfcc = " << (cfg.features.use_mfcc ? "true" : "false") << '\n';

    out << "\n[model]\n";
    out << "conv_channels = ";
    for (std::size_t i = 0; i < cfg.model.conv_channels.size(); ++i) {
        if (i) out << ',';
        out << cfg.model.conv_channels[i];
    }
    out << '\n';
    out << "hidden_units = " << cfg.model.hidden_units << '\n';
    out << "n_classes = " << cfg.model.n_classes << '\n';
    out << "dropout_rate = " << fmt_real(cfg.model.dropout_rate) << '\n';
    out << "input_rows = " << cfg.model.input_rows << '\n';
    out << "input_cols = " << cfg.model.input_cols << '\n';

    out << "\n[train]\n";
    out << "epochs = " << cfg.train.epochs << '\n';
    out << "batch_size = " << cfg.train.batch_size << '\n';
    out << "learning_rate = " << fmt_real(cfg.train.learning_rate) << '\n';
    out << "optimizer = "
        << (cfg.train.optimizer == TrainConfig::Optimizer::adam ? "adam"
                                                                : "sgd_momentum")
        << '\n';
    out << "momentum = " << fmt_real(cfg.train.momentum) << '\n';
    out << "beta1 = " << fmt_real(cfg.train.beta1) << '\n';
    out << "beta2 = " << fmt_real(cfg.train.beta2) << '\n';
    out << "seed = " << cfg.train.seed << '\n';
    out << "augment_enabled = " << (cfg.train.augment.enabled ? "true" : "false") << '\n';
    out << "augment_scale_min = " << fmt_real(cfg.train.augment.scale_min) << '\n';
    out << "augment_scale_max = " << fmt_real(cfg.train.augment.scale_max) << '\n';
    out << "augment_rotate_max_deg = " << fmt_real(cfg.train.augment.rotate_max_deg) << '\n';

    out << "\n[pipeline]\n";
    out << "aggregation = " << to_string(cfg.aggregation) << '\n';
    out << "manifest = " << cfg.manifest_path << '\n';
    out << "bundle = " << cfg.bundle_path << '\n';
    out << "output_dir = " << cfg.output_dir << '\n';
    out << "converter = " << cfg.converter_command << '\n';

    out << "\n[service]\n";
    out << "port = " << cfg.service.port << '\n';
    out << "model_path = " << cfg.service.model_path << '\n';
    out << "data_dir = " << cfg.service.data_dir << '\n';
    out << "max_upload = " << cfg.service.max_upload << '\n';
    out << "admin_token = " << cfg.service.admin_token << '\n';
    return out.str();
}

void save_config(const PipelineConfig& cfg, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoFailure("cannot open config for write: " + path);
    out << config_text(cfg);
}

void apply_env_overrides(PipelineConfig& cfg) {
    if (const char* v = std::getenv("COUGH_PORT")) {
        cfg.service.port = static_cast<int>(to_int("env", "COUGH_PORT", v));
    }
    if (const char* v = std::getenv("COUGH_MODEL_PATH")) {
        cfg.service.model_path = v;
        cfg.bundle_path = v;
    }
    if (const char* v = std::getenv("COUGH_DATA_DIR")) {
        cfg.service.data_dir = v;
    }
    if (const char* v = std::getenv("COUGH_MAX_UPLOAD")) {
        cfg.service.max_upload =
            static_cast<std::size_t>(to_int("env", "COUGH_MAX_UPLOAD", v));
    }
    if (const char* v = std::getenv("COUGH_CONVERTER")) {
        cfg.converter_command = v;
    }
}

}  // namespace cough
