#include "cough/service.hpp"

#include <cinttypes>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <random>

#include <httplib.h>

#include "cough/error.hpp"
#include "cough/hash.hpp"
#include "cough/pipeline.hpp"
#include "cough/wav.hpp"

namespace cough {

namespace {

std::string now_iso_utc() {
    const std::time_t t = std::time(nullptr);
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

void send_error(httplib::Response& res, int status, const std::string& code,
                const std::string& message) {
    nlohmann::json j;
    j["error"] = code;
    j["message"] = message;
    j["advisory"] = kAdvisoryText;
    res.status = status;
    res.set_content(j.dump(), "application/json");
}

}  // namespace

Service::Service(const ServiceConfig& cfg, bool allow_degraded) : cfg_(cfg) {
    try {
        bundle_ = std::make_unique<ModelBundle>(load_bundle(cfg.model_path));
        model_version_ = sha256_file_hex(cfg.model_path);
    } catch (const Error&) {
        if (!allow_degraded) throw;
        bundle_.reset();
        model_version_ = "unavailable";
    }

    std::filesystem::create_directories(cfg_.data_dir);
    log_ = std::make_unique<RecordLog>(cfg_.data_dir + "/submissions.log");
    {
        std::lock_guard<std::mutex> lock(index_mu_);
        const auto records = log_->records();
        for (std::size_t i = 0; i < records.size(); ++i) {
            if (records[i].contains("submission")) {
                by_id_[records[i]["submission"]["submission_id"]
                           .get<std::string>()] = i;
            }
        }
        id_counter_ = records.size();
    }
    std::random_device rd;
    id_salt_ = (static_cast<std::uint64_t>(rd()) << 32) ^ rd();

    server_ = std::make_unique<httplib::Server>();
    started_ = std::chrono::steady_clock::now();
    install_routes();
}

Service::~Service() { stop(); }

int Service::bind_any(const std::string& host) {
    return server_->bind_to_any_port(host);
}

bool Service::listen_after_bind() { return server_->listen_after_bind(); }

bool Service::listen(const std::string& host) {
    return server_->listen(host, cfg_.port);
}

void Service::stop() {
    if (server_ && server_->is_running()) server_->stop();
}

std::size_t Service::submission_count() const { return log_->size(); }

std::string Service::next_submission_id() {
    const std::uint64_t n = id_counter_.fetch_add(1);
    char buf[40];
    std::snprintf(buf, sizeof buf, "sub-%08" PRIx64 "-%08x", n,
                  static_cast<unsigned>((id_salt_ ^ (n * 0x9E3779B97F4A7C15ULL)) &
                                        0xffffffffu));
    return buf;
}

void Service::install_routes() {
    server_->Post("/v1/submissions", [this](const httplib::Request& req,
                                            httplib::Response& res) {
        if (!bundle_) {
            send_error(res, 503, "ModelUnavailable", "no model is loaded");
            return;
        }
        if (!req.is_multipart_form_data() || !req.has_file("audio")) {
            send_error(res, 400, "MalformedUpload",
                       "expected multipart form with an 'audio' file part");
            return;
        }
        const auto& audio_part = req.get_file_value("audio");
        if (audio_part.content.empty()) {
            send_error(res, 400, "MalformedUpload", "audio part is empty");
            return;
        }
        if (audio_part.content.size() > cfg_.max_upload) {
            send_error(res, 400, "MalformedUpload", "audio exceeds upload limit");
            return;
        }
        nlohmann::json meta = nlohmann::json::object();
        if (req.has_file("metadata")) {
            meta = nlohmann::json::parse(req.get_file_value("metadata").content,
                                         nullptr, false);
            if (meta.is_discarded() || !meta.is_object()) {
                send_error(res, 400, "MalformedUpload", "metadata is not JSON");
                return;
            }
        }
        if (!meta.contains("consent") || !meta["consent"].is_boolean() ||
            !meta["consent"].get<bool>()) {
            send_error(res, 400, "MissingConsent",
                       "consent=true is required to process and store audio");
            return;
        }

        AudioBuffer buffer;
        try {
            buffer = decode_wav(audio_part.content,
                                audio_part.filename.empty() ? "upload"
                                                            : audio_part.filename);
        } catch (const Error& e) {
            send_error(res, 415, "UnsupportedAudio", e.what());
            return;
        }

        ScreeningResult result;
        std::string error_code;
        try {
            result = screen_buffer(buffer, *bundle_, AggregatePolicy::mean,
                                   model_version_);
            if (result.label == "no_cough_detected") {
                error_code = "NoCoughDetected";
            }
        } catch (const SilentAudio&) {
            result.label = "no_cough_detected";
            result.model_version = model_version_;
            result.advisory = kAdvisoryText;
            error_code = "SilentAudio";
        } catch (const Error& e) {
            send_error(res, 422, "UnprocessableAudio", e.what());
            return;
        }
        result.submission_id = next_submission_id();

        const std::string audio_hash =
            store_audio(cfg_.data_dir + "/audio", audio_part.content);

        nlohmann::json submission;
        submission["submission_id"] = result.submission_id;
        submission["received_at"] = now_iso_utc();
        submission["consent"] = true;
        submission["audio_sha256"] = audio_hash;
        submission["audio_bytes"] = audio_part.content.size();
        if (meta.contains("triage")) submission["triage"] = meta["triage"];
        if (meta.contains("declared_test")) {
            submission["declared_test"] = meta["declared_test"];
        }

        nlohmann::json record;
        record["submission"] = submission;
        record["result"] = screening_to_json(result);
        if (!error_code.empty()) record["error"] = error_code;

        const std::uint64_t seq = log_->append(record);
        {
            std::lock_guard<std::mutex> lock(index_mu_);
            by_id_[result.submission_id] = seq;
        }

        nlohmann::json body = screening_to_json(result);
        if (!error_code.empty()) {
            body["error"] = error_code;
            res.status = 422;
        } else {
            res.status = 201;
        }
        res.set_content(body.dump(), "application/json");
    });

    server_->Get(R"(/v1/submissions/([^/]+)/audio)", [this](const httplib::Request& req,
                                                            httplib::Response& res) {
        if (cfg_.admin_token.empty() ||
            req.get_header_value("X-Admin-Token") != cfg_.admin_token) {
            send_error(res, 403, "Forbidden", "audio retrieval needs the admin token");
            return;
        }
        std::size_t seq;
        {
            std::lock_guard<std::mutex> lock(index_mu_);
            auto it = by_id_.find(req.matches[1]);
            if (it == by_id_.end()) {
                send_error(res, 404, "Unknown", "no such submission");
                return;
            }
            seq = it->second;
        }
        const auto records = log_->records();
        const std::string hash =
            records[seq]["submission"]["audio_sha256"].get<std::string>();
        std::ifstream in(cfg_.data_dir + "/audio/" + hash + ".wav",
                         std::ios::binary);
        if (!in) {
            send_error(res, 404, "Unknown", "audio blob missing");
            return;
        }
        std::string bytes((std::istreambuf_iterator<char>(in)),
                          std::istreambuf_iterator<char>());
        res.status = 200;
        res.set_content(bytes, "audio/wav");
    });

    server_->Get(R"(/v1/submissions/([^/]+))", [this](const httplib::Request& req,
                                                      httplib::Response& res) {
        std::size_t seq;
        {
            std::lock_guard<std::mutex> lock(index_mu_);
            auto it = by_id_.find(req.matches[1]);
            if (it == by_id_.end()) {
                send_error(res, 404, "Unknown", "no such submission");
                return;
            }
            seq = it->second;
        }
        const auto records = log_->records();
        nlohmann::json body = records[seq];
        body["seq"] = seq;
        res.status = 200;
        res.set_content(body.dump(), "application/json");
    });

    server_->Get("/v1/submissions", [this](const httplib::Request& req,
                                           httplib::Response& res) {
        // since is a resume cursor: strictly after the given sequence
        // number, so clients pass the last seq they have processed.
        std::size_t start = 0;
        if (req.has_param("since")) {
            try {
                start = static_cast<std::size_t>(
                            std::stoull(req.get_param_value("since"))) +
                        1;
            } catch (...) {
                send_error(res, 400, "MalformedUpload", "since must be an integer");
                return;
            }
        }
        const auto records = log_->records();
        nlohmann::json list = nlohmann::json::array();
        for (std::size_t i = start; i < records.size(); ++i) {
            nlohmann::json entry = records[i];
            entry["seq"] = i;
            list.push_back(std::move(entry));
        }
        nlohmann::json body;
        body["submissions"] = list;
        body["total"] = records.size();
        res.status = 200;
        res.set_content(body.dump(), "application/json");
    });

    server_->Get("/v1/health", [this](const httplib::Request&,
                                      httplib::Response& res) {
        nlohmann::json j;
        j["model_version"] = model_version_;
        j["uptime_s"] = std::chrono::duration_cast<std::chrono::seconds>(
                            std::chrono::steady_clock::now() - started_)
                            .count();
        j["queue_depth"] = 0;  // synchronous scoring, nothing ever queues
        res.status = 200;
        res.set_content(j.dump(), "application/json");
    });
}

}  // namespace cough
