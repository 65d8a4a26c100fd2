#pragma once

#include <atomic>
#include <chrono>
#include <cstdint>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <unordered_map>

#include "cough/config.hpp"
#include "cough/model.hpp"
#include "cough/record_log.hpp"

namespace httplib {
class Server;
}

namespace cough {

// HTTP triage endpoint. Loads the model bundle at construction (fail-fast
// unless allow_degraded, in which case submissions get 503), persists every
// consented submission to an append-only log plus a content-addressed
// audio store, and serves results back by submission id.
class Service {
public:
    explicit Service(const ServiceConfig& cfg, bool allow_degraded = false);
    ~Service();

    Service(const Service&) = delete;
    Service& operator=(const Service&) = delete;

    // Bind to an OS-assigned port (returns it), then serve with
    // listen_after_bind(). listen() binds the configured port directly.
    int bind_any(const std::string& host = "127.0.0.1");
    bool listen_after_bind();
    bool listen(const std::string& host = "127.0.0.1");
    void stop();

    const std::string& model_version() const { return model_version_; }
    std::size_t submission_count() const;

private:
    void install_routes();
    std::string next_submission_id();

    ServiceConfig cfg_;
    std::unique_ptr<ModelBundle> bundle_;
    std::string model_version_;
    std::unique_ptr<RecordLog> log_;
    std::unique_ptr<httplib::Server> server_;
    std::chrono::steady_clock::time_point started_;

    mutable std::mutex index_mu_;
    std::unordered_map<std::string, std::size_t> by_id_;  // id -> log seq
    std::atomic<std::uint64_t> id_counter_{0};
    std::uint64_t id_salt_ = 0;
};

}  // namespace cough
