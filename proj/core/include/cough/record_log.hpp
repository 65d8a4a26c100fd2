#pragma once

#include <cstdint>
#include <mutex>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace cough {

// Append-only JSON record log. Byte layout: 4-byte magic "CGLG", then
// frames of {u32 LE payload length, u32 LE CRC32(payload), payload bytes}.
// Each append is a single write() so a killed process leaves at most one
// torn frame, which the boot scan truncates away.
class RecordLog {
public:
    explicit RecordLog(const std::string& path);
    ~RecordLog();

    RecordLog(const RecordLog&) = delete;
    RecordLog& operator=(const RecordLog&) = delete;

    // Returns the record's zero-based sequence number.
    std::uint64_t append(const nlohmann::json& payload);

    std::vector<nlohmann::json> records() const;  // snapshot, in append order
    std::size_t size() const;

    // Bytes dropped from the tail during recovery at open (0 = clean).
    std::uint64_t recovered_bytes() const { return recovered_; }

    static constexpr const char* kMagic = "CGLG";

private:
    int fd_ = -1;
    std::vector<nlohmann::json> records_;
    std::uint64_t recovered_ = 0;
    mutable std::mutex mu_;
};

// Content-addressed blob store: writes bytes to dir/<sha256>.wav unless
// already present, returns the hex hash. Duplicate uploads share one file.
std::string store_audio(const std::string& dir,
                        const std::string& bytes);

}  // namespace cough
