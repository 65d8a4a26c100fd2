#include "cough/record_log.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <cstring>
#include <filesystem>
#include <fstream>

#include "cough/error.hpp"
#include "cough/hash.hpp"

namespace cough {

namespace {

std::uint32_t read_u32_le(const unsigned char* b) {
    return static_cast<std::uint32_t>(b[0]) |
           (static_cast<std::uint32_t>(b[1]) << 8) |
           (static_cast<std::uint32_t>(b[2]) << 16) |
           (static_cast<std::uint32_t>(b[3]) << 24);
}

void write_u32_le(unsigned char* b, std::uint32_t v) {
    b[0] = static_cast<unsigned char>(v & 0xff);
    b[1] = static_cast<unsigned char>((v >> 8) & 0xff);
    b[2] = static_cast<unsigned char>((v >> 16) & 0xff);
    b[3] = static_cast<unsigned char>((v >> 24) & 0xff);
}

// Arbitrary sanity bound; a frame this large means a corrupt length field.
constexpr std::uint32_t kMaxFrame = 64u * 1024u * 1024u;

}  // namespace

RecordLog::RecordLog(const std::string& path) {
    namespace fs = std::filesystem;
    if (auto parent = fs::path(path).parent_path(); !parent.empty()) {
        fs::create_directories(parent);
    }

    fd_ = ::open(path.c_str(), O_RDWR | O_CREAT, 0644);
    if (fd_ < 0) throw IoFailure("cannot open record log: " + path);

    // Scan existing content, keeping every intact frame and truncating the
    // first torn or corrupt one (and everything after it).
    off_t file_size = ::lseek(fd_, 0, SEEK_END);
    ::lseek(fd_, 0, SEEK_SET);

    off_t good_end = 0;
    if (file_size == 0) {
        if (::write(fd_, kMagic, 4) != 4) {
            throw IoFailure("cannot initialize record log: " + path);
        }
        good_end = 4;
    } else {
        char magic[4];
        if (::read(fd_, magic, 4) != 4 || std::memcmp(magic, kMagic, 4) != 0) {
            throw BadMagic("not a record log: " + path);
        }
        good_end = 4;
        std::vector<char> payload;
        while (true) {
            unsigned char header[8];
            ssize_t got = ::read(fd_, header, 8);
            if (got != 8) break;
            const std::uint32_t len = read_u32_le(header);
            const std::uint32_t crc = read_u32_le(header + 4);
            if (len == 0 || len > kMaxFrame) break;
            payload.resize(len);
            if (::read(fd_, payload.data(), len) != static_cast<ssize_t>(len)) {
                break;
            }
            if (crc32(payload.data(), len) != crc) break;
            auto j = nlohmann::json::parse(
                payload.begin(), payload.end(), nullptr, false);
            if (j.is_discarded()) break;
            records_.push_back(std::move(j));
            good_end += 8 + static_cast<off_t>(len);
        }
        if (good_end < file_size) {
            recovered_ = static_cast<std::uint64_t>(file_size - good_end);
            if (::ftruncate(fd_, good_end) != 0) {
                throw IoFailure("cannot truncate torn record log tail: " + path);
            }
        }
    }
    ::lseek(fd_, good_end, SEEK_SET);
}

RecordLog::~RecordLog() {
    if (fd_ >= 0) ::close(fd_);
}

std::uint64_t RecordLog::append(const nlohmann::json& payload) {
    const std::string body = payload.dump();
    if (body.size() > kMaxFrame) throw IoFailure("record too large");

    std::vector<unsigned char> frame(8 + body.size());
    write_u32_le(frame.data(), static_cast<std::uint32_t>(body.size()));
    write_u32_le(frame.data() + 4, crc32(body.data(), body.size()));
    std::memcpy(frame.data() + 8, body.data(), body.size());

    std::lock_guard<std::mutex> lock(mu_);
    ssize_t wrote = ::write(fd_, frame.data(), frame.size());
    if (wrote != static_cast<ssize_t>(frame.size())) {
        throw IoFailure("record log append failed");
    }
    records_.push_back(payload);
    return records_.size() - 1;
}

std::vector<nlohmann::json> RecordLog::records() const {
    std::lock_guard<std::mutex> lock(mu_);
    return records_;
}

std::size_t RecordLog::size() const {
    std::lock_guard<std::mutex> lock(mu_);
    return records_.size();
}

std::string store_audio(const std::string& dir, const std::string& bytes) {
    namespace fs = std::filesystem;
    fs::create_directories(dir);
    const std::string hash = sha256_hex(bytes.data(), bytes.size());
    const fs::path path = fs::path(dir) / (hash + ".wav");
    if (!fs::exists(path)) {
        const fs::path tmp = fs::path(dir) / (hash + ".tmp");
        {
            std::ofstream out(tmp, std::ios::binary);
            if (!out) throw IoFailure("cannot write audio blob");
            out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
        }
        fs::rename(tmp, path);
    }
    return hash;
}

}  // namespace cough
