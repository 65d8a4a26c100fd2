#pragma once

#include <cstddef>
#include <cstdint>
#include <string>

namespace cough {

// CRC-32 (IEEE 802.3 polynomial), used to frame records in the append-only
// submission log.
std::uint32_t crc32(const void* data, std::size_t len,
                    std::uint32_t seed = 0);

// SHA-256 hex digest; content addressing for stored audio and model version
// identifiers.
std::string sha256_hex(const void* data, std::size_t len);
std::string sha256_hex(const std::string& data);
std::string sha256_file_hex(const std::string& path);

}  // namespace cough
