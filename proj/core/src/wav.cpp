#include "cough/wav.hpp"

#include <sys/wait.h>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <random>

#include "cough/error.hpp"

namespace cough {

namespace {

std::uint32_t read_u32(const unsigned char* p) {
    return std::uint32_t(p[0]) | (std::uint32_t(p[1]) << 8) |
           (std::uint32_t(p[2]) << 16) | (std::uint32_t(p[3]) << 24);
}

std::uint16_t read_u16(const unsigned char* p) {
    return std::uint16_t(p[0] | (p[1] << 8));
}

void put_u32(std::string& out, std::uint32_t v) {
    out.push_back(char(v & 0xFF));
    out.push_back(char((v >> 8) & 0xFF));
    out.push_back(char((v >> 16) & 0xFF));
    out.push_back(char((v >> 24) & 0xFF));
}

void put_u16(std::string& out, std::uint16_t v) {
    out.push_back(char(v & 0xFF));
    out.push_back(char((v >> 8) & 0xFF));
}

struct FmtChunk {
    std::uint16_t format = 0;
    std::uint16_t channels = 0;
    std::uint32_t sample_rate = 0;
    std::uint16_t bits = 0;
};

float decode_sample(const unsigned char* p, std::uint16_t format,
                    std::uint16_t bits, bool& clipped) {
    if (format == 3) {  // IEEE float
        float f;
        std::memcpy(&f, p, 4);
        if (f > 1.0f || f < -1.0f || std::isnan(f)) {
            clipped = true;
            if (std::isnan(f)) return 0.0f;
            return std::clamp(f, -1.0f, 1.0f);
        }
        return f;
    }
    switch (bits) {
        case 8:
            // 8-bit WAV is unsigned with midpoint 128.
            return (static_cast<int>(p[0]) - 128) / 128.0f;
        case 16: {
            std::int16_t v = static_cast<std::int16_t>(p[0] | (p[1] << 8));
            return static_cast<float>(v) / 32768.0f;
        }
        case 24: {
            std::int32_t v = std::int32_t(p[0]) | (std::int32_t(p[1]) << 8) |
                             (std::int32_t(p[2]) << 16);
            if (v & 0x800000) v |= ~0xFFFFFF;  // sign extend
            return static_cast<float>(v) / 8388608.0f;
        }
        case 32: {
            std::int32_t v;
            std::memcpy(&v, p, 4);
            return static_cast<float>(static_cast<double>(v) / 2147483648.0);
        }
        default:
            return 0.0f;
    }
}

AudioBuffer decode_riff(const std::string& bytes, const std::string& source_id) {
    const auto* data = reinterpret_cast<const unsigned char*>(bytes.data());
    std::size_t size = bytes.size();
    if (size < 12 || std::memcmp(data, "RIFF", 4) != 0 ||
        std::memcmp(data + 8, "WAVE", 4) != 0) {
        throw NotWav("not a RIFF/WAVE file: " + source_id);
    }

    FmtChunk fmt;
    bool have_fmt = false;
    const unsigned char* pcm = nullptr;
    std::size_t pcm_size = 0;

    std::size_t pos = 12;
    while (pos + 8 <= size) {
        const unsigned char* id = data + pos;
        std::uint32_t chunk_size = read_u32(data + pos + 4);
        std::size_t body = pos + 8;
        if (std::memcmp(id, "fmt ", 4) == 0) {
            if (body + 16 > size) throw TruncatedFile("fmt chunk truncated: " + source_id);
            fmt.format = read_u16(data + body);
            fmt.channels = read_u16(data + body + 2);
            fmt.sample_rate = read_u32(data + body + 4);
            fmt.bits = read_u16(data + body + 14);
            have_fmt = true;
        } else if (std::memcmp(id, "data", 4) == 0) {
            if (body + chunk_size > size) {
                throw TruncatedFile("data chunk shorter than header claims: " +
                                    source_id);
            }
            pcm = data + body;
            pcm_size = chunk_size;
        }
        // Chunks are word aligned; all others (LIST/INFO/...) are skipped.
        pos = body + chunk_size + (chunk_size & 1);
    }

    if (!have_fmt || pcm == nullptr) {
        throw TruncatedFile("missing fmt or data chunk: " + source_id);
    }
    if (fmt.format != 1 && fmt.format != 3) {
        throw UnsupportedEncoding("compressed or non-PCM encoding (format tag " +
                                  std::to_string(fmt.format) + "): " + source_id);
    }
    bool ok_bits = fmt.format == 3 ? fmt.bits == 32
                                   : (fmt.bits == 8 || fmt.bits == 16 ||
                                      fmt.bits == 24 || fmt.bits == 32);
    if (!ok_bits) {
        throw UnsupportedEncoding("unsupported bit depth " +
                                  std::to_string(fmt.bits) + ": " + source_id);
    }
    if (fmt.channels == 0 || fmt.sample_rate == 0) {
        throw UnsupportedEncoding("invalid fmt chunk: " + source_id);
    }

    std::size_t bytes_per_sample = fmt.bits / 8;
    std::size_t frame_size = bytes_per_sample * fmt.channels;
    std::size_t n_frames = pcm_size / frame_size;
    if (n_frames == 0) {
        throw TruncatedFile("empty data chunk: " + source_id);
    }

    AudioBuffer out;
    out.sample_rate_hz = static_cast<int>(fmt.sample_rate);
    out.source_id = source_id;
    out.samples.resize(n_frames);
    for (std::size_t i = 0; i < n_frames; ++i) {
        double acc = 0.0;
        for (std::uint16_t c = 0; c < fmt.channels; ++c) {
            acc += decode_sample(pcm + i * frame_size + c * bytes_per_sample,
                                 fmt.format, fmt.bits, out.clipped);
        }
        out.samples[i] = static_cast<float>(acc / fmt.channels);
    }
    return out;
}

}  // namespace

AudioBuffer decode_wav(const std::string& bytes, const std::string& source_id) {
    return decode_riff(bytes, source_id);
}

AudioBuffer read_wav(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoFailure("cannot open: " + path);
    std::string bytes((std::istreambuf_iterator<char>(in)),
                      std::istreambuf_iterator<char>());
    return decode_riff(bytes, path);
}

std::string encode_wav(const AudioBuffer& buffer, int bit_depth) {
    if (bit_depth != 16) {
        throw UnsupportedEncoding("writer emits 16-bit PCM only");
    }
    std::size_t n = buffer.samples.size();
    std::uint32_t data_size = static_cast<std::uint32_t>(n * 2);

    std::string out;
    out.reserve(44 + data_size);
    out.append("RIFF");
    put_u32(out, 36 + data_size);
    out.append("WAVE");
    out.append("fmt ");
    put_u32(out, 16);
    put_u16(out, 1);  // PCM
    put_u16(out, 1);  // mono
    put_u32(out, static_cast<std::uint32_t>(buffer.sample_rate_hz));
    put_u32(out, static_cast<std::uint32_t>(buffer.sample_rate_hz) * 2);
    put_u16(out, 2);   // block align
    put_u16(out, 16);  // bits
    out.append("data");
    put_u32(out, data_size);
    for (std::size_t i = 0; i < n; ++i) {
        // Quantize against 32768 so decode (which divides by 32768) lands
        // within half an LSB; full scale clamps to 32767.
        double x = std::clamp(static_cast<double>(buffer.samples[i]), -1.0, 1.0);
        long q = std::lround(x * 32768.0);
        q = std::clamp(q, -32768L, 32767L);
        put_u16(out, static_cast<std::uint16_t>(static_cast<std::int16_t>(q)));
    }
    return out;
}

void write_wav(const AudioBuffer& buffer, const std::string& path,
               int bit_depth) {
    std::string bytes = encode_wav(buffer, bit_depth);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoFailure("cannot open for write: " + path);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoFailure("short write: " + path);
}

std::string convert_external(const std::string& path,
                             const std::string& converter_command) {
    if (converter_command.empty()) {
        throw ConverterMissing("no converter command configured");
    }
    if (converter_command.find("{in}") == std::string::npos ||
        converter_command.find("{out}") == std::string::npos) {
        throw ConverterFailed(
            "converter template must contain {in} and {out} placeholders");
    }
    if (!std::filesystem::exists(path)) {
        throw IoFailure("input file does not exist: " + path);
    }

    static std::mt19937_64 rng{std::random_device{}()};
    std::string out_path =
        (std::filesystem::temp_directory_path() /
         ("cough_conv_" + std::to_string(rng()) + ".wav"))
            .string();

    std::string cmd = converter_command;
    auto replace_all = [](std::string& s, const std::string& from,
                          const std::string& to) {
        std::size_t p = 0;
        while ((p = s.find(from, p)) != std::string::npos) {
            s.replace(p, from.size(), to);
            p += to.size();
        }
    };
    replace_all(cmd, "{in}", "'" + path + "'");
    replace_all(cmd, "{out}", "'" + out_path + "'");

    int rc = std::system(cmd.c_str());
    if (rc == -1) {
        throw ConverterFailed("failed to launch converter: " + cmd);
    }
    int exit_code = WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
    if (exit_code == 127) {
        std::error_code ec;
        std::filesystem::remove(out_path, ec);
        throw ConverterMissing("converter binary not found: " + cmd);
    }
    if (exit_code != 0) {
        std::error_code ec;
        std::filesystem::remove(out_path, ec);
        throw ConverterFailed("converter exited with status " +
                              std::to_string(exit_code));
    }
    if (!std::filesystem::exists(out_path)) {
        throw ConverterFailed("converter produced no output file");
    }
    return out_path;
}

}  // namespace cough
