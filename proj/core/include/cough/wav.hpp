#pragma once

#include <string>

#include "cough/audio.hpp"

namespace cough {

// Uncompressed RIFF/WAVE codec. Reads PCM 8/16/24/32-bit integer and 32-bit
// IEEE float, any channel count (averaged to mono); writes 16-bit PCM mono.
//
// Throws NotWav, UnsupportedEncoding, TruncatedFile, IoFailure.
AudioBuffer read_wav(const std::string& path);

// Decode from an in-memory byte string (same rules as read_wav). Used by the
// HTTP service to score uploads without touching disk first.
AudioBuffer decode_wav(const std::string& bytes, const std::string& source_id);

void write_wav(const AudioBuffer& buffer, const std::string& path,
               int bit_depth = 16);

// Encode to bytes instead of a file.
std::string encode_wav(const AudioBuffer& buffer, int bit_depth = 16);

// Runs an external converter command to produce a WAV from any other format.
// The template must contain {in} and {out} placeholders, e.g.
//   "oggdec -o {out} {in}".
// Returns the path of the produced temp WAV. Throws ConverterMissing when the
// command is empty or the binary cannot be found (shell exit 127),
// ConverterFailed on any other nonzero exit.
std::string convert_external(const std::string& path,
                             const std::string& converter_command);

}  // namespace cough
