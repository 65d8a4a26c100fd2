#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace cough {

// Mono PCM signal, the unit all DSP stages operate on. Samples are stored as
// floats in [-1, 1] regardless of the bit depth they were decoded from.
struct AudioBuffer {
    std::vector<float> samples;
    int sample_rate_hz = 0;
    std::string source_id;
    // Set by the decoder when out-of-range samples had to be clamped.
    bool clipped = false;

    bool valid() const {
        return sample_rate_hz > 0 && !samples.empty();
    }

    double duration_s() const {
        return sample_rate_hz > 0
                   ? static_cast<double>(samples.size()) / sample_rate_hz
                   : 0.0;
    }
};

}  // namespace cough
