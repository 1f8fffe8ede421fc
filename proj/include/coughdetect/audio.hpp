#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace coughdetect {

// Mono audio buffer with amplitudes normalized to [-1, 1].
struct AudioSignal {
    std::vector<double> samples;
    int sample_rate = 0;

    double duration_s() const {
        return sample_rate > 0 ? static_cast<double>(samples.size()) / sample_rate : 0.0;
    }
};

struct DecodeError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct UnsupportedFormatError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct EmptyInputError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Decodes a RIFF/WAVE container. PCM 8/16/24/32-bit integer and 32-bit float,
// little-endian. Multi-channel input is mixed down by averaging.
AudioSignal read_wav(std::span<const std::uint8_t> bytes);
AudioSignal read_wav_file(const std::string& path);

// Encodes 16-bit PCM mono.
std::vector<std::uint8_t> write_wav(const AudioSignal& signal);
void write_wav_file(const AudioSignal& signal, const std::string& path);

// Band-limited rate conversion (windowed-sinc, Kaiser window, 64-tap).
AudioSignal resample(const AudioSignal& signal, int target_rate);

}  // namespace coughdetect
