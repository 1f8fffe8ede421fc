#pragma once

#include "coughdetect/audio.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace coughdetect {

struct SonographConfig {
    int sample_rate = 22050;
    int hop_length = 512;
    int frame_length = 2048;
    int n_mfcc = 33;
    int n_mels = 33;
    int lpc_order = 33;
    int n_frames = 100;
    double mel_fmin = 0.0;
    double mel_fmax = 0.0;  // 0 = sample_rate / 2

    double fmax() const { return mel_fmax > 0.0 ? mel_fmax : sample_rate / 2.0; }
};

enum class TensorMode { TwoD, ThreeD };

// Row-major bands x frames matrix.
struct Sonograph {
    int bands = 0;
    int frames = 0;
    std::vector<double> data;

    double& at(int b, int f) { return data[static_cast<std::size_t>(b) * frames + f]; }
    double at(int b, int f) const { return data[static_cast<std::size_t>(b) * frames + f]; }
};

// (band, frame, channel) row-major feature tensor, 33 x 100 x {1,3}.
// Channel order for 3 channels: MFCC, MelSpec, LPCS; MelSpec alone for 1.
struct CoughTensor {
    int bands = 0;
    int frames = 0;
    int channels = 0;
    std::vector<double> data;

    double& at(int b, int f, int c) {
        return data[(static_cast<std::size_t>(b) * frames + f) * channels + c];
    }
    double at(int b, int f, int c) const {
        return data[(static_cast<std::size_t>(b) * frames + f) * channels + c];
    }
};

// Number of analysis frames for a segment of `len` samples.
std::size_t frame_count(std::size_t len, int frame_length, int hop_length);

// Mel-band centers (Hz) of the triangular filterbank, for tests.
std::vector<double> mel_filter_centers(const SonographConfig& cfg);

// Log-power mel spectrogram (dB relative to the matrix maximum, floored at
// -80 dB); Hann window.
Sonograph mel_spectrogram(const AudioSignal& segment, const SonographConfig& cfg);

// Mel-frequency cepstral coefficients: Hamming window, power spectrum, mel
// energies, log (referenced to the segment maximum so gain cancels),
// orthonormal DCT-II.
Sonograph mfcc(const AudioSignal& segment, const SonographConfig& cfg);

// Line spectral pair frequencies of the order-33 LPC polynomial per frame,
// ascending, as fractions of pi. Zero-energy frames emit the neutral grid
// i/(order+1).
Sonograph lpcs(const AudioSignal& segment, const SonographConfig& cfg);

// Assembles the stacked tensor: each sonograph truncated/zero-padded to
// n_frames columns, each channel min-max normalized over its non-padded
// region before stacking.
CoughTensor build_tensor(const AudioSignal& segment, const SonographConfig& cfg,
                         TensorMode mode);

// Flat little-endian float32 serialization with an 8-byte shape header.
std::vector<std::uint8_t> serialize_tensor(const CoughTensor& tensor);
CoughTensor deserialize_tensor(const std::vector<std::uint8_t>& bytes);
void save_tensor_file(const CoughTensor& tensor, const std::string& path);
CoughTensor load_tensor_file(const std::string& path);

}  // namespace coughdetect
