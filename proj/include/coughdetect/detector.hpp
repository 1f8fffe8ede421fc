#pragma once

#include "coughdetect/audio.hpp"
#include "coughdetect/emd.hpp"
#include "coughdetect/preprocess.hpp"

#include <cstddef>
#include <utility>
#include <vector>

namespace coughdetect {

struct DetectorConfig {
    double delta = 0.006;          // peak prominence on the normalized fused IA
    int median_window = 500;       // samples (decimated domain); rounded up to odd
    int join_gap = 1500;           // decimated samples (~0.34 s at 4410 Hz)
    int min_segment = 400;         // decimated samples
    double burst_extent_fraction = 0.1;
    std::vector<int> imf_indices{5, 9};  // 1-based, clamped to available modes
};

// Half-open [start, end) ranges into the decimated signal, sorted and
// non-overlapping.
struct CoughSegments {
    std::vector<std::pair<std::size_t, std::size_t>> ranges;
    int sample_rate = 0;
};

struct DetectionResult {
    CoughSegments segments;
    std::size_t trim_offset = 0;  // raw samples removed before decimation
    int decimation_factor = 1;
    std::size_t raw_length = 0;

    // Map a decimated-domain range back to raw-sample indices.
    std::pair<std::size_t, std::size_t> to_raw(std::size_t i) const {
        const auto& r = segments.ranges[i];
        const std::size_t start = trim_offset + r.first * decimation_factor;
        const std::size_t end =
            std::min(raw_length, trim_offset + r.second * decimation_factor);
        return {start, end};
    }
};

// Element-wise mean of the IAs, median filtered, then max-normalized to [0,1].
std::vector<double> fuse_amplitudes(const std::vector<std::vector<double>>& ias,
                                    int median_window);

// Valley-reset peak scan: a sample is a peak when it is the running local
// maximum and the signal has descended by at least delta afterwards.
std::vector<std::size_t> detect_peaks(const std::vector<double>& fused, double delta);

// Burst extraction around each peak (extends while fused >= fraction of the
// peak height), union of overlaps, join across short gaps, drop short bursts.
CoughSegments segment(const std::vector<double>& fused,
                      const std::vector<std::size_t>& peaks,
                      const DetectorConfig& cfg, int sample_rate);

// Full chain: lowpass -> trim -> decimate -> EMD -> mode selection -> IA ->
// fuse -> peaks -> segment.
DetectionResult detect_coughs(const AudioSignal& signal,
                              const PreprocessConfig& pre_cfg = {},
                              const SiftConfig& sift_cfg = {},
                              const DetectorConfig& det_cfg = {});

}  // namespace coughdetect
