#pragma once

#include "coughdetect/audio.hpp"

#include <vector>

namespace coughdetect {

struct PreprocessConfig {
    double cutoff_hz = 1000.0;
    double transition_hz = 10.0;
    int decimation_factor = 10;
    int filter_order = 2;
    double stopband_db = 40.0;
};

// IIR transfer function in descending powers of z^-1, a[0] == 1.
struct IirFilter {
    std::vector<double> b;
    std::vector<double> a;

    std::vector<double> apply(const std::vector<double>& x) const;
    // |H(e^{j 2 pi f / fs})|
    double gain_at(double freq_hz, double sample_rate) const;
};

// Chebyshev type-2 lowpass: attenuation >= stopband_db for all frequencies
// beyond stopband_edge_hz, ripple-free passband, unit DC gain.
IirFilter design_chebyshev2_lowpass(int order, double stopband_db,
                                    double stopband_edge_hz, double sample_rate);

AudioSignal chebyshev2_lowpass(const AudioSignal& signal, const PreprocessConfig& cfg);

// Pure subsampling; caller is responsible for prior band-limiting.
AudioSignal decimate(const AudioSignal& signal, int factor);

struct TrimResult {
    AudioSignal signal;
    std::size_t offset = 0;  // samples removed from the front
};

// Drops everything before the onset of the first major envelope peak
// (onset = last sample before the peak where the smoothed envelope is
// below 10% of the peak value). "Major" means at least half the global
// envelope maximum.
TrimResult trim_initial_bout(const AudioSignal& signal);

}  // namespace coughdetect
