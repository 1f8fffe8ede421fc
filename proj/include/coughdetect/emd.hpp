#pragma once

#include <cstddef>
#include <vector>

namespace coughdetect {

struct SiftConfig {
    int max_imfs = 12;
    double sd_threshold = 0.2;
    int max_sifts_per_imf = 50;
    // decomposition stops once the residual RMS falls below this fraction of
    // the input RMS; clean periodic inputs terminate instead of shedding
    // numerical-noise modes
    double residual_floor = 1e-3;
};

// Ordered intrinsic mode functions (index 0 = highest-frequency mode) plus
// the residual. Sum of modes + residual reconstructs the input exactly.
struct ImfSet {
    std::vector<std::vector<double>> imfs;
    std::vector<double> residual;
};

// Empirical Mode Decomposition by sifting: cubic-spline envelopes through
// mirrored extrema, envelope-mean subtraction until the Cauchy criterion
// SD < sd_threshold and the mode satisfies the IMF extrema/zero-crossing
// property (or the sift cap is hit).
ImfSet emd(const std::vector<double>& signal, const SiftConfig& cfg = {});

// 1-based mode selection; indices beyond the available count clamp to the
// last mode, duplicates collapse.
std::vector<std::vector<double>> select_modes(const ImfSet& set,
                                              const std::vector<int>& indices);

// |analytic signal| via the FFT-based Hilbert transform.
std::vector<double> instantaneous_amplitude(const std::vector<double>& mode);

// Strict-sign-change extrema; plateaus collapse to their midpoint.
void find_extrema(const std::vector<double>& x,
                  std::vector<std::size_t>& maxima,
                  std::vector<std::size_t>& minima);

std::size_t count_zero_crossings(const std::vector<double>& x);

}  // namespace coughdetect
