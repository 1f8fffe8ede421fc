#include "coughdetect/detector.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace coughdetect {

namespace {

// Sliding median with truncated windows at the boundaries; the window is
// kept as a sorted vector (cheap for windows of a few hundred samples).
std::vector<double> median_filter(const std::vector<double>& x, int window) {
    const std::size_t n = x.size();
    if (n == 0) return {};
    const std::size_t w = static_cast<std::size_t>(window % 2 == 0 ? window + 1 : window);
    const std::size_t half = w / 2;

    std::vector<double> sorted;
    sorted.reserve(w);
    std::vector<double> out(n);
    std::size_t lo = 0, hi = 0;  // current window [lo, hi)
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t want_lo = i >= half ? i - half : 0;
        const std::size_t want_hi = std::min(n, i + half + 1);
        while (hi < want_hi) {
            sorted.insert(std::lower_bound(sorted.begin(), sorted.end(), x[hi]), x[hi]);
            ++hi;
        }
        while (lo < want_lo) {
            sorted.erase(std::lower_bound(sorted.begin(), sorted.end(), x[lo]));
            ++lo;
        }
        const std::size_t m = sorted.size();
        out[i] = m % 2 ? sorted[m / 2] : 0.5 * (sorted[m / 2 - 1] + sorted[m / 2]);
    }
    return out;
}

}  // namespace

std::vector<double> fuse_amplitudes(const std::vector<std::vector<double>>& ias,
                                    int median_window) {
    if (ias.empty()) throw std::invalid_argument("fuse_amplitudes: no modes");
    const std::size_t n = ias.front().size();
    for (const auto& seq : ias) {
        if (seq.size() != n) throw std::invalid_argument("fuse_amplitudes: length mismatch");
    }
    std::vector<double> fused(n, 0.0);
    for (const auto& seq : ias) {
        for (std::size_t i = 0; i < n; ++i) fused[i] += seq[i];
    }
    const double inv = 1.0 / static_cast<double>(ias.size());
    for (auto& v : fused) v *= inv;

    fused = median_filter(fused, median_window);

    const double mx = fused.empty() ? 0.0 : *std::max_element(fused.begin(), fused.end());
    if (mx > 0.0) {
        for (auto& v : fused) v /= mx;
    }
    return fused;
}

std::vector<std::size_t> detect_peaks(const std::vector<double>& fused, double delta) {
    std::vector<std::size_t> peaks;
    double mx = -std::numeric_limits<double>::infinity();
    double mn = std::numeric_limits<double>::infinity();
    std::size_t mx_pos = 0;
    bool look_for_max = true;
    for (std::size_t i = 0; i < fused.size(); ++i) {
        const double v = fused[i];
        if (v > mx) {
            mx = v;
            mx_pos = i;
        }
        if (v < mn) mn = v;
        if (look_for_max) {
            if (v < mx - delta) {
                peaks.push_back(mx_pos);
                mn = v;
                look_for_max = false;
            }
        } else {
            if (v > mn + delta) {
                mx = v;
                mx_pos = i;
                look_for_max = true;
            }
        }
    }
    return peaks;
}

CoughSegments segment(const std::vector<double>& fused,
                      const std::vector<std::size_t>& peaks,
                      const DetectorConfig& cfg, int sample_rate) {
    const std::size_t n = fused.size();
    std::vector<std::pair<std::size_t, std::size_t>> bursts;
    for (std::size_t p : peaks) {
        const double thr = cfg.burst_extent_fraction * fused[p];
        std::size_t l = p;
        while (l > 0 && fused[l - 1] >= thr) --l;
        std::size_t r = p + 1;
        while (r < n && fused[r] >= thr) ++r;
        bursts.emplace_back(l, r);
    }
    std::sort(bursts.begin(), bursts.end());

    // union of overlapping bursts
    std::vector<std::pair<std::size_t, std::size_t>> merged;
    for (const auto& b : bursts) {
        if (!merged.empty() && b.first <= merged.back().second) {
            merged.back().second = std::max(merged.back().second, b.second);
        } else {
            merged.push_back(b);
        }
    }
    // join across short gaps
    std::vector<std::pair<std::size_t, std::size_t>> joined;
    for (const auto& b : merged) {
        if (!joined.empty() &&
            b.first - joined.back().second < static_cast<std::size_t>(cfg.join_gap)) {
            joined.back().second = b.second;
        } else {
            joined.push_back(b);
        }
    }
    CoughSegments out;
    out.sample_rate = sample_rate;
    for (const auto& b : joined) {
        if (b.second - b.first >= static_cast<std::size_t>(cfg.min_segment)) {
            out.ranges.push_back(b);
        }
    }
    return out;
}

DetectionResult detect_coughs(const AudioSignal& signal,
                              const PreprocessConfig& pre_cfg,
                              const SiftConfig& sift_cfg,
                              const DetectorConfig& det_cfg) {
    if (signal.samples.empty()) throw std::invalid_argument("detect_coughs: empty signal");

    DetectionResult result;
    result.raw_length = signal.samples.size();
    result.decimation_factor = pre_cfg.decimation_factor;

    auto filtered = chebyshev2_lowpass(signal, pre_cfg);
    auto trimmed = trim_initial_bout(filtered);
    result.trim_offset = trimmed.offset;
    auto dec = decimate(trimmed.signal, pre_cfg.decimation_factor);
    result.segments.sample_rate = dec.sample_rate;
    if (dec.samples.size() < 4) return result;

    auto modes = emd(dec.samples, sift_cfg);
    if (modes.imfs.empty()) return result;

    auto selected = select_modes(modes, det_cfg.imf_indices);
    std::vector<std::vector<double>> ias;
    ias.reserve(selected.size());
    for (const auto& mode : selected) ias.push_back(instantaneous_amplitude(mode));

    auto fused = fuse_amplitudes(ias, det_cfg.median_window);
    auto peaks = detect_peaks(fused, det_cfg.delta);
    result.segments = segment(fused, peaks, det_cfg, dec.sample_rate);
    return result;
}

}  // namespace coughdetect
