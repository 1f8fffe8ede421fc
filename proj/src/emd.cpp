#include "coughdetect/emd.hpp"

#include "coughdetect/fft.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <stdexcept>

namespace coughdetect {

void find_extrema(const std::vector<double>& x,
                  std::vector<std::size_t>& maxima,
                  std::vector<std::size_t>& minima) {
    maxima.clear();
    minima.clear();
    const std::size_t n = x.size();
    int prev_dir = 0;
    std::size_t plateau_start = 0;
    for (std::size_t i = 1; i < n; ++i) {
        const double d = x[i] - x[i - 1];
        if (d > 0.0) {
            if (prev_dir < 0) minima.push_back((plateau_start + i - 1) / 2);
            prev_dir = 1;
            plateau_start = i;
        } else if (d < 0.0) {
            if (prev_dir > 0) maxima.push_back((plateau_start + i - 1) / 2);
            prev_dir = -1;
            plateau_start = i;
        }
        // d == 0: plateau extends, direction unchanged
    }
}

std::size_t count_zero_crossings(const std::vector<double>& x) {
    std::size_t count = 0;
    int prev_sign = 0;
    for (double v : x) {
        const int s = v > 0.0 ? 1 : (v < 0.0 ? -1 : 0);
        if (s != 0) {
            if (prev_sign != 0 && s != prev_sign) ++count;
            prev_sign = s;
        }
    }
    return count;
}

namespace {

// Natural cubic spline through (xs, ys), evaluated at integers 0..n-1.
// xs strictly increasing; result appended to out (resized by caller).
void spline_eval(const std::vector<double>& xs, const std::vector<double>& ys,
                 std::size_t n, std::vector<double>& out) {
    const std::size_t m = xs.size();
    out.assign(n, 0.0);
    if (m == 1) {
        std::fill(out.begin(), out.end(), ys[0]);
        return;
    }
    if (m == 2) {
        const double slope = (ys[1] - ys[0]) / (xs[1] - xs[0]);
        for (std::size_t t = 0; t < n; ++t) out[t] = ys[0] + slope * (t - xs[0]);
        return;
    }

    // second derivatives via the tridiagonal system, natural end conditions
    std::vector<double> d2(m, 0.0), diag(m - 2), off(m > 3 ? m - 3 : 0), rhs(m - 2);
    for (std::size_t i = 1; i + 1 < m; ++i) {
        const double dxm = xs[i] - xs[i - 1];
        const double dxp = xs[i + 1] - xs[i];
        diag[i - 1] = (dxm + dxp) / 3.0;
        rhs[i - 1] = (ys[i + 1] - ys[i]) / dxp - (ys[i] - ys[i - 1]) / dxm;
        if (i + 2 < m) off[i - 1] = dxp / 6.0;
    }
    for (std::size_t i = 1; i < rhs.size(); ++i) {
        const double q = off[i - 1] / diag[i - 1];
        diag[i] -= q * off[i - 1];
        rhs[i] -= q * rhs[i - 1];
    }
    for (std::size_t i = rhs.size() - 1; i-- > 0;) {
        rhs[i] -= off[i] / diag[i + 1] * rhs[i + 1];
    }
    for (std::size_t i = 0; i < rhs.size(); ++i) d2[i + 1] = rhs[i] / diag[i];

    std::size_t seg = 0;
    for (std::size_t t = 0; t < n; ++t) {
        const double xt = static_cast<double>(t);
        while (seg + 2 < m && xs[seg + 1] <= xt) ++seg;
        const double dx = xs[seg + 1] - xs[seg];
        if (xt <= xs.front()) {
            const double slope = (ys[1] - ys[0]) / (xs[1] - xs[0]) -
                                 (xs[1] - xs[0]) * (d2[0] / 3.0 + d2[1] / 6.0);
            out[t] = ys[0] + slope * (xt - xs[0]);
            continue;
        }
        if (xt >= xs.back()) {
            const double dxe = xs[m - 1] - xs[m - 2];
            const double slope = (ys[m - 1] - ys[m - 2]) / dxe +
                                 dxe * (d2[m - 2] / 6.0 + d2[m - 1] / 3.0);
            out[t] = ys[m - 1] + slope * (xt - xs[m - 1]);
            continue;
        }
        const double u = (xs[seg + 1] - xt) / dx;
        const double v = 1.0 - u;
        out[t] = ys[seg] * u + ys[seg + 1] * v +
                 d2[seg] * (u * u * u - u) * dx * dx / 6.0 +
                 d2[seg + 1] * (v * v * v - v) * dx * dx / 6.0;
    }
}

// Mirror two extrema around each end, dedup to strictly increasing.
void mirrored_nodes(const std::vector<std::size_t>& idx, const std::vector<double>& x,
                    std::size_t n, std::vector<double>& xs, std::vector<double>& ys) {
    xs.clear();
    ys.clear();
    const std::size_t m = idx.size();
    const std::size_t pre = std::min<std::size_t>(2, m);
    for (std::size_t k = pre; k-- > 0;) {
        xs.push_back(-static_cast<double>(idx[k]));
        ys.push_back(x[idx[k]]);
    }
    for (std::size_t k = 0; k < m; ++k) {
        xs.push_back(static_cast<double>(idx[k]));
        ys.push_back(x[idx[k]]);
    }
    const double last = static_cast<double>(n - 1);
    for (std::size_t k = 0; k < std::min<std::size_t>(2, m); ++k) {
        const std::size_t j = m - 1 - k;
        xs.push_back(2.0 * last - static_cast<double>(idx[j]));
        ys.push_back(x[idx[j]]);
    }
    // enforce strictly increasing abscissae
    std::size_t w = 1;
    for (std::size_t i = 1; i < xs.size(); ++i) {
        if (xs[i] > xs[w - 1]) {
            xs[w] = xs[i];
            ys[w] = ys[i];
            ++w;
        }
    }
    xs.resize(w);
    ys.resize(w);
}

// mean of upper and lower spline envelopes; false if too few extrema
bool envelope_mean(const std::vector<double>& x, std::vector<double>& mean,
                   std::vector<std::size_t>& maxima, std::vector<std::size_t>& minima,
                   std::vector<double>& scratch_xs, std::vector<double>& scratch_ys,
                   std::vector<double>& upper, std::vector<double>& lower) {
    find_extrema(x, maxima, minima);
    if (maxima.size() < 2 || minima.size() < 2) return false;
    const std::size_t n = x.size();
    mirrored_nodes(maxima, x, n, scratch_xs, scratch_ys);
    spline_eval(scratch_xs, scratch_ys, n, upper);
    mirrored_nodes(minima, x, n, scratch_xs, scratch_ys);
    spline_eval(scratch_xs, scratch_ys, n, lower);
    mean.resize(n);
    for (std::size_t i = 0; i < n; ++i) mean[i] = 0.5 * (upper[i] + lower[i]);
    return true;
}

double rms(const std::vector<double>& x) {
    double acc = 0.0;
    for (double v : x) acc += v * v;
    return std::sqrt(acc / static_cast<double>(x.size()));
}

}  // namespace

ImfSet emd(const std::vector<double>& signal, const SiftConfig& cfg) {
    if (signal.size() < 4) throw std::invalid_argument("emd: signal too short");
    for (double v : signal) {
        if (!std::isfinite(v)) throw std::invalid_argument("emd: non-finite sample");
    }

    ImfSet set;
    set.residual = signal;
    const double input_rms = rms(signal);

    std::vector<double> mean, upper, lower, sxs, sys;
    std::vector<std::size_t> maxima, minima;

    while (static_cast<int>(set.imfs.size()) < cfg.max_imfs) {
        if (rms(set.residual) < cfg.residual_floor * input_rms) break;
        find_extrema(set.residual, maxima, minima);
        if (maxima.size() < 2 || minima.size() < 2) break;  // residual is monotone-like

        std::vector<double> h = set.residual;
        for (int s = 0; s < cfg.max_sifts_per_imf; ++s) {
            if (!envelope_mean(h, mean, maxima, minima, sxs, sys, upper, lower)) break;
            double num = 0.0, den = 0.0;
            for (std::size_t i = 0; i < h.size(); ++i) {
                num += mean[i] * mean[i];  // (h - (h - mean))^2
                den += h[i] * h[i];
                h[i] -= mean[i];
            }
            const double sd = num / (den + 1e-300);
            if (sd < cfg.sd_threshold) {
                find_extrema(h, maxima, minima);
                const auto n_ext = maxima.size() + minima.size();
                const auto n_zc = count_zero_crossings(h);
                const auto diff = n_ext > n_zc ? n_ext - n_zc : n_zc - n_ext;
                if (diff <= 1) break;
            }
        }
        for (std::size_t i = 0; i < h.size(); ++i) set.residual[i] -= h[i];
        set.imfs.push_back(std::move(h));
    }
    return set;
}

std::vector<std::vector<double>> select_modes(const ImfSet& set,
                                              const std::vector<int>& indices) {
    if (indices.empty()) throw std::invalid_argument("select_modes: empty index list");
    const int count = static_cast<int>(set.imfs.size());
    std::set<int> chosen;
    for (int idx : indices) {
        if (idx < 1) throw std::invalid_argument("select_modes: indices are 1-based");
        chosen.insert(std::min(idx, count));
    }
    std::vector<std::vector<double>> out;
    for (int idx : chosen) {
        if (idx >= 1 && idx <= count) out.push_back(set.imfs[idx - 1]);
    }
    return out;
}

std::vector<double> instantaneous_amplitude(const std::vector<double>& mode) {
    if (mode.size() < 4) throw std::invalid_argument("instantaneous_amplitude: need >= 4 samples");
    auto analytic = analytic_signal(mode);
    std::vector<double> ia(mode.size());
    for (std::size_t i = 0; i < mode.size(); ++i) ia[i] = std::abs(analytic[i]);
    return ia;
}

}  // namespace coughdetect
