#include "coughdetect/preprocess.hpp"

#include "coughdetect/fft.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <stdexcept>

namespace coughdetect {

namespace {

using cd = std::complex<double>;

// expand a set of roots into polynomial coefficients (leading coeff 1)
std::vector<cd> poly_from_roots(const std::vector<cd>& roots) {
    std::vector<cd> p{1.0};
    for (const auto& r : roots) {
        std::vector<cd> next(p.size() + 1, 0.0);
        for (std::size_t i = 0; i < p.size(); ++i) {
            next[i] += p[i];
            next[i + 1] -= p[i] * r;
        }
        p = std::move(next);
    }
    return p;
}

}  // namespace

std::vector<double> IirFilter::apply(const std::vector<double>& x) const {
    // direct form II transposed
    const std::size_t order = std::max(a.size(), b.size()) - 1;
    std::vector<double> bb = b, aa = a, state(order, 0.0);
    bb.resize(order + 1, 0.0);
    aa.resize(order + 1, 0.0);
    std::vector<double> y(x.size());
    for (std::size_t n = 0; n < x.size(); ++n) {
        const double xn = x[n];
        const double yn = bb[0] * xn + (order > 0 ? state[0] : 0.0);
        for (std::size_t k = 0; k + 1 < order; ++k) {
            state[k] = bb[k + 1] * xn + state[k + 1] - aa[k + 1] * yn;
        }
        if (order > 0) state[order - 1] = bb[order] * xn - aa[order] * yn;
        y[n] = yn;
    }
    return y;
}

double IirFilter::gain_at(double freq_hz, double sample_rate) const {
    const double w = 2.0 * std::numbers::pi * freq_hz / sample_rate;
    const cd z = std::polar(1.0, w);
    cd num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < b.size(); ++i) num += b[i] * std::pow(z, -static_cast<double>(i));
    for (std::size_t i = 0; i < a.size(); ++i) den += a[i] * std::pow(z, -static_cast<double>(i));
    return std::abs(num / den);
}

IirFilter design_chebyshev2_lowpass(int order, double stopband_db,
                                    double stopband_edge_hz, double sample_rate) {
    if (order < 1) throw std::invalid_argument("chebyshev2: order must be >= 1");
    if (stopband_edge_hz <= 0 || stopband_edge_hz >= sample_rate / 2)
        throw std::invalid_argument("chebyshev2: stopband edge must lie below Nyquist");

    const int n = order;
    const double pi = std::numbers::pi;

    // analog prototype (stopband edge at 1 rad/s)
    const double de = 1.0 / std::sqrt(std::pow(10.0, 0.1 * stopband_db) - 1.0);
    const double mu = std::asinh(1.0 / de) / n;

    std::vector<cd> zeros, poles;
    for (int m = -n + 1; m < n; m += 2) {
        if (m != 0) zeros.push_back(-std::conj(cd(0.0, 1.0) / std::sin(m * pi / (2.0 * n))));
        const cd u = -std::exp(cd(0.0, pi * m / (2.0 * n)));
        poles.push_back(1.0 / cd(std::sinh(mu) * u.real(), std::cosh(mu) * u.imag()));
    }
    cd gain = 1.0;
    for (const auto& p : poles) gain *= -p;
    for (const auto& z : zeros) gain /= -z;

    // frequency scale with bilinear prewarping
    const double fs2 = 2.0 * sample_rate;
    const double warped = fs2 * std::tan(pi * stopband_edge_hz / sample_rate);
    for (auto& z : zeros) z *= warped;
    for (auto& p : poles) p *= warped;
    gain *= std::pow(warped, static_cast<double>(poles.size() - zeros.size()));

    // bilinear transform s -> (2/T)(z-1)/(z+1)
    std::vector<cd> zd, pd;
    cd knum = 1.0, kden = 1.0;
    for (const auto& z : zeros) {
        zd.push_back((fs2 + z) / (fs2 - z));
        knum *= fs2 - z;
    }
    for (const auto& p : poles) {
        pd.push_back((fs2 + p) / (fs2 - p));
        kden *= fs2 - p;
    }
    while (zd.size() < pd.size()) zd.push_back(-1.0);
    const double kd = (gain * knum / kden).real();

    auto bc = poly_from_roots(zd);
    auto ac = poly_from_roots(pd);
    IirFilter f;
    f.b.resize(bc.size());
    f.a.resize(ac.size());
    for (std::size_t i = 0; i < bc.size(); ++i) f.b[i] = (bc[i] * kd).real();
    for (std::size_t i = 0; i < ac.size(); ++i) f.a[i] = ac[i].real();
    return f;
}

AudioSignal chebyshev2_lowpass(const AudioSignal& signal, const PreprocessConfig& cfg) {
    if (cfg.cutoff_hz >= signal.sample_rate / 2.0)
        throw std::invalid_argument("preprocess: cutoff must lie below Nyquist");
    const auto filt = design_chebyshev2_lowpass(
        cfg.filter_order, cfg.stopband_db, cfg.cutoff_hz + cfg.transition_hz,
        signal.sample_rate);
    return {filt.apply(signal.samples), signal.sample_rate};
}

AudioSignal decimate(const AudioSignal& signal, int factor) {
    if (factor < 1) throw std::invalid_argument("decimate: factor must be >= 1");
    if (factor == 1) return signal;
    AudioSignal out;
    out.sample_rate = signal.sample_rate / factor;
    out.samples.reserve((signal.samples.size() + factor - 1) / factor);
    for (std::size_t i = 0; i < signal.samples.size(); i += factor) {
        out.samples.push_back(signal.samples[i]);
    }
    return out;
}

TrimResult trim_initial_bout(const AudioSignal& signal) {
    const std::size_t n = signal.samples.size();
    if (n == 0) return {signal, 0};

    auto analytic = analytic_signal(signal.samples);
    std::vector<double> env(n);
    for (std::size_t i = 0; i < n; ++i) env[i] = std::abs(analytic[i]);

    // 50 ms centered moving average
    const std::size_t w = static_cast<std::size_t>(0.05 * signal.sample_rate) | 1;
    std::vector<double> cum(n + 1, 0.0);
    for (std::size_t i = 0; i < n; ++i) cum[i + 1] = cum[i] + env[i];
    std::vector<double> smooth(n);
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t lo = i >= w / 2 ? i - w / 2 : 0;
        const std::size_t hi = std::min(n, i + w / 2 + 1);
        smooth[i] = (cum[hi] - cum[lo]) / (hi - lo);
    }

    const double gmax = *std::max_element(smooth.begin(), smooth.end());
    if (gmax <= 0.0) return {signal, 0};

    std::size_t peak = n;
    for (std::size_t i = 1; i + 1 < n; ++i) {
        if (smooth[i] >= smooth[i - 1] && smooth[i] > smooth[i + 1] &&
            smooth[i] >= 0.5 * gmax) {
            peak = i;
            break;
        }
    }
    if (peak == n) return {signal, 0};

    const double thr = 0.1 * smooth[peak];
    std::size_t onset = 0;
    for (std::size_t i = peak; i-- > 0;) {
        if (smooth[i] < thr) {
            onset = i;
            break;
        }
    }
    if (onset == 0) return {signal, 0};

    AudioSignal out;
    out.sample_rate = signal.sample_rate;
    out.samples.assign(signal.samples.begin() + static_cast<long>(onset), signal.samples.end());
    return {std::move(out), onset};
}

}  // namespace coughdetect
