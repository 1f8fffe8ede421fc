#include "coughdetect/sonograph.hpp"

#include "coughdetect/fft.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <limits>
#include <numbers>
#include <stdexcept>

namespace coughdetect {

namespace {

constexpr double kPi = std::numbers::pi;

double hz_to_mel(double f) { return 2595.0 * std::log10(1.0 + f / 700.0); }
double mel_to_hz(double m) { return 700.0 * (std::pow(10.0, m / 2595.0) - 1.0); }

std::vector<double> window_hann(int n) {
    std::vector<double> w(n);
    for (int i = 0; i < n; ++i) w[i] = 0.5 - 0.5 * std::cos(2.0 * kPi * i / (n - 1));
    return w;
}

std::vector<double> window_hamming(int n) {
    std::vector<double> w(n);
    for (int i = 0; i < n; ++i) w[i] = 0.54 - 0.46 * std::cos(2.0 * kPi * i / (n - 1));
    return w;
}

// triangular filterbank: weights[m][k] over FFT bins
std::vector<std::vector<double>> mel_filterbank(const SonographConfig& cfg) {
    const int bins = cfg.frame_length / 2 + 1;
    const double mel_lo = hz_to_mel(cfg.mel_fmin);
    const double mel_hi = hz_to_mel(cfg.fmax());
    std::vector<double> edges(cfg.n_mels + 2);
    for (int i = 0; i < cfg.n_mels + 2; ++i) {
        edges[i] = mel_to_hz(mel_lo + (mel_hi - mel_lo) * i / (cfg.n_mels + 1));
    }
    std::vector<std::vector<double>> fb(cfg.n_mels, std::vector<double>(bins, 0.0));
    for (int m = 0; m < cfg.n_mels; ++m) {
        const double f0 = edges[m], f1 = edges[m + 1], f2 = edges[m + 2];
        for (int k = 0; k < bins; ++k) {
            const double f = static_cast<double>(k) * cfg.sample_rate / cfg.frame_length;
            if (f > f0 && f < f2) {
                fb[m][k] = f <= f1 ? (f - f0) / (f1 - f0) : (f2 - f) / (f2 - f1);
            }
        }
    }
    return fb;
}

// frames x n_mels matrix of mel filter energies
std::vector<std::vector<double>> mel_energies(const AudioSignal& segment,
                                              const SonographConfig& cfg,
                                              const std::vector<double>& window) {
    const std::size_t n_frames = frame_count(segment.samples.size(), cfg.frame_length,
                                             cfg.hop_length);
    const auto fb = mel_filterbank(cfg);
    PowerSpectrum ps(cfg.frame_length);
    std::vector<double> frame(cfg.frame_length), power(ps.bins());
    std::vector<std::vector<double>> out(n_frames, std::vector<double>(cfg.n_mels, 0.0));

    for (std::size_t t = 0; t < n_frames; ++t) {
        // frames are centered on t * hop with zero padding past the edges
        const long start = static_cast<long>(t) * cfg.hop_length - cfg.frame_length / 2;
        for (int i = 0; i < cfg.frame_length; ++i) {
            const long idx = start + i;
            const double s = idx >= 0 && idx < static_cast<long>(segment.samples.size())
                                 ? segment.samples[idx]
                                 : 0.0;
            frame[i] = s * window[i];
        }
        ps.compute(frame.data(), power.data());
        for (int m = 0; m < cfg.n_mels; ++m) {
            double acc = 0.0;
            for (std::size_t k = 0; k < power.size(); ++k) acc += fb[m][k] * power[k];
            out[t][m] = acc;
        }
    }
    return out;
}

void levinson(const std::vector<double>& r, int order, std::vector<double>& a) {
    a.assign(order + 1, 0.0);
    a[0] = 1.0;
    double err = r[0];
    std::vector<double> tmp(order + 1);
    for (int i = 1; i <= order; ++i) {
        double acc = r[i];
        for (int j = 1; j < i; ++j) acc += a[j] * r[i - j];
        const double k = -acc / err;
        tmp = a;
        for (int j = 1; j < i; ++j) a[j] = tmp[j] + k * tmp[i - j];
        a[i] = k;
        err *= 1.0 - k * k;
        if (err <= 0.0) {
            err = 1e-12 * r[0];
        }
    }
}

// Evaluate the symmetric/antisymmetric LSP polynomials as real functions of
// omega; p has even degree 2m with palindromic (sym) or antipalindromic
// coefficients.
double eval_sym(const std::vector<double>& p, int m, double w) {
    double acc = p[m];
    for (int k = 0; k < m; ++k) acc += 2.0 * p[k] * std::cos((m - k) * w);
    return acc;
}

double eval_antisym(const std::vector<double>& q, int m, double w) {
    double acc = 0.0;
    for (int k = 0; k < m; ++k) acc += 2.0 * q[k] * std::sin((m - k) * w);
    return acc;
}

// roots of f in (0, pi) by grid scan + bisection
template <typename F>
void scan_roots(F&& f, int grid, std::vector<double>& roots) {
    double prev_w = kPi * 0.5 / grid;
    double prev_v = f(prev_w);
    for (int i = 1; i < grid; ++i) {
        const double w = kPi * (i + 0.5) / grid;
        const double v = f(w);
        if ((prev_v < 0.0 && v > 0.0) || (prev_v > 0.0 && v < 0.0)) {
            double lo = prev_w, hi = w, flo = prev_v;
            for (int it = 0; it < 60; ++it) {
                const double mid = 0.5 * (lo + hi);
                const double fm = f(mid);
                if ((flo < 0.0) == (fm < 0.0)) {
                    lo = mid;
                    flo = fm;
                } else {
                    hi = mid;
                }
            }
            roots.push_back(0.5 * (lo + hi));
        } else if (v == 0.0) {
            roots.push_back(w);
        }
        prev_w = w;
        prev_v = v;
    }
}

std::vector<double> neutral_lsp(int order) {
    std::vector<double> out(order);
    for (int i = 0; i < order; ++i) out[i] = static_cast<double>(i + 1) / (order + 1);
    return out;
}

// LSP frequencies (fractions of pi) for one frame, ascending.
std::vector<double> frame_lsp(const std::vector<double>& frame, int order) {
    const int n = static_cast<int>(frame.size());
    std::vector<double> r(order + 1, 0.0);
    for (int lag = 0; lag <= order; ++lag) {
        double acc = 0.0;
        for (int i = lag; i < n; ++i) acc += frame[i] * frame[i - lag];
        r[lag] = acc;
    }
    if (r[0] <= 1e-20) return neutral_lsp(order);
    r[0] *= 1.0 + 1e-9;  // tiny ridge keeps near-singular frames stable

    std::vector<double> a;
    levinson(r, order, a);

    if (order % 2 == 0)
        throw std::invalid_argument("lpcs: only odd LPC orders are supported");

    // P(z) = A(z) + z^-(p+1) A(1/z), Q(z) = A(z) - z^-(p+1) A(1/z); with odd
    // order both have even degree order+1 and collapse to cos/sin series on
    // the unit circle (Q's trivial roots at z = +-1 fall outside (0, pi))
    std::vector<double> p(order + 2), q(order + 2);
    for (int i = 0; i <= order + 1; ++i) {
        const double ai = i <= order ? a[i] : 0.0;
        const int rev = order + 1 - i;
        const double arev = rev <= order ? a[rev] : 0.0;
        p[i] = ai + arev;
        q[i] = ai - arev;
    }

    std::vector<double> roots;
    roots.reserve(order);
    const int half = (order + 1) / 2;
    scan_roots([&](double w) { return eval_sym(p, half, w); }, 4096, roots);
    scan_roots([&](double w) { return eval_antisym(q, half, w); }, 4096, roots);
    if (static_cast<int>(roots.size()) != order) return neutral_lsp(order);
    std::sort(roots.begin(), roots.end());
    for (auto& v : roots) v /= kPi;
    return roots;
}

}  // namespace

std::size_t frame_count(std::size_t len, int frame_length, int hop_length) {
    (void)frame_length;
    if (len == 0) return 1;
    return 1 + len / static_cast<std::size_t>(hop_length);
}

std::vector<double> mel_filter_centers(const SonographConfig& cfg) {
    const double mel_lo = hz_to_mel(cfg.mel_fmin);
    const double mel_hi = hz_to_mel(cfg.fmax());
    std::vector<double> centers(cfg.n_mels);
    for (int m = 0; m < cfg.n_mels; ++m) {
        centers[m] = mel_to_hz(mel_lo + (mel_hi - mel_lo) * (m + 1) / (cfg.n_mels + 1));
    }
    return centers;
}

Sonograph mel_spectrogram(const AudioSignal& segment, const SonographConfig& cfg) {
    const auto energies = mel_energies(segment, cfg, window_hann(cfg.frame_length));
    const auto n_frames = energies.size();
    Sonograph out{cfg.n_mels, static_cast<int>(n_frames),
                  std::vector<double>(cfg.n_mels * n_frames)};
    double peak = 0.0;
    for (const auto& row : energies) {
        for (double e : row) peak = std::max(peak, e);
    }
    for (std::size_t t = 0; t < n_frames; ++t) {
        for (int b = 0; b < cfg.n_mels; ++b) {
            double db = -80.0;
            if (peak > 0.0) {
                db = std::max(-80.0, 10.0 * std::log10(std::max(energies[t][b], 1e-300) / peak));
            }
            out.at(b, static_cast<int>(t)) = db;
        }
    }
    return out;
}

Sonograph mfcc(const AudioSignal& segment, const SonographConfig& cfg) {
    const auto energies = mel_energies(segment, cfg, window_hamming(cfg.frame_length));
    const auto n_frames = energies.size();
    const int nm = cfg.n_mels;

    double peak = 0.0;
    for (const auto& row : energies) {
        for (double e : row) peak = std::max(peak, e);
    }

    Sonograph out{cfg.n_mfcc, static_cast<int>(n_frames),
                  std::vector<double>(cfg.n_mfcc * n_frames)};
    // -40 dB floor relative to the segment peak: keeps the representation
    // gain invariant and clamps window-leakage churn below the floor
    constexpr double kLogFloor = 1e-4;
    std::vector<double> logs(nm);
    for (std::size_t t = 0; t < n_frames; ++t) {
        for (int b = 0; b < nm; ++b) {
            logs[b] = peak > 0.0 ? std::log(std::max(energies[t][b] / peak, kLogFloor))
                                 : std::log(kLogFloor);
        }
        for (int k = 0; k < cfg.n_mfcc; ++k) {
            double acc = 0.0;
            for (int b = 0; b < nm; ++b) {
                acc += logs[b] * std::cos(kPi * k * (2.0 * b + 1.0) / (2.0 * nm));
            }
            const double w = k == 0 ? std::sqrt(1.0 / nm) : std::sqrt(2.0 / nm);
            out.at(k, static_cast<int>(t)) = w * acc;
        }
    }
    return out;
}

Sonograph lpcs(const AudioSignal& segment, const SonographConfig& cfg) {
    const std::size_t n_frames = frame_count(segment.samples.size(), cfg.frame_length,
                                             cfg.hop_length);
    const auto window = window_hamming(cfg.frame_length);
    Sonograph out{cfg.lpc_order, static_cast<int>(n_frames),
                  std::vector<double>(cfg.lpc_order * n_frames)};
    std::vector<double> frame(cfg.frame_length);
    for (std::size_t t = 0; t < n_frames; ++t) {
        const long start = static_cast<long>(t) * cfg.hop_length - cfg.frame_length / 2;
        for (int i = 0; i < cfg.frame_length; ++i) {
            const long idx = start + i;
            const double s = idx >= 0 && idx < static_cast<long>(segment.samples.size())
                                 ? segment.samples[idx]
                                 : 0.0;
            frame[i] = s * window[i];
        }
        const auto lsp = frame_lsp(frame, cfg.lpc_order);
        for (int b = 0; b < cfg.lpc_order; ++b) out.at(b, static_cast<int>(t)) = lsp[b];
    }
    return out;
}

namespace {

// copy into the padded tensor plane with per-channel min-max normalization
// over the non-padded columns
void place_channel(CoughTensor& tensor, int channel, const Sonograph& s) {
    const int used = std::min(s.frames, tensor.frames);
    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();
    for (int b = 0; b < s.bands; ++b) {
        for (int f = 0; f < used; ++f) {
            lo = std::min(lo, s.at(b, f));
            hi = std::max(hi, s.at(b, f));
        }
    }
    const double range = hi - lo;
    for (int b = 0; b < tensor.bands; ++b) {
        for (int f = 0; f < used; ++f) {
            const double v = range > 0.0 ? (s.at(b, f) - lo) / range : 0.0;
            tensor.at(b, f, channel) = v;
        }
    }
}

}  // namespace

CoughTensor build_tensor(const AudioSignal& segment, const SonographConfig& cfg,
                         TensorMode mode) {
    if (segment.samples.empty()) throw std::invalid_argument("build_tensor: empty segment");
    if (segment.sample_rate != cfg.sample_rate)
        throw std::invalid_argument("build_tensor: segment rate does not match config");

    const int channels = mode == TensorMode::ThreeD ? 3 : 1;
    CoughTensor tensor{cfg.n_mels, cfg.n_frames, channels,
                       std::vector<double>(static_cast<std::size_t>(cfg.n_mels) *
                                               cfg.n_frames * channels,
                                           0.0)};
    if (mode == TensorMode::ThreeD) {
        place_channel(tensor, 0, mfcc(segment, cfg));
        place_channel(tensor, 1, mel_spectrogram(segment, cfg));
        place_channel(tensor, 2, lpcs(segment, cfg));
    } else {
        place_channel(tensor, 0, mel_spectrogram(segment, cfg));
    }
    return tensor;
}

std::vector<std::uint8_t> serialize_tensor(const CoughTensor& tensor) {
    std::vector<std::uint8_t> out;
    out.reserve(8 + tensor.data.size() * 4);
    auto put_u16 = [&](std::uint16_t v) {
        out.push_back(v & 0xFF);
        out.push_back((v >> 8) & 0xFF);
    };
    put_u16(static_cast<std::uint16_t>(tensor.bands));
    put_u16(static_cast<std::uint16_t>(tensor.frames));
    put_u16(static_cast<std::uint16_t>(tensor.channels));
    put_u16(1);  // format version
    for (double v : tensor.data) {
        const float f = static_cast<float>(v);
        std::uint32_t bits;
        std::memcpy(&bits, &f, 4);
        out.push_back(bits & 0xFF);
        out.push_back((bits >> 8) & 0xFF);
        out.push_back((bits >> 16) & 0xFF);
        out.push_back((bits >> 24) & 0xFF);
    }
    return out;
}

CoughTensor deserialize_tensor(const std::vector<std::uint8_t>& bytes) {
    if (bytes.size() < 8) throw std::runtime_error("tensor: truncated header");
    auto u16 = [&](std::size_t off) {
        return static_cast<std::uint16_t>(bytes[off] | (bytes[off + 1] << 8));
    };
    CoughTensor t;
    t.bands = u16(0);
    t.frames = u16(2);
    t.channels = u16(4);
    const auto version = u16(6);
    if (version != 1) throw std::runtime_error("tensor: unsupported format version");
    const std::size_t count = static_cast<std::size_t>(t.bands) * t.frames * t.channels;
    if (bytes.size() != 8 + count * 4) throw std::runtime_error("tensor: size mismatch");
    t.data.resize(count);
    for (std::size_t i = 0; i < count; ++i) {
        std::uint32_t bits = bytes[8 + i * 4] | (bytes[9 + i * 4] << 8) |
                             (bytes[10 + i * 4] << 16) |
                             (static_cast<std::uint32_t>(bytes[11 + i * 4]) << 24);
        float f;
        std::memcpy(&f, &bits, 4);
        t.data[i] = f;
    }
    return t;
}

void save_tensor_file(const CoughTensor& tensor, const std::string& path) {
    const auto bytes = serialize_tensor(tensor);
    const std::string tmp = path + ".tmp";
    {
        std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
        if (!f) throw std::runtime_error("tensor: cannot write " + tmp);
        f.write(reinterpret_cast<const char*>(bytes.data()),
                static_cast<std::streamsize>(bytes.size()));
    }
    if (std::rename(tmp.c_str(), path.c_str()) != 0)
        throw std::runtime_error("tensor: cannot move into place: " + path);
}

CoughTensor load_tensor_file(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("tensor: cannot open " + path);
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(f)),
                                    std::istreambuf_iterator<char>());
    return deserialize_tensor(bytes);
}

}  // namespace coughdetect
