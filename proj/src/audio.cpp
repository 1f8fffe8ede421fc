#include "coughdetect/audio.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numbers>

namespace coughdetect {

namespace {

struct Reader {
    std::span<const std::uint8_t> data;
    std::size_t pos = 0;

    bool has(std::size_t n) const { return pos + n <= data.size(); }

    std::uint32_t u32() {
        if (!has(4)) throw DecodeError("wav: truncated header");
        std::uint32_t v = data[pos] | (data[pos + 1] << 8) | (data[pos + 2] << 16) |
                          (static_cast<std::uint32_t>(data[pos + 3]) << 24);
        pos += 4;
        return v;
    }
    std::uint16_t u16() {
        if (!has(2)) throw DecodeError("wav: truncated header");
        std::uint16_t v = static_cast<std::uint16_t>(data[pos] | (data[pos + 1] << 8));
        pos += 2;
        return v;
    }
    std::uint32_t fourcc() { return u32(); }
};

constexpr std::uint32_t make_cc(const char (&s)[5]) {
    return static_cast<std::uint32_t>(s[0]) | (static_cast<std::uint32_t>(s[1]) << 8) |
           (static_cast<std::uint32_t>(s[2]) << 16) | (static_cast<std::uint32_t>(s[3]) << 24);
}

double decode_sample(const std::uint8_t* p, int bits, bool is_float) {
    if (is_float) {
        float f;
        std::memcpy(&f, p, 4);
        return std::clamp(static_cast<double>(f), -1.0, 1.0);
    }
    switch (bits) {
        case 8:
            // 8-bit WAV is unsigned with midpoint 128
            return (static_cast<int>(p[0]) - 128) / 128.0;
        case 16: {
            std::int16_t v;
            std::memcpy(&v, p, 2);
            return v / 32768.0;
        }
        case 24: {
            std::int32_t v = p[0] | (p[1] << 8) | (p[2] << 16);
            if (v & 0x800000) v |= ~0xFFFFFF;
            return v / 8388608.0;
        }
        case 32: {
            std::int32_t v;
            std::memcpy(&v, p, 4);
            return v / 2147483648.0;
        }
        default:
            throw UnsupportedFormatError("wav: unsupported bit depth " + std::to_string(bits));
    }
}

}  // namespace

AudioSignal read_wav(std::span<const std::uint8_t> bytes) {
    Reader r{bytes};
    if (r.fourcc() != make_cc("RIFF")) throw DecodeError("wav: missing RIFF tag");
    r.u32();  // riff size, unreliable in the wild
    if (r.fourcc() != make_cc("WAVE")) throw DecodeError("wav: missing WAVE tag");

    bool have_fmt = false;
    std::uint16_t format = 0, channels = 0, bits = 0;
    std::uint32_t rate = 0;
    std::size_t data_off = 0, data_len = 0;

    while (r.has(8)) {
        std::uint32_t id = r.fourcc();
        std::uint32_t len = r.u32();
        if (!r.has(len)) throw DecodeError("wav: chunk exceeds file size");
        if (id == make_cc("fmt ")) {
            if (len < 16) throw DecodeError("wav: fmt chunk too short");
            std::size_t end = r.pos + len;
            format = r.u16();
            channels = r.u16();
            rate = r.u32();
            r.u32();  // byte rate
            r.u16();  // block align
            bits = r.u16();
            if (format == 0xFFFE) {
                // WAVE_FORMAT_EXTENSIBLE: sub-format GUID starts with the real tag
                if (len < 40) throw DecodeError("wav: extensible fmt chunk too short");
                r.u16();  // cbSize
                r.u16();  // valid bits
                r.u32();  // channel mask
                format = r.u16();
            }
            r.pos = end;
            have_fmt = true;
        } else if (id == make_cc("data")) {
            data_off = r.pos;
            data_len = len;
            r.pos += len;
        } else {
            r.pos += len + (len & 1);  // chunks are word-aligned
        }
    }

    if (!have_fmt || data_off == 0) throw DecodeError("wav: missing fmt or data chunk");
    if (format != 1 && format != 3)
        throw UnsupportedFormatError("wav: only PCM and IEEE float are supported");
    const bool is_float = format == 3;
    if (is_float && bits != 32)
        throw UnsupportedFormatError("wav: float must be 32-bit");
    if (!is_float && bits != 8 && bits != 16 && bits != 24 && bits != 32)
        throw UnsupportedFormatError("wav: unsupported bit depth " + std::to_string(bits));
    if (channels == 0 || rate == 0) throw DecodeError("wav: bad fmt fields");

    const std::size_t bytes_per_sample = bits / 8;
    const std::size_t frame_size = bytes_per_sample * channels;
    const std::size_t frames = data_len / frame_size;
    if (frames == 0) throw EmptyInputError("wav: zero audio frames");

    AudioSignal out;
    out.sample_rate = static_cast<int>(rate);
    out.samples.resize(frames);
    const std::uint8_t* p = bytes.data() + data_off;
    for (std::size_t f = 0; f < frames; ++f) {
        double acc = 0.0;
        for (std::uint16_t c = 0; c < channels; ++c) {
            acc += decode_sample(p + f * frame_size + c * bytes_per_sample,
                                 bits, is_float);
        }
        out.samples[f] = acc / channels;
    }
    return out;
}

AudioSignal read_wav_file(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw DecodeError("wav: cannot open " + path);
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(f)),
                                    std::istreambuf_iterator<char>());
    return read_wav(bytes);
}

std::vector<std::uint8_t> write_wav(const AudioSignal& signal) {
    const std::size_t n = signal.samples.size();
    const std::uint32_t data_len = static_cast<std::uint32_t>(n * 2);
    std::vector<std::uint8_t> out;
    out.reserve(44 + data_len);
    auto put_u32 = [&](std::uint32_t v) {
        out.push_back(v & 0xFF);
        out.push_back((v >> 8) & 0xFF);
        out.push_back((v >> 16) & 0xFF);
        out.push_back((v >> 24) & 0xFF);
    };
    auto put_u16 = [&](std::uint16_t v) {
        out.push_back(v & 0xFF);
        out.push_back((v >> 8) & 0xFF);
    };
    auto put_cc = [&](const char* s) { out.insert(out.end(), s, s + 4); };

    put_cc("RIFF");
    put_u32(36 + data_len);
    put_cc("WAVE");
    put_cc("fmt ");
    put_u32(16);
    put_u16(1);  // PCM
    put_u16(1);  // mono
    put_u32(static_cast<std::uint32_t>(signal.sample_rate));
    put_u32(static_cast<std::uint32_t>(signal.sample_rate) * 2);
    put_u16(2);
    put_u16(16);
    put_cc("data");
    put_u32(data_len);
    for (double s : signal.samples) {
        double scaled = std::round(std::clamp(s, -1.0, 1.0) * 32768.0);
        auto q = static_cast<std::int16_t>(std::clamp(scaled, -32768.0, 32767.0));
        put_u16(static_cast<std::uint16_t>(q));
    }
    return out;
}

void write_wav_file(const AudioSignal& signal, const std::string& path) {
    auto bytes = write_wav(signal);
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw std::runtime_error("wav: cannot write " + path);
    f.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
}

AudioSignal resample(const AudioSignal& signal, int target_rate) {
    if (target_rate <= 0) throw std::invalid_argument("resample: target rate must be positive");
    if (signal.sample_rate == target_rate) return signal;

    const double ratio = static_cast<double>(target_rate) / signal.sample_rate;
    const std::size_t n_in = signal.samples.size();
    const auto n_out = static_cast<std::size_t>(std::llround(n_in * ratio));

    // Kaiser-windowed sinc, 32 taps each side; cutoff backed off from the
    // narrower Nyquist to keep the transition band inside the kernel.
    constexpr int kHalfTaps = 32;
    constexpr double kBeta = 8.0;
    constexpr double kRolloff = 0.9;
    const double fc = 0.5 * kRolloff * std::min(1.0, ratio);

    auto bessel_i0 = [](double x) {
        double sum = 1.0, term = 1.0;
        for (int k = 1; k < 32; ++k) {
            term *= (x / (2.0 * k)) * (x / (2.0 * k));
            sum += term;
            if (term < 1e-18 * sum) break;
        }
        return sum;
    };
    const double i0_beta = bessel_i0(kBeta);

    // when downsampling, the kernel stretches by 1/ratio in input samples
    const double stretch = std::min(1.0, ratio);
    const double half_width = kHalfTaps / stretch;

    AudioSignal out;
    out.sample_rate = target_rate;
    out.samples.resize(n_out);
    for (std::size_t m = 0; m < n_out; ++m) {
        const double center = m / ratio;
        const auto lo = static_cast<long>(std::ceil(center - half_width));
        const auto hi = static_cast<long>(std::floor(center + half_width));
        double acc = 0.0, wsum = 0.0;
        for (long k = lo; k <= hi; ++k) {
            const double t = (k - center) * stretch;  // in kernel units
            const double u = t / kHalfTaps;
            if (u <= -1.0 || u >= 1.0) continue;
            const double window = bessel_i0(kBeta * std::sqrt(1.0 - u * u)) / i0_beta;
            const double arg = 2.0 * fc * (k - center);
            double sinc = 1.0;
            if (arg != 0.0) sinc = std::sin(std::numbers::pi * arg) / (std::numbers::pi * arg);
            const double w = sinc * window;
            wsum += w;
            if (k >= 0 && k < static_cast<long>(n_in)) acc += signal.samples[k] * w;
        }
        out.samples[m] = wsum > 0.0 ? acc / wsum : 0.0;
    }
    return out;
}

}  // namespace coughdetect
