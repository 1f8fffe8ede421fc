#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "coughdetect/preprocess.hpp"
#include "support/oracles.hpp"

#include <cmath>
#include <numbers>
#include <random>

using namespace coughdetect;

namespace {

AudioSignal tone(double freq, double dur, int rate, double amp) {
    AudioSignal s;
    s.sample_rate = rate;
    const auto n = static_cast<std::size_t>(dur * rate);
    s.samples.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        s.samples[i] = amp * std::sin(2.0 * std::numbers::pi * freq * i / rate);
    }
    return s;
}

}  // namespace

TEST_CASE("chebyshev2 design matches the reference design tool") {
    // frozen from scipy.signal.cheby2
    {
        const auto f = design_chebyshev2_lowpass(2, 40, 1010, 44100);
        REQUIRE(f.b.size() == 3);
        CHECK(f.b[0] == doctest::Approx(0.009960007232815921).epsilon(1e-9));
        CHECK(f.b[1] == doctest::Approx(-0.01951035142830577).epsilon(1e-9));
        CHECK(f.b[2] == doctest::Approx(0.009960007232815921).epsilon(1e-9));
        CHECK(f.a[0] == doctest::Approx(1.0));
        CHECK(f.a[1] == doctest::Approx(-1.9713134631782199).epsilon(1e-9));
        CHECK(f.a[2] == doctest::Approx(0.971723126215546).epsilon(1e-9));
    }
    {
        const auto f = design_chebyshev2_lowpass(2, 40, 1010, 22050);
        CHECK(f.b[0] == doctest::Approx(0.010123761168432669).epsilon(1e-9));
        CHECK(f.a[1] == doctest::Approx(-1.9423368694774403).epsilon(1e-9));
        CHECK(f.a[2] == doctest::Approx(0.9439688568875214).epsilon(1e-9));
    }
    {
        const auto f = design_chebyshev2_lowpass(4, 40, 2000, 44100);
        REQUIRE(f.b.size() == 5);
        CHECK(f.b[0] == doctest::Approx(0.009622933414159988).epsilon(1e-9));
        CHECK(f.b[2] == doctest::Approx(0.046887584891878144).epsilon(1e-9));
        CHECK(f.a[1] == doctest::Approx(-3.61304587220116).epsilon(1e-9));
        CHECK(f.a[4] == doctest::Approx(0.678798610980543).epsilon(1e-9));
    }
}

TEST_CASE("stopband attenuation holds at and beyond the edge") {
    const auto f = design_chebyshev2_lowpass(2, 40, 1010, 44100);
    for (double freq : {1010.0, 1500.0, 2000.0, 5000.0, 10000.0, 20000.0}) {
        CHECK(20.0 * std::log10(f.gain_at(freq, 44100)) <= -40.0 + 1e-6);
    }
    CHECK(f.gain_at(0.0, 44100) == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("DC input converges to unit gain") {
    AudioSignal dc;
    dc.sample_rate = 44100;
    dc.samples.assign(44100, 1.0);
    const auto out = chebyshev2_lowpass(dc, {});
    CHECK(out.samples.size() == dc.samples.size());
    CHECK(out.sample_rate == 44100);
    for (std::size_t i = out.samples.size() / 2; i < out.samples.size(); ++i) {
        CHECK(out.samples[i] == doctest::Approx(1.0).epsilon(1e-3));
    }
}

TEST_CASE("5 kHz tone attenuated by at least 40 dB, matching the transfer function") {
    const auto sig = tone(5000.0, 1.0, 44100, 1.0);
    const auto out = chebyshev2_lowpass(sig, {});
    // steady state tail
    std::vector<double> tail(out.samples.begin() + 22050, out.samples.end());
    std::vector<double> ref(sig.samples.begin() + 22050, sig.samples.end());
    const double ratio = oracles::rms(tail) / oracles::rms(ref);
    CHECK(20.0 * std::log10(ratio) <= -40.0);
    // oracle: evaluate the designed transfer function at 5 kHz
    const auto f = design_chebyshev2_lowpass(2, 40, 1010, 44100);
    CHECK(ratio == doctest::Approx(f.gain_at(5000, 44100)).epsilon(0.05));
}

TEST_CASE("all-zero input stays zero") {
    AudioSignal z;
    z.sample_rate = 44100;
    z.samples.assign(1000, 0.0);
    const auto out = chebyshev2_lowpass(z, {});
    for (double s : out.samples) CHECK(s == 0.0);
}

TEST_CASE("cutoff at or above Nyquist is rejected") {
    PreprocessConfig cfg;
    cfg.cutoff_hz = 23000.0;
    CHECK_THROWS_AS(chebyshev2_lowpass(tone(100, 0.01, 44100, 0.1), cfg),
                    std::invalid_argument);
}

TEST_CASE("filter is linear") {
    std::mt19937_64 rng(5);
    auto randsig = [&](int n) {
        AudioSignal s;
        s.sample_rate = 44100;
        for (int i = 0; i < n; ++i)
            s.samples.push_back(2.0 * (static_cast<double>(rng() >> 11) * 0x1.0p-53) - 1.0);
        return s;
    };
    const auto x = randsig(2000), y = randsig(2000);
    const double a = 0.7, b = -1.3;
    AudioSignal mix;
    mix.sample_rate = 44100;
    for (int i = 0; i < 2000; ++i) mix.samples.push_back(a * x.samples[i] + b * y.samples[i]);
    const auto fx = chebyshev2_lowpass(x, {});
    const auto fy = chebyshev2_lowpass(y, {});
    const auto fmix = chebyshev2_lowpass(mix, {});
    for (int i = 0; i < 2000; ++i) {
        CHECK(std::abs(fmix.samples[i] - (a * fx.samples[i] + b * fy.samples[i])) < 1e-9);
    }
}

TEST_CASE("filter is stable on a million bounded random samples") {
    std::mt19937_64 rng(17);
    AudioSignal s;
    s.sample_rate = 44100;
    s.samples.resize(1'000'000);
    for (auto& v : s.samples) v = 2.0 * (static_cast<double>(rng() >> 11) * 0x1.0p-53) - 1.0;
    const auto out = chebyshev2_lowpass(s, {});
    for (double v : out.samples) CHECK(std::abs(v) <= 10.0);
}

TEST_CASE("decimate length, rate, and definitional samples") {
    AudioSignal s;
    s.sample_rate = 44100;
    s.samples.assign(44100, 0.25);
    const auto d = decimate(s, 10);
    CHECK(d.samples.size() == 4410);
    CHECK(d.sample_rate == 4410);

    AudioSignal ramp;
    ramp.sample_rate = 100;
    for (int i = 0; i < 100; ++i) ramp.samples.push_back(i);
    const auto dr = decimate(ramp, 10);
    REQUIRE(dr.samples.size() == 10);
    for (int i = 0; i < 10; ++i) CHECK(dr.samples[i] == doctest::Approx(10.0 * i));

    const auto same = decimate(ramp, 1);
    CHECK(same.samples == ramp.samples);
    CHECK_THROWS_AS(decimate(ramp, 0), std::invalid_argument);
}

TEST_CASE("nested decimation equals the product factor") {
    AudioSignal s;
    s.sample_rate = 44100;
    std::mt19937_64 rng(3);
    for (int i = 0; i < 9999; ++i)
        s.samples.push_back(static_cast<double>(rng() >> 11) * 0x1.0p-53);
    const auto once = decimate(s, 10);
    const auto twice = decimate(decimate(s, 2), 5);
    CHECK(once.samples == twice.samples);
}

TEST_CASE("trim drops the lead-in before the first burst") {
    // 0.5 s of low noise (envelope < 0.05), then a 0.8 burst with a 10 ms attack
    const int fs = 44100;
    std::mt19937_64 rng(23);
    AudioSignal s;
    s.sample_rate = fs;
    const int lead = fs / 2;
    for (int i = 0; i < lead; ++i)
        s.samples.push_back(0.03 * (2.0 * (static_cast<double>(rng() >> 11) * 0x1.0p-53) - 1.0));
    const int burst_len = static_cast<int>(0.15 * fs);
    const int attack = static_cast<int>(0.01 * fs);
    for (int i = 0; i < burst_len; ++i) {
        double env = i < attack ? static_cast<double>(i) / attack : 1.0;
        env *= std::exp(-2.0 * std::max(0, i - attack) / static_cast<double>(burst_len));
        s.samples.push_back(0.8 * env * std::sin(2.0 * std::numbers::pi * 300.0 * i / fs));
    }
    s.samples.insert(s.samples.end(), fs / 4, 0.0);

    // burst peak location (on |signal|)
    std::size_t peak = 0;
    for (std::size_t i = 0; i < s.samples.size(); ++i) {
        if (std::abs(s.samples[i]) > std::abs(s.samples[peak])) peak = i;
    }
    const auto trimmed = trim_initial_bout(s);
    CHECK(trimmed.offset > 0);
    CHECK(trimmed.offset <= peak);
    CHECK(peak - trimmed.offset <= static_cast<std::size_t>(0.05 * fs));
    CHECK(trimmed.signal.samples.size() + trimmed.offset == s.samples.size());
}

TEST_CASE("trim leaves silence and zero-onset bursts unchanged") {
    AudioSignal silence;
    silence.sample_rate = 44100;
    silence.samples.assign(8000, 0.0);
    const auto t1 = trim_initial_bout(silence);
    CHECK(t1.offset == 0);
    CHECK(t1.signal.samples == silence.samples);

    auto burst = tone(300.0, 0.2, 44100, 0.8);  // full-scale from sample 0
    const auto t2 = trim_initial_bout(burst);
    CHECK(t2.offset == 0);
    CHECK(t2.signal.samples.size() == burst.samples.size());
}
