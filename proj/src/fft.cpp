#include "coughdetect/fft.hpp"

#include <fftw3.h>

#include <mutex>
#include <stdexcept>

namespace coughdetect {

namespace {

// FFTW plan creation/destruction is not thread-safe.
std::mutex& planner_mutex() {
    static std::mutex m;
    return m;
}

std::vector<std::complex<double>> transform(const std::vector<std::complex<double>>& x, int sign) {
    const std::size_t n = x.size();
    if (n == 0) return {};
    std::vector<std::complex<double>> out(n);
    fftw_complex* in_buf;
    fftw_complex* out_buf;
    fftw_plan plan;
    {
        std::lock_guard<std::mutex> lock(planner_mutex());
        in_buf = fftw_alloc_complex(n);
        out_buf = fftw_alloc_complex(n);
        plan = fftw_plan_dft_1d(static_cast<int>(n), in_buf, out_buf, sign, FFTW_ESTIMATE);
    }
    if (!plan) throw std::runtime_error("fft: plan creation failed");
    for (std::size_t i = 0; i < n; ++i) {
        in_buf[i][0] = x[i].real();
        in_buf[i][1] = x[i].imag();
    }
    fftw_execute(plan);
    for (std::size_t i = 0; i < n; ++i) out[i] = {out_buf[i][0], out_buf[i][1]};
    {
        std::lock_guard<std::mutex> lock(planner_mutex());
        fftw_destroy_plan(plan);
        fftw_free(in_buf);
        fftw_free(out_buf);
    }
    if (sign == FFTW_BACKWARD) {
        const double scale = 1.0 / static_cast<double>(n);
        for (auto& v : out) v *= scale;
    }
    return out;
}

}  // namespace

std::vector<std::complex<double>> fft(const std::vector<std::complex<double>>& x) {
    return transform(x, FFTW_FORWARD);
}

std::vector<std::complex<double>> ifft(const std::vector<std::complex<double>>& x) {
    return transform(x, FFTW_BACKWARD);
}

std::vector<std::complex<double>> fft_real(const std::vector<double>& x) {
    std::vector<std::complex<double>> cx(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) cx[i] = {x[i], 0.0};
    return fft(cx);
}

std::vector<std::complex<double>> analytic_signal(const std::vector<double>& x) {
    const std::size_t n = x.size();
    auto spec = fft_real(x);
    // double positive frequencies, zero negative ones; DC and Nyquist keep weight 1
    for (std::size_t k = 1; k < (n + 1) / 2; ++k) spec[k] *= 2.0;
    for (std::size_t k = n / 2 + 1; k < n; ++k) spec[k] = 0.0;
    return ifft(spec);
}

PowerSpectrum::PowerSpectrum(std::size_t n) : n_(n) {
    if (n == 0) throw std::invalid_argument("PowerSpectrum: zero frame length");
    std::lock_guard<std::mutex> lock(planner_mutex());
    in_ = fftw_alloc_real(n);
    auto* out = fftw_alloc_complex(n / 2 + 1);
    out_ = out;
    plan_ = fftw_plan_dft_r2c_1d(static_cast<int>(n), in_, out, FFTW_ESTIMATE);
    if (!plan_) throw std::runtime_error("PowerSpectrum: plan creation failed");
}

PowerSpectrum::~PowerSpectrum() {
    std::lock_guard<std::mutex> lock(planner_mutex());
    fftw_destroy_plan(static_cast<fftw_plan>(plan_));
    fftw_free(in_);
    fftw_free(static_cast<fftw_complex*>(out_));
}

void PowerSpectrum::compute(const double* frame, double* out) {
    for (std::size_t i = 0; i < n_; ++i) in_[i] = frame[i];
    fftw_execute(static_cast<fftw_plan>(plan_));
    auto* spec = static_cast<fftw_complex*>(out_);
    for (std::size_t k = 0; k < bins(); ++k) {
        out[k] = spec[k][0] * spec[k][0] + spec[k][1] * spec[k][1];
    }
}

}  // namespace coughdetect
