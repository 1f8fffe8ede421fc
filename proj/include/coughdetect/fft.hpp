#pragma once

#include <complex>
#include <vector>

namespace coughdetect {

// Thin wrappers over FFTW (double precision). Arbitrary lengths are fine;
// plan creation is serialized internally so callers may run in parallel.

std::vector<std::complex<double>> fft(const std::vector<std::complex<double>>& x);
std::vector<std::complex<double>> ifft(const std::vector<std::complex<double>>& x);

// Forward FFT of a real sequence (full complex spectrum, length n).
std::vector<std::complex<double>> fft_real(const std::vector<double>& x);

// Analytic signal via the frequency-domain Hilbert construction.
std::vector<std::complex<double>> analytic_signal(const std::vector<double>& x);

// Reusable real->power-spectrum transform for fixed-size frames.
// Computes |X_k|^2 for k = 0..n/2 (inclusive).
class PowerSpectrum {
public:
    explicit PowerSpectrum(std::size_t n);
    ~PowerSpectrum();
    PowerSpectrum(const PowerSpectrum&) = delete;
    PowerSpectrum& operator=(const PowerSpectrum&) = delete;

    std::size_t size() const { return n_; }
    std::size_t bins() const { return n_ / 2 + 1; }

    // frame must hold exactly size() samples; out must hold bins() values.
    // Not safe for concurrent calls on one instance.
    void compute(const double* frame, double* out);

private:
    std::size_t n_;
    void* plan_;
    double* in_;
    void* out_;
};

}  // namespace coughdetect
