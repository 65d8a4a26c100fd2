#pragma once

#include <complex>
#include <cstddef>
#include <vector>

namespace cough {

// Iterative radix-2 FFT with twiddle factors precomputed per plan. One plan
// serves every frame of an STFT, so construction cost is paid once.
class FftPlan {
public:
    explicit FftPlan(std::size_t n);

    std::size_t size() const { return n_; }

    // In-place transforms. Input length must equal size().
    void forward(std::vector<std::complex<double>>& data) const;
    void inverse(std::vector<std::complex<double>>& data) const;

    // Forward transform of a real frame (zero-padded or truncated to n).
    std::vector<std::complex<double>> forward_real(
        const std::vector<double>& frame) const;

private:
    void transform(std::vector<std::complex<double>>& data,
                   bool invert) const;

    std::size_t n_;
    std::vector<std::size_t> bit_reverse_;
    std::vector<std::complex<double>> twiddles_;  // exp(-2*pi*i*k/n), k < n/2
};

// Periodic Hann window of length n: 0.5 - 0.5*cos(2*pi*k/n).
std::vector<double> hann_window(std::size_t n);

}  // namespace cough
