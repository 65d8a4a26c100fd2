#include "cough/fft.hpp"

#include <cmath>
#include <stdexcept>

namespace cough {

namespace {

constexpr double kPi = 3.14159265358979323846;

bool is_power_of_two(std::size_t n) {
    return n != 0 && (n & (n - 1)) == 0;
}

}  // namespace

FftPlan::FftPlan(std::size_t n) : n_(n) {
    if (!is_power_of_two(n)) {
        throw std::invalid_argument("FftPlan size must be a power of two");
    }
    bit_reverse_.resize(n);
    std::size_t log2n = 0;
    while ((std::size_t{1} << log2n) < n) ++log2n;
    for (std::size_t i = 0; i < n; ++i) {
        std::size_t r = 0;
        for (std::size_t b = 0; b < log2n; ++b) {
            if (i & (std::size_t{1} << b)) r |= std::size_t{1} << (log2n - 1 - b);
        }
        bit_reverse_[i] = r;
    }
    twiddles_.resize(n / 2);
    for (std::size_t k = 0; k < n / 2; ++k) {
        double angle = -2.0 * kPi * static_cast<double>(k) / static_cast<double>(n);
        twiddles_[k] = {std::cos(angle), std::sin(angle)};
    }
}

void FftPlan::transform(std::vector<std::complex<double>>& data,
                        bool invert) const {
    if (data.size() != n_) {
        throw std::invalid_argument("FFT input length does not match plan");
    }
    for (std::size_t i = 0; i < n_; ++i) {
        std::size_t j = bit_reverse_[i];
        if (i < j) std::swap(data[i], data[j]);
    }
    for (std::size_t len = 2; len <= n_; len <<= 1) {
        std::size_t stride = n_ / len;
        for (std::size_t start = 0; start < n_; start += len) {
            for (std::size_t k = 0; k < len / 2; ++k) {
                std::complex<double> w = twiddles_[k * stride];
                if (invert) w = std::conj(w);
                std::complex<double>& a = data[start + k];
                std::complex<double>& b = data[start + k + len / 2];
                std::complex<double> t = w * b;
                b = a - t;
                a = a + t;
            }
        }
    }
    if (invert) {
        double scale = 1.0 / static_cast<double>(n_);
        for (auto& v : data) v *= scale;
    }
}

void FftPlan::forward(std::vector<std::complex<double>>& data) const {
    transform(data, false);
}

void FftPlan::inverse(std::vector<std::complex<double>>& data) const {
    transform(data, true);
}

std::vector<std::complex<double>> FftPlan::forward_real(
    const std::vector<double>& frame) const {
    std::vector<std::complex<double>> data(n_);
    std::size_t m = std::min(frame.size(), n_);
    for (std::size_t i = 0; i < m; ++i) data[i] = {frame[i], 0.0};
    transform(data, false);
    return data;
}

std::vector<double> hann_window(std::size_t n) {
    std::vector<double> w(n);
    for (std::size_t k = 0; k < n; ++k) {
        w[k] = 0.5 - 0.5 * std::cos(2.0 * kPi * static_cast<double>(k) /
                                    static_cast<double>(n));
    }
    return w;
}

}  // namespace cough
