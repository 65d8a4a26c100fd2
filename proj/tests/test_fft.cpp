#include <doctest.h>

#include <cmath>
#include <complex>
#include <random>
#include <vector>

#include "cough/fft.hpp"

using cough::FftPlan;

namespace {

constexpr double kPi = 3.14159265358979323846;

// Textbook O(N^2) DFT, the oracle every fast transform is checked against.
std::vector<std::complex<double>> naive_dft(
    const std::vector<std::complex<double>>& x) {
    const std::size_t n = x.size();
    std::vector<std::complex<double>> out(n);
    for (std::size_t k = 0; k < n; ++k) {
        std::complex<double> acc{0.0, 0.0};
        for (std::size_t t = 0; t < n; ++t) {
            const double angle = -2.0 * kPi * static_cast<double>(k * t) /
                                 static_cast<double>(n);
            acc += x[t] * std::complex<double>(std::cos(angle), std::sin(angle));
        }
        out[k] = acc;
    }
    return out;
}

double max_rel_error(const std::vector<std::complex<double>>& got,
                     const std::vector<std::complex<double>>& want) {
    double scale = 0.0;
    for (const auto& w : want) scale = std::max(scale, std::abs(w));
    if (scale == 0.0) scale = 1.0;
    double worst = 0.0;
    for (std::size_t i = 0; i < got.size(); ++i) {
        worst = std::max(worst, std::abs(got[i] - want[i]) / scale);
    }
    return worst;
}

}  // namespace

TEST_CASE("fft matches naive dft on random frames") {
    std::mt19937_64 rng(0x5EED);
    std::normal_distribution<double> dist(0.0, 1.0);
    for (std::size_t n : {2u, 8u, 64u, 512u}) {
        FftPlan plan(n);
        for (int rep = 0; rep < 50; ++rep) {
            std::vector<std::complex<double>> x(n);
            for (auto& v : x) v = {dist(rng), dist(rng)};
            auto want = naive_dft(x);
            auto got = x;
            plan.forward(got);
            CAPTURE(n);
            CHECK(max_rel_error(got, want) < 1e-6);
        }
    }
}

TEST_CASE("fft inverse round trip") {
    std::mt19937_64 rng(42);
    std::normal_distribution<double> dist(0.0, 1.0);
    FftPlan plan(256);
    std::vector<std::complex<double>> x(256);
    for (auto& v : x) v = {dist(rng), dist(rng)};
    auto y = x;
    plan.forward(y);
    plan.inverse(y);
    double worst = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        worst = std::max(worst, std::abs(y[i] - x[i]));
    }
    CHECK(worst < 1e-9);
}

TEST_CASE("fft satisfies parseval") {
    std::mt19937_64 rng(7);
    std::normal_distribution<double> dist(0.0, 1.0);
    FftPlan plan(512);
    for (int rep = 0; rep < 20; ++rep) {
        std::vector<double> frame(512);
        double time_energy = 0.0;
        for (auto& v : frame) {
            v = dist(rng);
            time_energy += v * v;
        }
        auto spec = plan.forward_real(frame);
        double freq_energy = 0.0;
        for (const auto& c : spec) freq_energy += std::norm(c);
        freq_energy /= 512.0;
        CHECK(std::abs(freq_energy - time_energy) / time_energy < 1e-6);
    }
}

TEST_CASE("forward_real zero pads short frames") {
    FftPlan plan(8);
    std::vector<double> frame{1.0, 2.0, 3.0};
    auto spec = plan.forward_real(frame);
    REQUIRE(spec.size() == 8);
    std::vector<std::complex<double>> padded(8, {0.0, 0.0});
    padded[0] = 1.0;
    padded[1] = 2.0;
    padded[2] = 3.0;
    auto want = naive_dft(padded);
    CHECK(max_rel_error(spec, want) < 1e-9);
}

TEST_CASE("real signal spectrum is conjugate symmetric") {
    std::mt19937_64 rng(13);
    std::normal_distribution<double> dist(0.0, 1.0);
    FftPlan plan(64);
    std::vector<double> frame(64);
    for (auto& v : frame) v = dist(rng);
    auto spec = plan.forward_real(frame);
    for (std::size_t k = 1; k < 32; ++k) {
        CHECK(std::abs(spec[k] - std::conj(spec[64 - k])) < 1e-9);
    }
}

TEST_CASE("single tone concentrates in one bin") {
    FftPlan plan(512);
    std::vector<double> frame(512);
    for (std::size_t i = 0; i < 512; ++i) {
        frame[i] = std::sin(2.0 * kPi * 10.0 * static_cast<double>(i) / 512.0);
    }
    auto spec = plan.forward_real(frame);
    std::size_t peak = 0;
    for (std::size_t k = 1; k < 256; ++k) {
        if (std::abs(spec[k]) > std::abs(spec[peak])) peak = k;
    }
    CHECK(peak == 10);
}

TEST_CASE("hann window endpoints and midpoint") {
    auto w = cough::hann_window(400);
    REQUIRE(w.size() == 400);
    CHECK(w[0] == doctest::Approx(0.0));
    CHECK(w[200] == doctest::Approx(1.0));
    // Periodic form: w[k] + w[k + n/2] == 1 for all k.
    for (std::size_t k = 0; k < 200; ++k) {
        CHECK(w[k] + w[k + 200] == doctest::Approx(1.0));
    }
}
