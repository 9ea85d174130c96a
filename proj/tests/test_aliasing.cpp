#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "wavehax/aliasing.hpp"

using namespace wavehax;

namespace {
constexpr double kPi = std::numbers::pi;
}

TEST_CASE("rectified sine oracle converges to pointwise relu(sin)") {
    // oversampled: ~314 samples per period
    const double omega = 0.02;
    const auto y = rectified_sine_oracle(omega, 500, 10000);
    double max_err = 0.0;
    for (std::size_t t = 0; t < y.size(); ++t) {
        const double want = std::max(0.0, std::sin(omega * static_cast<double>(t)));
        max_err = std::max(max_err, std::abs(y[t] - want));
    }
    CHECK(max_err < 1e-3);
    CHECK_THROWS_AS(rectified_sine_oracle(omega, 0, 10), std::invalid_argument);
}

TEST_CASE("rectified sine series coefficients are the closed forms") {
    // one exact term: with a single cosine term the series is
    // 1/pi + sin/2 - 2 cos(2wt) / (3 pi)
    const double omega = 0.1;
    const auto y = rectified_sine_oracle(omega, 1, 50);
    for (std::size_t t = 0; t < y.size(); ++t) {
        const double wt = omega * static_cast<double>(t);
        const double want = 1.0 / kPi + 0.5 * std::sin(wt) - 2.0 * std::cos(2.0 * wt) / (3.0 * kPi);
        CHECK(y[t] == doctest::Approx(want).epsilon(1e-12));
    }
}

TEST_CASE("sine powers decompose exactly with support bounded by k") {
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> angle(-kPi, kPi);
    for (int k = 0; k <= 12; ++k) {
        const auto d = sine_power_decompose(k);
        REQUIRE(static_cast<int>(d.a.size()) == k + 1);  // no harmonic above k
        for (int trial = 0; trial < 1000; ++trial) {
            const double theta = angle(rng);
            const double want = std::pow(std::sin(theta), k);
            CHECK(std::abs(evaluate_decomposition(d, theta) - want) < 1e-10);
        }
    }
    CHECK_THROWS_AS(sine_power_decompose(-1), std::invalid_argument);
}

TEST_CASE("sine power closed forms for small k") {
    // sin^2 = 1/2 - cos(2t)/2 ; sin^3 = 3/4 sin - 1/4 sin(3t)
    const auto d2 = sine_power_decompose(2);
    CHECK(d2.b[0] == doctest::Approx(0.5));
    CHECK(d2.b[2] == doctest::Approx(-0.5));
    CHECK(d2.a[1] == doctest::Approx(0.0));
    const auto d3 = sine_power_decompose(3);
    CHECK(d3.a[1] == doctest::Approx(0.75));
    CHECK(d3.a[3] == doctest::Approx(-0.25));
}

TEST_CASE("coefficient signal reconstructs the nonlinearity by multiplication") {
    std::mt19937_64 rng(2);
    std::normal_distribution<double> g;
    std::vector<double> x(100);
    for (auto& v : x) v = g(rng);
    x[7] = 0.0;  // exercise the zero branch
    for (const auto& f : {relu_nonlinearity(), tanh_nonlinearity(), snake_nonlinearity(1.5)}) {
        const auto a = coefficient_signal(x, f);
        for (std::size_t i = 0; i < x.size(); ++i) {
            if (x[i] == 0.0)
                CHECK(a[i] == 0.0);
            else
                CHECK(x[i] * a[i] == doctest::Approx(f.evaluate(x[i])).epsilon(1e-12));
        }
    }
}

TEST_CASE("anti-aliased relu beats the naive application") {
    const int sr = 1000;
    double max_residual = -1e9;
    for (int f0i = 50; f0i <= 450; f0i += 10) {
        // when f0 divides the sample rate every folded harmonic lands back on
        // the harmonic grid, so the energy-partition metric is blind there
        if (sr % f0i == 0) continue;
        const double f0 = f0i;
        Waveform x;
        x.sample_rate = sr;
        x.samples.resize(4000);
        for (std::size_t i = 0; i < x.samples.size(); ++i)
            x.samples[i] = std::sin(2.0 * kPi * f0 * static_cast<double>(i) / sr);
        Waveform naive = x;
        const auto relu = relu_nonlinearity();
        for (auto& v : naive.samples) v = relu.evaluate(v);
        const Waveform smart = anti_aliased_apply(x, relu);
        REQUIRE(smart.samples.size() == x.samples.size());
        const double e_naive = alias_energy(naive, f0);
        const double e_smart = alias_energy(smart, f0);
        CHECK(e_smart <= e_naive - 10.0);
        max_residual = std::max(max_residual, e_smart);
    }
    CHECK(max_residual > -80.0);  // aliasing reduced, not eliminated
}

TEST_CASE("naive relu of a tone carries measurable aliased content") {
    const int sr = 1000;
    auto tone = [sr](double f0) {
        Waveform x;
        x.sample_rate = sr;
        x.samples.resize(4000);
        for (std::size_t i = 0; i < x.samples.size(); ++i)
            x.samples[i] = std::sin(2.0 * kPi * f0 * static_cast<double>(i) / sr);
        return x;
    };
    const Waveform pure = tone(60.0);
    CHECK(alias_energy(pure, 60.0) < -80.0);
    Waveform clipped = pure;
    for (auto& v : clipped.samples) v = std::max(0.0, v);
    // the 8th and higher harmonics fold; the exact figure depends on the
    // analysis window, but the aliased floor sits far above the pure tone
    const double e = alias_energy(clipped, 60.0);
    CHECK(e > -40.0);
    CHECK(e > alias_energy(pure, 60.0) + 60.0);
}

TEST_CASE("alias_energy of white noise matches the flat-spectrum expectation") {
    std::mt19937_64 rng(17);
    std::normal_distribution<double> g;
    const int sr = 1000;
    const double f0 = 60.0;
    double mean_db = 0.0;
    const int trials = 8;
    for (int trial = 0; trial < trials; ++trial) {
        Waveform x;
        x.sample_rate = sr;
        x.samples.resize(5000);
        for (auto& v : x.samples) v = g(rng);
        mean_db += alias_energy(x, f0);
    }
    mean_db /= trials;
    // count harmonic vs non-harmonic bins of the trimmed 4000-sample DFT
    const std::size_t n = 4000;
    const double bin_hz = static_cast<double>(sr) / static_cast<double>(n);
    std::size_t harm = 0, other = 0;
    for (std::size_t k = 0; k <= n / 2; ++k) {
        const double f = k * bin_hz;
        (std::abs(f - std::round(f / f0) * f0) <= 4 * bin_hz ? harm : other) += 1;
    }
    const double expect = 10.0 * std::log10(static_cast<double>(other) / harm);
    CHECK(mean_db == doctest::Approx(expect).epsilon(0.15));
}

TEST_CASE("naive relu has even cosine harmonics and no odd ones above the fundamental") {
    // 60 Hz at 1 kHz: exactly 3 cycles in 50 samples, so the DFT grid is exact
    std::vector<double> x(50);
    for (std::size_t t = 0; t < x.size(); ++t)
        x[t] = std::max(0.0, std::sin(2.0 * kPi * 3.0 * static_cast<double>(t) / 50.0));
    const Spectrum S = dft(x, 50, 1000);
    const double fund = std::abs(S.bins[3]);
    CHECK(fund > 1.0);
    for (int h = 2; h <= 8; ++h) {
        const auto& bin = S.bins[static_cast<std::size_t>(3 * h)];
        if (h % 2 == 1) {
            CHECK(std::abs(bin) < 1e-9 * fund);  // odd harmonics vanish
        } else {
            CHECK(std::abs(bin.real()) > 1e-3 * fund);  // even ones are cosines
            CHECK(std::abs(bin.imag()) < 1e-9 * fund);
        }
    }
}

TEST_CASE("pointwise product maps to circular spectral convolution") {
    std::mt19937_64 rng(23);
    std::normal_distribution<double> g;
    const std::size_t N = 48;
    std::vector<double> x(N), a(N), prod(N);
    for (std::size_t i = 0; i < N; ++i) {
        x[i] = g(rng);
        a[i] = g(rng);
        prod[i] = x[i] * a[i];
    }
    const Spectrum X = dft(x, N), A = dft(a, N), P = dft(prod, N);
    for (std::size_t k = 0; k < N; ++k) {
        cplx want(0.0, 0.0);
        for (std::size_t m = 0; m < N; ++m)
            want += X.bins[m] * A.bins[(k + N - m) % N];
        want /= static_cast<double>(N);
        CHECK(std::abs(P.bins[k] - want) < 1e-9);
    }
}

TEST_CASE("polynomial spectrum matches the sine-power decomposition") {
    // x^2 of a bin-5 sinusoid: energy at DC and bin 10 only
    const std::size_t N = 64;
    const Spectrum S = polynomial_apply_spectrum(5, {0.0, 0.0, 1.0}, N);
    REQUIRE(S.bins.size() == N);
    for (std::size_t k = 0; k <= N / 2; ++k) {
        const double mag = std::abs(S.bins[k]) / static_cast<double>(N);
        if (k == 0)
            CHECK(mag == doctest::Approx(0.5).epsilon(1e-9));
        else if (k == 10)
            CHECK(mag == doctest::Approx(0.25).epsilon(1e-9));
        else
            CHECK(mag < 1e-9);
    }
}

TEST_CASE("frequency-domain convolution matches a brute-force loop") {
    std::mt19937_64 rng(3);
    std::normal_distribution<double> g;
    Spectrum S;
    S.sample_rate = 1000;
    S.bins.resize(16);
    for (auto& v : S.bins) v = cplx(g(rng), g(rng));
    std::vector<cplx> kernel{{0.5, 0.1}, {-0.2, 0.0}, {0.0, 0.3}};
    const Spectrum out = freq_domain_convolve(S, kernel);
    for (std::size_t k = 0; k < 16; ++k) {
        cplx want(0.0, 0.0);
        for (std::size_t m = 0; m < kernel.size(); ++m)
            want += S.bins[(k + m) % 16] * kernel[m];
        CHECK(std::abs(out.bins[k] - want) < 1e-12);
    }
    CHECK_THROWS_AS(freq_domain_convolve(S, {}), std::invalid_argument);
    CHECK_THROWS_AS(freq_domain_convolve(S, std::vector<cplx>(17)), std::invalid_argument);
}

TEST_CASE("alias_energy is near silent for a pure on-grid sinusoid") {
    const int sr = 1000;
    Waveform x;
    x.sample_rate = sr;
    x.samples.resize(1000);
    for (std::size_t i = 0; i < x.samples.size(); ++i)
        x.samples[i] = std::sin(2.0 * kPi * 100.0 * static_cast<double>(i) / sr);
    CHECK(alias_energy(x, 100.0) < -100.0);
    CHECK_THROWS_AS(alias_energy(x, 0.0), std::invalid_argument);
    CHECK_THROWS_AS(alias_energy(x, 600.0), std::invalid_argument);
}

TEST_CASE("analyze_alias_spectra reports a consistent grid") {
    const int sr = 1000;
    Waveform x;
    x.sample_rate = sr;
    x.samples.resize(1000);
    for (std::size_t i = 0; i < x.samples.size(); ++i)
        x.samples[i] = std::sin(2.0 * kPi * 100.0 * static_cast<double>(i) / sr);
    const auto rows = analyze_alias_spectra(x, relu_nonlinearity());
    REQUIRE(!rows.empty());
    CHECK(rows.front().bin_hz == doctest::Approx(0.0));
    CHECK(rows.back().bin_hz == doctest::Approx(1000.0));  // doubled rate Nyquist
    // the product spectrum must show content beyond the original band:
    // that out-of-band content is exactly what the low-pass then removes
    double above = -300.0;
    for (const auto& r : rows)
        if (r.bin_hz > 500.0) above = std::max(above, r.product_db);
    CHECK(above > -60.0);
}
