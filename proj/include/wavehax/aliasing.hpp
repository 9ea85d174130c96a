#ifndef WAVEHAX_ALIASING_HPP
#define WAVEHAX_ALIASING_HPP

#include <functional>
#include <string>
#include <vector>

#include "wavehax/signal.hpp"

namespace wavehax {

/// Stateless pointwise nonlinearity used by the alias analyses.
struct PointwiseNonlinearity {
    std::string name;
    std::function<double(double)> evaluate;
};

PointwiseNonlinearity relu_nonlinearity();
PointwiseNonlinearity tanh_nonlinearity();
// snake(x) = x + sin^2(alpha x) / alpha
PointwiseNonlinearity snake_nonlinearity(double alpha = 1.0);
// sum_k coeffs[k] * x^k
PointwiseNonlinearity polynomial_nonlinearity(const std::vector<double>& coeffs);

/// sin^k expansion coefficients: sum_m a[m] sin(m theta) + b[m] cos(m theta).
struct HarmonicDecomposition {
    std::vector<double> a;
    std::vector<double> b;
};

// a[n] = f(x[n]) / x[n] where x[n] != 0, else 0, so x .* a = f(x).
std::vector<double> coefficient_signal(const std::vector<double>& x,
                                       const PointwiseNonlinearity& f);

// Upsample x2, low-pass at the original Nyquist, apply f pointwise, low-pass,
// downsample. Output length equals input length.
Waveform anti_aliased_apply(const Waveform& x, const PointwiseNonlinearity& f,
                            const LowpassConfig& filt = {});

// Truncated Fourier series of relu(sin(omega t)) sampled at integer t.
std::vector<double> rectified_sine_oracle(double omega, int n_terms, std::size_t length);

// Exact sin^k decomposition via the product-to-sum recurrence.
HarmonicDecomposition sine_power_decompose(int k);

// Evaluate a decomposition at angle theta.
double evaluate_decomposition(const HarmonicDecomposition& d, double theta);

// DFT of poly(sin(2 pi f0_bin n / N)) over N samples.
Spectrum polynomial_apply_spectrum(int f0_bin, const std::vector<double>& coeffs,
                                   std::size_t N);

// Localized circular convolution over frequency bins:
// out[k] = sum_m S[(k + m) mod N] * kernel[m].
Spectrum freq_domain_convolve(const Spectrum& S, const std::vector<cplx>& kernel);

// 10*log10(E_nonharmonic / E_harmonic) over a Hann-windowed steady segment
// (first/last 10% discarded). Harmonic bins lie within tolerance_bins of any
// k*f0 including DC.
double alias_energy(const Waveform& x, double f0_hz, int tolerance_bins = 4);

/// One row of the analyze-alias CSV export.
struct AliasSpectrumRow {
    double bin_hz;
    double xhat_db;     // upsampled input
    double ahat_db;     // coefficient signal
    double product_db;  // xhat .* ahat
};
std::vector<AliasSpectrumRow> analyze_alias_spectra(const Waveform& x,
                                                    const PointwiseNonlinearity& f,
                                                    const LowpassConfig& filt = {});

}  // namespace wavehax

#endif
