#ifndef WAVEHAX_SIGNAL_HPP
#define WAVEHAX_SIGNAL_HPP

#include <complex>
#include <string>
#include <vector>

namespace wavehax {

using cplx = std::complex<double>;

/// 1-D real sampled signal with its sample rate in Hz.
struct Waveform {
    std::vector<double> samples;
    int sample_rate = 0;

    Waveform() = default;
    Waveform(std::vector<double> s, int sr) : samples(std::move(s)), sample_rate(sr) {}
    std::size_t size() const { return samples.size(); }
};

/// Complex DFT bins of a single analysis frame or whole signal.
struct Spectrum {
    std::vector<cplx> bins;
    int sample_rate = 0;
};

/// frames x bins grid of complex STFT values plus the analysis parameters.
struct ComplexSpectrogram {
    std::vector<std::vector<cplx>> data;  // [frames][bins], bins = fft_size/2 + 1
    int fft_size = 0;
    int hop = 0;
    int sample_rate = 0;

    std::size_t frames() const { return data.size(); }
    std::size_t bins() const { return data.empty() ? 0 : data[0].size(); }
};

struct MelConfig {
    int bands = 100;
    int fft_size = 2048;
    int hop = 240;  // 10 ms at 24 kHz; callers override for other rates
    double fmin = 0.0;
    double fmax = 8000.0;
    double log_floor = 1e-5;
};

/// frames x bands grid of log mel amplitudes.
struct MelSpectrogram {
    std::vector<std::vector<double>> data;  // [frames][bands]
    int bands = 0;
    double fmin = 0.0;
    double fmax = 0.0;
    int hop = 0;
};

enum class Padding { Periodic, Zero, Reflect };

// Complex FFT of arbitrary length (radix-2 plus Bluestein), unnormalized
// forward; inverse carries the 1/N factor.
std::vector<cplx> fft(const std::vector<cplx>& x, bool inverse = false);

// DFT of a real sequence zero-padded to `size`, bins[k] = sum x[n] e^{-j2pikn/size}.
Spectrum dft(const std::vector<double>& x, std::size_t size, int sample_rate = 0);
Spectrum dft(const Waveform& x, std::size_t size);

// Correlation-style convolution: out[n] = sum_m x[n+m] h[m] under the chosen
// padding rule. Output length equals the input length.
std::vector<double> time_convolve(const std::vector<double>& x,
                                  const std::vector<double>& h,
                                  Padding padding = Padding::Periodic);

// Periodic (DFT-even) Hanning window of length n.
std::vector<double> hanning_periodic(int n);

// Centered STFT: reflect-pad fft_size/2 each side, one frame per hop,
// so frames = length / hop exactly. Requires length % hop == 0.
ComplexSpectrogram stft(const Waveform& x, int fft_size, int hop);

// Least-squares overlap-add inverse of stft(); istft(stft(x)) ~= x.
Waveform istft(const ComplexSpectrogram& S);

struct LowpassConfig {
    int taps = 97;       // odd; even requests are rounded up one for integer group delay
    double beta = 8.6;   // Kaiser shape
};

// Linear-phase windowed-sinc FIR low pass, group delay compensated.
Waveform lowpass(const Waveform& x, double cutoff_hz, const LowpassConfig& cfg = {});

// factor 2: zero-stuff then low-pass at the original Nyquist;
// factor 0.5: low-pass at the target Nyquist then decimate.
Waveform resample(const Waveform& x, double factor, const LowpassConfig& cfg = {});

// Triangular HTK-mel filterbank rows over fft_size/2+1 linear bins.
std::vector<std::vector<double>> mel_filterbank(int bands, int fft_size,
                                                int sample_rate, double fmin, double fmax);

// Log mel amplitude spectrogram: log(filterbank . |STFT| + floor).
MelSpectrogram mel_spectrogram(const Waveform& x, const MelConfig& cfg = {});

double hz_to_mel(double hz);
double mel_to_hz(double mel);

}  // namespace wavehax

#endif
