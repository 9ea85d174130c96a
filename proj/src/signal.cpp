#include "wavehax/signal.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace wavehax {

namespace {

constexpr double kPi = std::numbers::pi;

bool is_pow2(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }

// Iterative radix-2 Cooley-Tukey, in place. n must be a power of two.
void fft_pow2(std::vector<cplx>& a, bool inverse) {
    const std::size_t n = a.size();
    for (std::size_t i = 1, j = 0; i < n; ++i) {
        std::size_t bit = n >> 1;
        for (; j & bit; bit >>= 1) j ^= bit;
        j ^= bit;
        if (i < j) std::swap(a[i], a[j]);
    }
    for (std::size_t len = 2; len <= n; len <<= 1) {
        const double ang = 2.0 * kPi / static_cast<double>(len) * (inverse ? 1.0 : -1.0);
        const cplx wlen(std::cos(ang), std::sin(ang));
        for (std::size_t i = 0; i < n; i += len) {
            cplx w(1.0, 0.0);
            for (std::size_t k = 0; k < len / 2; ++k) {
                cplx u = a[i + k];
                cplx v = a[i + k + len / 2] * w;
                a[i + k] = u + v;
                a[i + k + len / 2] = u - v;
                w *= wlen;
            }
        }
    }
    if (inverse) {
        for (auto& v : a) v /= static_cast<double>(n);
    }
}

// Bluestein's algorithm: arbitrary-length DFT via a power-of-two convolution.
std::vector<cplx> fft_bluestein(const std::vector<cplx>& x, bool inverse) {
    const std::size_t n = x.size();
    const double sign = inverse ? 1.0 : -1.0;
    std::vector<cplx> w(n);
    for (std::size_t k = 0; k < n; ++k) {
        // k^2 mod 2n keeps the argument small for large n
        const std::size_t k2 = (k * k) % (2 * n);
        const double ang = sign * kPi * static_cast<double>(k2) / static_cast<double>(n);
        w[k] = cplx(std::cos(ang), std::sin(ang));
    }
    std::size_t m = 1;
    while (m < 2 * n - 1) m <<= 1;
    std::vector<cplx> a(m, cplx(0.0, 0.0)), b(m, cplx(0.0, 0.0));
    for (std::size_t k = 0; k < n; ++k) a[k] = x[k] * w[k];
    for (std::size_t k = 0; k < n; ++k) {
        b[k] = std::conj(w[k]);
        if (k != 0) b[m - k] = std::conj(w[k]);
    }
    fft_pow2(a, false);
    fft_pow2(b, false);
    for (std::size_t k = 0; k < m; ++k) a[k] *= b[k];
    fft_pow2(a, true);
    std::vector<cplx> out(n);
    for (std::size_t k = 0; k < n; ++k) out[k] = a[k] * w[k];
    if (inverse) {
        for (auto& v : out) v /= static_cast<double>(n);
    }
    return out;
}

// Reflect index (no edge repeat), folding as often as needed.
std::size_t reflect_index(long long i, long long n) {
    if (n == 1) return 0;
    const long long period = 2 * (n - 1);
    long long r = i % period;
    if (r < 0) r += period;
    if (r >= n) r = period - r;
    return static_cast<std::size_t>(r);
}

double kaiser_i0(double x) {
    // Series expansion of the zeroth-order modified Bessel function.
    double sum = 1.0, term = 1.0;
    const double q = x * x / 4.0;
    for (int k = 1; k < 64; ++k) {
        term *= q / (static_cast<double>(k) * k);
        sum += term;
        if (term < 1e-18 * sum) break;
    }
    return sum;
}

// Symmetric Kaiser-windowed sinc, odd length, cutoff as a fraction of the
// sample rate (0 < fc < 0.5). Unity DC-adjacent passband gain.
std::vector<double> design_lowpass(double fc, int taps, double beta) {
    if (taps % 2 == 0) ++taps;
    const int mid = taps / 2;
    std::vector<double> h(taps);
    const double denom = kaiser_i0(beta);
    for (int i = 0; i < taps; ++i) {
        const double t = static_cast<double>(i - mid);
        const double sinc = (t == 0.0) ? 2.0 * fc : std::sin(2.0 * kPi * fc * t) / (kPi * t);
        const double r = 2.0 * t / static_cast<double>(taps - 1);
        const double win = kaiser_i0(beta * std::sqrt(std::max(0.0, 1.0 - r * r))) / denom;
        h[i] = sinc * win;
    }
    return h;
}

std::vector<double> fir_apply_compensated(const std::vector<double>& x,
                                          const std::vector<double>& h) {
    const long long n = static_cast<long long>(x.size());
    const long long delay = static_cast<long long>(h.size()) / 2;
    std::vector<double> y(x.size(), 0.0);
    for (long long i = 0; i < n; ++i) {
        double acc = 0.0;
        for (long long m = 0; m < static_cast<long long>(h.size()); ++m) {
            const long long src = i + delay - m;
            if (src >= 0 && src < n) acc += h[m] * x[src];
        }
        y[i] = acc;
    }
    return y;
}

}  // namespace

std::vector<cplx> fft(const std::vector<cplx>& x, bool inverse) {
    if (x.empty()) throw std::invalid_argument("fft: empty input");
    if (is_pow2(x.size())) {
        std::vector<cplx> a = x;
        fft_pow2(a, inverse);
        return a;
    }
    return fft_bluestein(x, inverse);
}

Spectrum dft(const std::vector<double>& x, std::size_t size, int sample_rate) {
    if (size == 0) throw std::invalid_argument("dft: size must be positive");
    if (size < x.size()) throw std::invalid_argument("dft: size smaller than input length");
    std::vector<cplx> a(size, cplx(0.0, 0.0));
    for (std::size_t i = 0; i < x.size(); ++i) a[i] = cplx(x[i], 0.0);
    Spectrum s;
    s.bins = fft(a, false);
    s.sample_rate = sample_rate;
    return s;
}

Spectrum dft(const Waveform& x, std::size_t size) { return dft(x.samples, size, x.sample_rate); }

std::vector<double> time_convolve(const std::vector<double>& x,
                                  const std::vector<double>& h, Padding padding) {
    if (h.empty()) throw std::invalid_argument("time_convolve: empty kernel");
    if (h.size() > x.size())
        throw std::invalid_argument("time_convolve: kernel longer than signal");
    const long long n = static_cast<long long>(x.size());
    std::vector<double> y(x.size(), 0.0);
    for (long long i = 0; i < n; ++i) {
        double acc = 0.0;
        for (long long m = 0; m < static_cast<long long>(h.size()); ++m) {
            const long long idx = i + m;
            double v = 0.0;
            switch (padding) {
                case Padding::Periodic: v = x[static_cast<std::size_t>(idx % n)]; break;
                case Padding::Zero: v = (idx < n) ? x[static_cast<std::size_t>(idx)] : 0.0; break;
                case Padding::Reflect: v = x[reflect_index(idx, n)]; break;
            }
            acc += v * h[m];
        }
        y[i] = acc;
    }
    return y;
}

std::vector<double> hanning_periodic(int n) {
    std::vector<double> w(n);
    for (int i = 0; i < n; ++i)
        w[i] = 0.5 - 0.5 * std::cos(2.0 * kPi * static_cast<double>(i) / n);
    return w;
}

ComplexSpectrogram stft(const Waveform& x, int fft_size, int hop) {
    if (hop <= 0 || hop > fft_size) throw std::invalid_argument("stft: invalid hop");
    if (x.samples.empty() || x.samples.size() % static_cast<std::size_t>(hop) != 0)
        throw std::invalid_argument("stft: length must be a positive multiple of hop");
    const long long n = static_cast<long long>(x.samples.size());
    const int pad = fft_size / 2;
    const std::size_t frames = x.samples.size() / static_cast<std::size_t>(hop);
    const std::vector<double> win = hanning_periodic(fft_size);
    ComplexSpectrogram S;
    S.fft_size = fft_size;
    S.hop = hop;
    S.sample_rate = x.sample_rate;
    S.data.resize(frames);
    std::vector<cplx> frame(fft_size);
    for (std::size_t m = 0; m < frames; ++m) {
        for (int i = 0; i < fft_size; ++i) {
            const long long src = static_cast<long long>(m) * hop + i - pad;
            const double v = (src >= 0 && src < n)
                                 ? x.samples[static_cast<std::size_t>(src)]
                                 : x.samples[reflect_index(src, n)];
            frame[i] = cplx(v * win[i], 0.0);
        }
        std::vector<cplx> spec = fft(frame, false);
        S.data[m].assign(spec.begin(), spec.begin() + fft_size / 2 + 1);
    }
    return S;
}

Waveform istft(const ComplexSpectrogram& S) {
    const int fft_size = S.fft_size;
    const int hop = S.hop;
    const int pad = fft_size / 2;
    const std::size_t frames = S.frames();
    if (frames == 0) throw std::invalid_argument("istft: empty spectrogram");
    const std::size_t out_len = frames * static_cast<std::size_t>(hop);
    const std::size_t buf_len = out_len + static_cast<std::size_t>(fft_size);
    const std::vector<double> win = hanning_periodic(fft_size);
    std::vector<double> acc(buf_len, 0.0), env(buf_len, 0.0);
    std::vector<cplx> full(fft_size);
    for (std::size_t m = 0; m < frames; ++m) {
        const auto& half = S.data[m];
        for (int k = 0; k <= fft_size / 2; ++k) full[k] = half[k];
        for (int k = fft_size / 2 + 1; k < fft_size; ++k) full[k] = std::conj(half[fft_size - k]);
        std::vector<cplx> t = fft(full, true);
        for (int i = 0; i < fft_size; ++i) {
            const std::size_t dst = m * static_cast<std::size_t>(hop) + i;
            acc[dst] += t[i].real() * win[i];
            env[dst] += win[i] * win[i];
        }
    }
    Waveform y;
    y.sample_rate = S.sample_rate;
    y.samples.resize(out_len);
    for (std::size_t i = 0; i < out_len; ++i) {
        const double e = env[i + pad];
        if (e <= 1e-12) throw std::runtime_error("istft: zero window envelope");
        y.samples[i] = acc[i + pad] / e;
    }
    return y;
}

Waveform lowpass(const Waveform& x, double cutoff_hz, const LowpassConfig& cfg) {
    if (x.sample_rate <= 0) throw std::invalid_argument("lowpass: invalid sample rate");
    if (cutoff_hz >= 0.5 * x.sample_rate)
        throw std::invalid_argument("lowpass: cutoff at or above Nyquist");
    if (cutoff_hz <= 0.0) throw std::invalid_argument("lowpass: cutoff must be positive");
    const std::vector<double> h =
        design_lowpass(cutoff_hz / x.sample_rate, cfg.taps, cfg.beta);
    return Waveform(fir_apply_compensated(x.samples, h), x.sample_rate);
}

Waveform resample(const Waveform& x, double factor, const LowpassConfig& cfg) {
    if (factor == 2.0) {
        Waveform up;
        up.sample_rate = x.sample_rate * 2;
        up.samples.assign(x.samples.size() * 2, 0.0);
        for (std::size_t i = 0; i < x.samples.size(); ++i) up.samples[2 * i] = 2.0 * x.samples[i];
        // cutoff slightly inside the original Nyquist keeps the image band in
        // the filter's stopband
        const double cutoff = 0.5 * x.sample_rate * (1.0 - 2.0 / cfg.taps);
        return lowpass(up, cutoff, cfg);
    }
    if (factor == 0.5) {
        if (x.samples.size() % 2 != 0)
            throw std::invalid_argument("resample: odd length for factor 0.5");
        const double cutoff = 0.25 * x.sample_rate * (1.0 - 2.0 / cfg.taps);
        Waveform f = lowpass(x, cutoff, cfg);
        Waveform down;
        down.sample_rate = x.sample_rate / 2;
        down.samples.resize(x.samples.size() / 2);
        for (std::size_t i = 0; i < down.samples.size(); ++i) down.samples[i] = f.samples[2 * i];
        return down;
    }
    throw std::invalid_argument("resample: factor must be 2 or 0.5");
}

double hz_to_mel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }
double mel_to_hz(double mel) { return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0); }

std::vector<std::vector<double>> mel_filterbank(int bands, int fft_size, int sample_rate,
                                                double fmin, double fmax) {
    if (bands <= 0) throw std::invalid_argument("mel_filterbank: bands must be positive");
    if (fmax > 0.5 * sample_rate)
        throw std::invalid_argument("mel_filterbank: fmax above Nyquist");
    if (fmin >= fmax) throw std::invalid_argument("mel_filterbank: fmin >= fmax");
    const int nbins = fft_size / 2 + 1;
    const double mel_lo = hz_to_mel(fmin), mel_hi = hz_to_mel(fmax);
    std::vector<double> edges(bands + 2);
    for (int i = 0; i < bands + 2; ++i)
        edges[i] = mel_to_hz(mel_lo + (mel_hi - mel_lo) * i / (bands + 1));
    std::vector<std::vector<double>> fb(bands, std::vector<double>(nbins, 0.0));
    for (int b = 0; b < bands; ++b) {
        const double lo = edges[b], mid = edges[b + 1], hi = edges[b + 2];
        for (int k = 0; k < nbins; ++k) {
            const double f = static_cast<double>(k) * sample_rate / fft_size;
            if (f > lo && f < mid)
                fb[b][k] = (f - lo) / (mid - lo);
            else if (f >= mid && f < hi)
                fb[b][k] = (hi - f) / (hi - mid);
        }
    }
    return fb;
}

MelSpectrogram mel_spectrogram(const Waveform& x, const MelConfig& cfg) {
    const auto fb = mel_filterbank(cfg.bands, cfg.fft_size, x.sample_rate, cfg.fmin, cfg.fmax);
    ComplexSpectrogram S = stft(x, cfg.fft_size, cfg.hop);
    MelSpectrogram M;
    M.bands = cfg.bands;
    M.fmin = cfg.fmin;
    M.fmax = cfg.fmax;
    M.hop = cfg.hop;
    M.data.resize(S.frames(), std::vector<double>(cfg.bands, 0.0));
    std::vector<double> mag(S.bins());
    for (std::size_t m = 0; m < S.frames(); ++m) {
        for (std::size_t k = 0; k < S.bins(); ++k) mag[k] = std::abs(S.data[m][k]);
        for (int b = 0; b < cfg.bands; ++b) {
            double acc = 0.0;
            for (std::size_t k = 0; k < mag.size(); ++k) acc += fb[b][k] * mag[k];
            M.data[m][b] = std::log(acc + cfg.log_floor);
        }
    }
    return M;
}

}  // namespace wavehax
