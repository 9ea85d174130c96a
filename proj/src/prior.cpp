#include "wavehax/prior.hpp"

#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>

#include "wavehax/aliasing.hpp"

namespace wavehax {

namespace {
constexpr double kPi = std::numbers::pi;
}

std::vector<double> upsample_f0(const F0Contour& f0) {
    std::vector<double> out;
    out.reserve(f0.values.size() * static_cast<std::size_t>(f0.hop));
    for (double v : f0.values)
        out.insert(out.end(), static_cast<std::size_t>(f0.hop), v);
    return out;
}

int harmonic_count(double f_hz, double fmax_hz) {
    if (f_hz <= 0.0) throw std::invalid_argument("harmonic_count: f must be positive");
    return static_cast<int>(std::floor(fmax_hz / f_hz));
}

Waveform generate_prior(const F0Contour& f0, const PriorConfig& cfg) {
    const double nyquist = 0.5 * f0.sample_rate;
    const double fmax = cfg.fmax > 0.0 ? cfg.fmax : nyquist;
    std::mt19937_64 rng(cfg.seed);
    std::uniform_real_distribution<double> phase_dist(-kPi, kPi);
    std::normal_distribution<double> gauss(0.0, 1.0);
    const double phi0 = phase_dist(rng);  // one draw per utterance

    const std::vector<double> f = upsample_f0(f0);
    Waveform out;
    out.sample_rate = f0.sample_rate;
    out.samples.resize(f.size(), 0.0);

    if (cfg.kind == PriorKind::Noise) {
        for (auto& v : out.samples) v = gauss(rng);
        return out;
    }

    double phase = 0.0;  // cumulative, cycles of the fundamental
    for (std::size_t n = 0; n < f.size(); ++n) {
        phase += f[n] / f0.sample_rate;
        double v = 0.0;
        if (f[n] > 0.0) {
            if (cfg.kind == PriorKind::Sine) {
                v = cfg.lc * std::sqrt(2.0) * std::sin(2.0 * kPi * phase + phi0);
            } else {
                const int count = harmonic_count(f[n], fmax);
                if (count > 0) {
                    const double amp = cfg.lc * std::sqrt(2.0 / count);
                    for (int k = 1; k <= count; ++k) {
                        if (k * f[n] >= nyquist) break;  // no real-only partial at Nyquist
                        // linear phase k*phi0 (a random time shift) plus a
                        // Schroeder quadratic term that spreads the pulse into
                        // a chirp, keeping per-frame power near-constant
                        const double phi_k = k * phi0 - kPi * k * static_cast<double>(k) / count;
                        v += amp * std::sin(2.0 * kPi * k * phase + phi_k);
                    }
                }
            }
        }
        if (cfg.noise_sigma > 0.0) v += cfg.noise_sigma * gauss(rng);
        out.samples[n] = v;
    }
    return out;
}

Waveform naive_pulse_train(double f0_hz, int sample_rate, std::size_t length) {
    Waveform out;
    out.sample_rate = sample_rate;
    out.samples.resize(length, 0.0);
    // pointwise sampling of a continuous impulse train: a pulse lands on the
    // sample whose interval contains a period boundary
    double phase = 0.0;
    for (std::size_t n = 0; n < length; ++n) {
        phase += f0_hz / sample_rate;
        if (phase >= 1.0) {
            phase -= std::floor(phase);
            out.samples[n] = 1.0;
        }
    }
    return out;
}

double alias_free_check(const Waveform& x, const F0Contour& f0) {
    if (f0.values.empty()) throw std::invalid_argument("alias_free_check: empty contour");
    const double f = f0.values.front();
    if (f <= 0.0) throw std::invalid_argument("alias_free_check: unvoiced contour");
    for (double v : f0.values)
        if (v != f) throw std::invalid_argument("alias_free_check: contour not constant");
    return alias_energy(x, f, 4);
}

}  // namespace wavehax
