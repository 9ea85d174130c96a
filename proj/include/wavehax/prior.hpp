#ifndef WAVEHAX_PRIOR_HPP
#define WAVEHAX_PRIOR_HPP

#include <cstdint>
#include <vector>

#include "wavehax/signal.hpp"

namespace wavehax {

/// Frame-rate fundamental frequency sequence; 0 marks unvoiced frames.
struct F0Contour {
    std::vector<double> values;  // Hz per frame
    int hop = 240;               // samples per frame
    int sample_rate = 24000;
};

enum class PriorKind { Harmonic, Sine, Noise };

struct PriorConfig {
    double lc = 0.1;           // per-frame RMS target is lc^2
    double noise_sigma = 0.01;
    double fmax = 0.0;         // 0 = Nyquist
    PriorKind kind = PriorKind::Harmonic;
    std::uint64_t seed = 0;
};

// Zero-order hold expansion of a frame-rate contour to sample rate.
std::vector<double> upsample_f0(const F0Contour& f0);

// K = floor(fmax / f); harmonics exactly at fmax are kept only below Nyquist.
int harmonic_count(double f_hz, double fmax_hz);

// Band-limited prior excitation per the configured kind. Deterministic under
// (seed, inputs).
Waveform generate_prior(const F0Contour& f0, const PriorConfig& cfg);

// Naive pointwise-sampled pulse train at constant f0, the aliasing-prone
// reference signal the band-limited prior is measured against.
Waveform naive_pulse_train(double f0_hz, int sample_rate, std::size_t length);

// Non-harmonic-to-harmonic energy ratio (dB) on a steady voiced segment.
// Requires a constant voiced contour; intended for noise-free priors.
double alias_free_check(const Waveform& x, const F0Contour& f0);

}  // namespace wavehax

#endif
