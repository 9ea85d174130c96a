#ifndef WAVEHAX_METRICS_HPP
#define WAVEHAX_METRICS_HPP

#include <tuple>
#include <vector>

#include "wavehax/prior.hpp"
#include "wavehax/signal.hpp"

namespace wavehax {

struct MRStftConfig {
    std::vector<int> fft_sizes{512, 1024, 2048};  // hop = fft/4, window = fft
    double log_floor = 1e-5;
};

// Mean over resolutions of mean |delta log amplitude|; pseudometric.
double mr_stft_distance(const Waveform& x, const Waveform& y,
                        const MRStftConfig& cfg = {});

struct F0BinnedReport {
    double bin_lo = 0.0;
    double bin_hi = 0.0;
    double mean_distance = 0.0;
    std::size_t frames = 0;
};

// Frame-wise log-amplitude L1 at a 10 ms hop, aggregated into bin_hz-wide
// F0 bins over voiced frames.
std::vector<F0BinnedReport> f0_binned_distance(
    const std::vector<std::tuple<Waveform, Waveform, F0Contour>>& pairs,
    double bin_hz = 30.0);

// Scale to a fixed RMS (0 input stays 0); stand-in for loudness normalization.
Waveform normalize_rms(const Waveform& x, double target_rms = 0.25);

}  // namespace wavehax

#endif
