#include "wavehax/metrics.hpp"

#include <cmath>
#include <map>
#include <stdexcept>

namespace wavehax {

namespace {

// crop to a hop multiple so the STFT framing contract holds
Waveform crop_to_hop(const Waveform& x, int hop) {
    const std::size_t len = (x.samples.size() / static_cast<std::size_t>(hop)) *
                            static_cast<std::size_t>(hop);
    if (len == 0) throw std::invalid_argument("metrics: signal shorter than one hop");
    return Waveform(std::vector<double>(x.samples.begin(), x.samples.begin() + static_cast<std::ptrdiff_t>(len)),
                    x.sample_rate);
}

double log_amp_l1(const ComplexSpectrogram& X, const ComplexSpectrogram& Y, double floor) {
    double acc = 0.0;
    std::size_t count = 0;
    for (std::size_t m = 0; m < X.frames(); ++m)
        for (std::size_t k = 0; k < X.bins(); ++k) {
            acc += std::abs(std::log(std::abs(X.data[m][k]) + floor) -
                            std::log(std::abs(Y.data[m][k]) + floor));
            ++count;
        }
    return acc / static_cast<double>(count);
}

}  // namespace

double mr_stft_distance(const Waveform& x, const Waveform& y, const MRStftConfig& cfg) {
    if (x.samples.size() != y.samples.size())
        throw std::invalid_argument("mr_stft_distance: length mismatch");
    if (x.sample_rate != y.sample_rate)
        throw std::invalid_argument("mr_stft_distance: sample rate mismatch");
    if (cfg.fft_sizes.empty())
        throw std::invalid_argument("mr_stft_distance: no resolutions");
    double total = 0.0;
    for (int fft : cfg.fft_sizes) {
        const int hop = fft / 4;
        const Waveform xc = crop_to_hop(x, hop);
        const Waveform yc = crop_to_hop(y, hop);
        total += log_amp_l1(stft(xc, fft, hop), stft(yc, fft, hop), cfg.log_floor);
    }
    return total / static_cast<double>(cfg.fft_sizes.size());
}

std::vector<F0BinnedReport> f0_binned_distance(
    const std::vector<std::tuple<Waveform, Waveform, F0Contour>>& pairs, double bin_hz) {
    if (bin_hz <= 0.0) throw std::invalid_argument("f0_binned_distance: bin width must be positive");
    std::map<int, std::pair<double, std::size_t>> bins;  // bin index -> (sum, frames)
    constexpr int kFft = 1024;
    constexpr double kFloor = 1e-5;
    for (const auto& [x, y, f0] : pairs) {
        if (x.samples.size() != y.samples.size() || x.sample_rate != y.sample_rate)
            throw std::invalid_argument("f0_binned_distance: pair mismatch");
        const int hop = x.sample_rate / 100;  // 10 ms
        const Waveform xc = crop_to_hop(x, hop);
        const Waveform yc = crop_to_hop(y, hop);
        const ComplexSpectrogram X = stft(xc, kFft, hop);
        const ComplexSpectrogram Y = stft(yc, kFft, hop);
        // resample the contour onto the 10 ms frame grid
        for (std::size_t m = 0; m < X.frames(); ++m) {
            const std::size_t center = m * static_cast<std::size_t>(hop);
            const std::size_t fidx = center / static_cast<std::size_t>(f0.hop);
            if (fidx >= f0.values.size()) break;
            const double f = f0.values[fidx];
            if (f <= 0.0) continue;  // unvoiced
            double acc = 0.0;
            for (std::size_t k = 0; k < X.bins(); ++k)
                acc += std::abs(std::log(std::abs(X.data[m][k]) + kFloor) -
                                std::log(std::abs(Y.data[m][k]) + kFloor));
            auto& [sum, n] = bins[static_cast<int>(std::floor(f / bin_hz))];
            sum += acc / static_cast<double>(X.bins());
            ++n;
        }
    }
    std::vector<F0BinnedReport> report;
    for (const auto& [bin, agg] : bins)
        report.push_back({bin * bin_hz, (bin + 1) * bin_hz,
                          agg.first / static_cast<double>(agg.second), agg.second});
    return report;
}

Waveform normalize_rms(const Waveform& x, double target_rms) {
    double sq = 0.0;
    for (double v : x.samples) sq += v * v;
    const double rms = std::sqrt(sq / static_cast<double>(x.samples.size()));
    Waveform y = x;
    if (rms > 0.0) {
        const double s = target_rms / rms;
        for (auto& v : y.samples) v *= s;
    }
    return y;
}

}  // namespace wavehax
