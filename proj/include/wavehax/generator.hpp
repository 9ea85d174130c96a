#ifndef WAVEHAX_GENERATOR_HPP
#define WAVEHAX_GENERATOR_HPP

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "wavehax/dsp_ops.hpp"
#include "wavehax/signal.hpp"
#include "wavehax/tensor.hpp"

namespace wavehax {

struct GeneratorConfig {
    int fft_size = 480;
    int hop = 240;
    int channels = 32;       // C
    int hidden = 64;         // C'
    int n_blocks = 8;
    int conv1d_kernel = 7;   // prior frequency-axis conv and mel time conv
    int depthwise_kernel = 7;
    int mel_bands = 100;
    int sample_rate = 24000;

    int freq_bins() const { return fft_size / 2 + 1; }
};

/// Complex-spectrogram generator: harmonic prior STFT and mel features fused
/// into a 2D map, refined by ConvNeXt-style blocks, decoded with iSTFT.
class Generator {
  public:
    explicit Generator(const GeneratorConfig& cfg, std::uint64_t seed = 0);

    const GeneratorConfig& config() const { return cfg_; }

    // Parameters in stable declaration order (shared nodes, not copies).
    std::vector<ad::Tensor> parameters() const;
    std::map<std::string, ad::Tensor> named_parameters() const;
    void load_state(const std::map<std::string, ad::Tensor>& state);
    void set_requires_grad(bool flag);

    // prior [B, T] with T = hop*N -> [B, 4, F, N]
    ad::Tensor encode_prior(const ad::Tensor& prior);
    // mel [B, mel_bands, N] -> [B, 1, F, N]
    ad::Tensor encode_mel(const ad::Tensor& mel);
    // -> waveform tensor [B, hop*N]
    ad::Tensor forward(const ad::Tensor& prior, const ad::Tensor& mel);

    // Non-differentiable convenience wrapper; mel is [N][mel_bands].
    Waveform synthesize(const Waveform& prior,
                        const std::vector<std::vector<double>>& mel);

    // Half-width, in frames, of the output region one mel frame can influence.
    int receptive_field_frames() const;

    // Frame counts of every intermediate map from the most recent forward();
    // all equal N iff the network performs no temporal up/downsampling.
    const std::vector<int>& last_time_dims() const { return time_dims_; }

  private:
    ad::Tensor param(const std::string& name) const;
    const dsp::StftPlan& plan_for(int length);

    GeneratorConfig cfg_;
    std::vector<std::pair<std::string, ad::Tensor>> params_;
    std::map<int, dsp::StftPlan> plans_;
    std::vector<int> time_dims_;
};

long long count_params(const GeneratorConfig& cfg);
long long count_macs_per_second(const GeneratorConfig& cfg);

}  // namespace wavehax

#endif
