#ifndef WAVEHAX_GAN_HPP
#define WAVEHAX_GAN_HPP

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "wavehax/dsp_ops.hpp"
#include "wavehax/generator.hpp"
#include "wavehax/prior.hpp"
#include "wavehax/signal.hpp"
#include "wavehax/tensor.hpp"

namespace wavehax {

struct LossWeights {
    double mel = 45.0;
    double adv = 1.0;
    double fm = 2.0;
};

/// Per-subdiscriminator forward result: elementwise logits plus the
/// intermediate feature maps used by the feature-matching loss.
struct DiscOutput {
    ad::Tensor logits;
    std::vector<ad::Tensor> features;
};

/// Reduced-scale bank: two spectrogram-resolution discriminators (log
/// magnitude STFT at fft 512 and 1024, hop fft/4) and two period
/// discriminators (periods 2 and 3).
class DiscriminatorBank {
  public:
    DiscriminatorBank(int sample_rate, std::uint64_t seed = 0);

    // x [B, T]; T must divide by every STFT hop and period.
    std::vector<DiscOutput> forward(const ad::Tensor& x);

    std::vector<ad::Tensor> parameters() const;
    std::map<std::string, ad::Tensor> named_parameters() const;
    void set_requires_grad(bool flag);

    static constexpr int kResolutions[2] = {512, 1024};
    static constexpr int kPeriods[2] = {2, 3};

  private:
    ad::Tensor param(const std::string& name) const;
    const dsp::StftPlan& plan_for(int fft, int length);

    int sample_rate_;
    std::vector<std::pair<std::string, ad::Tensor>> params_;
    std::map<std::pair<int, int>, dsp::StftPlan> plans_;
};

// L1 distance between log mel spectrograms; differentiable through x_hat.
ad::Tensor mel_loss(const dsp::MelPlan& plan, const ad::Tensor& x, const ad::Tensor& x_hat);
ad::Tensor mel_loss(const Waveform& x, const Waveform& x_hat);

// Hinge GAN objectives summed over subdiscriminators.
ad::Tensor disc_loss(const std::vector<DiscOutput>& real, const std::vector<DiscOutput>& fake);
ad::Tensor adv_loss(const std::vector<DiscOutput>& fake);

// Mean-reduced per-layer L1 between real and fake feature maps.
ad::Tensor feature_matching_loss(const std::vector<DiscOutput>& real,
                                 const std::vector<DiscOutput>& fake);

struct TrainItem {
    Waveform audio;
    std::vector<double> f0;  // frame-rate contour at the generator hop
};

struct TrainConfig {
    GeneratorConfig gen;
    int steps = 500;
    std::uint64_t seed = 0;
    int segment_frames = 16;  // training crop; samples = hop * segment_frames
    int mel_fft = 2048;       // analysis size of the mel reconstruction loss
    bool mel_only = false;    // warmup mode: adversarial and fm terms off
    double lr = 2e-4;
    LossWeights weights;
    PriorConfig prior;
    std::map<std::string, ad::Tensor> init_state;  // empty = fresh init
};

struct StepLog {
    int step = 0;
    double loss_mel = 0.0;
    double loss_adv = 0.0;
    double loss_fm = 0.0;
    double loss_d = 0.0;
    double loss_g = 0.0;  // weighted total actually optimized
};

struct TrainResult {
    std::map<std::string, ad::Tensor> checkpoint;  // generator parameters
    std::vector<StepLog> log;
};

// Deterministic D-then-G loop over random fixed-length crops.
TrainResult train(const std::vector<TrainItem>& dataset, const TrainConfig& cfg);

void write_train_log_csv(const std::string& path, const std::vector<StepLog>& log);

}  // namespace wavehax

#endif
