#ifndef WAVEHAX_DSP_OPS_HPP
#define WAVEHAX_DSP_OPS_HPP

#include <utility>
#include <vector>

#include "wavehax/signal.hpp"
#include "wavehax/tensor.hpp"

namespace wavehax::dsp {

/// Precomputed constants for a differentiable STFT/iSTFT at a fixed signal
/// length. Framing matches signal-core stft(): centered frames, reflect
/// padding of fft_size/2 each side, frames = length / hop.
struct StftPlan {
    int fft_size = 0;
    int hop = 0;
    int length = 0;
    int frames = 0;
    int bins = 0;                  // fft_size/2 + 1
    std::vector<int> gather_idx;   // frames*fft_size reflect indices into [0,length)
    std::vector<double> window;    // periodic Hanning, fft_size
    ad::Tensor fwd_re, fwd_im;     // [fft, bins] forward DFT (real input)
    ad::Tensor inv_re, inv_im;     // [bins, fft] Hermitian inverse DFT
    std::vector<double> env_inv;   // length; reciprocal squared-window OLA envelope
};

StftPlan make_stft_plan(int fft_size, int hop, int length);

// x [B, length] -> (re, im) each [B, frames, bins].
std::pair<ad::Tensor, ad::Tensor> stft_forward(const StftPlan& plan, const ad::Tensor& x);

// Least-squares OLA inverse; (re, im) [B, frames, bins] -> [B, length].
ad::Tensor istft_forward(const StftPlan& plan, const ad::Tensor& re, const ad::Tensor& im);

/// Differentiable log mel amplitude extraction at a fixed signal length.
struct MelPlan {
    StftPlan stft;
    ad::Tensor filterbank;  // [bins, bands]
    double log_floor = 1e-5;
    int bands = 0;
};

MelPlan make_mel_plan(const MelConfig& cfg, int sample_rate, int length);

// x [B, length] -> [B, frames, bands], log(filterbank . |STFT| + floor).
ad::Tensor log_mel_forward(const MelPlan& plan, const ad::Tensor& x);

}  // namespace wavehax::dsp

#endif
