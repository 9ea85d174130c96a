#include "wavehax/dsp_ops.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace wavehax::dsp {

namespace {

constexpr double kPi = std::numbers::pi;

int reflect_index(long long i, long long n) {
    if (n == 1) return 0;
    const long long period = 2 * (n - 1);
    long long r = i % period;
    if (r < 0) r += period;
    if (r >= n) r = period - r;
    return static_cast<int>(r);
}

}  // namespace

StftPlan make_stft_plan(int fft_size, int hop, int length) {
    if (hop <= 0 || hop > fft_size)
        throw std::invalid_argument("make_stft_plan: invalid hop");
    if (length <= 0 || length % hop != 0)
        throw std::invalid_argument("make_stft_plan: length must be a positive multiple of hop");
    StftPlan plan;
    plan.fft_size = fft_size;
    plan.hop = hop;
    plan.length = length;
    plan.frames = length / hop;
    plan.bins = fft_size / 2 + 1;
    plan.window = hanning_periodic(fft_size);

    const int pad = fft_size / 2;
    plan.gather_idx.reserve(static_cast<std::size_t>(plan.frames) * fft_size);
    for (int m = 0; m < plan.frames; ++m)
        for (int i = 0; i < fft_size; ++i)
            plan.gather_idx.push_back(
                reflect_index(static_cast<long long>(m) * hop + i - pad, length));

    const int L = fft_size, K = plan.bins;
    std::vector<double> fr(static_cast<std::size_t>(L) * K), fi(fr.size());
    std::vector<double> ir(static_cast<std::size_t>(K) * L), ii(ir.size());
    for (int n = 0; n < L; ++n)
        for (int k = 0; k < K; ++k) {
            const double ang = 2.0 * kPi * n * k / L;
            fr[static_cast<std::size_t>(n) * K + k] = std::cos(ang);
            fi[static_cast<std::size_t>(n) * K + k] = -std::sin(ang);
            // Hermitian inverse: interior bins count twice
            const double c = (k == 0 || 2 * k == L) ? 1.0 : 2.0;
            ir[static_cast<std::size_t>(k) * L + n] = c * std::cos(ang) / L;
            ii[static_cast<std::size_t>(k) * L + n] = -c * std::sin(ang) / L;
        }
    plan.fwd_re = ad::Tensor::from({L, K}, std::move(fr));
    plan.fwd_im = ad::Tensor::from({L, K}, std::move(fi));
    plan.inv_re = ad::Tensor::from({K, L}, std::move(ir));
    plan.inv_im = ad::Tensor::from({K, L}, std::move(ii));

    std::vector<double> env(static_cast<std::size_t>(length) + fft_size, 0.0);
    for (int m = 0; m < plan.frames; ++m)
        for (int i = 0; i < fft_size; ++i)
            env[static_cast<std::size_t>(m) * hop + i] += plan.window[i] * plan.window[i];
    plan.env_inv.resize(length);
    for (int i = 0; i < length; ++i) {
        const double e = env[static_cast<std::size_t>(i) + pad];
        if (e <= 1e-12) throw std::runtime_error("make_stft_plan: zero window envelope");
        plan.env_inv[i] = 1.0 / e;
    }
    return plan;
}

std::pair<ad::Tensor, ad::Tensor> stft_forward(const StftPlan& plan, const ad::Tensor& x) {
    if (x.shape().size() != 2 || x.shape()[1] != plan.length)
        throw std::invalid_argument("stft_forward: expect [B, length]");
    const int B = x.shape()[0];
    ad::Tensor frames = ad::reshape(ad::gather_last(x, plan.gather_idx),
                                    {B, plan.frames, plan.fft_size});
    frames = ad::mul_vec(frames, plan.window);
    return {ad::matmul(frames, plan.fwd_re), ad::matmul(frames, plan.fwd_im)};
}

ad::Tensor istft_forward(const StftPlan& plan, const ad::Tensor& re, const ad::Tensor& im) {
    const std::vector<int> want{re.shape()[0], plan.frames, plan.bins};
    if (re.shape() != want || im.shape() != want)
        throw std::invalid_argument("istft_forward: expect [B, frames, bins]");
    ad::Tensor t = ad::add(ad::matmul(re, plan.inv_re), ad::matmul(im, plan.inv_im));
    t = ad::mul_vec(t, plan.window);
    const int pad = plan.fft_size / 2;
    ad::Tensor buf = ad::overlap_add(t, plan.hop, plan.length + plan.fft_size);
    ad::Tensor y = ad::slice(buf, 1, pad, plan.length);
    return ad::mul_vec(y, plan.env_inv);
}

MelPlan make_mel_plan(const MelConfig& cfg, int sample_rate, int length) {
    MelPlan plan;
    plan.stft = make_stft_plan(cfg.fft_size, cfg.hop, length);
    plan.log_floor = cfg.log_floor;
    plan.bands = cfg.bands;
    const auto fb = mel_filterbank(cfg.bands, cfg.fft_size, sample_rate, cfg.fmin, cfg.fmax);
    const int K = plan.stft.bins;
    std::vector<double> w(static_cast<std::size_t>(K) * cfg.bands);
    for (int b = 0; b < cfg.bands; ++b)
        for (int k = 0; k < K; ++k)
            w[static_cast<std::size_t>(k) * cfg.bands + b] = fb[b][k];
    plan.filterbank = ad::Tensor::from({K, cfg.bands}, std::move(w));
    return plan;
}

ad::Tensor log_mel_forward(const MelPlan& plan, const ad::Tensor& x) {
    auto [re, im] = stft_forward(plan.stft, x);
    // small bias keeps sqrt differentiable at silent bins
    ad::Tensor mag = ad::sqrt(
        ad::add_scalar(ad::add(ad::square(re), ad::square(im)), 1e-24));
    ad::Tensor mel = ad::matmul(mag, plan.filterbank);
    return ad::log(ad::add_scalar(mel, plan.log_floor));
}

}  // namespace wavehax::dsp
