#include "wavehax/generator.hpp"

#include <cmath>
#include <random>
#include <stdexcept>

namespace wavehax {

namespace {

ad::Tensor init_uniform(const std::vector<int>& shape, int fan_in, std::mt19937_64& rng) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
    std::uniform_real_distribution<double> dist(-bound, bound);
    ad::Tensor t = ad::Tensor::zeros(shape, true);
    for (auto& v : t.values()) v = dist(rng);
    return t;
}

ad::Tensor init_const(const std::vector<int>& shape, double v) {
    ad::Tensor t = ad::Tensor::zeros(shape, true);
    for (auto& x : t.values()) x = v;
    return t;
}

}  // namespace

Generator::Generator(const GeneratorConfig& cfg, std::uint64_t seed) : cfg_(cfg) {
    std::mt19937_64 rng(seed);
    const int F = cfg.freq_bins();
    const int C = cfg.channels, H = cfg.hidden;
    const int Kf = cfg.conv1d_kernel, Kd = cfg.depthwise_kernel;

    auto add = [this](const std::string& name, ad::Tensor t) {
        params_.emplace_back(name, std::move(t));
    };

    // prior branch: frequency-axis conv, 2 -> 4 channels
    add("prior_conv.w", init_uniform({4, 2, Kf, 1}, 2 * Kf, rng));
    add("prior_conv.b", init_const({4}, 0.0));
    // mel branch: time conv, mel_bands -> F channels, reinterpreted as a 2D map
    add("mel_conv.w", init_uniform({F, cfg.mel_bands, Kf}, cfg.mel_bands * Kf, rng));
    add("mel_conv.b", init_const({F}, 0.0));
    // fused 5-channel map -> C, then layer norm
    add("in_proj.w", init_uniform({C, 5, 1, 1}, 5, rng));
    add("in_proj.b", init_const({C}, 0.0));
    add("in_norm.g", init_const({C}, 1.0));
    add("in_norm.b", init_const({C}, 0.0));
    for (int i = 0; i < cfg.n_blocks; ++i) {
        const std::string p = "block" + std::to_string(i) + ".";
        add(p + "pw_in.w", init_uniform({H, C, 1, 1}, C, rng));
        add(p + "pw_in.b", init_const({H}, 0.0));
        add(p + "dw.w", init_uniform({H, 1, Kd, Kd}, Kd * Kd, rng));
        add(p + "dw.b", init_const({H}, 0.0));
        add(p + "norm.g", init_const({H}, 1.0));
        add(p + "norm.b", init_const({H}, 0.0));
        add(p + "pw_out.w", init_uniform({C, H, 1, 1}, H, rng));
        add(p + "pw_out.b", init_const({C}, 0.0));
    }
    add("out_norm.g", init_const({C}, 1.0));
    add("out_norm.b", init_const({C}, 0.0));
    add("out_proj.w", init_uniform({2, C, 1, 1}, C, rng));
    add("out_proj.b", init_const({2}, 0.0));
}

std::vector<ad::Tensor> Generator::parameters() const {
    std::vector<ad::Tensor> out;
    out.reserve(params_.size());
    for (const auto& [name, t] : params_) out.push_back(t);
    return out;
}

std::map<std::string, ad::Tensor> Generator::named_parameters() const {
    std::map<std::string, ad::Tensor> out;
    for (const auto& [name, t] : params_) out.emplace(name, t);
    return out;
}

void Generator::load_state(const std::map<std::string, ad::Tensor>& state) {
    for (auto& [name, t] : params_) {
        const auto it = state.find(name);
        if (it == state.end())
            throw std::invalid_argument("load_state: missing parameter " + name);
        if (it->second.shape() != t.shape())
            throw std::invalid_argument("load_state: shape mismatch for " + name);
        t.values() = it->second.values();
    }
}

void Generator::set_requires_grad(bool flag) {
    for (auto& [name, t] : params_) t.impl()->requires_grad = flag;
}

ad::Tensor Generator::param(const std::string& name) const {
    for (const auto& [n, t] : params_)
        if (n == name) return t;
    throw std::logic_error("unknown parameter " + name);
}

const dsp::StftPlan& Generator::plan_for(int length) {
    auto it = plans_.find(length);
    if (it == plans_.end())
        it = plans_.emplace(length, dsp::make_stft_plan(cfg_.fft_size, cfg_.hop, length)).first;
    return it->second;
}

ad::Tensor Generator::encode_prior(const ad::Tensor& prior) {
    if (prior.shape().size() != 2 || prior.shape()[1] % cfg_.hop != 0)
        throw std::invalid_argument("encode_prior: length must be a multiple of hop");
    const int B = prior.shape()[0];
    const int N = prior.shape()[1] / cfg_.hop;
    const int F = cfg_.freq_bins();
    const auto& plan = plan_for(prior.shape()[1]);
    auto [re, im] = dsp::stft_forward(plan, prior);  // [B, N, F]
    ad::Tensor re2 = ad::reshape(ad::transpose_last2(re), {B, 1, F, N});
    ad::Tensor im2 = ad::reshape(ad::transpose_last2(im), {B, 1, F, N});
    ad::Tensor x = ad::concat({re2, im2}, 1);  // [B, 2, F, N]
    return ad::conv2d(x, param("prior_conv.w"), param("prior_conv.b"));
}

ad::Tensor Generator::encode_mel(const ad::Tensor& mel) {
    if (mel.shape().size() != 3 || mel.shape()[1] != cfg_.mel_bands)
        throw std::invalid_argument("encode_mel: expect [B, mel_bands, N]");
    const int B = mel.shape()[0], N = mel.shape()[2];
    ad::Tensor x = ad::conv1d(mel, param("mel_conv.w"), param("mel_conv.b"));
    return ad::reshape(x, {B, 1, cfg_.freq_bins(), N});
}

ad::Tensor Generator::forward(const ad::Tensor& prior, const ad::Tensor& mel) {
    const int B = prior.shape()[0];
    const int N = prior.shape()[1] / cfg_.hop;
    if (mel.shape().size() != 3 || mel.shape()[2] != N)
        throw std::invalid_argument("forward: prior/mel frame count mismatch");
    time_dims_.clear();
    auto track = [this](const ad::Tensor& t) {
        time_dims_.push_back(t.shape().back());
        return t;
    };

    ad::Tensor x = track(ad::concat({encode_prior(prior), encode_mel(mel)}, 1));
    x = track(ad::conv2d(x, param("in_proj.w"), param("in_proj.b")));
    x = track(ad::layer_norm(x, param("in_norm.g"), param("in_norm.b")));
    for (int i = 0; i < cfg_.n_blocks; ++i) {
        const std::string p = "block" + std::to_string(i) + ".";
        ad::Tensor h = track(ad::conv2d(x, param(p + "pw_in.w"), param(p + "pw_in.b")));
        h = track(ad::conv2d(h, param(p + "dw.w"), param(p + "dw.b"), cfg_.hidden));
        h = track(ad::layer_norm(h, param(p + "norm.g"), param(p + "norm.b")));
        h = track(ad::gelu(h));
        h = track(ad::conv2d(h, param(p + "pw_out.w"), param(p + "pw_out.b")));
        x = track(ad::add(x, h));
    }
    x = track(ad::layer_norm(x, param("out_norm.g"), param("out_norm.b")));
    x = track(ad::conv2d(x, param("out_proj.w"), param("out_proj.b")));  // [B,2,F,N]

    const int F = cfg_.freq_bins();
    ad::Tensor re = ad::transpose_last2(ad::reshape(ad::slice(x, 1, 0, 1), {B, F, N}));
    ad::Tensor im = ad::transpose_last2(ad::reshape(ad::slice(x, 1, 1, 1), {B, F, N}));
    return dsp::istft_forward(plan_for(N * cfg_.hop), re, im);
}

Waveform Generator::synthesize(const Waveform& prior,
                               const std::vector<std::vector<double>>& mel) {
    const int N = static_cast<int>(mel.size());
    if (N == 0 || prior.samples.size() != static_cast<std::size_t>(N) * cfg_.hop)
        throw std::invalid_argument("synthesize: prior length must be hop * mel frames");
    std::vector<double> mel_flat(static_cast<std::size_t>(cfg_.mel_bands) * N);
    for (int n = 0; n < N; ++n) {
        if (static_cast<int>(mel[n].size()) != cfg_.mel_bands)
            throw std::invalid_argument("synthesize: bad mel band count");
        for (int b = 0; b < cfg_.mel_bands; ++b)
            mel_flat[static_cast<std::size_t>(b) * N + n] = mel[n][b];
    }
    ad::Tensor p = ad::Tensor::from({1, static_cast<int>(prior.samples.size())}, prior.samples);
    ad::Tensor m = ad::Tensor::from({1, cfg_.mel_bands, N}, std::move(mel_flat));
    ad::Tensor y = forward(p, m);
    return Waveform(y.values(), cfg_.sample_rate);
}

int Generator::receptive_field_frames() const {
    // mel time conv reach plus the depthwise reach of every block
    return cfg_.conv1d_kernel / 2 + cfg_.n_blocks * (cfg_.depthwise_kernel / 2);
}

long long count_params(const GeneratorConfig& cfg) {
    const long long F = cfg.freq_bins();
    const long long C = cfg.channels, H = cfg.hidden;
    const long long Kf = cfg.conv1d_kernel, Kd = cfg.depthwise_kernel;
    long long n = 0;
    n += 4 * 2 * Kf * 1 + 4;              // prior conv
    n += F * cfg.mel_bands * Kf + F;      // mel conv
    n += C * 5 + C + 2 * C;               // in proj + norm
    n += cfg.n_blocks * (H * C + H +      // pw in
                         H * Kd * Kd + H +  // depthwise
                         2 * H +            // norm
                         C * H + C);        // pw out
    n += 2 * C;                           // out norm
    n += 2 * C + 2;                       // out proj
    return n;
}

long long count_macs_per_second(const GeneratorConfig& cfg) {
    const long long F = cfg.freq_bins();
    const long long C = cfg.channels, H = cfg.hidden;
    const long long Kf = cfg.conv1d_kernel, Kd = cfg.depthwise_kernel;
    long long per_frame = 0;
    per_frame += 4 * 2 * Kf * F;          // prior conv
    per_frame += F * cfg.mel_bands * Kf;  // mel conv
    per_frame += C * 5 * F;               // in proj
    per_frame += cfg.n_blocks * (H * C * F + H * Kd * Kd * F + C * H * F);
    per_frame += 2 * C * F;               // out proj
    const long long frames_per_second = cfg.sample_rate / cfg.hop;
    return per_frame * frames_per_second;
}

}  // namespace wavehax
