#include "wavehax/gan.hpp"

#include <cmath>
#include <random>
#include <sstream>
#include <stdexcept>

#include "wavehax/io.hpp"

namespace wavehax {

namespace {

constexpr int kDiscChannels = 4;

ad::Tensor init_uniform(const std::vector<int>& shape, int fan_in, std::mt19937_64& rng) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
    std::uniform_real_distribution<double> dist(-bound, bound);
    ad::Tensor t = ad::Tensor::zeros(shape, true);
    for (auto& v : t.values()) v = dist(rng);
    return t;
}

ad::Tensor log_magnitude(const dsp::StftPlan& plan, const ad::Tensor& x) {
    auto [re, im] = dsp::stft_forward(plan, x);
    ad::Tensor mag = ad::sqrt(ad::add_scalar(ad::add(ad::square(re), ad::square(im)), 1e-24));
    return ad::log(ad::add_scalar(mag, 1e-5));
}

// mean(max(0, 1 - l)) and mean(max(0, 1 + l))
ad::Tensor hinge_below(const ad::Tensor& logits) {
    return ad::mean(ad::relu(ad::add_scalar(ad::neg(logits), 1.0)));
}
ad::Tensor hinge_above(const ad::Tensor& logits) {
    return ad::mean(ad::relu(ad::add_scalar(logits, 1.0)));
}

}  // namespace

DiscriminatorBank::DiscriminatorBank(int sample_rate, std::uint64_t seed)
    : sample_rate_(sample_rate) {
    std::mt19937_64 rng(seed);
    auto add = [this](const std::string& name, ad::Tensor t) {
        params_.emplace_back(name, std::move(t));
    };
    auto zeros = [](int n) { return ad::Tensor::zeros({n}, true); };
    for (int fft : kResolutions) {
        const std::string p = "r" + std::to_string(fft) + ".";
        add(p + "c0.w", init_uniform({kDiscChannels, 1, 3, 3}, 9, rng));
        add(p + "c0.b", zeros(kDiscChannels));
        add(p + "c1.w", init_uniform({kDiscChannels, kDiscChannels, 3, 3}, kDiscChannels * 9, rng));
        add(p + "c1.b", zeros(kDiscChannels));
        add(p + "c2.w", init_uniform({1, kDiscChannels, 3, 3}, kDiscChannels * 9, rng));
        add(p + "c2.b", zeros(1));
    }
    for (int period : kPeriods) {
        const std::string p = "p" + std::to_string(period) + ".";
        add(p + "c0.w", init_uniform({kDiscChannels, 1, 5, 1}, 5, rng));
        add(p + "c0.b", zeros(kDiscChannels));
        add(p + "c1.w", init_uniform({kDiscChannels, kDiscChannels, 5, 1}, kDiscChannels * 5, rng));
        add(p + "c1.b", zeros(kDiscChannels));
        add(p + "c2.w", init_uniform({1, kDiscChannels, 5, 1}, kDiscChannels * 5, rng));
        add(p + "c2.b", zeros(1));
    }
}

ad::Tensor DiscriminatorBank::param(const std::string& name) const {
    for (const auto& [n, t] : params_)
        if (n == name) return t;
    throw std::logic_error("unknown discriminator parameter " + name);
}

const dsp::StftPlan& DiscriminatorBank::plan_for(int fft, int length) {
    const auto key = std::make_pair(fft, length);
    auto it = plans_.find(key);
    if (it == plans_.end())
        it = plans_.emplace(key, dsp::make_stft_plan(fft, fft / 4, length)).first;
    return it->second;
}

std::vector<DiscOutput> DiscriminatorBank::forward(const ad::Tensor& x) {
    if (x.shape().size() != 2) throw std::invalid_argument("DiscriminatorBank: expect [B, T]");
    const int B = x.shape()[0], T = x.shape()[1];
    std::vector<DiscOutput> out;

    auto run_stack = [this](const std::string& p, const ad::Tensor& in) {
        DiscOutput o;
        ad::Tensor h = ad::leaky_relu(ad::conv2d(in, param(p + "c0.w"), param(p + "c0.b")));
        o.features.push_back(h);
        h = ad::leaky_relu(ad::conv2d(h, param(p + "c1.w"), param(p + "c1.b")));
        o.features.push_back(h);
        o.logits = ad::conv2d(h, param(p + "c2.w"), param(p + "c2.b"));
        return o;
    };

    for (int fft : kResolutions) {
        if (T % (fft / 4) != 0)
            throw std::invalid_argument("DiscriminatorBank: length not divisible by STFT hop");
        const auto& plan = plan_for(fft, T);
        ad::Tensor spec = log_magnitude(plan, x);  // [B, M, K]
        spec = ad::reshape(spec, {B, 1, plan.frames, plan.bins});
        out.push_back(run_stack("r" + std::to_string(fft) + ".", spec));
    }
    for (int period : kPeriods) {
        if (T % period != 0)
            throw std::invalid_argument("DiscriminatorBank: length not divisible by period");
        ad::Tensor grid = ad::reshape(x, {B, 1, T / period, period});
        out.push_back(run_stack("p" + std::to_string(period) + ".", grid));
    }
    return out;
}

std::vector<ad::Tensor> DiscriminatorBank::parameters() const {
    std::vector<ad::Tensor> out;
    for (const auto& [n, t] : params_) out.push_back(t);
    return out;
}

std::map<std::string, ad::Tensor> DiscriminatorBank::named_parameters() const {
    std::map<std::string, ad::Tensor> out;
    for (const auto& [n, t] : params_) out.emplace(n, t);
    return out;
}

void DiscriminatorBank::set_requires_grad(bool flag) {
    for (auto& [n, t] : params_) t.impl()->requires_grad = flag;
}

ad::Tensor mel_loss(const dsp::MelPlan& plan, const ad::Tensor& x, const ad::Tensor& x_hat) {
    if (x.shape() != x_hat.shape()) throw std::invalid_argument("mel_loss: shape mismatch");
    return ad::mean(ad::abs(ad::sub(dsp::log_mel_forward(plan, x),
                                    dsp::log_mel_forward(plan, x_hat))));
}

ad::Tensor mel_loss(const Waveform& x, const Waveform& x_hat) {
    if (x.samples.size() != x_hat.samples.size())
        throw std::invalid_argument("mel_loss: length mismatch");
    MelConfig mc;
    if (x.samples.size() < static_cast<std::size_t>(mc.hop) ||
        x.samples.size() % static_cast<std::size_t>(mc.hop) != 0)
        throw std::invalid_argument("mel_loss: length must be a positive multiple of the mel hop");
    const dsp::MelPlan plan =
        dsp::make_mel_plan(mc, x.sample_rate, static_cast<int>(x.samples.size()));
    const int T = static_cast<int>(x.samples.size());
    return mel_loss(plan, ad::Tensor::from({1, T}, x.samples),
                    ad::Tensor::from({1, T}, x_hat.samples));
}

ad::Tensor disc_loss(const std::vector<DiscOutput>& real, const std::vector<DiscOutput>& fake) {
    if (real.empty() || real.size() != fake.size())
        throw std::invalid_argument("disc_loss: empty or mismatched bank outputs");
    ad::Tensor total = ad::Tensor::scalar(0.0);
    for (std::size_t k = 0; k < real.size(); ++k)
        total = ad::add(total, ad::add(hinge_below(real[k].logits), hinge_above(fake[k].logits)));
    return total;
}

ad::Tensor adv_loss(const std::vector<DiscOutput>& fake) {
    if (fake.empty()) throw std::invalid_argument("adv_loss: empty bank output");
    ad::Tensor total = ad::Tensor::scalar(0.0);
    for (const auto& o : fake) total = ad::add(total, hinge_below(o.logits));
    return total;
}

ad::Tensor feature_matching_loss(const std::vector<DiscOutput>& real,
                                 const std::vector<DiscOutput>& fake) {
    if (real.empty() || real.size() != fake.size())
        throw std::invalid_argument("feature_matching_loss: mismatched bank outputs");
    ad::Tensor total = ad::Tensor::scalar(0.0);
    for (std::size_t k = 0; k < real.size(); ++k) {
        if (real[k].features.size() != fake[k].features.size())
            throw std::invalid_argument("feature_matching_loss: layer count mismatch");
        for (std::size_t l = 0; l < real[k].features.size(); ++l)
            total = ad::add(total,
                            ad::mean(ad::abs(ad::sub(real[k].features[l], fake[k].features[l]))));
    }
    return total;
}

TrainResult train(const std::vector<TrainItem>& dataset, const TrainConfig& cfg) {
    if (dataset.empty()) throw std::invalid_argument("train: empty dataset");
    const int hop = cfg.gen.hop;
    const int seg_frames = cfg.segment_frames;
    const int seg_len = seg_frames * hop;
    for (const auto& item : dataset) {
        if (item.audio.sample_rate != cfg.gen.sample_rate)
            throw std::invalid_argument("train: sample rate mismatch");
        if (item.audio.samples.size() % static_cast<std::size_t>(hop) != 0 ||
            item.audio.samples.size() < static_cast<std::size_t>(seg_len))
            throw std::invalid_argument("train: utterance shorter than a segment or not hop-aligned");
        if (item.f0.size() != item.audio.samples.size() / static_cast<std::size_t>(hop))
            throw std::invalid_argument("train: f0 frame count mismatch");
    }

    Generator gen(cfg.gen, cfg.seed);
    if (!cfg.init_state.empty()) gen.load_state(cfg.init_state);
    DiscriminatorBank bank(cfg.gen.sample_rate, cfg.seed + 1);

    MelConfig mel_cfg;
    mel_cfg.bands = cfg.gen.mel_bands;
    mel_cfg.fft_size = cfg.mel_fft;
    mel_cfg.hop = hop;
    const dsp::MelPlan mel_plan = dsp::make_mel_plan(mel_cfg, cfg.gen.sample_rate, seg_len);

    ad::AdamWConfig opt_cfg;
    opt_cfg.lr = cfg.lr;
    ad::AdamW g_opt(gen.parameters(), opt_cfg);
    ad::AdamW d_opt(bank.parameters(), opt_cfg);

    std::mt19937_64 rng(cfg.seed);
    TrainResult result;

    for (int s = 0; s < cfg.steps; ++s) {
        const auto& item = dataset[rng() % dataset.size()];
        const int frames_total = static_cast<int>(item.f0.size());
        const int off = static_cast<int>(rng() % static_cast<std::uint64_t>(frames_total - seg_frames + 1));

        Waveform seg(std::vector<double>(item.audio.samples.begin() + static_cast<std::ptrdiff_t>(off) * hop,
                                         item.audio.samples.begin() + static_cast<std::ptrdiff_t>(off + seg_frames) * hop),
                     cfg.gen.sample_rate);
        F0Contour contour{std::vector<double>(item.f0.begin() + off, item.f0.begin() + off + seg_frames),
                          hop, cfg.gen.sample_rate};
        PriorConfig pc = cfg.prior;
        pc.seed = rng();
        const Waveform prior = generate_prior(contour, pc);

        // conditioning mel and the mel-loss reference share one extraction
        const MelSpectrogram mel = mel_spectrogram(seg, mel_cfg);
        std::vector<double> cond(static_cast<std::size_t>(mel_cfg.bands) * seg_frames);
        std::vector<double> ref(static_cast<std::size_t>(seg_frames) * mel_cfg.bands);
        for (int n = 0; n < seg_frames; ++n)
            for (int b = 0; b < mel_cfg.bands; ++b) {
                cond[static_cast<std::size_t>(b) * seg_frames + n] = mel.data[n][b];
                ref[static_cast<std::size_t>(n) * mel_cfg.bands + b] = mel.data[n][b];
            }
        ad::Tensor mel_cond = ad::Tensor::from({1, mel_cfg.bands, seg_frames}, std::move(cond));
        ad::Tensor mel_ref = ad::Tensor::from({1, seg_frames, mel_cfg.bands}, std::move(ref));
        ad::Tensor x_real = ad::Tensor::from({1, seg_len}, seg.samples);

        const double lr = ad::cosine_lr(cfg.lr, s, cfg.steps);
        StepLog log;
        log.step = s + 1;

        ad::Tensor x_hat = gen.forward(ad::Tensor::from({1, seg_len}, prior.samples), mel_cond);

        std::vector<DiscOutput> real_out;
        if (!cfg.mel_only) {
            // discriminator update on detached generator output
            real_out = bank.forward(x_real);
            const std::vector<DiscOutput> fake_out = bank.forward(x_hat.detach());
            ad::Tensor dl = disc_loss(real_out, fake_out);
            d_opt.zero_grad();
            ad::backward(dl);
            ad::clip_grad_norm(bank.parameters(), 10.0);
            d_opt.step_with_lr(lr);
            log.loss_d = dl.item();
        }

        // generator update; discriminator weights act as constants here
        ad::Tensor lmel = ad::mean(ad::abs(ad::sub(mel_ref, dsp::log_mel_forward(mel_plan, x_hat))));
        ad::Tensor total = ad::scale(lmel, cfg.weights.mel);
        log.loss_mel = lmel.item();
        if (!cfg.mel_only) {
            bank.set_requires_grad(false);
            std::vector<DiscOutput> fake_out = bank.forward(x_hat);
            for (auto& o : real_out)
                for (auto& f : o.features) f = f.detach();
            ad::Tensor ladv = adv_loss(fake_out);
            ad::Tensor lfm = feature_matching_loss(real_out, fake_out);
            log.loss_adv = ladv.item();
            log.loss_fm = lfm.item();
            total = ad::add(total, ad::add(ad::scale(ladv, cfg.weights.adv),
                                           ad::scale(lfm, cfg.weights.fm)));
            bank.set_requires_grad(true);
        }
        log.loss_g = total.item();
        g_opt.zero_grad();
        ad::backward(total);
        ad::clip_grad_norm(gen.parameters(), 10.0);
        g_opt.step_with_lr(lr);

        result.log.push_back(log);
    }

    for (const auto& [name, t] : gen.named_parameters())
        result.checkpoint.emplace(name, t.detach());
    return result;
}

void write_train_log_csv(const std::string& path, const std::vector<StepLog>& log) {
    std::ostringstream out;
    out << "step,loss_mel,loss_adv,loss_fm,loss_d\n";
    out.precision(12);
    for (const auto& l : log)
        out << l.step << ',' << l.loss_mel << ',' << l.loss_adv << ',' << l.loss_fm << ','
            << l.loss_d << '\n';
    atomic_write(path, out.str());
}

}  // namespace wavehax
