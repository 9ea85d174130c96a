// wavehax command-line front end: prior generation, synthesis, aliasing
// analysis, gradient checks, toy training, evaluation, and model info.
#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <iostream>
#include <random>
#include <sstream>

#include "wavehax/aliasing.hpp"
#include "wavehax/gan.hpp"
#include "wavehax/generator.hpp"
#include "wavehax/gradcheck.hpp"
#include "wavehax/io.hpp"
#include "wavehax/metrics.hpp"
#include "wavehax/prior.hpp"

namespace fs = std::filesystem;
using namespace wavehax;

namespace {

// exit codes: 0 ok, 1 invalid input, 2 internal failure
struct InternalError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

GeneratorConfig config_from_file(const std::string& path) {
    GeneratorConfig cfg;
    if (path.empty()) return cfg;
    const auto kv = read_kv_config(path);
    auto get_int = [&kv](const std::string& key, int& out) {
        const auto it = kv.find(key);
        if (it != kv.end()) out = std::stoi(it->second);
    };
    get_int("fft_size", cfg.fft_size);
    get_int("hop", cfg.hop);
    get_int("channels", cfg.channels);
    get_int("hidden", cfg.hidden);
    get_int("n_blocks", cfg.n_blocks);
    get_int("conv1d_kernel", cfg.conv1d_kernel);
    get_int("depthwise_kernel", cfg.depthwise_kernel);
    get_int("mel_bands", cfg.mel_bands);
    get_int("sample_rate", cfg.sample_rate);
    for (const auto& [key, value] : kv) {
        static const char* known[] = {"fft_size", "hop", "channels", "hidden",
                                      "n_blocks", "conv1d_kernel", "depthwise_kernel",
                                      "mel_bands", "sample_rate"};
        if (std::find_if(std::begin(known), std::end(known),
                         [&key](const char* k) { return key == k; }) == std::end(known))
            throw std::invalid_argument("unknown config key: " + key);
    }
    return cfg;
}

PointwiseNonlinearity nonlinearity_by_name(const std::string& name, double alpha) {
    if (name == "relu") return relu_nonlinearity();
    if (name == "tanh") return tanh_nonlinearity();
    if (name == "snake") return snake_nonlinearity(alpha);
    throw std::invalid_argument("unknown nonlinearity: " + name);
}

int run_prior(const std::string& f0_path, int sr, int hop, const std::string& out,
              const std::string& kind, double lc, double noise_sigma, double fmax,
              std::uint64_t seed) {
    F0Contour f0{read_f0_csv(f0_path), hop, sr};
    PriorConfig cfg;
    cfg.lc = lc;
    cfg.noise_sigma = noise_sigma;
    cfg.fmax = fmax;
    cfg.seed = seed;
    if (kind == "harmonic")
        cfg.kind = PriorKind::Harmonic;
    else if (kind == "sine")
        cfg.kind = PriorKind::Sine;
    else if (kind == "noise")
        cfg.kind = PriorKind::Noise;
    else
        throw std::invalid_argument("unknown prior kind: " + kind);
    write_wav(out, generate_prior(f0, cfg));
    return 0;
}

int run_synth(const std::string& ckpt, const std::string& mel_path,
              const std::string& f0_path, const std::string& out,
              const std::string& config_path, std::uint64_t seed) {
    const GeneratorConfig cfg = config_from_file(config_path);
    Generator gen(cfg, seed);
    gen.load_state(ad::load_checkpoint(ckpt));

    const MelFeatures mel = read_mel_file(mel_path);
    if (static_cast<int>(mel.bands) != cfg.mel_bands)
        throw std::invalid_argument("mel band count does not match the model config");
    std::vector<std::vector<double>> mel_frames(mel.frames,
                                                std::vector<double>(mel.bands));
    for (std::size_t n = 0; n < mel.frames; ++n)
        for (std::size_t b = 0; b < mel.bands; ++b)
            mel_frames[n][b] = mel.values[n * mel.bands + b];

    std::vector<double> f0 = read_f0_csv(f0_path);
    if (f0.size() != mel.frames)
        throw std::invalid_argument("f0 and mel frame counts differ");
    PriorConfig pc;
    pc.seed = seed;
    const Waveform prior = generate_prior(F0Contour{std::move(f0), cfg.hop, cfg.sample_rate}, pc);
    write_wav(out, gen.synthesize(prior, mel_frames));
    return 0;
}

int run_analyze_alias(const std::string& in, const std::string& out,
                      const std::string& nl_name, double alpha, double f0) {
    const Waveform x = read_wav(in);
    const PointwiseNonlinearity nl = nonlinearity_by_name(nl_name, alpha);
    const auto rows = analyze_alias_spectra(x, nl);
    std::ostringstream csv;
    csv.precision(12);
    csv << "bin_hz,xhat_db,ahat_db,product_db\n";
    for (const auto& r : rows)
        csv << r.bin_hz << ',' << r.xhat_db << ',' << r.ahat_db << ',' << r.product_db << '\n';
    atomic_write(out, csv.str());
    if (f0 > 0.0) {
        Waveform naive = x;
        for (auto& v : naive.samples) v = nl.evaluate(v);
        std::cout << "alias_energy_naive_db=" << alias_energy(naive, f0) << '\n'
                  << "alias_energy_antialiased_db="
                  << alias_energy(anti_aliased_apply(x, nl), f0) << '\n';
    }
    return 0;
}

int run_sine_powers(int k, const std::string& out) {
    const HarmonicDecomposition d = sine_power_decompose(k);
    std::ostringstream csv;
    csv.precision(17);
    csv << "m,a_m,b_m\n";
    for (std::size_t m = 0; m < d.a.size(); ++m)
        csv << m << ',' << d.a[m] << ',' << d.b[m] << '\n';
    atomic_write(out, csv.str());
    return 0;
}

int run_gradcheck(std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> g;
    auto rand_t = [&](const std::vector<int>& shape) {
        ad::Tensor t = ad::Tensor::zeros(shape, true);
        for (auto& v : t.values()) v = g(rng);
        return t;
    };

    bool all_pass = true;
    auto report = [&all_pass](const std::string& name, const ad::GradCheckResult& r) {
        std::cout << name << ": " << (r.pass ? "ok" : "FAIL")
                  << " (max rel err " << r.max_rel_err << ")\n";
        all_pass = all_pass && r.pass;
    };

    {
        ad::Tensor a = rand_t({2, 3, 4}), b = rand_t({2, 3, 4});
        report("elementwise", ad::grad_check(
                                  [](const std::vector<ad::Tensor>& l) {
                                      return ad::mean(ad::mul(ad::gelu(l[0]), ad::tanh(l[1])));
                                  },
                                  {a, b}));
    }
    {
        ad::Tensor x = rand_t({2, 6, 4}), w = rand_t({3, 6, 3}), b = rand_t({3});
        report("conv1d", ad::grad_check(
                             [](const std::vector<ad::Tensor>& l) {
                                 return ad::mean(ad::square(ad::conv1d(l[0], l[1], l[2])));
                             },
                             {x, w, b}));
    }
    {
        ad::Tensor x = rand_t({1, 4, 5, 5}), w = rand_t({4, 1, 3, 3}), b = rand_t({4});
        report("depthwise conv2d", ad::grad_check(
                                       [](const std::vector<ad::Tensor>& l) {
                                           return ad::mean(ad::abs(ad::conv2d(l[0], l[1], l[2], 4)));
                                       },
                                       {x, w, b}));
    }
    {
        ad::Tensor x = rand_t({2, 3, 4, 2}), gam = rand_t({3}), bet = rand_t({3});
        report("layer_norm", ad::grad_check(
                                 [](const std::vector<ad::Tensor>& l) {
                                     return ad::mean(ad::square(ad::layer_norm(l[0], l[1], l[2])));
                                 },
                                 {x, gam, bet}));
    }
    {
        GeneratorConfig cfg;
        cfg.fft_size = 8;
        cfg.hop = 4;
        cfg.channels = 3;
        cfg.hidden = 4;
        cfg.n_blocks = 2;
        cfg.conv1d_kernel = 3;
        cfg.depthwise_kernel = 3;
        cfg.mel_bands = 5;
        cfg.sample_rate = 1000;
        Generator gen(cfg, seed);
        const int N = 6, T = N * cfg.hop;
        MelConfig mc;
        mc.bands = cfg.mel_bands;
        mc.fft_size = 16;
        mc.hop = cfg.hop;
        mc.fmin = 10.0;
        mc.fmax = 500.0;
        const auto plan = dsp::make_mel_plan(mc, cfg.sample_rate, T);
        ad::Tensor prior = rand_t({1, T}), mel = rand_t({1, cfg.mel_bands, N});
        ad::Tensor target = rand_t({1, T});
        prior.impl()->requires_grad = false;
        mel.impl()->requires_grad = false;
        target.impl()->requires_grad = false;
        report("generator end-to-end",
               ad::grad_check(
                   [&](const std::vector<ad::Tensor>&) {
                       return mel_loss(plan, target, gen.forward(prior, mel));
                   },
                   gen.parameters(), 1e-5, 1e-4, 4, seed));
    }
    if (!all_pass) throw InternalError("gradient check failed");
    return 0;
}

std::vector<TrainItem> load_dataset(const std::string& dir, int hop) {
    std::vector<fs::path> wavs;
    for (const auto& entry : fs::directory_iterator(dir))
        if (entry.path().extension() == ".wav") wavs.push_back(entry.path());
    std::sort(wavs.begin(), wavs.end());
    if (wavs.empty()) throw std::invalid_argument("no .wav files in " + dir);
    std::vector<TrainItem> data;
    for (const auto& wav : wavs) {
        TrainItem item;
        item.audio = read_wav(wav.string());
        fs::path f0_path = wav;
        f0_path.replace_extension(".f0.csv");
        item.f0 = read_f0_csv(f0_path.string());
        if (item.f0.size() * static_cast<std::size_t>(hop) != item.audio.samples.size())
            throw std::invalid_argument("f0/audio length mismatch for " + wav.string());
        data.push_back(std::move(item));
    }
    return data;
}

int run_train_toy(const std::string& data_dir, int steps, std::uint64_t seed,
                  const std::string& out, const std::string& log_path, bool mel_only,
                  const std::string& config_path, double lr) {
    TrainConfig cfg;
    cfg.gen = config_from_file(config_path);
    cfg.steps = steps;
    cfg.seed = seed;
    cfg.mel_only = mel_only;
    cfg.lr = lr;
    const auto data = load_dataset(data_dir, cfg.gen.hop);
    const TrainResult r = train(data, cfg);
    ad::save_checkpoint(out, r.checkpoint);
    if (!log_path.empty()) write_train_log_csv(log_path, r.log);
    if (!r.log.empty())
        std::cout << "final mel loss " << r.log.back().loss_mel << " after "
                  << r.log.size() << " steps\n";
    return 0;
}

int run_eval(const std::string& ref_dir, const std::string& syn_dir,
             const std::string& out) {
    std::vector<fs::path> refs;
    for (const auto& entry : fs::directory_iterator(ref_dir))
        if (entry.path().extension() == ".wav") refs.push_back(entry.path());
    std::sort(refs.begin(), refs.end());
    if (refs.empty()) throw std::invalid_argument("no .wav files in " + ref_dir);

    std::ostringstream csv;
    csv.precision(12);
    csv << "utterance,mr_stft_distance\n";
    double total = 0.0;
    for (const auto& ref_path : refs) {
        const fs::path syn_path = fs::path(syn_dir) / ref_path.filename();
        const Waveform ref = normalize_rms(read_wav(ref_path.string()));
        Waveform syn = normalize_rms(read_wav(syn_path.string()));
        if (syn.samples.size() != ref.samples.size())
            throw std::invalid_argument("length mismatch for " + ref_path.filename().string());
        const double d = mr_stft_distance(ref, syn);
        csv << ref_path.stem().string() << ',' << d << '\n';
        total += d;
    }
    const double mean = total / static_cast<double>(refs.size());
    csv << "aggregate_mean," << mean << '\n';
    atomic_write(out, csv.str());
    std::cout << "mean mr-stft distance " << mean << " over " << refs.size()
              << " utterances\n";
    return 0;
}

int run_info(const std::string& config_path) {
    const GeneratorConfig cfg = config_from_file(config_path);
    const Generator gen(cfg);
    std::cout << "params=" << count_params(cfg) << '\n'
              << "macs_per_second=" << count_macs_per_second(cfg) << '\n'
              << "receptive_field_frames=" << gen.receptive_field_frames() << '\n'
              << "fft_size=" << cfg.fft_size << " hop=" << cfg.hop
              << " freq_bins=" << cfg.freq_bins() << '\n';
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"wavehax: aliasing-free waveform synthesis toolkit"};
    app.require_subcommand(1);

    std::string f0_path, mel_path, ckpt_path, in_path, out_path, config_path;
    std::string data_dir, ref_dir, syn_dir, log_path;
    std::string kind = "harmonic", nl_name = "relu";
    int sr = 24000, hop = 240, k = 6, steps = 100;
    double lc = 0.1, noise_sigma = 0.01, fmax = 0.0, alpha = 1.0, f0_hz = 0.0, lr = 2e-4;
    std::uint64_t seed = 0;
    bool mel_only = false;

    auto* prior = app.add_subcommand("prior", "Generate a harmonic prior WAV from an F0 contour");
    prior->add_option("--f0", f0_path, "F0 contour CSV")->required();
    prior->add_option("--sr", sr, "sample rate");
    prior->add_option("--hop", hop, "samples per F0 frame");
    prior->add_option("--out", out_path, "output WAV")->required();
    prior->add_option("--kind", kind, "harmonic | sine | noise");
    prior->add_option("--lc", lc, "per-frame RMS target");
    prior->add_option("--noise-sigma", noise_sigma, "additive noise sigma");
    prior->add_option("--fmax", fmax, "harmonic band limit, 0 = Nyquist");
    prior->add_option("--seed", seed, "RNG seed");

    auto* synth = app.add_subcommand("synth", "Synthesize a waveform from mel features and F0");
    synth->add_option("--ckpt", ckpt_path, "model checkpoint")->required();
    synth->add_option("--mel", mel_path, "MELS feature file")->required();
    synth->add_option("--f0", f0_path, "F0 contour CSV")->required();
    synth->add_option("--out", out_path, "output WAV")->required();
    synth->add_option("--config", config_path, "key=value model config");
    synth->add_option("--seed", seed, "prior RNG seed");

    auto* alias = app.add_subcommand("analyze-alias", "Export nonlinearity alias spectra as CSV");
    alias->add_option("--in", in_path, "input WAV")->required();
    alias->add_option("--out", out_path, "output CSV")->required();
    alias->add_option("--nonlinearity", nl_name, "relu | tanh | snake");
    alias->add_option("--alpha", alpha, "snake alpha");
    alias->add_option("--f0", f0_hz, "print alias energy summary for this F0");

    auto* powers = app.add_subcommand("sine-powers", "Export the sin^k harmonic decomposition");
    powers->add_option("--k", k, "power")->required();
    powers->add_option("--out", out_path, "output CSV")->required();

    auto* gc = app.add_subcommand("gradcheck", "Finite-difference check of the autodiff engine");
    gc->add_option("--seed", seed, "RNG seed");

    auto* tt = app.add_subcommand("train-toy", "Train on a directory of *.wav + *.f0.csv pairs");
    tt->add_option("--data", data_dir, "dataset directory")->required();
    tt->add_option("--steps", steps, "optimization steps");
    tt->add_option("--seed", seed, "RNG seed");
    tt->add_option("--out", out_path, "checkpoint output path")->required();
    tt->add_option("--log", log_path, "per-step loss CSV");
    tt->add_option("--config", config_path, "key=value model config");
    tt->add_option("--lr", lr, "peak learning rate");
    tt->add_flag("--mel-only", mel_only, "disable adversarial terms (warmup)");

    auto* ev = app.add_subcommand("eval", "Compare synthesized audio against references");
    ev->add_option("--ref", ref_dir, "reference WAV directory")->required();
    ev->add_option("--syn", syn_dir, "synthesized WAV directory")->required();
    ev->add_option("--out", out_path, "per-utterance CSV")->required();

    auto* info = app.add_subcommand("info", "Print model size and compute accounting");
    info->add_option("--config", config_path, "key=value model config");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 1;
    }

    try {
        if (prior->parsed())
            return run_prior(f0_path, sr, hop, out_path, kind, lc, noise_sigma, fmax, seed);
        if (synth->parsed())
            return run_synth(ckpt_path, mel_path, f0_path, out_path, config_path, seed);
        if (alias->parsed()) return run_analyze_alias(in_path, out_path, nl_name, alpha, f0_hz);
        if (powers->parsed()) return run_sine_powers(k, out_path);
        if (gc->parsed()) return run_gradcheck(seed);
        if (tt->parsed())
            return run_train_toy(data_dir, steps, seed, out_path, log_path, mel_only,
                                 config_path, lr);
        if (ev->parsed()) return run_eval(ref_dir, syn_dir, out_path);
        if (info->parsed()) return run_info(config_path);
    } catch (const InternalError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 2;  // unreachable subcommand dispatch
}
