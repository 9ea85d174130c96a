#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>

#include "wavehax/io.hpp"

using namespace wavehax;

namespace {

struct TempFile {
    std::string path;
    explicit TempFile(std::string p) : path(std::move(p)) {}
    ~TempFile() { std::remove(path.c_str()); }
};

}  // namespace

TEST_CASE("wav round-trips in float32 exactly and pcm16 to quantization") {
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> d(-0.9, 0.9);
    Waveform x;
    x.sample_rate = 24000;
    x.samples.resize(480);
    for (auto& v : x.samples) v = d(rng);

    TempFile f32("io_test_f32.wav"), p16("io_test_p16.wav");
    write_wav(f32.path, x, WavFormat::Float32);
    const Waveform y = read_wav(f32.path);
    CHECK(y.sample_rate == 24000);
    REQUIRE(y.samples.size() == x.samples.size());
    for (std::size_t i = 0; i < x.samples.size(); ++i)
        CHECK(std::abs(y.samples[i] - x.samples[i]) < 1e-7);  // f32 rounding only

    write_wav(p16.path, x, WavFormat::Pcm16);
    const Waveform z = read_wav(p16.path);
    for (std::size_t i = 0; i < x.samples.size(); ++i)
        CHECK(std::abs(z.samples[i] - x.samples[i]) < 1.0 / 32768.0);
}

TEST_CASE("wav reader rejects non-wav bytes") {
    TempFile bad("io_test_bad.wav");
    std::ofstream(bad.path, std::ios::binary) << "definitely not a riff file";
    CHECK_THROWS(read_wav(bad.path));
    CHECK_THROWS(read_wav("io_test_missing.wav"));
}

TEST_CASE("f0 csv round-trips") {
    const std::vector<double> f0{0.0, 110.0, 220.5, 0.0, 440.0};
    TempFile f("io_test_f0.csv");
    write_f0_csv(f.path, f0);
    const auto back = read_f0_csv(f.path);
    REQUIRE(back.size() == f0.size());
    for (std::size_t i = 0; i < f0.size(); ++i) CHECK(back[i] == doctest::Approx(f0[i]));
}

TEST_CASE("mel feature file round-trips") {
    MelFeatures mel;
    mel.frames = 3;
    mel.bands = 4;
    mel.values = {1.f, 2.f, 3.f, 4.f, 5.f, 6.f, 7.f, 8.f, 9.f, 10.f, 11.f, 12.f};
    TempFile f("io_test_mel.bin");
    write_mel_file(f.path, mel);
    const auto back = read_mel_file(f.path);
    CHECK(back.frames == 3);
    CHECK(back.bands == 4);
    CHECK(back.values == mel.values);
}

TEST_CASE("kv config parses keys, trims, and skips comments") {
    TempFile f("io_test_cfg.txt");
    std::ofstream(f.path) << "# comment\n  fft_size = 480 \nchannels=32\n\n";
    const auto cfg = read_kv_config(f.path);
    REQUIRE(cfg.size() == 2);
    CHECK(cfg.at("fft_size") == "480");
    CHECK(cfg.at("channels") == "32");
}

TEST_CASE("atomic_write leaves no temp file behind") {
    TempFile f("io_test_atomic.txt");
    atomic_write(f.path, "hello");
    std::ifstream in(f.path);
    std::string s;
    std::getline(in, s);
    CHECK(s == "hello");
    CHECK(!std::ifstream(f.path + ".tmp").good());
}
