#ifndef WAVEHAX_IO_HPP
#define WAVEHAX_IO_HPP

#include <map>
#include <string>
#include <vector>

#include "wavehax/signal.hpp"

namespace wavehax {

// Mono RIFF WAV, PCM 16-bit or IEEE float-32. Anything else is rejected.
Waveform read_wav(const std::string& path);
enum class WavFormat { Pcm16, Float32 };
void write_wav(const std::string& path, const Waveform& x, WavFormat fmt = WavFormat::Float32);

// F0 contour CSV with header `frame_index,f0_hz`.
std::vector<double> read_f0_csv(const std::string& path);
void write_f0_csv(const std::string& path, const std::vector<double>& f0);

// Mel feature file: magic `MELS`, u32 frames, u32 bands, little-endian f32 payload
// (frame-major).
struct MelFeatures {
    std::size_t frames = 0;
    std::size_t bands = 0;
    std::vector<float> values;  // frames * bands
};
MelFeatures read_mel_file(const std::string& path);
void write_mel_file(const std::string& path, const MelFeatures& mel);

// Flat key=value config file; '#' starts a comment line.
std::map<std::string, std::string> read_kv_config(const std::string& path);

// Write via temp file + rename so readers never observe partial output.
void atomic_write(const std::string& path, const std::string& contents);
void atomic_write_binary(const std::string& path, const std::vector<char>& contents);

}  // namespace wavehax

#endif
