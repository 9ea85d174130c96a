#include "wavehax/io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace wavehax {

namespace {

template <typename T>
T read_le(std::istream& in) {
    T v{};
    char buf[sizeof(T)];
    in.read(buf, sizeof(T));
    std::memcpy(&v, buf, sizeof(T));
    return v;
}

template <typename T>
void write_le(std::ostream& out, T v) {
    char buf[sizeof(T)];
    std::memcpy(buf, &v, sizeof(T));
    out.write(buf, sizeof(T));
}

}  // namespace

Waveform read_wav(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("read_wav: cannot open " + path);
    char riff[4], wave[4];
    in.read(riff, 4);
    read_le<std::uint32_t>(in);
    in.read(wave, 4);
    if (std::memcmp(riff, "RIFF", 4) != 0 || std::memcmp(wave, "WAVE", 4) != 0)
        throw std::runtime_error("read_wav: not a RIFF/WAVE file: " + path);

    std::uint16_t format = 0, channels = 0, bits = 0;
    std::uint32_t sample_rate = 0;
    std::vector<char> data;
    bool have_fmt = false, have_data = false;
    while (in && !(have_fmt && have_data)) {
        char id[4];
        in.read(id, 4);
        if (!in) break;
        const std::uint32_t sz = read_le<std::uint32_t>(in);
        if (std::memcmp(id, "fmt ", 4) == 0) {
            format = read_le<std::uint16_t>(in);
            channels = read_le<std::uint16_t>(in);
            sample_rate = read_le<std::uint32_t>(in);
            read_le<std::uint32_t>(in);  // byte rate
            read_le<std::uint16_t>(in);  // block align
            bits = read_le<std::uint16_t>(in);
            if (sz > 16) in.seekg(sz - 16, std::ios::cur);
            have_fmt = true;
        } else if (std::memcmp(id, "data", 4) == 0) {
            data.resize(sz);
            in.read(data.data(), sz);
            have_data = true;
        } else {
            in.seekg(sz + (sz & 1), std::ios::cur);
        }
    }
    if (!have_fmt || !have_data) throw std::runtime_error("read_wav: missing chunks: " + path);
    if (channels != 1) throw std::runtime_error("read_wav: only mono supported: " + path);

    Waveform w;
    w.sample_rate = static_cast<int>(sample_rate);
    if (format == 1 && bits == 16) {
        const std::size_t n = data.size() / 2;
        w.samples.resize(n);
        for (std::size_t i = 0; i < n; ++i) {
            std::int16_t s;
            std::memcpy(&s, data.data() + 2 * i, 2);
            w.samples[i] = static_cast<double>(s) / 32768.0;
        }
    } else if (format == 3 && bits == 32) {
        const std::size_t n = data.size() / 4;
        w.samples.resize(n);
        for (std::size_t i = 0; i < n; ++i) {
            float s;
            std::memcpy(&s, data.data() + 4 * i, 4);
            w.samples[i] = static_cast<double>(s);
        }
    } else {
        throw std::runtime_error("read_wav: unsupported format (want PCM16 or float32): " + path);
    }
    return w;
}

void write_wav(const std::string& path, const Waveform& x, WavFormat fmt) {
    if (x.sample_rate <= 0) throw std::invalid_argument("write_wav: invalid sample rate");
    std::ostringstream out(std::ios::binary);
    const bool f32 = fmt == WavFormat::Float32;
    const std::uint16_t bits = f32 ? 32 : 16;
    const std::uint32_t data_size =
        static_cast<std::uint32_t>(x.samples.size() * (bits / 8));
    out.write("RIFF", 4);
    write_le<std::uint32_t>(out, 36 + data_size);
    out.write("WAVE", 4);
    out.write("fmt ", 4);
    write_le<std::uint32_t>(out, 16);
    write_le<std::uint16_t>(out, f32 ? 3 : 1);
    write_le<std::uint16_t>(out, 1);
    write_le<std::uint32_t>(out, static_cast<std::uint32_t>(x.sample_rate));
    write_le<std::uint32_t>(out, static_cast<std::uint32_t>(x.sample_rate) * (bits / 8));
    write_le<std::uint16_t>(out, bits / 8);
    write_le<std::uint16_t>(out, bits);
    out.write("data", 4);
    write_le<std::uint32_t>(out, data_size);
    for (double v : x.samples) {
        if (f32) {
            write_le<float>(out, static_cast<float>(v));
        } else {
            const double c = std::clamp(v, -1.0, 1.0 - 1.0 / 32768.0);
            write_le<std::int16_t>(out, static_cast<std::int16_t>(std::lrint(c * 32768.0)));
        }
    }
    atomic_write(path, out.str());
}

std::vector<double> read_f0_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("read_f0_csv: cannot open " + path);
    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error("read_f0_csv: empty file " + path);
    if (line.find("f0_hz") == std::string::npos)
        throw std::runtime_error("read_f0_csv: expected header frame_index,f0_hz in " + path);
    std::vector<double> f0;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const auto comma = line.find(',');
        if (comma == std::string::npos)
            throw std::runtime_error("read_f0_csv: malformed row in " + path);
        f0.push_back(std::stod(line.substr(comma + 1)));
    }
    return f0;
}

void write_f0_csv(const std::string& path, const std::vector<double>& f0) {
    std::ostringstream out;
    out << "frame_index,f0_hz\n";
    for (std::size_t i = 0; i < f0.size(); ++i) out << i << "," << f0[i] << "\n";
    atomic_write(path, out.str());
}

MelFeatures read_mel_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("read_mel_file: cannot open " + path);
    char magic[4];
    in.read(magic, 4);
    if (std::memcmp(magic, "MELS", 4) != 0)
        throw std::runtime_error("read_mel_file: bad magic in " + path);
    MelFeatures mel;
    mel.frames = read_le<std::uint32_t>(in);
    mel.bands = read_le<std::uint32_t>(in);
    mel.values.resize(mel.frames * mel.bands);
    in.read(reinterpret_cast<char*>(mel.values.data()),
            static_cast<std::streamsize>(mel.values.size() * sizeof(float)));
    if (!in) throw std::runtime_error("read_mel_file: truncated payload in " + path);
    return mel;
}

void write_mel_file(const std::string& path, const MelFeatures& mel) {
    std::ostringstream out(std::ios::binary);
    out.write("MELS", 4);
    write_le<std::uint32_t>(out, static_cast<std::uint32_t>(mel.frames));
    write_le<std::uint32_t>(out, static_cast<std::uint32_t>(mel.bands));
    out.write(reinterpret_cast<const char*>(mel.values.data()),
              static_cast<std::streamsize>(mel.values.size() * sizeof(float)));
    atomic_write(path, out.str());
}

std::map<std::string, std::string> read_kv_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("read_kv_config: cannot open " + path);
    std::map<std::string, std::string> kv;
    std::string line;
    while (std::getline(in, line)) {
        const auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        const auto eq = line.find('=');
        if (eq == std::string::npos) continue;
        auto trim = [](std::string s) {
            const auto b = s.find_first_not_of(" \t\r");
            const auto e = s.find_last_not_of(" \t\r");
            return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
        };
        const std::string key = trim(line.substr(0, eq));
        if (!key.empty()) kv[key] = trim(line.substr(eq + 1));
    }
    return kv;
}

void atomic_write(const std::string& path, const std::string& contents) {
    const std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("atomic_write: cannot open " + tmp);
        out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
        if (!out) throw std::runtime_error("atomic_write: write failed for " + tmp);
    }
    if (std::rename(tmp.c_str(), path.c_str()) != 0)
        throw std::runtime_error("atomic_write: rename failed for " + path);
}

void atomic_write_binary(const std::string& path, const std::vector<char>& contents) {
    atomic_write(path, std::string(contents.begin(), contents.end()));
}

}  // namespace wavehax
