#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "soundobj/audio_io.hpp"

namespace testing {

inline constexpr double kPi = std::numbers::pi;

inline soundobj::Recording sine(double freq, double amp, double seconds, double rate = 22050.0,
                                double phase = 0.0) {
    soundobj::Recording r;
    r.sample_rate = rate;
    r.source_id = "sine";
    const auto n = static_cast<std::size_t>(std::llround(seconds * rate));
    r.samples.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        r.samples[i] = amp * std::sin(2.0 * kPi * freq * static_cast<double>(i) / rate + phase);
    }
    return r;
}

inline double rms(std::span<const double> x) {
    double s = 0.0;
    for (double v : x) s += v * v;
    return x.empty() ? 0.0 : std::sqrt(s / static_cast<double>(x.size()));
}

// Fresh directory under the system temp path, removed on destruction.
class TempDir {
public:
    explicit TempDir(const std::string& tag) {
        std::random_device rd;
        path_ = std::filesystem::temp_directory_path() /
                ("soundobj_" + tag + "_" + std::to_string(rd()) + std::to_string(rd()));
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::filesystem::path& path() const { return path_; }
    std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

private:
    std::filesystem::path path_;
};

// Minimal little-endian PCM writer, independent of the library's own writer.
inline void write_pcm16(const std::filesystem::path& path, const std::vector<std::vector<double>>& channels,
                        std::uint32_t rate) {
    const auto nch = static_cast<std::uint16_t>(channels.size());
    const std::size_t frames = channels.front().size();
    const std::uint32_t data_bytes = static_cast<std::uint32_t>(frames * nch * 2);
    std::ofstream out(path, std::ios::binary);
    auto u32 = [&](std::uint32_t v) {
        for (int i = 0; i < 4; ++i) out.put(static_cast<char>((v >> (8 * i)) & 0xff));
    };
    auto u16 = [&](std::uint16_t v) {
        out.put(static_cast<char>(v & 0xff));
        out.put(static_cast<char>(v >> 8));
    };
    out.write("RIFF", 4);
    u32(36 + data_bytes);
    out.write("WAVE", 4);
    out.write("fmt ", 4);
    u32(16);
    u16(1);
    u16(nch);
    u32(rate);
    u32(rate * nch * 2);
    u16(static_cast<std::uint16_t>(nch * 2));
    u16(16);
    out.write("data", 4);
    u32(data_bytes);
    for (std::size_t i = 0; i < frames; ++i) {
        for (const auto& c : channels) {
            const double v = std::clamp(c[i], -1.0, 1.0);
            u16(static_cast<std::uint16_t>(static_cast<std::int16_t>(std::lround(v * 32767.0))));
        }
    }
}

// Pairwise Mann-Whitney count: wins + half ties over all positive/negative pairs.
inline double brute_force_auc(std::span<const double> scores, std::span<const int> labels) {
    double wins = 0.0;
    double pairs = 0.0;
    for (std::size_t i = 0; i < scores.size(); ++i) {
        if (labels[i] != 1) continue;
        for (std::size_t j = 0; j < scores.size(); ++j) {
            if (labels[j] != 0) continue;
            pairs += 1.0;
            if (scores[i] > scores[j]) wins += 1.0;
            else if (scores[i] == scores[j]) wins += 0.5;
        }
    }
    return wins / pairs;
}

}  // namespace testing
