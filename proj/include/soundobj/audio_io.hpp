#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace soundobj {

inline constexpr double kCanonicalRate = 22050.0;
inline constexpr double kAlternateRate = 44100.0;
inline constexpr double kNormalizedPeak = 0.9;
inline constexpr double kMinDuration = 1.0;

/// Mono PCM recording with samples in [-1, 1].
struct Recording {
    std::vector<double> samples;
    double sample_rate = kCanonicalRate;
    std::string source_id;

    double duration() const noexcept {
        return sample_rate > 0.0 ? static_cast<double>(samples.size()) / sample_rate : 0.0;
    }
    double peak() const noexcept;
};

bool is_canonical_rate(double sample_rate) noexcept;

struct LoadOptions {
    bool normalize = true;
    bool enforce_min_duration = true;
};

/// Reads an 8/16/24-bit integer or 32-bit float PCM WAV (mono or stereo).
/// Stereo is averaged to mono, non-canonical rates are resampled to 22050 Hz
/// and the result is peak-normalized to 0.9 unless disabled.
Recording load_wav(const std::filesystem::path& path, const LoadOptions& options = {});

/// Writes 16-bit PCM mono. Samples outside [-1, 1] are clamped.
void write_wav(const std::filesystem::path& path, const Recording& rec);

/// Scales the recording so that max |sample| equals `peak`. All-zero input is left as is.
void peak_normalize(Recording& rec, double peak = kNormalizedPeak);

/// Linear-phase rational polyphase resampler (Kaiser-windowed sinc).
std::vector<double> resample(std::span<const double> input, double from_rate, double to_rate);

enum class WarningKind { Clipping, Silence, ShortDuration };

struct ValidationWarning {
    WarningKind kind;
    std::string message;
};

std::string_view to_string(WarningKind kind) noexcept;

/// Advisory quality gate; never modifies the recording.
std::vector<ValidationWarning> validate_recording(const Recording& rec);

}  // namespace soundobj
