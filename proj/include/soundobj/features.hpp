#pragma once

#include <array>
#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "soundobj/tracker.hpp"

namespace soundobj {

inline constexpr int kMaxHarmonic = 23;
inline constexpr double kSignificantEnergy = 0.01;   // share of total energy
inline constexpr double kSignificantDuration = 1.0;  // seconds
inline constexpr double kStrongHarmonicShare = 0.05;
inline constexpr double kHarmonicTolerance = 0.03;
inline constexpr double kHnrCap = 1000.0;

struct ObjectStats {
    double mean_amp = 0.0;
    double std_amp_pct = 0.0;
    double shimmer_pct = 0.0;
    double amp_slope_pct_per_s = 0.0;
    double mean_freq = 0.0;
    double std_freq_pct = 0.0;
    double jitter_pct = 0.0;
    double freq_slope_pct_per_s = 0.0;
    double energy = 0.0;
    double duration = 0.0;
    std::size_t point_count = 0;
};

/// Stage one. Slopes are reported as magnitudes.
ObjectStats object_stats(const SoundObject& obj);

/// Indices of objects holding more than 1% of the total energy or lasting longer than 1 s.
std::vector<std::size_t> select_significant(std::span<const SoundObject> objects);

struct DivisorSearch {
    double min_hz = 55.0;
    double max_hz = 400.0;
    double coarse_step = 0.5;
    double fine_step = 0.01;
    double min_share = 0.5;
    // Scores closer than this share of the selected energy count as ties, so
    // long but nearly silent noise objects cannot pull F1 down an octave.
    double tie_share = 1e-3;
};

struct Fundamental {
    double f1 = 0.0;
    double support_share = 0.0;            // supporter energy / selected energy
    std::vector<std::size_t> supporters;   // indices into the object list
};

/// Common-divisor search over the mean frequencies of `selected` objects.
Fundamental find_fundamental(std::span<const SoundObject> objects, std::span<const std::size_t> selected,
                             const DivisorSearch& search = {});

/// Convenience form: every object in `selected` takes part.
Fundamental find_fundamental(std::span<const SoundObject> selected, const DivisorSearch& search = {});

struct HarmonicGroup {
    std::vector<std::size_t> members;
    double energy = 0.0;
};

struct HarmonicGrouping {
    double f1 = 0.0;
    double total_energy = 0.0;
    std::array<HarmonicGroup, kMaxHarmonic> harmonics{};  // [h - 1]
    std::vector<int> strong;  // ascending
    std::vector<int> weak;    // nonempty groups below the strong share
    std::vector<std::size_t> subharmonics;
    std::vector<std::size_t> noise_low;
    std::vector<std::size_t> noise_mid;
    std::vector<std::size_t> noise_high;
    std::vector<double> object_energy;  // per input object

    const HarmonicGroup& group(int h) const { return harmonics.at(static_cast<std::size_t>(h - 1)); }
    bool is_strong(int h) const;

    double strong_energy() const;
    double weak_energy() const;
    double harmonic_energy() const { return strong_energy() + weak_energy(); }
    double subharmonic_energy() const;
    double noise_energy() const;
};

HarmonicGrouping group_objects(std::span<const SoundObject> objects, double f1,
                               std::span<const std::size_t> selected);

struct TimeWindow {
    double begin = 0.0;
    double end = 0.0;
};

/// Span covered by the fundamental's member objects.
TimeWindow fundamental_span(std::span<const SoundObject> objects, const HarmonicGrouping& grouping);

/// Phase of harmonic h at the zero upcrossings of the fundamental, at most
/// `per_section` samples per `section` seconds.
std::vector<double> harmonic_shift_series(std::span<const SoundObject> objects, const HarmonicGrouping& grouping,
                                          int h, TimeWindow window, std::size_t per_section = 8,
                                          double section = 0.2);

struct PhaseStats {
    std::map<int, double> mean_shift;  // h >= 2
    double shift_std = 0.0;
    double drift = 0.0;
};

PhaseStats phase_stats(const std::map<int, std::vector<double>>& series);

enum class Gender { Female, Male };

struct BiomarkerVector {
    double amp_std = 0.0;
    double shimmer = 0.0;
    double amp_slope = 0.0;
    double freq_std = 0.0;
    double jitter = 0.0;
    double freq_slope = 0.0;
    double phase_std = 0.0;
    double phase_drift = 0.0;
    double obj_per_harm = 0.0;
    double subharm_count = 0.0;
    double e_low_harm = 0.0;
    double e_subharm = 0.0;
    double hnr = 0.0;
    double fq_tilt = 0.0;
    std::optional<Gender> gender;
    std::optional<double> age;

    static constexpr std::size_t kCount = 14;
    static const std::array<std::string_view, kCount>& names();
    std::array<double, kCount> values() const;
    double& operator[](std::size_t i);
    double operator[](std::size_t i) const;
};

std::optional<std::size_t> feature_index(std::string_view name);

struct FeatureFlags {
    bool hnr_capped = false;
    bool phase_unavailable = false;  // fewer than two shift samples on every strong overtone
};

BiomarkerVector biomarkers(std::span<const SoundObject> objects, const HarmonicGrouping& grouping,
                           const PhaseStats& phase, FeatureFlags* flags = nullptr);

/// Short-window statistics over strong-harmonic objects (reported only).
struct LocalWindow {
    TimeWindow window;
    std::size_t objects = 0;
    double amp_std = 0.0;
    double shimmer = 0.0;
    double freq_std = 0.0;
    double jitter = 0.0;
};

std::vector<LocalWindow> local_windows(std::span<const SoundObject> objects, const HarmonicGrouping& grouping,
                                       double width = 0.2);

}  // namespace soundobj
