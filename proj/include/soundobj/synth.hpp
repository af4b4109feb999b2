#pragma once

#include <cstdint>
#include <limits>
#include <vector>

#include "soundobj/audio_io.hpp"

namespace soundobj {

/// Parameters of a synthetic sustained vowel. Per-harmonic vectors are
/// either empty (defaults) or hold exactly n_harmonics entries.
struct SynthSpec {
    double f0 = 150.0;
    int n_harmonics = 8;
    std::vector<double> harmonic_amps;     // default: all 1
    double jitter_pct = 0.0;               // mean |cycle-to-cycle change| of f0, %
    double shimmer_pct = 0.0;              // mean |cycle-to-cycle change| of amplitude, %
    double f0_slope_pct_per_s = 0.0;
    double amp_slope_pct_per_s = 0.0;
    std::vector<double> phase_walk_sigma;  // stationary std of each harmonic's phase walk, rad
    std::vector<double> phase_offsets;     // rad
    std::vector<double> break_times;       // s; every harmonic jumps by pi
    double noise_snr_db = std::numeric_limits<double>::infinity();
    double duration = 6.0;
    double sample_rate = kCanonicalRate;
    std::uint64_t seed = 1;
    double peak = kNormalizedPeak;         // 0 leaves the raw sum unscaled

    /// Same walk for every overtone, none on the fundamental.
    void set_phase_walk(double sigma);
};

/// Everything the generator realized, so tests compare against what was
/// injected rather than what was requested.
struct GroundTruth {
    std::vector<double> cycle_start;      // s
    std::vector<double> cycle_f0;         // Hz, including the slope
    std::vector<double> cycle_amp;        // shimmer factor (1 + s_c), slope excluded
    std::vector<std::vector<double>> cycle_walk;  // [h - 1][cycle], rad
    double realized_jitter_pct = 0.0;
    double realized_shimmer_pct = 0.0;
    double scale = 1.0;                   // applied by peak normalization
    double signal_rms = 0.0;              // before noise and scaling
    double noise_rms = 0.0;               // before scaling
};

struct Synthesis {
    Recording recording;
    GroundTruth truth;
};

inline constexpr double kPerturbationMemory = 0.96;  // AR(1) coefficient per cycle

Synthesis generate(const SynthSpec& spec);

/// Throws SpecInvalid when `spec` breaks an invariant.
void validate_spec(const SynthSpec& spec);

}  // namespace soundobj
