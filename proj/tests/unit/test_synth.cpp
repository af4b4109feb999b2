#include <catch_amalgamated.hpp>

#include <cmath>

#include "soundobj/errors.hpp"
#include "soundobj/pipeline.hpp"
#include "soundobj/synth.hpp"
#include "support.hpp"

using namespace soundobj;
using Catch::Approx;

namespace {

double mean_abs_step_pct(const std::vector<double>& v) {
    double sum = 0.0;
    for (std::size_t i = 1; i < v.size(); ++i) sum += std::abs(v[i] - v[i - 1]) / v[i - 1];
    return 100.0 * sum / static_cast<double>(v.size() - 1);
}

Errc spec_error(const SynthSpec& s) {
    try {
        generate(s);
    } catch (const Error& e) {
        return e.code();
    }
    FAIL("spec accepted");
    return Errc::InvalidArgument;
}

}  // namespace

TEST_CASE("an unperturbed spec is an exact harmonic sum", "[synth]") {
    SynthSpec spec;
    spec.f0 = 137.0;
    spec.n_harmonics = 5;
    spec.duration = 0.5;
    spec.harmonic_amps = {1.0, 0.5, 0.25, 0.2, 0.1};
    spec.phase_offsets = {0.0, 0.3, -1.0, 2.0, 0.5};
    const Synthesis s = generate(spec);
    REQUIRE(s.recording.samples.size() == 11025);
    double worst = 0.0;
    for (std::size_t n = 0; n < s.recording.samples.size(); ++n) {
        const double t = static_cast<double>(n) / 22050.0;
        double v = 0.0;
        for (int h = 1; h <= 5; ++h) v += spec.harmonic_amps[h - 1] * std::sin(2.0 * testing::kPi * h * 137.0 * t + spec.phase_offsets[h - 1]);
        worst = std::max(worst, std::abs(s.truth.scale * v - s.recording.samples[n]));
    }
    CHECK(worst < 1e-6);
    CHECK(s.recording.peak() == Approx(0.9));
}

TEST_CASE("an unperturbed vowel measures near-zero jitter and shimmer", "[synth]") {
    SynthSpec spec;
    spec.f0 = 160.0;
    spec.n_harmonics = 8;
    spec.duration = 3.0;
    const Analysis a = analyze_recording(generate(spec).recording);
    CHECK(a.features.jitter < 0.02);
    CHECK(a.features.shimmer < 0.2);
}

TEST_CASE("realized jitter matches the request", "[synth]") {
    SynthSpec spec;
    spec.jitter_pct = 0.10;
    const Synthesis s = generate(spec);
    CHECK(mean_abs_step_pct(s.truth.cycle_f0) == Approx(0.10).margin(0.01));
    CHECK(s.truth.realized_jitter_pct == Approx(mean_abs_step_pct(s.truth.cycle_f0)).epsilon(1e-9));
}

TEST_CASE("ground truth statistics agree with the request", "[synth]") {
    for (std::uint64_t seed : {1u, 2u, 3u}) {
        SynthSpec spec;
        spec.jitter_pct = 0.5;
        spec.shimmer_pct = 3.0;
        spec.duration = 3.0;
        spec.seed = seed;
        const Synthesis s = generate(spec);
        CAPTURE(seed);
        CHECK(mean_abs_step_pct(s.truth.cycle_f0) == Approx(0.5).epsilon(0.05));
        CHECK(mean_abs_step_pct(s.truth.cycle_amp) == Approx(3.0).epsilon(0.05));
        CHECK(s.truth.cycle_f0.size() == s.truth.cycle_start.size());
        // The AR(1) jitter level wanders, so the cycle count drifts by a percent or so.
        CHECK(s.truth.cycle_start.size() == Approx(3.0 * 150.0).epsilon(0.03));
    }
}

TEST_CASE("phase walk reaches its stationary spread", "[synth]") {
    SynthSpec spec;
    spec.n_harmonics = 4;
    spec.duration = 20.0;
    spec.set_phase_walk(0.4);
    const Synthesis s = generate(spec);
    REQUIRE(s.truth.cycle_walk.size() == 4);
    for (double w : s.truth.cycle_walk[0]) CHECK(w == 0.0);
    double sq = 0.0;
    for (double w : s.truth.cycle_walk[2]) sq += w * w;
    CHECK(std::sqrt(sq / static_cast<double>(s.truth.cycle_walk[2].size())) == Approx(0.4).epsilon(0.3));
}

TEST_CASE("generation is deterministic in the seed", "[synth]") {
    SynthSpec spec;
    spec.jitter_pct = 0.3;
    spec.shimmer_pct = 2.0;
    spec.noise_snr_db = 20.0;
    spec.set_phase_walk(0.2);
    spec.duration = 1.0;
    const Synthesis a = generate(spec);
    const Synthesis b = generate(spec);
    CHECK(a.recording.samples == b.recording.samples);
    spec.seed = 2;
    CHECK(generate(spec).recording.samples != a.recording.samples);
}

TEST_CASE("noise is added at the requested SNR", "[synth]") {
    SynthSpec spec;
    spec.noise_snr_db = 12.0;
    spec.duration = 2.0;
    spec.peak = 0.0;
    const Synthesis noisy = generate(spec);
    spec.noise_snr_db = std::numeric_limits<double>::infinity();
    const Synthesis clean = generate(spec);
    CHECK(noisy.truth.scale == 1.0);
    CHECK(20.0 * std::log10(noisy.truth.signal_rms / noisy.truth.noise_rms) == Approx(12.0).margin(1e-9));
    CHECK(clean.truth.noise_rms == 0.0);
    // Measured noise realization rather than the recorded level.
    std::vector<double> diff(clean.recording.samples.size());
    for (std::size_t i = 0; i < diff.size(); ++i) diff[i] = noisy.recording.samples[i] - clean.recording.samples[i];
    CHECK(20.0 * std::log10(testing::rms(clean.recording.samples) / testing::rms(diff)) == Approx(12.0).margin(0.1));
}

TEST_CASE("noise-free vowels carry almost no non-harmonic energy", "[synth]") {
    SynthSpec spec;
    spec.f0 = 210.0;
    spec.n_harmonics = 8;
    spec.duration = 3.0;
    const Analysis a = analyze_recording(generate(spec).recording);
    const double total = a.grouping.total_energy;
    REQUIRE(total > 0.0);
    CHECK((a.grouping.noise_energy() + a.grouping.subharmonic_energy()) / total < 0.005);
}

TEST_CASE("invalid specs are rejected", "[synth]") {
    SynthSpec s;
    s.f0 = 50.0;
    CHECK(spec_error(s) == Errc::SpecInvalid);
    s = {};
    s.f0 = 401.0;
    CHECK(spec_error(s) == Errc::SpecInvalid);
    s = {};
    s.n_harmonics = 24;
    s.f0 = 60.0;
    CHECK(spec_error(s) == Errc::SpecInvalid);
    s = {};
    s.sample_rate = 16000.0;
    CHECK(spec_error(s) == Errc::SpecInvalid);
    s = {};
    s.jitter_pct = -0.1;
    CHECK(spec_error(s) == Errc::SpecInvalid);
    s = {};
    s.harmonic_amps = {1.0, 0.5};
    CHECK(spec_error(s) == Errc::SpecInvalid);
}
