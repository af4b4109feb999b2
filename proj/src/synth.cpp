#include "soundobj/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "soundobj/errors.hpp"

namespace soundobj {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

// Library distributions are implementation-defined; these are not.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : g_(seed) {}

    double uniform() { return static_cast<double>(g_() >> 11) * 0x1.0p-53; }
    double symmetric(double a) { return a * (2.0 * uniform() - 1.0); }

    double gaussian() {
        if (spare_) {
            spare_ = false;
            return cached_;
        }
        double u1 = uniform();
        while (u1 <= 0.0) u1 = uniform();
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        cached_ = r * std::sin(kTwoPi * u2);
        spare_ = true;
        return r * std::cos(kTwoPi * u2);
    }

private:
    std::mt19937_64 g_;
    double cached_ = 0.0;
    bool spare_ = false;
};

std::uint64_t stream_seed(std::uint64_t seed, std::uint64_t stream) {
    std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

double mean_abs_relative_step(const std::vector<double>& v) {
    if (v.size() < 2) return 0.0;
    double s = 0.0;
    for (std::size_t i = 1; i < v.size(); ++i) s += std::abs(v[i] - v[i - 1]) / v[i - 1];
    return 100.0 * s / static_cast<double>(v.size() - 1);
}

}  // namespace

void SynthSpec::set_phase_walk(double sigma) {
    phase_walk_sigma.assign(static_cast<std::size_t>(std::max(n_harmonics, 0)), sigma);
    if (!phase_walk_sigma.empty()) phase_walk_sigma[0] = 0.0;
}

void validate_spec(const SynthSpec& s) {
    const auto fail = [](const std::string& why) { throw Error(Errc::SpecInvalid, why); };
    if (!(s.f0 >= 55.0 && s.f0 <= 400.0)) fail("f0 must lie in [55, 400] Hz");
    if (s.n_harmonics < 1 || s.n_harmonics > 23) fail("n_harmonics must lie in [1, 23]");
    if (!is_canonical_rate(s.sample_rate)) fail("sample_rate must be 22050 or 44100");
    if (!(s.n_harmonics * s.f0 < s.sample_rate / 2.0)) fail("top harmonic must stay below Nyquist");
    if (!(s.jitter_pct >= 0.0) || !(s.shimmer_pct >= 0.0)) fail("jitter and shimmer must be non-negative");
    if (!(s.duration > 0.0) || !std::isfinite(s.duration)) fail("duration must be positive");
    if (std::isnan(s.noise_snr_db)) fail("noise_snr_db is NaN");
    const auto n = static_cast<std::size_t>(s.n_harmonics);
    for (const auto* v : {&s.harmonic_amps, &s.phase_walk_sigma, &s.phase_offsets}) {
        if (!v->empty() && v->size() != n) fail("per-harmonic vectors need n_harmonics entries");
    }
    for (double w : s.phase_walk_sigma) {
        if (!(w >= 0.0)) fail("phase walk sigma must be non-negative");
    }
    if (!(s.peak >= 0.0 && s.peak <= 1.0)) fail("peak must lie in [0, 1]");
}

namespace {

struct Track {
    GroundTruth truth;
    std::vector<double> samples;
    std::vector<double> jitter_factor;   // 1 + jit per cycle, slope excluded
};

// One pass of the cycle loop. Innovations come from fresh streams on every
// call, so passes that differ only in scale see the same draws.
Track render(const SynthSpec& spec, double jitter_a, double shimmer_a, bool synthesize) {
    const auto nh = static_cast<std::size_t>(spec.n_harmonics);
    const double fs = spec.sample_rate;
    const auto length = static_cast<std::size_t>(std::llround(spec.duration * fs));
    const double rho = kPerturbationMemory;

    std::vector<double> amps = spec.harmonic_amps;
    if (amps.empty()) amps.assign(nh, 1.0);
    std::vector<double> offsets = spec.phase_offsets;
    if (offsets.empty()) offsets.assign(nh, 0.0);
    std::vector<double> walk_sigma = spec.phase_walk_sigma;
    if (walk_sigma.empty()) walk_sigma.assign(nh, 0.0);
    std::vector<double> breaks = spec.break_times;
    std::sort(breaks.begin(), breaks.end());

    Rng jitter_rng(stream_seed(spec.seed, 0));
    Rng shimmer_rng(stream_seed(spec.seed, 1));
    Rng walk_rng(stream_seed(spec.seed, 2));

    std::vector<double> walk_scale(nh);
    for (std::size_t h = 0; h < nh; ++h) walk_scale[h] = walk_sigma[h] * std::sqrt(1.0 - rho * rho);

    Track out;
    GroundTruth& gt = out.truth;
    gt.cycle_walk.assign(nh, {});
    std::vector<double> walk(nh, 0.0);
    double jit = 0.0;
    // Gain moves linearly from one cycle's value to the next so the waveform
    // stays continuous; a step at every cycle boundary would add clicks.
    double shim = 0.0;
    double shim_next = shimmer_rng.symmetric(shimmer_a);
    for (std::size_t h = 0; h < nh; ++h) {
        if (walk_sigma[h] > 0.0) walk[h] = walk_sigma[h] * walk_rng.gaussian();
    }

    std::vector<double>& x = out.samples;
    x.assign(synthesize ? length : 0, 0.0);
    double cycles = 0.0;  // integral of f0, in cycles
    long cycle = -1;
    std::size_t next_break = 0;
    double break_phase = 0.0;
    for (std::size_t n = 0; n < length; ++n) {
        const double t = static_cast<double>(n) / fs;
        const auto c = static_cast<long>(std::floor(cycles));
        while (cycle < c) {
            ++cycle;
            if (cycle > 0) {
                jit = rho * jit + jitter_rng.symmetric(jitter_a);
                shim = shim_next;
                shim_next = rho * shim + shimmer_rng.symmetric(shimmer_a);
                for (std::size_t h = 0; h < nh; ++h) {
                    if (walk_scale[h] > 0.0) walk[h] = rho * walk[h] + walk_scale[h] * walk_rng.gaussian();
                }
            }
            gt.cycle_start.push_back(t);
            gt.cycle_f0.push_back(spec.f0 * (1.0 + spec.f0_slope_pct_per_s * t / 100.0) * (1.0 + jit));
            gt.cycle_amp.push_back(1.0 + shim);
            out.jitter_factor.push_back(1.0 + jit);
            for (std::size_t h = 0; h < nh; ++h) gt.cycle_walk[h].push_back(walk[h]);
        }
        const double f0 = spec.f0 * (1.0 + spec.f0_slope_pct_per_s * t / 100.0) * (1.0 + jit);
        if (synthesize) {
            while (next_break < breaks.size() && t >= breaks[next_break]) {
                break_phase += std::numbers::pi;
                ++next_break;
            }
            const double frac = cycles - std::floor(cycles);
            const double gain = (1.0 + spec.amp_slope_pct_per_s * t / 100.0) * (1.0 + shim + (shim_next - shim) * frac);
            const double base = kTwoPi * cycles;
            double v = 0.0;
            for (std::size_t h = 0; h < nh; ++h) {
                const double psi = offsets[h] + walk[h] + break_phase + static_cast<double>(h + 1) * base;
                v += amps[h] * std::sin(psi);
            }
            x[n] = gain * v;
        }
        cycles += f0 / fs;
    }
    return out;
}

}  // namespace

Synthesis generate(const SynthSpec& spec) {
    validate_spec(spec);
    // Uniform innovations on [-a, a] have mean magnitude a / 2. The AR(1)
    // leak and the relative step bias that slightly, and one short take
    // scatters it by a few percent, so the scales are fitted to the draws
    // until the realized statistics equal the request.
    double jitter_a = 2.0 * spec.jitter_pct / 100.0;
    double shimmer_a = 2.0 * spec.shimmer_pct / 100.0;
    for (int pass = 0; pass < 4 && (jitter_a > 0.0 || shimmer_a > 0.0); ++pass) {
        const Track probe = render(spec, jitter_a, shimmer_a, false);
        const double j = mean_abs_relative_step(probe.jitter_factor);
        const double s = mean_abs_relative_step(probe.truth.cycle_amp);
        bool settled = true;
        if (j > 0.0) {
            settled = settled && std::abs(j / spec.jitter_pct - 1.0) < 1e-9;
            jitter_a *= spec.jitter_pct / j;
        }
        if (s > 0.0) {
            settled = settled && std::abs(s / spec.shimmer_pct - 1.0) < 1e-9;
            shimmer_a *= spec.shimmer_pct / s;
        }
        if (settled) break;
    }

    Track track = render(spec, jitter_a, shimmer_a, true);
    Synthesis out;
    GroundTruth& gt = out.truth;
    gt = std::move(track.truth);
    std::vector<double> x = std::move(track.samples);
    const auto length = x.size();
    const double fs = spec.sample_rate;
    Rng noise_rng(stream_seed(spec.seed, 3));

    double energy = 0.0;
    for (double v : x) energy += v * v;
    gt.signal_rms = length > 0 ? std::sqrt(energy / static_cast<double>(length)) : 0.0;
    if (std::isfinite(spec.noise_snr_db)) {
        gt.noise_rms = gt.signal_rms * std::pow(10.0, -spec.noise_snr_db / 20.0);
        for (double& v : x) v += gt.noise_rms * noise_rng.gaussian();
    }

    gt.realized_jitter_pct = mean_abs_relative_step(gt.cycle_f0);
    gt.realized_shimmer_pct = mean_abs_relative_step(gt.cycle_amp);

    Recording& rec = out.recording;
    rec.sample_rate = fs;
    rec.source_id = "synth";
    rec.samples = std::move(x);
    gt.scale = 1.0;
    if (spec.peak > 0.0) {
        const double p = rec.peak();
        if (p > 0.0) {
            gt.scale = spec.peak / p;
            for (double& v : rec.samples) v *= gt.scale;
        }
    }
    return out;
}

}  // namespace soundobj
