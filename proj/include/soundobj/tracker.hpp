#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "soundobj/audio_io.hpp"
#include "soundobj/filterbank.hpp"

namespace soundobj {

struct ObjectPoint {
    double time = 0.0;       // seconds
    double amplitude = 0.0;  // linear
    double frequency = 0.0;  // Hz
};

/// A tracked partial. `initial_phase` is the sine-convention phase at the
/// first point: the object renders as a(t) * sin(initial_phase + 2pi * integral f).
struct SoundObject {
    std::vector<ObjectPoint> points;
    double initial_phase = 0.0;

    std::size_t point_count() const noexcept { return points.size(); }
    double start() const { return points.front().time; }
    double end() const { return points.back().time; }
    double duration() const { return points.empty() ? 0.0 : end() - start(); }

    /// Sum of a^2 * dt, with dt the trapezoidal share of each point.
    double energy() const;
    double mean_frequency() const;
    double mean_amplitude() const;
};

/// Amplitude, frequency and phase of one object at arbitrary times inside its span.
class ObjectEvaluator {
public:
    struct State {
        double amplitude;
        double frequency;
        double phase;  // sine convention, unwrapped
    };

    explicit ObjectEvaluator(const SoundObject& obj);

    bool covers(double t) const noexcept;
    State at(double t) const;

private:
    const SoundObject* obj_;
    std::vector<double> phase_at_point_;
};

struct TrackerConfig {
    double floor_db = -60.0;           // ridge floor relative to the spectrum peak
    double phase_tolerance = 0.785398163397448;  // pi/4 per step
    double max_freq_step = 0.06;       // relative change between points
    double periods_per_step = 2.0;
    double settle_seconds = 0.05;      // no seeding this close to either end
    std::size_t min_points = 3;
    int owner_radius = 2;              // filters around a live object where no seeds start
    int search_radius = 3;             // filters searched when continuing an object
};

/// Sequential ridge sweep over the composite spectrum.
std::vector<SoundObject> track_objects(const Spectrum& spectrum, const FilterBank& bank,
                                       const TrackerConfig& config = {});

/// Additive resynthesis of `objects` (sum of sinusoids, clamped to [-1, 1]).
Recording reconstruct(std::span<const SoundObject> objects, double sample_rate, double duration);

/// Same, with an explicit sample count.
Recording reconstruct_samples(std::span<const SoundObject> objects, double sample_rate, std::size_t length);

/// 1 - sum (o - r)^2 / sum o^2, clamped to [0, 1].
double reproduction_score(const Recording& original, const Recording& reconstructed);

}  // namespace soundobj
