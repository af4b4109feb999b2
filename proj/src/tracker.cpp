#include "soundobj/tracker.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <optional>

#include "soundobj/errors.hpp"
#include "soundobj/simd/kernels.hpp"

namespace soundobj {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

double wrap(double x) {
    x = std::remainder(x, kTwoPi);
    return x <= -std::numbers::pi ? x + kTwoPi : x;
}

struct Ridge {
    std::size_t frame;
    std::size_t band;
    double amplitude;
    double frequency;
    double phase;  // analytic (cosine) phase
};

struct Active {
    SoundObject obj;
    std::vector<double> phases;  // measured sine phase per point
    Ridge last;
    std::size_t next = 0;
};

double sine_phase(const Ridge& r) { return r.phase + std::numbers::pi / 2.0; }

// Initial phase that best explains every measured phase under the
// trapezoidal frequency integral; a single point near an edge can be off by
// a sizeable fraction of a radian.
double fitted_initial_phase(const SoundObject& obj, const std::vector<double>& phases) {
    std::complex<double> acc{};
    double integral = 0.0;
    for (std::size_t i = 0; i < obj.points.size(); ++i) {
        if (i > 0) {
            const auto& p = obj.points[i - 1];
            const auto& q = obj.points[i];
            integral += std::numbers::pi * (p.frequency + q.frequency) * (q.time - p.time);
        }
        acc += std::polar(obj.points[i].amplitude, phases[i] - integral);
    }
    return std::arg(acc);
}

class Sweep {
public:
    Sweep(const Spectrum& s, const FilterBank& bank, const TrackerConfig& cfg)
        : s_(s), bank_(bank), cfg_(cfg), bands_(s.bands()), fs_(s.sample_rate()),
          fpo_(bank.filters_per_octave()), claims_(bands_, 0), nsq_(bands_) {
        float peak = 0.0f;
        std::vector<float> row(bands_);
        for (std::size_t n = 0; n < s.frames(); ++n) {
            simd::active_kernels().norm_sq(s.frame(n), row);
            for (float v : row) peak = std::max(peak, v);
        }
        const double floor_amp = std::sqrt(static_cast<double>(peak)) * std::pow(10.0, cfg.floor_db / 20.0);
        floor_sq_ = static_cast<float>(floor_amp * floor_amp);
        silent_ = !(peak > 0.0f);
        hop_.resize(bands_);
        for (std::size_t k = 0; k < bands_; ++k) {
            hop_[k] = std::max<std::size_t>(1, static_cast<std::size_t>(std::floor(fs_ / bank.center(k) / 2.0)));
        }
    }

    std::vector<SoundObject> run() {
        std::vector<SoundObject> done;
        if (silent_ || bands_ < 3 || s_.frames() < 2) return done;
        const std::size_t frames = s_.frames();
        const auto settle = static_cast<std::size_t>(std::llround(cfg_.settle_seconds * fs_));
        std::vector<Active> active;
        std::vector<Active> kept;

        for (std::size_t n = 1; n < frames; ++n) {
            const bool seeding = n >= settle && n + settle < frames;
            bool due = false;
            for (const auto& a : active) due = due || a.next == n;
            if (!due && !seeding) continue;
            load_frame(n);

            if (due) {
                kept.clear();
                for (std::size_t i = 0; i < active.size(); ++i) {
                    Active& a = active[i];
                    if (a.next != n) {
                        kept.push_back(std::move(a));
                        continue;
                    }
                    release(a.last.band);
                    auto r = follow(n, a.last);
                    if (r && collides(*r, active, i, kept)) r.reset();
                    if (!r) {
                        finish(std::move(a), done);
                        continue;
                    }
                    const double dt = static_cast<double>(r->frame - a.last.frame) / fs_;
                    const double predicted = a.last.phase + std::numbers::pi * (a.last.frequency + r->frequency) * dt;
                    if (std::abs(wrap(r->phase - predicted)) > cfg_.phase_tolerance) {
                        finish(std::move(a), done);
                        kept.push_back(open(*r));
                        continue;
                    }
                    append(a, *r);
                    kept.push_back(std::move(a));
                }
                active.swap(kept);
            }

            if (seeding) {
                for (std::size_t k = 1; k + 1 < bands_; ++k) {
                    if (n % hop_[k] != 0 || claims_[k] > 0 || !is_ridge(k)) continue;
                    auto r = measure(n, k);
                    if (!r) continue;
                    Active a = open(*r);
                    if (n < settle + 2 * step(r->frequency)) extend_backward(a);
                    active.push_back(std::move(a));
                }
            }
        }
        for (auto& a : active) finish(std::move(a), done);

        std::stable_sort(done.begin(), done.end(), [](const SoundObject& x, const SoundObject& y) {
            if (x.start() != y.start()) return x.start() < y.start();
            return x.points.front().frequency < y.points.front().frequency;
        });
        return done;
    }

private:
    void load_frame(std::size_t n) {
        if (loaded_ == n) return;
        simd::active_kernels().norm_sq(s_.frame(n), nsq_);
        loaded_ = n;
    }

    bool is_ridge(std::size_t k) const {
        return nsq_[k] >= floor_sq_ && nsq_[k] >= nsq_[k - 1] && nsq_[k] > nsq_[k + 1];
    }

    std::size_t step(double f) const {
        return std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(cfg_.periods_per_step * fs_ / f)));
    }

    std::size_t nearest_band(double f) const {
        const double k = std::round(fpo_ * std::log2(f / bank_.center(0)));
        return static_cast<std::size_t>(std::clamp(k, 1.0, static_cast<double>(bands_ - 2)));
    }

    // Requires frame n loaded and k a ridge in it.
    std::optional<Ridge> measure(std::size_t n, std::size_t k) const {
        if (n == 0) return std::nullopt;
        constexpr float tiny = 1e-30f;
        const double l0 = 0.5 * std::log(std::max(nsq_[k - 1], tiny));
        const double l1 = 0.5 * std::log(std::max(nsq_[k], tiny));
        const double l2 = 0.5 * std::log(std::max(nsq_[k + 1], tiny));
        const double curv = l0 - 2.0 * l1 + l2;
        double delta = 0.0;
        if (curv < 0.0) delta = std::clamp(0.5 * (l0 - l2) / curv, -1.0, 1.0);
        const double amplitude = std::exp(l1 - 0.25 * (l0 - l2) * delta);
        const double f_ref = bank_.center(k) * std::exp2(delta / fpo_);

        const std::complex<double> z(s_.at(n, k));
        const std::complex<double> zp(s_.at(n - 1, k));
        if (std::norm(zp) <= 0.0 || std::norm(z) <= 0.0) return std::nullopt;
        const double f = std::arg(z * std::conj(zp)) * fs_ / kTwoPi;
        if (!(f > 0.0) || std::abs(std::log2(f / f_ref)) > 0.5 / fpo_) return std::nullopt;
        if (f < bank_.f_lo() || f > bank_.f_hi()) return std::nullopt;
        return Ridge{n, k, amplitude, f, std::arg(z)};
    }

    // Best ridge near the frequency of `prev`, in the loaded frame n.
    std::optional<Ridge> follow(std::size_t n, const Ridge& prev) const {
        const auto centre = static_cast<std::ptrdiff_t>(nearest_band(prev.frequency));
        std::optional<Ridge> best;
        double best_dist = 0.0;
        for (std::ptrdiff_t d = -cfg_.search_radius; d <= cfg_.search_radius; ++d) {
            const std::ptrdiff_t k = centre + d;
            if (k < 1 || k + 1 >= static_cast<std::ptrdiff_t>(bands_)) continue;
            if (!is_ridge(static_cast<std::size_t>(k))) continue;
            auto r = measure(n, static_cast<std::size_t>(k));
            if (!r) continue;
            const double dist = std::abs(std::log(r->frequency / prev.frequency));
            if (!best || dist < best_dist) {
                best = r;
                best_dist = dist;
            }
        }
        if (best && std::abs(best->frequency - prev.frequency) > cfg_.max_freq_step * prev.frequency) return std::nullopt;
        return best;
    }

    // Another live object already sits on this ridge.
    bool collides(const Ridge& r, const std::vector<Active>& active, std::size_t self,
                  const std::vector<Active>& kept) const {
        const auto near = [&](const Active& o) {
            const auto gap = static_cast<std::ptrdiff_t>(o.last.band) - static_cast<std::ptrdiff_t>(r.band);
            return std::abs(gap) <= 1 && std::abs(std::log2(o.last.frequency / r.frequency)) < 1.0 / fpo_;
        };
        for (const auto& o : kept) {
            if (near(o)) return true;
        }
        for (std::size_t j = self + 1; j < active.size(); ++j) {
            if (near(active[j])) return true;
        }
        return false;
    }

    void claim(std::size_t band, int delta) {
        const auto lo = static_cast<std::ptrdiff_t>(band) - cfg_.owner_radius;
        const auto hi = static_cast<std::ptrdiff_t>(band) + cfg_.owner_radius;
        for (std::ptrdiff_t k = std::max<std::ptrdiff_t>(lo, 0); k <= hi && k < static_cast<std::ptrdiff_t>(bands_); ++k) {
            claims_[static_cast<std::size_t>(k)] += delta;
        }
    }
    void release(std::size_t band) { claim(band, -1); }

    ObjectPoint point(const Ridge& r) const {
        return {static_cast<double>(r.frame) / fs_, r.amplitude, r.frequency};
    }

    Active open(const Ridge& r) {
        Active a;
        a.obj.points.push_back(point(r));
        a.phases.push_back(sine_phase(r));
        a.last = r;
        a.next = r.frame + step(r.frequency);
        claim(r.band, +1);
        return a;
    }

    void append(Active& a, const Ridge& r) {
        a.obj.points.push_back(point(r));
        a.phases.push_back(sine_phase(r));
        a.last = r;
        a.next = r.frame + step(r.frequency);
        claim(r.band, +1);
    }

    // Walks an onset object back toward the first sample under the same rules.
    void extend_backward(Active& a) {
        std::vector<Ridge> before;
        Ridge cur{a.last};
        while (true) {
            const std::size_t h = step(cur.frequency);
            if (cur.frame <= h) break;
            const std::size_t n = cur.frame - h;
            load_frame(n);
            auto r = follow(n, cur);
            if (!r) break;
            const double dt = static_cast<double>(cur.frame - n) / fs_;
            const double predicted = cur.phase - std::numbers::pi * (cur.frequency + r->frequency) * dt;
            if (std::abs(wrap(r->phase - predicted)) > cfg_.phase_tolerance) break;
            before.push_back(*r);
            cur = *r;
        }
        if (before.empty()) return;
        const std::size_t resume = a.last.frame;
        std::vector<ObjectPoint> pts;
        pts.reserve(before.size() + a.obj.points.size());
        for (auto it = before.rbegin(); it != before.rend(); ++it) pts.push_back(point(*it));
        pts.insert(pts.end(), a.obj.points.begin(), a.obj.points.end());
        a.obj.points = std::move(pts);
        std::vector<double> phases;
        phases.reserve(a.obj.points.size());
        for (auto it = before.rbegin(); it != before.rend(); ++it) phases.push_back(sine_phase(*it));
        phases.insert(phases.end(), a.phases.begin(), a.phases.end());
        a.phases = std::move(phases);
        load_frame(resume);
    }

    void finish(Active&& a, std::vector<SoundObject>& done) const {
        if (a.obj.points.size() < cfg_.min_points) return;
        a.obj.initial_phase = fitted_initial_phase(a.obj, a.phases);
        done.push_back(std::move(a.obj));
    }

    const Spectrum& s_;
    const FilterBank& bank_;
    const TrackerConfig& cfg_;
    std::size_t bands_;
    double fs_;
    double fpo_;
    std::vector<int> claims_;
    std::vector<float> nsq_;
    std::vector<std::size_t> hop_;
    std::size_t loaded_ = static_cast<std::size_t>(-1);
    float floor_sq_ = 0.0f;
    bool silent_ = true;
};

}  // namespace

double SoundObject::energy() const {
    const std::size_t n = points.size();
    if (n < 2) return 0.0;
    double e = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double lo = points[i == 0 ? 0 : i - 1].time;
        const double hi = points[i + 1 == n ? i : i + 1].time;
        e += points[i].amplitude * points[i].amplitude * 0.5 * (hi - lo);
    }
    return e;
}

double SoundObject::mean_frequency() const {
    if (points.empty()) return 0.0;
    double s = 0.0;
    for (const auto& p : points) s += p.frequency;
    return s / static_cast<double>(points.size());
}

double SoundObject::mean_amplitude() const {
    if (points.empty()) return 0.0;
    double s = 0.0;
    for (const auto& p : points) s += p.amplitude;
    return s / static_cast<double>(points.size());
}

ObjectEvaluator::ObjectEvaluator(const SoundObject& obj) : obj_(&obj) {
    const auto& p = obj.points;
    phase_at_point_.resize(p.size());
    if (p.empty()) return;
    phase_at_point_[0] = obj.initial_phase;
    for (std::size_t i = 1; i < p.size(); ++i) {
        const double dt = p[i].time - p[i - 1].time;
        phase_at_point_[i] = phase_at_point_[i - 1] + std::numbers::pi * (p[i - 1].frequency + p[i].frequency) * dt;
    }
}

bool ObjectEvaluator::covers(double t) const noexcept {
    const auto& p = obj_->points;
    return !p.empty() && t >= p.front().time && t <= p.back().time;
}

ObjectEvaluator::State ObjectEvaluator::at(double t) const {
    const auto& p = obj_->points;
    if (p.empty()) throw Error(Errc::InvalidArgument, "empty object");
    if (p.size() == 1 || t <= p.front().time) {
        const double tau = t - p.front().time;
        return {p.front().amplitude, p.front().frequency, phase_at_point_.front() + kTwoPi * p.front().frequency * tau};
    }
    auto it = std::upper_bound(p.begin(), p.end(), t, [](double v, const ObjectPoint& q) { return v < q.time; });
    std::size_t i = static_cast<std::size_t>(it - p.begin());
    i = std::min(i, p.size() - 1);
    const std::size_t a = i - 1;
    const double span = p[i].time - p[a].time;
    const double tau = t - p[a].time;
    if (tau > span) {
        const double extra = tau - span;
        return {p[i].amplitude, p[i].frequency, phase_at_point_[i] + kTwoPi * p[i].frequency * extra};
    }
    const double u = tau / span;
    const double df = p[i].frequency - p[a].frequency;
    return {p[a].amplitude + (p[i].amplitude - p[a].amplitude) * u, p[a].frequency + df * u,
            phase_at_point_[a] + kTwoPi * (p[a].frequency * tau + 0.5 * df * tau * u)};
}

std::vector<SoundObject> track_objects(const Spectrum& spectrum, const FilterBank& bank, const TrackerConfig& config) {
    if (spectrum.empty()) return {};
    if (spectrum.bands() != bank.size()) {
        throw Error(Errc::InvalidArgument, "spectrum has " + std::to_string(spectrum.bands()) + " bands, bank has " +
                                               std::to_string(bank.size()));
    }
    return Sweep(spectrum, bank, config).run();
}

Recording reconstruct_samples(std::span<const SoundObject> objects, double sample_rate, std::size_t length) {
    Recording out;
    out.sample_rate = sample_rate;
    out.source_id = "reconstruction";
    out.samples.assign(length, 0.0);
    for (const auto& obj : objects) {
        const auto& p = obj.points;
        if (p.size() < 2) continue;
        double phase0 = obj.initial_phase;  // sine phase at p[seg]
        std::size_t seg = 0;
        auto first = static_cast<std::ptrdiff_t>(std::ceil(p.front().time * sample_rate - 1e-9));
        for (auto s = static_cast<std::size_t>(std::max<std::ptrdiff_t>(first, 0)); s < length; ++s) {
            const double t = static_cast<double>(s) / sample_rate;
            if (t > p.back().time + 1e-12) break;
            while (seg + 2 < p.size() && t > p[seg + 1].time) {
                phase0 += std::numbers::pi * (p[seg].frequency + p[seg + 1].frequency) * (p[seg + 1].time - p[seg].time);
                ++seg;
            }
            const double span = p[seg + 1].time - p[seg].time;
            const double tau = t - p[seg].time;
            const double u = span > 0.0 ? tau / span : 0.0;
            const double df = p[seg + 1].frequency - p[seg].frequency;
            const double amp = p[seg].amplitude + (p[seg + 1].amplitude - p[seg].amplitude) * u;
            out.samples[s] += amp * std::sin(phase0 + kTwoPi * (p[seg].frequency * tau + 0.5 * df * tau * u));
        }
    }
    for (auto& v : out.samples) v = std::clamp(v, -1.0, 1.0);
    return out;
}

Recording reconstruct(std::span<const SoundObject> objects, double sample_rate, double duration) {
    const auto length = static_cast<std::size_t>(std::max(0.0, std::round(duration * sample_rate)));
    return reconstruct_samples(objects, sample_rate, length);
}

double reproduction_score(const Recording& original, const Recording& reconstructed) {
    if (original.samples.size() != reconstructed.samples.size() ||
        original.sample_rate != reconstructed.sample_rate) {
        throw Error(Errc::LengthMismatch, std::to_string(original.samples.size()) + " vs " +
                                              std::to_string(reconstructed.samples.size()) + " samples");
    }
    double err = 0.0;
    double ref = 0.0;
    simd::active_kernels().residual_energy(original.samples, reconstructed.samples, &err, &ref);
    if (ref <= 0.0) return err <= 0.0 ? 1.0 : 0.0;
    return std::clamp(1.0 - err / ref, 0.0, 1.0);
}

}  // namespace soundobj
