#include "soundobj/features.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <optional>
#include <numbers>
#include <numeric>

#include "soundobj/errors.hpp"

namespace soundobj {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

double wrap(double x) {
    x = std::remainder(x, kTwoPi);
    return x <= -std::numbers::pi ? x + kTwoPi : x;
}

struct Moments {
    double mean = 0.0;
    double std = 0.0;
    double total_variation = 0.0;  // per step
    double slope = 0.0;            // OLS against time
};

template <typename Get>
Moments moments(const std::vector<ObjectPoint>& p, Get get) {
    const auto n = static_cast<double>(p.size());
    Moments m;
    double tmean = 0.0;
    for (const auto& q : p) {
        m.mean += get(q);
        tmean += q.time;
    }
    m.mean /= n;
    tmean /= n;
    double var = 0.0;
    double sxy = 0.0;
    double sxx = 0.0;
    for (const auto& q : p) {
        const double dv = get(q) - m.mean;
        const double dt = q.time - tmean;
        var += dv * dv;
        sxy += dt * dv;
        sxx += dt * dt;
    }
    m.std = std::sqrt(var / n);
    m.slope = sxx > 0.0 ? sxy / sxx : 0.0;
    for (std::size_t i = 1; i < p.size(); ++i) m.total_variation += std::abs(get(p[i]) - get(p[i - 1]));
    m.total_variation /= n - 1.0;
    return m;
}

double supported_energy(std::span<const double> freqs, std::span<const double> energy, double d) {
    double s = 0.0;
    for (std::size_t i = 0; i < freqs.size(); ++i) {
        const double r = std::round(freqs[i] / d);
        if (r >= 1.0 && std::abs(freqs[i] - r * d) <= kHarmonicTolerance * freqs[i]) s += energy[i];
    }
    return s;
}

struct Plateau {
    double lo;
    double hi;
    double score;
};

// Scans [lo, hi] in `step` increments and returns the run of maximal score
// (within `tie`) with the largest divisor.
Plateau best_plateau(std::span<const double> freqs, std::span<const double> energy, double lo, double hi,
                     double step, double tie) {
    const auto count = static_cast<std::size_t>(std::floor((hi - lo) / step + 1e-9)) + 1;
    std::vector<double> score(count);
    double best = -1.0;
    for (std::size_t j = 0; j < count; ++j) {
        score[j] = supported_energy(freqs, energy, lo + static_cast<double>(j) * step);
        best = std::max(best, score[j]);
    }
    std::size_t end = count;
    while (end > 0 && score[end - 1] < best - tie) --end;
    std::size_t begin = end - 1;
    while (begin > 0 && score[begin - 1] >= best - tie) --begin;
    return {lo + static_cast<double>(begin) * step, lo + static_cast<double>(end - 1) * step, best};
}

std::vector<ObjectEvaluator> evaluators(std::span<const SoundObject> objects, const HarmonicGroup& g) {
    std::vector<ObjectEvaluator> out;
    out.reserve(g.members.size());
    for (std::size_t i : g.members) out.emplace_back(objects[i]);
    return out;
}

std::optional<std::complex<double>> resultant(const std::vector<ObjectEvaluator>& evals, double t) {
    std::complex<double> z{};
    bool any = false;
    for (const auto& e : evals) {
        if (!e.covers(t)) continue;
        const auto s = e.at(t);
        z += std::polar(s.amplitude, s.phase);
        any = true;
    }
    if (!any) return std::nullopt;
    return z;
}

}  // namespace

ObjectStats object_stats(const SoundObject& obj) {
    if (obj.points.size() < 3) {
        throw Error(Errc::TooFewPoints, std::to_string(obj.points.size()) + " points, need 3");
    }
    const auto amp = moments(obj.points, [](const ObjectPoint& q) { return q.amplitude; });
    const auto freq = moments(obj.points, [](const ObjectPoint& q) { return q.frequency; });
    ObjectStats s;
    s.mean_amp = amp.mean;
    s.std_amp_pct = 100.0 * amp.std / amp.mean;
    s.shimmer_pct = 100.0 * amp.total_variation / amp.mean;
    s.amp_slope_pct_per_s = 100.0 * std::abs(amp.slope) / amp.mean;
    s.mean_freq = freq.mean;
    s.std_freq_pct = 100.0 * freq.std / freq.mean;
    s.jitter_pct = 100.0 * freq.total_variation / freq.mean;
    s.freq_slope_pct_per_s = 100.0 * std::abs(freq.slope) / freq.mean;
    s.energy = obj.energy();
    s.duration = obj.duration();
    s.point_count = obj.points.size();
    return s;
}

std::vector<std::size_t> select_significant(std::span<const SoundObject> objects) {
    double total = 0.0;
    std::vector<double> e(objects.size());
    for (std::size_t i = 0; i < objects.size(); ++i) total += e[i] = objects[i].energy();
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < objects.size(); ++i) {
        if (e[i] > kSignificantEnergy * total || objects[i].duration() > kSignificantDuration) out.push_back(i);
    }
    return out;
}

Fundamental find_fundamental(std::span<const SoundObject> objects, std::span<const std::size_t> selected,
                             const DivisorSearch& search) {
    std::vector<double> freqs;
    std::vector<double> energy;
    for (std::size_t i : selected) {
        freqs.push_back(objects[i].mean_frequency());
        energy.push_back(objects[i].energy());
    }
    const double total = std::accumulate(energy.begin(), energy.end(), 0.0);
    if (freqs.empty() || !(total > 0.0)) throw Error(Errc::NoHarmonicStructure, "no significant objects");
    const double eps = 1e-12 * total;
    const double tie = std::max(search.tie_share * total, eps);

    const Plateau coarse = best_plateau(freqs, energy, search.min_hz, search.max_hz, search.coarse_step, tie);
    if (coarse.score < search.min_share * total - eps) {
        throw Error(Errc::NoHarmonicStructure,
                    "best divisor explains " + std::to_string(100.0 * coarse.score / total) + "% of the energy");
    }
    const double lo = std::max(search.min_hz, coarse.lo - search.coarse_step);
    const double hi = std::min(search.max_hz, coarse.hi + search.coarse_step);
    Plateau fine = best_plateau(freqs, energy, lo, hi, search.fine_step, tie);
    if (fine.score < coarse.score - tie) fine = coarse;
    const double mid = 0.5 * (fine.lo + fine.hi);

    // Least-squares polish with the harmonic numbers fixed at the plateau midpoint.
    double num = 0.0;
    double den = 0.0;
    for (std::size_t i = 0; i < freqs.size(); ++i) {
        const double r = std::round(freqs[i] / mid);
        if (r >= 1.0 && std::abs(freqs[i] - r * mid) <= kHarmonicTolerance * freqs[i]) {
            num += energy[i] * freqs[i] * r;
            den += energy[i] * r * r;
        }
    }
    Fundamental out;
    out.f1 = den > 0.0 ? num / den : mid;
    if (supported_energy(freqs, energy, out.f1) < fine.score - tie) out.f1 = mid;
    for (std::size_t j = 0; j < freqs.size(); ++j) {
        const double r = std::round(freqs[j] / out.f1);
        if (r >= 1.0 && std::abs(freqs[j] - r * out.f1) <= kHarmonicTolerance * freqs[j]) {
            out.supporters.push_back(selected[j]);
            out.support_share += energy[j];
        }
    }
    out.support_share /= total;
    return out;
}

Fundamental find_fundamental(std::span<const SoundObject> selected, const DivisorSearch& search) {
    std::vector<std::size_t> all(selected.size());
    std::iota(all.begin(), all.end(), std::size_t{0});
    return find_fundamental(selected, all, search);
}

bool HarmonicGrouping::is_strong(int h) const {
    return std::binary_search(strong.begin(), strong.end(), h);
}

double HarmonicGrouping::strong_energy() const {
    double e = 0.0;
    for (int h : strong) e += group(h).energy;
    return e;
}

double HarmonicGrouping::weak_energy() const {
    double e = 0.0;
    for (int h : weak) e += group(h).energy;
    return e;
}

double HarmonicGrouping::subharmonic_energy() const {
    double e = 0.0;
    for (std::size_t i : subharmonics) e += object_energy[i];
    return e;
}

double HarmonicGrouping::noise_energy() const {
    double e = 0.0;
    for (const auto* band : {&noise_low, &noise_mid, &noise_high}) {
        for (std::size_t i : *band) e += object_energy[i];
    }
    return e;
}

HarmonicGrouping group_objects(std::span<const SoundObject> objects, double f1, std::span<const std::size_t> selected) {
    if (!(f1 > 0.0)) throw Error(Errc::InvalidArgument, "fundamental must be positive");
    HarmonicGrouping g;
    g.f1 = f1;
    g.object_energy.resize(objects.size());
    std::vector<bool> is_selected(objects.size(), false);
    for (std::size_t i : selected) is_selected.at(i) = true;

    for (std::size_t i = 0; i < objects.size(); ++i) {
        const double e = objects[i].energy();
        g.object_energy[i] = e;
        g.total_energy += e;
        const double f = objects[i].mean_frequency();
        const double r = std::round(f / f1);
        if (r >= 1.0 && r <= kMaxHarmonic && std::abs(f - r * f1) <= kHarmonicTolerance * r * f1) {
            auto& grp = g.harmonics[static_cast<std::size_t>(r) - 1];
            grp.members.push_back(i);
            grp.energy += e;
        } else if (is_selected[i]) {
            g.subharmonics.push_back(i);
        } else if (f < 200.0) {
            g.noise_low.push_back(i);
        } else if (f <= 2000.0) {
            g.noise_mid.push_back(i);
        } else {
            g.noise_high.push_back(i);
        }
    }
    for (int h = 1; h <= kMaxHarmonic; ++h) {
        const auto& grp = g.group(h);
        if (grp.members.empty()) continue;
        if (h == 1 || grp.energy >= kStrongHarmonicShare * g.total_energy) {
            g.strong.push_back(h);
        } else {
            g.weak.push_back(h);
        }
    }
    return g;
}

TimeWindow fundamental_span(std::span<const SoundObject> objects, const HarmonicGrouping& grouping) {
    const auto& g = grouping.group(1);
    if (g.members.empty()) throw Error(Errc::NoFundamental, "fundamental group is empty");
    TimeWindow w{objects[g.members.front()].start(), objects[g.members.front()].end()};
    for (std::size_t i : g.members) {
        w.begin = std::min(w.begin, objects[i].start());
        w.end = std::max(w.end, objects[i].end());
    }
    return w;
}

std::vector<double> harmonic_shift_series(std::span<const SoundObject> objects, const HarmonicGrouping& grouping,
                                          int h, TimeWindow window, std::size_t per_section, double section) {
    if (h < 1 || h > kMaxHarmonic) throw Error(Errc::IndexOutOfRange, "harmonic " + std::to_string(h));
    if (grouping.group(1).members.empty()) throw Error(Errc::NoFundamental, "fundamental group is empty");
    const auto f1_eval = evaluators(objects, grouping.group(1));
    const auto h_eval = evaluators(objects, grouping.group(h));

    // Zero upcrossings of the fundamental's resultant sine phase.
    std::vector<double> crossings;
    const double dt = 1.0 / (16.0 * grouping.f1);
    std::optional<double> prev_phase;
    double unwrapped = 0.0;
    double prev_t = window.begin;
    for (double t = window.begin; t <= window.end; t += dt) {
        const auto z = resultant(f1_eval, t);
        if (!z || std::abs(*z) <= 0.0) {
            prev_phase.reset();
            continue;
        }
        const double ph = std::arg(*z);
        if (!prev_phase) {
            unwrapped = ph;
        } else {
            const double next = unwrapped + wrap(ph - *prev_phase);
            const double cycle = std::floor(next / kTwoPi);
            if (cycle > std::floor(unwrapped / kTwoPi)) {
                const double target = cycle * kTwoPi;
                crossings.push_back(prev_t + (t - prev_t) * (target - unwrapped) / (next - unwrapped));
            }
            unwrapped = next;
        }
        prev_phase = ph;
        prev_t = t;
    }

    // Thin to at most per_section samples in each section, evenly spread.
    std::vector<double> picked;
    for (std::size_t a = 0; a < crossings.size();) {
        const auto sec = std::floor((crossings[a] - window.begin) / section);
        std::size_t b = a;
        while (b < crossings.size() && std::floor((crossings[b] - window.begin) / section) == sec) ++b;
        const std::size_t n = b - a;
        if (n <= per_section) {
            picked.insert(picked.end(), crossings.begin() + static_cast<std::ptrdiff_t>(a),
                          crossings.begin() + static_cast<std::ptrdiff_t>(b));
        } else {
            for (std::size_t i = 0; i < per_section; ++i) picked.push_back(crossings[a + (2 * i + 1) * n / (2 * per_section)]);
        }
        a = b;
    }

    std::vector<double> shifts;
    for (double t : picked) {
        const auto z = resultant(h_eval, t);
        if (z && std::abs(*z) > 0.0) shifts.push_back(wrap(std::arg(*z)));
    }
    return shifts;
}

PhaseStats phase_stats(const std::map<int, std::vector<double>>& series) {
    PhaseStats out;
    std::complex<double> pooled{};
    std::size_t pooled_n = 0;
    double drift_sum = 0.0;
    std::size_t drift_n = 0;
    for (const auto& [h, s] : series) {
        if (h < 2 || s.size() < 2) continue;
        std::complex<double> c{};
        for (double v : s) c += std::polar(1.0, v);
        const double mean = std::arg(c);
        out.mean_shift[h] = wrap(mean);
        for (double v : s) pooled += std::polar(1.0, wrap(v - mean));
        pooled_n += s.size();
        double tv = 0.0;
        for (std::size_t i = 1; i < s.size(); ++i) tv += std::abs(wrap(s[i] - s[i - 1]));
        drift_sum += tv / static_cast<double>(s.size() - 1);
        ++drift_n;
    }
    if (drift_n == 0) throw Error(Errc::InsufficientShiftSamples, "no overtone with two shift samples");
    const double r = std::min(1.0, std::abs(pooled) / static_cast<double>(pooled_n));
    out.shift_std = r > 0.0 ? std::sqrt(-2.0 * std::log(r)) : std::numeric_limits<double>::infinity();
    out.drift = drift_sum / static_cast<double>(drift_n);
    return out;
}

const std::array<std::string_view, BiomarkerVector::kCount>& BiomarkerVector::names() {
    static constexpr std::array<std::string_view, kCount> n{
        "amp_std",      "shimmer",       "amp_slope",  "freq_std",  "jitter", "freq_slope", "phase_std",
        "phase_drift", "obj_per_harm", "subharm_count", "e_low_harm", "e_subharm", "hnr",  "fq_tilt"};
    return n;
}

std::array<double, BiomarkerVector::kCount> BiomarkerVector::values() const {
    return {amp_std,      shimmer,       amp_slope,  freq_std,  jitter, freq_slope, phase_std,
            phase_drift, obj_per_harm, subharm_count, e_low_harm, e_subharm, hnr,  fq_tilt};
}

double& BiomarkerVector::operator[](std::size_t i) {
    double* f[kCount] = {&amp_std,      &shimmer,       &amp_slope,  &freq_std,  &jitter, &freq_slope, &phase_std,
                         &phase_drift, &obj_per_harm, &subharm_count, &e_low_harm, &e_subharm, &hnr,  &fq_tilt};
    if (i >= kCount) throw Error(Errc::IndexOutOfRange, "feature " + std::to_string(i));
    return *f[i];
}

double BiomarkerVector::operator[](std::size_t i) const {
    return const_cast<BiomarkerVector&>(*this)[i];
}

std::optional<std::size_t> feature_index(std::string_view name) {
    const auto& n = BiomarkerVector::names();
    for (std::size_t i = 0; i < n.size(); ++i) {
        if (n[i] == name) return i;
    }
    return std::nullopt;
}

BiomarkerVector biomarkers(std::span<const SoundObject> objects, const HarmonicGrouping& grouping,
                           const PhaseStats& phase, FeatureFlags* flags) {
    if (grouping.strong.empty()) throw Error(Errc::NoStrongHarmonics, "no harmonic reaches the strong share");
    BiomarkerVector v;
    double wsum = 0.0;
    std::size_t members = 0;
    for (int h : grouping.strong) {
        for (std::size_t i : grouping.group(h).members) {
            const ObjectStats s = object_stats(objects[i]);
            const double w = s.energy;
            v.amp_std += w * s.std_amp_pct;
            v.shimmer += w * s.shimmer_pct;
            v.amp_slope += w * s.amp_slope_pct_per_s;
            v.freq_std += w * s.std_freq_pct;
            v.jitter += w * s.jitter_pct;
            v.freq_slope += w * s.freq_slope_pct_per_s;
            wsum += w;
            ++members;
        }
    }
    if (wsum > 0.0) {
        for (double* f : {&v.amp_std, &v.shimmer, &v.amp_slope, &v.freq_std, &v.jitter, &v.freq_slope}) *f /= wsum;
    }
    v.phase_std = phase.shift_std;
    v.phase_drift = phase.drift;
    v.obj_per_harm = static_cast<double>(members) / static_cast<double>(grouping.strong.size());

    const double total = grouping.total_energy;
    std::size_t sub = 0;
    for (std::size_t i : grouping.subharmonics) sub += grouping.object_energy[i] > kSignificantEnergy * total ? 1 : 0;
    v.subharm_count = static_cast<double>(sub);
    v.e_low_harm = std::clamp(100.0 * grouping.strong_energy() / total, 0.0, 100.0);
    v.e_subharm = std::clamp(100.0 * grouping.subharmonic_energy() / total, 0.0, 100.0 - v.e_low_harm);

    const double rest = grouping.noise_energy() + grouping.subharmonic_energy();
    bool capped = false;
    if (rest < 1e-9 * total) {
        v.hnr = kHnrCap;
        capped = true;
    } else {
        v.hnr = std::min(kHnrCap, grouping.harmonic_energy() / rest);
        capped = v.hnr >= kHnrCap;
    }

    if (grouping.strong.size() >= 2) {
        double hm = 0.0;
        double em = 0.0;
        for (int h : grouping.strong) {
            hm += h;
            em += std::log10(grouping.group(h).energy);
        }
        const auto n = static_cast<double>(grouping.strong.size());
        hm /= n;
        em /= n;
        double sxy = 0.0;
        double sxx = 0.0;
        for (int h : grouping.strong) {
            sxy += (h - hm) * (std::log10(grouping.group(h).energy) - em);
            sxx += (h - hm) * (h - hm);
        }
        v.fq_tilt = sxy / sxx;
    }
    if (flags != nullptr) flags->hnr_capped = capped;
    return v;
}

std::vector<LocalWindow> local_windows(std::span<const SoundObject> objects, const HarmonicGrouping& grouping,
                                       double width) {
    std::vector<std::size_t> members;
    for (int h : grouping.strong) {
        const auto& m = grouping.group(h).members;
        members.insert(members.end(), m.begin(), m.end());
    }
    std::vector<LocalWindow> out;
    if (members.empty() || !(width > 0.0)) return out;
    double begin = objects[members.front()].start();
    double end = objects[members.front()].end();
    for (std::size_t i : members) {
        begin = std::min(begin, objects[i].start());
        end = std::max(end, objects[i].end());
    }
    for (double t = begin; t < end; t += width) {
        LocalWindow lw;
        lw.window = {t, std::min(end, t + width)};
        double wsum = 0.0;
        for (std::size_t i : members) {
            SoundObject part;
            for (const auto& p : objects[i].points) {
                if (p.time >= lw.window.begin && p.time < lw.window.begin + width) part.points.push_back(p);
            }
            if (part.points.size() < 3) continue;
            const ObjectStats s = object_stats(part);
            lw.amp_std += s.energy * s.std_amp_pct;
            lw.shimmer += s.energy * s.shimmer_pct;
            lw.freq_std += s.energy * s.std_freq_pct;
            lw.jitter += s.energy * s.jitter_pct;
            wsum += s.energy;
            ++lw.objects;
        }
        if (wsum > 0.0) {
            lw.amp_std /= wsum;
            lw.shimmer /= wsum;
            lw.freq_std /= wsum;
            lw.jitter /= wsum;
        }
        out.push_back(lw);
    }
    return out;
}

}  // namespace soundobj
