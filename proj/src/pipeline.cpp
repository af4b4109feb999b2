#include "soundobj/pipeline.hpp"

#include "soundobj/errors.hpp"
#include "soundobj/filterbank.hpp"

namespace soundobj {

std::vector<SoundObject> track_recording(const Recording& rec, const AnalysisOptions& options) {
    const FilterBank bank = FilterBank::standard(rec.sample_rate);
    const Spectrum spectrum = analyze(bank, rec, options.threads);
    return track_objects(spectrum, bank, options.tracker);
}

Analysis analyze_objects(std::vector<SoundObject> objects, const AnalysisOptions& options) {
    Analysis a;
    a.objects = std::move(objects);
    a.selected = select_significant(a.objects);
    a.fundamental = find_fundamental(a.objects, a.selected, options.divisor);
    a.grouping = group_objects(a.objects, a.fundamental.f1, a.selected);
    if (a.grouping.strong.empty()) throw Error(Errc::NoStrongHarmonics, "no harmonic reaches the strong share");

    if (!a.grouping.group(1).members.empty()) {
        const TimeWindow span = fundamental_span(a.objects, a.grouping);
        for (int h : a.grouping.strong) {
            if (h == 1) continue;
            a.shifts[h] = harmonic_shift_series(a.objects, a.grouping, h, span, options.shifts_per_section,
                                                options.section_seconds);
        }
    }
    try {
        a.phase = phase_stats(a.shifts);
    } catch (const Error& e) {
        if (e.code() != Errc::InsufficientShiftSamples) throw;
        a.phase = PhaseStats{};
        a.flags.phase_unavailable = true;
    }
    const bool phase_missing = a.flags.phase_unavailable;
    a.features = biomarkers(a.objects, a.grouping, a.phase, &a.flags);
    a.flags.phase_unavailable = phase_missing;
    a.windows = local_windows(a.objects, a.grouping, options.section_seconds);
    return a;
}

Analysis analyze_recording(const Recording& rec, const AnalysisOptions& options) {
    return analyze_objects(track_recording(rec, options), options);
}

}  // namespace soundobj
