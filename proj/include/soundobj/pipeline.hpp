#pragma once

#include <map>
#include <vector>

#include "soundobj/audio_io.hpp"
#include "soundobj/features.hpp"
#include "soundobj/tracker.hpp"

namespace soundobj {

struct AnalysisOptions {
    TrackerConfig tracker;
    DivisorSearch divisor;
    unsigned threads = 0;          // filter-bank workers, 0 = all cores
    std::size_t shifts_per_section = 8;
    double section_seconds = 0.2;
};

struct Analysis {
    std::vector<SoundObject> objects;
    std::vector<std::size_t> selected;
    Fundamental fundamental;
    HarmonicGrouping grouping;
    std::map<int, std::vector<double>> shifts;  // strong overtones only
    PhaseStats phase;
    BiomarkerVector features;
    FeatureFlags flags;
    std::vector<LocalWindow> windows;
};

/// Filter bank and tracker only.
std::vector<SoundObject> track_recording(const Recording& rec, const AnalysisOptions& options = {});

/// Stages two to four on an existing object set.
Analysis analyze_objects(std::vector<SoundObject> objects, const AnalysisOptions& options = {});

/// Whole chain. Throws NoHarmonicStructure / NoStrongHarmonics when the
/// recording has no usable harmonic group.
Analysis analyze_recording(const Recording& rec, const AnalysisOptions& options = {});

}  // namespace soundobj
