#pragma once

#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "soundobj/audio_io.hpp"
#include "soundobj/model.hpp"
#include "soundobj/pipeline.hpp"
#include "soundobj/reference.hpp"
#include "soundobj/synth.hpp"

namespace soundobj {

inline constexpr int kSchemaVersion = 1;

/// { schema_version, source_id, sample_rate, objects: [ { initial_phase, points: [ {t, a, f} ] } ] }
std::string objects_to_json(std::span<const SoundObject> objects, std::string_view source_id, double sample_rate);
std::vector<SoundObject> objects_from_json(std::string_view text);

struct ReportExtras {
    std::vector<ValidationWarning> warnings;
    std::optional<std::vector<Placement>> placement;
    std::optional<double> reproduction_all;
    std::optional<double> reproduction_harmonic;
};

std::string feature_report_json(std::string_view source_id, const Analysis& analysis, const ReportExtras& extras = {});

std::string synth_spec_json(const SynthSpec& spec);
SynthSpec synth_spec_from_json(std::string_view text);
std::string ground_truth_json(const SynthSpec& spec, const GroundTruth& truth);

std::string cv_result_json(const CvResult& result);

/// Fixed-width text table with one row per model, metric columns as in the
/// published comparison.
std::string cv_summary_table(const CvResult& result);

/// Error payload written to stderr by the CLI.
std::string error_json(std::string_view code, std::string_view message);

struct DatasetRow {
    std::string source_id;
    BiomarkerVector features;
    std::string label;  // cohort name or 0/1
};

void write_dataset_csv(std::ostream& out, std::span<const DatasetRow> rows);
std::vector<DatasetRow> read_dataset_csv(std::istream& in);

/// Rows that take part in `scenario`, with binary labels.
LabeledDataset to_dataset(std::span<const DatasetRow> rows, Scenario scenario);

struct LabelEntry {
    std::string label;
    std::optional<Gender> gender;
    std::optional<double> age;
};

/// CSV with header source_id,label[,gender[,age]].
std::map<std::string, LabelEntry> read_labels_csv(std::istream& in);

/// Writes via a sibling temporary file and a rename.
void write_file_atomic(const std::filesystem::path& path, std::string_view content);
std::string read_file(const std::filesystem::path& path);

}  // namespace soundobj
