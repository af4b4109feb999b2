#include "cli.hpp"

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <mutex>
#include <optional>
#include <sstream>
#include <thread>

#include <CLI11.hpp>
#include <json.hpp>

#include "soundobj/audio_io.hpp"
#include "soundobj/errors.hpp"
#include "soundobj/filterbank.hpp"
#include "soundobj/json_io.hpp"
#include "soundobj/model.hpp"
#include "soundobj/pipeline.hpp"
#include "soundobj/reference.hpp"
#include "soundobj/synth.hpp"

namespace soundobj::cli {

namespace {

namespace fs = std::filesystem;
using json = nlohmann::json;

constexpr const char* kReferenceEnv = "SOUNDOBJ_REFERENCE";

class UsageError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

bool is_domain_failure(Errc c) { return c == Errc::NoHarmonicStructure || c == Errc::NoStrongHarmonics; }

std::optional<fs::path> reference_path(const std::string& flag) {
    if (!flag.empty()) return fs::path(flag);
    if (const char* env = std::getenv(kReferenceEnv); env != nullptr && *env != '\0') return fs::path(env);
    return std::nullopt;
}

ReferenceRanges resolve_reference(const std::string& flag) {
    if (auto p = reference_path(flag)) return ReferenceRanges::load(*p);
    return ReferenceRanges::builtin();
}

std::vector<std::uint64_t> parse_seeds(const std::string& text) {
    std::vector<std::uint64_t> seeds;
    std::stringstream ss(text);
    std::string part;
    try {
        while (std::getline(ss, part, ',')) {
            if (part.empty()) continue;
            if (const auto dots = part.find(".."); dots != std::string::npos) {
                const auto lo = std::stoull(part.substr(0, dots));
                const auto hi = std::stoull(part.substr(dots + 2));
                if (hi < lo) throw UsageError("empty seed range " + part);
                for (auto s = lo; s <= hi; ++s) seeds.push_back(s);
            } else {
                seeds.push_back(std::stoull(part));
            }
        }
    } catch (const std::logic_error&) {
        throw UsageError("cannot parse seeds '" + text + "'");
    }
    if (seeds.empty()) throw UsageError("no seeds given");
    return seeds;
}

std::vector<double> parse_list(const std::string& text) {
    std::vector<double> out;
    std::stringstream ss(text);
    std::string part;
    try {
        while (std::getline(ss, part, ',')) {
            if (!part.empty()) out.push_back(std::stod(part));
        }
    } catch (const std::logic_error&) {
        throw UsageError("cannot parse list '" + text + "'");
    }
    return out;
}

void emit(const std::string& path, const std::string& content, std::ostream& out) {
    if (path.empty() || path == "-") {
        out << content << "\n";
    } else {
        write_file_atomic(path, content + "\n");
    }
}

double harmonic_reproduction(const Analysis& a, const Recording& rec) {
    std::vector<SoundObject> harm;
    for (int h = 1; h <= kMaxHarmonic; ++h) {
        for (std::size_t i : a.grouping.group(h).members) harm.push_back(a.objects[i]);
    }
    return reproduction_score(rec, reconstruct_samples(harm, rec.sample_rate, rec.samples.size()));
}

// ---------------------------------------------------------------- analyze

struct AnalyzeArgs {
    std::string wav;
    std::string json_out;
    std::string objects_out;
    std::string band_csv;
    std::string bands = "0,48,96,144,192,240,288,336";
    std::size_t decimation = 1;
    std::string reconstruct_out;
    std::string reference;
    bool use_reference = false;
    bool reproduction = false;
    unsigned threads = 0;
};

int cmd_analyze(const AnalyzeArgs& args, std::ostream& out, std::ostream& err) {
    const Recording rec = load_wav(args.wav);
    AnalysisOptions opt;
    opt.threads = args.threads;

    const FilterBank bank = FilterBank::standard(rec.sample_rate);
    std::vector<SoundObject> objects;
    {
        const Spectrum spectrum = analyze(bank, rec, opt.threads);
        if (!args.band_csv.empty()) {
            std::vector<std::size_t> filters;
            for (double b : parse_list(args.bands)) filters.push_back(static_cast<std::size_t>(b));
            std::ostringstream csv;
            write_band_csv(csv, spectrum, bank, filters, std::max<std::size_t>(1, args.decimation));
            write_file_atomic(args.band_csv, csv.str());
        }
        objects = track_objects(spectrum, bank, opt.tracker);
    }
    if (!args.objects_out.empty()) write_file_atomic(args.objects_out, objects_to_json(objects, rec.source_id, rec.sample_rate));
    if (!args.reconstruct_out.empty()) write_wav(args.reconstruct_out, reconstruct_samples(objects, rec.sample_rate, rec.samples.size()));

    const Analysis a = analyze_objects(std::move(objects), opt);
    ReportExtras extras;
    extras.warnings = validate_recording(rec);
    if (args.use_reference || reference_path(args.reference)) {
        extras.placement = compare_to_reference(a.features, resolve_reference(args.reference));
    }
    if (args.reproduction) {
        extras.reproduction_all = reproduction_score(rec, reconstruct_samples(a.objects, rec.sample_rate, rec.samples.size()));
        extras.reproduction_harmonic = harmonic_reproduction(a, rec);
    }
    emit(args.json_out, feature_report_json(rec.source_id, a, extras), out);
    (void)err;
    return kExitOk;
}

// ---------------------------------------------------------------- batch

struct BatchArgs {
    std::string dir;
    std::string labels;
    std::string out_csv;
    std::string failures;
    unsigned jobs = 1;
};

int cmd_batch(const BatchArgs& args, std::ostream& out, std::ostream& err) {
    if (!fs::is_directory(args.dir)) throw UsageError("not a directory: " + args.dir);
    std::ifstream lf(args.labels);
    if (!lf) throw Error(Errc::UnreadableFile, "cannot open " + args.labels);
    const auto labels = read_labels_csv(lf);

    std::vector<fs::path> wavs;
    for (const auto& e : fs::directory_iterator(args.dir)) {
        auto ext = e.path().extension().string();
        std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
        if (e.is_regular_file() && ext == ".wav") wavs.push_back(e.path());
    }
    std::sort(wavs.begin(), wavs.end());

    struct Outcome {
        std::optional<DatasetRow> row;
        std::string code;
        std::string message;
    };
    std::vector<Outcome> outcomes(wavs.size());
    std::atomic<std::size_t> cursor{0};
    const unsigned jobs = std::max(1u, args.jobs);
    AnalysisOptions opt;
    opt.threads = jobs > 1 ? 1 : 0;
    const auto work = [&] {
        for (std::size_t i = cursor++; i < wavs.size(); i = cursor++) {
            const std::string id = wavs[i].stem().string();
            Outcome& o = outcomes[i];
            try {
                auto it = labels.find(id);
                if (it == labels.end()) throw Error(Errc::MissingLabel, "no label for " + id);
                const Recording rec = load_wav(wavs[i]);
                const Analysis a = analyze_recording(rec, opt);
                DatasetRow row{id, a.features, it->second.label};
                row.features.gender = it->second.gender;
                row.features.age = it->second.age;
                o.row = std::move(row);
            } catch (const Error& e) {
                o.code = std::string(to_string(e.code()));
                o.message = e.what();
            } catch (const std::exception& e) {
                o.code = "InternalError";
                o.message = e.what();
            }
        }
    };
    {
        std::vector<std::jthread> pool;
        for (unsigned i = 1; i < std::min<unsigned>(jobs, static_cast<unsigned>(std::max<std::size_t>(wavs.size(), 1))); ++i) {
            pool.emplace_back(work);
        }
        work();
    }

    std::vector<DatasetRow> rows;
    json failures = json::array();
    for (std::size_t i = 0; i < wavs.size(); ++i) {
        if (outcomes[i].row) {
            rows.push_back(*outcomes[i].row);
        } else {
            failures.push_back({{"file", wavs[i].filename().string()},
                                {"error", outcomes[i].code},
                                {"message", outcomes[i].message}});
        }
    }
    std::ostringstream csv;
    write_dataset_csv(csv, rows);
    emit(args.out_csv, csv.str(), out);
    const std::string failures_path = args.failures.empty() && !args.out_csv.empty() && args.out_csv != "-"
                                          ? args.out_csv + ".failures.json"
                                          : args.failures;
    json report{{"schema_version", kSchemaVersion},
                {"analyzed", rows.size()},
                {"failed", failures.size()},
                {"failures", failures}};
    if (!failures_path.empty()) {
        write_file_atomic(failures_path, report.dump(2) + "\n");
    } else if (!failures.empty()) {
        err << report.dump() << "\n";
    }
    return kExitOk;
}

// ---------------------------------------------------------------- cv

struct CvArgs {
    std::string dataset;
    std::string scenario = "binary";
    std::size_t k = 5;
    std::string seeds = "1..10";
    std::string json_out;
    bool demographics = false;
    unsigned threads = 0;
};

int cmd_cv(const CvArgs& args, std::ostream& out, std::ostream&) {
    std::ifstream in(args.dataset);
    if (!in) throw Error(Errc::UnreadableFile, "cannot open " + args.dataset);
    const auto rows = read_dataset_csv(in);
    const LabeledDataset ds = to_dataset(rows, scenario_from_string(args.scenario));
    const std::size_t pos = ds.positives();
    if (ds.rows.empty() || pos == 0 || pos == ds.size()) {
        throw Error(Errc::SingleClassTrainingSet, "scenario " + args.scenario + " leaves a single class (" +
                                                      std::to_string(pos) + " of " + std::to_string(ds.size()) + " positive)");
    }
    const auto seeds = parse_seeds(args.seeds);
    const SflreClassifier model(FeatureSet{args.demographics});
    const CvResult r = cross_validate(ds, args.k, seeds, model, args.threads);
    if (!args.json_out.empty()) write_file_atomic(args.json_out, cv_result_json(r) + "\n");
    out << cv_summary_table(r);
    return kExitOk;
}

// ---------------------------------------------------------------- synth

struct SynthArgs {
    std::string spec_file;
    std::string out_wav;
    std::string grid_dir;
    std::string grid_jitter = "0.03,0.06,0.10,0.16";
    std::string grid_shimmer = "0.6,1.5,2.5,3.4";
    std::string grid_f0 = "150";
    std::size_t grid_repeats = 1;
    SynthSpec spec;
    double walk = 0.0;
    std::string breaks;
};

void write_synthesis(const fs::path& wav, const SynthSpec& spec) {
    Synthesis s = generate(spec);
    s.recording.source_id = wav.stem().string();
    write_wav(wav, s.recording);
    fs::path truth = wav;
    truth.replace_extension(".truth.json");
    write_file_atomic(truth, ground_truth_json(spec, s.truth) + "\n");
}

int cmd_synth(SynthArgs args, std::ostream& out, std::ostream&) {
    SynthSpec base = args.spec;
    if (!args.spec_file.empty()) base = synth_spec_from_json(read_file(args.spec_file));
    if (args.walk > 0.0) base.set_phase_walk(args.walk);
    if (!args.breaks.empty()) base.break_times = parse_list(args.breaks);

    if (args.grid_dir.empty()) {
        if (args.out_wav.empty()) throw UsageError("synth needs --out or --grid");
        write_synthesis(args.out_wav, base);
        out << json{{"schema_version", kSchemaVersion}, {"wav", args.out_wav}}.dump() << "\n";
        return kExitOk;
    }

    fs::create_directories(args.grid_dir);
    const auto jitters = parse_list(args.grid_jitter);
    const auto shimmers = parse_list(args.grid_shimmer);
    const auto f0s = parse_list(args.grid_f0);
    std::ostringstream labels;
    labels << "source_id,label,gender,age\n";
    std::size_t count = 0;
    for (double f0 : f0s) {
        for (double j : jitters) {
            for (double s : shimmers) {
                for (std::size_t rep = 0; rep < std::max<std::size_t>(1, args.grid_repeats); ++rep) {
                    SynthSpec spec = base;
                    spec.f0 = f0;
                    spec.jitter_pct = j;
                    spec.shimmer_pct = s;
                    spec.seed = base.seed + count;
                    std::ostringstream name;
                    name << "f" << f0 << "_j" << j << "_s" << s << "_r" << rep;
                    const fs::path wav = fs::path(args.grid_dir) / (name.str() + ".wav");
                    write_synthesis(wav, spec);
                    const bool healthy = j <= 0.07 && s <= 1.4;
                    labels << name.str() << ',' << (healthy ? "healthy" : "mci") << ",,\n";
                    ++count;
                }
            }
        }
    }
    write_file_atomic(fs::path(args.grid_dir) / "labels.csv", labels.str());
    out << json{{"schema_version", kSchemaVersion}, {"grid", args.grid_dir}, {"files", count}}.dump() << "\n";
    return kExitOk;
}

// ---------------------------------------------------------------- report

struct ReportArgs {
    std::string features_json;
    std::string reference;
    bool table = false;
};

int cmd_report(const ReportArgs& args, std::ostream& out, std::ostream&) {
    const ReferenceRanges ranges = resolve_reference(args.reference);
    if (args.table || args.features_json.empty()) {
        out << ranges.to_json() << "\n";
        return kExitOk;
    }
    BiomarkerVector v;
    try {
        const json doc = json::parse(read_file(args.features_json));
        const auto& f = doc.at("features");
        for (std::size_t i = 0; i < BiomarkerVector::kCount; ++i) {
            v[i] = f.at(std::string(BiomarkerVector::names()[i])).get<double>();
        }
    } catch (const json::exception& e) {
        throw Error(Errc::InvalidArgument, std::string("feature report: ") + e.what());
    }
    out << std::left << std::setw(15) << "feature" << std::right << std::setw(12) << "value" << "  inside\n";
    for (const auto& p : compare_to_reference(v, ranges)) {
        std::string where;
        for (Cohort c : p.inside) where += (where.empty() ? "" : ",") + std::string(to_string(c));
        out << std::left << std::setw(15) << p.feature << std::right << std::setw(12) << std::setprecision(4)
            << p.value << "  " << (where.empty() ? "outside all" : where) << "\n";
    }
    return kExitOk;
}

}  // namespace

int run(const std::vector<std::string>& argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Sound-object voice analysis"};
    app.require_subcommand(1);
    app.set_version_flag("--version", "soundobj 1.0");

    AnalyzeArgs an;
    auto* analyze_cmd = app.add_subcommand("analyze", "Extract the 14 voice features from a WAV file");
    analyze_cmd->add_option("wav", an.wav, "Input WAV")->required();
    analyze_cmd->add_option("--json", an.json_out, "Feature report path (default stdout)");
    analyze_cmd->add_option("--objects", an.objects_out, "Write the tracked objects as JSON");
    analyze_cmd->add_option("--band-csv", an.band_csv, "Write per-filter amplitude and frequency as CSV");
    analyze_cmd->add_option("--bands", an.bands, "Filter indices for --band-csv")->capture_default_str();
    analyze_cmd->add_option("--decimate", an.decimation, "Keep every n-th frame in --band-csv")->capture_default_str();
    analyze_cmd->add_option("--reconstruct", an.reconstruct_out, "Write the resynthesized signal as WAV");
    analyze_cmd->add_option("--reference", an.reference,
                            std::string("Quartile table for placement (default: $") + kReferenceEnv + ")");
    analyze_cmd->add_flag("--placement", an.use_reference, "Place features against the built-in table");
    analyze_cmd->add_flag("--reproduction", an.reproduction, "Report the resynthesis score");
    analyze_cmd->add_option("--threads", an.threads, "Filter-bank workers (0 = all cores)");

    BatchArgs ba;
    auto* batch_cmd = app.add_subcommand("batch", "Analyze a directory of WAVs into a dataset CSV");
    batch_cmd->add_option("dir", ba.dir, "Directory of WAV files")->required();
    batch_cmd->add_option("--labels", ba.labels, "CSV: source_id,label[,gender,age]")->required();
    batch_cmd->add_option("--out", ba.out_csv, "Dataset CSV path (default stdout)");
    batch_cmd->add_option("--failures", ba.failures, "Failure report path (default <out>.failures.json)");
    batch_cmd->add_option("--jobs", ba.jobs, "Recordings analyzed in parallel")->capture_default_str();

    CvArgs cv;
    auto* cv_cmd = app.add_subcommand("cv", "Stratified cross-validation of the regression ensemble");
    cv_cmd->add_option("dataset", cv.dataset, "Dataset CSV")->required();
    cv_cmd->add_option("--scenario", cv.scenario,
                       "healthy-vs-mci | healthy-vs-mci-ad | healthy-vs-ad | mci-vs-ad | binary")
        ->capture_default_str();
    cv_cmd->add_option("--k", cv.k, "Folds")->capture_default_str();
    cv_cmd->add_option("--seeds", cv.seeds, "Seeds, e.g. 1..10 or 3,5,8")->capture_default_str();
    cv_cmd->add_option("--json", cv.json_out, "Metrics JSON path");
    cv_cmd->add_flag("--demographics", cv.demographics, "Add gender and age as regressors");
    cv_cmd->add_option("--threads", cv.threads, "Workers (0 = all cores)");

    SynthArgs sy;
    auto* synth_cmd = app.add_subcommand("synth", "Generate synthetic vowels with ground truth");
    synth_cmd->add_option("--spec", sy.spec_file, "Spec JSON; replaces the individual flags");
    synth_cmd->add_option("--out", sy.out_wav, "Output WAV; ground truth goes next to it");
    synth_cmd->add_option("--f0", sy.spec.f0)->capture_default_str();
    synth_cmd->add_option("--harmonics", sy.spec.n_harmonics)->capture_default_str();
    synth_cmd->add_option("--jitter", sy.spec.jitter_pct, "%")->capture_default_str();
    synth_cmd->add_option("--shimmer", sy.spec.shimmer_pct, "%")->capture_default_str();
    synth_cmd->add_option("--f0-slope", sy.spec.f0_slope_pct_per_s, "%/s");
    synth_cmd->add_option("--amp-slope", sy.spec.amp_slope_pct_per_s, "%/s");
    synth_cmd->add_option("--walk", sy.walk, "Phase-walk std on every overtone, rad");
    synth_cmd->add_option("--breaks", sy.breaks, "Phase-break times, comma separated");
    synth_cmd->add_option("--snr", sy.spec.noise_snr_db, "dB (default: no noise)");
    synth_cmd->add_option("--duration", sy.spec.duration)->capture_default_str();
    synth_cmd->add_option("--rate", sy.spec.sample_rate)->capture_default_str();
    synth_cmd->add_option("--seed", sy.spec.seed)->capture_default_str();
    synth_cmd->add_option("--grid", sy.grid_dir, "Corpus mode: write a jitter x shimmer grid and labels.csv here");
    synth_cmd->add_option("--grid-jitter", sy.grid_jitter)->capture_default_str();
    synth_cmd->add_option("--grid-shimmer", sy.grid_shimmer)->capture_default_str();
    synth_cmd->add_option("--grid-f0", sy.grid_f0)->capture_default_str();
    synth_cmd->add_option("--grid-repeats", sy.grid_repeats)->capture_default_str();

    ReportArgs re;
    auto* report_cmd = app.add_subcommand("report", "Place a feature report against the quartile table");
    report_cmd->add_option("features", re.features_json, "Feature report JSON from analyze");
    report_cmd->add_option("--reference", re.reference,
                           std::string("Quartile table (default: $") + kReferenceEnv + ", else built in)");
    report_cmd->add_flag("--table", re.table, "Print the quartile table as JSON");

    std::vector<std::string> reversed(argv.rbegin(), argv.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kExitOk;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return kExitOk;
    } catch (const CLI::CallForVersion&) {
        out << app.version() << "\n";
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        err << error_json("UsageError", e.what()) << "\n";
        return kExitUsage;
    }

    try {
        if (*analyze_cmd) return cmd_analyze(an, out, err);
        if (*batch_cmd) return cmd_batch(ba, out, err);
        if (*cv_cmd) return cmd_cv(cv, out, err);
        if (*synth_cmd) return cmd_synth(sy, out, err);
        if (*report_cmd) return cmd_report(re, out, err);
    } catch (const Error& e) {
        err << error_json(to_string(e.code()), e.what()) << "\n";
        return is_domain_failure(e.code()) ? kExitDomain : kExitUsage;
    } catch (const UsageError& e) {
        err << error_json("UsageError", e.what()) << "\n";
        return kExitUsage;
    } catch (const std::exception& e) {
        err << error_json("InternalError", e.what()) << "\n";
        return kExitUsage;
    }
    return kExitUsage;
}

}  // namespace soundobj::cli
