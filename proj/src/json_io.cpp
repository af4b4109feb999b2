#include "soundobj/json_io.hpp"

#include <array>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>

#include <json.hpp>

#include "soundobj/errors.hpp"

namespace soundobj {

namespace {

using json = nlohmann::json;

json metrics_json(const Metrics& m) {
    return {{"auc", m.roc_auc},
            {"sens", m.sensitivity},
            {"spec", m.specificity},
            {"acc", m.accuracy},
            {"f1", m.f1}};
}

std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char ch = line[i];
        if (quoted) {
            if (ch == '"' && i + 1 < line.size() && line[i + 1] == '"') {
                cur += '"';
                ++i;
            } else if (ch == '"') {
                quoted = false;
            } else {
                cur += ch;
            }
        } else if (ch == '"') {
            quoted = true;
        } else if (ch == ',') {
            out.push_back(cur);
            cur.clear();
        } else if (ch != '\r') {
            cur += ch;
        }
    }
    out.push_back(cur);
    return out;
}

std::string csv_field(std::string_view s) {
    if (s.find_first_of(",\"\n") == std::string_view::npos) return std::string(s);
    std::string out = "\"";
    for (char ch : s) {
        if (ch == '"') out += '"';
        out += ch;
    }
    return out + "\"";
}

double parse_number(const std::string& s, std::string_view what) {
    try {
        std::size_t used = 0;
        const double v = std::stod(s, &used);
        if (used != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw Error(Errc::InvalidArgument, "bad number '" + s + "' in " + std::string(what));
    }
}

std::optional<Gender> parse_gender(const std::string& s) {
    if (s.empty()) return std::nullopt;
    if (s == "female" || s == "f" || s == "F") return Gender::Female;
    if (s == "male" || s == "m" || s == "M") return Gender::Male;
    throw Error(Errc::InvalidArgument, "unknown gender '" + s + "'");
}

std::string_view gender_name(Gender g) { return g == Gender::Male ? "male" : "female"; }

json nullable(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

}  // namespace

std::string objects_to_json(std::span<const SoundObject> objects, std::string_view source_id, double sample_rate) {
    json arr = json::array();
    for (const auto& o : objects) {
        json pts = json::array();
        for (const auto& p : o.points) pts.push_back({{"t", p.time}, {"a", p.amplitude}, {"f", p.frequency}});
        arr.push_back({{"initial_phase", o.initial_phase}, {"points", std::move(pts)}});
    }
    json doc{{"schema_version", kSchemaVersion},
             {"source_id", source_id},
             {"sample_rate", sample_rate},
             {"objects", std::move(arr)}};
    return doc.dump();
}

std::vector<SoundObject> objects_from_json(std::string_view text) {
    std::vector<SoundObject> out;
    try {
        const json doc = json::parse(text);
        for (const auto& o : doc.at("objects")) {
            SoundObject obj;
            obj.initial_phase = o.at("initial_phase").get<double>();
            for (const auto& p : o.at("points")) {
                obj.points.push_back({p.at("t").get<double>(), p.at("a").get<double>(), p.at("f").get<double>()});
            }
            out.push_back(std::move(obj));
        }
    } catch (const json::exception& e) {
        throw Error(Errc::InvalidArgument, std::string("object dump: ") + e.what());
    }
    return out;
}

std::string feature_report_json(std::string_view source_id, const Analysis& a, const ReportExtras& extras) {
    json features = json::object();
    const auto values = a.features.values();
    for (std::size_t i = 0; i < BiomarkerVector::kCount; ++i) {
        features[std::string(BiomarkerVector::names()[i])] = values[i];
    }

    const auto& g = a.grouping;
    json harmonics = json::array();
    for (int h = 1; h <= kMaxHarmonic; ++h) {
        const auto& grp = g.group(h);
        if (grp.members.empty()) continue;
        harmonics.push_back({{"h", h},
                             {"objects", grp.members.size()},
                             {"energy_share", grp.energy / g.total_energy},
                             {"strong", g.is_strong(h)}});
    }
    json shifts = json::object();
    for (const auto& [h, m] : a.phase.mean_shift) shifts[std::to_string(h)] = m;

    json windows = json::array();
    for (const auto& w : a.windows) {
        windows.push_back({{"begin", w.window.begin},
                           {"end", w.window.end},
                           {"objects", w.objects},
                           {"amp_std", w.amp_std},
                           {"shimmer", w.shimmer},
                           {"freq_std", w.freq_std},
                           {"jitter", w.jitter}});
    }

    json doc{{"schema_version", kSchemaVersion},
             {"source_id", source_id},
             {"features", std::move(features)},
             {"units", {{"amp_slope", "%/s"}, {"freq_slope", "%/s"}, {"phase_std", "rad"}, {"phase_drift", "rad"}}},
             {"flags", {{"hnr_capped", a.flags.hnr_capped}, {"phase_unavailable", a.flags.phase_unavailable}}},
             {"f1", g.f1},
             {"objects", a.objects.size()},
             {"selected", a.selected.size()},
             {"grouping",
              {{"harmonics", std::move(harmonics)},
               {"subharmonics", g.subharmonics.size()},
               {"noise_low", g.noise_low.size()},
               {"noise_mid", g.noise_mid.size()},
               {"noise_high", g.noise_high.size()},
               {"energy",
                {{"total", g.total_energy},
                 {"strong", g.strong_energy()},
                 {"weak", g.weak_energy()},
                 {"subharmonic", g.subharmonic_energy()},
                 {"noise", g.noise_energy()}}}}},
             {"mean_shift", std::move(shifts)},
             {"local_windows", std::move(windows)}};

    json warnings = json::array();
    for (const auto& w : extras.warnings) warnings.push_back({{"kind", to_string(w.kind)}, {"detail", w.message}});
    doc["warnings"] = std::move(warnings);
    if (extras.placement) {
        json rows = json::array();
        for (const auto& p : *extras.placement) {
            json inside = json::array();
            for (Cohort c : p.inside) inside.push_back(to_string(c));
            rows.push_back({{"feature", p.feature}, {"value", p.value}, {"inside", std::move(inside)}});
        }
        doc["reference"] = std::move(rows);
    }
    if (extras.reproduction_all) doc["reproduction"]["all_objects"] = *extras.reproduction_all;
    if (extras.reproduction_harmonic) doc["reproduction"]["harmonic_objects"] = *extras.reproduction_harmonic;
    return doc.dump(2);
}

std::string synth_spec_json(const SynthSpec& s) {
    json doc{{"f0", s.f0},
             {"n_harmonics", s.n_harmonics},
             {"harmonic_amps", s.harmonic_amps},
             {"jitter_pct", s.jitter_pct},
             {"shimmer_pct", s.shimmer_pct},
             {"f0_slope_pct_per_s", s.f0_slope_pct_per_s},
             {"amp_slope_pct_per_s", s.amp_slope_pct_per_s},
             {"phase_walk_sigma", s.phase_walk_sigma},
             {"phase_offsets", s.phase_offsets},
             {"break_times", s.break_times},
             {"noise_snr_db", nullable(s.noise_snr_db)},
             {"duration", s.duration},
             {"sample_rate", s.sample_rate},
             {"seed", s.seed},
             {"peak", s.peak}};
    return doc.dump(2);
}

SynthSpec synth_spec_from_json(std::string_view text) {
    SynthSpec s;
    try {
        const json doc = json::parse(text);
        const auto num = [&](const char* key, double& dst) {
            if (doc.contains(key)) dst = doc[key].get<double>();
        };
        const auto vec = [&](const char* key, std::vector<double>& dst) {
            if (doc.contains(key)) dst = doc[key].get<std::vector<double>>();
        };
        num("f0", s.f0);
        if (doc.contains("n_harmonics")) s.n_harmonics = doc["n_harmonics"].get<int>();
        vec("harmonic_amps", s.harmonic_amps);
        num("jitter_pct", s.jitter_pct);
        num("shimmer_pct", s.shimmer_pct);
        num("f0_slope_pct_per_s", s.f0_slope_pct_per_s);
        num("amp_slope_pct_per_s", s.amp_slope_pct_per_s);
        if (doc.contains("phase_walk_sigma") && doc["phase_walk_sigma"].is_number()) {
            s.set_phase_walk(doc["phase_walk_sigma"].get<double>());
        } else {
            vec("phase_walk_sigma", s.phase_walk_sigma);
        }
        vec("phase_offsets", s.phase_offsets);
        vec("break_times", s.break_times);
        if (doc.contains("noise_snr_db")) {
            s.noise_snr_db = doc["noise_snr_db"].is_null() ? std::numeric_limits<double>::infinity()
                                                           : doc["noise_snr_db"].get<double>();
        }
        num("duration", s.duration);
        num("sample_rate", s.sample_rate);
        if (doc.contains("seed")) s.seed = doc["seed"].get<std::uint64_t>();
        num("peak", s.peak);
    } catch (const json::exception& e) {
        throw Error(Errc::SpecInvalid, e.what());
    }
    return s;
}

std::string ground_truth_json(const SynthSpec& spec, const GroundTruth& gt) {
    json walks = json::array();
    for (const auto& w : gt.cycle_walk) walks.push_back(w);
    json doc{{"schema_version", kSchemaVersion},
             {"spec", json::parse(synth_spec_json(spec))},
             {"realized_jitter_pct", gt.realized_jitter_pct},
             {"realized_shimmer_pct", gt.realized_shimmer_pct},
             {"scale", gt.scale},
             {"signal_rms", gt.signal_rms},
             {"noise_rms", gt.noise_rms},
             {"cycles",
              {{"start", gt.cycle_start}, {"f0", gt.cycle_f0}, {"amp", gt.cycle_amp}, {"phase_walk", std::move(walks)}}}};
    return doc.dump();
}

std::string cv_result_json(const CvResult& r) {
    json runs = json::array();
    for (const auto& run : r.runs) {
        json m = metrics_json(run.metrics);
        m["seed"] = run.seed;
        m["fold"] = run.fold;
        m["threshold"] = run.threshold;
        m["test_size"] = run.test_size;
        m["test_positives"] = run.test_positives;
        m["confusion"] = {{"tp", run.metrics.confusion.tp},
                          {"fp", run.metrics.confusion.fp},
                          {"tn", run.metrics.confusion.tn},
                          {"fn", run.metrics.confusion.fn}};
        runs.push_back(std::move(m));
    }
    json doc{{"schema_version", kSchemaVersion},
             {"scenario", to_string(r.scenario)},
             {"model", r.model},
             {"k", r.k},
             {"run_count", r.runs.size()},
             {"runs", std::move(runs)},
             {"mean", metrics_json(r.mean)},
             {"std", metrics_json(r.stddev)},
             {"min", metrics_json(r.min)}};
    return doc.dump(2);
}

std::string cv_summary_table(const CvResult& r) {
    std::ostringstream out;
    out << "Target: " << to_string(r.scenario) << "  (" << r.runs.size() << " runs)\n";
    out << std::left << std::setw(10) << "MODEL" << std::right << std::setw(9) << "ROC AUC" << std::setw(13)
        << "SENSITIVITY" << std::setw(13) << "SPECIFICITY" << std::setw(10) << "ACCURACY" << std::setw(8) << "F1"
        << "\n";
    out << std::fixed << std::setprecision(2);
    out << std::left << std::setw(10) << r.model << std::right << std::setw(9) << r.mean.roc_auc << std::setw(13)
        << r.mean.sensitivity << std::setw(13) << r.mean.specificity << std::setw(10) << r.mean.accuracy
        << std::setw(8) << r.mean.f1 << "\n";
    return out.str();
}

std::string error_json(std::string_view code, std::string_view message) {
    return json{{"schema_version", kSchemaVersion}, {"error", code}, {"message", message}}.dump();
}

void write_dataset_csv(std::ostream& out, std::span<const DatasetRow> rows) {
    out << "source_id";
    for (auto n : BiomarkerVector::names()) out << ',' << n;
    out << ",gender,age,label\n";
    out << std::setprecision(17);
    for (const auto& r : rows) {
        out << csv_field(r.source_id);
        for (double v : r.features.values()) out << ',' << v;
        out << ',' << (r.features.gender ? gender_name(*r.features.gender) : "");
        out << ',';
        if (r.features.age) out << *r.features.age;
        out << ',' << csv_field(r.label) << '\n';
    }
}

std::vector<DatasetRow> read_dataset_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) throw Error(Errc::InvalidArgument, "dataset CSV is empty");
    const auto header = split_csv(line);
    std::map<std::string, std::size_t> col;
    for (std::size_t i = 0; i < header.size(); ++i) col[header[i]] = i;
    const auto need = [&](const std::string& name) {
        auto it = col.find(name);
        if (it == col.end()) throw Error(Errc::InvalidArgument, "dataset CSV lacks column '" + name + "'");
        return it->second;
    };
    const std::size_t id_col = need("source_id");
    const std::size_t label_col = need("label");
    std::array<std::size_t, BiomarkerVector::kCount> fcol{};
    for (std::size_t i = 0; i < BiomarkerVector::kCount; ++i) fcol[i] = need(std::string(BiomarkerVector::names()[i]));
    const auto gender_col = col.count("gender") ? std::optional<std::size_t>(col["gender"]) : std::nullopt;
    const auto age_col = col.count("age") ? std::optional<std::size_t>(col["age"]) : std::nullopt;

    std::vector<DatasetRow> rows;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line == "\r") continue;
        const auto f = split_csv(line);
        if (f.size() != header.size()) {
            throw Error(Errc::InvalidArgument, "dataset CSV line " + std::to_string(line_no) + " has " +
                                                   std::to_string(f.size()) + " fields");
        }
        DatasetRow r;
        r.source_id = f[id_col];
        r.label = f[label_col];
        for (std::size_t i = 0; i < BiomarkerVector::kCount; ++i) r.features[i] = parse_number(f[fcol[i]], "dataset");
        if (gender_col) r.features.gender = parse_gender(f[*gender_col]);
        if (age_col && !f[*age_col].empty()) r.features.age = parse_number(f[*age_col], "age");
        rows.push_back(std::move(r));
    }
    return rows;
}

LabeledDataset to_dataset(std::span<const DatasetRow> rows, Scenario scenario) {
    LabeledDataset ds;
    ds.scenario = scenario;
    for (const auto& r : rows) {
        const auto y = scenario_label(scenario, r.label);
        if (!y) continue;
        ds.rows.push_back({r.source_id, r.features, *y});
    }
    return ds;
}

std::map<std::string, LabelEntry> read_labels_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) throw Error(Errc::InvalidArgument, "labels CSV is empty");
    const auto header = split_csv(line);
    std::map<std::string, std::size_t> col;
    for (std::size_t i = 0; i < header.size(); ++i) col[header[i]] = i;
    if (!col.count("source_id") || !col.count("label")) {
        throw Error(Errc::InvalidArgument, "labels CSV needs source_id and label columns");
    }
    std::map<std::string, LabelEntry> out;
    while (std::getline(in, line)) {
        if (line.empty() || line == "\r") continue;
        const auto f = split_csv(line);
        const auto get = [&](const char* name) -> std::string {
            auto it = col.find(name);
            return it != col.end() && it->second < f.size() ? f[it->second] : std::string();
        };
        LabelEntry e;
        e.label = get("label");
        e.gender = parse_gender(get("gender"));
        const std::string age = get("age");
        if (!age.empty()) e.age = parse_number(age, "labels");
        out[get("source_id")] = e;
    }
    return out;
}

void write_file_atomic(const std::filesystem::path& path, std::string_view content) {
    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw Error(Errc::UnreadableFile, "cannot write " + tmp.string());
        out.write(content.data(), static_cast<std::streamsize>(content.size()));
        if (!out) throw Error(Errc::UnreadableFile, "short write to " + tmp.string());
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) throw Error(Errc::UnreadableFile, "cannot rename onto " + path.string() + ": " + ec.message());
}

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(Errc::UnreadableFile, "cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace soundobj
