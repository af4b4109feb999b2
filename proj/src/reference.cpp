#include "soundobj/reference.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "soundobj/errors.hpp"

namespace soundobj {

namespace {

using json = nlohmann::json;

constexpr std::array<std::string_view, 3> kCohortNames{"healthy", "mci", "alzheimers"};

struct Row {
    std::string_view feature;
    std::array<double, 9> v;
};

// Transcribed column by column: healthy, MCI, Alzheimer's; each q1, median, q3.
constexpr std::array<Row, 14> kTable{{
    {"amp_std", {11.6, 16.7, 26.1, 27.8, 33.9, 39.1, 31.2, 35.7, 38.6}},
    {"shimmer", {0.6, 1.0, 1.4, 2.0, 2.5, 3.4, 2.8, 3.4, 4.0}},
    {"amp_slope", {1.5, 4.2, 7.1, 8.1, 10.7, 19.5, 17.5, 22.0, 28.1}},
    {"freq_std", {0.8, 1.0, 1.5, 1.3, 1.6, 2.5, 1.6, 2.4, 3.1}},
    {"jitter", {0.03, 0.04, 0.07, 0.09, 0.10, 0.14, 0.13, 0.16, 0.19}},
    {"freq_slope", {0.01, 0.08, 0.2, 0.2, 0.6, 0.8, 0.75, 1.9, 2.5}},
    {"phase_std", {0.23, 0.63, 1.14, 1.05, 1.67, 2.01, 1.63, 1.95, 2.03}},
    {"phase_drift", {0.15, 0.37, 0.86, 1.05, 1.61, 2.35, 1.41, 1.99, 2.40}},
    {"obj_per_harm", {1, 3, 7, 9, 12, 16, 11, 18, 25}},
    {"subharm_count", {0, 2, 6, 2, 5, 11, 5, 10, 12}},
    {"e_low_harm", {87.2, 83.5, 78.9, 78.5, 74.2, 68.3, 71.4, 57.8, 49.6}},
    {"e_subharm", {0.0, 0.1, 0.5, 0.5, 1.6, 3.7, 2.1, 3.9, 7.6}},
    {"hnr", {14.7, 23.3, 33.8, 5.4, 7.1, 11.5, 2.1, 3.5, 5.5}},
    {"fq_tilt", {0.56, 1.46, 3.37, 0.64, 1.41, 2.54, 0.57, 2.01, 6.13}},
}};

Cohort cohort_from(std::string_view name) {
    for (std::size_t i = 0; i < kCohortNames.size(); ++i) {
        if (kCohortNames[i] == name) return kCohorts[i];
    }
    throw Error(Errc::InvalidArgument, "unknown cohort '" + std::string(name) + "'");
}

}  // namespace

std::string_view to_string(Cohort c) noexcept {
    return kCohortNames[static_cast<std::size_t>(c)];
}

double Quartiles::lo() const noexcept { return std::min({q1, median, q3}); }
double Quartiles::hi() const noexcept { return std::max({q1, median, q3}); }

ReferenceRanges ReferenceRanges::builtin() {
    ReferenceRanges r;
    for (const auto& row : kTable) {
        for (std::size_t c = 0; c < 3; ++c) {
            r.set(row.feature, kCohorts[c], {row.v[3 * c], row.v[3 * c + 1], row.v[3 * c + 2]});
        }
    }
    return r;
}

ReferenceRanges ReferenceRanges::from_json(std::string_view text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::exception& e) {
        throw Error(Errc::InvalidArgument, std::string("reference ranges: ") + e.what());
    }
    ReferenceRanges r;
    try {
        for (const auto& [feature, cohorts] : doc.at("features").items()) {
            for (const auto& [name, q] : cohorts.items()) {
                if (!q.is_array() || q.size() != 3) {
                    throw Error(Errc::InvalidArgument, "reference cell " + feature + "/" + name + " needs 3 values");
                }
                r.set(feature, cohort_from(name), {q[0].get<double>(), q[1].get<double>(), q[2].get<double>()});
            }
        }
    } catch (const json::exception& e) {
        throw Error(Errc::InvalidArgument, std::string("reference ranges: ") + e.what());
    }
    return r;
}

ReferenceRanges ReferenceRanges::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(Errc::UnreadableFile, "cannot open " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return from_json(ss.str());
}

const Quartiles& ReferenceRanges::at(std::string_view feature, Cohort c) const {
    auto it = cells_.find(feature);
    if (it == cells_.end()) throw Error(Errc::InvalidArgument, "no reference for " + std::string(feature));
    return it->second[static_cast<std::size_t>(c)];
}

bool ReferenceRanges::has(std::string_view feature) const { return cells_.find(feature) != cells_.end(); }

std::vector<std::string> ReferenceRanges::features() const {
    std::vector<std::string> out;
    for (const auto& [k, v] : cells_) out.push_back(k);
    return out;
}

void ReferenceRanges::set(std::string_view feature, Cohort c, Quartiles q) {
    cells_[std::string(feature)][static_cast<std::size_t>(c)] = q;
}

std::string ReferenceRanges::to_json() const {
    json doc;
    doc["schema_version"] = 1;
    doc["order"] = {"q1", "median", "q3"};
    json features = json::object();
    for (const auto& row : kTable) {
        if (!has(row.feature)) continue;
        json cell;
        for (Cohort c : kCohorts) {
            const auto& q = at(row.feature, c);
            cell[std::string(to_string(c))] = {q.q1, q.median, q.q3};
        }
        features[std::string(row.feature)] = cell;
    }
    doc["features"] = features;
    return doc.dump(2);
}

std::vector<Placement> compare_to_reference(const BiomarkerVector& v, const ReferenceRanges& ranges) {
    std::vector<Placement> out;
    const auto values = v.values();
    for (std::size_t i = 0; i < BiomarkerVector::kCount; ++i) {
        const auto name = BiomarkerVector::names()[i];
        if (!ranges.has(name)) continue;
        Placement p{std::string(name), values[i], {}};
        for (Cohort c : kCohorts) {
            if (ranges.at(name, c).contains(values[i])) p.inside.push_back(c);
        }
        out.push_back(std::move(p));
    }
    return out;
}

std::size_t count_inside(const std::vector<Placement>& report, Cohort c) {
    return static_cast<std::size_t>(std::count_if(report.begin(), report.end(), [c](const Placement& p) {
        return std::find(p.inside.begin(), p.inside.end(), c) != p.inside.end();
    }));
}

}  // namespace soundobj
