#pragma once

#include <array>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "soundobj/features.hpp"

namespace soundobj {

enum class Cohort { Healthy, Mci, Alzheimers };

inline constexpr std::array<Cohort, 3> kCohorts{Cohort::Healthy, Cohort::Mci, Cohort::Alzheimers};

std::string_view to_string(Cohort c) noexcept;

/// First quartile, median and third quartile as published. Some published
/// rows list the quartiles in descending order; `lo()`/`hi()` give the
/// interval bounds regardless.
struct Quartiles {
    double q1 = 0.0;
    double median = 0.0;
    double q3 = 0.0;

    double lo() const noexcept;
    double hi() const noexcept;
    bool contains(double v) const noexcept { return v >= lo() && v <= hi(); }
};

class ReferenceRanges {
public:
    /// The published quartile table for the three cohorts.
    static ReferenceRanges builtin();
    static ReferenceRanges from_json(std::string_view text);
    static ReferenceRanges load(const std::filesystem::path& path);

    const Quartiles& at(std::string_view feature, Cohort c) const;
    bool has(std::string_view feature) const;
    std::vector<std::string> features() const;

    void set(std::string_view feature, Cohort c, Quartiles q);
    std::string to_json() const;

private:
    std::map<std::string, std::array<Quartiles, 3>, std::less<>> cells_;
};

struct Placement {
    std::string feature;
    double value = 0.0;
    std::vector<Cohort> inside;  // empty: outside all cohorts
};

std::vector<Placement> compare_to_reference(const BiomarkerVector& v, const ReferenceRanges& ranges);

/// Features placed inside the given cohort's interval.
std::size_t count_inside(const std::vector<Placement>& report, Cohort c);

}  // namespace soundobj
