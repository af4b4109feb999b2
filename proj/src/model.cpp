#include "soundobj/model.hpp"

#include <algorithm>
#include <array>
#include <exception>
#include <atomic>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <thread>

#include "soundobj/errors.hpp"

namespace soundobj {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// Unbiased draw from [0, n) without relying on a library distribution, so
// splits are identical on every standard library.
std::uint64_t below(std::mt19937_64& g, std::uint64_t n) {
    const std::uint64_t max = std::mt19937_64::max();
    const std::uint64_t limit = max - (max % n + 1) % n;
    std::uint64_t x = g();
    while (x > limit) x = g();
    return x % n;
}

void shuffle(std::vector<std::size_t>& v, std::mt19937_64& g) {
    for (std::size_t i = v.size(); i > 1; --i) {
        const auto j = static_cast<std::size_t>(below(g, i));
        std::swap(v[i - 1], v[j]);
    }
}

LabeledDataset subset(const LabeledDataset& ds, const std::vector<std::size_t>& idx) {
    LabeledDataset out;
    out.scenario = ds.scenario;
    out.rows.reserve(idx.size());
    for (std::size_t i : idx) out.rows.push_back(ds.rows[i]);
    return out;
}

}  // namespace

std::string_view to_string(Scenario s) noexcept {
    switch (s) {
        case Scenario::HealthyVsMci: return "healthy-vs-mci";
        case Scenario::HealthyVsMciAd: return "healthy-vs-mci-ad";
        case Scenario::HealthyVsAd: return "healthy-vs-ad";
        case Scenario::MciVsAd: return "mci-vs-ad";
        case Scenario::Binary: return "binary";
    }
    return "binary";
}

Scenario scenario_from_string(std::string_view name) {
    for (Scenario s : {Scenario::HealthyVsMci, Scenario::HealthyVsMciAd, Scenario::HealthyVsAd, Scenario::MciVsAd,
                       Scenario::Binary}) {
        if (to_string(s) == name) return s;
    }
    throw Error(Errc::InvalidArgument, "unknown scenario '" + std::string(name) + "'");
}

std::optional<int> scenario_label(Scenario s, std::string_view cohort) {
    const bool healthy = cohort == "healthy";
    const bool mci = cohort == "mci";
    const bool ad = cohort == "ad" || cohort == "alzheimers";
    switch (s) {
        case Scenario::HealthyVsMci:
            if (healthy || mci) return mci ? 1 : 0;
            break;
        case Scenario::HealthyVsMciAd:
            if (healthy || mci || ad) return healthy ? 0 : 1;
            break;
        case Scenario::HealthyVsAd:
            if (healthy || ad) return ad ? 1 : 0;
            break;
        case Scenario::MciVsAd:
            if (mci || ad) return ad ? 1 : 0;
            break;
        case Scenario::Binary:
            if (cohort == "0") return 0;
            if (cohort == "1") return 1;
            break;
    }
    return std::nullopt;
}

std::size_t LabeledDataset::positives() const {
    return static_cast<std::size_t>(std::count_if(rows.begin(), rows.end(), [](const Sample& s) { return s.label == 1; }));
}

double regressor(const BiomarkerVector& v, std::size_t j) {
    if (j < BiomarkerVector::kCount) return v[j];
    if (j == BiomarkerVector::kCount) return v.gender ? (*v.gender == Gender::Male ? 1.0 : 0.0) : kNaN;
    if (j == BiomarkerVector::kCount + 1) return v.age.value_or(kNaN);
    throw Error(Errc::IndexOutOfRange, "regressor " + std::to_string(j));
}

double mean_age(const LabeledDataset& ds) {
    double sum = 0.0;
    std::size_t n = 0;
    for (const auto& r : ds.rows) {
        if (r.features.age) {
            sum += *r.features.age;
            ++n;
        }
    }
    if (n == 0) throw Error(Errc::AllAgesMissing, "no row has a known age");
    return sum / static_cast<double>(n);
}

LabeledDataset impute_age(LabeledDataset ds, double mean) {
    for (auto& r : ds.rows) {
        if (!r.features.age) r.features.age = mean;
    }
    return ds;
}

LabeledDataset impute_age(LabeledDataset ds) {
    const bool missing = std::any_of(ds.rows.begin(), ds.rows.end(), [](const Sample& s) { return !s.features.age; });
    if (!missing) return ds;
    const double m = mean_age(ds);
    return impute_age(std::move(ds), m);
}

FittedSFLRE fit_sflre(const LabeledDataset& train, FeatureSet features) {
    const std::size_t n = train.size();
    const std::size_t pos = train.positives();
    if (pos == 0 || pos == n) throw Error(Errc::SingleClassTrainingSet, "training rows hold a single class");
    const double prevalence = static_cast<double>(pos) / static_cast<double>(n);

    FittedSFLRE model;
    model.features = features;
    model.terms.resize(features.size());
    for (std::size_t j = 0; j < features.size(); ++j) {
        double sx = 0.0;
        double sy = 0.0;
        std::size_t m = 0;
        double lo = std::numeric_limits<double>::infinity();
        double hi = -lo;
        for (const auto& r : train.rows) {
            const double x = regressor(r.features, j);
            if (std::isnan(x)) continue;
            sx += x;
            sy += r.label;
            lo = std::min(lo, x);
            hi = std::max(hi, x);
            ++m;
        }
        if (m == 0 && j == BiomarkerVector::kCount + 1) throw Error(Errc::AllAgesMissing, "no training row has an age");
        LinearTerm& t = model.terms[j];
        if (m < 2 || !(hi > lo)) {
            t = {0.0, prevalence};
            continue;
        }
        const double mx = sx / static_cast<double>(m);
        const double my = sy / static_cast<double>(m);
        double sxy = 0.0;
        double sxx = 0.0;
        for (const auto& r : train.rows) {
            const double x = regressor(r.features, j);
            if (std::isnan(x)) continue;
            sxy += (x - mx) * (r.label - my);
            sxx += (x - mx) * (x - mx);
        }
        t.slope = sxy / sxx;
        t.intercept = my - t.slope * mx;
    }
    return model;
}

double predict_sflre(const FittedSFLRE& model, const BiomarkerVector& v) {
    double sum = 0.0;
    std::size_t n = 0;
    for (std::size_t j = 0; j < model.terms.size(); ++j) {
        const double x = regressor(v, j);
        const auto& t = model.terms[j];
        sum += std::isnan(x) ? t.intercept : t.intercept + t.slope * x;
        ++n;
    }
    if (n == 0) return 0.0;
    return std::clamp(sum / static_cast<double>(n), 0.0, 1.0);
}

double threshold_from_prevalence(const LabeledDataset& train) {
    if (train.rows.empty()) throw Error(Errc::InvalidArgument, "empty training set");
    return static_cast<double>(train.positives()) / static_cast<double>(train.size());
}

std::vector<Split> stratified_kfold(const LabeledDataset& ds, std::size_t k, std::uint64_t seed) {
    if (k < 2) throw Error(Errc::InvalidArgument, "k must be at least 2");
    std::vector<std::size_t> pos;
    std::vector<std::size_t> neg;
    for (std::size_t i = 0; i < ds.rows.size(); ++i) (ds.rows[i].label == 1 ? pos : neg).push_back(i);
    if (pos.size() < k || neg.size() < k) {
        throw Error(Errc::ClassTooSmall, std::to_string(pos.size()) + " positives and " + std::to_string(neg.size()) +
                                             " negatives for " + std::to_string(k) + " folds");
    }
    std::mt19937_64 g(seed);
    shuffle(pos, g);
    shuffle(neg, g);

    std::vector<std::size_t> fold_of(ds.rows.size());
    std::size_t next = 0;
    for (std::size_t i : pos) fold_of[i] = next++ % k;
    for (std::size_t i : neg) fold_of[i] = next++ % k;

    std::vector<Split> out(k);
    for (std::size_t i = 0; i < ds.rows.size(); ++i) {
        for (std::size_t f = 0; f < k; ++f) (fold_of[i] == f ? out[f].test : out[f].train).push_back(i);
    }
    return out;
}

double roc_auc(std::span<const double> scores, std::span<const int> labels) {
    if (scores.size() != labels.size()) throw Error(Errc::LengthMismatch, "scores and labels differ in length");
    const std::size_t n = scores.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

    double rank_sum = 0.0;  // positives, 1-based midranks
    std::size_t npos = 0;
    for (std::size_t a = 0; a < n;) {
        std::size_t b = a;
        while (b < n && scores[order[b]] == scores[order[a]]) ++b;
        const double mid = 0.5 * static_cast<double>(a + 1 + b);
        for (std::size_t i = a; i < b; ++i) {
            if (labels[order[i]] == 1) {
                rank_sum += mid;
                ++npos;
            }
        }
        a = b;
    }
    const std::size_t nneg = n - npos;
    if (npos == 0 || nneg == 0) throw Error(Errc::SingleClassEvaluationSet, "AUC needs both classes");
    const double p = static_cast<double>(npos);
    return (rank_sum - p * (p + 1.0) / 2.0) / (p * static_cast<double>(nneg));
}

Metrics evaluate(std::span<const double> scores, std::span<const int> labels, double threshold) {
    Metrics m;
    m.roc_auc = roc_auc(scores, labels);
    Confusion& c = m.confusion;
    for (std::size_t i = 0; i < scores.size(); ++i) {
        const bool predicted = scores[i] >= threshold;
        const bool actual = labels[i] == 1;
        if (predicted && actual) ++c.tp;
        else if (predicted) ++c.fp;
        else if (actual) ++c.fn;
        else ++c.tn;
    }
    const auto d = [](std::size_t a, std::size_t b) { return b == 0 ? 0.0 : static_cast<double>(a) / static_cast<double>(b); };
    m.sensitivity = d(c.tp, c.tp + c.fn);
    m.specificity = d(c.tn, c.tn + c.fp);
    m.accuracy = d(c.tp + c.tn, scores.size());
    const double precision = d(c.tp, c.tp + c.fp);
    m.f1 = precision + m.sensitivity > 0.0 ? 2.0 * precision * m.sensitivity / (precision + m.sensitivity) : 0.0;
    return m;
}

CvResult cross_validate(const LabeledDataset& ds, std::size_t k, std::span<const std::uint64_t> seeds,
                        const Classifier& prototype, unsigned threads) {
    CvResult result;
    result.scenario = ds.scenario;
    result.model = prototype.name();
    result.k = k;
    if (seeds.empty()) throw Error(Errc::InvalidArgument, "at least one seed is required");

    struct Task {
        std::uint64_t seed;
        std::size_t fold;
        const Split* split;
    };
    std::vector<std::vector<Split>> splits;
    splits.reserve(seeds.size());
    for (std::uint64_t s : seeds) splits.push_back(stratified_kfold(ds, k, s));
    std::vector<Task> tasks;
    for (std::size_t i = 0; i < seeds.size(); ++i) {
        for (std::size_t f = 0; f < k; ++f) tasks.push_back({seeds[i], f, &splits[i][f]});
    }
    result.runs.resize(tasks.size());

    std::atomic<std::size_t> cursor{0};
    std::vector<std::exception_ptr> failures(tasks.size());
    const auto work = [&] {
        for (std::size_t t = cursor++; t < tasks.size(); t = cursor++) {
            try {
                const Task& task = tasks[t];
                LabeledDataset train = subset(ds, task.split->train);
                LabeledDataset test = subset(ds, task.split->test);
                if (std::any_of(train.rows.begin(), train.rows.end(), [](const Sample& s) { return s.features.age.has_value(); })) {
                    const double age = mean_age(train);
                    train = impute_age(std::move(train), age);
                    test = impute_age(std::move(test), age);
                }
                auto model = prototype.clone();
                model->fit(train);
                CvRun run;
                run.seed = task.seed;
                run.fold = task.fold;
                run.threshold = threshold_from_prevalence(train);
                run.test_size = test.size();
                run.test_positives = test.positives();
                std::vector<double> scores;
                std::vector<int> labels;
                for (const auto& r : test.rows) {
                    scores.push_back(model->predict(r.features));
                    labels.push_back(r.label);
                }
                run.metrics = evaluate(scores, labels, run.threshold);
                result.runs[t] = run;
            } catch (...) {
                failures[t] = std::current_exception();
            }
        }
    };
    const unsigned hw = std::max(1u, std::thread::hardware_concurrency());
    const unsigned n = std::min<unsigned>(threads == 0 ? hw : threads, static_cast<unsigned>(tasks.size()));
    {
        std::vector<std::jthread> pool;
        for (unsigned i = 1; i < n; ++i) pool.emplace_back(work);
        work();
    }
    for (const auto& f : failures) {
        if (f) std::rethrow_exception(f);
    }

    const auto fields = [](Metrics& m) {
        return std::array<double*, 5>{&m.roc_auc, &m.sensitivity, &m.specificity, &m.accuracy, &m.f1};
    };
    const auto count = static_cast<double>(result.runs.size());
    auto mean = fields(result.mean);
    auto sd = fields(result.stddev);
    auto mn = fields(result.min);
    for (std::size_t f = 0; f < 5; ++f) *mn[f] = std::numeric_limits<double>::infinity();
    for (auto& run : result.runs) {
        auto v = fields(run.metrics);
        for (std::size_t f = 0; f < 5; ++f) {
            *mean[f] += *v[f] / count;
            *mn[f] = std::min(*mn[f], *v[f]);
        }
    }
    for (auto& run : result.runs) {
        auto v = fields(run.metrics);
        for (std::size_t f = 0; f < 5; ++f) *sd[f] += (*v[f] - *mean[f]) * (*v[f] - *mean[f]) / count;
    }
    for (std::size_t f = 0; f < 5; ++f) *sd[f] = std::sqrt(*sd[f]);
    return result;
}

}  // namespace soundobj
