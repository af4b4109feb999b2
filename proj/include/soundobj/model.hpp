#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "soundobj/features.hpp"

namespace soundobj {

enum class Scenario { HealthyVsMci, HealthyVsMciAd, HealthyVsAd, MciVsAd, Binary };

std::string_view to_string(Scenario s) noexcept;
Scenario scenario_from_string(std::string_view name);

/// Maps a cohort label ("healthy", "mci", "ad", or "0"/"1" for Binary) to a
/// class for the scenario; nullopt when the row does not take part.
std::optional<int> scenario_label(Scenario s, std::string_view cohort);

struct Sample {
    std::string source_id;
    BiomarkerVector features;
    int label = 0;
};

struct LabeledDataset {
    std::vector<Sample> rows;
    Scenario scenario = Scenario::Binary;

    std::size_t positives() const;
    std::size_t size() const noexcept { return rows.size(); }
};

/// Regressors used by a model: the 14 object features, optionally gender and age.
struct FeatureSet {
    bool demographics = false;
    std::size_t size() const noexcept { return BiomarkerVector::kCount + (demographics ? 2 : 0); }
};

/// Value of regressor j (gender: female 0, male 1; missing -> NaN).
double regressor(const BiomarkerVector& v, std::size_t j);

/// Mean age over rows with a known age.
double mean_age(const LabeledDataset& ds);

/// Fills missing ages with `mean`.
LabeledDataset impute_age(LabeledDataset ds, double mean);

/// Fills missing ages with the dataset's own mean.
LabeledDataset impute_age(LabeledDataset ds);

struct LinearTerm {
    double slope = 0.0;
    double intercept = 0.0;
};

struct FittedSFLRE {
    FeatureSet features;
    std::vector<LinearTerm> terms;
};

FittedSFLRE fit_sflre(const LabeledDataset& train, FeatureSet features = {});
double predict_sflre(const FittedSFLRE& model, const BiomarkerVector& v);

double threshold_from_prevalence(const LabeledDataset& train);

/// Fit / predict-probability contract shared by every model the harness can run.
class Classifier {
public:
    virtual ~Classifier() = default;
    virtual std::string name() const = 0;
    virtual std::unique_ptr<Classifier> clone() const = 0;
    virtual void fit(const LabeledDataset& train) = 0;
    virtual double predict(const BiomarkerVector& v) const = 0;
};

class SflreClassifier final : public Classifier {
public:
    explicit SflreClassifier(FeatureSet features = {}) : features_(features) {}
    std::string name() const override { return "SFLRE"; }
    std::unique_ptr<Classifier> clone() const override { return std::make_unique<SflreClassifier>(*this); }
    void fit(const LabeledDataset& train) override { model_ = fit_sflre(train, features_); }
    double predict(const BiomarkerVector& v) const override { return predict_sflre(model_, v); }
    const FittedSFLRE& model() const noexcept { return model_; }

private:
    FeatureSet features_;
    FittedSFLRE model_;
};

struct Split {
    std::vector<std::size_t> train;
    std::vector<std::size_t> test;
};

/// Deterministic stratified k-fold: each class is shuffled and dealt round-robin.
std::vector<Split> stratified_kfold(const LabeledDataset& ds, std::size_t k, std::uint64_t seed);

struct Confusion {
    std::size_t tp = 0;
    std::size_t fp = 0;
    std::size_t tn = 0;
    std::size_t fn = 0;
};

struct Metrics {
    double roc_auc = 0.0;
    double sensitivity = 0.0;
    double specificity = 0.0;
    double accuracy = 0.0;
    double f1 = 0.0;
    Confusion confusion;
};

/// Mann-Whitney AUC with midranks (ties count one half).
double roc_auc(std::span<const double> scores, std::span<const int> labels);

/// Hard labels at score >= threshold.
Metrics evaluate(std::span<const double> scores, std::span<const int> labels, double threshold);

struct CvRun {
    std::uint64_t seed = 0;
    std::size_t fold = 0;
    double threshold = 0.0;
    std::size_t test_size = 0;
    std::size_t test_positives = 0;
    Metrics metrics;
};

struct CvResult {
    Scenario scenario = Scenario::Binary;
    std::string model;
    std::size_t k = 0;
    std::vector<CvRun> runs;  // ordered by (seed, fold)
    Metrics mean;
    Metrics stddev;
    Metrics min;
};

CvResult cross_validate(const LabeledDataset& ds, std::size_t k, std::span<const std::uint64_t> seeds,
                        const Classifier& prototype, unsigned threads = 0);

}  // namespace soundobj
