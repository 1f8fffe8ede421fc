#pragma once

#include "coughdetect/metrics.hpp"
#include "coughdetect/model.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace coughdetect {

struct ClinicalLabel {
    bool covid_positive = false;
    std::optional<double> ct;           // qRT-PCR threshold cycle
    std::optional<double> lym_percent;  // blood lymphocyte percentage
};

enum class SeverityClass { BorderlinePositive, StandardPositive, HighPositive };
enum class LymphocyteClass { Lymphopenia, NormalLymphocytes };

struct LabelError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Ct bands: high (Ct <= 20), standard (20 < Ct < 30), borderline (30 <= Ct < 35).
// Ct = 20 satisfies both the standard and high definitions; the more severe
// class wins.
SeverityClass severity_label(const ClinicalLabel& label);

// LYM% strictly below 20 is lymphopenia.
LymphocyteClass lymphopenia_label(const ClinicalLabel& label);

const char* to_string(SeverityClass c);
const char* to_string(LymphocyteClass c);

// Disjoint folds preserving class proportions within one sample; deterministic
// for a given seed. Throws when any class has fewer than k members.
std::vector<std::vector<std::size_t>> stratified_kfold(const std::vector<int>& labels,
                                                       int k, std::uint64_t seed);

struct FoldStats {
    std::optional<double> auc;
    double precision = 0.0;
    double sensitivity = 0.0;
    double specificity = 0.0;
    double f1 = 0.0;
    double balanced_accuracy = 0.0;
};

struct Aggregate {
    double mean = 0.0;
    double stddev = 0.0;
};

struct EvalReport {
    int k = 0;
    std::vector<FoldStats> folds;
    Aggregate auc, precision, sensitivity, specificity, f1, balanced_accuracy;
    ConfusionCounts pooled;  // accumulated over all test folds (binary only)

    std::string to_json() const;
    // plain-text table: AUC (M1) / Precision (M2) / Sensitivity (M3) / Specificity (M4)
    std::string summary_table(const std::string& name) const;
};

// A scorer maps a tensor to class probabilities; the factory builds one from
// a train/validation split (training a model, or wrapping a fixed one).
using Scorer = std::function<std::vector<double>(const CoughTensor&)>;
using ScorerFactory = std::function<Scorer(const std::vector<std::size_t>& train_idx,
                                           const std::vector<std::size_t>& val_idx)>;

// k-fold engine: fold i tests, fold (i+1) mod k validates, the rest train.
EvalReport run_cv_with(const std::vector<TrainSample>& dataset, int k, std::uint64_t seed,
                       int n_classes, const ScorerFactory& factory);

// Full protocol with DeepCough training per fold.
EvalReport run_cv(const std::vector<TrainSample>& dataset, const ModelConfig& model_cfg,
                  const TrainConfig& train_cfg, int k, std::uint64_t seed);

struct ManifestEntry {
    std::string path;
    int label = 0;
    ClinicalLabel clinical;
    std::string site;
};

// CSV schema: path,label,ct,lym_percent,site (header row required).
std::vector<ManifestEntry> read_manifest(const std::string& csv_path);

}  // namespace coughdetect
