#pragma once

#include <optional>
#include <utility>
#include <vector>

namespace coughdetect {

struct ConfusionCounts {
    long tp = 0, fn = 0, fp = 0, tn = 0;

    long total() const { return tp + fn + fp + tn; }
    double sensitivity() const { return tp + fn > 0 ? double(tp) / (tp + fn) : 0.0; }
    double specificity() const { return tn + fp > 0 ? double(tn) / (tn + fp) : 0.0; }
    double precision() const { return tp + fp > 0 ? double(tp) / (tp + fp) : 0.0; }
    double f1() const {
        const double p = precision(), r = sensitivity();
        return p + r > 0.0 ? 2.0 * p * r / (p + r) : 0.0;
    }
    double balanced_accuracy() const { return 0.5 * (sensitivity() + specificity()); }
};

struct MetricBundle {
    std::optional<double> auc;  // empty when only one class is present
    ConfusionCounts counts;
    double precision = 0.0;
    double sensitivity = 0.0;
    double specificity = 0.0;
    double f1 = 0.0;
    double balanced_accuracy = 0.0;
};

// Rank-statistic AUC (Mann-Whitney, ties get half credit).
// Returns empty when either class is absent.
std::optional<double> auc_from_scores(const std::vector<std::pair<double, int>>& scores);

// Binary metrics from (positive-probability, truth) pairs; the confusion
// matrix uses the 0.5 operating point.
MetricBundle compute_metrics(const std::vector<std::pair<double, int>>& scores);

// One-vs-rest macro AUC over K classes; probs[i] holds the per-class
// probability vector of sample i.
std::optional<double> macro_auc(const std::vector<std::vector<double>>& probs,
                                const std::vector<int>& labels, int n_classes);

// Mean of per-class recalls under argmax prediction.
double multiclass_balanced_accuracy(const std::vector<std::vector<double>>& probs,
                                    const std::vector<int>& labels, int n_classes);

}  // namespace coughdetect
