#include "coughdetect/metrics.hpp"

#include <algorithm>
#include <stdexcept>

namespace coughdetect {

std::optional<double> auc_from_scores(const std::vector<std::pair<double, int>>& scores) {
    std::size_t n_pos = 0, n_neg = 0;
    for (const auto& [s, y] : scores) (y != 0 ? n_pos : n_neg)++;
    if (n_pos == 0 || n_neg == 0) return std::nullopt;

    std::vector<std::pair<double, int>> sorted = scores;
    std::sort(sorted.begin(), sorted.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });

    // average ranks over tie groups
    double rank_sum_pos = 0.0;
    std::size_t i = 0;
    while (i < sorted.size()) {
        std::size_t j = i;
        while (j < sorted.size() && sorted[j].first == sorted[i].first) ++j;
        const double avg_rank = 0.5 * (i + 1 + j);  // 1-based ranks i+1..j
        for (std::size_t k = i; k < j; ++k) {
            if (sorted[k].second != 0) rank_sum_pos += avg_rank;
        }
        i = j;
    }
    const double u = rank_sum_pos - 0.5 * n_pos * (n_pos + 1);
    return u / (static_cast<double>(n_pos) * n_neg);
}

MetricBundle compute_metrics(const std::vector<std::pair<double, int>>& scores) {
    if (scores.empty()) throw std::invalid_argument("compute_metrics: empty input");
    MetricBundle m;
    m.auc = auc_from_scores(scores);
    for (const auto& [s, y] : scores) {
        const bool pred = s >= 0.5;
        if (y != 0) {
            (pred ? m.counts.tp : m.counts.fn)++;
        } else {
            (pred ? m.counts.fp : m.counts.tn)++;
        }
    }
    m.precision = m.counts.precision();
    m.sensitivity = m.counts.sensitivity();
    m.specificity = m.counts.specificity();
    m.f1 = m.counts.f1();
    m.balanced_accuracy = m.counts.balanced_accuracy();
    return m;
}

std::optional<double> macro_auc(const std::vector<std::vector<double>>& probs,
                                const std::vector<int>& labels, int n_classes) {
    double acc = 0.0;
    int used = 0;
    for (int c = 0; c < n_classes; ++c) {
        std::vector<std::pair<double, int>> scores;
        scores.reserve(labels.size());
        for (std::size_t i = 0; i < labels.size(); ++i) {
            scores.emplace_back(probs[i][c], labels[i] == c ? 1 : 0);
        }
        if (auto a = auc_from_scores(scores)) {
            acc += *a;
            ++used;
        }
    }
    if (used == 0) return std::nullopt;
    return acc / used;
}

double multiclass_balanced_accuracy(const std::vector<std::vector<double>>& probs,
                                    const std::vector<int>& labels, int n_classes) {
    std::vector<long> correct(n_classes, 0), total(n_classes, 0);
    for (std::size_t i = 0; i < labels.size(); ++i) {
        const int pred = static_cast<int>(
            std::max_element(probs[i].begin(), probs[i].end()) - probs[i].begin());
        total[labels[i]]++;
        if (pred == labels[i]) correct[labels[i]]++;
    }
    double acc = 0.0;
    int seen = 0;
    for (int c = 0; c < n_classes; ++c) {
        if (total[c] > 0) {
            acc += static_cast<double>(correct[c]) / total[c];
            ++seen;
        }
    }
    return seen > 0 ? acc / seen : 0.0;
}

}  // namespace coughdetect
