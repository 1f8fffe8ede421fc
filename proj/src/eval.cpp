#include "coughdetect/eval.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <memory>
#include <random>
#include <sstream>

namespace coughdetect {

SeverityClass severity_label(const ClinicalLabel& label) {
    if (!label.covid_positive) throw LabelError("severity: sample is not covid positive");
    if (!label.ct) throw LabelError("severity: Ct value missing");
    const double ct = *label.ct;
    if (ct <= 20.0) return SeverityClass::HighPositive;
    if (ct < 30.0) return SeverityClass::StandardPositive;
    if (ct < 35.0) return SeverityClass::BorderlinePositive;
    throw LabelError("severity: Ct outside the positive bands");
}

LymphocyteClass lymphopenia_label(const ClinicalLabel& label) {
    if (!label.lym_percent) throw LabelError("lymphopenia: LYM% value missing");
    return *label.lym_percent < 20.0 ? LymphocyteClass::Lymphopenia
                                     : LymphocyteClass::NormalLymphocytes;
}

const char* to_string(SeverityClass c) {
    switch (c) {
        case SeverityClass::BorderlinePositive: return "BorderlinePositive";
        case SeverityClass::StandardPositive: return "StandardPositive";
        case SeverityClass::HighPositive: return "HighPositive";
    }
    return "?";
}

const char* to_string(LymphocyteClass c) {
    return c == LymphocyteClass::Lymphopenia ? "Lymphopenia" : "NormalLymphocytes";
}

std::vector<std::vector<std::size_t>> stratified_kfold(const std::vector<int>& labels,
                                                       int k, std::uint64_t seed) {
    if (k < 2) throw std::invalid_argument("stratified_kfold: k must be >= 2");
    int max_label = 0;
    for (int l : labels) max_label = std::max(max_label, l);
    std::vector<std::vector<std::size_t>> by_class(max_label + 1);
    for (std::size_t i = 0; i < labels.size(); ++i) by_class[labels[i]].push_back(i);
    for (const auto& members : by_class) {
        if (!members.empty() && members.size() < static_cast<std::size_t>(k))
            throw std::runtime_error("stratified_kfold: a class has fewer samples than k");
    }

    std::vector<std::vector<std::size_t>> folds(k);
    std::mt19937_64 rng(seed);
    int cursor = 0;
    for (auto& members : by_class) {
        std::shuffle(members.begin(), members.end(), rng);
        for (std::size_t i = 0; i < members.size(); ++i) {
            folds[(cursor + i) % k].push_back(members[i]);
        }
        cursor = static_cast<int>((cursor + members.size()) % k);
    }
    for (auto& f : folds) std::sort(f.begin(), f.end());
    return folds;
}

namespace {

Aggregate aggregate_of(const std::vector<double>& values) {
    Aggregate a;
    if (values.empty()) return a;
    double sum = 0.0;
    for (double v : values) sum += v;
    a.mean = sum / values.size();
    if (values.size() > 1) {
        double ss = 0.0;
        for (double v : values) ss += (v - a.mean) * (v - a.mean);
        a.stddev = std::sqrt(ss / (values.size() - 1));
    }
    return a;
}

}  // namespace

std::string EvalReport::to_json() const {
    nlohmann::json j;
    j["k"] = k;
    for (const auto& f : folds) {
        nlohmann::json jf{{"precision", f.precision},
                          {"sensitivity", f.sensitivity},
                          {"specificity", f.specificity},
                          {"f1", f.f1},
                          {"balanced_accuracy", f.balanced_accuracy}};
        if (f.auc) jf["auc"] = *f.auc;
        j["folds"].push_back(jf);
    }
    auto agg = [](const Aggregate& a) {
        return nlohmann::json{{"mean", a.mean}, {"std", a.stddev}};
    };
    j["aggregate"] = {{"auc", agg(auc)},
                      {"precision", agg(precision)},
                      {"sensitivity", agg(sensitivity)},
                      {"specificity", agg(specificity)},
                      {"f1", agg(f1)},
                      {"balanced_accuracy", agg(balanced_accuracy)}};
    j["confusion"] = {{"tp", pooled.tp}, {"fn", pooled.fn}, {"fp", pooled.fp}, {"tn", pooled.tn}};
    return j.dump(2);
}

std::string EvalReport::summary_table(const std::string& name) const {
    std::ostringstream os;
    auto pct = [](const Aggregate& a) {
        std::ostringstream s;
        s.setf(std::ios::fixed);
        s.precision(2);
        s << 100.0 * a.mean << " +/- " << 100.0 * a.stddev;
        return s.str();
    };
    os << "              AUC (M1)         Precision (M2)   Sensitivity (M3) Specificity (M4)\n";
    os << name;
    for (const auto* a : {&auc, &precision, &sensitivity, &specificity}) {
        std::string cell = pct(*a);
        cell.resize(17, ' ');
        os << ' ' << cell;
    }
    os << '\n';
    return os.str();
}

EvalReport run_cv_with(const std::vector<TrainSample>& dataset, int k, std::uint64_t seed,
                       int n_classes, const ScorerFactory& factory) {
    std::vector<int> labels(dataset.size());
    for (std::size_t i = 0; i < dataset.size(); ++i) labels[i] = dataset[i].label;
    const auto folds = stratified_kfold(labels, k, seed);

    EvalReport report;
    report.k = k;
    std::vector<double> v_auc, v_prec, v_sens, v_spec, v_f1, v_bal;

    for (int i = 0; i < k; ++i) {
        const auto& test_fold = folds[i];
        const auto& val_fold = folds[(i + 1) % k];
        std::vector<std::size_t> train_idx;
        for (int j = 0; j < k; ++j) {
            if (j == i || j == (i + 1) % k) continue;
            train_idx.insert(train_idx.end(), folds[j].begin(), folds[j].end());
        }

        Scorer scorer = factory(train_idx, val_fold);

        FoldStats stats;
        if (n_classes == 2) {
            std::vector<std::pair<double, int>> scores;
            scores.reserve(test_fold.size());
            for (auto idx : test_fold) {
                scores.emplace_back(scorer(dataset[idx].tensor)[1], dataset[idx].label);
            }
            const auto m = compute_metrics(scores);
            stats.auc = m.auc;
            stats.precision = m.precision;
            stats.sensitivity = m.sensitivity;
            stats.specificity = m.specificity;
            stats.f1 = m.f1;
            stats.balanced_accuracy = m.balanced_accuracy;
            report.pooled.tp += m.counts.tp;
            report.pooled.fn += m.counts.fn;
            report.pooled.fp += m.counts.fp;
            report.pooled.tn += m.counts.tn;
        } else {
            std::vector<std::vector<double>> probs;
            std::vector<int> fold_labels;
            probs.reserve(test_fold.size());
            for (auto idx : test_fold) {
                probs.push_back(scorer(dataset[idx].tensor));
                fold_labels.push_back(dataset[idx].label);
            }
            stats.auc = macro_auc(probs, fold_labels, n_classes);
            stats.balanced_accuracy =
                multiclass_balanced_accuracy(probs, fold_labels, n_classes);
            // macro one-vs-rest rates at the argmax operating point
            double prec = 0.0, sens = 0.0, spec = 0.0, f1v = 0.0;
            for (int c = 0; c < n_classes; ++c) {
                ConfusionCounts cc;
                for (std::size_t s = 0; s < probs.size(); ++s) {
                    const int pred = static_cast<int>(
                        std::max_element(probs[s].begin(), probs[s].end()) - probs[s].begin());
                    const bool is_c = fold_labels[s] == c;
                    const bool pred_c = pred == c;
                    if (is_c && pred_c) cc.tp++;
                    else if (is_c) cc.fn++;
                    else if (pred_c) cc.fp++;
                    else cc.tn++;
                }
                prec += cc.precision();
                sens += cc.sensitivity();
                spec += cc.specificity();
                f1v += cc.f1();
            }
            stats.precision = prec / n_classes;
            stats.sensitivity = sens / n_classes;
            stats.specificity = spec / n_classes;
            stats.f1 = f1v / n_classes;
        }
        report.folds.push_back(stats);
        if (stats.auc) v_auc.push_back(*stats.auc);
        v_prec.push_back(stats.precision);
        v_sens.push_back(stats.sensitivity);
        v_spec.push_back(stats.specificity);
        v_f1.push_back(stats.f1);
        v_bal.push_back(stats.balanced_accuracy);
    }

    report.auc = aggregate_of(v_auc);
    report.precision = aggregate_of(v_prec);
    report.sensitivity = aggregate_of(v_sens);
    report.specificity = aggregate_of(v_spec);
    report.f1 = aggregate_of(v_f1);
    report.balanced_accuracy = aggregate_of(v_bal);
    return report;
}

EvalReport run_cv(const std::vector<TrainSample>& dataset, const ModelConfig& model_cfg,
                  const TrainConfig& train_cfg, int k, std::uint64_t seed) {
    int fold_counter = 0;
    ScorerFactory factory = [&](const std::vector<std::size_t>& train_idx,
                                const std::vector<std::size_t>& val_idx) -> Scorer {
        TrainConfig cfg = train_cfg;
        cfg.rng_seed = train_cfg.rng_seed + 0x10001ULL * static_cast<std::uint64_t>(fold_counter++);
        auto [weights, log] = train(dataset, train_idx, val_idx, model_cfg, cfg);
        auto model = std::make_shared<DeepCoughModel>(std::move(weights));
        return [model](const CoughTensor& t) { return model->forward(t); };
    };
    return run_cv_with(dataset, k, seed, model_cfg.n_classes, factory);
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string cur;
    bool quoted = false;
    for (char ch : line) {
        if (quoted) {
            if (ch == '"') quoted = false;
            else cur.push_back(ch);
        } else if (ch == '"') {
            quoted = true;
        } else if (ch == ',') {
            fields.push_back(cur);
            cur.clear();
        } else {
            cur.push_back(ch);
        }
    }
    fields.push_back(cur);
    for (auto& f : fields) {
        while (!f.empty() && (f.back() == '\r' || f.back() == ' ')) f.pop_back();
        while (!f.empty() && f.front() == ' ') f.erase(f.begin());
    }
    return fields;
}

}  // namespace

std::vector<ManifestEntry> read_manifest(const std::string& csv_path) {
    std::ifstream f(csv_path);
    if (!f) throw std::runtime_error("manifest: cannot open " + csv_path);
    std::string line;
    if (!std::getline(f, line)) throw std::runtime_error("manifest: empty file");
    const auto header = split_csv_line(line);
    if (header.empty() || header[0] != "path")
        throw std::runtime_error("manifest: expected header starting with 'path'");

    const auto base = std::filesystem::path(csv_path).parent_path();
    std::vector<ManifestEntry> entries;
    std::size_t line_no = 1;
    while (std::getline(f, line)) {
        ++line_no;
        if (line.empty() || line == "\r") continue;
        const auto fields = split_csv_line(line);
        if (fields.size() < 2)
            throw std::runtime_error("manifest: too few fields on line " +
                                     std::to_string(line_no));
        ManifestEntry e;
        std::filesystem::path p(fields[0]);
        e.path = p.is_absolute() ? p.string() : (base / p).string();
        e.label = std::stoi(fields[1]);
        e.clinical.covid_positive = e.label != 0;
        if (fields.size() > 2 && !fields[2].empty()) e.clinical.ct = std::stod(fields[2]);
        if (fields.size() > 3 && !fields[3].empty()) e.clinical.lym_percent = std::stod(fields[3]);
        if (fields.size() > 4) e.site = fields[4];
        entries.push_back(std::move(e));
    }
    return entries;
}

}  // namespace coughdetect
