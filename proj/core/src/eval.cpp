#include "cough/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <map>
#include <random>
#include <set>

#include "cough/error.hpp"

namespace cough {

ConfusionMatrix confusion(const std::vector<bool>& labels,
                          const std::vector<bool>& predictions) {
    if (labels.size() != predictions.size()) {
        throw LengthMismatch("labels and predictions differ in length");
    }
    if (labels.empty()) throw EmptyInput("no pairs to count");

    ConfusionMatrix m;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (labels[i]) {
            (predictions[i] ? m.tp : m.fn) += 1;
        } else {
            (predictions[i] ? m.fp : m.tn) += 1;
        }
    }
    return m;
}

namespace {

template <typename T>
Metrics metrics_impl(T tp, T fp, T tn, T fn) {
    Metrics out;
    const double dtp = static_cast<double>(tp), dfp = static_cast<double>(fp);
    const double dtn = static_cast<double>(tn), dfn = static_cast<double>(fn);
    const double total = dtp + dfp + dtn + dfn;
    if (total > 0) out.accuracy = (dtp + dtn) / total;
    if (dtp + dfn > 0) out.sensitivity = dtp / (dtp + dfn);
    if (dtn + dfp > 0) out.specificity = dtn / (dtn + dfp);
    if (dtp + dfp > 0) out.precision = dtp / (dtp + dfp);
    if (out.precision && out.sensitivity && *out.precision + *out.sensitivity > 0) {
        out.f1 = 2.0 * *out.precision * *out.sensitivity /
                 (*out.precision + *out.sensitivity);
    }
    return out;
}

}  // namespace

Metrics compute_metrics(const ConfusionMatrix& m) {
    return metrics_impl(m.tp, m.fp, m.tn, m.fn);
}

Metrics compute_metrics(const MeanConfusion& m) {
    return metrics_impl(m.tp, m.fp, m.tn, m.fn);
}

std::pair<std::vector<RocPoint>, double> roc_auc(
    const std::vector<bool>& labels, const std::vector<double>& scores) {
    if (labels.size() != scores.size()) {
        throw LengthMismatch("labels and scores differ in length");
    }
    if (labels.empty()) throw EmptyInput("no scores to rank");
    long long pos = 0, neg = 0;
    for (bool l : labels) (l ? pos : neg) += 1;
    if (pos == 0 || neg == 0) {
        throw SingleClass("ROC needs both classes");
    }

    std::vector<std::size_t> order(labels.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return scores[a] > scores[b];
    });

    std::vector<RocPoint> points;
    points.push_back({0.0, 0.0, std::numeric_limits<double>::infinity()});

    // Doubled concordance units: a positive strictly above a negative is
    // worth 2, a tie worth 1. Integer-exact.
    long long num2 = 0;
    long long cum_tp = 0, cum_fp = 0;
    std::size_t i = 0;
    while (i < order.size()) {
        const double s = scores[order[i]];
        long long p_here = 0, n_here = 0;
        while (i < order.size() && scores[order[i]] == s) {
            (labels[order[i]] ? p_here : n_here) += 1;
            ++i;
        }
        // Negatives still below this tie group: total minus those consumed.
        const long long neg_below = neg - cum_fp - n_here;
        num2 += 2 * p_here * neg_below + p_here * n_here;
        cum_tp += p_here;
        cum_fp += n_here;
        points.push_back({static_cast<double>(cum_fp) / static_cast<double>(neg),
                          static_cast<double>(cum_tp) / static_cast<double>(pos),
                          s});
    }
    const double auc = static_cast<double>(num2) /
                       (2.0 * static_cast<double>(pos) * static_cast<double>(neg));
    return {std::move(points), auc};
}

EvalReport evaluate_scores(const std::vector<bool>& labels,
                           const std::vector<double>& scores,
                           double threshold) {
    std::vector<bool> preds(scores.size());
    for (std::size_t i = 0; i < scores.size(); ++i) {
        preds[i] = scores[i] >= threshold;
    }
    EvalReport report;
    report.matrix = confusion(labels, preds);
    report.metrics = compute_metrics(report.matrix);
    const bool both = (report.matrix.tp + report.matrix.fn) > 0 &&
                      (report.matrix.tn + report.matrix.fp) > 0;
    if (both) {
        auto [points, auc] = roc_auc(labels, scores);
        report.roc_points = std::move(points);
        report.auc = auc;
    }
    return report;
}

CrossValResult cross_validate(const std::vector<FeaturizedSample>& samples,
                              int k, const ModelConfig& model_cfg,
                              const TrainConfig& train_cfg) {
    if (k < 2) throw Error("cross-validation needs k >= 2");
    if (samples.empty()) throw EmptyInput("no samples");

    std::set<std::string> id_set;
    for (const auto& s : samples) id_set.insert(s.individual_id);
    if (id_set.size() < static_cast<std::size_t>(k)) {
        throw TooFewIndividuals("fewer individuals than folds");
    }

    std::vector<std::string> ids(id_set.begin(), id_set.end());
    std::mt19937_64 rng(train_cfg.seed);
    std::shuffle(ids.begin(), ids.end(), rng);

    std::vector<std::vector<std::string>> folds(static_cast<std::size_t>(k));
    for (std::size_t i = 0; i < ids.size(); ++i) {
        folds[i % static_cast<std::size_t>(k)].push_back(ids[i]);
    }

    CrossValResult result;
    result.fold_individuals = folds;

    for (int f = 0; f < k; ++f) {
        std::set<std::string> test_ids(folds[static_cast<std::size_t>(f)].begin(),
                                       folds[static_cast<std::size_t>(f)].end());

        // Hold out ~10% of the remaining individuals for validation.
        std::vector<std::string> pool;
        for (const auto& id : ids) {
            if (!test_ids.count(id)) pool.push_back(id);
        }
        std::mt19937_64 fold_rng(train_cfg.seed ^ (0xF01DULL + static_cast<std::uint64_t>(f)));
        std::shuffle(pool.begin(), pool.end(), fold_rng);
        const std::size_t n_val = std::max<std::size_t>(1, pool.size() / 10);
        std::set<std::string> val_ids(pool.begin(),
                                      pool.begin() + static_cast<std::ptrdiff_t>(n_val));

        std::vector<TrainSample> train_set, val_set;
        std::vector<const FeaturizedSample*> test_set;
        for (const auto& s : samples) {
            if (test_ids.count(s.individual_id)) {
                test_set.push_back(&s);
            } else if (val_ids.count(s.individual_id)) {
                val_set.push_back({s.feature, s.label});
            } else {
                train_set.push_back({s.feature, s.label});
            }
        }

        // Fit scaling on this fold's training features only.
        std::vector<MelFeature> train_feats;
        train_feats.reserve(train_set.size());
        for (auto& t : train_set) train_feats.push_back(std::move(t.feature));
        FeatureStats stats = standardize(train_feats);
        for (std::size_t i = 0; i < train_set.size(); ++i) {
            train_set[i].feature = std::move(train_feats[i]);
        }
        std::vector<MelFeature> val_feats;
        val_feats.reserve(val_set.size());
        for (auto& t : val_set) val_feats.push_back(std::move(t.feature));
        standardize(val_feats, stats);
        for (std::size_t i = 0; i < val_set.size(); ++i) {
            val_set[i].feature = std::move(val_feats[i]);
        }

        auto [bundle, history] = train(train_set, val_set, model_cfg, train_cfg);
        bundle.feature_stats = stats;

        std::vector<bool> labels;
        std::vector<double> scores;
        for (const auto* s : test_set) {
            std::vector<MelFeature> one{s->feature};
            standardize(one, stats);
            Prediction pred = predict(bundle, one.front());
            labels.push_back(s->label == 1);
            scores.push_back(pred.score);
        }
        EvalReport report = evaluate_scores(labels, scores, bundle.decision_threshold);
        result.mean_matrix.tp += static_cast<double>(report.matrix.tp);
        result.mean_matrix.fp += static_cast<double>(report.matrix.fp);
        result.mean_matrix.tn += static_cast<double>(report.matrix.tn);
        result.mean_matrix.fn += static_cast<double>(report.matrix.fn);
        result.folds.push_back(std::move(report));
    }

    result.mean_matrix.tp /= k;
    result.mean_matrix.fp /= k;
    result.mean_matrix.tn /= k;
    result.mean_matrix.fn /= k;
    result.mean_matrix_metrics = compute_metrics(result.mean_matrix);
    return result;
}

namespace {

EvalReport grouped_report(const std::vector<ScoredChunk>& chunks,
                          bool by_individual, AggregatePolicy policy,
                          double threshold) {
    std::map<std::string, std::pair<std::vector<double>, bool>> groups;
    for (const auto& c : chunks) {
        const std::string& key = by_individual ? c.individual_id : c.file_id;
        auto& g = groups[key];
        g.first.push_back(c.score);
        g.second = g.second || c.label;
    }
    std::vector<bool> labels;
    std::vector<double> scores;
    for (const auto& [key, g] : groups) {
        labels.push_back(g.second);
        scores.push_back(aggregate_recording(g.first, policy, threshold).score);
    }
    return evaluate_scores(labels, scores, threshold);
}

}  // namespace

LevelReports evaluate_levels(const std::vector<ScoredChunk>& chunks,
                             AggregatePolicy policy, double threshold) {
    if (chunks.empty()) throw EmptyGroup("no scored chunks");
    for (const auto& c : chunks) {
        if (c.individual_id.empty() || c.file_id.empty()) {
            throw EmptyGroup("chunk without grouping ids");
        }
    }

    LevelReports out;
    {
        std::vector<bool> labels;
        std::vector<double> scores;
        for (const auto& c : chunks) {
            labels.push_back(c.label);
            scores.push_back(c.score);
        }
        out.chunk = evaluate_scores(labels, scores, threshold);
    }
    out.file = grouped_report(chunks, false, policy, threshold);
    out.individual = grouped_report(chunks, true, policy, threshold);
    return out;
}

nlohmann::json report_to_json(const EvalReport& report) {
    nlohmann::json j;
    auto put = [&](const char* key, const std::optional<double>& v) {
        if (v) {
            j[key] = *v;
        } else {
            j[key] = nullptr;
        }
    };
    j["confusion"] = {{"tp", report.matrix.tp},
                      {"fp", report.matrix.fp},
                      {"tn", report.matrix.tn},
                      {"fn", report.matrix.fn}};
    put("accuracy", report.metrics.accuracy);
    put("sensitivity", report.metrics.sensitivity);
    put("specificity", report.metrics.specificity);
    put("precision", report.metrics.precision);
    put("f1", report.metrics.f1);
    put("auc", report.auc);
    nlohmann::json roc = nlohmann::json::array();
    for (const auto& p : report.roc_points) {
        roc.push_back({p.fpr, p.tpr, p.threshold});
    }
    j["roc_points"] = roc;
    return j;
}

void save_roc_csv(const std::vector<RocPoint>& points, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoFailure("cannot open for write: " + path);
    out << "fpr,tpr,threshold\n";
    char buf[128];
    for (const auto& p : points) {
        std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g\n", p.fpr, p.tpr,
                      p.threshold);
        out << buf;
    }
}

}  // namespace cough
