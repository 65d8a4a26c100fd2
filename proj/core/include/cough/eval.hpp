#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "cough/model.hpp"

namespace cough {

struct ConfusionMatrix {
    long long tp = 0, fp = 0, tn = 0, fn = 0;
    long long total() const { return tp + fp + tn + fn; }
};

// Elementwise mean of per-fold matrices; entries are reals.
struct MeanConfusion {
    double tp = 0, fp = 0, tn = 0, fn = 0;
};

// Zero denominators leave a metric absent, never NaN.
struct Metrics {
    std::optional<double> accuracy;
    std::optional<double> sensitivity;  // recall
    std::optional<double> specificity;
    std::optional<double> precision;
    std::optional<double> f1;
};

struct RocPoint {
    double fpr = 0, tpr = 0;
    double threshold = 0;
};

struct EvalReport {
    ConfusionMatrix matrix;
    Metrics metrics;
    std::optional<double> auc;
    std::vector<RocPoint> roc_points;
};

ConfusionMatrix confusion(const std::vector<bool>& labels,
                          const std::vector<bool>& predictions);

Metrics compute_metrics(const ConfusionMatrix& m);
Metrics compute_metrics(const MeanConfusion& m);

// ROC by sweeping distinct score thresholds (inclusive >=, matching
// predict). AUC is the Mann-Whitney concordance probability with ties
// counted half, accumulated in integers so it is exact.
std::pair<std::vector<RocPoint>, double> roc_auc(
    const std::vector<bool>& labels, const std::vector<double>& scores);

// Builds a full report: confusion at the given threshold plus ROC/AUC when
// both classes are present.
EvalReport evaluate_scores(const std::vector<bool>& labels,
                           const std::vector<double>& scores,
                           double threshold = 0.5);

struct FeaturizedSample {
    std::string individual_id;
    std::string file_id;
    int label = 0;
    MelFeature feature;
};

struct CrossValResult {
    MeanConfusion mean_matrix;
    Metrics mean_matrix_metrics;   // recomputed from the mean matrix
    std::vector<EvalReport> folds;
    std::vector<std::vector<std::string>> fold_individuals;
};

// k-fold cross-validation with per-individual folds. Feature statistics
// are fit on each fold's training data only.
CrossValResult cross_validate(const std::vector<FeaturizedSample>& samples,
                              int k, const ModelConfig& model_cfg,
                              const TrainConfig& train_cfg);

struct ScoredChunk {
    std::string individual_id;
    std::string file_id;
    bool label = false;
    double score = 0.0;
};

struct LevelReports {
    EvalReport chunk;
    EvalReport file;
    EvalReport individual;
};

// Chunk-level uses raw scores; file and individual levels aggregate each
// group's chunk scores with aggregate_recording first.
LevelReports evaluate_levels(const std::vector<ScoredChunk>& chunks,
                             AggregatePolicy policy = AggregatePolicy::mean,
                             double threshold = 0.5);

nlohmann::json report_to_json(const EvalReport& report);
void save_roc_csv(const std::vector<RocPoint>& points, const std::string& path);

}  // namespace cough
