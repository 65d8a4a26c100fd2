#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "cough/features.hpp"
#include "cough/preprocess.hpp"
#include "cough/segmenter.hpp"

namespace cough {

struct ModelConfig {
    std::vector<int> conv_channels = {8, 16, 32};  // 3x3 kernels, 2x2 max pool
    int hidden_units = 64;
    int n_classes = 2;
    double dropout_rate = 0.3;
    std::size_t input_rows = 64;  // n_mels
    std::size_t input_cols = 98;  // n_frames

    std::size_t weight_count() const;
    bool valid() const;  // pooled spatial dims stay >= 1 through all blocks
};

// Everything inference needs, in one serializable unit: the network, the
// preprocessing and feature recipe it was trained with, the cough gate,
// feature scaling stats, and the decision threshold.
struct ModelBundle {
    ModelConfig config;
    std::vector<float> weights;  // per layer, declaration order
    FeatureStats feature_stats;
    GateModel gate;
    double decision_threshold = 0.5;
    std::uint32_t format_version = 1;
    FeatureConfig feature_config;
    PreprocessConfig preprocess;
};

struct TrainConfig {
    int epochs = 70;
    int batch_size = 32;
    double learning_rate = 1e-3;
    enum class Optimizer { adam, sgd_momentum };
    Optimizer optimizer = Optimizer::adam;
    double momentum = 0.9;  // sgd_momentum only
    double beta1 = 0.9;     // adam only
    double beta2 = 0.999;
    std::uint64_t seed = 0;
    AugmentConfig augment;
};

struct TrainHistory {
    std::vector<double> train_loss;
    std::vector<double> val_loss;
    std::vector<double> val_accuracy;
    int best_epoch = -1;
};

struct TrainSample {
    MelFeature feature;
    int label = 0;
};

struct Prediction {
    int label = 0;
    double score = 0.0;  // positive-class probability
};

struct Aggregate {
    bool positive = false;
    double score = 0.0;
};

enum class AggregatePolicy { mean, max, majority };

// Random He-initialized weights; the starting point for train().
ModelBundle init_bundle(const ModelConfig& config, std::uint64_t seed);

// Probabilities over classes. Dropout is active only when training=true,
// with the mask drawn deterministically from rng_seed.
std::vector<double> forward(const ModelBundle& bundle, const MelFeature& feature,
                            bool training = false, std::uint64_t rng_seed = 0);

// Mean cross-entropy over the batch plus the gradient of that mean with
// respect to every weight, in weight order. Dropout masks are a pure
// function of (rng_seed, sample index), so repeated calls agree.
std::pair<double, std::vector<float>> loss_and_gradients(
    const ModelBundle& bundle, const std::vector<TrainSample>& batch,
    std::uint64_t rng_seed, bool training = true);

std::pair<ModelBundle, TrainHistory> train(
    const std::vector<TrainSample>& train_set,
    const std::vector<TrainSample>& val_set, const ModelConfig& model_cfg,
    const TrainConfig& train_cfg);

// Binary: positive iff score >= threshold (boundary inclusive). Three
// classes: label = argmax, score still the last class's probability.
Prediction predict(const ModelBundle& bundle, const MelFeature& feature);

// Combine per-chunk scores. majority's combined score is the fraction of
// chunks at or above the threshold; all policies then threshold the
// combined score inclusively.
Aggregate aggregate_recording(const std::vector<double>& scores,
                              AggregatePolicy policy = AggregatePolicy::mean,
                              double threshold = 0.5);

void save_bundle(const ModelBundle& bundle, const std::string& path);
ModelBundle load_bundle(const std::string& path);

// TrainHistory as CSV: epoch,train_loss,val_loss,val_accuracy.
void save_history_csv(const TrainHistory& history, const std::string& path);

}  // namespace cough
