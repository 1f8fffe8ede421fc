#pragma once

#include "coughdetect/sonograph.hpp"

#include <array>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

namespace coughdetect {

struct ModelConfig {
    int input_bands = 33;
    int input_frames = 100;
    int input_channels = 3;  // 1 for the 2D variant
    std::array<int, 4> block_channels{16, 32, 64, 128};
    double dropout_rate = 0.2;
    int n_classes = 2;
};

struct LayerShape {
    int h = 0, w = 0, c = 0;
};

// Output shapes of every stage (conv and pool per block, then the pooled
// feature count and class count).
std::vector<LayerShape> layer_shapes(const ModelConfig& cfg);

// Trainable parameter count per layer: one entry per conv block plus the
// dense layer.
std::vector<long> parameter_counts(const ModelConfig& cfg);

// All parameters in one flat buffer, layer-ordered:
// conv1 W, conv1 b, ..., conv4 W, conv4 b, dense W, dense b.
struct ModelWeights {
    ModelConfig config;
    std::vector<double> params;
};

struct TrainConfig {
    double learning_rate = 1e-3;
    double adam_beta1 = 0.9;
    double adam_beta2 = 0.999;
    double adam_epsilon = 1e-8;
    int batch_size = 32;
    int max_epochs = 100;
    int early_stop_patience = 10;
    std::uint64_t rng_seed = 0;
    int threads = 0;  // 0 = hardware concurrency
};

struct EpochStats {
    int epoch = 0;
    double train_loss = 0.0;
    double val_auc = 0.0;
    double val_balanced_accuracy = 0.0;
    double selection_metric = 0.0;  // auc + balanced accuracy
};

struct TrainLog {
    std::vector<EpochStats> epochs;
    int best_epoch = -1;
    double best_metric = 0.0;
};

struct TrainSample {
    CoughTensor tensor;
    int label = 0;
};

class DeepCoughModel {
public:
    explicit DeepCoughModel(ModelWeights weights);

    // He-uniform kernels, zero biases.
    static ModelWeights initialize(const ModelConfig& cfg, std::uint64_t seed);

    const ModelWeights& weights() const { return weights_; }
    const ModelConfig& config() const { return weights_.config; }

    // Class probabilities. Dropout fires only when a generator is supplied.
    std::vector<double> forward(const CoughTensor& tensor,
                                std::mt19937_64* dropout_rng = nullptr) const;

    // Cross-entropy loss and parameter gradient for one sample (no dropout).
    double loss_and_gradient(const CoughTensor& tensor, int label,
                             std::vector<double>& grad) const;

    // Max relative error between analytic and central-difference gradients
    // over `n_samples` randomly chosen parameters.
    double gradient_check(const CoughTensor& tensor, int label,
                          int n_samples, std::uint64_t seed) const;

private:
    ModelWeights weights_;
};

// Mini-batch ADAM on categorical cross-entropy; keeps the weights of the
// epoch with the best validation AUC + balanced accuracy, stops after
// `early_stop_patience` epochs without improvement. Reproducible per seed.
std::pair<ModelWeights, TrainLog> train(const std::vector<TrainSample>& dataset,
                                        const std::vector<std::size_t>& train_idx,
                                        const std::vector<std::size_t>& val_idx,
                                        const ModelConfig& model_cfg,
                                        const TrainConfig& train_cfg);

// Versioned container: JSON config header + little-endian float32 payload.
std::vector<std::uint8_t> save_weights(const ModelWeights& weights);
ModelWeights load_weights(const std::vector<std::uint8_t>& bytes);
void save_weights_file(const ModelWeights& weights, const std::string& path);
ModelWeights load_weights_file(const std::string& path);

// Round every parameter through float32 so a save/load round-trip
// reproduces forward outputs bit-for-bit.
void quantize_to_float32(ModelWeights& weights);

}  // namespace coughdetect
