#pragma once

#include "coughdetect/detector.hpp"
#include "coughdetect/model.hpp"
#include "coughdetect/sonograph.hpp"

#include <optional>
#include <string>

namespace coughdetect {

// Shared configuration bundle for the full pipeline.
struct AppConfig {
    PreprocessConfig preprocess;
    SiftConfig sift;
    DetectorConfig detector;
    SonographConfig sonograph;
    TensorMode tensor_mode = TensorMode::ThreeD;
    int n_classes = 2;
    double dropout_rate = 0.2;
    TrainConfig train;

    int service_port = 8080;
    std::string service_host = "0.0.0.0";
    std::size_t service_max_body = 20 * 1024 * 1024;
    std::string service_store_dir;  // empty = persistence disabled

    ModelConfig model_config() const {
        ModelConfig m;
        m.input_bands = sonograph.n_mels;
        m.input_frames = sonograph.n_frames;
        m.input_channels = tensor_mode == TensorMode::ThreeD ? 3 : 1;
        m.dropout_rate = dropout_rate;
        m.n_classes = n_classes;
        return m;
    }
};

struct FeaturizeResult {
    bool cough_detected = false;
    DetectionResult detection;
    CoughTensor tensor;  // empty when no cough and fallback disabled
};

// Detection followed by feature extraction of the first detected segment
// (mapped back to the raw signal and resampled to the sonograph rate).
// With `fallback_whole_signal`, an undetected recording featurizes in full
// instead of coming back empty.
FeaturizeResult featurize_signal(const AudioSignal& signal, const AppConfig& cfg,
                                 bool fallback_whole_signal);

struct AnalysisResult {
    bool cough_detected = false;
    std::optional<bool> positive_likely;
    std::optional<double> positive_probability;
    std::string message;
    double processing_ms = 0.0;

    std::string to_json() const;
};

// Fig-2 style user-facing messages.
extern const char* const kMessagePositive;
extern const char* const kMessageNegative;
extern const char* const kMessageNoCough;

// Full inference pass over one recording.
AnalysisResult analyze_signal(const AudioSignal& signal, const DeepCoughModel& model,
                              const AppConfig& cfg);

}  // namespace coughdetect
