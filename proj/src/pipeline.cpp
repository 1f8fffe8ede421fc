#include "coughdetect/pipeline.hpp"

#include <json.hpp>

#include <chrono>

namespace coughdetect {

const char* const kMessagePositive =
    "Your cough sound shares similarities to those of Covid-19 patients, if you are a "
    "high-risk individual, please contact health services immediately, otherwise "
    "quarantine yourself";
const char* const kMessageNegative =
    "Our system does not recognise your pattern as similar to those with Covid-19 in our "
    "database, still if you feel the most likely symptoms, please contact health services.";
const char* const kMessageNoCough = "Cough not detected, please try again.";

FeaturizeResult featurize_signal(const AudioSignal& signal, const AppConfig& cfg,
                                 bool fallback_whole_signal) {
    FeaturizeResult result;
    result.detection = detect_coughs(signal, cfg.preprocess, cfg.sift, cfg.detector);
    result.cough_detected = !result.detection.segments.ranges.empty();

    AudioSignal segment;
    segment.sample_rate = signal.sample_rate;
    if (result.cough_detected) {
        const auto [start, end] = result.detection.to_raw(0);
        segment.samples.assign(signal.samples.begin() + static_cast<long>(start),
                               signal.samples.begin() + static_cast<long>(end));
    } else if (fallback_whole_signal) {
        segment.samples = signal.samples;
    } else {
        return result;
    }

    if (segment.samples.empty()) {
        result.cough_detected = false;
        if (!fallback_whole_signal) return result;
        segment.samples = signal.samples;
    }

    const auto resampled = resample(segment, cfg.sonograph.sample_rate);
    result.tensor = build_tensor(resampled, cfg.sonograph, cfg.tensor_mode);
    return result;
}

std::string AnalysisResult::to_json() const {
    nlohmann::json j;
    j["cough_detected"] = cough_detected;
    if (positive_likely) {
        j["verdict"] = *positive_likely ? "PositiveLikely" : "NegativeLikely";
    } else {
        j["verdict"] = nullptr;
    }
    if (positive_probability) {
        j["positive_probability"] = *positive_probability;
    } else {
        j["positive_probability"] = nullptr;
    }
    j["message"] = message;
    j["processing_ms"] = processing_ms;
    return j.dump();
}

AnalysisResult analyze_signal(const AudioSignal& signal, const DeepCoughModel& model,
                              const AppConfig& cfg) {
    const auto t0 = std::chrono::steady_clock::now();
    AnalysisResult out;

    auto features = featurize_signal(signal, cfg, /*fallback_whole_signal=*/false);
    if (!features.cough_detected) {
        out.message = kMessageNoCough;
    } else {
        const auto probs = model.forward(features.tensor);
        const double p = probs.size() > 1 ? probs[1] : 0.0;
        out.cough_detected = true;
        out.positive_probability = p;
        out.positive_likely = p >= 0.5;
        out.message = *out.positive_likely ? kMessagePositive : kMessageNegative;
    }

    const auto t1 = std::chrono::steady_clock::now();
    out.processing_ms = std::chrono::duration<double, std::milli>(t1 - t0).count();
    return out;
}

}  // namespace coughdetect
