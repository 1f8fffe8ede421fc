#pragma once

#include "coughdetect/model.hpp"
#include "coughdetect/pipeline.hpp"

#include <memory>
#include <string>

namespace coughdetect {

// One-shot HTTP inference endpoint.
//
//   POST /analyze  - body: WAV bytes (or multipart field "audio");
//                    response: AnalysisResult JSON
//   GET  /health   - 200 with the model version descriptor
//
// Stateless across requests; nothing is written to disk unless the server
// was configured with a store directory AND the request carries store=1.
class AnalysisServer {
public:
    AnalysisServer(DeepCoughModel model, AppConfig cfg);
    ~AnalysisServer();
    AnalysisServer(const AnalysisServer&) = delete;
    AnalysisServer& operator=(const AnalysisServer&) = delete;

    // Binds to an ephemeral port; returns it (for tests).
    int bind_any(const std::string& host);
    bool listen_after_bind();                       // blocking
    bool listen(const std::string& host, int port); // blocking
    void stop();
    bool is_running() const;

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

}  // namespace coughdetect
