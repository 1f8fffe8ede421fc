#include "coughdetect/service.hpp"

#include <httplib.h>
#include <json.hpp>

#include <chrono>
#include <filesystem>
#include <fstream>

namespace coughdetect {

struct AnalysisServer::Impl {
    DeepCoughModel model;
    AppConfig cfg;
    httplib::Server server;

    Impl(DeepCoughModel m, AppConfig c) : model(std::move(m)), cfg(std::move(c)) {
        server.set_payload_max_length(cfg.service_max_body);

        server.Get("/health", [this](const httplib::Request&, httplib::Response& res) {
            nlohmann::json j{
                {"status", "ok"},
                {"model_version", 1},
                {"channels", model.config().input_channels},
                {"classes", model.config().n_classes},
            };
            res.set_content(j.dump(), "application/json");
        });

        server.Post("/analyze", [this](const httplib::Request& req, httplib::Response& res) {
            const std::string* body = &req.body;
            std::string multipart_content;
            if (req.is_multipart_form_data()) {
                if (!req.has_file("audio")) {
                    res.status = 400;
                    res.set_content(nlohmann::json{{"error", "missing multipart field 'audio'"}}.dump(),
                                    "application/json");
                    return;
                }
                multipart_content = req.get_file_value("audio").content;
                body = &multipart_content;
            }

            AudioSignal signal;
            try {
                signal = read_wav(std::span<const std::uint8_t>(
                    reinterpret_cast<const std::uint8_t*>(body->data()), body->size()));
            } catch (const std::exception& e) {
                res.status = 400;
                res.set_content(nlohmann::json{{"error", e.what()}}.dump(), "application/json");
                return;
            }

            // persistence is strictly opt-in
            if (req.get_param_value("store") == "1" && !cfg.service_store_dir.empty()) {
                const auto stamp = std::chrono::duration_cast<std::chrono::nanoseconds>(
                                       std::chrono::system_clock::now().time_since_epoch())
                                       .count();
                const auto path = std::filesystem::path(cfg.service_store_dir) /
                                  ("upload_" + std::to_string(stamp) + ".wav");
                std::ofstream f(path, std::ios::binary);
                f.write(body->data(), static_cast<std::streamsize>(body->size()));
            }

            const auto result = analyze_signal(signal, model, cfg);
            res.set_content(result.to_json(), "application/json");
        });
    }
};

AnalysisServer::AnalysisServer(DeepCoughModel model, AppConfig cfg)
    : impl_(std::make_unique<Impl>(std::move(model), std::move(cfg))) {}

AnalysisServer::~AnalysisServer() {
    if (impl_) impl_->server.stop();
}

int AnalysisServer::bind_any(const std::string& host) {
    return impl_->server.bind_to_any_port(host);
}

bool AnalysisServer::listen_after_bind() { return impl_->server.listen_after_bind(); }

bool AnalysisServer::listen(const std::string& host, int port) {
    return impl_->server.listen(host, port);
}

void AnalysisServer::stop() { impl_->server.stop(); }

bool AnalysisServer::is_running() const { return impl_->server.is_running(); }

}  // namespace coughdetect
