#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "coughdetect/service.hpp"
#include "support/corpus.hpp"

#include <httplib.h>
#include <json.hpp>

#include <chrono>
#include <filesystem>
#include <thread>

using namespace coughdetect;

namespace {

struct RunningServer {
    std::unique_ptr<AnalysisServer> server;
    std::thread thread;
    int port = 0;

    RunningServer(DeepCoughModel model, AppConfig cfg) {
        server = std::make_unique<AnalysisServer>(std::move(model), std::move(cfg));
        port = server->bind_any("127.0.0.1");
        REQUIRE(port > 0);
        thread = std::thread([this] { server->listen_after_bind(); });
        for (int i = 0; i < 200 && !server->is_running(); ++i) {
            std::this_thread::sleep_for(std::chrono::milliseconds(5));
        }
        REQUIRE(server->is_running());
    }
    ~RunningServer() {
        server->stop();
        thread.join();
    }
};

ModelWeights tiny_model() {
    ModelConfig cfg;  // 3-channel, 2-class
    auto w = DeepCoughModel::initialize(cfg, 823);
    quantize_to_float32(w);
    return w;
}

std::string wav_string(const AudioSignal& sig) {
    const auto bytes = write_wav(sig);
    return {reinterpret_cast<const char*>(bytes.data()), bytes.size()};
}

AudioSignal silence_wav() {
    AudioSignal s;
    s.sample_rate = 44100;
    s.samples.assign(44100, 0.0);
    return s;
}

}  // namespace

TEST_CASE("health endpoint reports the model") {
    RunningServer rs(DeepCoughModel(tiny_model()), AppConfig{});
    httplib::Client client("127.0.0.1", rs.port);
    const auto res = client.Get("/health");
    REQUIRE(res);
    CHECK(res->status == 200);
    const auto j = nlohmann::json::parse(res->body);
    CHECK(j.at("status") == "ok");
    CHECK(j.at("model_version").get<int>() == 1);
    CHECK(j.at("channels").get<int>() == 3);
}

TEST_CASE("silence returns the retry message with no verdict") {
    RunningServer rs(DeepCoughModel(tiny_model()), AppConfig{});
    httplib::Client client("127.0.0.1", rs.port);
    const auto res = client.Post("/analyze", wav_string(silence_wav()), "audio/wav");
    REQUIRE(res);
    CHECK(res->status == 200);
    const auto j = nlohmann::json::parse(res->body);
    CHECK(j.at("cough_detected").get<bool>() == false);
    CHECK(j.at("message").get<std::string>() == "Cough not detected, please try again.");
    CHECK(j.at("verdict").is_null());
    CHECK(j.at("positive_probability").is_null());
    CHECK(j.at("processing_ms").get<double>() >= 0.0);
}

TEST_CASE("a cough-like burst produces a verdict") {
    RunningServer rs(DeepCoughModel(tiny_model()), AppConfig{});
    httplib::Client client("127.0.0.1", rs.port);
    client.set_read_timeout(60, 0);
    const auto rec = corpus::make_recording(6, 1, corpus::BurstSpec{});
    const auto res = client.Post("/analyze", wav_string(rec.signal), "audio/wav");
    REQUIRE(res);
    CHECK(res->status == 200);
    const auto j = nlohmann::json::parse(res->body);
    CHECK(j.at("cough_detected").get<bool>() == true);
    const auto verdict = j.at("verdict").get<std::string>();
    CHECK((verdict == "PositiveLikely" || verdict == "NegativeLikely"));
    const double p = j.at("positive_probability").get<double>();
    CHECK(p >= 0.0);
    CHECK(p <= 1.0);
    const auto msg = j.at("message").get<std::string>();
    if (verdict == "PositiveLikely") {
        CHECK(msg.find("shares similarities") != std::string::npos);
    } else {
        CHECK(msg.find("does not recognise") != std::string::npos);
    }
}

TEST_CASE("multipart uploads use the audio field") {
    RunningServer rs(DeepCoughModel(tiny_model()), AppConfig{});
    httplib::Client client("127.0.0.1", rs.port);
    httplib::MultipartFormDataItems items{
        {"audio", wav_string(silence_wav()), "cough.wav", "audio/wav"}};
    const auto res = client.Post("/analyze", items);
    REQUIRE(res);
    CHECK(res->status == 200);
    const auto j = nlohmann::json::parse(res->body);
    CHECK(j.at("cough_detected").get<bool>() == false);

    httplib::MultipartFormDataItems wrong{{"other", "xx", "f.bin", "application/octet-stream"}};
    const auto res2 = client.Post("/analyze", wrong);
    REQUIRE(res2);
    CHECK(res2->status == 400);
}

TEST_CASE("corrupted payloads return 400") {
    RunningServer rs(DeepCoughModel(tiny_model()), AppConfig{});
    httplib::Client client("127.0.0.1", rs.port);
    const auto res = client.Post("/analyze", "this is not audio", "audio/wav");
    REQUIRE(res);
    CHECK(res->status == 400);
    CHECK(nlohmann::json::parse(res->body).contains("error"));
}

TEST_CASE("oversized bodies are rejected with 413") {
    AppConfig cfg;
    cfg.service_max_body = 1024 * 1024;
    RunningServer rs(DeepCoughModel(tiny_model()), cfg);
    httplib::Client client("127.0.0.1", rs.port);
    const std::string big(2 * 1024 * 1024, 'x');
    const auto res = client.Post("/analyze", big, "audio/wav");
    REQUIRE(res);
    CHECK(res->status == 413);
}

TEST_CASE("eight concurrent requests agree") {
    RunningServer rs(DeepCoughModel(tiny_model()), AppConfig{});
    const auto rec = corpus::make_recording(6, 1, corpus::BurstSpec{});
    const auto body = wav_string(rec.signal);

    std::vector<std::string> bodies(8);
    std::vector<std::thread> threads;
    for (int i = 0; i < 8; ++i) {
        threads.emplace_back([&, i] {
            httplib::Client client("127.0.0.1", rs.port);
            client.set_read_timeout(120, 0);
            const auto res = client.Post("/analyze", body, "audio/wav");
            if (res && res->status == 200) bodies[i] = res->body;
        });
    }
    for (auto& t : threads) t.join();

    REQUIRE(!bodies[0].empty());
    const auto first = nlohmann::json::parse(bodies[0]);
    for (int i = 1; i < 8; ++i) {
        REQUIRE(!bodies[i].empty());
        const auto j = nlohmann::json::parse(bodies[i]);
        CHECK(j.at("cough_detected") == first.at("cough_detected"));
        CHECK(j.at("verdict") == first.at("verdict"));
        CHECK(j.at("positive_probability") == first.at("positive_probability"));
        CHECK(j.at("message") == first.at("message"));
    }
}

TEST_CASE("nothing is persisted without the opt-in flag") {
    const auto store = std::filesystem::temp_directory_path() / "cd_store_test";
    std::filesystem::remove_all(store);
    std::filesystem::create_directories(store);

    AppConfig cfg;
    cfg.service_store_dir = store.string();
    RunningServer rs(DeepCoughModel(tiny_model()), cfg);
    httplib::Client client("127.0.0.1", rs.port);

    const auto body = wav_string(silence_wav());
    REQUIRE(client.Post("/analyze", body, "audio/wav"));
    REQUIRE(client.Get("/health"));
    CHECK(std::filesystem::is_empty(store));

    // explicit opt-in stores the payload
    const auto res = client.Post("/analyze?store=1", body, "audio/wav");
    REQUIRE(res);
    CHECK(res->status == 200);
    CHECK(!std::filesystem::is_empty(store));
    std::filesystem::remove_all(store);
}

TEST_CASE("opt-in is ignored when no store directory is configured") {
    const auto probe = std::filesystem::temp_directory_path() / "cd_probe_dir";
    std::filesystem::remove_all(probe);
    std::filesystem::create_directories(probe);
    const auto before = std::filesystem::current_path();
    std::filesystem::current_path(probe);

    {
        RunningServer rs(DeepCoughModel(tiny_model()), AppConfig{});
        httplib::Client client("127.0.0.1", rs.port);
        REQUIRE(client.Post("/analyze?store=1", wav_string(silence_wav()), "audio/wav"));
        CHECK(std::filesystem::is_empty(probe));
    }
    std::filesystem::current_path(before);
    std::filesystem::remove_all(probe);
}
