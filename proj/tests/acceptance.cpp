// Acceptance suite: runs every release criterion at its stated tolerance and
// prints one PASS/FAIL line per criterion. Exit status is the failure count.

#include "coughdetect/config.hpp"
#include "coughdetect/eval.hpp"
#include "coughdetect/service.hpp"
#include "support/corpus.hpp"
#include "support/gradpoint.hpp"
#include "support/oracles.hpp"

#include <httplib.h>
#include <json.hpp>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <random>
#include <sstream>
#include <thread>

using namespace coughdetect;
namespace fs = std::filesystem;

namespace {

int g_failures = 0;

void report(int criterion, bool pass, const std::string& what) {
    std::printf("%s criterion %d: %s\n", pass ? "PASS" : "FAIL", criterion, what.c_str());
    std::fflush(stdout);
    if (!pass) ++g_failures;
}

double now_s() {
    return std::chrono::duration<double>(
               std::chrono::steady_clock::now().time_since_epoch())
        .count();
}

// ---- criterion 1: architecture fidelity -----------------------------------

void criterion_architecture() {
    ModelConfig cfg;  // 33 x 100 x 3, 2 classes
    const auto shapes = layer_shapes(cfg);
    const int expect[10][3] = {{32, 99, 16}, {16, 49, 16}, {15, 48, 32}, {7, 24, 32},
                               {6, 23, 64},  {3, 11, 64},  {2, 10, 128}, {1, 5, 128},
                               {1, 1, 128},  {1, 1, 2}};
    bool ok = shapes.size() == 10;
    for (std::size_t i = 0; ok && i < 10; ++i) {
        ok = shapes[i].h == expect[i][0] && shapes[i].w == expect[i][1] &&
             shapes[i].c == expect[i][2];
    }
    const auto counts = parameter_counts(cfg);
    const long expect_counts[5] = {208, 2080, 8256, 32896, 258};
    long total = 0;
    ok = ok && counts.size() == 5;
    for (std::size_t i = 0; ok && i < 5; ++i) {
        ok = counts[i] == expect_counts[i];
        total += counts[i];
    }
    ok = ok && total == 43698;
    report(1, ok, "architecture shapes and parameter counts match the expected table");
}

// ---- criterion 2: EMD completeness -----------------------------------------

void criterion_emd_completeness() {
    std::mt19937_64 rng(2024);
    const double t0 = now_s();
    bool ok = true;
    double worst = 0.0;
    for (int trial = 0; trial < 50; ++trial) {
        const std::size_t n = 1000 + rng() % 19001;
        std::vector<double> x(n, 0.0);
        for (int k = 0; k < 4; ++k) {
            const double f = 15.0 + (static_cast<double>(rng() >> 11) * 0x1.0p-53) * 900.0;
            const double a = 0.2 + (static_cast<double>(rng() >> 11) * 0x1.0p-53);
            const double ph = (static_cast<double>(rng() >> 11) * 0x1.0p-53) * 6.28;
            for (std::size_t i = 0; i < n; ++i) {
                x[i] += a * std::sin(2.0 * std::numbers::pi * f * i / 4410.0 + ph);
            }
        }
        for (auto& v : x) v += 0.1 * (2.0 * (static_cast<double>(rng() >> 11) * 0x1.0p-53) - 1.0);

        const auto set = emd(x);
        std::vector<double> sum = set.residual;
        for (const auto& m : set.imfs) {
            for (std::size_t i = 0; i < n; ++i) sum[i] += m[i];
        }
        double num = 0.0, den = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            num += (sum[i] - x[i]) * (sum[i] - x[i]);
            den += x[i] * x[i];
        }
        const double rel = std::sqrt(num / den);
        worst = std::max(worst, rel);
        ok = ok && rel < 1e-8;
    }
    const double elapsed = now_s() - t0;
    ok = ok && elapsed < 30.0;
    std::ostringstream os;
    os << "EMD reconstruction on 50 random signals, worst rel L2 " << worst << " in "
       << elapsed << " s";
    report(2, ok, os.str());
}

// ---- criterion 3: Hilbert envelope -----------------------------------------

void criterion_hilbert() {
    const std::size_t n = 4410;
    std::vector<double> x(n);
    for (std::size_t i = 0; i < n; ++i) {
        x[i] = 0.7 * std::sin(2.0 * std::numbers::pi * 100.0 * i / 4410.0);
    }
    const auto ia = instantaneous_amplitude(x);
    bool ok = true;
    for (std::size_t i = n / 10; i < n - n / 10; ++i) {
        if (std::abs(ia[i] - 0.7) / 0.7 >= 0.01) ok = false;
    }

    std::vector<double> envelope(n), am(n);
    for (std::size_t i = 0; i < n; ++i) {
        envelope[i] = 1.0 + 0.5 * std::sin(2.0 * std::numbers::pi * 5.0 * i / 4410.0);
        am[i] = envelope[i] * std::sin(2.0 * std::numbers::pi * 200.0 * i / 4410.0);
    }
    const auto ia2 = instantaneous_amplitude(am);
    std::vector<double> mid_ia(ia2.begin() + n / 10, ia2.end() - n / 10);
    std::vector<double> mid_env(envelope.begin() + n / 10, envelope.end() - n / 10);
    const double corr = oracles::pearson(mid_ia, mid_env);
    ok = ok && corr >= 0.98;
    std::ostringstream os;
    os << "Hilbert envelope: tone within 1%, AM correlation " << corr;
    report(3, ok, os.str());
}

// ---- criterion 4: gradient correctness --------------------------------------

void criterion_gradients() {
    const double t0 = now_s();
    bool ok = true;
    double worst = 0.0;
    for (int seed = 0; seed < 10; ++seed) {
        ModelConfig cfg;
        cfg.input_channels = seed % 2 ? 1 : 3;
        DeepCoughModel model(gradpoint::make_weights(cfg, 500 + seed));
        const auto t = gradpoint::make_tensor(cfg, 40 + seed);
        const double err = model.gradient_check(t, seed % 2, 150, 9000 + seed);
        worst = std::max(worst, err);
        ok = ok && err < 1e-4;
    }
    const double elapsed = now_s() - t0;
    ok = ok && elapsed < 120.0;
    std::ostringstream os;
    os << "backprop vs central differences, worst rel err " << worst << " over 10 seeds in "
       << elapsed << " s";
    report(4, ok, os.str());
}

// ---- criterion 5: detection thresholds --------------------------------------

void criterion_detection_thresholds() {
    const DetectorConfig cfg;
    bool ok = cfg.delta == 0.006 && cfg.median_window == 500 && cfg.join_gap == 1500 &&
              cfg.min_segment == 400;

    auto bump_track = [](std::vector<std::pair<std::size_t, std::size_t>> bumps,
                         std::size_t n) {
        std::vector<double> fused(n, 0.0);
        for (const auto& [a, b] : bumps) {
            for (std::size_t i = a; i < b; ++i) fused[i] = 1.0;
        }
        return fused;
    };
    {
        const auto fused = bump_track({{1000, 1600}, {2600, 3200}}, 6000);
        const auto segs = segment(fused, detect_peaks(fused, cfg.delta), cfg, 4410);
        ok = ok && segs.ranges.size() == 1 && segs.ranges[0].first == 1000 &&
             segs.ranges[0].second == 3200;
    }
    {
        const auto fused = bump_track({{500, 800}}, 6000);
        const auto segs = segment(fused, detect_peaks(fused, cfg.delta), cfg, 4410);
        ok = ok && segs.ranges.empty();
    }
    {
        const std::vector<double> zeros(6000, 0.0);
        const auto segs = segment(zeros, detect_peaks(zeros, cfg.delta), cfg, 4410);
        ok = ok && segs.ranges.empty();
    }
    report(5, ok, "detection thresholds are the defaults; merge/drop/silence cases exact");
}

// ---- criterion 6: synthetic end-to-end via the CLI ---------------------------

void criterion_end_to_end() {
#ifndef CLI_PATH
#error "CLI_PATH must be defined"
#endif
    const fs::path dir = fs::temp_directory_path() / "cd_acceptance_corpus";
    fs::remove_all(dir);
    const double t0 = now_s();
    const auto manifest = corpus::write_corpus_with_manifest(dir.string(), 400, 11);
    const fs::path report_path = dir / "report.json";
    std::ostringstream cmd;
    cmd << CLI_PATH << " evaluate " << manifest << " --k 10 --mode 3d --seed 11"
        << " --lr 0.003 --max-epochs 40 --patience 10 -o " << report_path.string()
        << " > " << (dir / "stdout.txt").string() << " 2> " << (dir / "stderr.txt").string();
    const int rc = std::system(cmd.str().c_str());
    const double elapsed = now_s() - t0;

    bool ok = rc == 0;
    double auc = 0.0;
    if (ok) {
        std::ifstream f(report_path);
        ok = static_cast<bool>(f);
        if (ok) {
            nlohmann::json j;
            f >> j;
            auc = j.at("aggregate").at("auc").at("mean").get<double>();
            ok = auc >= 0.95;
        }
    }
    ok = ok && elapsed < 900.0;
    std::ostringstream os;
    os << "10-fold DeepCough3D on the 400-sample corpus: aggregate AUC " << auc << " in "
       << elapsed << " s (budget 900 s)";
    report(6, ok, os.str());
    fs::remove_all(dir);
}

// ---- criterion 7: metric arithmetic ------------------------------------------

void criterion_metric_arithmetic() {
    std::vector<std::pair<double, int>> scores;
    for (int i = 0; i < 2273; ++i) scores.emplace_back(0.9, 1);
    for (int i = 0; i < 66; ++i) scores.emplace_back(0.1, 1);
    for (int i = 0; i < 203; ++i) scores.emplace_back(0.9, 0);
    for (int i = 0; i < 5838; ++i) scores.emplace_back(0.1, 0);
    const auto m = compute_metrics(scores);
    const double sens_pp = 100.0 * m.sensitivity;
    const double spec_pp = 100.0 * m.specificity;
    const bool ok = std::abs(sens_pp - 97.18) < 0.01 && std::abs(spec_pp - 96.64) < 0.01;
    std::ostringstream os;
    os << "reference counts give sensitivity " << sens_pp << "% and specificity " << spec_pp
       << "%";
    report(7, ok, os.str());
}

// ---- criterion 8: severity banding -------------------------------------------

void criterion_severity() {
    auto sev = [](double ct) {
        ClinicalLabel l;
        l.covid_positive = true;
        l.ct = ct;
        return severity_label(l);
    };
    auto lym = [](double v) {
        ClinicalLabel l;
        l.lym_percent = v;
        return lymphopenia_label(l);
    };
    const bool ok = sev(32.0) == SeverityClass::BorderlinePositive &&
                    sev(25.0) == SeverityClass::StandardPositive &&
                    sev(20.0) == SeverityClass::HighPositive &&
                    sev(34.9) == SeverityClass::BorderlinePositive &&
                    sev(29.9) == SeverityClass::StandardPositive &&
                    lym(15.0) == LymphocyteClass::Lymphopenia &&
                    lym(20.0) == LymphocyteClass::NormalLymphocytes;
    report(8, ok, "Ct bands {32,25,20,34.9,29.9} and LYM% {15,20} map exactly");
}

// ---- criterion 9: tensor contract ---------------------------------------------

void criterion_tensor_contract() {
    bool ok = true;
    std::mt19937_64 rng(61);
    AudioSignal sig;
    sig.sample_rate = 22050;
    sig.samples.resize(22050);
    for (auto& v : sig.samples) {
        v = 0.3 * (2.0 * (static_cast<double>(rng() >> 11) * 0x1.0p-53) - 1.0);
    }

    for (auto mode : {TensorMode::ThreeD, TensorMode::TwoD}) {
        const auto t = build_tensor(sig, {}, mode);
        ok = ok && t.bands == 33 && t.frames == 100 &&
             t.channels == (mode == TensorMode::ThreeD ? 3 : 1);
        for (double v : t.data) ok = ok && std::isfinite(v);
        // 1.0 s at 22050 fills 44 frames; the tail columns are exact zeros
        for (int b = 0; b < 33 && ok; ++b) {
            for (int f = 44; f < 100; ++f) {
                for (int c = 0; c < t.channels; ++c) ok = ok && t.at(b, f, c) == 0.0;
            }
        }
        // gain invariance
        AudioSignal scaled = sig;
        for (auto& v : scaled.samples) v *= 7.3;
        const auto ts = build_tensor(scaled, {}, mode);
        for (std::size_t i = 0; i < t.data.size(); ++i) {
            ok = ok && std::abs(t.data[i] - ts.data[i]) < 1e-6;
        }
    }

    AudioSignal full;
    full.sample_rate = 22050;
    full.samples.assign(51156, 0.0);  // 2.32 s
    for (std::size_t i = 0; i < full.samples.size(); ++i) {
        full.samples[i] = 0.4 * std::sin(2.0 * std::numbers::pi * 700.0 * i / 22050.0);
    }
    ok = ok && frame_count(full.samples.size(), 2048, 512) == 100;
    const auto t = build_tensor(full, {}, TensorMode::ThreeD);
    // every column holds signal (no padded tail)
    for (int f = 0; f < 100 && ok; ++f) {
        double col = 0.0;
        for (int b = 0; b < 33; ++b) {
            for (int c = 0; c < 3; ++c) col += std::abs(t.at(b, f, c));
        }
        ok = ok && col > 0.0;
    }
    report(9, ok, "tensor is 33x100xC, zero-padded tail, gain invariant; 2.32 s fills 100 frames");
}

// ---- criterion 10: service contract -------------------------------------------

void criterion_service() {
    bool ok = true;

    ModelConfig mc;
    auto weights = DeepCoughModel::initialize(mc, 321);
    quantize_to_float32(weights);

    const fs::path store = fs::temp_directory_path() / "cd_acceptance_store";
    fs::remove_all(store);
    fs::create_directories(store);

    AppConfig cfg;
    cfg.service_store_dir = store.string();
    AnalysisServer server(DeepCoughModel(weights), cfg);
    const int port = server.bind_any("127.0.0.1");
    ok = ok && port > 0;
    std::thread listener([&] { server.listen_after_bind(); });
    for (int i = 0; i < 200 && !server.is_running(); ++i) {
        std::this_thread::sleep_for(std::chrono::milliseconds(5));
    }

    AudioSignal silence;
    silence.sample_rate = 44100;
    silence.samples.assign(44100, 0.0);
    const auto silence_bytes = write_wav(silence);
    const std::string silence_body(reinterpret_cast<const char*>(silence_bytes.data()),
                                   silence_bytes.size());

    {
        httplib::Client client("127.0.0.1", port);
        const auto res = client.Post("/analyze", silence_body, "audio/wav");
        ok = ok && res && res->status == 200;
        if (ok) {
            const auto j = nlohmann::json::parse(res->body);
            ok = ok && j.at("cough_detected").get<bool>() == false &&
                 j.at("message").get<std::string>() ==
                     "Cough not detected, please try again.";
        }
    }

    // eight concurrent requests against one burst recording
    const auto rec = corpus::make_recording(6, 1, corpus::BurstSpec{});
    const auto rec_bytes = write_wav(rec.signal);
    const std::string rec_body(reinterpret_cast<const char*>(rec_bytes.data()),
                               rec_bytes.size());
    std::vector<std::string> bodies(8);
    {
        std::vector<std::thread> pool;
        for (int i = 0; i < 8; ++i) {
            pool.emplace_back([&, i] {
                httplib::Client client("127.0.0.1", port);
                client.set_read_timeout(180, 0);
                const auto res = client.Post("/analyze", rec_body, "audio/wav");
                if (res && res->status == 200) bodies[i] = res->body;
            });
        }
        for (auto& t : pool) t.join();
    }
    ok = ok && !bodies[0].empty();
    if (ok) {
        const auto first = nlohmann::json::parse(bodies[0]);
        ok = ok && first.at("cough_detected").get<bool>();
        for (int i = 1; i < 8 && ok; ++i) {
            ok = ok && !bodies[i].empty();
            if (!ok) break;
            const auto j = nlohmann::json::parse(bodies[i]);
            ok = ok && j.at("verdict") == first.at("verdict") &&
                 j.at("positive_probability") == first.at("positive_probability") &&
                 j.at("cough_detected") == first.at("cough_detected");
        }
    }

    // nothing persisted without the explicit opt-in
    ok = ok && fs::is_empty(store);

    server.stop();
    listener.join();
    fs::remove_all(store);
    report(10, ok, "exact retry message, 8 consistent concurrent requests, no writes without opt-in");
}

}  // namespace

int main() {
    criterion_architecture();
    criterion_emd_completeness();
    criterion_hilbert();
    criterion_gradients();
    criterion_detection_thresholds();
    criterion_end_to_end();
    criterion_metric_arithmetic();
    criterion_severity();
    criterion_tensor_contract();
    criterion_service();
    if (g_failures == 0) {
        std::printf("all acceptance criteria passed\n");
    } else {
        std::printf("%d criterion(s) FAILED\n", g_failures);
    }
    return g_failures;
}
