#include "coughdetect/config.hpp"
#include "coughdetect/eval.hpp"
#include "coughdetect/service.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <memory>
#include <mutex>
#include <thread>

namespace {

using namespace coughdetect;

void write_file_atomic(const std::string& path, const std::string& content) {
    const std::string tmp = path + ".tmp";
    {
        std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
        if (!f) throw std::runtime_error("cannot write " + tmp);
        f << content;
    }
    if (std::rename(tmp.c_str(), path.c_str()) != 0)
        throw std::runtime_error("cannot move into place: " + path);
}

// featurize every manifest entry (detection with whole-signal fallback)
std::vector<TrainSample> load_dataset(const std::vector<ManifestEntry>& entries,
                                      const AppConfig& cfg, int threads) {
    std::vector<TrainSample> dataset(entries.size());
    std::atomic_size_t next{0};
    std::atomic_bool failed{false};
    std::string error;
    std::mutex error_mutex;

    auto worker = [&] {
        for (std::size_t i = next.fetch_add(1); i < entries.size(); i = next.fetch_add(1)) {
            if (failed.load()) return;
            try {
                const auto signal = read_wav_file(entries[i].path);
                auto feat = featurize_signal(signal, cfg, /*fallback_whole_signal=*/true);
                dataset[i] = {std::move(feat.tensor), entries[i].label};
            } catch (const std::exception& e) {
                std::lock_guard<std::mutex> lock(error_mutex);
                error = entries[i].path + ": " + e.what();
                failed.store(true);
                return;
            }
        }
    };

    const int n = threads > 0 ? threads : std::max(1u, std::thread::hardware_concurrency());
    std::vector<std::thread> pool;
    for (int t = 0; t < n; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
    if (failed.load()) throw std::runtime_error(error);
    return dataset;
}

nlohmann::json log_to_json(const TrainLog& log) {
    nlohmann::json j;
    j["best_epoch"] = log.best_epoch;
    j["best_metric"] = log.best_metric;
    for (const auto& e : log.epochs) {
        j["epochs"].push_back({{"epoch", e.epoch},
                               {"train_loss", e.train_loss},
                               {"val_auc", e.val_auc},
                               {"val_balanced_accuracy", e.val_balanced_accuracy},
                               {"selection_metric", e.selection_metric}});
    }
    return j;
}

int run(int argc, char** argv) {
    CLI::App app{"EMD cough detection, sonograph features, and the DeepCough classifier"};
    app.require_subcommand(1);
    app.fallthrough();  // global flags may follow the subcommand

    std::string config_path;
    std::uint64_t seed = 0;
    bool seed_given = false;
    app.add_option("--config", config_path, "TOML or JSON config file");
    auto* seed_opt = app.add_option("--seed", seed, "RNG seed override");

    std::string in_path, out_path, model_path, manifest_path, mode_flag, host, store_dir;
    int k_folds = 10, classes = 0, max_epochs = 0, batch_size = 0, patience = 0, threads = 0;
    int port = 0;
    double lr = 0.0, val_fraction = 0.2;

    auto* detect_cmd = app.add_subcommand("detect", "print detected cough segments as JSON");
    detect_cmd->add_option("input", in_path, "input WAV file")->required();

    auto* feat_cmd = app.add_subcommand("featurize", "write the serialized feature tensor");
    feat_cmd->add_option("input", in_path, "input WAV file")->required();
    feat_cmd->add_option("-o,--output", out_path, "output tensor file")->required();
    auto* feat_mode = feat_cmd->add_option("--mode", mode_flag, "2d or 3d");

    auto* train_cmd = app.add_subcommand("train", "train a model from a manifest");
    train_cmd->add_option("manifest", manifest_path, "manifest CSV")->required();
    train_cmd->add_option("-o,--output", out_path, "output model file")->required();
    auto* train_mode = train_cmd->add_option("--mode", mode_flag, "2d or 3d");
    auto* train_classes = train_cmd->add_option("--classes", classes, "number of classes");
    auto* train_epochs = train_cmd->add_option("--max-epochs", max_epochs, "epoch cap");
    auto* train_batch = train_cmd->add_option("--batch-size", batch_size, "mini-batch size");
    auto* train_lr = train_cmd->add_option("--lr", lr, "learning rate");
    auto* train_patience = train_cmd->add_option("--patience", patience, "early stop patience");
    auto* train_threads = train_cmd->add_option("--threads", threads, "worker threads");
    train_cmd->add_option("--val-fraction", val_fraction, "validation holdout fraction");

    auto* eval_cmd = app.add_subcommand("evaluate", "stratified k-fold evaluation");
    eval_cmd->add_option("manifest", manifest_path, "manifest CSV")->required();
    auto* eval_model = eval_cmd->add_option("--model", model_path,
                                            "score this model instead of training per fold");
    eval_cmd->add_option("--k", k_folds, "number of folds");
    eval_cmd->add_option("-o,--output", out_path, "report JSON path");
    auto* eval_mode = eval_cmd->add_option("--mode", mode_flag, "2d or 3d");
    auto* eval_classes = eval_cmd->add_option("--classes", classes, "number of classes");
    auto* eval_epochs = eval_cmd->add_option("--max-epochs", max_epochs, "epoch cap");
    auto* eval_batch = eval_cmd->add_option("--batch-size", batch_size, "mini-batch size");
    auto* eval_lr = eval_cmd->add_option("--lr", lr, "learning rate");
    auto* eval_patience = eval_cmd->add_option("--patience", patience, "early stop patience");
    auto* eval_threads = eval_cmd->add_option("--threads", threads, "worker threads");

    auto* serve_cmd = app.add_subcommand("serve", "run the HTTP inference endpoint");
    serve_cmd->add_option("--model", model_path, "model file")->required();
    auto* serve_port = serve_cmd->add_option("--port", port, "listen port");
    auto* serve_host = serve_cmd->add_option("--host", host, "bind address");
    auto* serve_store = serve_cmd->add_option("--store-dir", store_dir,
                                              "directory for opt-in uploads");

    CLI11_PARSE(app, argc, argv);
    seed_given = seed_opt->count() > 0;

    AppConfig cfg = load_app_config(config_path);
    if (seed_given) cfg.train.rng_seed = seed;

    auto apply_mode = [&](CLI::Option* opt) {
        if (opt->count() == 0) return;
        if (mode_flag == "2d" || mode_flag == "2D") cfg.tensor_mode = TensorMode::TwoD;
        else if (mode_flag == "3d" || mode_flag == "3D") cfg.tensor_mode = TensorMode::ThreeD;
        else throw std::runtime_error("--mode expects 2d or 3d");
    };
    auto apply_train_flags = [&](CLI::Option* o_classes, CLI::Option* o_epochs,
                                 CLI::Option* o_batch, CLI::Option* o_lr,
                                 CLI::Option* o_patience, CLI::Option* o_threads) {
        if (o_classes->count()) cfg.n_classes = classes;
        if (o_epochs->count()) cfg.train.max_epochs = max_epochs;
        if (o_batch->count()) cfg.train.batch_size = batch_size;
        if (o_lr->count()) cfg.train.learning_rate = lr;
        if (o_patience->count()) cfg.train.early_stop_patience = patience;
        if (o_threads->count()) cfg.train.threads = threads;
    };

    if (detect_cmd->parsed()) {
        const auto signal = read_wav_file(in_path);
        const auto det = detect_coughs(signal, cfg.preprocess, cfg.sift, cfg.detector);
        nlohmann::json j;
        j["segments"] = nlohmann::json::array();
        for (std::size_t i = 0; i < det.segments.ranges.size(); ++i) {
            const auto [s, e] = det.to_raw(i);
            j["segments"].push_back({s, e});
        }
        std::cout << j.dump() << "\n";
        return 0;
    }

    if (feat_cmd->parsed()) {
        apply_mode(feat_mode);
        const auto signal = read_wav_file(in_path);
        auto feat = featurize_signal(signal, cfg, /*fallback_whole_signal=*/true);
        const auto bytes = serialize_tensor(feat.tensor);
        write_file_atomic(out_path,
                          std::string(reinterpret_cast<const char*>(bytes.data()), bytes.size()));
        std::cerr << (feat.cough_detected ? "featurized first detected segment\n"
                                          : "no cough detected; featurized whole signal\n");
        return 0;
    }

    if (train_cmd->parsed()) {
        apply_mode(train_mode);
        apply_train_flags(train_classes, train_epochs, train_batch, train_lr, train_patience,
                          train_threads);
        const auto entries = read_manifest(manifest_path);
        const auto dataset = load_dataset(entries, cfg, cfg.train.threads);

        std::vector<int> labels(dataset.size());
        for (std::size_t i = 0; i < dataset.size(); ++i) labels[i] = dataset[i].label;
        const int holdout_k = std::max(2, static_cast<int>(std::lround(1.0 / val_fraction)));
        const auto folds = stratified_kfold(labels, holdout_k, cfg.train.rng_seed);
        std::vector<std::size_t> val_idx = folds[0], train_idx;
        for (int i = 1; i < holdout_k; ++i)
            train_idx.insert(train_idx.end(), folds[i].begin(), folds[i].end());

        auto [weights, log] = train(dataset, train_idx, val_idx, cfg.model_config(), cfg.train);
        save_weights_file(weights, out_path);
        std::cout << log_to_json(log).dump(2) << "\n";
        return 0;
    }

    if (eval_cmd->parsed()) {
        apply_mode(eval_mode);
        apply_train_flags(eval_classes, eval_epochs, eval_batch, eval_lr, eval_patience,
                          eval_threads);
        const auto entries = read_manifest(manifest_path);
        const auto dataset = load_dataset(entries, cfg, cfg.train.threads);

        EvalReport report;
        if (eval_model->count() > 0) {
            auto model = std::make_shared<DeepCoughModel>(load_weights_file(model_path));
            ScorerFactory factory = [model](const std::vector<std::size_t>&,
                                            const std::vector<std::size_t>&) -> Scorer {
                return [model](const CoughTensor& t) { return model->forward(t); };
            };
            report = run_cv_with(dataset, k_folds, cfg.train.rng_seed,
                                 model->config().n_classes, factory);
        } else {
            report = run_cv(dataset, cfg.model_config(), cfg.train, k_folds,
                            cfg.train.rng_seed);
        }
        const std::string json = report.to_json();
        if (!out_path.empty()) write_file_atomic(out_path, json + "\n");
        std::cout << json << "\n";
        std::cerr << report.summary_table("DeepCough") << "\n";
        return 0;
    }

    if (serve_cmd->parsed()) {
        if (serve_port->count()) cfg.service_port = port;
        if (serve_host->count()) cfg.service_host = host;
        if (serve_store->count()) cfg.service_store_dir = store_dir;
        DeepCoughModel model(load_weights_file(model_path));
        AnalysisServer server(std::move(model), cfg);
        std::cerr << "listening on " << cfg.service_host << ":" << cfg.service_port << "\n";
        if (!server.listen(cfg.service_host, cfg.service_port))
            throw std::runtime_error("serve: failed to bind " + cfg.service_host + ":" +
                                     std::to_string(cfg.service_port));
        return 0;
    }

    return 1;
}

}  // namespace

int main(int argc, char** argv) {
    try {
        return run(argc, argv);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
