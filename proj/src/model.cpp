#include "coughdetect/model.hpp"

#include "coughdetect/metrics.hpp"

#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <limits>
#include <stdexcept>
#include <thread>
#include <utility>

namespace coughdetect {

namespace {

constexpr int kKernel = 2;
constexpr int kPool = 2;
constexpr int kGradChunks = 8;  // fixed so reductions are order-stable

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

std::uint64_t mix(std::uint64_t a, std::uint64_t b, std::uint64_t c = 0, std::uint64_t d = 0) {
    return splitmix64(splitmix64(splitmix64(splitmix64(a) ^ b) ^ c) ^ d);
}

double uniform_unit(std::mt19937_64& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

struct Dims {
    struct Block {
        int in_h, in_w, in_c;
        int conv_h, conv_w, out_c;
        int pool_h, pool_w;
        std::size_t w_off, b_off;  // parameter offsets
    };
    std::array<Block, 4> blocks;
    std::size_t dense_w_off, dense_b_off;
    std::size_t total_params;
    int gap_c, n_classes;
};

Dims compute_dims(const ModelConfig& cfg) {
    Dims d;
    int h = cfg.input_bands, w = cfg.input_frames, c = cfg.input_channels;
    std::size_t off = 0;
    for (int i = 0; i < 4; ++i) {
        auto& b = d.blocks[i];
        b.in_h = h;
        b.in_w = w;
        b.in_c = c;
        b.out_c = cfg.block_channels[i];
        b.conv_h = h - (kKernel - 1);
        b.conv_w = w - (kKernel - 1);
        if (b.conv_h < 1 || b.conv_w < 1)
            throw std::invalid_argument("model: input too small for the conv stack");
        b.pool_h = b.conv_h / kPool;
        b.pool_w = b.conv_w / kPool;
        b.w_off = off;
        off += static_cast<std::size_t>(b.out_c) * b.in_c * kKernel * kKernel;
        b.b_off = off;
        off += b.out_c;
        h = b.pool_h;
        w = b.pool_w;
        c = b.out_c;
    }
    d.gap_c = c;
    d.n_classes = cfg.n_classes;
    d.dense_w_off = off;
    off += static_cast<std::size_t>(cfg.n_classes) * c;
    d.dense_b_off = off;
    off += cfg.n_classes;
    d.total_params = off;
    return d;
}

struct Workspace {
    // per block: pre-ReLU conv output, post-ReLU, pooled, argmax, dropout mask
    std::array<std::vector<double>, 4> conv_z, conv_a, pool, dropped;
    std::array<std::vector<std::size_t>, 4> argmax;
    std::array<std::vector<double>, 4> drop_mask;
    std::vector<double> gap, logits, probs;
};

void forward_pass(const ModelConfig& cfg, const Dims& d, const std::vector<double>& params,
                  const CoughTensor& tensor, std::mt19937_64* dropout_rng, Workspace& ws) {
    if (tensor.bands != cfg.input_bands || tensor.frames != cfg.input_frames ||
        tensor.channels != cfg.input_channels) {
        throw std::invalid_argument("model: tensor shape does not match the model input");
    }

    const std::vector<double>* input = &tensor.data;
    int in_h = cfg.input_bands, in_w = cfg.input_frames, in_c = cfg.input_channels;

    for (int blk = 0; blk < 4; ++blk) {
        const auto& b = d.blocks[blk];
        const double* W = params.data() + b.w_off;
        const double* bias = params.data() + b.b_off;

        auto& z = ws.conv_z[blk];
        z.assign(static_cast<std::size_t>(b.conv_h) * b.conv_w * b.out_c, 0.0);
        const double* in = input->data();
        for (int y = 0; y < b.conv_h; ++y) {
            for (int x = 0; x < b.conv_w; ++x) {
                double* zrow = z.data() + (static_cast<std::size_t>(y) * b.conv_w + x) * b.out_c;
                for (int dy = 0; dy < kKernel; ++dy) {
                    const double* irow =
                        in + (static_cast<std::size_t>(y + dy) * in_w + x) * in_c;
                    for (int dx = 0; dx < kKernel; ++dx) {
                        for (int ic = 0; ic < in_c; ++ic) {
                            const double v = irow[dx * in_c + ic];
                            const double* wrow =
                                W + ((static_cast<std::size_t>(ic) * kKernel + dy) * kKernel + dx) *
                                        b.out_c;
                            for (int oc = 0; oc < b.out_c; ++oc) zrow[oc] += v * wrow[oc];
                        }
                    }
                }
                for (int oc = 0; oc < b.out_c; ++oc) zrow[oc] += bias[oc];
            }
        }

        auto& a = ws.conv_a[blk];
        a.resize(z.size());
        for (std::size_t i = 0; i < z.size(); ++i) a[i] = z[i] > 0.0 ? z[i] : 0.0;

        auto& pooled = ws.pool[blk];
        auto& amax = ws.argmax[blk];
        pooled.assign(static_cast<std::size_t>(b.pool_h) * b.pool_w * b.out_c, 0.0);
        amax.assign(pooled.size(), 0);
        for (int y = 0; y < b.pool_h; ++y) {
            for (int x = 0; x < b.pool_w; ++x) {
                for (int oc = 0; oc < b.out_c; ++oc) {
                    double best = -std::numeric_limits<double>::infinity();
                    std::size_t best_idx = 0;
                    for (int dy = 0; dy < kPool; ++dy) {
                        for (int dx = 0; dx < kPool; ++dx) {
                            const std::size_t idx =
                                (static_cast<std::size_t>(kPool * y + dy) * b.conv_w +
                                 (kPool * x + dx)) * b.out_c + oc;
                            if (a[idx] > best) {
                                best = a[idx];
                                best_idx = idx;
                            }
                        }
                    }
                    const std::size_t out_idx =
                        (static_cast<std::size_t>(y) * b.pool_w + x) * b.out_c + oc;
                    pooled[out_idx] = best;
                    amax[out_idx] = best_idx;
                }
            }
        }

        auto& dropped = ws.dropped[blk];
        auto& mask = ws.drop_mask[blk];
        dropped.resize(pooled.size());
        if (dropout_rng && cfg.dropout_rate > 0.0) {
            mask.resize(pooled.size());
            const double keep_scale = 1.0 / (1.0 - cfg.dropout_rate);
            for (std::size_t i = 0; i < pooled.size(); ++i) {
                mask[i] = uniform_unit(*dropout_rng) < cfg.dropout_rate ? 0.0 : keep_scale;
                dropped[i] = pooled[i] * mask[i];
            }
        } else {
            mask.clear();
            dropped = pooled;
        }

        input = &dropped;
        in_h = b.pool_h;
        in_w = b.pool_w;
        in_c = b.out_c;
    }
    (void)in_h;

    // global average pooling over the remaining spatial extent
    const auto& last = d.blocks[3];
    const int spatial = last.pool_h * last.pool_w;
    ws.gap.assign(d.gap_c, 0.0);
    for (int s = 0; s < spatial; ++s) {
        for (int c = 0; c < d.gap_c; ++c) {
            ws.gap[c] += ws.dropped[3][static_cast<std::size_t>(s) * d.gap_c + c];
        }
    }
    for (auto& v : ws.gap) v /= spatial;

    const double* DW = params.data() + d.dense_w_off;
    const double* Db = params.data() + d.dense_b_off;
    ws.logits.assign(d.n_classes, 0.0);
    for (int k = 0; k < d.n_classes; ++k) {
        double acc = Db[k];
        for (int c = 0; c < d.gap_c; ++c) acc += DW[static_cast<std::size_t>(k) * d.gap_c + c] * ws.gap[c];
        ws.logits[k] = acc;
    }

    const double zmax = *std::max_element(ws.logits.begin(), ws.logits.end());
    ws.probs.assign(d.n_classes, 0.0);
    double denom = 0.0;
    for (int k = 0; k < d.n_classes; ++k) {
        ws.probs[k] = std::exp(ws.logits[k] - zmax);
        denom += ws.probs[k];
    }
    for (auto& p : ws.probs) p /= denom;
}

// Cross-entropy gradient; accumulates into grad (same layout as params).
void backward_pass(const ModelConfig&, const Dims& d, const std::vector<double>& params,
                   const CoughTensor& tensor, int label, const Workspace& ws,
                   std::vector<double>& grad) {
    const auto& last = d.blocks[3];
    const int spatial = last.pool_h * last.pool_w;

    std::vector<double> dlogits(d.n_classes);
    for (int k = 0; k < d.n_classes; ++k) dlogits[k] = ws.probs[k] - (k == label ? 1.0 : 0.0);

    double* dDW = grad.data() + d.dense_w_off;
    double* dDb = grad.data() + d.dense_b_off;
    std::vector<double> dgap(d.gap_c, 0.0);
    const double* DW = params.data() + d.dense_w_off;
    for (int k = 0; k < d.n_classes; ++k) {
        dDb[k] += dlogits[k];
        for (int c = 0; c < d.gap_c; ++c) {
            dDW[static_cast<std::size_t>(k) * d.gap_c + c] += dlogits[k] * ws.gap[c];
            dgap[c] += DW[static_cast<std::size_t>(k) * d.gap_c + c] * dlogits[k];
        }
    }

    // back through GAP into block 4's dropout output
    std::vector<double> ddropped(static_cast<std::size_t>(spatial) * d.gap_c);
    for (int s = 0; s < spatial; ++s) {
        for (int c = 0; c < d.gap_c; ++c) {
            ddropped[static_cast<std::size_t>(s) * d.gap_c + c] = dgap[c] / spatial;
        }
    }

    for (int blk = 3; blk >= 0; --blk) {
        const auto& b = d.blocks[blk];

        // dropout
        std::vector<double> dpool = std::move(ddropped);
        if (!ws.drop_mask[blk].empty()) {
            for (std::size_t i = 0; i < dpool.size(); ++i) dpool[i] *= ws.drop_mask[blk][i];
        }

        // max pool: route to the argmax element
        std::vector<double> da(ws.conv_a[blk].size(), 0.0);
        for (std::size_t i = 0; i < dpool.size(); ++i) da[ws.argmax[blk][i]] += dpool[i];

        // ReLU
        const auto& z = ws.conv_z[blk];
        for (std::size_t i = 0; i < da.size(); ++i) {
            if (z[i] <= 0.0) da[i] = 0.0;
        }

        // conv
        const std::vector<double>& in_act =
            blk == 0 ? tensor.data : ws.dropped[blk - 1];
        const int in_w = b.in_w, in_c = b.in_c;
        double* dW = grad.data() + b.w_off;
        double* db = grad.data() + b.b_off;
        const double* W = params.data() + b.w_off;
        std::vector<double> din;
        if (blk > 0) din.assign(in_act.size(), 0.0);

        for (int y = 0; y < b.conv_h; ++y) {
            for (int x = 0; x < b.conv_w; ++x) {
                const double* drow =
                    da.data() + (static_cast<std::size_t>(y) * b.conv_w + x) * b.out_c;
                for (int oc = 0; oc < b.out_c; ++oc) db[oc] += drow[oc];
                for (int dy = 0; dy < kKernel; ++dy) {
                    const std::size_t in_row =
                        (static_cast<std::size_t>(y + dy) * in_w + x) * in_c;
                    for (int dx = 0; dx < kKernel; ++dx) {
                        for (int ic = 0; ic < in_c; ++ic) {
                            const double v = in_act[in_row + dx * in_c + ic];
                            const std::size_t w_base =
                                ((static_cast<std::size_t>(ic) * kKernel + dy) * kKernel + dx) *
                                b.out_c;
                            double din_acc = 0.0;
                            for (int oc = 0; oc < b.out_c; ++oc) {
                                dW[w_base + oc] += v * drow[oc];
                                din_acc += W[w_base + oc] * drow[oc];
                            }
                            if (blk > 0) din[in_row + dx * in_c + ic] += din_acc;
                        }
                    }
                }
            }
        }
        if (blk > 0) ddropped = std::move(din);
    }
}

}  // namespace

std::vector<LayerShape> layer_shapes(const ModelConfig& cfg) {
    const Dims d = compute_dims(cfg);
    std::vector<LayerShape> shapes;
    for (const auto& b : d.blocks) {
        shapes.push_back({b.conv_h, b.conv_w, b.out_c});
        shapes.push_back({b.pool_h, b.pool_w, b.out_c});
    }
    shapes.push_back({1, 1, d.gap_c});
    shapes.push_back({1, 1, d.n_classes});
    return shapes;
}

std::vector<long> parameter_counts(const ModelConfig& cfg) {
    const Dims d = compute_dims(cfg);
    std::vector<long> counts;
    for (const auto& b : d.blocks) {
        counts.push_back(static_cast<long>(b.out_c) * (kKernel * kKernel * b.in_c + 1));
    }
    counts.push_back(static_cast<long>(cfg.n_classes) * (d.gap_c + 1));
    return counts;
}

DeepCoughModel::DeepCoughModel(ModelWeights weights) : weights_(std::move(weights)) {
    const Dims d = compute_dims(weights_.config);
    if (weights_.params.size() != d.total_params)
        throw std::invalid_argument("model: parameter count does not match the config");
}

ModelWeights DeepCoughModel::initialize(const ModelConfig& cfg, std::uint64_t seed) {
    const Dims d = compute_dims(cfg);
    ModelWeights w;
    w.config = cfg;
    w.params.assign(d.total_params, 0.0);
    std::mt19937_64 rng(mix(seed, 0x1717c0de));
    for (const auto& b : d.blocks) {
        const double limit = std::sqrt(6.0 / (kKernel * kKernel * b.in_c));
        const std::size_t count = static_cast<std::size_t>(b.out_c) * b.in_c * kKernel * kKernel;
        for (std::size_t i = 0; i < count; ++i) {
            w.params[b.w_off + i] = (2.0 * uniform_unit(rng) - 1.0) * limit;
        }
    }
    const double limit = std::sqrt(6.0 / d.gap_c);
    const std::size_t dense_count = static_cast<std::size_t>(cfg.n_classes) * d.gap_c;
    for (std::size_t i = 0; i < dense_count; ++i) {
        w.params[d.dense_w_off + i] = (2.0 * uniform_unit(rng) - 1.0) * limit;
    }
    return w;
}

std::vector<double> DeepCoughModel::forward(const CoughTensor& tensor,
                                            std::mt19937_64* dropout_rng) const {
    const Dims d = compute_dims(weights_.config);
    Workspace ws;
    forward_pass(weights_.config, d, weights_.params, tensor, dropout_rng, ws);
    return ws.probs;
}

double DeepCoughModel::loss_and_gradient(const CoughTensor& tensor, int label,
                                         std::vector<double>& grad) const {
    const Dims d = compute_dims(weights_.config);
    if (label < 0 || label >= d.n_classes)
        throw std::invalid_argument("model: label out of range");
    grad.assign(d.total_params, 0.0);
    Workspace ws;
    forward_pass(weights_.config, d, weights_.params, tensor, nullptr, ws);
    backward_pass(weights_.config, d, weights_.params, tensor, label, ws, grad);
    return -std::log(std::max(ws.probs[label], 1e-300));
}

double DeepCoughModel::gradient_check(const CoughTensor& tensor, int label,
                                      int n_samples, std::uint64_t seed) const {
    const Dims d = compute_dims(weights_.config);
    std::vector<double> grad;
    loss_and_gradient(tensor, label, grad);

    std::mt19937_64 rng(mix(seed, 0x6badc0deULL));
    const double h = 1e-4;
    double worst = 0.0;
    for (int s = 0; s < n_samples; ++s) {
        const std::size_t idx = rng() % d.total_params;
        ModelWeights wp = weights_;
        wp.params[idx] += h;
        const double lp = -std::log(std::max(
            DeepCoughModel(wp).forward(tensor)[label], 1e-300));
        wp.params[idx] -= 2.0 * h;
        const double lm = -std::log(std::max(
            DeepCoughModel(wp).forward(tensor)[label], 1e-300));
        const double numeric = (lp - lm) / (2.0 * h);
        const double analytic = grad[idx];
        const double denom = std::max({std::abs(numeric), std::abs(analytic), 1e-8});
        worst = std::max(worst, std::abs(numeric - analytic) / denom);
    }
    return worst;
}

std::pair<ModelWeights, TrainLog> train(const std::vector<TrainSample>& dataset,
                                        const std::vector<std::size_t>& train_idx,
                                        const std::vector<std::size_t>& val_idx,
                                        const ModelConfig& model_cfg,
                                        const TrainConfig& train_cfg) {
    if (dataset.empty() || train_idx.empty())
        throw std::invalid_argument("train: empty dataset or train split");
    {
        std::vector<bool> seen(model_cfg.n_classes, false);
        for (auto i : train_idx) seen.at(dataset[i].label) = true;
        if (std::count(seen.begin(), seen.end(), true) < 2)
            throw std::runtime_error("train: training split must contain at least two classes");
    }

    const Dims d = compute_dims(model_cfg);
    ModelWeights weights = DeepCoughModel::initialize(model_cfg, train_cfg.rng_seed);

    std::vector<double> adam_m(d.total_params, 0.0), adam_v(d.total_params, 0.0);
    long adam_t = 0;

    TrainLog log;
    ModelWeights best = weights;
    double best_metric = -std::numeric_limits<double>::infinity();
    int since_best = 0;

    std::vector<std::size_t> order(train_idx);
    std::array<std::vector<double>, kGradChunks> chunk_grads;

    const int n_threads = train_cfg.threads > 0
                              ? train_cfg.threads
                              : std::max(1u, std::thread::hardware_concurrency());

    auto eval_validation = [&](const ModelWeights& w, double& auc_out, double& bal_out) {
        DeepCoughModel model(w);
        std::vector<std::vector<double>> probs(val_idx.size());
        std::vector<std::thread> pool;
        std::atomic_size_t next{0};
        const int workers = std::min<int>(n_threads, kGradChunks);
        for (int t = 0; t < workers; ++t) {
            pool.emplace_back([&] {
                for (std::size_t i = next.fetch_add(1); i < val_idx.size();
                     i = next.fetch_add(1)) {
                    probs[i] = model.forward(dataset[val_idx[i]].tensor);
                }
            });
        }
        for (auto& th : pool) th.join();

        std::vector<int> labels(val_idx.size());
        for (std::size_t i = 0; i < val_idx.size(); ++i) labels[i] = dataset[val_idx[i]].label;
        if (model_cfg.n_classes == 2) {
            std::vector<std::pair<double, int>> scores(val_idx.size());
            for (std::size_t i = 0; i < val_idx.size(); ++i)
                scores[i] = {probs[i][1], labels[i]};
            auc_out = auc_from_scores(scores).value_or(0.0);
            bal_out = compute_metrics(scores).balanced_accuracy;
        } else {
            auc_out = macro_auc(probs, labels, model_cfg.n_classes).value_or(0.0);
            bal_out = multiclass_balanced_accuracy(probs, labels, model_cfg.n_classes);
        }
    };

    for (int epoch = 1; epoch <= train_cfg.max_epochs; ++epoch) {
        {
            std::mt19937_64 shuffle_rng(mix(train_cfg.rng_seed, 0x50f71eULL, epoch));
            std::shuffle(order.begin(), order.end(), shuffle_rng);
        }

        double epoch_loss = 0.0;
        std::size_t batches = 0;

        for (std::size_t start = 0; start < order.size();
             start += static_cast<std::size_t>(train_cfg.batch_size)) {
            const std::size_t end =
                std::min(order.size(), start + static_cast<std::size_t>(train_cfg.batch_size));
            const std::size_t count = end - start;

            std::array<double, kGradChunks> chunk_losses{};
            for (auto& g : chunk_grads) g.assign(d.total_params, 0.0);

            auto run_chunk = [&](int chunk) {
                const std::size_t lo = start + count * chunk / kGradChunks;
                const std::size_t hi = start + count * (chunk + 1) / kGradChunks;
                Workspace ws;
                for (std::size_t i = lo; i < hi; ++i) {
                    const auto& sample = dataset[order[i]];
                    std::mt19937_64 drop_rng(
                        mix(train_cfg.rng_seed, epoch, batches, order[i]));
                    forward_pass(model_cfg, d, weights.params, sample.tensor, &drop_rng, ws);
                    chunk_losses[chunk] += -std::log(std::max(ws.probs[sample.label], 1e-300));
                    backward_pass(model_cfg, d, weights.params, sample.tensor, sample.label,
                                  ws, chunk_grads[chunk]);
                }
            };

            if (n_threads > 1) {
                std::vector<std::thread> pool;
                for (int c = 0; c < kGradChunks; ++c) pool.emplace_back(run_chunk, c);
                for (auto& th : pool) th.join();
            } else {
                for (int c = 0; c < kGradChunks; ++c) run_chunk(c);
            }

            // serial, order-stable reduction
            auto& grad = chunk_grads[0];
            for (int c = 1; c < kGradChunks; ++c) {
                for (std::size_t i = 0; i < grad.size(); ++i) grad[i] += chunk_grads[c][i];
            }
            double batch_loss = 0.0;
            for (double l : chunk_losses) batch_loss += l;
            epoch_loss += batch_loss;
            const double inv = 1.0 / static_cast<double>(count);
            for (auto& g : grad) g *= inv;

            ++adam_t;
            const double bc1 = 1.0 - std::pow(train_cfg.adam_beta1, adam_t);
            const double bc2 = 1.0 - std::pow(train_cfg.adam_beta2, adam_t);
            for (std::size_t i = 0; i < d.total_params; ++i) {
                adam_m[i] = train_cfg.adam_beta1 * adam_m[i] +
                            (1.0 - train_cfg.adam_beta1) * grad[i];
                adam_v[i] = train_cfg.adam_beta2 * adam_v[i] +
                            (1.0 - train_cfg.adam_beta2) * grad[i] * grad[i];
                const double mhat = adam_m[i] / bc1;
                const double vhat = adam_v[i] / bc2;
                weights.params[i] -= train_cfg.learning_rate * mhat /
                                     (std::sqrt(vhat) + train_cfg.adam_epsilon);
            }
            ++batches;
        }

        EpochStats stats;
        stats.epoch = epoch;
        stats.train_loss = epoch_loss / static_cast<double>(order.size());
        if (!val_idx.empty()) {
            eval_validation(weights, stats.val_auc, stats.val_balanced_accuracy);
        }
        stats.selection_metric = stats.val_auc + stats.val_balanced_accuracy;
        log.epochs.push_back(stats);

        if (stats.selection_metric > best_metric) {
            best_metric = stats.selection_metric;
            best = weights;
            log.best_epoch = epoch;
            log.best_metric = best_metric;
            since_best = 0;
        } else {
            ++since_best;
            if (since_best >= train_cfg.early_stop_patience) break;
        }
    }

    quantize_to_float32(best);
    return {std::move(best), std::move(log)};
}

void quantize_to_float32(ModelWeights& weights) {
    for (auto& p : weights.params) p = static_cast<float>(p);
}

std::vector<std::uint8_t> save_weights(const ModelWeights& weights) {
    nlohmann::json header{
        {"format", "deepcough-weights"},
        {"version", 1},
        {"bands", weights.config.input_bands},
        {"frames", weights.config.input_frames},
        {"channels", weights.config.input_channels},
        {"block_channels", weights.config.block_channels},
        {"dropout_rate", weights.config.dropout_rate},
        {"n_classes", weights.config.n_classes},
        {"param_count", weights.params.size()},
    };
    const std::string hs = header.dump();
    std::vector<std::uint8_t> out;
    out.reserve(8 + hs.size() + weights.params.size() * 4);
    out.insert(out.end(), {'D', 'C', 'W', '1'});
    const auto hlen = static_cast<std::uint32_t>(hs.size());
    out.push_back(hlen & 0xFF);
    out.push_back((hlen >> 8) & 0xFF);
    out.push_back((hlen >> 16) & 0xFF);
    out.push_back((hlen >> 24) & 0xFF);
    out.insert(out.end(), hs.begin(), hs.end());
    for (double v : weights.params) {
        const float f = static_cast<float>(v);
        std::uint32_t bits;
        std::memcpy(&bits, &f, 4);
        out.push_back(bits & 0xFF);
        out.push_back((bits >> 8) & 0xFF);
        out.push_back((bits >> 16) & 0xFF);
        out.push_back((bits >> 24) & 0xFF);
    }
    return out;
}

ModelWeights load_weights(const std::vector<std::uint8_t>& bytes) {
    if (bytes.size() < 8 || bytes[0] != 'D' || bytes[1] != 'C' || bytes[2] != 'W' ||
        bytes[3] != '1') {
        throw std::runtime_error("weights: bad magic");
    }
    const std::uint32_t hlen = bytes[4] | (bytes[5] << 8) | (bytes[6] << 16) |
                               (static_cast<std::uint32_t>(bytes[7]) << 24);
    if (bytes.size() < 8 + hlen) throw std::runtime_error("weights: truncated header");
    nlohmann::json header;
    try {
        header = nlohmann::json::parse(bytes.begin() + 8, bytes.begin() + 8 + hlen);
    } catch (const nlohmann::json::exception&) {
        throw std::runtime_error("weights: malformed header");
    }
    if (header.value("format", "") != "deepcough-weights" || header.value("version", 0) != 1)
        throw std::runtime_error("weights: unsupported format or version");

    ModelWeights w;
    w.config.input_bands = header.at("bands").get<int>();
    w.config.input_frames = header.at("frames").get<int>();
    w.config.input_channels = header.at("channels").get<int>();
    const auto bc = header.at("block_channels").get<std::vector<int>>();
    if (bc.size() != 4) throw std::runtime_error("weights: bad block channel list");
    std::copy(bc.begin(), bc.end(), w.config.block_channels.begin());
    w.config.dropout_rate = header.at("dropout_rate").get<double>();
    w.config.n_classes = header.at("n_classes").get<int>();

    const auto count = header.at("param_count").get<std::size_t>();
    const Dims d = compute_dims(w.config);
    if (count != d.total_params) throw std::runtime_error("weights: parameter count mismatch");
    if (bytes.size() != 8 + hlen + count * 4)
        throw std::runtime_error("weights: truncated or oversized payload");

    w.params.resize(count);
    const std::uint8_t* p = bytes.data() + 8 + hlen;
    for (std::size_t i = 0; i < count; ++i) {
        std::uint32_t bits = p[i * 4] | (p[i * 4 + 1] << 8) | (p[i * 4 + 2] << 16) |
                             (static_cast<std::uint32_t>(p[i * 4 + 3]) << 24);
        float f;
        std::memcpy(&f, &bits, 4);
        w.params[i] = f;
    }
    return w;
}

void save_weights_file(const ModelWeights& weights, const std::string& path) {
    const auto bytes = save_weights(weights);
    const std::string tmp = path + ".tmp";
    {
        std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
        if (!f) throw std::runtime_error("weights: cannot write " + tmp);
        f.write(reinterpret_cast<const char*>(bytes.data()),
                static_cast<std::streamsize>(bytes.size()));
    }
    if (std::rename(tmp.c_str(), path.c_str()) != 0)
        throw std::runtime_error("weights: cannot move into place: " + path);
}

ModelWeights load_weights_file(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("weights: cannot open " + path);
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(f)),
                                    std::istreambuf_iterator<char>());
    return load_weights(bytes);
}

}  // namespace coughdetect
