#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <iomanip>
#include <limits>
#include <numeric>
#include <ostream>
#include <string>
#include <vector>

#include "hcg/adam.hpp"
#include "hcg/checkpoint.hpp"
#include "hcg/dataset.hpp"
#include "hcg/network.hpp"

namespace hcg {

struct TrainOptions {
    int epochs = 200;
    int batch = 8;
    double lr = 1e-4;
    std::vector<int> decay_epochs = {100, 150};
    double decay_factor = 0.1;
    double val_split = 0.1;
    std::uint64_t seed = 0;
    double depth_max = 2500.0;
    bool augment = true;  // false: deterministic center patches, no flips
    std::string checkpoint_path;       // rolling per-epoch checkpoint
    std::string best_checkpoint_path;  // lowest-validation-loss checkpoint
    std::ostream* log = nullptr;       // per-epoch "epoch,loss,lr,seconds" lines
};

struct EpochStat {
    int epoch = 0;
    double loss = 0.0;
    double lr = 0.0;
    double seconds = 0.0;
    double val_loss = 0.0;
    bool has_val = false;
};

struct TrainResult {
    std::vector<EpochStat> history;
    double initial_loss = 0.0;
    double final_loss = 0.0;
    bool nan_abort = false;
    int best_epoch = -1;
    double best_val_loss = std::numeric_limits<double>::infinity();
};

namespace detail {

template <typename T>
double run_batch(HCGNetParams<T>& params, const NetworkConfig& cfg,
                 const std::vector<SamplePair>& pairs, double depth_max, AdamState<T>* opt) {
    std::vector<const DepthImage*> lrs, hrs;
    std::vector<const ColorImage*> colors;
    for (const auto& p : pairs) {
        lrs.push_back(&p.lr_depth);
        hrs.push_back(&p.hr_depth);
        colors.push_back(&p.hr_color);
    }
    auto d_lr = depth_batch_to_tensor<T>(lrs, depth_max);
    auto i_hr = color_batch_to_tensor<T>(colors);
    auto target = depth_batch_to_tensor<T>(hrs, depth_max);

    Tape<T> tape(opt != nullptr);
    auto pred = forward(tape, d_lr, i_hr, params, cfg);
    auto batch_loss = l1_loss(tape, pred, target);
    const double value = static_cast<double>(batch_loss->data[0]);
    if (opt && std::isfinite(value)) {
        tape.backward(batch_loss);
        // parameters that a toggled-off path never touches still need a
        // gradient buffer for the optimizer contract
        for (auto& [name, t] : params.store) t->ensure_grad();
        opt->step(params.store);
    }
    return value;
}

}  // namespace detail

/// Patch-based Adam training over loaded scenes. The last floor(val_split *
/// n) scenes are held out for best-checkpoint selection. Deterministic for a
/// fixed seed and option set.
template <typename T>
TrainResult train(HCGNetParams<T>& params, const NetworkConfig& cfg,
                  const std::vector<ScenePair>& scenes, const TrainOptions& opts) {
    cfg.validate();
    if (scenes.empty()) throw ConfigError("train: no scenes");
    if (opts.batch < 1) throw ConfigError("train: batch must be >= 1");
    if (opts.val_split < 0.0 || opts.val_split >= 1.0) {
        throw ConfigError("train: val_split must be in [0, 1)");
    }

    const auto val_count = static_cast<std::size_t>(
        static_cast<double>(scenes.size()) * opts.val_split);
    const std::size_t train_count = scenes.size() - val_count;
    if (train_count == 0) throw ConfigError("train: validation split leaves no training scenes");

    AdamState<T> opt(params.store, {.lr = opts.lr});
    TrainResult result;

    auto save_rolling = [&]() {
        if (!opts.checkpoint_path.empty()) {
            save_checkpoint(opts.checkpoint_path, cfg, opts.depth_max, params.store);
        }
    };

    std::vector<std::size_t> order(train_count);
    std::iota(order.begin(), order.end(), std::size_t{0});

    for (int epoch = 1; epoch <= opts.epochs; ++epoch) {
        const auto t0 = std::chrono::steady_clock::now();
        if (std::find(opts.decay_epochs.begin(), opts.decay_epochs.end(), epoch) !=
            opts.decay_epochs.end()) {
            opt.set_lr(opt.lr() * opts.decay_factor);
        }
        Rng rng(opts.seed * 0x9e3779b97f4a7c15ull + static_cast<std::uint64_t>(epoch));
        for (std::size_t i = train_count; i > 1; --i) {
            std::swap(order[i - 1],
                      order[static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(i) - 1))]);
        }

        double loss_acc = 0.0;
        std::size_t sample_acc = 0;
        bool epoch_nan = false;
        for (std::size_t start = 0; start < train_count; start += static_cast<std::size_t>(opts.batch)) {
            const std::size_t end = std::min(train_count, start + static_cast<std::size_t>(opts.batch));
            std::vector<SamplePair> pairs;
            for (std::size_t i = start; i < end; ++i) {
                const ScenePair& s = scenes[order[i]];
                pairs.push_back(opts.augment
                                    ? crop_and_augment(s.depth, s.color, cfg.scale, rng, s.id)
                                    : center_patch(s.depth, s.color, cfg.scale, s.id));
            }
            const double value = detail::run_batch(params, cfg, pairs, opts.depth_max, &opt);
            if (!std::isfinite(value)) {
                epoch_nan = true;
                break;
            }
            loss_acc += value * static_cast<double>(pairs.size());
            sample_acc += pairs.size();
        }
        if (epoch_nan) {
            // the rolling checkpoint still holds the last finite epoch
            result.nan_abort = true;
            break;
        }

        EpochStat stat;
        stat.epoch = epoch;
        stat.loss = loss_acc / static_cast<double>(sample_acc);
        stat.lr = opt.lr();

        if (val_count > 0) {
            double val_acc = 0.0;
            for (std::size_t i = train_count; i < scenes.size(); ++i) {
                std::vector<SamplePair> one{center_patch(scenes[i].depth, scenes[i].color,
                                                         cfg.scale, scenes[i].id)};
                val_acc += detail::run_batch<T>(params, cfg, one, opts.depth_max, nullptr);
            }
            stat.val_loss = val_acc / static_cast<double>(val_count);
            stat.has_val = true;
            if (stat.val_loss < result.best_val_loss) {
                result.best_val_loss = stat.val_loss;
                result.best_epoch = epoch;
                if (!opts.best_checkpoint_path.empty()) {
                    save_checkpoint(opts.best_checkpoint_path, cfg, opts.depth_max, params.store);
                }
            }
        }

        stat.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        result.history.push_back(stat);
        if (opts.log) {
            (*opts.log) << stat.epoch << "," << std::setprecision(9) << stat.loss << ","
                        << stat.lr << "," << std::setprecision(4) << stat.seconds << "\n";
            opts.log->flush();
        }
        save_rolling();
    }

    if (!result.nan_abort) save_rolling();
    if (!result.history.empty()) {
        result.initial_loss = result.history.front().loss;
        result.final_loss = result.history.back().loss;
    }
    return result;
}

/// Loads every manifest entry into memory (desk-scale corpora are small).
inline std::vector<ScenePair> load_scenes(const std::vector<ManifestEntry>& manifest) {
    std::vector<ScenePair> scenes;
    scenes.reserve(manifest.size());
    for (const auto& e : manifest) {
        ScenePair s;
        s.depth = load_pgm(e.depth_path);
        s.color = load_ppm(e.color_path);
        s.id = e.depth_path;
        if (s.depth.width != s.color.width || s.depth.height != s.color.height) {
            throw ShapeError("scene " + e.depth_path + ": depth/color size mismatch");
        }
        scenes.push_back(std::move(s));
    }
    return scenes;
}

}  // namespace hcg
