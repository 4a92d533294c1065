#pragma once

#include <algorithm>
#include <cstdint>
#include <functional>
#include <numeric>
#include <optional>
#include <random>
#include <vector>

#include "mlad/adam.hpp"
#include "mlad/dataset.hpp"
#include "mlad/inference.hpp"
#include "mlad/model.hpp"
#include "mlad/multilabel_metrics.hpp"

namespace mlad {

struct TrainOptions {
  AdamOptions adam;  // adam.lr defaults to 1e-4
  std::size_t epochs = 10;
  std::vector<std::size_t> train_lengths{32};
  std::uint64_t seed = 0;
  /// Videos per Adam step; 0 uses every video in one step.
  std::size_t batch_size = 0;
  /// Scored with f-mAP after every epoch when non-null.
  const Dataset* validation = nullptr;
  /// Called after every Adam update with the step count.
  std::function<void(const Model&, std::uint64_t)> on_step;
};

struct EpochRecord {
  std::size_t epoch = 0;
  double loss = 0.0;  // mean per-video dual loss over the epoch's crops
  std::optional<double> val_f_map;
  std::vector<double> alphas;
};

struct TrainResult {
  Model model;
  std::vector<EpochRecord> history;
};

/// One training crop: features, labels and a loss mask (0 on padding).
struct Crop {
  Tensor features;
  Tensor labels;
  Tensor mask;
};

/// Window [start, start+len) of a video; videos shorter than len are
/// zero-padded and the padding is masked out of the loss.
inline Crop make_crop(const Video& v, std::size_t start, std::size_t len) {
  const std::size_t T = v.length(), F = v.features.dim(1), C = v.labels.C;
  Crop c{Tensor({len, F}), Tensor({len, C}), Tensor({len, C})};
  for (std::size_t t = 0; t < len && start + t < T; ++t) {
    for (std::size_t f = 0; f < F; ++f) c.features(t, f) = v.features(start + t, f);
    for (std::size_t k = 0; k < C; ++k) {
      c.labels(t, k) = v.labels(start + t, k);
      c.mask(t, k) = 1.0;
    }
  }
  return c;
}

/// Loss and gradients (canonical parameter order) for one crop.
inline std::pair<double, std::vector<Tensor>> loss_and_gradient(const Model& model, const Crop& crop) {
  Tape tape;
  auto bound = bind_parameters(tape, model.params);
  auto fw = forward_on_tape(tape, model.config, bound, crop.features);
  Var l = dual_loss(tape, fw, crop.labels, crop.mask);
  const auto vars = flatten_bound(bound);
  return {l.value().item(), tape.gradient(l, vars)};
}

inline double dataset_f_map(const Model& model, const Dataset& data) {
  SampleSet s;
  for (const auto& v : data) s.append(v.labels, predict_scores(model, v.features));
  return f_map(s).mean;
}

inline void check_training_data(const Dataset& data, const ModelConfig& cfg) {
  if (data.empty()) throw Error("empty_dataset", "training set is empty");
  for (const auto& v : data) {
    if (!v.has_features()) throw Error("missing_features", "video '" + v.id + "' has no features");
    if (v.features.dim(1) != cfg.feature_dim)
      throw Error("dimension_mismatch", "video '" + v.id + "' has F=" + std::to_string(v.features.dim(1)) +
                                            ", model expects " + std::to_string(cfg.feature_dim));
    if (v.labels.C != cfg.num_classes)
      throw Error("dimension_mismatch", "video '" + v.id + "' has C=" + std::to_string(v.labels.C) +
                                            ", model expects " + std::to_string(cfg.num_classes));
    if (v.features.dim(0) != v.labels.T) throw Error("dimension_mismatch", "video '" + v.id + "' feature/label lengths differ");
    v.labels.validate_binary();
  }
}

/// Full-batch (or mini-batch) Adam on random crops. Deterministic in
/// (initial model, data, options).
inline TrainResult train(Model model, const Dataset& data, const TrainOptions& opt) {
  check_training_data(data, model.config);
  if (opt.train_lengths.empty()) throw Error("invalid_config", "train_lengths must not be empty");
  for (std::size_t l : opt.train_lengths)
    if (l == 0) throw Error("invalid_config", "train lengths must be >= 1");

  model.window_length = *std::max_element(opt.train_lengths.begin(), opt.train_lengths.end());
  std::vector<Tensor> params = flatten_parameters(model.params);
  AdamState state(params);
  std::mt19937_64 rng(opt.seed);
  std::uniform_int_distribution<std::size_t> pick_len(0, opt.train_lengths.size() - 1);
  const std::size_t n = data.size();
  const std::size_t batch = (opt.batch_size == 0 || opt.batch_size > n) ? n : opt.batch_size;

  TrainResult result;
  std::vector<std::size_t> order(n);
  std::vector<double> per_video(n);
  for (std::size_t epoch = 1; epoch <= opt.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    if (batch < n) std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t b0 = 0; b0 < n; b0 += batch) {
      const std::size_t b1 = std::min(n, b0 + batch);
      const std::size_t len = opt.train_lengths[pick_len(rng)];
      std::vector<Tensor> grads;
      for (std::size_t bi = b0; bi < b1; ++bi) {
        const Video& v = data[order[bi]];
        const std::size_t room = v.length() > len ? v.length() - len : 0;
        const std::size_t start = std::uniform_int_distribution<std::size_t>(0, room)(rng);
        auto [l, g] = loss_and_gradient(model, make_crop(v, start, len));
        per_video[order[bi]] = l;
        if (grads.empty()) {
          grads = std::move(g);
        } else {
          for (std::size_t i = 0; i < grads.size(); ++i)
            for (std::size_t j = 0; j < grads[i].size(); ++j) grads[i][j] += g[i][j];
        }
      }
      const double inv = 1.0 / double(b1 - b0);
      for (auto& g : grads)
        for (double& x : g.data()) x *= inv;
      adam_step(params, grads, state, opt.adam);
      assign_parameters(model.params, params);
      if (opt.on_step) opt.on_step(model, state.step);
    }
    EpochRecord rec;
    rec.epoch = epoch;
    for (double l : per_video) rec.loss += l;
    rec.loss /= double(n);
    for (std::size_t l = 0; l < model.params.layers.size(); ++l)
      if (model.config.branches == Branches::Both) rec.alphas.push_back(model.alpha(l));
    if (opt.validation) rec.val_f_map = dataset_f_map(model, *opt.validation);
    result.history.push_back(std::move(rec));
  }
  result.model = std::move(model);
  return result;
}

inline TrainResult train(const Dataset& data, const ModelConfig& cfg, const TrainOptions& opt) {
  return train(init_model(cfg), data, opt);
}

}  // namespace mlad
