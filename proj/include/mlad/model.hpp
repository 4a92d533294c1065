#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "mlad/autodiff.hpp"
#include "mlad/grid.hpp"
#include "mlad/tensor.hpp"

namespace mlad {

enum class Branches { Both, CbOnly, TbOnly, None };
enum class AlphaMode { Learned, Fixed };

inline std::string_view to_string(Branches b) {
  switch (b) {
    case Branches::Both: return "both";
    case Branches::CbOnly: return "cb-only";
    case Branches::TbOnly: return "tb-only";
    case Branches::None: return "none";
  }
  return "?";
}

inline Branches parse_branches(std::string_view s) {
  if (s == "both") return Branches::Both;
  if (s == "cb-only") return Branches::CbOnly;
  if (s == "tb-only") return Branches::TbOnly;
  if (s == "none") return Branches::None;
  throw Error("invalid_config", "unknown branches value '" + std::string(s) + "'");
}

inline std::string_view to_string(AlphaMode m) { return m == AlphaMode::Learned ? "learned" : "fixed"; }

inline AlphaMode parse_alpha_mode(std::string_view s) {
  if (s == "learned") return AlphaMode::Learned;
  if (s == "fixed") return AlphaMode::Fixed;
  throw Error("invalid_config", "unknown alpha_mode value '" + std::string(s) + "'");
}

struct ModelConfig {
  std::size_t num_classes = 1;   // C
  std::size_t feature_dim = 1;   // F
  std::size_t hidden_dim = 128;  // H
  std::size_t num_layers = 5;    // L
  Branches branches = Branches::Both;
  AlphaMode alpha_mode = AlphaMode::Learned;
  double alpha_fixed = 0.5;
  std::uint64_t seed = 0;
  std::vector<std::string> class_names;  // optional

  void validate() const {
    if (num_classes < 1) throw Error("invalid_config", "C must be >= 1");
    if (feature_dim < 1) throw Error("invalid_config", "F must be >= 1");
    if (hidden_dim < 1) throw Error("invalid_config", "H must be >= 1");
    if (!(alpha_fixed >= 0.0 && alpha_fixed <= 1.0)) throw Error("invalid_config", "alpha_fixed must lie in [0,1]");
    if (!class_names.empty() && class_names.size() != num_classes)
      throw Error("invalid_config", "class_names has " + std::to_string(class_names.size()) + " entries, C is " +
                                        std::to_string(num_classes));
  }

  /// branches=none is the CF baseline whatever L says.
  std::size_t effective_layers() const { return branches == Branches::None ? 0 : num_layers; }
  bool uses_cb() const { return branches == Branches::Both || branches == Branches::CbOnly; }
  bool uses_tb() const { return branches == Branches::Both || branches == Branches::TbOnly; }
  bool learns_alpha() const { return branches == Branches::Both && alpha_mode == AlphaMode::Learned; }

  friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

// Parameter containers are templated on the leaf type so the same layout
// holds concrete tensors (Tensor) and their tape bindings (Var).

template <class T>
struct BasicProjection {
  T weight;  // H×H
  T bias;    // H
};

template <class T>
struct BasicBranch {
  BasicProjection<T> query, key, value;
};

template <class T>
struct BasicLayer {
  std::optional<BasicBranch<T>> cb;
  std::optional<BasicBranch<T>> tb;
  std::optional<T> alpha_raw;  // present only when α is learned
};

template <class T>
struct BasicExtractor {
  T weight;  // C×F×H, one F×H matrix per class
  T bias;    // C×H
};

template <class T>
struct BasicClassifier {
  T weight;  // C×H
  T bias;    // C
};

template <class T>
struct BasicModelParams {
  BasicExtractor<T> extractor;
  std::vector<BasicLayer<T>> layers;
  BasicClassifier<T> head_init;
  BasicClassifier<T> head_final;
};

using ProjectionParams = BasicProjection<Tensor>;
using BranchParams = BasicBranch<Tensor>;
using MladLayerParams = BasicLayer<Tensor>;
using ClassExtractorParams = BasicExtractor<Tensor>;
using ClassifierParams = BasicClassifier<Tensor>;
using ModelParams = BasicModelParams<Tensor>;

/// Calls f(name, leaf) for every parameter in canonical order.
template <class P, class F>
void for_each_parameter(P& p, F&& f) {
  auto proj = [&](const std::string& prefix, auto& pr) {
    f(prefix + ".weight", pr.weight);
    f(prefix + ".bias", pr.bias);
  };
  auto branch = [&](const std::string& prefix, auto& br) {
    proj(prefix + ".query", br.query);
    proj(prefix + ".key", br.key);
    proj(prefix + ".value", br.value);
  };
  f(std::string("extractor.weight"), p.extractor.weight);
  f(std::string("extractor.bias"), p.extractor.bias);
  for (std::size_t l = 0; l < p.layers.size(); ++l) {
    auto& layer = p.layers[l];
    const std::string prefix = "layers." + std::to_string(l);
    if (layer.cb) branch(prefix + ".cb", *layer.cb);
    if (layer.tb) branch(prefix + ".tb", *layer.tb);
    if (layer.alpha_raw) f(prefix + ".alpha_raw", *layer.alpha_raw);
  }
  f(std::string("head_init.weight"), p.head_init.weight);
  f(std::string("head_init.bias"), p.head_init.bias);
  f(std::string("head_final.weight"), p.head_final.weight);
  f(std::string("head_final.bias"), p.head_final.bias);
}

/// Same layout with every leaf mapped through fn.
template <class U, class T, class Fn>
BasicModelParams<U> map_parameters(const BasicModelParams<T>& p, Fn&& fn) {
  auto proj = [&](const BasicProjection<T>& pr) { return BasicProjection<U>{fn(pr.weight), fn(pr.bias)}; };
  auto branch = [&](const BasicBranch<T>& br) { return BasicBranch<U>{proj(br.query), proj(br.key), proj(br.value)}; };
  BasicModelParams<U> out;
  out.extractor = {fn(p.extractor.weight), fn(p.extractor.bias)};
  for (const auto& layer : p.layers) {
    BasicLayer<U> l;
    if (layer.cb) l.cb = branch(*layer.cb);
    if (layer.tb) l.tb = branch(*layer.tb);
    if (layer.alpha_raw) l.alpha_raw = fn(*layer.alpha_raw);
    out.layers.push_back(std::move(l));
  }
  out.head_init = {fn(p.head_init.weight), fn(p.head_init.bias)};
  out.head_final = {fn(p.head_final.weight), fn(p.head_final.bias)};
  return out;
}

template <class P>
std::vector<std::string> parameter_names(const P& p) {
  std::vector<std::string> names;
  for_each_parameter(p, [&](const std::string& n, const auto&) { names.push_back(n); });
  return names;
}

inline std::size_t parameter_count(const ModelParams& p) {
  std::size_t n = 0;
  for_each_parameter(p, [&](const std::string&, const Tensor& t) { n += t.size(); });
  return n;
}

inline std::vector<Tensor> flatten_parameters(const ModelParams& p) {
  std::vector<Tensor> out;
  for_each_parameter(p, [&](const std::string&, const Tensor& t) { out.push_back(t); });
  return out;
}

inline void assign_parameters(ModelParams& p, std::span<const Tensor> values) {
  std::size_t i = 0;
  for_each_parameter(p, [&](const std::string& name, Tensor& t) {
    if (i >= values.size() || values[i].shape() != t.shape())
      throw Error("dimension_mismatch", "assign_parameters: mismatch at " + name);
    t = values[i++];
  });
  if (i != values.size()) throw Error("dimension_mismatch", "assign_parameters: too many tensors");
}

/// Parameters with zero-valued tensors of the right shapes.
inline ModelParams zero_parameters(const ModelConfig& cfg) {
  const std::size_t C = cfg.num_classes, F = cfg.feature_dim, H = cfg.hidden_dim;
  auto projection = [&] { return ProjectionParams{Tensor({H, H}), Tensor({H})}; };
  auto branch = [&] { return BranchParams{projection(), projection(), projection()}; };
  ModelParams p;
  p.extractor = {Tensor({C, F, H}), Tensor({C, H})};
  for (std::size_t l = 0; l < cfg.effective_layers(); ++l) {
    MladLayerParams layer;
    if (cfg.uses_cb()) layer.cb = branch();
    if (cfg.uses_tb()) layer.tb = branch();
    if (cfg.learns_alpha()) layer.alpha_raw = Tensor::scalar(0.0);
    p.layers.push_back(std::move(layer));
  }
  p.head_init = {Tensor({C, H}), Tensor({C})};
  p.head_final = {Tensor({C, H}), Tensor({C})};
  return p;
}

struct Model {
  ModelConfig config;
  ModelParams params;
  /// Inference window (time-steps); 0 means whole-video.
  std::size_t window_length = 0;

  /// Merge weight α of layer l (meaningful when both branches are on).
  double alpha(std::size_t l) const {
    const auto& raw = params.layers.at(l).alpha_raw;
    return raw ? ops::sigmoid(raw->item()) : config.alpha_fixed;
  }
};

/// Weights uniform in ±1/√fan_in, biases zero, α_raw = 0 (α = 0.5).
inline Model init_model(const ModelConfig& cfg) {
  cfg.validate();
  Model m{cfg, zero_parameters(cfg), 0};
  std::mt19937_64 rng(cfg.seed);
  for_each_parameter(m.params, [&](const std::string& name, Tensor& t) {
    if (!name.ends_with(".weight")) return;
    const double fan_in = name.starts_with("extractor.") ? double(cfg.feature_dim) : double(cfg.hidden_dim);
    const double bound = 1.0 / std::sqrt(fan_in);
    std::uniform_real_distribution<double> dist(-bound, bound);
    for (double& v : t.data()) v = dist(rng);
  });
  return m;
}

// ---------------------------------------------------------------------------
// Layer operations on the tape
// ---------------------------------------------------------------------------

using BoundParams = BasicModelParams<Var>;

inline BoundParams bind_parameters(Tape& tape, const ModelParams& p) {
  return map_parameters<Var>(p, [&](const Tensor& t) { return tape.parameter(t); });
}

inline std::vector<Var> flatten_bound(BoundParams& p) {
  std::vector<Var> out;
  for_each_parameter(p, [&](const std::string&, Var v) { out.push_back(v); });
  return out;
}

/// f[t][c] = ReLU(W_cᵀ x_t + b_c). x: T×F → T×C×H.
inline Var extract_class_features(Var x, const BasicExtractor<Var>& p) {
  const auto& xs = x.shape();
  const auto& ws = p.weight.shape();
  if (xs.size() != 2 || ws.size() != 3 || xs[1] != ws[1])
    throw Error("dimension_mismatch", "features " + shape_str(xs) + " do not fit extractor " + shape_str(ws));
  return relu(add_suffix(permute01(matmul(x, p.weight)), p.bias));
}

inline Var project(Var f, const BasicProjection<Var>& p) { return add_suffix(matmul(f, p.weight), p.bias); }

struct BranchOutput {
  Var features;  // T×C×H
  Var maps;      // CB: T×C×C, TB: C×T×T
};

namespace detail {
// Self-attention over the middle axis of a batch: f is B×N×H.
inline BranchOutput attend(Var f, const BasicBranch<Var>& p) {
  const double h = static_cast<double>(f.shape().back());
  Var q = project(f, p.query);
  Var k = project(f, p.key);
  Var v = project(f, p.value);
  Var a = softmax_rows(scale(matmul(q, transpose(k)), 1.0 / std::sqrt(h)));
  return {matmul(a, v), a};
}

inline void check_branch_input(Var f, const BasicBranch<Var>& p) {
  const auto& s = f.shape();
  if (s.size() != 3 || p.query.weight.shape() != Shape{s[2], s[2]})
    throw Error("dimension_mismatch", "branch input " + shape_str(s) + " vs projection " + shape_str(p.query.weight.shape()));
}
}  // namespace detail

/// Co-occurrence branch: per time-step C×C attention across classes.
inline BranchOutput cb_branch(Var f, const BasicBranch<Var>& p) {
  detail::check_branch_input(f, p);
  return detail::attend(f, p);
}

/// Temporal branch: per class T×T attention across time.
inline BranchOutput tb_branch(Var f, const BasicBranch<Var>& p) {
  detail::check_branch_input(f, p);
  auto out = detail::attend(permute01(f), p);
  return {permute01(out.features), out.maps};
}

/// g = α·f′ + (1−α)·f″, α a scalar variable.
inline Var merge(Var cb, Var tb, Var alpha) { return add(scale_by(cb, alpha), scale_by(tb, affine(alpha, -1.0, 1.0))); }

/// Per-class logits W_cᵀ g[t][c] + b_c, T×C.
inline Var classify_logits(Var g, const BasicClassifier<Var>& p) {
  const auto& s = g.shape();
  if (s.size() != 3 || p.weight.shape() != Shape{s[1], s[2]})
    throw Error("dimension_mismatch", "classifier input " + shape_str(s) + " vs weight " + shape_str(p.weight.shape()));
  return add_suffix(sum_last(mul_suffix(g, p.weight)), p.bias);
}

struct TapeForward {
  Var features0;             // f₀
  std::vector<Var> refined;  // g_l for l = 1..L
  Var logits_init;
  Var logits_final;
  std::vector<Var> cb_maps;
  std::vector<Var> tb_maps;
  std::vector<Var> alphas;
};

inline TapeForward forward_on_tape(Tape& tape, const ModelConfig& cfg, const BoundParams& p, const Tensor& x) {
  if (x.rank() != 2 || x.dim(1) != cfg.feature_dim)
    throw Error("dimension_mismatch", "input " + shape_str(x.shape()) + " does not match F=" + std::to_string(cfg.feature_dim));
  if (x.dim(0) == 0) throw Error("dimension_mismatch", "empty feature sequence");
  if (p.layers.size() != cfg.effective_layers())
    throw Error("dimension_mismatch", "parameter layer count does not match config");
  TapeForward out;
  Var xv = tape.constant(x);
  out.features0 = extract_class_features(xv, p.extractor);
  out.logits_init = classify_logits(out.features0, p.head_init);
  Var g = out.features0;
  for (const auto& layer : p.layers) {
    std::optional<BranchOutput> cb, tb;
    if (layer.cb) {
      cb = cb_branch(g, *layer.cb);
      out.cb_maps.push_back(cb->maps);
    }
    if (layer.tb) {
      tb = tb_branch(g, *layer.tb);
      out.tb_maps.push_back(tb->maps);
    }
    if (cb && tb) {
      Var alpha = layer.alpha_raw ? sigmoid(*layer.alpha_raw) : tape.constant(Tensor::scalar(cfg.alpha_fixed));
      out.alphas.push_back(alpha);
      g = merge(cb->features, tb->features, alpha);
    } else if (cb) {
      g = cb->features;
    } else if (tb) {
      g = tb->features;
    }
    out.refined.push_back(g);
  }
  out.logits_final = classify_logits(g, p.head_final);
  return out;
}

/// Dual-head loss: masked mean BCE on the final head plus the same on the
/// initial head, unweighted.
inline Var dual_loss(Tape& tape, const TapeForward& fw, const Tensor& labels, const Tensor& mask) {
  Var y = tape.constant(labels);
  Var m = tape.constant(mask);
  return add(bce_with_logits(fw.logits_final, y, m), bce_with_logits(fw.logits_init, y, m));
}

// ---------------------------------------------------------------------------
// Tensor-level API
// ---------------------------------------------------------------------------

struct ForwardOutput {
  Tensor y_init;                // T×C
  Tensor y_final;               // T×C
  std::vector<Tensor> cb_maps;  // per layer, T×C×C
  std::vector<Tensor> tb_maps;  // per layer, C×T×T
};

namespace detail {
inline BasicBranch<Var> bind_branch(Tape& tape, const BranchParams& p) {
  auto proj = [&](const ProjectionParams& pr) {
    return BasicProjection<Var>{tape.constant(pr.weight), tape.constant(pr.bias)};
  };
  return {proj(p.query), proj(p.key), proj(p.value)};
}
}  // namespace detail

inline Tensor extract_class_features(const Tensor& x, const ClassExtractorParams& p) {
  Tape tape;
  return extract_class_features(tape.constant(x), {tape.constant(p.weight), tape.constant(p.bias)}).value();
}

struct BranchResult {
  Tensor features;
  Tensor maps;
};

inline BranchResult cb_branch(const Tensor& f, const BranchParams& p) {
  Tape tape;
  auto out = cb_branch(tape.constant(f), detail::bind_branch(tape, p));
  return {out.features.value(), out.maps.value()};
}

inline BranchResult tb_branch(const Tensor& f, const BranchParams& p) {
  Tape tape;
  auto out = tb_branch(tape.constant(f), detail::bind_branch(tape, p));
  return {out.features.value(), out.maps.value()};
}

inline Tensor merge(const Tensor& cb, const Tensor& tb, double alpha) {
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw Error("invalid_argument", "merge weight must lie in [0,1]");
  if (cb.shape() != tb.shape()) throw Error("dimension_mismatch", "merge operands differ in shape");
  Tape tape;
  return merge(tape.constant(cb), tape.constant(tb), tape.constant(Tensor::scalar(alpha))).value();
}

/// Scores ŷ[t][c] = σ(W_cᵀ g[t][c] + b_c).
inline Tensor classify(const Tensor& g, const ClassifierParams& p) {
  Tape tape;
  return ops::sigmoid(classify_logits(tape.constant(g), {tape.constant(p.weight), tape.constant(p.bias)}).value());
}

inline ForwardOutput forward(const Model& model, const Tensor& x) {
  Tape tape;
  auto bound = map_parameters<Var>(model.params, [&](const Tensor& t) { return tape.constant(t); });
  auto fw = forward_on_tape(tape, model.config, bound, x);
  ForwardOutput out;
  out.y_init = ops::sigmoid(fw.logits_init.value());
  out.y_final = ops::sigmoid(fw.logits_final.value());
  for (Var v : fw.cb_maps) out.cb_maps.push_back(v.value());
  for (Var v : fw.tb_maps) out.tb_maps.push_back(v.value());
  return out;
}

/// Mean BCE of one score head. Rejects non-binary labels.
inline double bce(const Tensor& scores, const LabelGrid& y, const Tensor* mask = nullptr) {
  y.validate_binary();
  if (scores.shape() != Shape{y.T, y.C}) throw Error("dimension_mismatch", "scores/labels shape mismatch");
  double acc = 0.0, count = 0.0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    const double w = mask ? (*mask)[i] : 1.0;
    if (w == 0.0) continue;
    const double p = scores[i];
    acc += w * (y.cells[i] ? -std::log(p) : -std::log1p(-p));
    count += w;
  }
  return count > 0.0 ? acc / count : 0.0;
}

/// Dual-head loss on materialised scores.
inline double loss(const ForwardOutput& out, const LabelGrid& y, const Tensor* mask = nullptr) {
  return bce(out.y_final, y, mask) + bce(out.y_init, y, mask);
}

}  // namespace mlad
