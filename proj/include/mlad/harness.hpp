#pragma once

#include <charconv>
#include <cstdio>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "mlad/inference.hpp"
#include "mlad/io.hpp"
#include "mlad/report.hpp"
#include "mlad/serialize.hpp"
#include "mlad/synth.hpp"
#include "mlad/train.hpp"

namespace mlad::harness {

/// Dependency matrix at τ=0 as a fixed-width text table.
inline std::string dependency_summary(const Dataset& data, std::size_t tau = 0) {
  const auto m = empirical_dependency_matrix(data, tau);
  std::ostringstream out;
  out << "empirical P(i | j, tau=" << tau << "), rows i, columns j\n     ";
  for (std::size_t j = 0; j < m.size(); ++j) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "%7zu", j);
    out << buf;
  }
  out << "\n";
  for (std::size_t i = 0; i < m.size(); ++i) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "%5zu", i);
    out << buf;
    for (std::size_t j = 0; j < m.size(); ++j) {
      if (m[i][j]) {
        std::snprintf(buf, sizeof buf, "%7.3f", *m[i][j]);
        out << buf;
      } else {
        out << "      -";
      }
    }
    out << "\n";
  }
  return out.str();
}

struct GenArgs {
  std::string spec;
  std::string out;
  std::optional<std::uint64_t> seed;  // overrides the spec's seed
};

inline std::string cmd_gen(const GenArgs& a) {
  const SyntheticSpec spec = load_synthetic_spec(a.spec);
  const auto ds = generate(spec, a.seed.value_or(spec.seed));
  write_text_file(a.out, dataset_to_jsonl(ds.videos));
  std::string msg = "wrote " + std::to_string(ds.videos.size()) + " videos to " + a.out + "\n";
  if (!ds.videos.empty()) msg += dependency_summary(ds.videos);
  return msg;
}

struct TrainArgs {
  std::string config;
  std::string data;
  std::string out;
  std::optional<std::string> validation;
  std::optional<std::string> history;  // default: <out>.history.json
  std::optional<std::uint64_t> seed;   // overrides both model and train seeds
};

inline Json history_to_json(const std::vector<EpochRecord>& history) {
  Json h = Json::array();
  for (const auto& e : history) {
    Json r;
    r["epoch"] = e.epoch;
    r["loss"] = e.loss;
    r["val_f_map"] = e.val_f_map ? Json(*e.val_f_map) : Json(nullptr);
    r["alphas"] = e.alphas;
    h.push_back(std::move(r));
  }
  return h;
}

inline std::string cmd_train(const TrainArgs& a) {
  RunConfig rc = a.config.empty() ? RunConfig{} : load_run_config(a.config);
  if (a.seed) rc.model.seed = rc.train.seed = *a.seed;
  const Dataset data = load_dataset(a.data, rc.has_C ? std::optional(rc.model.num_classes) : std::nullopt);
  if (data.empty()) throw Error("empty_dataset", a.data + " holds no videos");
  for (const auto& v : data)
    if (!v.has_features()) throw Error("missing_features", "video '" + v.id + "' in " + a.data + " has no features");
  rc.resolve_dimensions(data.front().labels.C, data.front().features.dim(1));
  check_training_data(data, rc.model);

  std::optional<Dataset> val;
  if (a.validation) {
    val = load_dataset(*a.validation, rc.model.num_classes);
    check_training_data(*val, rc.model);
  }
  TrainOptions opt;
  opt.adam.lr = rc.train.lr;
  opt.epochs = rc.train.epochs;
  opt.train_lengths = rc.train.train_lengths;
  opt.seed = rc.train.seed;
  opt.batch_size = rc.train.batch_size;
  opt.validation = val ? &*val : nullptr;
  const auto result = train(data, rc.model, opt);

  save_model(result.model, a.out);
  const std::string hist_path = a.history.value_or(a.out + ".history.json");
  write_text_file(hist_path, history_to_json(result.history).dump(2) + "\n");
  std::string msg = "trained " + std::to_string(parameter_count(result.model.params)) + " parameters for " +
                    std::to_string(opt.epochs) + " epochs; model " + a.out + ", history " + hist_path + "\n";
  if (!result.history.empty()) {
    char buf[96];
    std::snprintf(buf, sizeof buf, "final loss %.6f", result.history.back().loss);
    msg += buf;
    if (result.history.back().val_f_map) {
      std::snprintf(buf, sizeof buf, ", validation f-mAP %.2f", 100.0 * *result.history.back().val_f_map);
      msg += buf;
    }
    msg += "\n";
  }
  return msg;
}

struct PredictArgs {
  std::string model;
  std::string data;
  std::string out;
};

inline std::string cmd_predict(const PredictArgs& a) {
  const Model m = load_model(a.model);
  const Dataset data = load_dataset(a.data, m.config.num_classes);
  std::vector<Prediction> preds;
  for (const auto& v : data) {
    if (!v.has_features()) throw Error("missing_features", "video '" + v.id + "' has no features");
    if (v.features.dim(1) != m.config.feature_dim)
      throw Error("dimension_mismatch", "video '" + v.id + "' has F=" + std::to_string(v.features.dim(1)) +
                                            ", model expects " + std::to_string(m.config.feature_dim));
    preds.push_back({v.id, predict_scores(m, v.features)});
  }
  write_text_file(a.out, predictions_to_jsonl(preds));
  return "wrote predictions for " + std::to_string(preds.size()) + " videos to " + a.out + "\n";
}

inline std::vector<std::size_t> parse_tau_list(const std::string& s) {
  std::vector<std::size_t> out;
  std::stringstream in(s);
  std::string item;
  while (std::getline(in, item, ',')) {
    std::size_t v = 0;
    auto [p, ec] = std::from_chars(item.data(), item.data() + item.size(), v);
    if (item.empty() || ec != std::errc() || p != item.data() + item.size())
      throw Error("invalid_argument", "--tau expects comma-separated non-negative integers, got '" + s + "'");
    out.push_back(v);
  }
  if (out.empty()) throw Error("invalid_argument", "--tau list is empty");
  if (s.back() == ',') throw Error("invalid_argument", "--tau list ends with a comma: '" + s + "'");
  return out;
}

struct EvalArgs {
  std::string gt;
  std::string preds;
  std::string config;  // optional; supplies eval defaults
  std::optional<double> threshold;
  std::optional<std::vector<std::size_t>> taus;
  std::string format = "json";  // json, csv or md
  std::string out;              // empty: return the rendering
};

inline std::string render_report(const EvaluationReport& r, const std::string& format,
                                 const std::vector<std::string>& class_names = {}) {
  if (format == "json") return report_to_json(r).dump(2) + "\n";
  if (format == "csv") return pair_table_csv(r);
  if (format == "md") return report_markdown(r, class_names);
  throw Error("invalid_argument", "unknown format '" + format + "' (expected json, csv or md)");
}

inline std::string cmd_eval(const EvalArgs& a) {
  const RunConfig rc = a.config.empty() ? RunConfig{} : load_run_config(a.config);
  const double threshold = a.threshold.value_or(rc.eval.threshold);
  const auto taus = a.taus.value_or(rc.eval.taus);
  const auto preds = load_predictions(a.preds);
  std::optional<std::size_t> C;
  if (rc.has_C) C = rc.model.num_classes;
  else if (!preds.empty()) C = preds.front().scores.C;
  const Dataset gt = load_dataset(a.gt, C);
  const auto report = evaluate(align(gt, preds), threshold, taus);
  const std::string text = render_report(report, a.format, rc.model.class_names);
  if (a.out.empty()) return text;
  write_text_file(a.out, text);
  return "wrote " + a.format + " report to " + a.out + "\n";
}

struct AttnArgs {
  std::string model;
  std::string data;
  std::string video;  // may be empty when the data holds a single video
  std::string cls;    // optional: index or class name for the averaged map
  std::string out;    // empty: return the CSV
};

inline std::size_t resolve_class(const std::string& s, const ModelConfig& cfg) {
  for (std::size_t c = 0; c < cfg.class_names.size(); ++c)
    if (cfg.class_names[c] == s) return c;
  std::size_t v = 0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || ec != std::errc() || p != s.data() + s.size() || v >= cfg.num_classes)
    throw Error("unknown_class", "'" + s + "' is neither a class name nor an index below " + std::to_string(cfg.num_classes));
  return v;
}

/// CSV of every attention map for one video, computed on the whole video in
/// one forward pass. With a class, also rows with branch "cb_mean": per
/// layer, the C×C CB map averaged over the steps where that class is present.
inline std::string attention_csv(const Model& m, const Video& v, std::optional<std::size_t> cls) {
  const auto fw = forward(m, v.features);
  const std::size_t C = m.config.num_classes, T = v.length();
  std::string out = "layer,branch,index,row,col,value\n";
  auto row = [&](std::size_t layer, const char* branch, std::size_t index, std::size_t r, std::size_t c, double val) {
    out += std::to_string(layer) + "," + branch + "," + std::to_string(index) + "," + std::to_string(r) + "," +
           std::to_string(c) + "," + detail::shortest(val) + "\n";
  };
  for (std::size_t l = 0; l < fw.cb_maps.size(); ++l)
    for (std::size_t t = 0; t < T; ++t)
      for (std::size_t i = 0; i < C; ++i)
        for (std::size_t j = 0; j < C; ++j) row(l, "cb", t, i, j, fw.cb_maps[l](t, i, j));
  for (std::size_t l = 0; l < fw.tb_maps.size(); ++l)
    for (std::size_t c = 0; c < C; ++c)
      for (std::size_t s = 0; s < T; ++s)
        for (std::size_t u = 0; u < T; ++u) row(l, "tb", c, s, u, fw.tb_maps[l](c, s, u));
  if (cls) {
    for (std::size_t l = 0; l < fw.cb_maps.size(); ++l) {
      std::vector<double> acc(C * C, 0.0);
      std::size_t n = 0;
      for (std::size_t t = 0; t < T; ++t) {
        if (!v.labels(t, *cls)) continue;
        ++n;
        for (std::size_t k = 0; k < C * C; ++k) acc[k] += fw.cb_maps[l][t * C * C + k];
      }
      if (n == 0) continue;
      for (std::size_t i = 0; i < C; ++i)
        for (std::size_t j = 0; j < C; ++j) row(l, "cb_mean", *cls, i, j, acc[i * C + j] / double(n));
    }
  }
  return out;
}

inline std::string cmd_attn(const AttnArgs& a) {
  const Model m = load_model(a.model);
  const Dataset data = load_dataset(a.data, m.config.num_classes);
  const Video* video = nullptr;
  if (a.video.empty()) {
    if (data.size() != 1) throw Error("invalid_argument", "--video is required when the data holds several videos");
    video = &data.front();
  } else {
    for (const auto& v : data)
      if (v.id == a.video) video = &v;
    if (!video) throw Error("unknown_video", "video '" + a.video + "' not found in " + a.data);
  }
  if (!video->has_features()) throw Error("missing_features", "video '" + video->id + "' has no features");
  if (video->features.dim(1) != m.config.feature_dim)
    throw Error("dimension_mismatch", "video '" + video->id + "' has F=" + std::to_string(video->features.dim(1)) +
                                          ", model expects " + std::to_string(m.config.feature_dim));
  std::optional<std::size_t> cls;
  if (!a.cls.empty()) cls = resolve_class(a.cls, m.config);
  const std::string csv = attention_csv(m, *video, cls);
  if (a.out.empty()) return csv;
  write_text_file(a.out, csv);
  return "wrote attention maps for '" + video->id + "' to " + a.out + "\n";
}

}  // namespace mlad::harness
