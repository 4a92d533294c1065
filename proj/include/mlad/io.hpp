#pragma once

#include <json.hpp>

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "mlad/dataset.hpp"
#include "mlad/grid.hpp"
#include "mlad/model.hpp"
#include "mlad/synth.hpp"

namespace mlad {

using Json = nlohmann::ordered_json;

namespace detail {

/// Location prefix for error messages ("file:line" or a section name).
struct Where {
  std::string text;
  Where at(std::string_view key) const { return {text + "." + std::string(key)}; }
};

[[noreturn]] inline void bad(const Where& w, const std::string& msg) { throw Error("invalid_format", w.text + ": " + msg); }

inline void only_keys(const Json& obj, std::initializer_list<std::string_view> allowed, const Where& w) {
  if (!obj.is_object()) bad(w, "expected a JSON object");
  for (const auto& [k, v] : obj.items())
    if (std::find(allowed.begin(), allowed.end(), k) == allowed.end()) bad(w, "unknown field '" + k + "'");
}

inline const Json& field(const Json& obj, std::string_view key, const Where& w) {
  auto it = obj.find(key);
  if (it == obj.end()) bad(w, "missing field '" + std::string(key) + "'");
  return *it;
}

inline std::uint64_t as_uint(const Json& v, const Where& w) {
  if (v.is_number_unsigned()) return v.get<std::uint64_t>();
  if (v.is_number_integer() && v.get<std::int64_t>() >= 0) return std::uint64_t(v.get<std::int64_t>());
  bad(w, "expected a non-negative integer");
}

inline double as_number(const Json& v, const Where& w) {
  if (!v.is_number()) bad(w, "expected a number");
  return v.get<double>();
}

inline std::string as_string(const Json& v, const Where& w) {
  if (!v.is_string()) bad(w, "expected a string");
  return v.get<std::string>();
}

inline const Json& as_array(const Json& v, const Where& w) {
  if (!v.is_array()) bad(w, "expected an array");
  return v;
}

/// Rectangular rows×cols number matrix into row-major storage.
inline std::vector<double> as_matrix(const Json& v, std::size_t rows, std::size_t cols, const Where& w) {
  as_array(v, w);
  if (v.size() != rows) bad(w, "expected " + std::to_string(rows) + " rows, got " + std::to_string(v.size()));
  std::vector<double> out;
  out.reserve(rows * cols);
  for (std::size_t r = 0; r < rows; ++r) {
    const Json& row = v[r];
    if (!row.is_array() || row.size() != cols)
      bad(w, "row " + std::to_string(r) + " must hold " + std::to_string(cols) + " numbers");
    for (const Json& x : row) {
      if (!x.is_number()) bad(w, "row " + std::to_string(r) + " holds a non-number");
      out.push_back(x.get<double>());
    }
  }
  return out;
}

inline Json parse_json(const std::string& text, const Where& w) {
  try {
    return Json::parse(text);
  } catch (const Json::parse_error& e) {
    throw Error("parse_error", w.text + ": " + e.what());
  }
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("io_error", "cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("io_error", "cannot write '" + path + "'");
  out << text;
  if (!out.flush()) throw Error("io_error", "write to '" + path + "' failed");
}

/// Non-blank lines with 1-based line numbers.
inline std::vector<std::pair<std::size_t, std::string>> jsonl_lines(const std::string& text) {
  std::vector<std::pair<std::size_t, std::string>> out;
  std::istringstream in(text);
  std::string line;
  for (std::size_t n = 1; std::getline(in, line); ++n) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    out.emplace_back(n, std::move(line));
  }
  return out;
}

}  // namespace detail

inline std::string read_text_file(const std::string& path) { return detail::read_file(path); }
inline void write_text_file(const std::string& path, const std::string& text) { detail::write_file(path, text); }

// ---------------------------------------------------------------- datasets

/// One JSONL object per video: video_id, T, F, optional C, optional
/// features (T×F), labels as sparse [t, c] pairs.
inline std::string dataset_to_jsonl(const Dataset& data) {
  std::string out;
  for (const auto& v : data) {
    Json j;
    j["video_id"] = v.id;
    j["T"] = v.length();
    j["F"] = v.has_features() ? v.features.dim(1) : 0;
    j["C"] = v.labels.C;
    if (v.has_features()) {
      Json rows = Json::array();
      for (std::size_t t = 0; t < v.length(); ++t) {
        Json row = Json::array();
        for (std::size_t f = 0; f < v.features.dim(1); ++f) row.push_back(v.features(t, f));
        rows.push_back(std::move(row));
      }
      j["features"] = std::move(rows);
    }
    Json labels = Json::array();
    for (std::size_t t = 0; t < v.labels.T; ++t)
      for (std::size_t c = 0; c < v.labels.C; ++c)
        if (v.labels(t, c)) labels.push_back(Json::array({t, c}));
    j["labels"] = std::move(labels);
    out += j.dump();
    out += '\n';
  }
  return out;
}

/// Parses a dataset file. The class count comes from the lines' "C" fields,
/// else from `num_classes`, else from the largest label index seen.
inline Dataset dataset_from_jsonl(const std::string& text, const std::string& source = "dataset",
                                  std::optional<std::size_t> num_classes = std::nullopt) {
  struct Raw {
    Video video;
    std::vector<std::pair<std::size_t, std::size_t>> labels;
    detail::Where where;
  };
  std::vector<Raw> raw;
  std::optional<std::size_t> file_C, file_F;
  std::size_t max_c_plus_1 = 0;
  std::set<std::string> ids;
  for (auto& [n, line] : detail::jsonl_lines(text)) {
    const detail::Where w{source + ":" + std::to_string(n)};
    const Json j = detail::parse_json(line, w);
    detail::only_keys(j, {"video_id", "T", "F", "C", "features", "labels"}, w);
    Raw r;
    r.where = w;
    r.video.id = detail::as_string(detail::field(j, "video_id", w), w.at("video_id"));
    if (!ids.insert(r.video.id).second) detail::bad(w, "duplicate video_id '" + r.video.id + "'");
    const std::size_t T = detail::as_uint(detail::field(j, "T", w), w.at("T"));
    const std::size_t F = detail::as_uint(detail::field(j, "F", w), w.at("F"));
    if (j.contains("C")) {
      const std::size_t C = detail::as_uint(j["C"], w.at("C"));
      if (file_C && *file_C != C) detail::bad(w, "C=" + std::to_string(C) + " differs from earlier lines");
      file_C = C;
    }
    if (j.contains("features")) {
      if (F == 0) detail::bad(w, "features present but F=0");
      if (file_F && *file_F != F) detail::bad(w, "F=" + std::to_string(F) + " differs from earlier lines");
      file_F = F;
      r.video.features = Tensor({T, F}, detail::as_matrix(j["features"], T, F, w.at("features")));
      if (!r.video.features.all_finite()) detail::bad(w.at("features"), "non-finite value");
    }
    std::set<std::pair<std::size_t, std::size_t>> seen;
    for (const Json& p : detail::as_array(detail::field(j, "labels", w), w.at("labels"))) {
      if (!p.is_array() || p.size() != 2) detail::bad(w.at("labels"), "each label must be a [t, c] pair");
      const std::size_t t = detail::as_uint(p[0], w.at("labels")), c = detail::as_uint(p[1], w.at("labels"));
      if (t >= T) detail::bad(w.at("labels"), "t=" + std::to_string(t) + " out of range for T=" + std::to_string(T));
      if (!seen.insert({t, c}).second)
        detail::bad(w.at("labels"), "duplicate label [" + std::to_string(t) + ", " + std::to_string(c) + "]");
      max_c_plus_1 = std::max(max_c_plus_1, c + 1);
      r.labels.emplace_back(t, c);
    }
    r.video.labels.T = T;
    raw.push_back(std::move(r));
  }
  if (file_C && num_classes && *file_C != *num_classes)
    throw Error("dimension_mismatch", source + ": file has C=" + std::to_string(*file_C) + ", expected " +
                                          std::to_string(*num_classes));
  const std::size_t C = file_C.value_or(num_classes.value_or(max_c_plus_1));
  Dataset out;
  out.reserve(raw.size());
  for (auto& r : raw) {
    LabelGrid y(r.video.labels.T, C);
    for (auto [t, c] : r.labels) {
      if (c >= C) detail::bad(r.where.at("labels"), "c=" + std::to_string(c) + " out of range for C=" + std::to_string(C));
      y(t, c) = 1;
    }
    r.video.labels = std::move(y);
    out.push_back(std::move(r.video));
  }
  return out;
}

inline Dataset load_dataset(const std::string& path, std::optional<std::size_t> num_classes = std::nullopt) {
  return dataset_from_jsonl(detail::read_file(path), path, num_classes);
}

// ------------------------------------------------------------- predictions

struct Prediction {
  std::string video_id;
  ScoreGrid scores;
};

inline std::string predictions_to_jsonl(const std::vector<Prediction>& preds) {
  std::string out;
  for (const auto& p : preds) {
    Json rows = Json::array();
    for (std::size_t t = 0; t < p.scores.T; ++t) {
      Json row = Json::array();
      for (std::size_t c = 0; c < p.scores.C; ++c) row.push_back(p.scores(t, c));
      rows.push_back(std::move(row));
    }
    Json j;
    j["video_id"] = p.video_id;
    j["scores"] = std::move(rows);
    out += j.dump();
    out += '\n';
  }
  return out;
}

inline std::vector<Prediction> predictions_from_jsonl(const std::string& text, const std::string& source = "predictions") {
  std::vector<Prediction> out;
  std::set<std::string> ids;
  for (auto& [n, line] : detail::jsonl_lines(text)) {
    const detail::Where w{source + ":" + std::to_string(n)};
    const Json j = detail::parse_json(line, w);
    detail::only_keys(j, {"video_id", "scores"}, w);
    Prediction p;
    p.video_id = detail::as_string(detail::field(j, "video_id", w), w.at("video_id"));
    if (!ids.insert(p.video_id).second) detail::bad(w, "duplicate video_id '" + p.video_id + "'");
    const Json& s = detail::as_array(detail::field(j, "scores", w), w.at("scores"));
    const std::size_t T = s.size();
    const std::size_t C = T ? (s[0].is_array() ? s[0].size() : 0) : 0;
    p.scores = ScoreGrid(T, C);
    p.scores.cells = detail::as_matrix(s, T, C, w.at("scores"));
    for (double x : p.scores.cells)
      if (!(x >= 0.0 && x <= 1.0)) detail::bad(w.at("scores"), "score outside [0,1]");
    out.push_back(std::move(p));
  }
  return out;
}

inline std::vector<Prediction> load_predictions(const std::string& path) {
  return predictions_from_jsonl(detail::read_file(path), path);
}

// ----------------------------------------------------------- configuration

struct TrainSection {
  double lr = 1e-4;
  std::size_t epochs = 10;
  std::vector<std::size_t> train_lengths{32};
  std::uint64_t seed = 0;
  std::size_t batch_size = 0;  // 0 = every video in one step
};

struct EvalSection {
  double threshold = 0.5;
  std::vector<std::size_t> taus{0, 5, 10, 20, 40};
};

/// C and F may be left out and filled in from the data.
struct RunConfig {
  ModelConfig model;
  bool has_C = false;
  bool has_F = false;
  TrainSection train;
  EvalSection eval;

  /// Fills C/F from data, or checks that the configured values agree.
  void resolve_dimensions(std::size_t C, std::size_t F) {
    if (has_C && model.num_classes != C)
      throw Error("dimension_mismatch", "config C=" + std::to_string(model.num_classes) + " but data has C=" + std::to_string(C));
    if (has_F && model.feature_dim != F)
      throw Error("dimension_mismatch", "config F=" + std::to_string(model.feature_dim) + " but data has F=" + std::to_string(F));
    model.num_classes = C;
    model.feature_dim = F;
    has_C = has_F = true;
    model.validate();
  }
};

inline Json model_config_to_json(const ModelConfig& c) {
  Json j;
  j["C"] = c.num_classes;
  j["F"] = c.feature_dim;
  j["H"] = c.hidden_dim;
  j["L"] = c.num_layers;
  j["branches"] = std::string(to_string(c.branches));
  j["alpha_mode"] = std::string(to_string(c.alpha_mode));
  j["alpha_fixed"] = c.alpha_fixed;
  j["seed"] = c.seed;
  j["class_names"] = c.class_names;
  return j;
}

namespace detail {

inline void read_model_section(const Json& j, RunConfig& rc, const Where& w, bool require_dims) {
  only_keys(j, {"C", "F", "H", "L", "branches", "alpha_mode", "alpha_fixed", "seed", "class_names"}, w);
  ModelConfig& m = rc.model;
  if (require_dims) {
    field(j, "C", w);
    field(j, "F", w);
  }
  if (j.contains("C")) {
    m.num_classes = as_uint(j["C"], w.at("C"));
    rc.has_C = true;
  }
  if (j.contains("F")) {
    m.feature_dim = as_uint(j["F"], w.at("F"));
    rc.has_F = true;
  }
  if (j.contains("H")) m.hidden_dim = as_uint(j["H"], w.at("H"));
  if (j.contains("L")) m.num_layers = as_uint(j["L"], w.at("L"));
  try {
    if (j.contains("branches")) m.branches = parse_branches(as_string(j["branches"], w.at("branches")));
    if (j.contains("alpha_mode")) m.alpha_mode = parse_alpha_mode(as_string(j["alpha_mode"], w.at("alpha_mode")));
  } catch (const Error& e) {
    bad(w, e.what());
  }
  if (j.contains("alpha_fixed")) m.alpha_fixed = as_number(j["alpha_fixed"], w.at("alpha_fixed"));
  if (j.contains("seed")) m.seed = as_uint(j["seed"], w.at("seed"));
  if (j.contains("class_names")) {
    m.class_names.clear();
    for (const Json& n : as_array(j["class_names"], w.at("class_names"))) m.class_names.push_back(as_string(n, w.at("class_names")));
  }
}

inline std::vector<std::size_t> as_uint_list(const Json& v, const Where& w) {
  std::vector<std::size_t> out;
  for (const Json& x : as_array(v, w)) out.push_back(as_uint(x, w));
  return out;
}

}  // namespace detail

inline ModelConfig model_config_from_json(const Json& j, const std::string& where = "config") {
  RunConfig rc;
  detail::read_model_section(j, rc, {where}, true);
  rc.model.validate();
  return rc.model;
}

/// Sections and keys are optional; unknown keys are rejected.
inline RunConfig run_config_from_json(const std::string& text, const std::string& source = "config") {
  const detail::Where w{source};
  const Json j = detail::parse_json(text, w);
  detail::only_keys(j, {"model", "train", "eval"}, w);
  RunConfig rc;
  if (j.contains("model")) detail::read_model_section(j["model"], rc, w.at("model"), false);
  if (j.contains("train")) {
    const Json& t = j["train"];
    const auto tw = w.at("train");
    detail::only_keys(t, {"lr", "epochs", "train_lengths", "seed", "batch_size"}, tw);
    if (t.contains("lr")) rc.train.lr = detail::as_number(t["lr"], tw.at("lr"));
    if (t.contains("epochs")) rc.train.epochs = detail::as_uint(t["epochs"], tw.at("epochs"));
    if (t.contains("train_lengths")) rc.train.train_lengths = detail::as_uint_list(t["train_lengths"], tw.at("train_lengths"));
    if (t.contains("seed")) rc.train.seed = detail::as_uint(t["seed"], tw.at("seed"));
    if (t.contains("batch_size")) rc.train.batch_size = detail::as_uint(t["batch_size"], tw.at("batch_size"));
    if (!(rc.train.lr >= 0.0)) detail::bad(tw.at("lr"), "must be >= 0");
    if (rc.train.train_lengths.empty()) detail::bad(tw.at("train_lengths"), "must not be empty");
    for (std::size_t l : rc.train.train_lengths)
      if (l == 0) detail::bad(tw.at("train_lengths"), "lengths must be >= 1");
  }
  if (j.contains("eval")) {
    const Json& e = j["eval"];
    const auto ew = w.at("eval");
    detail::only_keys(e, {"threshold", "taus"}, ew);
    if (e.contains("threshold")) rc.eval.threshold = detail::as_number(e["threshold"], ew.at("threshold"));
    if (e.contains("taus")) rc.eval.taus = detail::as_uint_list(e["taus"], ew.at("taus"));
    if (!(rc.eval.threshold > 0.0 && rc.eval.threshold < 1.0)) detail::bad(ew.at("threshold"), "must lie in (0,1)");
    if (rc.eval.taus.empty()) detail::bad(ew.at("taus"), "must not be empty");
  }
  return rc;
}

inline RunConfig load_run_config(const std::string& path) { return run_config_from_json(detail::read_file(path), path); }

// ------------------------------------------------------- synthetic specs

inline Json synthetic_spec_to_json(const SyntheticSpec& s) {
  Json j;
  j["C"] = s.C;
  j["F"] = s.F;
  j["num_videos"] = s.num_videos;
  j["length_range"] = Json::array({s.t_min, s.t_max});
  j["rate"] = s.rate;
  Json d = Json::array();
  for (auto [lo, hi] : s.duration) d.push_back(Json::array({lo, hi}));
  j["duration"] = std::move(d);
  Json co = Json::array(), te = Json::array(), cx = Json::array();
  for (const auto& r : s.cooccur) co.push_back({{"trigger", r.trigger}, {"induced", r.induced}, {"p", r.p}});
  for (const auto& r : s.temporal)
    te.push_back({{"trigger", r.trigger}, {"induced", r.induced}, {"p", r.p}, {"max_gap", r.max_gap}});
  for (const auto& c : s.context_only) cx.push_back({{"class", c.cls}, {"dropout", c.dropout}});
  j["cooccur"] = std::move(co);
  j["temporal"] = std::move(te);
  j["context_only"] = std::move(cx);
  j["noise_sigma"] = s.noise_sigma;
  j["seed"] = s.seed;
  if (s.prototype_seed) j["prototype_seed"] = *s.prototype_seed;
  return j;
}

/// "rate" is a number or one per class; "duration" is [min, max] or one
/// such pair per class.
inline SyntheticSpec synthetic_spec_from_json(const std::string& text, const std::string& source = "spec") {
  using namespace detail;
  const Where w{source};
  const Json j = parse_json(text, w);
  only_keys(j, {"C", "F", "num_videos", "length_range", "rate", "duration", "cooccur", "temporal", "context_only",
                "noise_sigma", "seed", "prototype_seed"},
            w);
  SyntheticSpec s;
  s.C = as_uint(field(j, "C", w), w.at("C"));
  s.F = as_uint(field(j, "F", w), w.at("F"));
  s.num_videos = as_uint(field(j, "num_videos", w), w.at("num_videos"));
  const Json& lr = as_array(field(j, "length_range", w), w.at("length_range"));
  if (lr.size() != 2) bad(w.at("length_range"), "expected [Tmin, Tmax]");
  s.t_min = as_uint(lr[0], w.at("length_range"));
  s.t_max = as_uint(lr[1], w.at("length_range"));

  const Json& rate = field(j, "rate", w);
  if (rate.is_array()) {
    for (const Json& r : rate) s.rate.push_back(as_number(r, w.at("rate")));
  } else {
    s.rate.assign(s.C, as_number(rate, w.at("rate")));
  }
  auto range = [&](const Json& p) {
    if (!p.is_array() || p.size() != 2) bad(w.at("duration"), "expected [min, max]");
    return std::pair<std::size_t, std::size_t>{as_uint(p[0], w.at("duration")), as_uint(p[1], w.at("duration"))};
  };
  const Json& dur = as_array(field(j, "duration", w), w.at("duration"));
  if (dur.size() == 2 && !dur[0].is_array()) {
    s.duration.assign(s.C, range(dur));
  } else {
    for (const Json& p : dur) s.duration.push_back(range(p));
  }

  if (j.contains("cooccur"))
    for (const Json& r : as_array(j["cooccur"], w.at("cooccur"))) {
      only_keys(r, {"trigger", "induced", "p"}, w.at("cooccur"));
      s.cooccur.push_back({as_uint(field(r, "trigger", w.at("cooccur")), w.at("cooccur")),
                           as_uint(field(r, "induced", w.at("cooccur")), w.at("cooccur")),
                           as_number(field(r, "p", w.at("cooccur")), w.at("cooccur"))});
    }
  if (j.contains("temporal"))
    for (const Json& r : as_array(j["temporal"], w.at("temporal"))) {
      const Where tw = w.at("temporal");
      only_keys(r, {"trigger", "induced", "p", "max_gap"}, tw);
      s.temporal.push_back({as_uint(field(r, "trigger", tw), tw), as_uint(field(r, "induced", tw), tw),
                            as_number(field(r, "p", tw), tw), as_uint(field(r, "max_gap", tw), tw)});
    }
  if (j.contains("context_only"))
    for (const Json& r : as_array(j["context_only"], w.at("context_only"))) {
      const Where cw = w.at("context_only");
      only_keys(r, {"class", "dropout"}, cw);
      s.context_only.push_back({as_uint(field(r, "class", cw), cw), as_number(field(r, "dropout", cw), cw)});
    }
  if (j.contains("noise_sigma")) s.noise_sigma = as_number(j["noise_sigma"], w.at("noise_sigma"));
  if (j.contains("seed")) s.seed = as_uint(j["seed"], w.at("seed"));
  if (j.contains("prototype_seed")) s.prototype_seed = as_uint(j["prototype_seed"], w.at("prototype_seed"));
  s.validate();
  return s;
}

inline SyntheticSpec load_synthetic_spec(const std::string& path) {
  return synthetic_spec_from_json(detail::read_file(path), path);
}

}  // namespace mlad
