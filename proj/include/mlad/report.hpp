#pragma once

#include <charconv>
#include <cstdio>
#include <map>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "mlad/dependency_metrics.hpp"
#include "mlad/io.hpp"
#include "mlad/multilabel_metrics.hpp"

namespace mlad {

inline constexpr int kReportVersion = 1;

struct EvaluationReport {
  MetricReport conditional;
  FMapResult f_map;
  StandardMetrics standard;
  std::size_t num_videos = 0;
  std::size_t num_steps = 0;
};

/// Pairs ground truth with predictions by video id; both sides must list
/// exactly the same ids with matching shapes.
inline EvalInstance align(const Dataset& gt, const std::vector<Prediction>& preds) {
  if (gt.empty()) throw Error("invalid_argument", "ground truth holds no videos");
  std::map<std::string, const Prediction*> by_id;
  for (const auto& p : preds) by_id[p.video_id] = &p;
  std::vector<std::string> missing, extra;
  for (const auto& v : gt)
    if (!by_id.count(v.id)) missing.push_back(v.id);
  for (const auto& p : preds) {
    bool found = false;
    for (const auto& v : gt) found = found || v.id == p.video_id;
    if (!found) extra.push_back(p.video_id);
  }
  if (!missing.empty() || !extra.empty()) {
    auto join = [](const std::vector<std::string>& ids) {
      std::string s;
      for (const auto& id : ids) s += (s.empty() ? "" : ",") + id;
      return s.empty() ? std::string("none") : s;
    };
    throw Error("id_mismatch", "missing predictions for [" + join(missing) + "]; unknown prediction ids [" + join(extra) + "]");
  }
  EvalInstance inst;
  inst.C = gt.front().labels.C;
  for (const auto& v : gt) {
    const Prediction& p = *by_id[v.id];
    if (p.scores.T != v.labels.T || p.scores.C != v.labels.C)
      throw Error("dimension_mismatch", "video '" + v.id + "': predictions are " + std::to_string(p.scores.T) + "x" +
                                            std::to_string(p.scores.C) + ", ground truth is " + std::to_string(v.labels.T) +
                                            "x" + std::to_string(v.labels.C));
    inst.videos.push_back({v.id, v.labels, p.scores});
  }
  inst.validate();
  return inst;
}

inline EvaluationReport evaluate(const EvalInstance& inst, double threshold, std::span<const std::size_t> taus) {
  EvaluationReport r;
  r.conditional = aggregate(inst, threshold, taus);
  SampleSet s;
  for (const auto& v : inst.videos) s.append(v.labels, v.scores);
  r.f_map = f_map(s);
  r.standard = standard_suite(s, threshold);
  r.num_videos = inst.videos.size();
  r.num_steps = s.size();
  return r;
}

// -------------------------------------------------------------------- JSON

namespace detail {

inline Json opt(const std::optional<double>& v) { return v ? Json(*v) : Json(nullptr); }

inline std::optional<double> opt_number(const Json& v, const Where& w) {
  if (v.is_null()) return std::nullopt;
  return as_number(v, w);
}

}  // namespace detail

inline Json report_to_json(const EvaluationReport& r) {
  Json j;
  j["report_version"] = kReportVersion;
  j["threshold"] = r.conditional.threshold;
  j["taus"] = r.conditional.taus;
  j["num_videos"] = r.num_videos;
  j["num_steps"] = r.num_steps;
  Json per_ap = Json::array();
  for (const auto& ap : r.f_map.per_class_ap) per_ap.push_back(detail::opt(ap));
  j["f_map"] = {{"mean", r.f_map.mean}, {"per_class_ap", std::move(per_ap)}};
  Json pc = Json::array();
  for (const auto& c : r.conditional.per_class)
    pc.push_back({{"c", c.c},
                  {"n_correct", c.n_correct},
                  {"n_predict", c.n_predict},
                  {"n_gt", c.n_gt},
                  {"precision", c.precision},
                  {"recall", detail::opt(c.recall)}});
  j["per_class"] = std::move(pc);
  const auto& s = r.standard;
  j["standard_metrics"] = {{"hamming_loss", s.hamming_loss},     {"zero_one_loss", s.zero_one_loss},
                   {"ranking_loss", detail::opt(s.ranking_loss)}, {"coverage_error", detail::opt(s.coverage_error)},
                   {"jaccard", s.jaccard},               {"lrap", detail::opt(s.lrap)}};
  Json cond = Json::array();
  for (const auto& t : r.conditional.per_tau) {
    Json pairs = Json::array();
    for (const auto& p : t.pairs)
      pairs.push_back({{"ci", p.counts.ci},
                       {"cj", p.counts.cj},
                       {"n_correct", p.counts.n_correct},
                       {"n_predict", p.counts.n_predict},
                       {"n_gt", p.counts.n_gt},
                       {"precision", p.precision},
                       {"recall", p.recall},
                       {"f1", p.f1},
                       {"ap", p.ap}});
    Json agg = nullptr;
    if (t.aggregate)
      agg = {{"precision", t.aggregate->precision}, {"recall", t.aggregate->recall}, {"f1", t.aggregate->f1},
             {"map", t.aggregate->map},             {"num_pairs", t.aggregate->num_pairs}};
    cond.push_back({{"tau", t.tau}, {"aggregate", std::move(agg)}, {"pairs", std::move(pairs)}});
  }
  j["conditional"] = std::move(cond);
  return j;
}

inline EvaluationReport report_from_json(const std::string& text, const std::string& source = "report") {
  using namespace detail;
  const Where w{source};
  const Json j = parse_json(text, w);
  only_keys(j, {"report_version", "threshold", "taus", "num_videos", "num_steps", "f_map", "per_class", "standard_metrics",
                "conditional"},
            w);
  const Json& ver = field(j, "report_version", w);
  if (!ver.is_number_integer() || ver.get<std::int64_t>() != kReportVersion)
    throw Error("version_mismatch", source + ": unsupported report_version " + ver.dump());
  EvaluationReport r;
  r.conditional.threshold = as_number(field(j, "threshold", w), w.at("threshold"));
  r.conditional.taus = as_uint_list(field(j, "taus", w), w.at("taus"));
  r.num_videos = as_uint(field(j, "num_videos", w), w.at("num_videos"));
  r.num_steps = as_uint(field(j, "num_steps", w), w.at("num_steps"));

  const Json& fm = field(j, "f_map", w);
  only_keys(fm, {"mean", "per_class_ap"}, w.at("f_map"));
  r.f_map.mean = as_number(field(fm, "mean", w.at("f_map")), w.at("f_map"));
  for (const Json& ap : as_array(field(fm, "per_class_ap", w.at("f_map")), w.at("f_map")))
    r.f_map.per_class_ap.push_back(opt_number(ap, w.at("f_map")));

  for (const Json& c : as_array(field(j, "per_class", w), w.at("per_class"))) {
    const Where cw = w.at("per_class");
    only_keys(c, {"c", "n_correct", "n_predict", "n_gt", "precision", "recall"}, cw);
    r.conditional.per_class.push_back({as_uint(field(c, "c", cw), cw), as_uint(field(c, "n_correct", cw), cw),
                                       as_uint(field(c, "n_predict", cw), cw), as_uint(field(c, "n_gt", cw), cw),
                                       as_number(field(c, "precision", cw), cw), opt_number(field(c, "recall", cw), cw)});
  }

  const Json& s = field(j, "standard_metrics", w);
  const Where sw = w.at("standard_metrics");
  only_keys(s, {"hamming_loss", "zero_one_loss", "ranking_loss", "coverage_error", "jaccard", "lrap"}, sw);
  r.standard.hamming_loss = as_number(field(s, "hamming_loss", sw), sw);
  r.standard.zero_one_loss = as_number(field(s, "zero_one_loss", sw), sw);
  r.standard.ranking_loss = opt_number(field(s, "ranking_loss", sw), sw);
  r.standard.coverage_error = opt_number(field(s, "coverage_error", sw), sw);
  r.standard.jaccard = as_number(field(s, "jaccard", sw), sw);
  r.standard.lrap = opt_number(field(s, "lrap", sw), sw);

  for (const Json& t : as_array(field(j, "conditional", w), w.at("conditional"))) {
    const Where tw = w.at("conditional");
    only_keys(t, {"tau", "aggregate", "pairs"}, tw);
    TauReport tr;
    tr.tau = as_uint(field(t, "tau", tw), tw);
    const Json& a = field(t, "aggregate", tw);
    if (!a.is_null()) {
      only_keys(a, {"precision", "recall", "f1", "map", "num_pairs"}, tw);
      tr.aggregate = ConditionalAggregate{as_number(field(a, "precision", tw), tw), as_number(field(a, "recall", tw), tw),
                                          as_number(field(a, "f1", tw), tw), as_number(field(a, "map", tw), tw),
                                          as_uint(field(a, "num_pairs", tw), tw)};
    }
    for (const Json& p : as_array(field(t, "pairs", tw), tw)) {
      only_keys(p, {"ci", "cj", "n_correct", "n_predict", "n_gt", "precision", "recall", "f1", "ap"}, tw);
      PairResult pr;
      pr.counts = {as_uint(field(p, "ci", tw), tw),        as_uint(field(p, "cj", tw), tw),
                   tr.tau,
                   as_uint(field(p, "n_correct", tw), tw), as_uint(field(p, "n_predict", tw), tw),
                   as_uint(field(p, "n_gt", tw), tw)};
      pr.precision = as_number(field(p, "precision", tw), tw);
      pr.recall = as_number(field(p, "recall", tw), tw);
      pr.f1 = as_number(field(p, "f1", tw), tw);
      pr.ap = as_number(field(p, "ap", tw), tw);
      tr.pairs.push_back(pr);
    }
    r.conditional.per_tau.push_back(std::move(tr));
  }
  return r;
}

// --------------------------------------------------------------------- CSV

inline constexpr const char* kPairTableHeader = "ci,cj,tau,n_correct,n_predict,n_gt,precision,recall,f1,ap";

namespace detail {

inline std::string shortest(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

}  // namespace detail

/// One row per valid (ci, cj, τ) pair; reals in shortest round-trip form.
inline std::string pair_table_csv(const EvaluationReport& r) {
  std::string out = std::string(kPairTableHeader) + "\n";
  for (const auto& t : r.conditional.per_tau)
    for (const auto& p : t.pairs) {
      out += std::to_string(p.counts.ci) + "," + std::to_string(p.counts.cj) + "," + std::to_string(p.counts.tau) + "," +
             std::to_string(p.counts.n_correct) + "," + std::to_string(p.counts.n_predict) + "," +
             std::to_string(p.counts.n_gt) + "," + detail::shortest(p.precision) + "," + detail::shortest(p.recall) +
             "," + detail::shortest(p.f1) + "," + detail::shortest(p.ap) + "\n";
    }
  return out;
}

inline std::vector<PairResult> pair_table_from_csv(const std::string& text, const std::string& source = "pairs.csv") {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line != kPairTableHeader)
    throw Error("invalid_format", source + ":1: expected header '" + std::string(kPairTableHeader) + "'");
  std::vector<PairResult> out;
  for (std::size_t n = 2; std::getline(in, line); ++n) {
    if (line.empty()) continue;
    const std::string where = source + ":" + std::to_string(n);
    std::vector<std::string> cells;
    std::string cell;
    std::istringstream row(line);
    while (std::getline(row, cell, ',')) cells.push_back(cell);
    if (cells.size() != 10) throw Error("invalid_format", where + ": expected 10 columns");
    auto integer = [&](const std::string& s) {
      std::uint64_t v = 0;
      auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
      if (ec != std::errc() || p != s.data() + s.size()) throw Error("invalid_format", where + ": bad integer '" + s + "'");
      return v;
    };
    auto real = [&](const std::string& s) {
      double v = 0;
      auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
      if (ec != std::errc() || p != s.data() + s.size()) throw Error("invalid_format", where + ": bad number '" + s + "'");
      return v;
    };
    PairResult pr;
    pr.counts = {integer(cells[0]), integer(cells[1]), integer(cells[2]),
                 integer(cells[3]), integer(cells[4]), integer(cells[5])};
    pr.precision = real(cells[6]);
    pr.recall = real(cells[7]);
    pr.f1 = real(cells[8]);
    pr.ap = real(cells[9]);
    out.push_back(pr);
  }
  return out;
}

// ---------------------------------------------------------------- markdown

inline std::string report_markdown(const EvaluationReport& r, const std::vector<std::string>& class_names = {}) {
  auto pct = [](std::optional<double> v) {
    if (!v) return std::string("n/a");
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", 100.0 * *v);
    return std::string(buf);
  };
  auto num = [](std::optional<double> v) {
    if (!v) return std::string("n/a");
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.4f", *v);
    return std::string(buf);
  };
  auto name = [&](std::size_t c) { return c < class_names.size() ? class_names[c] : std::to_string(c); };
  std::ostringstream md;
  md << "# Evaluation summary\n\n";
  md << r.num_videos << " videos, " << r.num_steps << " time-steps, threshold " << r.conditional.threshold << ".\n\n";
  md << "**f-mAP:** " << pct(r.f_map.mean) << "\n\n";
  md << "## Action-conditional metrics (%)\n\n| tau | pairs | P_AC | R_AC | F1_AC | mAP_AC |\n|---|---|---|---|---|---|\n";
  for (const auto& t : r.conditional.per_tau) {
    md << "| " << t.tau << " | " << (t.aggregate ? t.aggregate->num_pairs : 0) << " | ";
    if (t.aggregate)
      md << pct(t.aggregate->precision) << " | " << pct(t.aggregate->recall) << " | " << pct(t.aggregate->f1) << " | "
         << pct(t.aggregate->map) << " |\n";
    else
      md << "n/a | n/a | n/a | n/a |\n";
  }
  const auto& s = r.standard;
  md << "\n## Standard multi-label metrics\n\n| metric | value |\n|---|---|\n";
  md << "| Hamming loss | " << num(s.hamming_loss) << " |\n| 0-1 loss | " << num(s.zero_one_loss) << " |\n";
  md << "| Ranking loss | " << num(s.ranking_loss) << " |\n| Coverage error | " << num(s.coverage_error) << " |\n";
  md << "| Jaccard score | " << num(s.jaccard) << " |\n| LRAP | " << num(s.lrap) << " |\n";
  md << "\n## Per class (%)\n\n| class | AP | precision | recall |\n|---|---|---|---|\n";
  for (const auto& c : r.conditional.per_class) {
    const std::string ap = c.c < r.f_map.per_class_ap.size() ? pct(r.f_map.per_class_ap[c.c]) : "n/a";
    md << "| " << name(c.c) << " | " << ap << " | " << pct(c.precision) << " | " << pct(c.recall) << " |\n";
  }
  return md.str();
}

}  // namespace mlad
