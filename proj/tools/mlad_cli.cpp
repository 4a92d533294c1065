#include <CLI11.hpp>

#include <cstdio>
#include <exception>
#include <iostream>
#include <string>

#include "mlad/harness.hpp"

namespace {

int fail(const std::string& code, std::string msg) {
  for (char& ch : msg)
    if (ch == '\n' || ch == '\r') ch = ' ';
  std::cerr << "error: " << code << ": " << msg << "\n";
  return 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"MLAD multi-label action dependency toolkit"};
  app.require_subcommand(1);

  mlad::harness::GenArgs gen;
  std::uint64_t gen_seed = 0;
  auto* gen_cmd = app.add_subcommand("gen", "Generate a synthetic dataset from a spec");
  gen_cmd->add_option("--config", gen.spec, "Synthetic spec JSON")->required();
  gen_cmd->add_option("--out", gen.out, "Output dataset (JSONL)")->required();
  auto* gen_seed_opt = gen_cmd->add_option("--seed", gen_seed, "Overrides the spec seed");

  mlad::harness::TrainArgs tr;
  std::string tr_val, tr_hist;
  std::uint64_t tr_seed = 0;
  auto* train_cmd = app.add_subcommand("train", "Train a model");
  train_cmd->add_option("--config", tr.config, "Run config JSON");
  train_cmd->add_option("--data", tr.data, "Training dataset (JSONL)")->required();
  train_cmd->add_option("--out", tr.out, "Output model file")->required();
  auto* tr_val_opt = train_cmd->add_option("--val", tr_val, "Validation dataset scored each epoch");
  auto* tr_hist_opt = train_cmd->add_option("--history", tr_hist, "History JSON (default <out>.history.json)");
  auto* tr_seed_opt = train_cmd->add_option("--seed", tr_seed, "Overrides model and training seeds");

  mlad::harness::PredictArgs pr;
  auto* predict_cmd = app.add_subcommand("predict", "Score every video with a trained model");
  predict_cmd->add_option("--model", pr.model, "Model file")->required();
  predict_cmd->add_option("--data", pr.data, "Dataset (JSONL)")->required();
  predict_cmd->add_option("--out", pr.out, "Output predictions (JSONL)")->required();

  mlad::harness::EvalArgs ev;
  double ev_thr = 0.5;
  std::string ev_tau;
  auto* eval_cmd = app.add_subcommand("eval", "Evaluate predictions against ground truth");
  eval_cmd->add_option("--gt", ev.gt, "Ground-truth dataset (JSONL)")->required();
  eval_cmd->add_option("--preds", ev.preds, "Predictions (JSONL)")->required();
  eval_cmd->add_option("--config", ev.config, "Run config JSON (eval section)");
  auto* ev_thr_opt = eval_cmd->add_option("--threshold", ev_thr, "Binarization threshold");
  auto* ev_tau_opt = eval_cmd->add_option("--tau", ev_tau, "Comma-separated tau list");
  eval_cmd->add_option("--format", ev.format, "json, csv (pair table) or md")
      ->check(CLI::IsMember({"json", "csv", "md"}));
  eval_cmd->add_option("--out", ev.out, "Output file (default stdout)");

  mlad::harness::AttnArgs at;
  auto* attn_cmd = app.add_subcommand("attn", "Export attention maps for one video");
  attn_cmd->add_option("--model", at.model, "Model file")->required();
  attn_cmd->add_option("--data", at.data, "Dataset (JSONL)")->required();
  attn_cmd->add_option("--video", at.video, "Video id");
  attn_cmd->add_option("--class", at.cls, "Class (name or index) for the averaged CB map");
  attn_cmd->add_option("--out", at.out, "Output CSV (default stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return fail("usage", e.what()) + 1;
  }

  try {
    std::string msg;
    if (*gen_cmd) {
      if (*gen_seed_opt) gen.seed = gen_seed;
      msg = mlad::harness::cmd_gen(gen);
    } else if (*train_cmd) {
      if (*tr_val_opt) tr.validation = tr_val;
      if (*tr_hist_opt) tr.history = tr_hist;
      if (*tr_seed_opt) tr.seed = tr_seed;
      msg = mlad::harness::cmd_train(tr);
    } else if (*predict_cmd) {
      msg = mlad::harness::cmd_predict(pr);
    } else if (*eval_cmd) {
      if (*ev_thr_opt) ev.threshold = ev_thr;
      if (*ev_tau_opt) ev.taus = mlad::harness::parse_tau_list(ev_tau);
      msg = mlad::harness::cmd_eval(ev);
    } else if (*attn_cmd) {
      msg = mlad::harness::cmd_attn(at);
    }
    std::cout << msg;
    std::cout.flush();
  } catch (const mlad::Error& e) {
    return fail(e.code(), e.what());
  } catch (const std::exception& e) {
    return fail("internal", e.what());
  }
  return 0;
}
