// Command-line driver for the recommendation pipeline.

#include <CLI11.hpp>

#include <filesystem>
#include <iostream>
#include <optional>

#include "socrec/config.hpp"
#include "socrec/synthetic.hpp"

namespace fs = std::filesystem;
using namespace socrec;

namespace {

struct Common {
  std::string config_file;
  std::optional<std::uint64_t> seed;
  std::string out_dir;
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("--config", c.config_file, "JSON run configuration");
  cmd->add_option("--seed", c.seed, "Override the configured seed");
  cmd->add_option("--out-dir", c.out_dir, "Override the output directory");
}

RunConfig resolve_config(const Common& c) {
  RunConfig cfg;
  if (!c.config_file.empty()) cfg = load_config(c.config_file);
  if (c.seed) cfg.apply_seed(*c.seed);
  if (!c.out_dir.empty()) cfg.out_dir = c.out_dir;
  cfg.validate();
  return cfg;
}

void log(const std::string& stage, const std::string& msg) {
  std::clog << '[' << stage << "] " << msg << '\n';
}

fs::path out_path(const RunConfig& cfg, const std::string& name) { return fs::path(cfg.out_dir) / name; }

void cmd_gen(const RunConfig& cfg) {
  const SyntheticData data = generate_synthetic(cfg.synthetic);
  const std::string stamp = config_stamp(cfg);
  save_dataset(data.dataset, cfg.data_path(), stamp);
  write_rec_log(data.test, cfg.test_path(), stamp);
  const DatasetStats s = dataset_stats(data.dataset);
  log("gen", "wrote " + cfg.data_path().string() + ": " + std::to_string(s.users) + " users, " +
                 std::to_string(s.items) + " items, " + std::to_string(s.records) + " records, " +
                 std::to_string(data.test.size()) + " test records");
}

void cmd_preprocess(const RunConfig& cfg) {
  const Dataset ds = load_dataset(cfg.data_path());
  const FilteredLog f = preprocess(ds, ds.log, cfg.preprocess);
  const std::string stamp = config_stamp(cfg);
  write_rec_log(f.merged(), out_path(cfg, "filtered_log.tsv"), stamp);
  write_filter_stats(f.stats, out_path(cfg, "filter_stats.tsv"), stamp);
  log("preprocess", "kept " + std::to_string(f.negatives.size()) + " negatives and " +
                        std::to_string(f.positives.size()) + " positives (" +
                        std::to_string(f.stats.supplemented) + " supplemented)");
}

void cmd_train(const RunConfig& cfg) {
  const Dataset ds = load_dataset(cfg.data_path());
  const fs::path filtered_file = out_path(cfg, "filtered_log.tsv");
  if (!fs::exists(filtered_file)) throw Error(filtered_file.string() + " missing; run preprocess first");
  const FilteredLog f = FilteredLog::from_records(read_rec_log(filtered_file));
  const TrainedModel tm = fit_model(ds, f, cfg.model, cfg.train);
  const std::string stamp = config_stamp(cfg);
  save_model(tm.model, out_path(cfg, "model.bin"), stamp);
  write_loss_trace(tm.trace, out_path(cfg, "loss.csv"), stamp);
  log("train", "wrote " + out_path(cfg, "model.bin").string());
}

void cmd_predict(const RunConfig& cfg, const std::string& checkpoint, const std::string& test_file) {
  const fs::path model_file = checkpoint.empty() ? out_path(cfg, "model.bin") : fs::path(checkpoint);
  const MfmModel model = load_model(model_file);
  const auto test = read_rec_log(test_file.empty() ? cfg.test_path() : fs::path(test_file));
  const auto scored = to_scored(test, score_records(model, test));
  const std::string stamp = config_stamp(cfg);
  write_scores(scored, out_path(cfg, "scores.tsv"), stamp);
  write_rankings(scored, cfg.eval.top_n, out_path(cfg, "rankings.tsv"), stamp);
  log("predict", "scored " + std::to_string(test.size()) + " records");
}

void cmd_ensemble(const RunConfig& cfg) {
  const Dataset ds = load_dataset(cfg.data_path());
  const auto test = read_rec_log(cfg.test_path());
  const TwoStageResult r = run_two_stage(ds, test, cfg.preprocess, cfg.model, cfg.train, cfg.ensemble);
  const fs::path dir = out_path(cfg, "ensemble");
  const std::string stamp = config_stamp(cfg);
  save_model(r.stage1.model, dir / "stage1_model.bin", stamp);
  save_model(r.final_model.model, dir / "final_model.bin", stamp);
  write_loss_trace(r.stage1.trace, dir / "stage1_loss.csv", stamp);
  write_loss_trace(r.final_model.trace, dir / "final_loss.csv", stamp);
  write_behavior_tables(r.tables, dir / "behavior_tables.tsv", stamp);
  write_behavior_tables(r.stage1_tables, dir / "stage1_behavior_tables.tsv", stamp);
  write_ensemble_model(r.ranges.front().blend, dir / "ensemble_model.tsv", stamp);
  write_scores(to_scored(test, r.level1_test_scores), dir / "level1_scores.tsv", stamp);
  const auto scored = to_scored(test, r.ranges.front().test_scores);
  write_scores(scored, dir / "scores.tsv", stamp);
  write_rankings(scored, cfg.eval.top_n, dir / "rankings.tsv", stamp);
  log("ensemble", "wrote " + dir.string());
}

void cmd_eval(const RunConfig& cfg, const std::string& predictions, const std::string& truth,
              bool force) {
  const fs::path pred_file = predictions.empty() ? out_path(cfg, "scores.tsv") : fs::path(predictions);
  const fs::path truth_file = truth.empty() ? cfg.test_path() : fs::path(truth);
  const auto ps = read_stamp(pred_file);
  const auto ts = read_stamp(truth_file);
  if (ps && ts && *ps != *ts && !force) {
    throw Error("config hash mismatch: " + pred_file.string() + " has " + *ps + ", " +
                truth_file.string() + " has " + *ts + " (use --force to evaluate anyway)");
  }
  const auto rankings = make_rankings(read_scores(pred_file), read_rec_log(truth_file));
  const MapResult m = map_at_n(rankings, cfg.eval.top_n);
  write_report(m, out_path(cfg, "eval_report.tsv"), config_stamp(cfg));
  std::cout << "MAP " << m.map << " users " << m.users << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Social-network item recommendation pipeline"};
  app.require_subcommand(1);

  Common common;
  std::string checkpoint;
  std::string test_file;
  std::string predictions;
  std::string truth;
  bool force = false;

  auto* gen = app.add_subcommand("gen", "Generate a synthetic dataset");
  auto* pre = app.add_subcommand("preprocess", "Filter the log and supplement positives");
  auto* trn = app.add_subcommand("train", "Train a factorization model");
  auto* prd = app.add_subcommand("predict", "Score a test log with a checkpoint");
  auto* ens = app.add_subcommand("ensemble", "Run the two-stage ensemble");
  auto* evl = app.add_subcommand("eval", "Compute MAP of a scores file");
  for (auto* cmd : {gen, pre, trn, prd, ens, evl}) add_common(cmd, common);
  prd->add_option("--checkpoint", checkpoint, "Model file (default <out>/model.bin)");
  prd->add_option("--test", test_file, "Test log (default from config)");
  evl->add_option("--predictions", predictions, "Scores file (default <out>/scores.tsv)");
  evl->add_option("--truth", truth, "Labelled test log (default from config)");
  evl->add_flag("--force", force, "Evaluate despite a config hash mismatch");

  CLI11_PARSE(app, argc, argv);

  RunConfig cfg;
  try {
    cfg = resolve_config(common);
  } catch (const ConfigError& e) {
    std::cerr << "invalid config: " << e.what() << '\n';
    return 2;
  } catch (const Error& e) {
    std::cerr << "invalid config: " << e.what() << '\n';
    return 2;
  }

  const std::string stage = app.get_subcommands().front()->get_name();
  try {
    if (gen->parsed()) cmd_gen(cfg);
    if (pre->parsed()) cmd_preprocess(cfg);
    if (trn->parsed()) cmd_train(cfg);
    if (prd->parsed()) cmd_predict(cfg, checkpoint, test_file);
    if (ens->parsed()) cmd_ensemble(cfg);
    if (evl->parsed()) cmd_eval(cfg, predictions, truth, force);
  } catch (const std::exception& e) {
    std::cerr << "stage " << stage << " failed: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
