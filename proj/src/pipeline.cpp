#include "socrec/pipeline.hpp"

#include <algorithm>
#include <numeric>

namespace socrec {

void PreprocessConfig::validate() const {
  filter_params.validate();
  supplement_params.validate();
}

FilteredLog preprocess(const Dataset& dataset, std::span<const RatingRecord> log,
                       const PreprocessConfig& config) {
  config.validate();
  FilteredLog out = config.filter ? filter_dataset(log, config.filter_params)
                                  : FilteredLog::from_records(log);
  if (config.supplement) add_supplement(out, supplement_positives(dataset, out, config.supplement_params));
  return out;
}

TrainedModel fit_model(const Dataset& dataset, const FilteredLog& filtered,
                       const MfmConfig& model_config, const TrainConfig& train_config) {
  train_config.validate();
  TrainedModel out;
  out.model = make_model(dataset, filtered.merged(), model_config);
  out.trace = train(out.model, filtered, train_config);
  return out;
}

double evaluate_scores(std::span<const RatingRecord> test, std::span<const double> scores,
                       std::size_t n) {
  const auto scored = to_scored(test, scores);
  return map_at_n(make_rankings(scored, test), n).map;
}

void EnsembleConfig::validate() const {
  if (boundary_days < 1) throw Error("ensemble: boundary_days must be >= 1");
  if (gamma_range < 0 || gamma_range > 5) throw Error("ensemble: gamma_range must be in 0..5");
  if (bins < 1) throw Error("ensemble: bins must be >= 1");
  if (smoothing < 0.0) throw Error("ensemble: smoothing must be >= 0");
  logistic.validate();
}

namespace {

// Contexts of `records` in their given order, computed on a (user, time) sorted copy.
std::vector<DurationContext> contexts_in_order(std::span<const RatingRecord> records,
                                               const BinThresholds& thresholds) {
  std::vector<std::size_t> order(records.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (records[a].user != records[b].user) return records[a].user < records[b].user;
    return records[a].timestamp < records[b].timestamp;
  });
  std::vector<RatingRecord> sorted;
  sorted.reserve(records.size());
  for (std::size_t k : order) sorted.push_back(records[k]);
  const auto ctx = duration_contexts(sorted, thresholds);
  std::vector<DurationContext> out(records.size());
  for (std::size_t k = 0; k < order.size(); ++k) out[order[k]] = ctx[k];
  return out;
}

}  // namespace

TwoStageResult run_two_stage(const Dataset& dataset, std::span<const RatingRecord> test,
                             const PreprocessConfig& preprocess_config,
                             const MfmConfig& model_config, const TrainConfig& train_config,
                             const EnsembleConfig& ensemble_config, std::vector<int> gamma_ranges) {
  ensemble_config.validate();
  if (dataset.log.empty()) throw Error("ensemble: empty training log");
  if (gamma_ranges.empty()) gamma_ranges.push_back(ensemble_config.gamma_range);

  // Both level-1 fits share one interpolation window and one index, hence
  // one initialization.
  MfmConfig mcfg = model_config;
  if (mcfg.day_begin == 0 && mcfg.day_end == 0) {
    mcfg.day_begin = dataset.window_begin;
    mcfg.day_end = dataset.window_end;
  }

  TwoStageResult out;
  const TimeSplit split = split_by_time(dataset.log, dataset.window_begin, ensemble_config.boundary_days);
  if (split.second.empty()) throw Error("ensemble: no training records after the split boundary");

  {
    Dataset early = dataset;
    early.log = split.first;
    early.window_end = std::min(dataset.window_end, split.boundary);
    const FilteredLog filtered = preprocess(early, early.log, preprocess_config);
    out.stage1 = fit_model(dataset, filtered, mcfg, train_config);
  }

  // Behavior tables follow the same two stages as the factorization model:
  // estimated on the first part to blend the second, then on everything.
  out.thresholds = fit_bins(user_intervals(dataset.log), ensemble_config.bins);
  const auto all_ctx = duration_contexts(dataset.log, out.thresholds);
  std::vector<DurationContext> early_ctx;
  std::vector<std::uint8_t> early_labels;
  std::vector<DurationContext> late_ctx;
  std::vector<std::uint8_t> all_labels;
  for (std::size_t k = 0; k < dataset.log.size(); ++k) {
    all_labels.push_back(dataset.log[k].result);
    if (dataset.log[k].timestamp <= split.boundary) {
      early_ctx.push_back(all_ctx[k]);
      early_labels.push_back(dataset.log[k].result);
    } else {
      late_ctx.push_back(all_ctx[k]);
    }
  }
  out.stage1_tables =
      estimate_tables(early_ctx, early_labels, ensemble_config.bins, ensemble_config.smoothing);
  out.tables = estimate_tables(all_ctx, all_labels, ensemble_config.bins, ensemble_config.smoothing);

  std::vector<EnsembleModel> blends;
  for (int r : gamma_ranges) {
    const FeatureMatrix f =
        assemble_features(split.second, late_ctx, out.stage1.model, &out.stage1_tables, r);
    blends.push_back(fit_logistic(f, ensemble_config.logistic));
  }

  const FilteredLog full = preprocess(dataset, dataset.log, preprocess_config);
  out.final_model = fit_model(dataset, full, mcfg, train_config);

  const auto test_ctx = contexts_in_order(test, out.thresholds);
  out.level1_test_scores = score_records(out.final_model.model, test);
  for (std::size_t k = 0; k < gamma_ranges.size(); ++k) {
    const FeatureMatrix f =
        assemble_features(test, test_ctx, out.final_model.model, &out.tables, gamma_ranges[k]);
    out.ranges.push_back({gamma_ranges[k], blends[k], blend_all(blends[k], f)});
  }
  return out;
}

}  // namespace socrec
