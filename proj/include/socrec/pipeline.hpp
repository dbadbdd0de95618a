#pragma once

#include <span>
#include <vector>

#include "socrec/behavior.hpp"
#include "socrec/ensemble.hpp"
#include "socrec/evaluation.hpp"
#include "socrec/model.hpp"
#include "socrec/session.hpp"
#include "socrec/trainer.hpp"

namespace socrec {

struct PreprocessConfig {
  bool filter = true;
  bool supplement = false;
  FilterParams filter_params;
  SupplementParams supplement_params;

  void validate() const;
};

/// Filters the log (or passes it through) and adds supplemented positives.
FilteredLog preprocess(const Dataset& dataset, std::span<const RatingRecord> log,
                       const PreprocessConfig& config);

struct TrainedModel {
  MfmModel model;
  std::vector<EpochLoss> trace;
};

/// Builds a model over the dataset's side information with `filtered` as
/// the rating history and trains it.
TrainedModel fit_model(const Dataset& dataset, const FilteredLog& filtered,
                       const MfmConfig& model_config, const TrainConfig& train_config);

/// MAP@n of raw model scores on labelled records.
double evaluate_scores(std::span<const RatingRecord> test, std::span<const double> scores,
                       std::size_t n = 3);

struct EnsembleConfig {
  int boundary_days = 23;
  int gamma_range = 5;  // 0: model score only
  int bins = 16;
  double smoothing = 1.0;
  LogisticConfig logistic;

  void validate() const;
};

struct RangeResult {
  int gamma_range = 0;
  EnsembleModel blend;
  std::vector<double> test_scores;
};

struct TwoStageResult {
  TrainedModel stage1;       // fitted on the first part of the training window
  TrainedModel final_model;  // refitted on everything with the same seed
  BinThresholds thresholds;
  BehaviorTables stage1_tables;  // estimated on the first part
  BehaviorTables tables;         // estimated on the whole training log
  std::vector<double> level1_test_scores;
  std::vector<RangeResult> ranges;  // one blend per requested gamma range
};

/// Two-stage fit: level-1 model and behavior tables on the early part,
/// logistic blend on the late part, then both refit on the whole window and
/// the blend applied to the test records. `gamma_ranges` lists the ladder rows to blend
/// (default: config.gamma_range).
TwoStageResult run_two_stage(const Dataset& dataset, std::span<const RatingRecord> test,
                             const PreprocessConfig& preprocess_config,
                             const MfmConfig& model_config, const TrainConfig& train_config,
                             const EnsembleConfig& ensemble_config,
                             std::vector<int> gamma_ranges = {});

}  // namespace socrec
