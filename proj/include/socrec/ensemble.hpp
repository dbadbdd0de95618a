#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "socrec/behavior.hpp"
#include "socrec/model.hpp"

namespace socrec {

struct TimeSplit {
  std::vector<RatingRecord> first;   // t <= boundary
  std::vector<RatingRecord> second;  // t > boundary
  Timestamp boundary = 0;
};

/// Splits at window_begin + boundary_days days; order within each part is kept.
TimeSplit split_by_time(std::span<const RatingRecord> records, Timestamp window_begin,
                        int boundary_days = 23);

/// Row-major feature matrix: column 0 is the raw model score, column 1 (when
/// gamma_range > 0) is the duration factor of that range.
struct FeatureMatrix {
  std::size_t cols = 0;
  std::vector<double> values;
  std::vector<std::uint8_t> labels;

  std::size_t rows() const { return cols == 0 ? 0 : values.size() / cols; }
  const double* row(std::size_t r) const { return values.data() + r * cols; }
};

/// `contexts` align with `records`. With `check_leakage`, a model fitted on
/// ratings at or after the earliest record is rejected.
FeatureMatrix assemble_features(std::span<const RatingRecord> records,
                                std::span<const DurationContext> contexts, const MfmModel& model,
                                const BehaviorTables* tables, int gamma_range,
                                bool check_leakage = true);
FeatureMatrix assemble_features_serial(std::span<const RatingRecord> records,
                                       std::span<const DurationContext> contexts,
                                       const MfmModel& model, const BehaviorTables* tables,
                                       int gamma_range, bool check_leakage = true);

struct LogisticConfig {
  double tolerance = 1e-6;  // on the gradient norm
  int max_iterations = 10000;
  double step = 0.0;        // 0: derived from the column count

  void validate() const;
};

struct EnsembleModel {
  std::vector<double> weights;  // W0 (intercept), W1..WM
  int iterations = 0;
  double gradient_norm = 0.0;

  friend bool operator==(const EnsembleModel&, const EnsembleModel&) = default;
};

/// Full-batch gradient descent on the mean log-loss. Features are
/// standardized internally; the returned weights act on raw features.
EnsembleModel fit_logistic(const FeatureMatrix& features, const LogisticConfig& config = {});

/// Mean log-loss gradient, summed in fixed-size chunks so that the parallel
/// and serial versions agree bit for bit. `x` is row-major with `cols`
/// columns, `w` has cols + 1 entries.
void logistic_gradient(std::span<const double> x, std::size_t cols,
                       std::span<const std::uint8_t> labels, std::span<const double> w,
                       std::span<double> grad);
void logistic_gradient_serial(std::span<const double> x, std::size_t cols,
                              std::span<const std::uint8_t> labels, std::span<const double> w,
                              std::span<double> grad);

double blend(const EnsembleModel& model, std::span<const double> row);
std::vector<double> blend_all(const EnsembleModel& model, const FeatureMatrix& features);

void write_ensemble_model(const EnsembleModel& model, const std::filesystem::path& file,
                          const std::string& stamp = {});

}  // namespace socrec
