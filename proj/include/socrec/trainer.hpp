#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "socrec/model.hpp"
#include "socrec/session.hpp"

namespace socrec {

enum class Objective : std::uint8_t {
  pairwise,   // -log sigmoid(score(u, j) - score(u, i)) over (negative i, positive j)
  pointwise,  // 0.5 * (r - sigmoid(score))^2 over every record
};

struct TrainConfig {
  Objective objective = Objective::pairwise;
  double learning_rate = 0.001;
  double lambda = 0.01;
  std::map<std::string, double> lambda_overrides;  // keyed by table name
  int epochs = 10;
  std::uint64_t seed = 1;
  int report_every = 1;  // epochs between loss log lines; 0 silences the log

  void validate() const;
  std::array<double, kTableCount> lambdas() const;

  friend bool operator==(const TrainConfig&, const TrainConfig&) = default;
};

struct TrainingPair {
  UserId user = 0;
  ItemId negative = 0;
  ItemId positive = 0;
  Timestamp t_negative = 0;
  Timestamp t_positive = 0;

  friend bool operator==(const TrainingPair&, const TrainingPair&) = default;
};

struct PairStats {
  std::size_t pairs = 0;
  std::size_t skipped_negatives = 0;  // negatives of users with no usable positive
};

/// One pair per negative; the positive is drawn uniformly from the same
/// user's positives, excluding records of the negative's own item.
std::vector<TrainingPair> sample_pairs(const FilteredLog& filtered, std::uint64_t seed,
                                       PairStats* stats = nullptr);

double pairwise_prob(const MfmModel& model, const TrainingPair& pair);

/// Gradient rows touched by one training example, coalesced per (table, row).
class SparseGradient {
 public:
  explicit SparseGradient(const MfmModel& model) : model_(&model) {}

  /// Accumulation buffer for one parameter row, zeroed on first use.
  double* row(Table table, std::uint32_t r);
  void clear();

  struct Entry {
    Table table;
    std::uint32_t row;
    std::size_t offset;
  };
  const std::vector<Entry>& entries() const { return entries_; }
  const double* data(const Entry& e) const { return buffer_.data() + e.offset; }
  std::span<const double> buffer() const { return buffer_; }

 private:
  const MfmModel* model_;
  std::unordered_map<std::uint64_t, std::size_t> slots_;
  std::vector<Entry> entries_;
  std::vector<double> buffer_;
};

/// Adds coef * d score(q) / d theta to `grad` for every parameter in the score.
void accumulate_score_gradient(const MfmModel& model, const Query& query, double coef,
                               SparseGradient& grad);

/// Gradient of -log pairwise_prob (regularization excluded). Returns the
/// loss. Throws on a non-finite gradient.
double pair_gradient(const MfmModel& model, const TrainingPair& pair, SparseGradient& grad);

/// Gradient of 0.5 * (r - sigmoid(score))^2. Returns the loss.
double pointwise_gradient(const MfmModel& model, const RatingRecord& record, SparseGradient& grad);

/// theta -= eta * (g + lambda_theta * theta) on every touched row.
void apply_gradient(MfmModel& model, const SparseGradient& grad, double learning_rate,
                    const std::array<double, kTableCount>& lambdas);

/// One pairwise update; returns the pair's loss before the step.
double sgd_step(MfmModel& model, const TrainingPair& pair, const TrainConfig& config);

struct EpochLoss {
  int epoch = 0;
  double mean_loss = 0.0;
  std::size_t pairs = 0;  // examples processed
};

/// Sequential, deterministic SGD. Pairs are resampled and reshuffled every
/// epoch; the pointwise objective shuffles all records instead.
std::vector<EpochLoss> train(MfmModel& model, const FilteredLog& filtered,
                             const TrainConfig& config);

void write_loss_trace(const std::vector<EpochLoss>& trace, const std::filesystem::path& file,
                      const std::string& stamp = {});

}  // namespace socrec
