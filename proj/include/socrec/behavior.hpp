#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "socrec/types.hpp"

namespace socrec {

/// theta[0] = 0 < theta[1] < ... < theta[B] = +inf; bin k is [theta[k], theta[k+1]).
struct BinThresholds {
  std::vector<double> theta;

  int bins() const { return static_cast<int>(theta.size()) - 1; }
  friend bool operator==(const BinThresholds&, const BinThresholds&) = default;
};

/// Equal-frequency thresholds. Duplicate quantiles are pushed up to the next
/// unused distinct value so that every bin boundary stays strictly increasing.
BinThresholds fit_bins(std::span<const double> intervals, int bins = 16);

/// Bin of the interval at position s of a sequence with m intervals; -1 when
/// s is outside [0, m).
int discretize(long s, long m, double interval, const BinThresholds& thresholds);

/// Bins at offsets -2..+2 around a record.
using DurationContext = std::array<int, 5>;

/// One context per record of `log`, which must be sorted by (user, time).
/// Record s of a user lasts until the user's next record; the last one has
/// no duration.
std::vector<DurationContext> duration_contexts(std::span<const RatingRecord> log,
                                               const BinThresholds& thresholds);

/// Positive gaps between consecutive records of each user.
std::vector<double> user_intervals(std::span<const RatingRecord> log);

struct CellCount {
  std::uint64_t positives = 0;
  std::uint64_t total = 0;

  friend bool operator==(const CellCount&, const CellCount&) = default;
};

/// Smoothed positive rates over contexts of one to three bins. Keys are the
/// bin tuples shifted by one so that -1 maps to 0.
struct BehaviorTables {
  int bins = 0;
  double smoothing = 1.0;
  double marginal = 0.0;  // overall positive rate
  std::map<std::uint32_t, CellCount> unigram;
  std::map<std::uint32_t, CellCount> bigram;
  std::map<std::uint32_t, CellCount> trigram;

  double p1(int a) const;
  double p2(int a, int b) const;
  double p3(int a, int b, int c) const;

  friend bool operator==(const BehaviorTables&, const BehaviorTables&) = default;
};

BehaviorTables estimate_tables(std::span<const DurationContext> contexts,
                               std::span<const std::uint8_t> labels, int bins,
                               double smoothing = 1.0);

/// Duration factor over a context window of r in [1, 5].
double gamma(const DurationContext& context, int r, const BehaviorTables& tables);

void write_behavior_tables(const BehaviorTables& tables, const std::filesystem::path& file,
                           const std::string& stamp = {});

}  // namespace socrec
