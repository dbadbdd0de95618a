#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <vector>

#include "socrec/dataset.hpp"

namespace socrec {

struct FilterParams {
  double tau0 = 90.0;            // seconds
  double session_cap = 3600.0;   // intervals at or above this are not averaged
  int pi_minus = 0;
  int pi_plus = 3;
  double epsilon = 0.86;

  void validate() const;
};

struct SupplementParams {
  double xi_at = 2.0;
  double xi_retweet = 0.2;
  double xi_comment = 1.0;
  double imbalance_threshold = 0.5;  // eligible when positives < threshold * negatives

  void validate() const;
};

struct Session {
  UserId user = 0;
  std::vector<RatingRecord> records;  // time-ordered; position = within-session index
  std::optional<std::size_t> first_positive;
  std::optional<std::size_t> last_positive;
};

/// Half of (tau0 + mean of the intervals below `session_cap`). Falls back to
/// tau0 when no interval qualifies.
double session_threshold(std::span<const double> intervals, double tau0,
                         double session_cap = 3600.0);

/// Splits one user's time-ordered records wherever the gap exceeds the
/// user's threshold. Zero gaps never split.
std::vector<Session> split_sessions(std::span<const RatingRecord> user_records,
                                    const FilterParams& params);

/// Within-session indices of the records that survive the three filter
/// conditions.
std::vector<std::size_t> filter_session(const Session& session, const FilterParams& params);

struct FilterStats {
  std::size_t input_records = 0;
  std::size_t sessions = 0;
  std::size_t kept_positive = 0;
  std::size_t kept_negative = 0;
  // A record can fail several conditions; each failure is counted.
  std::size_t failed_leading = 0;   // sigma - sigma_minus > pi_minus
  std::size_t failed_trailing = 0;  // sigma_plus - sigma > pi_plus
  std::size_t failed_ratio = 0;     // positive share outside (0, epsilon]
  std::size_t supplemented = 0;

  friend bool operator==(const FilterStats&, const FilterStats&) = default;
};

struct FilteredLog {
  std::vector<RatingRecord> negatives;  // sorted by (user, timestamp)
  std::vector<RatingRecord> positives;  // sorted by (user, timestamp)
  FilterStats stats;

  /// Negatives and positives merged back into (user, timestamp) order.
  std::vector<RatingRecord> merged() const;
  /// Wraps an unfiltered log.
  static FilteredLog from_records(std::span<const RatingRecord> records);
};

/// Sessionizes and filters every user in parallel. `log` must be sorted by
/// (user, timestamp).
FilteredLog filter_dataset(std::span<const RatingRecord> log, const FilterParams& params);
/// Single-threaded reference with identical output.
FilteredLog filter_dataset_serial(std::span<const RatingRecord> log, const FilterParams& params);

/// One extra positive per eligible user: the followed item the user has
/// acted on the most (weighted counts). Ties go to the lowest item id; items
/// already positive for the user are skipped.
std::vector<RatingRecord> supplement_positives(const Dataset& dataset, const FilteredLog& filtered,
                                               const SupplementParams& params);

/// Appends supplemented positives and restores ordering.
void add_supplement(FilteredLog& filtered, std::vector<RatingRecord> extra);

void write_filter_stats(const FilterStats& stats, const std::filesystem::path& file,
                        const std::string& stamp = {});

}  // namespace socrec
