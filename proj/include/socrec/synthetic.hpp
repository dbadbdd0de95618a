#pragma once

#include <cstdint>
#include <vector>

#include "socrec/dataset.hpp"

namespace socrec {

struct SyntheticConfig {
  std::size_t n_users = 10000;
  std::size_t n_items = 500;
  std::size_t n_records = 100000;  // training-window records
  std::size_t latent_dim = 8;
  double positive_rate = 0.07;     // over training-window records
  double noise_level = 0.1;
  std::uint64_t seed = 1;

  // Time layout: training window followed by a held-out test window.
  Timestamp start_time = 1318348785;
  int train_days = 30;
  int test_days = 7;

  double cold_user_fraction = 0.3;   // users active only in the test window
  double attention_rate = 0.5;       // share of sessions in which the user looks
  double exposure_sharpness = 0.3;   // how strongly exposure follows affinity
  double mean_session_length = 5.0;
  double mean_follows = 8.0;
  double activity_spread = 1.5;      // log-normal sd of per-user session counts
  double user_bias_spread = 2.0;     // sd of per-user follow propensity
  double idle_trending_share = 0.8;  // inattentive records drawn from the weekly trending list
  bool session_choice = true;        // attentive sessions follow at most one item, by softmax

  void validate() const;
};

/// Generating parameters kept for oracle tests.
struct PlantedTruth {
  std::size_t latent_dim = 0;
  std::vector<double> user_factors;  // n_users x latent_dim, row = user id - 1
  std::vector<double> item_factors;  // n_items x latent_dim, row = item id - 1
  std::vector<double> item_bias;
  std::vector<double> user_bias;
  std::vector<int> item_cluster;
  std::vector<int> user_cluster;
  double label_offset = 0.0;
  std::vector<std::uint8_t> train_attentive;  // one flag per dataset.log record
  std::vector<std::uint8_t> test_attentive;   // one flag per test record

  double affinity(UserId u, ItemId i) const;
};

struct SyntheticData {
  Dataset dataset;                  // training window only
  std::vector<RatingRecord> test;   // labelled test-window records
  PlantedTruth truth;
};

/// Users get ids 1..n_users; items are users 1..n_items. Records arrive in
/// per-user sessions; inattentive sessions are all negative, have short dwell
/// times and mostly show the week's trending accounts. Attentive sessions
/// carry labels drawn from the planted affinity: with session_choice the
/// session follows at most one shown item, otherwise each record is an
/// independent draw. Deterministic for a given config.
SyntheticData generate_synthetic(const SyntheticConfig& config);

}  // namespace socrec
