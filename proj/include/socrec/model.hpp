#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "socrec/features.hpp"

namespace socrec {

/// Switches for the optional terms of the predictor. With everything off
/// the model is plain biased matrix factorization.
struct FeatureFlags {
  bool sns = false;       // followee factors
  bool action = false;    // action-target factors
  bool day = false;       // per-item day bias and factor endpoints
  bool second = false;    // per-item time-of-day endpoints and the hour bias
  bool profile = false;   // age/gender cross biases and factors
  bool tags = false;      // shared-tag biases, tag factors
  bool keywords = false;  // shared-keyword biases, keyword factors
  bool tweetnum = false;  // tweet-count bias and factor
  bool knn = false;       // item neighborhood term

  friend bool operator==(const FeatureFlags&, const FeatureFlags&) = default;

  static FeatureFlags all();
};

struct MfmConfig {
  std::size_t latent_dim = 40;
  FeatureFlags flags;
  double alpha_follow = -0.4;
  double alpha_action = -0.5;
  std::size_t knn_k = 20;
  double rho = 0.6;
  bool self_follow = true;
  double init_scale = 0.01;  // latent entries start in +-init_scale / sqrt(d)
  std::uint64_t seed = 1;
  // Interpolation windows. day_begin == day_end == 0 means "use the dataset window".
  Timestamp day_begin = 0;
  Timestamp day_end = 0;
  Timestamp sec_begin = 0;
  Timestamp sec_end = kSecondsPerDay;

  void validate() const;
  friend bool operator==(const MfmConfig&, const MfmConfig&) = default;
};

enum class Table : std::uint8_t {
  b_user,
  b_item,
  b_hour,
  b_day,              // item x {minus, plus}
  b_sec,              // item x {minus, plus}
  b_user_item_gender, // user x gender of item
  b_user_item_age,    // user x age of item
  b_gender_item,      // item x gender of user
  b_age_item,         // item x age of user
  b_keyword,
  b_tag,
  b_tweet,
  q,
  p,
  z_day_minus,
  z_day_plus,
  z_sec_minus,
  z_sec_plus,
  y_age,
  y_age_gender,
  y_tweet,
  y_follow,
  y_action,
  y_keyword,
  y_tag,
  knn_w,              // item x neighbor slot
  knn_c,              // item x neighbor slot
  count
};

inline constexpr std::size_t kTableCount = static_cast<std::size_t>(Table::count);

std::string_view table_name(Table t);

struct ParamTable {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> values;

  double* row(std::size_t r) { return values.data() + r * cols; }
  const double* row(std::size_t r) const { return values.data() + r * cols; }
  bool empty() const { return values.empty(); }

  friend bool operator==(const ParamTable&, const ParamTable&) = default;
};

/// Time span of the ratings a model was fitted on.
struct Provenance {
  Timestamp first = 0;
  Timestamp last = 0;
  std::uint64_t records = 0;

  friend bool operator==(const Provenance&, const Provenance&) = default;
};

struct MfmModel {
  MfmConfig config;
  FeatureIndex index;
  double mu = 0.0;
  std::array<ParamTable, kTableCount> tables;
  Provenance provenance;

  ParamTable& table(Table t) { return tables[static_cast<std::size_t>(t)]; }
  const ParamTable& table(Table t) const { return tables[static_cast<std::size_t>(t)]; }
  std::size_t dim() const { return config.latent_dim; }

  friend bool operator==(const MfmModel&, const MfmModel&) = default;
};

/// Builds the index, allocates the tables of the enabled terms and seeds
/// the latent entries. Biases and neighborhood weights start at zero.
MfmModel make_model(const Dataset& dataset, std::span<const RatingRecord> training,
                    const MfmConfig& config);

/// (Re)initializes every allocated table from config.seed. Each table draws
/// from its own stream, so enabling a term leaves the others unchanged.
void initialize_parameters(MfmModel& model);

/// A prediction request with ids already mapped to rows; an absent row
/// means the entity is unknown to the model.
struct Query {
  std::optional<std::uint32_t> user;
  std::optional<std::uint32_t> item;
  Timestamp t = 0;
};

Query resolve(const MfmModel& model, UserId user, ItemId item, Timestamp t);

/// Linear interpolation weights; `minus` multiplies the `_minus` endpoint.
/// Timestamps outside the window are clamped.
struct TimeWeights {
  double day_minus = 0.0;
  double day_plus = 0.0;
  double sec_minus = 0.0;
  double sec_plus = 0.0;
  int hour = 1;
};

TimeWeights time_weights(const MfmConfig& config, Timestamp t);

double bias_term(const MfmModel& model, const Query& query);
void user_vector(const MfmModel& model, std::optional<std::uint32_t> user, std::span<double> out);
void item_vector(const MfmModel& model, std::optional<std::uint32_t> item, Timestamp t,
                 std::span<double> out);
double knn_term(const MfmModel& model, const Query& query);

/// Raw score: bias terms + neighborhood term + item vector . user vector.
double predict(const MfmModel& model, const Query& query);
double predict(const MfmModel& model, UserId user, ItemId item, Timestamp t);

/// Sigmoid of mu + b_u + b_i + q_i . p_u.
double baseline_predict(const MfmModel& model, UserId user, ItemId item);

/// Scores every record, parallel over records.
std::vector<double> score_records(const MfmModel& model, std::span<const RatingRecord> records);
std::vector<double> score_records_serial(const MfmModel& model,
                                         std::span<const RatingRecord> records);

/// Versioned little-endian binary checkpoint; see README for the layout.
void save_model(const MfmModel& model, const std::filesystem::path& file,
                const std::string& stamp = {});
MfmModel load_model(const std::filesystem::path& file, std::string* stamp = nullptr);

}  // namespace socrec
