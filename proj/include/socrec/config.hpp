#pragma once

#include <filesystem>
#include <string>

#include <json.hpp>

#include "socrec/pipeline.hpp"
#include "socrec/synthetic.hpp"

namespace socrec {

/// Invalid configuration; `field` is the JSON path of the offending entry.
class ConfigError : public Error {
 public:
  ConfigError(std::string field, const std::string& what)
      : Error(field + ": " + what), field_(std::move(field)) {}
  const std::string& field() const { return field_; }

 private:
  std::string field_;
};

struct EvalConfig {
  std::size_t top_n = 3;
};

struct RunConfig {
  std::uint64_t seed = 1;
  std::string out_dir = "out";
  std::string data_dir;   // empty: <out_dir>/data
  std::string test_file;  // empty: <data_dir>/rec_log_test.tsv
  SyntheticConfig synthetic;
  PreprocessConfig preprocess;
  MfmConfig model;
  TrainConfig train;
  EnsembleConfig ensemble;
  EvalConfig eval;

  /// Copies the top-level seed into every seeded section.
  void apply_seed(std::uint64_t new_seed);
  void validate() const;

  std::filesystem::path data_path() const;
  std::filesystem::path test_path() const;
};

nlohmann::json to_json(const MfmConfig& config);
MfmConfig mfm_config_from_json(const nlohmann::json& j, const std::string& where = "model");

nlohmann::json to_json(const RunConfig& config);
/// Unknown keys and wrong types are errors.
RunConfig run_config_from_json(const nlohmann::json& j);
RunConfig load_config(const std::filesystem::path& file);

/// 64-bit FNV-1a of the canonical JSON, without the path fields, as 16 hex
/// digits.
std::string config_hash(const RunConfig& config);
/// `config_hash=<hash>`, the first-line stamp of every artifact.
std::string config_stamp(const RunConfig& config);

/// Rows of the model ladder: 1 is pointwise plain factorization on the raw
/// log, 2 switches to pairwise training, 3 filters the log, 4..11 add the
/// feature groups in order, 12 enlarges the model, 13 adds neighbors and 14
/// supplements positives.
void apply_ladder_row(RunConfig& config, int row);
inline constexpr int kLadderRows = 14;

}  // namespace socrec
