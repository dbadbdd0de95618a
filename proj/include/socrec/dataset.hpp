#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "socrec/types.hpp"

namespace socrec {

struct ActionCounts {
  std::uint32_t at = 0;
  std::uint32_t retweet = 0;
  std::uint32_t comment = 0;

  friend bool operator==(const ActionCounts&, const ActionCounts&) = default;
};

struct ActionEdge {
  UserId target = 0;
  ActionCounts counts;

  friend bool operator==(const ActionEdge&, const ActionEdge&) = default;
};

struct SocialGraph {
  std::map<UserId, std::vector<UserId>> follows;     // followees, sorted unique
  std::map<UserId, std::vector<ActionEdge>> actions;  // sorted by target

  const std::vector<UserId>& followees(UserId u) const;
  const std::vector<ActionEdge>& actions_of(UserId u) const;

  friend bool operator==(const SocialGraph&, const SocialGraph&) = default;
};

struct ItemInfo {
  std::string category;
  std::vector<KeywordId> keywords;  // sorted unique

  friend bool operator==(const ItemInfo&, const ItemInfo&) = default;
};

struct Dataset {
  std::vector<RatingRecord> log;  // sorted by (user, timestamp), stable
  std::map<UserId, UserProfile> profiles;
  SocialGraph graph;
  std::map<ItemId, ItemInfo> items;
  Timestamp window_begin = 0;
  Timestamp window_end = 0;

  const UserProfile& profile(UserId u) const;
  /// Items are users; an item's tags are those of its own profile.
  const std::vector<TagId>& item_tags(ItemId i) const;
  const std::vector<KeywordId>& item_keywords(ItemId i) const;
  bool is_item(ItemId i) const { return items.contains(i); }

  friend bool operator==(const Dataset&, const Dataset&) = default;
};

/// Reports malformed input with the offending file and 1-based line number.
class ParseError : public Error {
 public:
  ParseError(const std::string& file, std::size_t line, const std::string& what);
  const std::string& file() const { return file_; }
  std::size_t line() const { return line_; }

 private:
  std::string file_;
  std::size_t line_;
};

inline constexpr const char* kRecLogFile = "rec_log.tsv";
inline constexpr const char* kProfileFile = "user_profile.tsv";
inline constexpr const char* kSnsFile = "user_sns.tsv";
inline constexpr const char* kActionFile = "user_action.tsv";
inline constexpr const char* kKeywordFile = "user_keywords.tsv";
inline constexpr const char* kItemFile = "item.tsv";

/// Reads the six TSV files of a dataset directory. Lines starting with '#'
/// are comments (artifact stamps) and are skipped.
Dataset load_dataset(const std::filesystem::path& directory);

/// Writes the six TSV files. `stamp`, when non-empty, is written as a leading
/// `# ` comment line in every file.
void save_dataset(const Dataset& dataset, const std::filesystem::path& directory,
                  const std::string& stamp = {});

std::vector<RatingRecord> read_rec_log(const std::filesystem::path& file);
void write_rec_log(const std::vector<RatingRecord>& records,
                   const std::filesystem::path& file, const std::string& stamp = {});

/// Returns the `config_hash` value stamped into an artifact's first line, if any.
std::optional<std::string> read_stamp(const std::filesystem::path& file);

/// Stable sort by (user, timestamp).
void sort_log(std::vector<RatingRecord>& records);

/// Sorts the log, fills missing profiles and item entries, and recomputes the
/// time window from the log.
void finalize_dataset(Dataset& dataset);

struct DatasetStats {
  std::size_t users = 0;
  std::size_t items = 0;
  std::size_t records = 0;
  std::size_t positives = 0;
  std::size_t negatives = 0;

  friend bool operator==(const DatasetStats&, const DatasetStats&) = default;
};

DatasetStats dataset_stats(const Dataset& dataset);

}  // namespace socrec
