#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace socrec {

// Items are themselves users of the network, so both share one id space.
using UserId = std::uint32_t;
using ItemId = UserId;
using KeywordId = std::uint32_t;
using TagId = std::uint32_t;
using Timestamp = std::int64_t;

inline constexpr Timestamp kSecondsPerDay = 86400;
inline constexpr Timestamp kSecondsPerHour = 3600;

inline constexpr int kAgeBuckets = 30;
inline constexpr int kTweetBuckets = 16;
inline constexpr int kHourBins = 24;
inline constexpr int kGenders = 4;

// Last birth year treated as plausible when no dataset-specific bound is given.
inline constexpr int kDefaultLastBirthYear = 2012;

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class Gender : std::uint8_t { unknown = 0, male = 1, female = 2, other = 3 };

struct RatingRecord {
  UserId user = 0;
  ItemId item = 0;
  std::uint8_t result = 0;
  Timestamp timestamp = 0;

  friend bool operator==(const RatingRecord&, const RatingRecord&) = default;
};

struct KeywordWeight {
  KeywordId keyword = 0;
  double weight = 0.0;

  friend bool operator==(const KeywordWeight&, const KeywordWeight&) = default;
};

struct UserProfile {
  int birth_year = 0;
  Gender gender = Gender::unknown;
  std::uint64_t tweet_count = 0;
  std::vector<TagId> tags;               // sorted, unique
  std::vector<KeywordWeight> keywords;   // sorted by keyword id

  friend bool operator==(const UserProfile&, const UserProfile&) = default;
};

/// Age bucket in [0, 29]. Years before 1950 share bucket 0, 1950..2003 are
/// binned in two-year steps, later plausible years collapse to 28, and
/// anything outside [1900, last_valid_year] (including the 0 sentinel) is 29.
int age_bucket(int birth_year, int last_valid_year = kDefaultLastBirthYear);

/// floor(log2(1 + count)) clamped to 15.
int tweet_bucket(std::uint64_t count);

/// UTC hour of day plus one, in [1, 24].
int hour_bin(Timestamp t);

/// Seconds since UTC midnight, in [0, 86400).
Timestamp second_of_day(Timestamp t);

double sigmoid(double x);

/// UTC calendar year of a unix timestamp.
int year_of(Timestamp t);

}  // namespace socrec
