#include "socrec/types.hpp"

#include <algorithm>
#include <bit>
#include <chrono>
#include <cmath>
#include <limits>

namespace socrec {

int age_bucket(int birth_year, int last_valid_year) {
  if (birth_year < 1900 || birth_year > last_valid_year) return 29;
  if (birth_year < 1950) return 0;
  if (birth_year < 2004) {
    // ceil((x - 1950) / 2) + 1 on non-negative integers
    return (birth_year - 1950 + 1) / 2 + 1;
  }
  return 28;
}

int tweet_bucket(std::uint64_t count) {
  if (count == std::numeric_limits<std::uint64_t>::max()) return 15;
  const int log2_floor = static_cast<int>(std::bit_width(count + 1)) - 1;
  return std::min(log2_floor, kTweetBuckets - 1);
}

Timestamp second_of_day(Timestamp t) {
  Timestamp s = t % kSecondsPerDay;
  if (s < 0) s += kSecondsPerDay;
  return s;
}

int hour_bin(Timestamp t) {
  return static_cast<int>(second_of_day(t) / kSecondsPerHour) + 1;
}

double sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

int year_of(Timestamp t) {
  using namespace std::chrono;
  const sys_seconds tp{seconds{t}};
  const year_month_day ymd{floor<days>(tp)};
  return static_cast<int>(ymd.year());
}

}  // namespace socrec
