#include "socrec/session.hpp"

#include <algorithm>
#include <map>

#include "tsv.hpp"

namespace socrec {

namespace {

bool by_user_time(const RatingRecord& a, const RatingRecord& b) {
  if (a.user != b.user) return a.user < b.user;
  return a.timestamp < b.timestamp;
}

struct UserRange {
  std::size_t begin = 0;
  std::size_t end = 0;
};

std::vector<UserRange> user_ranges(std::span<const RatingRecord> log) {
  std::vector<UserRange> out;
  std::size_t start = 0;
  for (std::size_t k = 1; k <= log.size(); ++k) {
    if (k == log.size() || log[k].user != log[start].user) {
      out.push_back({start, k});
      start = k;
    }
  }
  return out;
}

struct UserFilterResult {
  std::vector<RatingRecord> negatives;
  std::vector<RatingRecord> positives;
  FilterStats stats;
};

void accumulate(FilterStats& into, const FilterStats& s) {
  into.input_records += s.input_records;
  into.sessions += s.sessions;
  into.kept_positive += s.kept_positive;
  into.kept_negative += s.kept_negative;
  into.failed_leading += s.failed_leading;
  into.failed_trailing += s.failed_trailing;
  into.failed_ratio += s.failed_ratio;
  into.supplemented += s.supplemented;
}

UserFilterResult filter_user(std::span<const RatingRecord> records, const FilterParams& params) {
  UserFilterResult out;
  out.stats.input_records = records.size();
  for (const Session& session : split_sessions(records, params)) {
    ++out.stats.sessions;
    const std::size_t n = session.records.size();
    std::size_t positives = 0;
    for (const auto& r : session.records) positives += r.result;
    const double ratio = static_cast<double>(positives) / static_cast<double>(n);
    const bool ratio_ok = positives > 0 && ratio <= params.epsilon;
    for (std::size_t s = 0; s < n; ++s) {
      if (!ratio_ok) ++out.stats.failed_ratio;
      if (positives > 0) {
        if (static_cast<long>(s) - static_cast<long>(*session.first_positive) > params.pi_minus) {
          ++out.stats.failed_leading;
        }
        if (static_cast<long>(*session.last_positive) - static_cast<long>(s) > params.pi_plus) {
          ++out.stats.failed_trailing;
        }
      }
    }
    for (std::size_t idx : filter_session(session, params)) {
      const auto& r = session.records[idx];
      if (r.result) {
        out.positives.push_back(r);
        ++out.stats.kept_positive;
      } else {
        out.negatives.push_back(r);
        ++out.stats.kept_negative;
      }
    }
  }
  return out;
}

FilteredLog merge_results(std::vector<UserFilterResult>& results) {
  FilteredLog out;
  for (auto& r : results) {
    out.negatives.insert(out.negatives.end(), r.negatives.begin(), r.negatives.end());
    out.positives.insert(out.positives.end(), r.positives.begin(), r.positives.end());
    accumulate(out.stats, r.stats);
  }
  return out;
}

}  // namespace

void FilterParams::validate() const {
  if (!(tau0 > 0)) throw Error("filter: tau0 must be > 0");
  if (!(epsilon > 0 && epsilon <= 1)) throw Error("filter: epsilon must lie in (0, 1]");
  if (pi_minus < 0 || pi_plus < 0) throw Error("filter: pi_minus and pi_plus must be >= 0");
  if (!(session_cap > 0)) throw Error("filter: session_cap must be > 0");
}

void SupplementParams::validate() const {
  if (xi_at < 0 || xi_retweet < 0 || xi_comment < 0) {
    throw Error("supplement: action weights must be >= 0");
  }
  if (imbalance_threshold < 0) throw Error("supplement: imbalance_threshold must be >= 0");
}

double session_threshold(std::span<const double> intervals, double tau0, double session_cap) {
  double sum = 0.0;
  std::size_t count = 0;
  for (double dt : intervals) {
    if (dt < session_cap) {
      sum += dt;
      ++count;
    }
  }
  if (count == 0) return tau0;
  return 0.5 * (tau0 + sum / static_cast<double>(count));
}

std::vector<Session> split_sessions(std::span<const RatingRecord> records,
                                    const FilterParams& params) {
  std::vector<Session> sessions;
  if (records.empty()) return sessions;

  std::vector<double> intervals;
  intervals.reserve(records.size());
  for (std::size_t s = 0; s + 1 < records.size(); ++s) {
    const double dt = static_cast<double>(records[s + 1].timestamp - records[s].timestamp);
    if (dt > 0) intervals.push_back(dt);
  }
  const double tau = session_threshold(intervals, params.tau0, params.session_cap);

  Session current;
  current.user = records.front().user;
  for (std::size_t s = 0; s < records.size(); ++s) {
    if (s > 0) {
      const double dt = static_cast<double>(records[s].timestamp - records[s - 1].timestamp);
      if (dt > tau) {
        sessions.push_back(std::move(current));
        current = Session{};
        current.user = records[s].user;
      }
    }
    current.records.push_back(records[s]);
  }
  sessions.push_back(std::move(current));

  for (auto& session : sessions) {
    for (std::size_t k = 0; k < session.records.size(); ++k) {
      if (!session.records[k].result) continue;
      if (!session.first_positive) session.first_positive = k;
      session.last_positive = k;
    }
  }
  return sessions;
}

std::vector<std::size_t> filter_session(const Session& session, const FilterParams& params) {
  std::vector<std::size_t> kept;
  if (!session.first_positive || session.records.empty()) return kept;
  const std::size_t n = session.records.size();
  std::size_t positives = 0;
  for (const auto& r : session.records) positives += r.result;
  const double ratio = static_cast<double>(positives) / static_cast<double>(n);
  if (!(ratio > 0.0 && ratio <= params.epsilon)) return kept;

  const long first = static_cast<long>(*session.first_positive);
  const long last = static_cast<long>(*session.last_positive);
  for (std::size_t s = 0; s < n; ++s) {
    const long sigma = static_cast<long>(s);
    if (sigma - first <= params.pi_minus && last - sigma <= params.pi_plus) kept.push_back(s);
  }
  return kept;
}

std::vector<RatingRecord> FilteredLog::merged() const {
  std::vector<RatingRecord> out;
  out.reserve(negatives.size() + positives.size());
  std::merge(negatives.begin(), negatives.end(), positives.begin(), positives.end(),
             std::back_inserter(out), by_user_time);
  return out;
}

FilteredLog FilteredLog::from_records(std::span<const RatingRecord> records) {
  FilteredLog out;
  for (const auto& r : records) (r.result ? out.positives : out.negatives).push_back(r);
  std::stable_sort(out.negatives.begin(), out.negatives.end(), by_user_time);
  std::stable_sort(out.positives.begin(), out.positives.end(), by_user_time);
  out.stats.input_records = records.size();
  out.stats.kept_negative = out.negatives.size();
  out.stats.kept_positive = out.positives.size();
  return out;
}

FilteredLog filter_dataset(std::span<const RatingRecord> log, const FilterParams& params) {
  params.validate();
  const auto ranges = user_ranges(log);
  std::vector<UserFilterResult> results(ranges.size());
  const long n = static_cast<long>(ranges.size());
#pragma omp parallel for schedule(dynamic, 64)
  for (long k = 0; k < n; ++k) {
    const auto& r = ranges[static_cast<std::size_t>(k)];
    results[static_cast<std::size_t>(k)] = filter_user(log.subspan(r.begin, r.end - r.begin), params);
  }
  return merge_results(results);
}

FilteredLog filter_dataset_serial(std::span<const RatingRecord> log, const FilterParams& params) {
  params.validate();
  std::vector<UserFilterResult> results;
  for (const auto& r : user_ranges(log)) {
    results.push_back(filter_user(log.subspan(r.begin, r.end - r.begin), params));
  }
  return merge_results(results);
}

std::vector<RatingRecord> supplement_positives(const Dataset& dataset, const FilteredLog& filtered,
                                               const SupplementParams& params) {
  params.validate();
  std::map<UserId, std::size_t> neg_count;
  std::map<UserId, std::vector<ItemId>> positive_items;
  for (const auto& r : filtered.negatives) ++neg_count[r.user];
  for (const auto& r : filtered.positives) positive_items[r.user].push_back(r.item);

  std::map<UserId, Timestamp> last_seen;
  for (const auto& r : dataset.log) {
    auto [it, inserted] = last_seen.try_emplace(r.user, r.timestamp);
    if (!inserted) it->second = std::max(it->second, r.timestamp);
  }

  std::vector<RatingRecord> added;
  for (const auto& [user, negatives] : neg_count) {
    auto pit = positive_items.find(user);
    const std::size_t positives = pit == positive_items.end() ? 0 : pit->second.size();
    if (!(static_cast<double>(positives) <
          params.imbalance_threshold * static_cast<double>(negatives))) {
      continue;
    }
    const auto& follows = dataset.graph.followees(user);
    std::optional<ItemId> best;
    double best_score = 0.0;
    for (const auto& edge : dataset.graph.actions_of(user)) {
      const ItemId candidate = edge.target;
      if (candidate == user || !dataset.is_item(candidate)) continue;
      if (!std::binary_search(follows.begin(), follows.end(), candidate)) continue;
      if (pit != positive_items.end() &&
          std::find(pit->second.begin(), pit->second.end(), candidate) != pit->second.end()) {
        continue;
      }
      const double score = params.xi_at * edge.counts.at + params.xi_retweet * edge.counts.retweet +
                           params.xi_comment * edge.counts.comment;
      // Edges are sorted by target, so strict > keeps the lowest id on ties.
      if (!best || score > best_score) {
        best = candidate;
        best_score = score;
      }
    }
    if (!best) continue;
    RatingRecord r;
    r.user = user;
    r.item = *best;
    r.result = 1;
    auto seen = last_seen.find(user);
    const Timestamp last = seen == last_seen.end() ? dataset.window_end : seen->second;
    r.timestamp = dataset.log.empty() ? last + 1 : std::min(last + 1, dataset.window_end);
    added.push_back(r);
  }
  return added;
}

void add_supplement(FilteredLog& filtered, std::vector<RatingRecord> extra) {
  filtered.stats.supplemented += extra.size();
  filtered.positives.insert(filtered.positives.end(), extra.begin(), extra.end());
  std::stable_sort(filtered.positives.begin(), filtered.positives.end(), by_user_time);
}

void write_filter_stats(const FilterStats& s, const std::filesystem::path& file,
                        const std::string& stamp) {
  auto out = tsv::open_output(file);
  out << tsv::stamp_line(stamp);
  out << "input_records\t" << s.input_records << '\n'
      << "sessions\t" << s.sessions << '\n'
      << "kept_positive\t" << s.kept_positive << '\n'
      << "kept_negative\t" << s.kept_negative << '\n'
      << "dropped\t" << (s.input_records - s.kept_positive - s.kept_negative) << '\n'
      << "failed_leading\t" << s.failed_leading << '\n'
      << "failed_trailing\t" << s.failed_trailing << '\n'
      << "failed_ratio\t" << s.failed_ratio << '\n'
      << "supplemented\t" << s.supplemented << '\n';
}

}  // namespace socrec
