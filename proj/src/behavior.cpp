#include "socrec/behavior.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "tsv.hpp"

namespace socrec {

namespace {

std::uint32_t key(int bins, std::initializer_list<int> cells) {
  std::uint32_t k = 0;
  for (int c : cells) k = k * static_cast<std::uint32_t>(bins + 1) + static_cast<std::uint32_t>(c + 1);
  return k;
}

std::vector<int> unkey(int bins, std::uint32_t k, int n) {
  std::vector<int> cells(static_cast<std::size_t>(n));
  for (int p = n - 1; p >= 0; --p) {
    cells[static_cast<std::size_t>(p)] = static_cast<int>(k % static_cast<std::uint32_t>(bins + 1)) - 1;
    k /= static_cast<std::uint32_t>(bins + 1);
  }
  return cells;
}

double rate(const std::map<std::uint32_t, CellCount>& table, std::uint32_t k, double a,
            double marginal) {
  auto it = table.find(k);
  if (it == table.end() || it->second.total == 0) return marginal;
  return (static_cast<double>(it->second.positives) + a) /
         (static_cast<double>(it->second.total) + 2.0 * a);
}

}  // namespace

BinThresholds fit_bins(std::span<const double> intervals, int bins) {
  if (bins < 1) throw Error("behavior: bin count must be >= 1");
  std::vector<double> sorted(intervals.begin(), intervals.end());
  std::sort(sorted.begin(), sorted.end());
  std::vector<double> distinct = sorted;
  distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
  const auto b = static_cast<std::size_t>(bins);
  if (distinct.size() < b) {
    throw Error("behavior: only " + std::to_string(distinct.size()) +
                " distinct intervals for " + std::to_string(bins) + " bins; use fewer bins");
  }

  BinThresholds out;
  out.theta.push_back(0.0);
  std::size_t prev = 0;
  for (std::size_t k = 1; k < b; ++k) {
    const double q = sorted[k * sorted.size() / b];
    std::size_t idx = static_cast<std::size_t>(
        std::lower_bound(distinct.begin(), distinct.end(), q) - distinct.begin());
    idx = std::max(idx, std::max<std::size_t>(prev + 1, 1));
    idx = std::min(idx, distinct.size() - b + k);
    out.theta.push_back(distinct[idx]);
    prev = idx;
  }
  out.theta.push_back(std::numeric_limits<double>::infinity());
  return out;
}

int discretize(long s, long m, double interval, const BinThresholds& th) {
  if (s < 0 || s >= m) return -1;
  const auto it = std::upper_bound(th.theta.begin(), th.theta.end(), interval);
  const long k = static_cast<long>(it - th.theta.begin()) - 1;
  return static_cast<int>(std::clamp<long>(k, 0, th.bins() - 1));
}

std::vector<DurationContext> duration_contexts(std::span<const RatingRecord> log,
                                               const BinThresholds& th) {
  std::vector<DurationContext> out(log.size());
  std::vector<int> delta;
  std::size_t begin = 0;
  while (begin < log.size()) {
    std::size_t end = begin + 1;
    while (end < log.size() && log[end].user == log[begin].user) ++end;
    const long n = static_cast<long>(end - begin);
    const long m = n - 1;
    delta.assign(static_cast<std::size_t>(n), -1);
    for (long s = 0; s < m; ++s) {
      const auto dt = static_cast<double>(log[begin + static_cast<std::size_t>(s) + 1].timestamp -
                                          log[begin + static_cast<std::size_t>(s)].timestamp);
      delta[static_cast<std::size_t>(s)] = discretize(s, m, dt, th);
    }
    for (long s = 0; s < n; ++s) {
      DurationContext& ctx = out[begin + static_cast<std::size_t>(s)];
      for (long o = -2; o <= 2; ++o) {
        const long p = s + o;
        ctx[static_cast<std::size_t>(o + 2)] = (p < 0 || p >= m) ? -1 : delta[static_cast<std::size_t>(p)];
      }
    }
    begin = end;
  }
  return out;
}

std::vector<double> user_intervals(std::span<const RatingRecord> log) {
  std::vector<double> out;
  for (std::size_t k = 1; k < log.size(); ++k) {
    if (log[k].user != log[k - 1].user) continue;
    const Timestamp dt = log[k].timestamp - log[k - 1].timestamp;
    if (dt > 0) out.push_back(static_cast<double>(dt));
  }
  return out;
}

double BehaviorTables::p1(int a) const { return rate(unigram, key(bins, {a}), smoothing, marginal); }

double BehaviorTables::p2(int a, int b) const {
  return rate(bigram, key(bins, {a, b}), smoothing, marginal);
}

double BehaviorTables::p3(int a, int b, int c) const {
  return rate(trigram, key(bins, {a, b, c}), smoothing, marginal);
}

BehaviorTables estimate_tables(std::span<const DurationContext> contexts,
                               std::span<const std::uint8_t> labels, int bins, double smoothing) {
  if (contexts.empty()) throw Error("behavior: no records to estimate tables from");
  if (contexts.size() != labels.size()) throw Error("behavior: contexts and labels differ in length");
  if (smoothing < 0.0) throw Error("behavior: smoothing must be >= 0");
  BehaviorTables t;
  t.bins = bins;
  t.smoothing = smoothing;
  std::uint64_t positives = 0;
  for (std::size_t r = 0; r < contexts.size(); ++r) {
    const auto& c = contexts[r];
    for (int v : c) {
      if (v < -1 || v >= bins) throw Error("behavior: context bin out of range");
    }
    const std::uint64_t y = labels[r] ? 1 : 0;
    positives += y;
    for (auto* cell : {&t.unigram[key(bins, {c[2]})], &t.bigram[key(bins, {c[1], c[2]})],
                       &t.trigram[key(bins, {c[1], c[2], c[3]})]}) {
      cell->positives += y;
      ++cell->total;
    }
  }
  t.marginal = static_cast<double>(positives) / static_cast<double>(contexts.size());
  return t;
}

double gamma(const DurationContext& c, int r, const BehaviorTables& t) {
  switch (r) {
    case 1:
      return t.p1(c[2]);
    case 2:
      return t.p2(c[1], c[2]);
    case 3:
      return t.p3(c[1], c[2], c[3]);
    case 4:
      return t.p3(c[0], c[1], c[2]) + t.p3(c[1], c[2], c[3]);
    case 5:
      return t.p3(c[0], c[1], c[2]) + t.p3(c[1], c[2], c[3]) + t.p3(c[2], c[3], c[4]);
    default:
      throw Error("behavior: context range must be in 1..5, got " + std::to_string(r));
  }
}

void write_behavior_tables(const BehaviorTables& t, const std::filesystem::path& file,
                           const std::string& stamp) {
  auto out = tsv::open_output(file);
  out << tsv::stamp_line(stamp);
  out << "context\tpositives\ttotal\tprobability\n";
  const auto dump = [&](const std::map<std::uint32_t, CellCount>& table, int n) {
    for (const auto& [k, cell] : table) {
      const auto cells = unkey(t.bins, k, n);
      for (std::size_t p = 0; p < cells.size(); ++p) out << (p ? "," : "") << cells[p];
      double prob = 0.0;
      if (n == 1) prob = t.p1(cells[0]);
      if (n == 2) prob = t.p2(cells[0], cells[1]);
      if (n == 3) prob = t.p3(cells[0], cells[1], cells[2]);
      out << '\t' << cell.positives << '\t' << cell.total << '\t' << tsv::format_double(prob) << '\n';
    }
  };
  dump(t.unigram, 1);
  dump(t.bigram, 2);
  dump(t.trigram, 3);
  out << "*\t-\t-\t" << tsv::format_double(t.marginal) << '\n';
}

}  // namespace socrec
