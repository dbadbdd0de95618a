#include "socrec/evaluation.hpp"

#include <algorithm>
#include <map>

#include "tsv.hpp"

namespace socrec {

double average_precision(const UserRanking& r, std::size_t n) {
  if (n < 1) throw Error("eval: N must be >= 1");
  if (r.ranked.empty() || r.relevant.empty()) return 0.0;
  double sum = 0.0;
  std::size_t hits = 0;
  const std::size_t depth = std::min(n, r.ranked.size());
  for (std::size_t k = 0; k < depth; ++k) {
    if (std::binary_search(r.relevant.begin(), r.relevant.end(), r.ranked[k])) {
      ++hits;
      sum += static_cast<double>(hits) / static_cast<double>(k + 1);
    }
  }
  return sum / static_cast<double>(std::min(r.relevant.size(), n));
}

MapResult map_at_n(std::span<const UserRanking> rankings, std::size_t n) {
  if (n < 1) throw Error("eval: N must be >= 1");
  std::vector<double> ap(rankings.size(), 0.0);
  const long count = static_cast<long>(rankings.size());
#pragma omp parallel for schedule(static)
  for (long k = 0; k < count; ++k) {
    ap[static_cast<std::size_t>(k)] = average_precision(rankings[static_cast<std::size_t>(k)], n);
  }
  MapResult out;
  double sum = 0.0;
  for (std::size_t k = 0; k < rankings.size(); ++k) {
    if (rankings[k].relevant.empty()) continue;
    out.per_user.emplace_back(rankings[k].user, ap[k]);
    sum += ap[k];
  }
  out.users = out.per_user.size();
  if (out.users == 0) throw Error("eval: no user has a relevant item");
  out.map = sum / static_cast<double>(out.users);
  return out;
}

std::vector<std::pair<UserId, std::vector<ItemId>>> rank_items(std::span<const ScoredItem> scored) {
  std::map<UserId, std::map<ItemId, double>> best;
  for (const auto& s : scored) {
    auto [it, inserted] = best[s.user].try_emplace(s.item, s.score);
    if (!inserted) it->second = std::max(it->second, s.score);
  }
  std::vector<std::pair<UserId, std::vector<ItemId>>> out;
  out.reserve(best.size());
  for (const auto& [user, items] : best) {
    std::vector<std::pair<double, ItemId>> order;
    order.reserve(items.size());
    for (const auto& [item, score] : items) order.emplace_back(score, item);
    std::sort(order.begin(), order.end(), [](const auto& a, const auto& b) {
      return a.first != b.first ? a.first > b.first : a.second < b.second;
    });
    std::vector<ItemId> ranked;
    ranked.reserve(order.size());
    for (const auto& o : order) ranked.push_back(o.second);
    out.emplace_back(user, std::move(ranked));
  }
  return out;
}

std::vector<UserRanking> make_rankings(std::span<const ScoredItem> scored,
                                       std::span<const RatingRecord> truth) {
  std::map<UserId, std::vector<ItemId>> relevant;
  for (const auto& r : truth) {
    auto& list = relevant[r.user];
    if (r.result) list.push_back(r.item);
  }
  std::map<UserId, UserRanking> joined;
  for (auto& [user, items] : relevant) {
    std::sort(items.begin(), items.end());
    items.erase(std::unique(items.begin(), items.end()), items.end());
    joined[user] = UserRanking{user, {}, items};
  }
  std::size_t shared = 0;
  for (auto& [user, ranked] : rank_items(scored)) {
    auto it = joined.find(user);
    if (it == joined.end()) continue;
    ++shared;
    it->second.ranked = std::move(ranked);
  }
  if (shared == 0) {
    throw Error("eval: predictions and truth share no user (" + std::to_string(rank_items(scored).size()) +
                " predicted users, " + std::to_string(joined.size()) + " truth users)");
  }
  std::vector<UserRanking> out;
  out.reserve(joined.size());
  for (auto& [user, r] : joined) out.push_back(std::move(r));
  return out;
}

std::vector<ScoredItem> to_scored(std::span<const RatingRecord> records,
                                  std::span<const double> scores) {
  if (records.size() != scores.size()) throw Error("eval: score count does not match records");
  std::vector<ScoredItem> out;
  out.reserve(records.size());
  for (std::size_t k = 0; k < records.size(); ++k) {
    out.push_back({records[k].user, records[k].item, scores[k]});
  }
  return out;
}

void write_scores(std::span<const ScoredItem> scored, const std::filesystem::path& file,
                  const std::string& stamp) {
  auto out = tsv::open_output(file);
  out << tsv::stamp_line(stamp);
  for (const auto& s : scored) {
    out << s.user << '\t' << s.item << '\t' << tsv::format_double(s.score) << '\n';
  }
}

std::vector<ScoredItem> read_scores(const std::filesystem::path& file) {
  std::vector<ScoredItem> out;
  tsv::for_each_line(file, [&](const std::vector<std::string_view>& f, std::size_t line) {
    if (f.size() != 3) throw ParseError(file.string(), line, "expected 3 fields");
    const auto user = tsv::parse_number<UserId>(f[0]);
    const auto item = tsv::parse_number<ItemId>(f[1]);
    const auto score = tsv::parse_number<double>(f[2]);
    if (!user || !item || !score) throw ParseError(file.string(), line, "malformed score row");
    out.push_back({*user, *item, *score});
  });
  return out;
}

void write_rankings(std::span<const ScoredItem> scored, std::size_t n,
                    const std::filesystem::path& file, const std::string& stamp) {
  auto out = tsv::open_output(file);
  out << tsv::stamp_line(stamp);
  for (const auto& [user, ranked] : rank_items(scored)) {
    out << user;
    for (std::size_t k = 0; k < std::min(n, ranked.size()); ++k) out << '\t' << ranked[k];
    out << '\n';
  }
}

void write_report(const MapResult& result, const std::filesystem::path& file,
                  const std::string& stamp) {
  auto out = tsv::open_output(file);
  out << tsv::stamp_line(stamp);
  out << "# users without a positive test item are excluded\n";
  for (const auto& [user, ap] : result.per_user) out << user << '\t' << tsv::format_double(ap) << '\n';
  out << "MAP " << tsv::format_double(result.map) << " users " << result.users << '\n';
}

}  // namespace socrec
