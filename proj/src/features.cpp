#include "socrec/features.hpp"

#include <algorithm>
#include <map>

namespace socrec {

namespace {

template <class T>
void sort_unique(std::vector<T>& v) {
  std::sort(v.begin(), v.end());
  v.erase(std::unique(v.begin(), v.end()), v.end());
}

template <class T>
std::optional<std::uint32_t> find_row(const std::vector<T>& sorted, T id) {
  auto it = std::lower_bound(sorted.begin(), sorted.end(), id);
  if (it == sorted.end() || *it != id) return std::nullopt;
  return static_cast<std::uint32_t>(it - sorted.begin());
}

}  // namespace

std::optional<std::uint32_t> FeatureIndex::user_row(UserId u) const { return find_row(users, u); }

std::optional<std::uint32_t> FeatureIndex::item_row(ItemId i) const { return find_row(items, i); }

FeatureIndex build_feature_index(const Dataset& dataset, std::span<const RatingRecord> training,
                                 const IndexOptions& options) {
  FeatureIndex ix;

  for (const auto& [u, p] : dataset.profiles) {
    ix.users.push_back(u);
    for (const auto& kw : p.keywords) ix.keywords.push_back(kw.keyword);
    for (TagId t : p.tags) ix.tags.push_back(t);
  }
  for (const auto& [u, list] : dataset.graph.follows) {
    ix.users.push_back(u);
    ix.users.insert(ix.users.end(), list.begin(), list.end());
  }
  for (const auto& [u, list] : dataset.graph.actions) {
    ix.users.push_back(u);
    for (const auto& e : list) ix.users.push_back(e.target);
  }
  for (const auto& [i, info] : dataset.items) {
    ix.items.push_back(i);
    ix.keywords.insert(ix.keywords.end(), info.keywords.begin(), info.keywords.end());
  }
  for (const auto& r : dataset.log) {
    ix.users.push_back(r.user);
    ix.items.push_back(r.item);
  }
  for (const auto& r : training) {
    ix.users.push_back(r.user);
    ix.items.push_back(r.item);
  }
  ix.users.insert(ix.users.end(), ix.items.begin(), ix.items.end());
  sort_unique(ix.users);
  sort_unique(ix.items);
  sort_unique(ix.keywords);
  sort_unique(ix.tags);

  int last_year = options.last_birth_year;
  if (last_year == 0) {
    last_year = dataset.log.empty() ? kDefaultLastBirthYear : year_of(dataset.window_end);
  }

  const auto urow = [&](UserId u) { return *ix.user_row(u); };
  const auto krow = [&](KeywordId k) { return *find_row(ix.keywords, k); };
  const auto trow = [&](TagId t) { return *find_row(ix.tags, t); };

  const std::size_t nu = ix.users.size();
  ix.user_age.resize(nu);
  ix.user_gender.resize(nu);
  ix.user_tweet.resize(nu);
  for (std::size_t r = 0; r < nu; ++r) {
    const UserId u = ix.users[r];
    const UserProfile& p = dataset.profile(u);
    ix.user_age[r] = static_cast<std::uint8_t>(age_bucket(p.birth_year, last_year));
    ix.user_gender[r] = static_cast<std::uint8_t>(p.gender);
    ix.user_tweet[r] = static_cast<std::uint8_t>(tweet_bucket(p.tweet_count));

    std::vector<std::uint32_t> follows;
    for (UserId v : dataset.graph.followees(u)) follows.push_back(urow(v));
    if (options.self_follow) follows.push_back(static_cast<std::uint32_t>(r));
    sort_unique(follows);
    ix.follows.push_row(follows);

    std::vector<std::uint32_t> actions;
    for (const auto& e : dataset.graph.actions_of(u)) actions.push_back(urow(e.target));
    sort_unique(actions);
    ix.actions.push_row(actions);

    std::vector<WeightedIndex> kws;
    for (const auto& kw : p.keywords) kws.push_back({krow(kw.keyword), kw.weight});
    ix.user_keywords.push_row(kws);

    std::vector<std::uint32_t> tags;
    for (TagId t : p.tags) tags.push_back(trow(t));
    ix.user_tags.push_row(tags);
  }

  for (ItemId i : ix.items) {
    ix.item_user.push_back(urow(i));
    std::vector<std::uint32_t> kws;
    for (KeywordId k : dataset.item_keywords(i)) kws.push_back(krow(k));
    sort_unique(kws);
    ix.item_keywords.push_row(kws);
    std::vector<std::uint32_t> tags;
    for (TagId t : dataset.item_tags(i)) tags.push_back(trow(t));
    sort_unique(tags);
    ix.item_tags.push_row(tags);
  }

  // Rating history: mean rating per (user, item) and per user.
  std::vector<std::map<std::uint32_t, std::pair<double, std::size_t>>> history(nu);
  std::vector<std::pair<double, std::size_t>> totals(nu);
  for (const auto& r : training) {
    const auto u = urow(r.user);
    const auto i = *ix.item_row(r.item);
    auto& cell = history[u][i];
    cell.first += r.result;
    ++cell.second;
    totals[u].first += r.result;
    ++totals[u].second;
  }
  ix.user_mean.resize(nu, 0.0);
  for (std::size_t u = 0; u < nu; ++u) {
    std::vector<RatedItem> row;
    for (const auto& [item, acc] : history[u]) {
      row.push_back({item, acc.first / static_cast<double>(acc.second)});
    }
    ix.rated.push_row(row);
    if (totals[u].second > 0) ix.user_mean[u] = totals[u].first / static_cast<double>(totals[u].second);
  }

  if (options.build_neighbors) {
    ix.neighbors = build_neighbors(make_item_vectors(dataset, ix.items), options.knn_k, options.rho);
  } else {
    ix.neighbors.k = 0;
    for (std::size_t i = 0; i < ix.items.size(); ++i) ix.neighbors.lists.push_empty_row();
  }
  return ix;
}

}  // namespace socrec
