#include "socrec/dataset.hpp"

#include <algorithm>
#include <set>
#include <sstream>

#include "tsv.hpp"

namespace socrec {

namespace fs = std::filesystem;

namespace {

const std::vector<UserId> kNoUsers;
const std::vector<ActionEdge> kNoActions;
const std::vector<TagId> kNoTags;
const std::vector<KeywordId> kNoKeywords;
const UserProfile kDefaultProfile;

template <class T>
T require_number(std::string_view text, const fs::path& file, std::size_t line,
                 const char* field) {
  auto v = tsv::parse_number<T>(text);
  if (!v) {
    throw ParseError(file.filename().string(), line,
                     std::string("malformed ") + field + " '" + std::string(text) + "'");
  }
  return *v;
}

void require_fields(const std::vector<std::string_view>& fields, std::size_t expected,
                    const fs::path& file, std::size_t line) {
  if (fields.size() != expected) {
    throw ParseError(file.filename().string(), line,
                     "expected " + std::to_string(expected) + " fields, got " +
                         std::to_string(fields.size()));
  }
}

fs::path require_file(const fs::path& dir, const char* name) {
  fs::path p = dir / name;
  if (!fs::exists(p)) throw Error("missing dataset file: " + p.string());
  return p;
}

std::vector<TagId> parse_tags(std::string_view text, const fs::path& file, std::size_t line) {
  std::vector<TagId> tags;
  if (text.empty() || text == "0") return tags;
  for (auto part : tsv::split(text, ';')) {
    if (part.empty()) continue;
    tags.push_back(require_number<TagId>(part, file, line, "tag id"));
  }
  std::sort(tags.begin(), tags.end());
  tags.erase(std::unique(tags.begin(), tags.end()), tags.end());
  return tags;
}

void read_profiles(const fs::path& file, Dataset& d) {
  tsv::for_each_line(file, [&](const auto& f, std::size_t line) {
    require_fields(f, 5, file, line);
    UserProfile p;
    const UserId user = require_number<UserId>(f[0], file, line, "user id");
    p.birth_year = require_number<int>(f[1], file, line, "birth year");
    const int gender = require_number<int>(f[2], file, line, "gender");
    if (gender < 0 || gender >= kGenders) {
      throw ParseError(file.filename().string(), line, "invalid gender " + std::to_string(gender));
    }
    p.gender = static_cast<Gender>(gender);
    p.tweet_count = require_number<std::uint64_t>(f[3], file, line, "tweet count");
    p.tags = parse_tags(f[4], file, line);
    // Keywords may already have been read from user_keywords.tsv.
    auto& slot = d.profiles[user];
    p.keywords = std::move(slot.keywords);
    slot = std::move(p);
  });
}

void read_keywords(const fs::path& file, Dataset& d) {
  tsv::for_each_line(file, [&](const auto& f, std::size_t line) {
    require_fields(f, 2, file, line);
    const UserId user = require_number<UserId>(f[0], file, line, "user id");
    std::vector<KeywordWeight> kws;
    if (!f[1].empty()) {
      for (auto part : tsv::split(f[1], ';')) {
        if (part.empty()) continue;
        const auto colon = part.find(':');
        if (colon == std::string_view::npos) {
          throw ParseError(file.filename().string(), line,
                           "keyword entry without weight '" + std::string(part) + "'");
        }
        KeywordWeight kw;
        kw.keyword = require_number<KeywordId>(part.substr(0, colon), file, line, "keyword id");
        kw.weight = require_number<double>(part.substr(colon + 1), file, line, "keyword weight");
        if (kw.weight < 0) {
          throw ParseError(file.filename().string(), line, "negative keyword weight");
        }
        kws.push_back(kw);
      }
    }
    std::sort(kws.begin(), kws.end(),
              [](const KeywordWeight& a, const KeywordWeight& b) { return a.keyword < b.keyword; });
    d.profiles[user].keywords = std::move(kws);
  });
}

void read_sns(const fs::path& file, Dataset& d) {
  tsv::for_each_line(file, [&](const auto& f, std::size_t line) {
    require_fields(f, 2, file, line);
    const UserId a = require_number<UserId>(f[0], file, line, "follower id");
    const UserId b = require_number<UserId>(f[1], file, line, "followee id");
    d.graph.follows[a].push_back(b);
  });
  for (auto& [u, list] : d.graph.follows) {
    std::sort(list.begin(), list.end());
    list.erase(std::unique(list.begin(), list.end()), list.end());
  }
}

void read_actions(const fs::path& file, Dataset& d) {
  tsv::for_each_line(file, [&](const auto& f, std::size_t line) {
    require_fields(f, 5, file, line);
    ActionEdge e;
    const UserId u = require_number<UserId>(f[0], file, line, "user id");
    e.target = require_number<UserId>(f[1], file, line, "target id");
    e.counts.at = require_number<std::uint32_t>(f[2], file, line, "at count");
    e.counts.retweet = require_number<std::uint32_t>(f[3], file, line, "retweet count");
    e.counts.comment = require_number<std::uint32_t>(f[4], file, line, "comment count");
    d.graph.actions[u].push_back(e);
  });
  for (auto& [u, list] : d.graph.actions) {
    std::stable_sort(list.begin(), list.end(),
                     [](const ActionEdge& a, const ActionEdge& b) { return a.target < b.target; });
    // Merge duplicate targets by summing counts.
    std::vector<ActionEdge> merged;
    for (const auto& e : list) {
      if (!merged.empty() && merged.back().target == e.target) {
        merged.back().counts.at += e.counts.at;
        merged.back().counts.retweet += e.counts.retweet;
        merged.back().counts.comment += e.counts.comment;
      } else {
        merged.push_back(e);
      }
    }
    list = std::move(merged);
  }
}

void read_items(const fs::path& file, Dataset& d) {
  tsv::for_each_line(file, [&](const auto& f, std::size_t line) {
    require_fields(f, 3, file, line);
    const ItemId item = require_number<ItemId>(f[0], file, line, "item id");
    ItemInfo info;
    info.category = std::string(f[1]);
    if (!f[2].empty()) {
      for (auto part : tsv::split(f[2], ';')) {
        if (part.empty()) continue;
        info.keywords.push_back(require_number<KeywordId>(part, file, line, "keyword id"));
      }
    }
    std::sort(info.keywords.begin(), info.keywords.end());
    info.keywords.erase(std::unique(info.keywords.begin(), info.keywords.end()),
                        info.keywords.end());
    d.items[item] = std::move(info);
  });
}

}  // namespace

ParseError::ParseError(const std::string& file, std::size_t line, const std::string& what)
    : Error(file + ":" + std::to_string(line) + ": " + what), file_(file), line_(line) {}

const std::vector<UserId>& SocialGraph::followees(UserId u) const {
  auto it = follows.find(u);
  return it == follows.end() ? kNoUsers : it->second;
}

const std::vector<ActionEdge>& SocialGraph::actions_of(UserId u) const {
  auto it = actions.find(u);
  return it == actions.end() ? kNoActions : it->second;
}

const UserProfile& Dataset::profile(UserId u) const {
  auto it = profiles.find(u);
  return it == profiles.end() ? kDefaultProfile : it->second;
}

const std::vector<TagId>& Dataset::item_tags(ItemId i) const {
  auto it = profiles.find(i);
  return it == profiles.end() ? kNoTags : it->second.tags;
}

const std::vector<KeywordId>& Dataset::item_keywords(ItemId i) const {
  auto it = items.find(i);
  return it == items.end() ? kNoKeywords : it->second.keywords;
}

void sort_log(std::vector<RatingRecord>& records) {
  std::stable_sort(records.begin(), records.end(), [](const RatingRecord& a, const RatingRecord& b) {
    if (a.user != b.user) return a.user < b.user;
    return a.timestamp < b.timestamp;
  });
}

std::vector<RatingRecord> read_rec_log(const fs::path& file) {
  std::vector<RatingRecord> out;
  tsv::for_each_line(file, [&](const auto& f, std::size_t line) {
    require_fields(f, 4, file, line);
    RatingRecord r;
    r.user = require_number<UserId>(f[0], file, line, "user id");
    r.item = require_number<ItemId>(f[1], file, line, "item id");
    const int result = require_number<int>(f[2], file, line, "result");
    if (result == 1) {
      r.result = 1;
    } else if (result == 0 || result == -1) {
      r.result = 0;
    } else {
      throw ParseError(file.filename().string(), line, "invalid rating " + std::to_string(result));
    }
    r.timestamp = require_number<Timestamp>(f[3], file, line, "timestamp");
    out.push_back(r);
  });
  return out;
}

void write_rec_log(const std::vector<RatingRecord>& records, const fs::path& file,
                   const std::string& stamp) {
  auto out = tsv::open_output(file);
  out << tsv::stamp_line(stamp);
  for (const auto& r : records) {
    out << r.user << '\t' << r.item << '\t' << static_cast<int>(r.result) << '\t' << r.timestamp
        << '\n';
  }
}

std::optional<std::string> read_stamp(const fs::path& file) {
  std::ifstream in(file);
  if (!in) return std::nullopt;
  std::string line;
  if (!std::getline(in, line)) return std::nullopt;
  constexpr std::string_view prefix = "# config_hash=";
  if (line.rfind(prefix, 0) != 0) return std::nullopt;
  std::string value = line.substr(prefix.size());
  const auto space = value.find(' ');
  if (space != std::string::npos) value.resize(space);
  return value;
}

void finalize_dataset(Dataset& d) {
  sort_log(d.log);
  for (const auto& r : d.log) {
    d.profiles.try_emplace(r.user);
    d.items.try_emplace(r.item);
  }
  if (d.log.empty()) {
    d.window_begin = d.window_end = 0;
  } else {
    auto [lo, hi] = std::minmax_element(
        d.log.begin(), d.log.end(),
        [](const RatingRecord& a, const RatingRecord& b) { return a.timestamp < b.timestamp; });
    d.window_begin = lo->timestamp;
    d.window_end = hi->timestamp;
  }
}

Dataset load_dataset(const fs::path& directory) {
  const fs::path rec = require_file(directory, kRecLogFile);
  const fs::path prof = require_file(directory, kProfileFile);
  const fs::path sns = require_file(directory, kSnsFile);
  const fs::path act = require_file(directory, kActionFile);
  const fs::path kw = require_file(directory, kKeywordFile);
  const fs::path item = require_file(directory, kItemFile);

  Dataset d;
  d.log = read_rec_log(rec);
  read_keywords(kw, d);
  read_profiles(prof, d);
  read_sns(sns, d);
  read_actions(act, d);
  read_items(item, d);
  finalize_dataset(d);
  return d;
}

void save_dataset(const Dataset& d, const fs::path& directory, const std::string& stamp) {
  fs::create_directories(directory);
  write_rec_log(d.log, directory / kRecLogFile, stamp);
  {
    auto out = tsv::open_output(directory / kProfileFile);
    out << tsv::stamp_line(stamp);
    for (const auto& [u, p] : d.profiles) {
      out << u << '\t' << p.birth_year << '\t' << static_cast<int>(p.gender) << '\t'
          << p.tweet_count << '\t';
      if (p.tags.empty()) {
        out << '0';
      } else {
        for (std::size_t k = 0; k < p.tags.size(); ++k) out << (k ? ";" : "") << p.tags[k];
      }
      out << '\n';
    }
  }
  {
    auto out = tsv::open_output(directory / kKeywordFile);
    out << tsv::stamp_line(stamp);
    for (const auto& [u, p] : d.profiles) {
      if (p.keywords.empty()) continue;
      out << u << '\t';
      for (std::size_t k = 0; k < p.keywords.size(); ++k) {
        out << (k ? ";" : "") << p.keywords[k].keyword << ':'
            << tsv::format_double(p.keywords[k].weight);
      }
      out << '\n';
    }
  }
  {
    auto out = tsv::open_output(directory / kSnsFile);
    out << tsv::stamp_line(stamp);
    for (const auto& [u, list] : d.graph.follows) {
      for (UserId v : list) out << u << '\t' << v << '\n';
    }
  }
  {
    auto out = tsv::open_output(directory / kActionFile);
    out << tsv::stamp_line(stamp);
    for (const auto& [u, list] : d.graph.actions) {
      for (const auto& e : list) {
        out << u << '\t' << e.target << '\t' << e.counts.at << '\t' << e.counts.retweet << '\t'
            << e.counts.comment << '\n';
      }
    }
  }
  {
    auto out = tsv::open_output(directory / kItemFile);
    out << tsv::stamp_line(stamp);
    for (const auto& [i, info] : d.items) {
      out << i << '\t' << info.category << '\t';
      for (std::size_t k = 0; k < info.keywords.size(); ++k) {
        out << (k ? ";" : "") << info.keywords[k];
      }
      out << '\n';
    }
  }
}

DatasetStats dataset_stats(const Dataset& d) {
  DatasetStats s;
  std::set<UserId> users;
  std::set<ItemId> items;
  for (const auto& r : d.log) {
    users.insert(r.user);
    items.insert(r.item);
    if (r.result) {
      ++s.positives;
    } else {
      ++s.negatives;
    }
  }
  s.users = users.size();
  s.items = items.size();
  s.records = d.log.size();
  return s;
}

}  // namespace socrec
