#include <bit>
#include <cstring>
#include <fstream>

#include "socrec/config.hpp"
#include "socrec/model.hpp"
#include "tsv.hpp"

namespace socrec {

static_assert(std::endian::native == std::endian::little, "checkpoints are little-endian");

namespace {

constexpr char kMagic[8] = {'S', 'O', 'C', 'R', 'E', 'C', 'M', 'F'};
constexpr std::uint32_t kVersion = 1;

class Writer {
 public:
  explicit Writer(std::ofstream& out) : out_(out) {}

  template <class T>
  void pod(const T& v) {
    static_assert(std::is_trivially_copyable_v<T>);
    out_.write(reinterpret_cast<const char*>(&v), sizeof(T));
  }

  // Structs are written field by field so padding never reaches the file.
  void item(const WeightedIndex& x) { pod(x.index); pod(x.weight); }
  void item(const RatedItem& x) { pod(x.item); pod(x.mean_rating); }
  void item(const Neighbor& x) { pod(x.item); pod(x.distance); }
  template <class T>
  void item(const T& x) { pod(x); }

  template <class T>
  void vec(const std::vector<T>& v) {
    pod<std::uint64_t>(v.size());
    for (const auto& x : v) item(x);
  }

  void str(const std::string& s) {
    pod<std::uint64_t>(s.size());
    out_.write(s.data(), static_cast<std::streamsize>(s.size()));
  }

  template <class T>
  void csr(const Csr<T>& c) {
    vec(c.offsets);
    vec(c.values);
  }

 private:
  std::ofstream& out_;
};

class Reader {
 public:
  Reader(std::ifstream& in, std::string file) : in_(in), file_(std::move(file)) {}

  template <class T>
  T pod() {
    T v{};
    in_.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!in_) fail("truncated");
    return v;
  }

  std::uint64_t count() {
    const auto n = pod<std::uint64_t>();
    if (n > (std::uint64_t{1} << 40)) fail("implausible length");
    return n;
  }

  template <class T>
  T item() {
    if constexpr (std::is_same_v<T, WeightedIndex>) {
      T x;
      x.index = pod<std::uint32_t>();
      x.weight = pod<double>();
      return x;
    } else if constexpr (std::is_same_v<T, RatedItem>) {
      T x;
      x.item = pod<std::uint32_t>();
      x.mean_rating = pod<double>();
      return x;
    } else if constexpr (std::is_same_v<T, Neighbor>) {
      T x;
      x.item = pod<std::uint32_t>();
      x.distance = pod<double>();
      return x;
    } else {
      return pod<T>();
    }
  }

  template <class T>
  std::vector<T> vec() {
    std::vector<T> v(count());
    for (auto& x : v) x = item<T>();
    return v;
  }

  std::string str() {
    std::string s(count(), '\0');
    in_.read(s.data(), static_cast<std::streamsize>(s.size()));
    if (!in_) fail("truncated");
    return s;
  }

  template <class T>
  Csr<T> csr() {
    Csr<T> c;
    c.offsets = vec<std::uint64_t>();
    c.values = vec<T>();
    if (c.offsets.empty() || c.offsets.front() != 0 || c.offsets.back() != c.values.size()) {
      fail("corrupt row offsets");
    }
    return c;
  }

  [[noreturn]] void fail(const std::string& what) const {
    throw Error("model file " + file_ + ": " + what);
  }

 private:
  std::ifstream& in_;
  std::string file_;
};

}  // namespace

void save_model(const MfmModel& m, const std::filesystem::path& file, const std::string& stamp) {
  std::ofstream out = tsv::open_output(file);
  Writer w(out);
  out.write(kMagic, sizeof(kMagic));
  w.pod(kVersion);
  w.str(stamp);
  w.str(to_json(m.config).dump());

  const FeatureIndex& ix = m.index;
  w.vec(ix.users);
  w.vec(ix.items);
  w.vec(ix.keywords);
  w.vec(ix.tags);
  w.vec(ix.user_age);
  w.vec(ix.user_gender);
  w.vec(ix.user_tweet);
  w.csr(ix.follows);
  w.csr(ix.actions);
  w.csr(ix.user_keywords);
  w.csr(ix.user_tags);
  w.vec(ix.item_user);
  w.csr(ix.item_keywords);
  w.csr(ix.item_tags);
  w.csr(ix.rated);
  w.vec(ix.user_mean);
  w.pod<std::uint64_t>(ix.neighbors.k);
  w.csr(ix.neighbors.lists);

  w.pod(m.mu);
  w.pod(m.provenance.first);
  w.pod(m.provenance.last);
  w.pod(m.provenance.records);

  w.pod<std::uint32_t>(kTableCount);
  for (std::size_t k = 0; k < kTableCount; ++k) {
    const ParamTable& t = m.tables[k];
    w.str(std::string(table_name(static_cast<Table>(k))));
    w.pod<std::uint64_t>(t.rows);
    w.pod<std::uint64_t>(t.cols);
    out.write(reinterpret_cast<const char*>(t.values.data()),
              static_cast<std::streamsize>(t.values.size() * sizeof(double)));
  }
  if (!out) throw Error("cannot write " + file.string());
}

MfmModel load_model(const std::filesystem::path& file, std::string* stamp) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw Error("cannot open " + file.string());
  Reader r(in, file.string());

  char magic[sizeof(kMagic)];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) r.fail("not a model checkpoint");
  if (const auto v = r.pod<std::uint32_t>(); v != kVersion) {
    r.fail("unsupported version " + std::to_string(v));
  }
  const std::string s = r.str();
  if (stamp) *stamp = s;

  MfmModel m;
  try {
    m.config = mfm_config_from_json(nlohmann::json::parse(r.str()));
  } catch (const nlohmann::json::exception& e) {
    r.fail(std::string("bad config header: ") + e.what());
  }

  FeatureIndex& ix = m.index;
  ix.users = r.vec<UserId>();
  ix.items = r.vec<ItemId>();
  ix.keywords = r.vec<KeywordId>();
  ix.tags = r.vec<TagId>();
  ix.user_age = r.vec<std::uint8_t>();
  ix.user_gender = r.vec<std::uint8_t>();
  ix.user_tweet = r.vec<std::uint8_t>();
  ix.follows = r.csr<std::uint32_t>();
  ix.actions = r.csr<std::uint32_t>();
  ix.user_keywords = r.csr<WeightedIndex>();
  ix.user_tags = r.csr<std::uint32_t>();
  ix.item_user = r.vec<std::uint32_t>();
  ix.item_keywords = r.csr<std::uint32_t>();
  ix.item_tags = r.csr<std::uint32_t>();
  ix.rated = r.csr<RatedItem>();
  ix.user_mean = r.vec<double>();
  ix.neighbors.k = r.pod<std::uint64_t>();
  ix.neighbors.lists = r.csr<Neighbor>();

  const std::size_t nu = ix.users.size();
  const std::size_t ni = ix.items.size();
  if (ix.user_age.size() != nu || ix.user_gender.size() != nu || ix.user_tweet.size() != nu ||
      ix.follows.rows() != nu || ix.actions.rows() != nu || ix.user_keywords.rows() != nu ||
      ix.user_tags.rows() != nu || ix.rated.rows() != nu || ix.user_mean.size() != nu ||
      ix.item_user.size() != ni || ix.item_keywords.rows() != ni || ix.item_tags.rows() != ni ||
      ix.neighbors.lists.rows() != ni) {
    r.fail("index sizes disagree");
  }

  m.mu = r.pod<double>();
  m.provenance.first = r.pod<Timestamp>();
  m.provenance.last = r.pod<Timestamp>();
  m.provenance.records = r.pod<std::uint64_t>();

  if (r.pod<std::uint32_t>() != kTableCount) r.fail("unexpected table count");
  for (std::size_t k = 0; k < kTableCount; ++k) {
    const std::string name = r.str();
    if (name != table_name(static_cast<Table>(k))) r.fail("unexpected table " + name);
    ParamTable& t = m.tables[k];
    t.rows = r.pod<std::uint64_t>();
    t.cols = r.pod<std::uint64_t>();
    if (t.rows * t.cols > (std::uint64_t{1} << 36)) r.fail("implausible table size");
    t.values.resize(t.rows * t.cols);
    in.read(reinterpret_cast<char*>(t.values.data()),
            static_cast<std::streamsize>(t.values.size() * sizeof(double)));
    if (!in) r.fail("truncated table " + name);
  }
  return m;
}

}  // namespace socrec
