#include "socrec/config.hpp"

#include <cstdio>
#include <fstream>
#include <set>

namespace socrec {

using nlohmann::json;

namespace {

// Reads the keys of one JSON object, rejecting unknown ones.
class Section {
 public:
  Section(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(path_.empty() ? "<root>" : path_, "expected an object");
  }

  std::string field(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

  bool has(const std::string& key) const { return j_.contains(key); }

  const json& at(const std::string& key) {
    seen_.insert(key);
    return j_.at(key);
  }

  template <class T>
  void get(const std::string& key, T& out) {
    if (!j_.contains(key)) return;
    seen_.insert(key);
    const json& v = j_.at(key);
    if constexpr (std::is_same_v<T, bool>) {
      if (!v.is_boolean()) throw ConfigError(field(key), "expected a boolean");
    } else if constexpr (std::is_same_v<T, std::string>) {
      if (!v.is_string()) throw ConfigError(field(key), "expected a string");
    } else if constexpr (std::is_floating_point_v<T>) {
      if (!v.is_number()) throw ConfigError(field(key), "expected a number");
    } else if constexpr (std::is_unsigned_v<T>) {
      if (!v.is_number_unsigned()) throw ConfigError(field(key), "expected a non-negative integer");
    } else {
      if (!v.is_number_integer()) throw ConfigError(field(key), "expected an integer");
    }
    try {
      out = v.get<T>();
    } catch (const json::exception& e) {
      throw ConfigError(field(key), e.what());
    }
  }

  void finish() const {
    for (const auto& [key, value] : j_.items()) {
      if (!seen_.contains(key)) throw ConfigError(field(key), "unknown field");
    }
  }

 private:
  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

json flags_json(const FeatureFlags& f) {
  return {{"sns", f.sns},           {"action", f.action}, {"day", f.day},
          {"second", f.second},     {"profile", f.profile}, {"tags", f.tags},
          {"keywords", f.keywords}, {"tweetnum", f.tweetnum}, {"knn", f.knn}};
}

FeatureFlags flags_from(const json& j, const std::string& where) {
  FeatureFlags f;
  Section s(j, where);
  s.get("sns", f.sns);
  s.get("action", f.action);
  s.get("day", f.day);
  s.get("second", f.second);
  s.get("profile", f.profile);
  s.get("tags", f.tags);
  s.get("keywords", f.keywords);
  s.get("tweetnum", f.tweetnum);
  s.get("knn", f.knn);
  s.finish();
  return f;
}

MfmConfig read_mfm(Section& s, MfmConfig c, bool allow_seed) {
  s.get("latent_dim", c.latent_dim);
  if (s.has("flags")) c.flags = flags_from(s.at("flags"), s.field("flags"));
  s.get("alpha_follow", c.alpha_follow);
  s.get("alpha_action", c.alpha_action);
  s.get("knn_k", c.knn_k);
  s.get("rho", c.rho);
  s.get("self_follow", c.self_follow);
  s.get("init_scale", c.init_scale);
  if (allow_seed) {
    s.get("seed", c.seed);
  } else if (s.has("seed")) {
    throw ConfigError(s.field("seed"), "seeds come from the top-level seed");
  }
  s.get("day_begin", c.day_begin);
  s.get("day_end", c.day_end);
  s.get("sec_begin", c.sec_begin);
  s.get("sec_end", c.sec_end);
  return c;
}

// Runs a section's validate(), reporting failures as configuration errors.
template <class F>
void checked(const std::string& section, F&& validate) {
  try {
    validate();
  } catch (const ConfigError&) {
    throw;
  } catch (const Error& e) {
    throw ConfigError(section, e.what());
  }
}

}  // namespace

json to_json(const MfmConfig& c) {
  return {{"latent_dim", c.latent_dim}, {"flags", flags_json(c.flags)},
          {"alpha_follow", c.alpha_follow}, {"alpha_action", c.alpha_action},
          {"knn_k", c.knn_k}, {"rho", c.rho}, {"self_follow", c.self_follow},
          {"init_scale", c.init_scale}, {"seed", c.seed}, {"day_begin", c.day_begin},
          {"day_end", c.day_end}, {"sec_begin", c.sec_begin}, {"sec_end", c.sec_end}};
}

MfmConfig mfm_config_from_json(const json& j, const std::string& where) {
  Section s(j, where);
  MfmConfig c = read_mfm(s, MfmConfig{}, true);
  s.finish();
  return c;
}

void RunConfig::apply_seed(std::uint64_t new_seed) {
  seed = new_seed;
  synthetic.seed = new_seed;
  model.seed = new_seed;
  train.seed = new_seed;
}

void RunConfig::validate() const {
  if (out_dir.empty()) throw ConfigError("out_dir", "must not be empty");
  checked("synthetic", [&] { synthetic.validate(); });
  checked("preprocess", [&] { preprocess.validate(); });
  checked("model", [&] { model.validate(); });
  checked("train", [&] { train.validate(); });
  checked("ensemble", [&] { ensemble.validate(); });
  if (eval.top_n < 1) throw ConfigError("eval.top_n", "must be >= 1");
}

std::filesystem::path RunConfig::data_path() const {
  return data_dir.empty() ? std::filesystem::path(out_dir) / "data" : std::filesystem::path(data_dir);
}

std::filesystem::path RunConfig::test_path() const {
  return test_file.empty() ? data_path() / "rec_log_test.tsv" : std::filesystem::path(test_file);
}

json to_json(const RunConfig& c) {
  const auto& s = c.synthetic;
  const auto& p = c.preprocess;
  const auto& t = c.train;
  const auto& e = c.ensemble;
  json model = to_json(c.model);
  model.erase("seed");
  return {
      {"seed", c.seed},
      {"out_dir", c.out_dir},
      {"data_dir", c.data_dir},
      {"test_file", c.test_file},
      {"synthetic",
       {{"n_users", s.n_users}, {"n_items", s.n_items}, {"n_records", s.n_records},
        {"latent_dim", s.latent_dim}, {"positive_rate", s.positive_rate},
        {"noise_level", s.noise_level}, {"start_time", s.start_time},
        {"train_days", s.train_days}, {"test_days", s.test_days},
        {"cold_user_fraction", s.cold_user_fraction}, {"attention_rate", s.attention_rate},
        {"exposure_sharpness", s.exposure_sharpness},
        {"mean_session_length", s.mean_session_length}, {"mean_follows", s.mean_follows},
        {"activity_spread", s.activity_spread}, {"user_bias_spread", s.user_bias_spread},
        {"idle_trending_share", s.idle_trending_share}, {"session_choice", s.session_choice}}},
      {"preprocess",
       {{"filter", p.filter}, {"supplement", p.supplement}, {"tau0", p.filter_params.tau0},
        {"session_cap", p.filter_params.session_cap}, {"pi_minus", p.filter_params.pi_minus},
        {"pi_plus", p.filter_params.pi_plus}, {"epsilon", p.filter_params.epsilon},
        {"xi_at", p.supplement_params.xi_at}, {"xi_retweet", p.supplement_params.xi_retweet},
        {"xi_comment", p.supplement_params.xi_comment},
        {"imbalance_threshold", p.supplement_params.imbalance_threshold}}},
      {"model", model},
      {"train",
       {{"objective", t.objective == Objective::pairwise ? "pairwise" : "pointwise"},
        {"learning_rate", t.learning_rate}, {"lambda", t.lambda},
        {"lambda_overrides", t.lambda_overrides}, {"epochs", t.epochs},
        {"report_every", t.report_every}}},
      {"ensemble",
       {{"boundary_days", e.boundary_days}, {"gamma_range", e.gamma_range}, {"bins", e.bins},
        {"smoothing", e.smoothing}, {"tolerance", e.logistic.tolerance},
        {"max_iterations", e.logistic.max_iterations}, {"step", e.logistic.step}}},
      {"eval", {{"top_n", c.eval.top_n}}},
  };
}

RunConfig run_config_from_json(const json& j) {
  RunConfig c;
  Section root(j, "");
  root.get("seed", c.seed);
  c.apply_seed(c.seed);
  int ladder_row = 0;
  root.get("ladder_row", ladder_row);
  if (ladder_row != 0) {
    if (ladder_row < 1 || ladder_row > kLadderRows) {
      throw ConfigError("ladder_row", "must be in 1.." + std::to_string(kLadderRows));
    }
    apply_ladder_row(c, ladder_row);
  }
  root.get("out_dir", c.out_dir);
  root.get("data_dir", c.data_dir);
  root.get("test_file", c.test_file);

  if (root.has("synthetic")) {
    Section s(root.at("synthetic"), "synthetic");
    auto& y = c.synthetic;
    s.get("n_users", y.n_users);
    s.get("n_items", y.n_items);
    s.get("n_records", y.n_records);
    s.get("latent_dim", y.latent_dim);
    s.get("positive_rate", y.positive_rate);
    s.get("noise_level", y.noise_level);
    s.get("start_time", y.start_time);
    s.get("train_days", y.train_days);
    s.get("test_days", y.test_days);
    s.get("cold_user_fraction", y.cold_user_fraction);
    s.get("attention_rate", y.attention_rate);
    s.get("exposure_sharpness", y.exposure_sharpness);
    s.get("mean_session_length", y.mean_session_length);
    s.get("mean_follows", y.mean_follows);
    s.get("activity_spread", y.activity_spread);
    s.get("user_bias_spread", y.user_bias_spread);
    s.get("idle_trending_share", y.idle_trending_share);
    s.get("session_choice", y.session_choice);
    if (s.has("seed")) throw ConfigError("synthetic.seed", "seeds come from the top-level seed");
    s.finish();
  }
  if (root.has("preprocess")) {
    Section s(root.at("preprocess"), "preprocess");
    auto& p = c.preprocess;
    s.get("filter", p.filter);
    s.get("supplement", p.supplement);
    s.get("tau0", p.filter_params.tau0);
    s.get("session_cap", p.filter_params.session_cap);
    s.get("pi_minus", p.filter_params.pi_minus);
    s.get("pi_plus", p.filter_params.pi_plus);
    s.get("epsilon", p.filter_params.epsilon);
    s.get("xi_at", p.supplement_params.xi_at);
    s.get("xi_retweet", p.supplement_params.xi_retweet);
    s.get("xi_comment", p.supplement_params.xi_comment);
    s.get("imbalance_threshold", p.supplement_params.imbalance_threshold);
    s.finish();
  }
  if (root.has("model")) {
    Section s(root.at("model"), "model");
    c.model = read_mfm(s, c.model, false);
    s.finish();
  }
  if (root.has("train")) {
    Section s(root.at("train"), "train");
    auto& t = c.train;
    std::string objective = t.objective == Objective::pairwise ? "pairwise" : "pointwise";
    s.get("objective", objective);
    if (objective == "pairwise") {
      t.objective = Objective::pairwise;
    } else if (objective == "pointwise") {
      t.objective = Objective::pointwise;
    } else {
      throw ConfigError("train.objective", "expected \"pairwise\" or \"pointwise\"");
    }
    s.get("learning_rate", t.learning_rate);
    s.get("lambda", t.lambda);
    if (s.has("lambda_overrides")) {
      Section o(s.at("lambda_overrides"), "train.lambda_overrides");
      t.lambda_overrides.clear();
      for (const auto& [key, value] : s.at("lambda_overrides").items()) {
        double v = 0.0;
        o.get(key, v);
        t.lambda_overrides[key] = v;
      }
    }
    s.get("epochs", t.epochs);
    s.get("report_every", t.report_every);
    if (s.has("seed")) throw ConfigError("train.seed", "seeds come from the top-level seed");
    s.finish();
  }
  if (root.has("ensemble")) {
    Section s(root.at("ensemble"), "ensemble");
    auto& e = c.ensemble;
    s.get("boundary_days", e.boundary_days);
    s.get("gamma_range", e.gamma_range);
    s.get("bins", e.bins);
    s.get("smoothing", e.smoothing);
    s.get("tolerance", e.logistic.tolerance);
    s.get("max_iterations", e.logistic.max_iterations);
    s.get("step", e.logistic.step);
    s.finish();
  }
  if (root.has("eval")) {
    Section s(root.at("eval"), "eval");
    s.get("top_n", c.eval.top_n);
    s.finish();
  }
  root.finish();
  c.validate();
  return c;
}

RunConfig load_config(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw ConfigError(file.string(), "cannot open config file");
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError(file.string(), e.what());
  }
  return run_config_from_json(j);
}

std::string config_hash(const RunConfig& c) {
  json j = to_json(c);
  j.erase("out_dir");
  j.erase("data_dir");
  j.erase("test_file");
  const std::string text = j.dump();
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string config_stamp(const RunConfig& c) { return "config_hash=" + config_hash(c); }

void apply_ladder_row(RunConfig& c, int row) {
  if (row < 1 || row > kLadderRows) throw Error("ladder row must be in 1..14");
  FeatureFlags& f = c.model.flags;
  f = FeatureFlags{};
  f.sns = row >= 4;
  f.action = row >= 5;
  f.day = row >= 6;
  f.second = row >= 7;
  f.profile = row >= 8;
  f.tags = row >= 9;
  f.keywords = row >= 10;
  f.tweetnum = row >= 11;
  f.knn = row >= 13;
  c.train.objective = row >= 2 ? Objective::pairwise : Objective::pointwise;
  c.preprocess.filter = row >= 3;
  c.preprocess.supplement = row >= 14;
  if (row >= 12) {
    c.model.latent_dim = 100;
    c.train.learning_rate /= 4.0;
  }
}

}  // namespace socrec
