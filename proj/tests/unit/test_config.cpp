#include <fstream>

#include "doctest.h"
#include "helpers.hpp"
#include "socrec/config.hpp"

using namespace socrec;

TEST_CASE("config json round trip and hash") {
  RunConfig c;
  c.seed = 42;
  c.model.flags = FeatureFlags::all();
  c.train.lambda_overrides["q"] = 0.3;
  const RunConfig back = run_config_from_json(to_json(c));
  CHECK(to_json(back) == to_json(c));
  CHECK(config_hash(back) == config_hash(c));
  CHECK(config_hash(c).size() == 16);
  CHECK(config_stamp(c) == "config_hash=" + config_hash(c));

  RunConfig moved = c;
  moved.out_dir = "elsewhere";
  moved.data_dir = "/data";
  CHECK(config_hash(moved) == config_hash(c));
  RunConfig changed = c;
  changed.train.epochs += 1;
  CHECK(config_hash(changed) != config_hash(c));
}

TEST_CASE("unknown keys and bad values are rejected") {
  CHECK_THROWS_AS(run_config_from_json(nlohmann::json{{"sed", 1}}), ConfigError);
  CHECK_THROWS_AS(run_config_from_json(nlohmann::json{{"train", {{"epochs", "ten"}}}}), ConfigError);
  try {
    run_config_from_json(nlohmann::json{{"model", {{"latent_dim", 0}}}});
    FAIL("expected a config error");
  } catch (const ConfigError& e) {
    CHECK(e.field().rfind("model", 0) == 0);
  }
}

TEST_CASE("ladder rows") {
  RunConfig c;
  apply_ladder_row(c, 1);
  CHECK(c.train.objective == Objective::pointwise);
  CHECK_FALSE(c.preprocess.filter);
  CHECK(c.model.flags == FeatureFlags{});
  apply_ladder_row(c, 3);
  CHECK(c.train.objective == Objective::pairwise);
  CHECK(c.preprocess.filter);
  apply_ladder_row(c, 4);
  CHECK(c.model.flags.sns);
  CHECK_FALSE(c.model.flags.action);
  RunConfig full;
  const double lr = full.train.learning_rate;
  apply_ladder_row(full, kLadderRows);
  CHECK(full.model.flags == FeatureFlags::all());
  CHECK(full.preprocess.supplement);
  CHECK(full.model.latent_dim == 100);
  CHECK(full.train.learning_rate == lr / 4);
  CHECK_THROWS_AS(apply_ladder_row(c, 15), Error);
}

TEST_CASE("ladder_row in a file applies before explicit sections") {
  const auto dir = test::scratch_dir("config_file");
  {
    std::ofstream out(dir / "c.json");
    out << R"({"ladder_row": 14, "seed": 5, "model": {"latent_dim": 12}})";
  }
  const RunConfig c = load_config(dir / "c.json");
  CHECK(c.model.latent_dim == 12);
  CHECK(c.model.flags.knn);
  CHECK(c.seed == 5);
  CHECK(c.synthetic.seed == 5);
  CHECK(c.train.seed == 5);
}

TEST_CASE("shipped configs load") {
  for (const char* name : {"ladder.json", "smoke.json"}) {
    CHECK_NOTHROW(load_config(std::filesystem::path(SOCREC_CONFIG_DIR) / name));
  }
}
