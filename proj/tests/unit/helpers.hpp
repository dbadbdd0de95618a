#pragma once

#include <filesystem>
#include <random>
#include <string>

#include "socrec/synthetic.hpp"

namespace socrec::test {

inline SyntheticConfig small_world(std::uint64_t seed, std::size_t users = 300, std::size_t items = 40) {
  SyntheticConfig s;
  s.n_users = users;
  s.n_items = items;
  s.n_records = 20 * users;
  s.latent_dim = 4;
  s.mean_follows = 4.0;
  s.positive_rate = 0.03;
  s.seed = seed;
  return s;
}

/// Fresh empty directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / ("socrec_unit_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace socrec::test
