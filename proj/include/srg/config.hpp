#pragma once
// Run configuration: plain-text `key = value` files with `#` comments.

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "srg/model.hpp"
#include "srg/rgflow.hpp"

namespace srg {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct RunConfig {
  ModelParams model;
  FlowOptions flow;
  // dispersion sweep: p_points values on [-p_max, p_max] along e_x
  double p_max = 0.4;
  int p_points = 9;
  std::string out_dir = ".";
  std::uint64_t seed = 1;

  std::vector<double> sweep() const;
  void validate() const;
};

struct ConfigKey {
  std::string name;
  std::string doc;
};
// every accepted key, in dump order
const std::vector<ConfigKey>& config_keys();

// overrides are `key=value` strings applied after the file and may repeat file keys
RunConfig parse_config(const std::string& text, const std::vector<std::string>& overrides = {});
// an empty path means all defaults
RunConfig load_config(const std::string& path, const std::vector<std::string>& overrides = {});
// round-trips through parse_config; documented keys as comments
std::string dump_config(const RunConfig& cfg);

}  // namespace srg
