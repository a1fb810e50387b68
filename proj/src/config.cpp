#include "srg/config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>

namespace srg {

namespace {

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

std::string fmt(double x) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, res.ptr);
}

double to_double(const std::string& key, const std::string& v) {
  double x = 0;
  const auto res = std::from_chars(v.data(), v.data() + v.size(), x);
  if (res.ec != std::errc() || res.ptr != v.data() + v.size()) throw ConfigError(key + ": not a number: '" + v + "'");
  return x;
}

long long to_int(const std::string& key, const std::string& v) {
  long long x = 0;
  const auto res = std::from_chars(v.data(), v.data() + v.size(), x);
  if (res.ec != std::errc() || res.ptr != v.data() + v.size()) throw ConfigError(key + ": not an integer: '" + v + "'");
  return x;
}

// up to 3 comma separated components
Vec3 to_vec(const std::string& key, const std::string& v) {
  Vec3 out = Vec3::Zero();
  std::stringstream ss(v);
  std::string part;
  int i = 0;
  while (std::getline(ss, part, ',')) {
    if (i == 3) throw ConfigError(key + ": at most 3 components");
    out[i++] = to_double(key, trim(part));
  }
  if (i == 0) throw ConfigError(key + ": empty vector");
  return out;
}

std::string vec_str(const Vec3& v) {
  if (v.y() == 0 && v.z() == 0) return fmt(v.x());
  return fmt(v.x()) + "," + fmt(v.y()) + "," + fmt(v.z());
}

struct Field {
  ConfigKey key;
  std::function<void(RunConfig&, const std::string&)> set;
  std::function<std::string(const RunConfig&)> get;
};

#define SRG_DBL(name, member, doc)                                                         \
  Field {                                                                                  \
    {name, doc}, [](RunConfig& c, const std::string& v) { c.member = to_double(name, v); }, \
        [](const RunConfig& c) { return fmt(c.member); }                                   \
  }
#define SRG_INT(name, member, doc)                                                                          \
  Field {                                                                                                   \
    {name, doc}, [](RunConfig& c, const std::string& v) { c.member = static_cast<int>(to_int(name, v)); }, \
        [](const RunConfig& c) { return std::to_string(c.member); }                                         \
  }

const std::vector<Field>& fields() {
  static const std::vector<Field> f = {
      SRG_DBL("m", model.m, "mass"),
      SRG_DBL("omega0", model.omega0, "level splitting"),
      SRG_DBL("lambda0", model.lambda0, "coupling constant"),
      Field{{"p_star", "reference momentum, comma separated components"},
            [](RunConfig& c, const std::string& v) { c.model.p_star = to_vec("p_star", v); },
            [](const RunConfig& c) { return vec_str(c.model.p_star); }},
      Field{{"p", "total momentum, comma separated components"},
            [](RunConfig& c, const std::string& v) { c.model.p = to_vec("p", v); },
            [](const RunConfig& c) { return vec_str(c.model.p); }},
      SRG_DBL("rho0", model.rho0, "first decimation scale, an integer power of the mode ratio"),
      SRG_DBL("rho", model.rho, "RG scale per step"),
      SRG_DBL("xi", model.xi, "kernel weight in the xi-norm"),
      SRG_INT("dim", model.dim, "spatial dimension, 1 or 3"),
      SRG_DBL("spin_x", model.spin_x, "d=1 spin coupling, sigma_x coefficient"),
      SRG_DBL("spin_z", model.spin_z, "d=1 spin coupling, sigma_z coefficient"),
      SRG_INT("m_max", model.m_max, "largest m+n kept in a kernel sequence"),
      SRG_INT("l_max", model.l_max, "series depth of the RG step"),
      SRG_INT("neumann_depth", model.neumann_depth, "Neumann depth of the first decimation"),
      SRG_INT("levels", model.levels, "radial photon shells of the physical grid"),
      SRG_INT("levels_per_rho", model.levels_per_rho, "shells per factor rho"),
      SRG_INT("n_dirs", model.n_dirs, "d=3 directions per shell"),
      SRG_INT("r_nodes_per_level", model.r_nodes_per_level, "kernel grid r nodes per shell"),
      SRG_INT("r_floor_levels", model.r_floor_levels, "kernel grid shells below the photon grid"),
      SRG_INT("t_nodes", model.t_nodes, "kernel grid nodes in l/r per component, odd"),
      SRG_DBL("uv_cutoff", model.uv_cutoff, "form factor cutoff"),
      SRG_INT("n_max", model.n_max, "photon number cap of the oracle"),
      SRG_INT("z_samples", flow.z_samples, "spectral parameter samples per stage"),
      SRG_INT("flow_n_max", flow.n_max, "iteration cap"),
      SRG_INT("flow_n_min", flow.n_min, "iterations before convergence is accepted"),
      SRG_DBL("tol", flow.tol, "convergence tolerance on e_{0,n}, in units of mu"),
      SRG_DBL("screen_tol", flow.screen_tol, "series terms with a smaller bound are skipped"),
      SRG_DBL("zeta_seed", flow.zeta_seed, "tracked spectral parameter, in units of mu"),
      SRG_DBL("eps_slack", flow.eps_slack, "slack on the polydisc targets"),
      SRG_INT("burn_in", flow.burn_in, "iterations before the polydisc is enforced"),
      SRG_DBL("c_gamma", flow.targets.c_gamma, "gamma target multiplier"),
      SRG_DBL("c_delta", flow.targets.c_delta, "delta target multiplier"),
      SRG_DBL("c_eps", flow.targets.c_eps, "eps target multiplier"),
      SRG_DBL("p_max", p_max, "dispersion sweep half width"),
      SRG_INT("p_points", p_points, "dispersion sweep points, odd"),
      Field{{"out_dir", "output directory"}, [](RunConfig& c, const std::string& v) { c.out_dir = v; },
            [](const RunConfig& c) { return c.out_dir; }},
      Field{{"seed", "solver start vector seed"},
            [](RunConfig& c, const std::string& v) { c.seed = static_cast<std::uint64_t>(to_int("seed", v)); },
            [](const RunConfig& c) { return std::to_string(c.seed); }},
  };
  return f;
}

#undef SRG_DBL
#undef SRG_INT

}  // namespace

std::vector<double> RunConfig::sweep() const {
  std::vector<double> ps(static_cast<size_t>(p_points));
  const int h = p_points / 2;
  for (int i = 0; i < p_points; ++i) ps[i] = p_max * (i - h) / h;
  return ps;
}

void RunConfig::validate() const {
  try {
    model.validate();
  } catch (const ParamError& e) {
    throw ConfigError(e.what());
  }
  if (flow.z_samples < 3 || flow.z_samples > 16 || flow.z_samples % 2 == 0) {
    throw ConfigError("z_samples: must be odd and in 3..15");
  }
  if (flow.n_max < 1) throw ConfigError("flow_n_max: must be positive");
  if (!(std::abs(flow.zeta_seed) < 0.5)) throw ConfigError("zeta_seed: must lie in (-1/2, 1/2)");
  if (!(flow.tol > 0)) throw ConfigError("tol: must be positive");
  if (p_points < 3 || p_points % 2 == 0) throw ConfigError("p_points: must be odd and at least 3");
  if (!(p_max > 0)) throw ConfigError("p_max: must be positive");
}

const std::vector<ConfigKey>& config_keys() {
  static const std::vector<ConfigKey> keys = [] {
    std::vector<ConfigKey> k;
    for (const auto& f : fields()) k.push_back(f.key);
    return k;
  }();
  return keys;
}

RunConfig parse_config(const std::string& text, const std::vector<std::string>& overrides) {
  std::map<std::string, const Field*> by_name;
  for (const auto& f : fields()) by_name[f.key.name] = &f;
  RunConfig cfg;
  std::set<std::string> seen;
  auto apply = [&](std::string line, const std::string& where, bool unique) {
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) return;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError(where + ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    const auto it = by_name.find(key);
    if (it == by_name.end()) throw ConfigError(where + ": unknown key '" + key + "'");
    if (!seen.insert(key).second && unique) throw ConfigError(where + ": duplicate key '" + key + "'");
    it->second->set(cfg, trim(line.substr(eq + 1)));
  };
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) apply(line, "line " + std::to_string(++lineno), true);
  for (const auto& o : overrides) apply(o, "override '" + o + "'", false);
  cfg.validate();
  return cfg;
}

RunConfig load_config(const std::string& path, const std::vector<std::string>& overrides) {
  std::string text;
  if (!path.empty()) {
    std::ifstream f(path);
    if (!f) throw ConfigError("cannot read " + path);
    std::stringstream ss;
    ss << f.rdbuf();
    text = ss.str();
  }
  return parse_config(text, overrides);
}

std::string dump_config(const RunConfig& cfg) {
  std::string out;
  for (const auto& f : fields()) {
    out += "# " + f.key.doc + "\n";
    out += f.key.name + " = " + f.get(cfg) + "\n";
  }
  return out;
}

}  // namespace srg
