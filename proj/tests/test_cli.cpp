#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "srg/config.hpp"

using namespace srg;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path d = fs::temp_directory_path() / ("srg_cli_" + name);
  fs::remove_all(d);
  fs::create_directories(d);
  return d;
}

int run(const std::string& args, const fs::path& log) {
  const std::string cmd = std::string(SRG_CLI_PATH) + " " + args + " > " + log.string() + " 2>&1";
  const int rc = std::system(cmd.c_str());
  return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("config parsing") {
  const auto cfg = parse_config("# comment\nlambda0 = 0.002  # trailing\np = 0.1, 0, 0\nlevels=6\n\n");
  CHECK(cfg.model.lambda0 == 0.002);
  CHECK(cfg.model.p.x() == 0.1);
  CHECK(cfg.model.levels == 6);
  CHECK_THROWS_AS(parse_config("nonsense = 1"), ConfigError);
  CHECK_THROWS_AS(parse_config("levels = 6\nlevels = 7"), ConfigError);
  CHECK_THROWS_AS(parse_config("levels = six"), ConfigError);
  CHECK_THROWS_AS(parse_config("levels"), ConfigError);
  CHECK_THROWS_AS(parse_config("p = 1,2,3,4"), ConfigError);
  CHECK_THROWS_AS(parse_config("z_samples = 8"), ConfigError);
  CHECK_THROWS_AS(parse_config("zeta_seed = 0.5"), ConfigError);
  const auto o = parse_config("levels = 6", {"levels=8", "levels=9"});
  CHECK(o.model.levels == 9);
}

TEST_CASE("config dump round trip") {
  RunConfig c;
  c.model.lambda0 = 0.00123;
  c.model.p = Vec3(0.1, 0, 0);
  c.flow.tol = 3e-11;
  c.out_dir = "/tmp/x";
  const std::string text = dump_config(c);
  for (const auto& k : config_keys()) CHECK(text.find("\n" + k.name + " = ") != std::string::npos);
  const RunConfig back = parse_config(text);
  CHECK(dump_config(back) == text);
  CHECK(back.model.p == c.model.p);
  CHECK(back.flow.tol == c.flow.tol);
  const auto sw = back.sweep();
  REQUIRE(sw.size() == 9);
  CHECK(sw[4] == 0.0);
  CHECK(sw[0] == -sw[8]);
}

TEST_CASE("cli subcommands") {
  const fs::path d = scratch("run");
  const fs::path cfg = d / "small.cfg";
  std::ofstream(cfg) << "levels = 5\nlambda0 = 0.002\np = 0.2\nout_dir = " << d.string() << "\n";
  const std::string c = "-c " + cfg.string();

  CHECK(run("config-dump " + c, d / "dump.log") == 0);
  CHECK(slurp(d / "dump.log").find("lambda0 = 0.002") != std::string::npos);

  CHECK(run("first-step " + c, d / "fs.log") == 0);
  const auto fsj = nlohmann::json::parse(slurp(d / "first_step.json"));
  CHECK(fsj.contains("neumann_ratio"));
  CHECK(nlohmann::json::parse(slurp(d / "kernels.json")).is_object());

  CHECK(run("flow " + c, d / "flow.log") == 0);
  CHECK(slurp(d / "flow.log").find("converged=1") != std::string::npos);
  const auto summary = nlohmann::json::parse(slurp(d / "flow_summary.json"));
  CHECK(summary["converged"] == true);
  CHECK(summary["z_inf"][0].get<double>() < 0);
  CHECK(slurp(d / "flow.csv").rfind("p,z_inf,alpha,beta,iterations,converged\n", 0) == 0);
  CHECK(!slurp(d / "flow_trace.jsonl").empty());

  CHECK(run("oracle " + c, d / "oracle.log") == 0);
  const auto orc = nlohmann::json::parse(slurp(d / "oracle.json"));
  CHECK(std::abs(orc["energy"].get<double>() - summary["z_inf"][0].get<double>()) <
        1e-3 * std::abs(orc["energy"].get<double>()));

  CHECK(run("validate " + c, d / "validate.log") == 0);
  CHECK(nlohmann::json::parse(slurp(d / "validate.json"))["pass"] == true);

  CHECK(run("dispersion " + c + " -s levels=4 -s p_points=5", d / "disp.log") == 0);
  const std::string csv = slurp(d / "dispersion.csv");
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 6);
  CHECK(nlohmann::json::parse(slurp(d / "effective_mass.json")).contains("oracle"));

  CHECK(run("wick-check --depth 2 --legs 2", d / "wick.log") == 0);
  CHECK(slurp(d / "wick.log").find("max deviation") != std::string::npos);
}

TEST_CASE("cli exit codes") {
  const fs::path d = scratch("codes");
  CHECK(run("flow -s bogus=1", d / "a.log") == 1);
  CHECK(slurp(d / "a.log").find("unknown key") != std::string::npos);
  CHECK(run("flow -c " + (d / "missing.cfg").string(), d / "b.log") == 1);
  CHECK(run("first-step -s levels=5 -s lambda0=5 -s out_dir=" + d.string(), d / "c.log") == 2);
  CHECK(slurp(d / "c.log").find("diverges") != std::string::npos);
  CHECK(run("flow -s levels=5 -s lambda0=5 -s out_dir=" + d.string(), d / "d.log") == 2);
  CHECK(run("", d / "e.log") != 0);
}
