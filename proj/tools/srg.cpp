// srg: command line driver.
// Exit codes: 0 success, 1 config error, 2 first-step failure, 3 flow failure, 4 validation failure.

#include <CLI11.hpp>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>

#include "srg/config.hpp"
#include "srg/firststep.hpp"
#include "srg/oracle.hpp"
#include "srg/rgflow.hpp"
#include "srg/wick.hpp"

using namespace srg;
namespace fs = std::filesystem;

namespace {

struct Common {
  std::string config;
  std::vector<std::string> set;
};

void add_common(CLI::App* sub, Common& c) {
  sub->add_option("-c,--config", c.config, "key = value config file");
  sub->add_option("-s,--set", c.set, "override, key=value (repeatable)");
}

fs::path out_path(const RunConfig& cfg, const std::string& name) {
  fs::create_directories(cfg.out_dir);
  return fs::path(cfg.out_dir) / name;
}

void write_file(const fs::path& p, const std::string& text) {
  std::ofstream f(p);
  if (!f) throw std::runtime_error("cannot write " + p.string());
  f << text;
}

int cmd_first_step(const RunConfig& cfg) {
  const ModelParams& p = cfg.model;
  const cplx z = cfg.flow.zeta_seed * p.mu();
  try {
    if (p.lambda0 > 0) {
      const double ratio = p.lambda0 * neumann_kappa(p);
      if (ratio >= 1.0) throw FirstStepError("first decimation diverges: Neumann ratio " + std::to_string(ratio), ratio);
    }
    const auto pieces = first_step_pieces(p, std::vector<cplx>{z}, p.lambda0 == 0.0 ? 0 : -1)[0];
    const auto seq = pieces.combine(p.lambda0);
    const auto rep = first_step_report(p, seq, pieces, cfg.flow.targets);
    write_file(out_path(cfg, "kernels.json"), seq.dump().dump(1) + "\n");
    const auto j = rep.dump(p);
    write_file(out_path(cfg, "first_step.json"), j.dump(1) + "\n");
    std::cout << j.dump() << "\n";
    if (!rep.margins.ok) {
      std::cerr << "first decimation failed: resolvent margins violated\n";
      return 2;
    }
  } catch (const FirstStepError& e) {
    std::cerr << e.what() << "\n";
    return 2;
  }
  return 0;
}

int cmd_flow(const RunConfig& cfg) {
  const ModelParams& p = cfg.model;
  try {
    const auto res = run_flow(p, cfg.flow);
    std::string trace;
    for (size_t n = 1; n < res.history.size(); ++n) trace += res.history[n].trace().dump() + "\n";
    write_file(out_path(cfg, "flow_trace.jsonl"), trace);
    write_file(out_path(cfg, "flow.csv"), flow_csv_header() + "\n" + flow_csv_row(p, res) + "\n");
    const auto s = res.summary();
    write_file(out_path(cfg, "flow_summary.json"), s.dump(1) + "\n");
    std::cout << std::setprecision(17) << "z_inf=" << res.z_inf.real() << " alpha=" << res.alpha
              << " beta=" << res.beta.x() << "," << res.beta.y() << "," << res.beta.z()
              << " iterations=" << res.iterations << " converged=" << (res.converged ? 1 : 0) << "\n";
    return res.converged ? 0 : 3;
  } catch (const FirstStepError& e) {
    std::cerr << e.what() << "\n";
    return 2;
  } catch (const FlowError& e) {
    std::cerr << e.what() << " (iteration " << e.iteration() << ")\n";
    std::cerr << "last good: " << e.last_good().dump() << "\n";
    return 3;
  }
}

int cmd_dispersion(const RunConfig& cfg, bool with_rg) {
  std::function<double(const ModelParams&)> rg;
  if (with_rg) rg = [&](const ModelParams& q) { return run_flow(q, cfg.flow).z_inf.real(); };
  const auto rec = dispersion_sweep(cfg.model, cfg.sweep(), rg);
  const auto em = effective_mass(rec, cfg.model.m);
  std::ostringstream os;
  os << std::setprecision(17) << "p,E_oracle,E_rg,E_pt2,m_eff,gap,residual\n";
  for (const auto& r : rec) {
    os << r.p << ',' << r.e_oracle << ',' << r.e_rg << ',' << r.e_pt2 << ',' << em.m_fd << ',' << r.gap << ','
       << r.residual << '\n';
  }
  write_file(out_path(cfg, "dispersion.csv"), os.str());
  nlohmann::json j = {{"schema", "srg.dispersion/1"}, {"oracle", em.dump()}};
  if (with_rg) j["rg"] = effective_mass(rec, cfg.model.m, true).dump();
  write_file(out_path(cfg, "effective_mass.json"), j.dump(1) + "\n");
  std::cout << os.str();
  return 0;
}

int cmd_oracle(const RunConfig& cfg) {
  const ModelParams& p = cfg.model;
  const ModeGrid grid(p, p.levels);
  const FockBasis basis(grid, p.n_max);
  const auto gs = ground_energy(build_fiber_hamiltonian(p, basis), static_cast<unsigned>(cfg.seed));
  nlohmann::json j = {{"schema", "srg.oracle/1"}, {"p", p.p.x()},          {"energy", gs.energy},
                      {"pt2", pt2_energy(p, grid)}, {"gap", gs.gap},      {"residual", gs.residual},
                      {"dim", 2 * basis.dim()},     {"iterations", gs.iterations}};
  write_file(out_path(cfg, "oracle.json"), j.dump(1) + "\n");
  std::cout << j.dump() << "\n";
  return 0;
}

int cmd_validate(const RunConfig& cfg) {
  const ModelParams& p = cfg.model;
  nlohmann::json checks = nlohmann::json::array();
  bool all = true;
  auto check = [&](const std::string& name, bool ok, double value, double bound) {
    checks.push_back({{"check", name}, {"pass", ok}, {"value", value}, {"bound", bound}});
    all = all && ok;
  };
  FlowResult res;
  try {
    res = run_flow(p, cfg.flow);
  } catch (const FirstStepError& e) {
    std::cerr << e.what() << "\n";
    return 2;
  } catch (const FlowError& e) {
    std::cerr << e.what() << " (iteration " << e.iteration() << ")\n";
    return 3;
  }
  check("flow_converged", res.converged, res.iterations, cfg.flow.n_max);
  const ModeGrid grid(p, p.levels);
  const auto gs = ground_energy(build_fiber_hamiltonian(p, FockBasis(grid, p.n_max)), static_cast<unsigned>(cfg.seed));
  const double dz = std::abs(res.z_inf.real() - gs.energy);
  const double bound = std::max(1e-3 * std::abs(gs.energy), 1e-8 * p.m);
  check("rg_vs_oracle", dz <= bound, dz, bound);
  const FockBasis small(grid, std::min(p.n_max, 2));
  const VecX psi = ground_state(p, res, small);
  const double resid = (build_fiber_hamiltonian(p, small) * psi - res.z_inf * psi).norm();
  check("ground_state_residual", resid <= 1e-6, resid, 1e-6);
  const double ab = std::max(std::abs(res.alpha - 1.0), (res.beta + p.p / p.m).norm());
  const double ab_bound = cfg.flow.targets.gamma(p) + cfg.flow.targets.eps(p);
  check("alpha_beta", ab <= ab_bound, ab, ab_bound);
  double worst = 0;
  for (const auto& st : res.history) {
    if (st.n > cfg.flow.burn_in && st.ledger.eps > 1e-14) worst = std::max(worst, st.eps_ratio);
  }
  check("eps_contraction", worst <= 0.5 * cfg.flow.eps_slack, worst, 0.5 * cfg.flow.eps_slack);
  const nlohmann::json j = {{"schema", "srg.validate/1"}, {"pass", all}, {"checks", checks}};
  write_file(out_path(cfg, "validate.json"), j.dump(1) + "\n");
  std::cout << j.dump() << "\n";
  return all ? 0 : 4;
}

int cmd_wick(const RunConfig& cfg, int depth, int legs) {
  const auto rep = wick_check(depth, legs, static_cast<unsigned>(cfg.seed));
  std::cout << rep.dump().dump() << "\n";
  std::cout << std::setprecision(3) << "max deviation " << rep.max_dev << "\n";
  return rep.max_dev <= 1e-11 ? 0 : 4;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"spectral renormalization group for the dipole fiber Hamiltonian"};
  app.require_subcommand(1);
  Common common;
  auto* dump = app.add_subcommand("config-dump", "print the effective configuration with every key documented");
  auto* first = app.add_subcommand("first-step", "first decimation: kernel dump and report");
  auto* flow = app.add_subcommand("flow", "iterate the renormalization map");
  auto* disp = app.add_subcommand("dispersion", "oracle dispersion sweep and effective mass");
  auto* orc = app.add_subcommand("oracle", "direct diagonalization at the configured momentum");
  auto* val = app.add_subcommand("validate", "RG against the oracle and the flow invariants");
  auto* wick = app.add_subcommand("wick-check", "Wick reassembly identity suite");
  for (auto* s : {dump, first, flow, disp, orc, val, wick}) add_common(s, common);
  bool with_rg = false;
  disp->add_flag("--rg", with_rg, "also run the flow at every momentum");
  int depth = 3, legs = 2;
  wick->add_option("--depth", depth, "largest chain length");
  wick->add_option("--legs", legs, "largest M+N");
  CLI11_PARSE(app, argc, argv);

  RunConfig cfg;
  try {
    cfg = load_config(common.config, common.set);
  } catch (const std::exception& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 1;
  }
  try {
    if (*dump) {
      std::cout << dump_config(cfg);
      return 0;
    }
    if (*first) return cmd_first_step(cfg);
    if (*flow) return cmd_flow(cfg);
    if (*disp) return cmd_dispersion(cfg, with_rg);
    if (*orc) return cmd_oracle(cfg);
    if (*val) return cmd_validate(cfg);
    if (*wick) return cmd_wick(cfg, depth, legs);
  } catch (const FirstStepError& e) {
    std::cerr << e.what() << "\n";
    return 2;
  } catch (const FlowError& e) {
    std::cerr << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
