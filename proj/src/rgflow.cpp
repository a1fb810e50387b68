#include "srg/rgflow.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <numbers>
#include <sstream>

#include "srg/oracle.hpp"
#include "srg/wick.hpp"

namespace srg {

nlohmann::json FlowOptions::dump() const {
  return {{"z_samples", z_samples}, {"n_max", n_max},         {"n_min", n_min},     {"tol", tol},
          {"screen_tol", screen_tol}, {"zeta_seed", zeta_seed}, {"eps_slack", eps_slack}, {"burn_in", burn_in}};
}

std::vector<double> chebyshev_nodes(int n, double h) {
  std::vector<double> x(static_cast<size_t>(n));
  for (int j = 0; j < n; ++j) x[j] = h * std::cos((2.0 * j + 1.0) * std::numbers::pi / (2.0 * n));
  if (n % 2 == 1) x[n / 2] = 0.0;
  return x;
}

std::vector<cplx> barycentric_coeffs(const std::vector<double>& nodes, cplx z) {
  const int n = static_cast<int>(nodes.size());
  std::vector<cplx> c(static_cast<size_t>(n), 0.0);
  for (int j = 0; j < n; ++j) {
    if (z == nodes[j]) {
      c[j] = 1.0;
      return c;
    }
  }
  cplx den = 0;
  for (int j = 0; j < n; ++j) {
    const double w = ((j % 2) ? -1.0 : 1.0) * std::sin((2.0 * j + 1.0) * std::numbers::pi / (2.0 * n));
    c[j] = w / (z - nodes[j]);
    den += c[j];
  }
  for (auto& x : c) x /= den;
  return c;
}

cplx barycentric(const std::vector<double>& nodes, const std::vector<cplx>& values, cplx z) {
  const auto c = barycentric_coeffs(nodes, z);
  cplx s = 0;
  for (size_t j = 0; j < c.size(); ++j) s += c[j] * values[j];
  return s;
}

KernelSequence interpolate_sequence(const std::vector<KernelSequence>& samples, const std::vector<double>& nodes,
                                    cplx z) {
  const auto c = barycentric_coeffs(nodes, z);
  KernelSequence out(samples[0].grid, samples[0].modes);
  out.p = samples[0].p;
  out.z = z;
  for (const auto& s : samples) out.dropped_mass = std::max(out.dropped_mass, s.dropped_mass);
  for (const auto& [key, k] : samples[0].kernels) {
    Kernel& o = out.add(key.first, key.second);
    for (size_t j = 0; j < samples.size(); ++j) {
      if (c[j] == 0.0) continue;
      const Kernel* src = samples[j].find(key.first, key.second);
      for (size_t i = 0; i < o.data.size(); ++i) o.data[i] += c[j] * src->data[i];
    }
  }
  return out;
}

EInverse e_rho_inverse(const std::function<cplx(cplx)>& g, double rho, cplx zeta, double mu) {
  EInverse res;
  auto h = [&](cplx z) { return g(z) + rho * zeta; };
  const double tol = 1e-12 * mu;
  const double dz = 1e-5 * mu;
  cplx z = rho * zeta;
  for (int it = 0; it < 50; ++it) {
    const cplx hz = h(z);
    res.iterations = it;
    if (std::abs(hz) < tol) {
      res.z = z;
      res.residual = std::abs(hz);
      return res;
    }
    const cplx d = (h(z + dz) - h(z - dz)) / (2.0 * dz);
    if (!std::isfinite(std::abs(d)) || d == 0.0) break;
    const cplx zn = z - hz / d;
    if (!std::isfinite(std::abs(zn)) || std::abs(zn) > mu) break;
    z = zn;
  }
  // bisection on the real segment
  if (zeta.imag() == 0.0) {
    double a = -0.5 * mu, b = 0.5 * mu;
    double fa = h(a).real(), fb = h(b).real();
    if (fa * fb <= 0) {
      for (int it = 0; it < 200 && b - a > 1e-15 * mu; ++it) {
        const double c = 0.5 * (a + b);
        const double fc = h(c).real();
        if ((fc <= 0) == (fa <= 0)) {
          a = c;
          fa = fc;
        } else {
          b = c;
        }
      }
      res.z = 0.5 * (a + b);
      res.residual = std::abs(h(res.z));
      res.bisected = true;
      if (res.residual < 1e3 * tol) return res;
    }
  }
  throw FlowError("E_rho inversion failed", -1);
}

nlohmann::json StepReport::dump() const {
  return {{"specs_evaluated", specs_evaluated},
          {"specs_screened", specs_screened},
          {"screened_mass", screened_mass},
          {"feshbach_margin", feshbach_margin},
          {"order_size", order_size}};
}

namespace {

using ZVal = Batch<cplx>;

double kernel_sup(const Kernel& k) {
  double s = 0;
  for (const auto& v : k.data) s = std::max(s, std::abs(v));
  return s;
}

ModeGrid truncated(const ModeGrid& g, int drop) {
  ModeGrid out = g;
  out.levels = std::max(0, g.levels - drop);
  out.modes.resize(static_cast<size_t>(out.levels * out.per_level));
  return out;
}

}  // namespace

std::vector<KernelSequence> feshbach_scale_step(const std::vector<KernelSequence>& seqs, const ModelParams& params,
                                                const FlowOptions& opt, StepReport* report) {
  const int nz = static_cast<int>(seqs.size());
  if (nz < 1 || nz > ZVal::kMax) throw std::invalid_argument("feshbach_scale_step: 1..16 samples");
  const double rho = params.rho;
  const int S = params.rho_levels();
  const KernelGrid& grid = seqs[0].grid;
  const ModeGrid& G = seqs[0].modes;
  const ModeGrid Gn = truncated(G, S);
  const int nodes = grid.nodes();
  StepReport rep;
  rep.order_size.assign(static_cast<size_t>(params.l_max + 1), 0.0);

  // Feshbach pair check on Ran chibar_rho
  rep.feshbach_margin = std::numeric_limits<double>::infinity();
  double fsup = 0;
  for (const auto& s : seqs) {
    const Kernel* w00 = s.find(0, 0);
    if (!w00) throw std::invalid_argument("feshbach_scale_step: missing (0,0) kernel");
    for (int nd = 0; nd < nodes; ++nd) {
      const double r = grid.node_r(nd);
      if (r < 0.75 * rho || !grid.in_base(nd)) continue;
      const double a = std::abs(w00->data[nd]);
      rep.feshbach_margin = std::min(rep.feshbach_margin, a);
      const double cb = chibar(r, rho);
      fsup = std::max(fsup, cb * cb / a);
    }
  }
  if (!(rep.feshbach_margin > 1e-10)) {
    throw FlowError("not a Feshbach pair: w00 vanishes on Ran chibar (margin " +
                        std::to_string(rep.feshbach_margin) + ")",
                    -1);
  }

  std::vector<KernelSequence> out;
  for (int j = 0; j < nz; ++j) {
    KernelSequence o(grid, Gn);
    o.p = seqs[j].p;
    o.z = seqs[j].z;
    Kernel& w = o.add(0, 0);
    const Kernel& src = *seqs[j].find(0, 0);
    for (int nd = 0; nd < nodes; ++nd) w.data[nd] = seqs[j].eval(src, 0, rho * grid.node_r(nd), rho * grid.node_l(nd)) / rho;
    for (int mn = 1; mn <= params.m_max; ++mn) {
      for (int m = 0; m <= mn; ++m) o.add(m, mn - m);
    }
    out.push_back(std::move(o));
  }

  std::map<std::pair<int, int>, double> sup;
  for (const auto& s : seqs) {
    for (const auto& [key, k] : s.kernels) sup[key] = std::max(sup[key], kernel_sup(k));
  }
  std::vector<int> ext_map(static_cast<size_t>(Gn.size()));
  for (int j = 0; j < Gn.size(); ++j) ext_map[j] = G.index(Gn.modes[j].level + S, Gn.modes[j].slot);

  ZVal zero;
  zero.n = nz;
  for (int j = 0; j < nz; ++j) zero.v[j] = 0.0;
  ChainContext<ZVal> ctx;
  ctx.modes = &G;
  ctx.rho = rho;
  ctx.chi_ends = true;
  ctx.project_reduced = true;
  std::vector<std::map<std::pair<int, int>, const Kernel*>> kz(static_cast<size_t>(nz));
  for (int j = 0; j < nz; ++j) {
    for (const auto& [key, k] : seqs[j].kernels) kz[j][key] = &k;
  }
  ctx.vertex = [&](int M, int N, const int* md, double r, const Vec3& l) {
    int idx[16];
    double w[16];
    const int c = grid.stencil(r, l, idx, w);
    const int tu = seqs[0].tuple_index(md, M + N);
    ZVal v;
    v.n = nz;
    for (int j = 0; j < nz; ++j) {
      const auto it = kz[j].find({M, N});
      cplx s = 0;
      if (it != kz[j].end()) {
        const cplx* base = it->second->data.data() + static_cast<size_t>(tu) * nodes;
        for (int i = 0; i < c; ++i) s += w[i] * base[idx[i]];
      }
      v.v[j] = s;
    }
    return v;
  };
  ctx.F = [&](double r, const Vec3& l) {
    ZVal f;
    f.n = nz;
    const double cb = chibar(r, rho);
    if (cb == 0.0) {
      for (int j = 0; j < nz; ++j) f.v[j] = 0.0;
      return f;
    }
    int idx[16];
    double w[16];
    const int c = grid.stencil(r, l, idx, w);
    for (int j = 0; j < nz; ++j) {
      const cplx* base = kz[j][{0, 0}]->data.data();
      cplx s = 0;
      for (int i = 0; i < c; ++i) s += w[i] * base[idx[i]];
      f.v[j] = cb * cb / s;
    }
    return f;
  };
  auto allowed = [&](int mi, int ni) { return mi + ni >= 1 && mi + ni <= params.m_max; };
  const double wsum = G.weight_sum();
  double emin = 1.0;
  for (const auto& md : Gn.modes) emin = std::min(emin, md.energy);

  for (int L = 1; L <= params.l_max; ++L) {
    for (int mn = 0; mn <= params.m_max; ++mn) {
      if (mn == 0 && L == 1) continue;
      for (int M = 0; M <= mn; ++M) {
        const int N = mn - M;
        if (mn > 0 && Gn.size() == 0) continue;
        const double sign = (L % 2 == 1) ? 1.0 : -1.0;
        const cplx coeff = sign * std::pow(rho, 1.5 * mn - 1.0);
        auto skip = [&](const TermSpec& spec) {
          double b = std::abs(coeff) * combinatorial_weight(spec).convert_to<double>();
          for (const auto& v : spec.v) {
            const auto it = sup.find({v.m + v.p, v.n + v.q});
            b *= it == sup.end() ? 0.0 : it->second;
          }
          b *= std::pow(fsup, L - 1) * std::pow(wsum, spec.lines());
          if (b >= opt.screen_tol) return false;
          ++rep.specs_screened;
          rep.screened_mass += b * std::pow(params.xi, -mn) * std::pow(emin, -0.5 * mn);
          return true;
        };
        std::vector<cplx*> dst(static_cast<size_t>(nz));
        for (int j = 0; j < nz; ++j) dst[j] = out[j].find(M, N)->data.data();
        double& osz = rep.order_size[L];
        rep.specs_evaluated += accumulate_series<ZVal>(ctx, grid, ext_map, M, N, L, allowed, coeff, zero,
                                                       [&](int tu, int nd, cplx c, const ZVal& V) {
                                                         const size_t at = static_cast<size_t>(tu) * nodes + nd;
                                                         for (int j = 0; j < nz; ++j) {
                                                           const cplx x = c * V.v[j];
                                                           dst[j][at] += x;
                                                           osz = std::max(osz, std::abs(x));
                                                         }
                                                       },
                                                       skip);
      }
    }
  }
  for (auto& o : out) {
    for (auto& [key, k] : o.kernels) symmetrize(k.data, Gn.size(), key.first, key.second, nodes);
  }
  double carried = 0;
  for (const auto& s : seqs) carried = std::max(carried, s.dropped_mass);
  for (auto& o : out) o.dropped_mass = rho * carried + rep.screened_mass;
  if (report) *report = rep;
  return out;
}

namespace {

std::function<cplx(cplx)> g_of(const FlowState& st) {
  return [&st](cplx z) { return barycentric(st.zeta, st.g, z); };
}

void fill_diagnostics(FlowState& st, const ModelParams& params) {
  st.g.clear();
  NormLedger worst;
  for (const auto& s : st.seqs) {
    st.g.push_back(s.eval(0, 0, 0, 0.0, Vec3::Zero()));
    const NormLedger led = polydisc_measure(s, params.m, params.xi);
    worst.gamma = std::max(worst.gamma, led.gamma);
    worst.delta = std::max(worst.delta, led.delta);
    worst.eps = std::max(worst.eps, led.eps);
    worst.dropped = std::max(worst.dropped, led.dropped);
    for (const auto& [key, v] : led.sharp) worst.sharp[key] = std::max(worst.sharp[key], v);
  }
  st.ledger = worst;
  const double mu = params.mu();
  const double dz = 1e-5 * mu;
  st.c_measured = 0;
  for (double z : st.zeta) {
    const cplx d = (barycentric(st.zeta, st.g, z + dz) - barycentric(st.zeta, st.g, z - dz)) / (2.0 * dz);
    st.c_measured = std::max(st.c_measured, std::abs(d + 1.0));
  }
  const auto [a, b] = extract_alpha_beta(st, 0.0);
  st.alpha = a;
  st.beta = b;
}

void check_polydisc(const FlowState& st, const ModelParams& params, const FlowOptions& opt, const nlohmann::json& last) {
  const auto& t = opt.targets;
  const double s = opt.eps_slack;
  if (st.ledger.gamma > s * t.gamma(params) || st.ledger.delta > s * t.delta(params) ||
      st.ledger.eps > s * t.eps(params) || !std::isfinite(st.ledger.eps)) {
    throw FlowError("polydisc escape at iteration " + std::to_string(st.n), st.n, last);
  }
}

}  // namespace

nlohmann::json FlowState::trace() const {
  nlohmann::json j;
  j["n"] = n;
  j["ledger"] = ledger.dump();
  j["e0"] = {e0.real(), e0.imag()};
  j["alpha"] = alpha;
  j["beta"] = {beta.x(), beta.y(), beta.z()};
  j["eps_ratio"] = eps_ratio;
  j["cauchy_ratio"] = cauchy_ratio;
  j["c_measured"] = c_measured;
  j["modes"] = seqs.empty() ? 0 : seqs[0].modes.size();
  j["step"] = step.dump();
  return j;
}

FlowState initial_state(const ModelParams& params, const FlowOptions& opt) {
  params.validate();
  if (params.lambda0 > 0) {
    const double ratio = params.lambda0 * neumann_kappa(params);
    if (ratio >= 1.0) throw FirstStepError("first decimation diverges: Neumann ratio " + std::to_string(ratio), ratio);
  }
  FlowState st;
  st.zeta = chebyshev_nodes(opt.z_samples, 0.5 * params.mu());
  std::vector<cplx> zs(st.zeta.begin(), st.zeta.end());
  for (const auto& pc : first_step_pieces(params, zs, params.lambda0 == 0.0 ? 0 : -1)) st.seqs.push_back(pc.combine(params.lambda0));
  fill_diagnostics(st, params);
  return st;
}

FlowState renormalize(const FlowState& state, const ModelParams& params, const FlowOptions& opt) {
  const double mu = params.mu();
  const double rho = params.rho;
  FlowState next;
  next.n = state.n + 1;
  next.zeta = chebyshev_nodes(opt.z_samples, 0.5 * mu);
  const auto g = g_of(state);
  std::vector<KernelSequence> at_z;
  for (double zeta : next.zeta) {
    EInverse inv;
    try {
      inv = e_rho_inverse(g, rho, zeta, mu);
    } catch (const FlowError&) {
      throw FlowError("E_rho inversion failed at iteration " + std::to_string(state.n), state.n, state.trace());
    }
    if (std::abs(inv.z) >= 0.5 * mu || std::abs(g(inv.z)) >= 0.5 * mu * rho) {
      throw FlowError("spectral parameter left U[w00] at iteration " + std::to_string(state.n), state.n, state.trace());
    }
    at_z.push_back(interpolate_sequence(state.seqs, state.zeta, inv.z));
  }
  try {
    next.seqs = feshbach_scale_step(at_z, params, opt, &next.step);
  } catch (const FlowError& e) {
    throw FlowError(std::string(e.what()) + " at iteration " + std::to_string(state.n), state.n, state.trace());
  }
  for (size_t j = 0; j < next.seqs.size(); ++j) next.seqs[j].z = next.zeta[j];
  fill_diagnostics(next, params);
  next.eps_ratio = state.ledger.eps > 0 ? next.ledger.eps / state.ledger.eps : 0.0;
  if (next.n > opt.burn_in) check_polydisc(next, params, opt, state.trace());
  return next;
}

cplx e_composition(const std::vector<FlowState>& history, int n, cplx zeta, double rho, double mu,
                   std::vector<cplx>* chain) {
  cplx z = zeta;
  if (chain) chain->assign(static_cast<size_t>(n + 1), 0.0);
  if (chain) (*chain)[n] = z;
  for (int k = n - 1; k >= 0; --k) {
    z = e_rho_inverse(g_of(history[k]), rho, z, mu).z;
    if (chain) (*chain)[k] = z;
  }
  return z;
}

std::pair<double, Vec3> extract_alpha_beta(const FlowState& st, cplx zeta) {
  const KernelSequence s = interpolate_sequence(st.seqs, st.zeta, zeta);
  const KernelGrid& g = s.grid;
  const int origin = g.node(0, g.nt() / 2);
  cplx dr, dl[3];
  node_derivatives(g, s.find(0, 0)->data.data(), origin, dr, dl);
  return {dr.real(), Vec3(dl[0].real(), dl[1].real(), dl[2].real())};
}

nlohmann::json FlowResult::summary() const {
  nlohmann::json j;
  j["schema"] = "srg.flow/1";
  j["z_inf"] = {z_inf.real(), z_inf.imag()};
  j["converged"] = converged;
  j["iterations"] = iterations;
  j["alpha"] = alpha;
  j["beta"] = {beta.x(), beta.y(), beta.z()};
  return j;
}

FlowResult run_flow_from(FlowState start, const ModelParams& params, const FlowOptions& opt) {
  const double mu = params.mu();
  const double rho = params.rho;
  const cplx seed = opt.zeta_seed * mu;
  if (!(std::abs(opt.zeta_seed) < 0.5)) throw FlowError("zeta_seed outside |z| < mu/2", 0);
  FlowResult res;
  start.e0 = seed;
  res.history.push_back(std::move(start));
  cplx e_prev = seed;
  double diff_prev = -1;
  for (int n = 0; n < opt.n_max; ++n) {
    FlowState next = renormalize(res.history.back(), params, opt);
    res.history.push_back(std::move(next));
    const int m = static_cast<int>(res.history.size()) - 1;
    const cplx e = e_composition(res.history, m, seed, rho, mu);
    FlowState& cur = res.history.back();
    cur.e0 = e;
    const double diff = std::abs(e - e_prev);
    if (diff_prev > 0) cur.cauchy_ratio = diff / diff_prev;
    diff_prev = diff;
    e_prev = e;
    res.iterations = m;
    if (diff < opt.tol * mu && m >= opt.n_min) {
      res.converged = true;
      break;
    }
  }
  const int last = static_cast<int>(res.history.size()) - 1;
  const cplx e = e_composition(res.history, last, seed, rho, mu, &res.z_chain);
  res.z_inf = params.rho0 * e;
  std::tie(res.alpha, res.beta) = extract_alpha_beta(res.history.back(), seed);
  return res;
}

FlowResult run_flow(const ModelParams& params, const FlowOptions& opt) {
  return run_flow_from(initial_state(params, opt), params, opt);
}

VecX ground_state(const ModelParams& params, const FlowResult& flow, const FockBasis& phys, int n_photons) {
  const int S = params.rho_levels();
  int K = 0;
  for (int k = 0; k < static_cast<int>(flow.history.size()); ++k) {
    if (flow.history[k].seqs[0].modes.size() > 0) K = k;
  }
  VecX psi;
  FockBasis prev;
  for (int k = K; k >= 0; --k) {
    const FlowState& st = flow.history[k];
    const KernelSequence s = interpolate_sequence(st.seqs, st.zeta, flow.z_chain[k]);
    const FockBasis basis(s.modes, n_photons, 1.0);
    if (k == K) {
      psi = VecX::Zero(basis.dim());
      psi(0) = 1.0;
    } else {
      psi = MatX(dilation_map(prev, basis, S)) * psi;
    }
    FeshbachPair pr;
    pr.H = MatX(assemble_operator(s, basis));
    KernelSequence t = s;
    for (auto& [key, kk] : t.kernels) {
      if (key.first + key.second > 0) std::fill(kk.data.begin(), kk.data.end(), cplx(0.0));
    }
    pr.T = MatX(assemble_operator(t, basis));
    const int n = basis.dim();
    pr.chi = MatX::Zero(n, n);
    pr.chibar = MatX::Zero(n, n);
    for (int j = 0; j < n; ++j) {
      pr.chi(j, j) = chi(basis.energy[j], params.rho);
      pr.chibar(j, j) = chibar(basis.energy[j], params.rho);
    }
    psi = q_operators(pr).first * psi;
    prev = basis;
  }
  const int n = phys.dim();
  const MatX G = MatX(dilation_map(prev, phys, params.rho0_levels()));
  VecX full = VecX::Zero(2 * n);
  full.segment(kDown * n, n) = G * psi;
  const auto q = q_operators(first_step_pair(params, flow.z_chain[0], phys)).first;
  VecX out = q * full;
  return out / out.norm();
}

std::string flow_csv_header() { return "p,z_inf,alpha,beta,iterations,converged"; }

std::string flow_csv_row(const ModelParams& params, const FlowResult& flow) {
  std::ostringstream os;
  os << std::setprecision(17) << params.p.x() << ',' << flow.z_inf.real() << ',' << flow.alpha << ','
     << flow.beta.x() << ',' << flow.iterations << ',' << (flow.converged ? 1 : 0);
  return os.str();
}

}  // namespace srg
