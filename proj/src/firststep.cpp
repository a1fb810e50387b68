#include "srg/firststep.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <numbers>

#include "srg/oracle.hpp"
#include "srg/wick.hpp"

namespace srg {

double PolydiscTargets::gamma(const ModelParams& p) const { return p.dim * p.rho0 / p.m + c_gamma * p.mu(); }
double PolydiscTargets::delta(const ModelParams& p) const { return c_delta * p.rho * p.mu(); }
double PolydiscTargets::eps(const ModelParams& p) const { return c_eps * p.rho * p.rho * p.mu() * p.mu(); }

bool PolydiscTargets::contains(const ModelParams& p, const NormLedger& led) const {
  return led.gamma <= gamma(p) && led.delta <= delta(p) && led.eps <= eps(p);
}

nlohmann::json PolydiscTargets::dump(const ModelParams& p) const {
  return {{"c_gamma", c_gamma}, {"c_delta", c_delta}, {"c_eps", c_eps},
          {"gamma", gamma(p)},  {"delta", delta(p)},  {"eps", eps(p)}};
}

cplx resolvent_b1(const ModelParams& p, cplx z, double r, const Vec3& l) {
  if (r < 0.75 * p.rho0) return 0.0;
  return r + l.squaredNorm() / (2.0 * p.m) - p.p.dot(l) / p.m - z;
}

cplx resolvent_b2(const ModelParams& p, cplx z, double r, const Vec3& l) {
  return r + l.squaredNorm() / (2.0 * p.m) + p.omega0 - p.p.dot(l) / p.m - z;
}

Mat2 resolvent_F(const ModelParams& p, cplx z, double r, const Vec3& l) {
  Mat2 f = Mat2::Zero();
  f(kUp, kUp) = 1.0 / resolvent_b2(p, z, r, l);
  const double cb = chibar(r, p.rho0);
  if (cb > 0) f(kDown, kDown) = cb * cb / resolvent_b1(p, z, r, l);
  return f;
}

nlohmann::json ResolventMargins::dump() const {
  return {{"b1_min", b1_min}, {"b1_bound", b1_bound}, {"b2_min", b2_min}, {"b2_bound", b2_bound}, {"ok", ok}};
}

ResolventMargins resolvent_margins(const ModelParams& p, cplx z_reduced) {
  ResolventMargins rm;
  rm.b1_bound = p.mu() * p.rho0 / 4.0;
  rm.b2_bound = p.omega0 - p.mu() * p.rho0 / 2.0;
  rm.b1_min = rm.b2_min = std::numeric_limits<double>::infinity();
  const cplx z = p.rho0 * z_reduced;
  const int nt = 41;
  for (double r = 0.75 * p.rho0; r <= 2.0; r *= 1.05) {
    for (int it = 0; it < nt; ++it) {
      const double t = -1.0 + 2.0 * it / (nt - 1);
      Vec3 l = Vec3::Zero();
      if (p.dim == 1) {
        l.x() = r * t;
      } else {
        // worst direction is along p
        const Vec3 e = p.p.norm() > 0 ? Vec3(p.p / p.p.norm()) : Vec3(1, 0, 0);
        l = r * t * e;
      }
      rm.b1_min = std::min(rm.b1_min, std::real(resolvent_b1(p, z, r, l)));
      rm.b2_min = std::min(rm.b2_min, std::abs(resolvent_b2(p, z, r, l)));
    }
  }
  rm.ok = rm.b1_min >= rm.b1_bound * (1.0 - 1e-9) && rm.b2_min >= rm.b2_bound * (1.0 - 1e-9);
  return rm;
}

KernelSequence FirstStepPieces::combine(double lambda) const {
  KernelSequence out = free;
  double pw = 1.0;
  for (size_t L = 1; L < order.size(); ++L) {
    pw *= lambda;
    for (const auto& [key, k] : order[L].kernels) {
      Kernel* dst = out.find(key.first, key.second);
      if (!dst) dst = &out.add(key.first, key.second);
      for (size_t i = 0; i < k.data.size(); ++i) dst->data[i] += pw * k.data[i];
    }
  }
  return out;
}

namespace {

KernelSequence free_sequence(const ModelParams& p, cplx z, const KernelGrid& grid, const ModeGrid& stage) {
  KernelSequence seq(grid, stage);
  seq.p = p.p;
  seq.z = z;
  Kernel& w = seq.add(0, 0);
  for (int nd = 0; nd < grid.nodes(); ++nd) {
    const double r = grid.node_r(nd);
    const Vec3 l = grid.node_l(nd);
    w.data[nd] = r + p.rho0 * l.squaredNorm() / (2.0 * p.m) - p.p.dot(l) / p.m - z;
  }
  for (int mn = 1; mn <= p.m_max; ++mn) {
    for (int m = 0; m <= mn; ++m) seq.add(m, mn - m);
  }
  return seq;
}

}  // namespace

std::vector<FirstStepPieces> first_step_pieces(const ModelParams& p, const std::vector<cplx>& zs, int depth) {
  p.validate();
  using ZMat = Batch<Mat2>;
  const int nz = static_cast<int>(zs.size());
  if (nz < 1 || nz > ZMat::kMax) throw std::invalid_argument("first_step_pieces: 1..16 spectral parameters");
  const int a0 = p.rho0_levels();
  const ModeGrid phys(p, p.levels);
  const ModeGrid stage(p, p.levels - a0);
  const KernelGrid grid = KernelGrid::from_params(p);
  std::vector<FirstStepPieces> out(static_cast<size_t>(nz));
  for (int iz = 0; iz < nz; ++iz) out[iz].free = free_sequence(p, zs[iz], grid, stage);
  std::vector<int> ext_map(static_cast<size_t>(stage.size()));
  for (int j = 0; j < stage.size(); ++j) ext_map[j] = phys.index(stage.modes[j].level + a0, stage.modes[j].slot);

  const cplx I(0, 1);
  ZMat zero;
  zero.n = nz;
  for (int iz = 0; iz < nz; ++iz) zero.v[iz].setZero();
  // vertex matrices do not depend on z or (r, l)
  std::vector<ZMat> vcre(static_cast<size_t>(phys.size())), vann(static_cast<size_t>(phys.size()));
  for (int k = 0; k < phys.size(); ++k) {
    const Mode& mo = phys.modes[k];
    const Mat2 s = form_factor(mo.energy, p.uv_cutoff) * mo.coupling;
    vcre[k].n = vann[k].n = nz;
    for (int iz = 0; iz < nz; ++iz) {
      vcre[k].v[iz] = -I * s;
      vann[k].v[iz] = I * s;
    }
  }
  ChainContext<ZMat> ctx;
  ctx.modes = &phys;
  ctx.rho = p.rho0;
  ctx.chi_ends = true;
  ctx.vertex = [&](int M, int N, const int* md, double, const Vec3&) -> ZMat {
    if (M + N != 1) return zero;
    return M == 1 ? vcre[md[0]] : vann[md[0]];
  };
  ctx.F = [&](double r, const Vec3& l) {
    ZMat f;
    f.n = nz;
    for (int iz = 0; iz < nz; ++iz) f.v[iz] = resolvent_F(p, p.rho0 * zs[iz], r, l);
    return f;
  };
  auto allowed = [](int mi, int ni) { return mi + ni == 1; };

  if (depth < 0) depth = p.neumann_depth + 1;
  for (auto& pc : out) pc.order.resize(static_cast<size_t>(depth + 1));
  for (int L = 1; L <= depth; ++L) {
    for (int iz = 0; iz < nz; ++iz) {
      KernelSequence& seq = out[iz].order[L];
      seq = KernelSequence(grid, stage);
      seq.p = p.p;
      seq.z = zs[iz];
    }
    for (int mn = 0; mn <= p.m_max; ++mn) {
      for (int M = 0; M <= mn; ++M) {
        const int N = mn - M;
        std::vector<cplx*> dst(static_cast<size_t>(nz));
        for (int iz = 0; iz < nz; ++iz) dst[iz] = out[iz].order[L].add(M, N).data.data();
        if ((L - mn) % 2 != 0 || L < mn) continue;
        const double sign = (L % 2 == 1) ? 1.0 : -1.0;
        const cplx coeff = sign * std::pow(p.rho0, 1.5 * mn - 1.0);
        const int nodes = grid.nodes();
        accumulate_series<ZMat>(ctx, grid, ext_map, M, N, L, allowed, coeff, zero,
                                [&](int tu, int nd, cplx c, const ZMat& V) {
                                  const size_t at = static_cast<size_t>(tu) * nodes + nd;
                                  for (int iz = 0; iz < nz; ++iz) dst[iz][at] += c * V.v[iz](kDown, kDown);
                                });
        for (int iz = 0; iz < nz; ++iz) symmetrize(out[iz].order[L].find(M, N)->data, stage.size(), M, N, nodes);
      }
    }
  }
  return out;
}

FirstStepPieces first_step_pieces(const ModelParams& p, cplx z) { return first_step_pieces(p, std::vector<cplx>{z})[0]; }

double neumann_kappa(const ModelParams& p) {
  const ModeGrid phys(p, p.levels);
  const FockBasis basis(phys, 2);
  const int n = basis.dim();
  const MatX hi = MatX(interaction_operator(p, basis));
  double kappa = 0;
  for (double zs : {-0.5, 0.5}) {
    const double zp = p.rho0 * zs * p.mu();
    Eigen::VectorXd d(2 * n);
    for (int s = 0; s < 2; ++s) {
      for (int j = 0; j < n; ++j) {
        const Vec3& P = basis.momentum[j];
        double t = basis.energy[j] + P.squaredNorm() / (2.0 * p.m) - p.p.dot(P) / p.m - zp;
        double cb = 1.0;
        if (s == kUp) {
          t += p.omega0;
        } else {
          cb = chibar(basis.energy[j], p.rho0);
        }
        d(s * n + j) = cb > 0 ? cb / std::sqrt(std::abs(t)) : 0.0;
      }
    }
    const MatX a = d.asDiagonal() * hi * d.asDiagonal();
    Eigen::SelfAdjointEigenSolver<MatX> es(a, Eigen::EigenvaluesOnly);
    kappa = std::max(kappa, es.eigenvalues().cwiseAbs().maxCoeff());
  }
  return kappa;
}

KernelSequence initial_kernels(const ModelParams& p, cplx z) {
  p.validate();
  if (p.lambda0 > 0) {
    const double ratio = p.lambda0 * neumann_kappa(p);
    if (ratio >= 1.0) {
      throw FirstStepError("first decimation diverges: Neumann ratio " + std::to_string(ratio), ratio);
    }
  }
  return first_step_pieces(p, z).combine(p.lambda0);
}

nlohmann::json LambdaCritical::dump() const {
  return {{"lambda_c", lambda_c},
          {"lambda_neumann", lambda_neumann},
          {"lambda_polydisc", lambda_polydisc},
          {"kappa", kappa}};
}

LambdaCritical lambda_critical_estimate(const ModelParams& p, const PolydiscTargets& targets) {
  LambdaCritical lc;
  lc.kappa = neumann_kappa(p);
  lc.lambda_neumann = 0.5 / lc.kappa;
  const double mu = p.mu();
  const auto pcs = first_step_pieces(p, {-0.5 * mu, 0.0, 0.5 * mu});
  auto ok = [&](double lam) {
    for (const auto& pc : pcs) {
      const KernelSequence s = pc.combine(lam);
      if (!targets.contains(p, polydisc_measure(s, p.m, p.xi))) return false;
    }
    return true;
  };
  // the polydisc limit is searched up to 4 lambda_N so it is reported even when not binding
  double lo = 0, hi = 4.0 * lc.lambda_neumann;
  if (ok(hi)) {
    lc.lambda_polydisc = hi;
  } else {
    for (int it = 0; it < 60 && hi - lo > 1e-6 * hi; ++it) {
      const double mid = 0.5 * (lo + hi);
      (ok(mid) ? lo : hi) = mid;
    }
    lc.lambda_polydisc = lo;
  }
  lc.lambda_c = std::min(lc.lambda_neumann, lc.lambda_polydisc);
  return lc;
}

FeshbachPair first_step_pair(const ModelParams& p, cplx z, const FockBasis& phys) {
  const int n = phys.dim();
  const cplx zp = p.rho0 * z;
  FeshbachPair pr;
  ModelParams p0 = p;
  p0.lambda0 = 0;
  pr.H = MatX(build_fiber_hamiltonian(p, phys)) - zp * MatX::Identity(2 * n, 2 * n);
  pr.T = MatX(build_fiber_hamiltonian(p0, phys)) - zp * MatX::Identity(2 * n, 2 * n);
  pr.chi = MatX::Zero(2 * n, 2 * n);
  pr.chibar = MatX::Identity(2 * n, 2 * n);
  for (int j = 0; j < n; ++j) {
    pr.chi(kDown * n + j, kDown * n + j) = chi(phys.energy[j], p.rho0);
    pr.chibar(kDown * n + j, kDown * n + j) = chibar(phys.energy[j], p.rho0);
  }
  return pr;
}

MatX matrix_first_step(const ModelParams& p, cplx z, const FockBasis& phys, const FockBasis& reduced) {
  const int n = phys.dim();
  const MatX F = feshbach_map(first_step_pair(p, z, phys));
  const MatX fd = F.block(kDown * n, kDown * n, n, n);
  const MatX G = MatX(dilation_map(phys, reduced, -p.rho0_levels()));
  return G * fd * G.adjoint() / p.rho0;
}

nlohmann::json FirstStepReport::dump(const ModelParams& p) const {
  nlohmann::json j;
  j["schema"] = "srg.firststep/1";
  j["kappa"] = kappa;
  j["neumann_ratio"] = neumann_ratio;
  j["margins"] = margins.dump();
  j["ledger"] = ledger.dump();
  j["targets"] = targets.dump(p);
  j["inside_targets"] = targets.contains(p, ledger);
  j["order_norms"] = order_norms;
  return j;
}

FirstStepReport first_step_report(const ModelParams& p, const KernelSequence& seq, const FirstStepPieces& pieces,
                                  const PolydiscTargets& targets) {
  FirstStepReport rep;
  rep.kappa = neumann_kappa(p);
  rep.neumann_ratio = p.lambda0 * rep.kappa;
  rep.margins = resolvent_margins(p, seq.z);
  rep.ledger = polydisc_measure(seq, p.m, p.xi);
  rep.targets = targets;
  rep.order_norms.assign(pieces.order.size(), 0.0);
  for (size_t L = 1; L < pieces.order.size(); ++L) {
    const auto& o = pieces.order[L];
    double s = norm_xi(o, p.xi);
    if (const Kernel* k = o.find(0, 0)) s += norm_sharp(o, *k);
    rep.order_norms[L] = std::pow(p.lambda0, static_cast<double>(L)) * s;
  }
  return rep;
}

}  // namespace srg
