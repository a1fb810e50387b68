#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "srg/firststep.hpp"

using namespace srg;

namespace {

ModelParams small(double p = 0.0) {
  ModelParams q;
  q.levels = 5;
  q.p = q.p_star = Vec3(p, 0, 0);
  return q;
}

double low_dev(const MatX& a, const MatX& b, const FockBasis& basis) {
  double d = 0;
  for (int i = 0; i < basis.dim(); ++i)
    for (int j = 0; j < basis.dim(); ++j)
      if (basis.states[i].size() <= 1 && basis.states[j].size() <= 1) d = std::max(d, std::abs(a(i, j) - b(i, j)));
  return d;
}

}  // namespace

TEST_CASE("resolvent pieces") {
  ModelParams p = small(0.2);
  const cplx z(0.01, 0.002);
  const Vec3 l(0.05, 0, 0);
  CHECK(resolvent_b1(p, z, 0.5 * p.rho0, l) == cplx(0));
  const cplx b1 = resolvent_b1(p, z, 0.3, l);
  CHECK(std::abs(b1 - (0.3 + 0.0025 / 2.0 - 0.2 * 0.05 - z)) < 1e-15);
  CHECK(std::abs(resolvent_b2(p, z, 0.3, l) - b1 - p.omega0) < 1e-15);
  const Mat2 f = resolvent_F(p, z, 0.3, l);
  CHECK(std::abs(f(kUp, kDown)) == 0.0);
  CHECK(std::abs(f(kDown, kDown) - chibar(0.3, p.rho0) * chibar(0.3, p.rho0) / b1) < 1e-14);
  const auto rm = resolvent_margins(p, 0.4 * p.mu());
  CHECK(rm.ok);
  CHECK(rm.b1_min >= rm.b1_bound);
  CHECK(rm.b2_min >= rm.b2_bound);
}

TEST_CASE("free first step") {
  for (double pp : {0.0, 0.3}) {
    ModelParams p = small(pp);
    const cplx z(0.1 * p.mu(), 0.0);
    const auto seq = first_step_pieces(p, std::vector<cplx>{z}, 0)[0].combine(0.0);
    for (const auto& [key, k] : seq.kernels) {
      if (key.first + key.second == 0) continue;
      for (auto v : k.data) CHECK(v == cplx(0));
    }
    const Kernel* w = seq.find(0, 0);
    REQUIRE(w);
    double dev = 0;
    for (int nd = 0; nd < seq.grid.nodes(); ++nd) {
      const double r = seq.grid.node_r(nd);
      const Vec3 l = seq.grid.node_l(nd);
      const cplx want = r + p.rho0 * l.squaredNorm() / (2 * p.m) - p.p.dot(l) / p.m - z;
      dev = std::max(dev, std::abs(w->data[nd] - want));
    }
    CHECK(dev < 1e-15);
  }
}

TEST_CASE("first-order kernels") {
  ModelParams p = small();
  p.spin_x = 0.0;
  p.spin_z = 1.0;
  const double lambda = 0.01 / p.rho0;
  const auto pieces = first_step_pieces(p, std::vector<cplx>{0.0}, 1)[0];
  const auto& o = pieces.order[1];
  for (int md = 0; md < o.modes.size(); ++md) {
    const double k = o.modes.modes[md].energy;
    // both cutoffs on their plateau
    if (k > 0.75) continue;
    // S_down,down = -1
    CHECK(std::abs(lambda * o.eval(1, 0, md, 0.0, Vec3::Zero()) - cplx(0, 0.01 * std::sqrt(k))) < 1e-15);
    CHECK(std::abs(o.eval(0, 1, md, 0.0, Vec3::Zero()) + o.eval(1, 0, md, 0.0, Vec3::Zero())) < 1e-15);
  }
  // sigma_x coupling has no first order
  const auto px = first_step_pieces(small(), std::vector<cplx>{0.0}, 1)[0];
  const Kernel* w10 = px.order[1].find(1, 0);
  if (w10) {
    for (auto v : w10->data) CHECK(std::abs(v) < 1e-15);
  }
}

TEST_CASE("kernel and matrix first steps agree") {
  ModelParams p = small(0.2);
  const ModeGrid gp(p, p.levels), gr(p, p.levels - p.rho0_levels());
  const FockBasis phys(gp, 3), red(gr, 3);
  const cplx z(0.05 * p.mu(), 0.0);
  std::vector<double> devs;
  for (double lam : {0.0, 2e-3, 4e-3}) {
    p.lambda0 = lam;
    const auto seq = first_step_pieces(p, std::vector<cplx>{z}, lam == 0 ? 0 : -1)[0].combine(lam);
    const MatX a = MatX(assemble_operator(seq, red));
    const MatX b = matrix_first_step(p, z, phys, red);
    devs.push_back(low_dev(a, b, red));
  }
  CHECK(devs[0] < 1e-14);
  CHECK(devs[2] < 1e-10);
  // truncation error of the Neumann series, order lambda^(depth+2) or higher
  CHECK(devs[2] / devs[1] > 20.0);
}

TEST_CASE("vacuum entry against second-order perturbation theory") {
  ModelParams p = small(0.1);
  const ModeGrid gp(p, p.levels), gr(p, p.levels - p.rho0_levels());
  const FockBasis phys(gp, 2), red(gr, 1);
  double sum = 0;
  for (const auto& md : gp.modes) {
    const double g = form_factor(md.energy, p.uv_cutoff);
    const double kin = md.energy + md.k.squaredNorm() / (2 * p.m) - p.p.dot(md.k) / p.m;
    const double cb = chibar(md.energy, p.rho0);
    sum += md.weight * g * g *
           (std::norm(md.coupling(kUp, kDown)) / (p.omega0 + kin) + std::norm(md.coupling(kDown, kDown)) * cb * cb / kin);
  }
  std::vector<double> rel;
  for (double lam : {1e-3, 2e-3}) {
    p.lambda0 = lam;
    const MatX b = matrix_first_step(p, 0.0, phys, red);
    const double pt = -lam * lam * sum / p.rho0;
    rel.push_back(std::abs(b(0, 0).real() - pt) / std::abs(pt));
  }
  CHECK(rel[0] < 1e-4);
  // next order is lambda^4
  CHECK(rel[1] / rel[0] == doctest::Approx(4.0).epsilon(0.05));
}

TEST_CASE("Neumann divergence is reported") {
  ModelParams p = small();
  p.lambda0 = 2.0 / neumann_kappa(p);
  CHECK_THROWS_AS(initial_kernels(p, 0.0), FirstStepError);
  try {
    initial_kernels(p, 0.0);
  } catch (const FirstStepError& e) {
    CHECK(e.ratio() == doctest::Approx(2.0));
  }
}

TEST_CASE("critical coupling estimate") {
  ModelParams p;
  p.levels = 7;
  const auto base = lambda_critical_estimate(p);
  CHECK(base.lambda_c > 0);
  CHECK(base.lambda_c <= base.lambda_neumann);
  ModelParams half = p;
  half.rho0 = p.rho0 / 2;
  const auto lh = lambda_critical_estimate(half);
  CHECK(base.lambda_neumann / lh.lambda_neumann == doctest::Approx(std::sqrt(2.0)).epsilon(0.1));
  ModelParams slow = p;
  slow.p = slow.p_star = Vec3(0.5, 0, 0);
  const double ratio = lambda_critical_estimate(slow).lambda_c / base.lambda_c;
  CHECK(ratio >= 0.125);
  CHECK(ratio <= 0.5 + 1e-9);
  // output at lambda_c / 2 lies in the polydisc
  p.lambda0 = 0.5 * base.lambda_c;
  const PolydiscTargets targets;
  const auto led = polydisc_measure(initial_kernels(p, 0.0), p.m, p.xi);
  CHECK(targets.contains(p, led));
  p.lambda0 = 0.0;
  CHECK(targets.contains(p, polydisc_measure(initial_kernels(p, 0.0), p.m, p.xi)));
}
