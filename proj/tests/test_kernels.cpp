#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "srg/kernels.hpp"

using namespace srg;

namespace {

ModelParams params(int dim = 1, int levels = 6) {
  ModelParams p;
  p.dim = dim;
  p.levels = levels;
  if (dim == 3) p.t_nodes = 3;
  return p;
}

KernelSequence make_seq(const ModelParams& p, int levels) {
  return KernelSequence(KernelGrid::from_params(p), ModeGrid(p, levels));
}

template <class F>
void fill00(KernelSequence& s, F f) {
  Kernel& k = s.find(0, 0) ? *s.find(0, 0) : s.add(0, 0);
  for (int nd = 0; nd < s.grid.nodes(); ++nd) k.data[nd] = f(s.grid.node_r(nd), s.grid.node_l(nd));
}

// w(r, l, modes) for every tuple and node
template <class F>
Kernel& fill(KernelSequence& s, int m, int n, F f) {
  Kernel& k = s.find(m, n) ? *s.find(m, n) : s.add(m, n);
  int md[8];
  const int nodes = s.grid.nodes();
  for (int tu = 0; tu < k.tuples(); ++tu) {
    s.tuple_modes(tu, m + n, md);
    for (int nd = 0; nd < nodes; ++nd) k.data[tu * nodes + nd] = f(s.grid.node_r(nd), s.grid.node_l(nd), md);
  }
  return k;
}

double max_abs(const MatX& a) { return a.size() ? a.cwiseAbs().maxCoeff() : 0.0; }

}  // namespace

TEST_CASE("kernel grid layout") {
  const KernelGrid g = KernelGrid::from_params(params());
  CHECK(g.r.front() == 0.0);
  CHECK(g.r.back() == 1.0);
  for (int i = 1; i < g.nr(); ++i) CHECK(g.r[i] > g.r[i - 1]);
  CHECK(g.t[g.t_nodes / 2] == 0.0);
  CHECK(g.r_shift(0.25) > 0);
  CHECK(g.r_shift(0.3) == -1);
}

TEST_CASE("norm_half") {
  const ModelParams p = params();
  KernelSequence s = make_seq(p, 4);
  s.add(0, 0);
  Kernel& w = fill(s, 1, 0, [&](double, const Vec3&, const int* md) { return std::sqrt(s.modes.modes[md[0]].energy); });
  CHECK(norm_half(s, w) == doctest::Approx(1.0).epsilon(1e-14));
  Kernel& z = s.add(0, 1);
  CHECK(norm_half(s, z) == 0.0);
}

TEST_CASE("norm_sharp of (0,0) kernels") {
  for (int dim : {1, 3}) {
    const ModelParams p = params(dim, 4);
    KernelSequence s = make_seq(p, 4);
    fill00(s, [](double r, const Vec3&) { return r; });
    CHECK(norm_sharp(s, *s.find(0, 0)) == doctest::Approx(1.0).epsilon(1e-12));
    fill00(s, [](double, const Vec3&) { return cplx(-0.3, 0.4); });
    CHECK(norm_sharp(s, *s.find(0, 0)) == doctest::Approx(0.5).epsilon(1e-12));
    const Vec3 pp = dim == 1 ? Vec3(0.3, 0, 0) : Vec3(0.1, -0.2, 0.3);
    const double m = 1.5;
    fill00(s, [&](double r, const Vec3& l) { return r - pp.dot(l) / m; });
    CHECK(norm_sharp(s, *s.find(0, 0)) == doctest::Approx(1.0 + pp.cwiseAbs().sum() / m).epsilon(1e-12));
  }
  KernelSequence coarse(KernelGrid(1, 0.5, 1, 0, 3), ModeGrid());
  coarse.add(0, 0);
  CHECK_THROWS_AS(norm_sharp(coarse, *coarse.find(0, 0)), std::invalid_argument);
}

TEST_CASE("norm_xi and polydisc measure") {
  const ModelParams p = params();
  KernelSequence s = make_seq(p, 4);
  s.p = Vec3(0.2, 0, 0);
  s.z = 0.01;
  fill00(s, [&](double r, const Vec3& l) { return r - s.p.dot(l) / p.m - s.z; });
  s.add(1, 0);
  s.add(0, 1);
  NormLedger led = polydisc_measure(s, p.m, p.xi);
  CHECK(led.gamma < 1e-13);
  CHECK(led.delta < 1e-15);
  CHECK(led.eps == 0.0);

  fill00(s, [&](double r, const Vec3& l) { return r - s.p.dot(l) / p.m - s.z + 0.003; });
  led = polydisc_measure(s, p.m, p.xi);
  CHECK(led.gamma < 1e-13);
  CHECK(led.delta == doctest::Approx(0.003).epsilon(1e-12));

  Kernel& w = fill(s, 1, 0, [&](double r, const Vec3&, const int* md) { return r * std::sqrt(s.modes.modes[md[0]].energy); });
  const double sh = norm_sharp(s, w);
  CHECK(sh > 0);
  CHECK(norm_xi(s, p.xi) == doctest::Approx(sh / p.xi).epsilon(1e-14));
  s.dropped_mass = 1e-9;
  CHECK(norm_xi(s, p.xi) == doctest::Approx(sh / p.xi + 1e-9).epsilon(1e-14));
}

TEST_CASE("l^2 term gives dim*rho0/m with the literal sharp norm") {
  for (int dim : {1, 3}) {
    const ModelParams p = params(dim, 4);
    KernelSequence s = make_seq(p, 4);
    fill00(s, [&](double r, const Vec3& l) { return r + p.rho0 * l.squaredNorm() / (2 * p.m); });
    CHECK(polydisc_measure(s, p.m, p.xi).gamma == doctest::Approx(dim * p.rho0 / p.m).epsilon(1e-12));
  }
}

TEST_CASE("assembled operators") {
  const ModelParams p = params();
  const ModeGrid mg(p, 3);
  const FockBasis b(mg, 2, 1.0);
  KernelSequence s(KernelGrid::from_params(p), mg);
  fill00(s, [](double r, const Vec3&) { return r; });
  const MatX hf = MatX(functional_calculus(b, [](double r, const Vec3&) { return r; }));
  CHECK(max_abs(MatX(assemble_operator(s, b)) - hf) < 1e-14);

  // w10 on a single-level grid against a hand-built column
  const ModeGrid one(p, 1);
  const FockBasis b1(one, 1);
  KernelSequence s1(KernelGrid::from_params(p), one);
  s1.add(0, 0);
  fill(s1, 1, 0, [](double r, const Vec3&, const int* md) { return cplx(1.0 + md[0], 0.5) * (1.0 - r); });
  const MatX a = MatX(assemble_operator(s1, b1));
  const int vac = b1.find({});
  for (int k = 0; k < one.size(); ++k) {
    // middle argument is the vacuum: r = 0
    const cplx want = std::sqrt(one.modes[k].weight) * cplx(1.0 + k, 0.5);
    CHECK(std::abs(a(b1.find({k}), vac) - want) < 1e-14);
  }
  CHECK(std::abs(a(vac, vac)) == 0.0);

  // hermiticity for w_{m,n} = conj(w_{n,m}) with real symmetric data
  std::mt19937 rng(11);
  std::uniform_real_distribution<double> u(-1, 1);
  KernelSequence h(KernelGrid::from_params(p), mg);
  fill00(h, [&](double r, const Vec3& l) { return r * r + 0.3 * l.x(); });
  const double c1 = u(rng), c2 = u(rng);
  auto f10 = [&](double r, const Vec3& l, const int* md) { return cplx(c1 * (1 + r), c2 * l.x()) * (1.0 + 0.1 * md[0]); };
  fill(h, 1, 0, f10);
  fill(h, 0, 1, [&](double r, const Vec3& l, const int* md) { return std::conj(f10(r, l, md)); });
  fill(h, 1, 1, [&](double r, const Vec3&, const int* md) {
    return (1.0 + r) * (std::cos(md[0] + md[1]) + 0.0 * md[0]);
  });
  const MatX hm = MatX(assemble_operator(h, b));
  // w01 is evaluated at the energy after annihilation, w10 at the energy before creation: both are the lower state
  CHECK(max_abs(hm - hm.adjoint()) < 1e-13);

  // linearity
  KernelSequence h2 = h;
  for (auto& [key, k] : h2.kernels)
    for (auto& v : k.data) v *= 2.5;
  CHECK(max_abs(MatX(assemble_operator(h2, b)) - 2.5 * hm) < 1e-13);
  KernelSequence wrong(KernelGrid::from_params(p), ModeGrid(p, 2));
  wrong.add(0, 0);
  CHECK_THROWS_AS(assemble_operator(wrong, b), std::invalid_argument);
}

TEST_CASE("scale transform") {
  const ModelParams p = params();
  KernelSequence s = make_seq(p, 6);
  fill00(s, [](double r, const Vec3&) { return r; });
  const KernelSequence t = scale_transform(s, p.rho);
  CHECK(t.modes.levels == s.modes.levels - p.rho_levels());
  for (int nd = 0; nd < s.grid.nodes(); ++nd) CHECK(std::abs(t.find(0, 0)->data[nd] - s.find(0, 0)->data[nd]) < 1e-15);

  fill00(s, [](double, const Vec3&) { return 0.7; });
  fill(s, 1, 0, [&](double, const Vec3&, const int* md) { return std::sqrt(s.modes.modes[md[0]].energy); });
  const KernelSequence u = scale_transform(s, p.rho);
  for (int nd = 0; nd < s.grid.nodes(); ++nd) CHECK(u.find(0, 0)->data[nd].real() == doctest::Approx(0.7 / p.rho));
  const Kernel& w = *u.find(1, 0);
  for (int k = 0; k < u.modes.size(); ++k)
    CHECK(w.data[k * u.grid.nodes()].real() == doctest::Approx(p.rho * std::sqrt(u.modes.modes[k].energy)).epsilon(1e-14));
  CHECK_THROWS_AS(scale_transform(s, 0.3), std::invalid_argument);
}

TEST_CASE("s_rho contracts norm_half by rho^(2(m+n)-1)") {
  const ModelParams p = params();
  KernelSequence s = make_seq(p, 6);
  s.add(0, 0);
  std::mt19937 rng(2);
  std::uniform_real_distribution<double> u(-1, 1);
  for (auto [m, n] : {std::pair{1, 0}, {0, 1}, {1, 1}, {2, 0}, {0, 2}}) {
    Kernel& k = s.add(m, n);
    int md[4];
    for (int tu = 0; tu < k.tuples(); ++tu) {
      s.tuple_modes(tu, m + n, md);
      double kk = 1.0;
      for (int i = 0; i < m + n; ++i) kk *= s.modes.modes[md[i]].energy;
      for (int nd = 0; nd < s.grid.nodes(); ++nd) k.data[tu * s.grid.nodes() + nd] = kk * cplx(u(rng), u(rng));
    }
  }
  const KernelSequence t = scale_transform(s, p.rho);
  for (const auto& [key, k] : t.kernels) {
    const int mn = key.first + key.second;
    if (mn == 0) continue;
    CHECK(norm_half(t, k) <= std::pow(p.rho, 2.0 * mn - 1.0) * norm_half(s, *s.find(key.first, key.second)) * (1 + 1e-12));
  }
}

TEST_CASE("dump and load round trip") {
  const ModelParams p = params();
  KernelSequence s = make_seq(p, 3);
  s.p = Vec3(0.1, 0, 0);
  s.z = cplx(0.02, -0.01);
  s.dropped_mass = 3e-12;
  fill00(s, [](double r, const Vec3& l) { return cplx(r, l.x()); });
  fill(s, 1, 1, [](double r, const Vec3&, const int* md) { return cplx(r * md[0], md[1]); });
  const KernelSequence t = KernelSequence::load(nlohmann::json::parse(s.dump().dump()));
  CHECK(t.grid == s.grid);
  CHECK(t.modes.size() == s.modes.size());
  CHECK(t.z == s.z);
  CHECK(t.dropped_mass == s.dropped_mass);
  for (const auto& [key, k] : s.kernels) CHECK(t.find(key.first, key.second)->data == k.data);
  CHECK_THROWS(KernelSequence::load(nlohmann::json{{"schema", "other"}}));
}
