#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <chrono>
#include <numbers>

#include "srg/oracle.hpp"
#include "srg/rgflow.hpp"

using namespace srg;

namespace {

ModelParams params(double lambda, double p, int levels = 7) {
  ModelParams q;
  q.levels = levels;
  q.lambda0 = lambda;
  q.p = Vec3(p, 0, 0);
  return q;
}

}  // namespace

TEST_CASE("Chebyshev nodes and barycentric interpolation") {
  const auto x = chebyshev_nodes(9, 0.25);
  REQUIRE(x.size() == 9);
  CHECK(x[4] == 0.0);
  for (int i = 0; i < 9; ++i) {
    CHECK(std::abs(x[i] + x[8 - i]) < 1e-15);
    CHECK(std::abs(std::abs(x[i]) - 0.25 * std::abs(std::cos(std::numbers::pi * (i + 0.5) / 9))) < 1e-16);
  }
  // degree 8 is reproduced
  auto poly = [](cplx z) { return cplx(1, 2) - 3.0 * z + cplx(0, 5) * std::pow(z, 4) + 7.0 * std::pow(z, 8); };
  std::vector<cplx> v;
  for (double xi : x) v.push_back(poly(xi));
  for (cplx z : {cplx(0.1, 0.05), cplx(-0.2, 0), cplx(0, 0.1)}) {
    CHECK(std::abs(barycentric(x, v, z) - poly(z)) < 1e-13);
  }
  CHECK(std::abs(barycentric(x, v, x[3]) - v[3]) == 0.0);
  cplx s = 0;
  for (auto c : barycentric_coeffs(x, cplx(0.03, 0.01))) s += c;
  CHECK(std::abs(s - 1.0) < 1e-14);
}

TEST_CASE("spectral rescaling inverse") {
  const double rho = 0.25, mu = 0.5;
  auto g = [](cplx z) { return -z + 0.3 * z * z + cplx(1e-4, 0); };
  for (cplx zeta : {cplx(0.0), cplx(0.1, 0.0), cplx(-0.2, 0.05)}) {
    const auto inv = e_rho_inverse(g, rho, zeta, mu);
    CHECK(std::abs(-g(inv.z) / rho - zeta) < 1e-10);
  }
  CHECK_THROWS_AS(e_rho_inverse([](cplx) { return cplx(1.0); }, rho, 0.0, mu), FlowError);
}

TEST_CASE("free flow is exact") {
  for (double p : {0.0, 0.3, -0.3}) {
    FlowOptions opt;
    opt.n_min = 30;
    const auto t0 = std::chrono::steady_clock::now();
    const auto res = run_flow(params(0.0, p, 9), opt);
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    CHECK(res.converged);
    CHECK(res.iterations >= 30);
    CHECK(std::abs(res.z_inf) <= 1e-10);
    CHECK(std::abs(res.alpha - 1.0) <= 1e-8);
    CHECK(std::abs(res.beta.x() + p) <= 1e-8);
    CHECK(secs < 10.0);
    // the l^2 term shrinks by rho per step
    const auto& h = res.history;
    for (size_t n = 1; n < 5; ++n) CHECK(h[n].ledger.gamma <= 0.3 * h[n - 1].ledger.gamma);
  }
}

TEST_CASE("interacting flow matches direct diagonalization") {
  const ModelParams q = params(0.00124, 0.2);
  const auto res = run_flow(q);
  CHECK(res.converged);
  const ModeGrid grid(q, q.levels);
  const auto gs = ground_energy(build_fiber_hamiltonian(q, FockBasis(grid, 3)));
  CHECK(std::abs(res.z_inf.real() - gs.energy) <= 1e-3 * std::abs(gs.energy));
  CHECK(std::abs(res.z_inf.imag()) < 1e-14);
  // epsilon contracts after the first stage
  for (size_t n = 2; n < res.history.size(); ++n) {
    if (res.history[n - 1].ledger.eps > 1e-14) CHECK(res.history[n].eps_ratio <= 0.75);
  }
  // stage parameters realize the tracked zeta
  REQUIRE(!res.z_chain.empty());
  CHECK(std::abs(res.z_chain.front() * q.rho0 - res.z_inf) < 1e-12);

  const FockBasis small(grid, 2);
  const VecX psi = ground_state(q, res, small);
  CHECK((build_fiber_hamiltonian(q, small) * psi - res.z_inf * psi).norm() < 1e-8);
  CHECK(std::abs(psi(small.dim() + small.find({}))) > 0.99);

  const std::string row = flow_csv_row(q, res);
  const std::string head = flow_csv_header();
  CHECK(std::count(row.begin(), row.end(), ',') == std::count(head.begin(), head.end(), ','));
  CHECK(res.summary()["schema"] == "srg.flow/1");
}

TEST_CASE("Neumann divergence stops the flow before the first stage") {
  ModelParams q = params(0.0, 0.0, 5);
  q.lambda0 = 5.0 / neumann_kappa(q);
  CHECK_THROWS_AS(initial_state(q, FlowOptions{}), FirstStepError);
}

TEST_CASE("spectral parameter out of range") {
  ModelParams q = params(0.0, 0.0, 5);
  FlowOptions opt;
  opt.zeta_seed = 0.6;
  CHECK_THROWS_AS(run_flow(q, opt), FlowError);
}
