#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "planted.hpp"
#include "srg/feshbach.hpp"

using namespace srg;
using srg::testing::planted_pair;

namespace {

MatX dense_inverse(const MatX& a) { return a.fullPivLu().inverse(); }

}  // namespace

TEST_CASE("pair margins detect a broken partition and a non commuting T") {
  std::mt19937 rng(1);
  auto pl = planted_pair(rng, 8, false);
  CHECK(pair_margins(pl.pair).valid);
  auto bad = pl.pair;
  bad.chibar(0, 0) += 0.1;
  CHECK_FALSE(pair_margins(bad).valid);
  auto noncomm = pl.pair;
  noncomm.T(0, 1) = noncomm.T(1, 0) = 0.3;
  noncomm.chi(0, 0) = 0.5;
  noncomm.chibar(0, 0) = std::sqrt(0.75);
  CHECK(pair_margins(noncomm).commutator > 1e-3);
  CHECK_FALSE(pair_margins(noncomm).valid);
}

TEST_CASE("singular H_chibar throws") {
  const int n = 3;
  FeshbachPair p;
  p.T = MatX::Identity(n, n);
  p.chi = MatX::Zero(n, n);
  p.chi(0, 0) = 1.0;
  p.chibar = MatX::Identity(n, n) - p.chi;
  p.H = p.T;
  p.H(1, 1) = 0.0;
  CHECK_THROWS_AS(hbar_inverse(p), NotFeshbachPair);
  CHECK_THROWS_AS(feshbach_map(p), NotFeshbachPair);
}

TEST_CASE("Feshbach map against the Schur complement for a projection pair") {
  // chi a projection: F restricted to Ran chi is the Schur complement of H
  std::mt19937 rng(3);
  std::normal_distribution<double> g;
  const int n = 7, k = 3;
  FeshbachPair p;
  p.T = MatX::Zero(n, n);
  p.chi = MatX::Zero(n, n);
  p.chibar = MatX::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    p.T(i, i) = i < k ? 0.3 * i : 3.0 + i;
    p.chi(i, i) = i < k;
    p.chibar(i, i) = i >= k;
  }
  MatX W(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) W(i, j) = 0.4 * cplx(g(rng), g(rng));
  p.H = p.T + W;
  const MatX F = feshbach_map(p);
  const MatX schur = p.H.topLeftCorner(k, k) - p.H.topRightCorner(k, n - k) *
                                                   dense_inverse(p.H.bottomRightCorner(n - k, n - k)) *
                                                   p.H.bottomLeftCorner(n - k, k);
  CHECK((F.topLeftCorner(k, k) - schur).cwiseAbs().maxCoeff() < 1e-12);
  CHECK(F.bottomLeftCorner(n - k, k).cwiseAbs().maxCoeff() < 1e-14);
  CHECK((F.bottomRightCorner(n - k, n - k) - p.T.bottomRightCorner(n - k, n - k)).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("planted kernels map through chi and back through Q") {
  std::mt19937 rng(11);
  int tested = 0;
  for (int trial = 0; trial < 40; ++trial) {
    auto pl = planted_pair(rng, 6 + trial % 12, true);
    if (!pair_margins(pl.pair).valid) continue;
    const auto& p = pl.pair;
    const VecX v = pl.kernel;
    CHECK((p.H * v).norm() < 1e-12);
    const MatX F = feshbach_map(p);
    const auto [Q, Qs] = q_operators(p);
    CHECK((F * (p.chi * v)).norm() < 1e-10);
    CHECK((Q * (p.chi * v) - v).norm() < 1e-10);
    const auto rep = isospectral_test(p, 1e-9);
    CHECK(rep.pass);
    CHECK(rep.ker_h == 1);
    CHECK(rep.ker_f == 1);
    ++tested;
  }
  CHECK(tested >= 30);
}

TEST_CASE("resolvent identity for invertible pairs") {
  std::mt19937 rng(12);
  int tested = 0;
  for (int trial = 0; trial < 40; ++trial) {
    auto pl = planted_pair(rng, 5 + trial % 15, false);
    if (!pair_margins(pl.pair).valid) continue;
    const auto& p = pl.pair;
    const MatX F = feshbach_map(p);
    const auto [Q, Qs] = q_operators(p);
    // invert F on Ran chi by hand: chi is diagonal here
    std::vector<int> on;
    for (int i = 0; i < p.chi.rows(); ++i)
      if (std::abs(p.chi(i, i)) > 0) on.push_back(i);
    MatX Fr(on.size(), on.size());
    for (size_t a = 0; a < on.size(); ++a)
      for (size_t b = 0; b < on.size(); ++b) Fr(a, b) = F(on[a], on[b]);
    const MatX fri = dense_inverse(Fr);
    MatX finv = MatX::Zero(p.H.rows(), p.H.cols());
    for (size_t a = 0; a < on.size(); ++a)
      for (size_t b = 0; b < on.size(); ++b) finv(on[a], on[b]) = fri(a, b);
    const MatX hinv = dense_inverse(p.H);
    const MatX rhs = p.chibar * hbar_inverse(p) * p.chibar + Q * finv * Qs;
    CHECK((hinv - rhs).cwiseAbs().maxCoeff() / hinv.cwiseAbs().maxCoeff() < 1e-9);
    const auto rep = isospectral_test(p, 1e-9);
    CHECK(rep.pass);
    CHECK(rep.ker_h == 0);
    ++tested;
  }
  CHECK(tested >= 30);
}

TEST_CASE("w00 lower bound") {
  CHECK(w00_lower_bound(0.75 * 0.25, 0.5, 0.0, 0.25) == doctest::Approx(0.75 * 0.25 * 0.5 - 0.0625));
  CHECK(w00_lower_bound(1.0, 0.5, 0.1, 0.25) == doctest::Approx(0.4 - 0.0625));
}
