#include "srg/fockspace.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace srg {

namespace {
constexpr double kPi = std::numbers::pi;

const Vec3 kAxes[6] = {Vec3(1, 0, 0), Vec3(-1, 0, 0), Vec3(0, 1, 0),
                       Vec3(0, -1, 0), Vec3(0, 0, 1), Vec3(0, 0, -1)};
}  // namespace

ModeGrid::ModeGrid(const ModelParams& params, int nlevels)
    : dim(params.dim), levels(nlevels), levels_per_rho(params.levels_per_rho), ratio(params.mode_ratio()) {
  per_level = dim == 1 ? 2 : 12;
  modes.reserve(static_cast<size_t>(levels * per_level));
  for (int i = 0; i < levels; ++i) {
    const double hi = std::pow(ratio, i);
    const double lo = hi * ratio;
    const double kn = std::pow(ratio, i + 0.5);
    const double shell = (hi * hi * hi - lo * lo * lo) / 3.0;
    for (int s = 0; s < per_level; ++s) {
      Mode md;
      md.level = i;
      md.slot = s;
      md.energy = kn;
      if (dim == 1) {
        md.k = Vec3(s == 0 ? kn : -kn, 0, 0);
        md.weight = 2.0 * kPi * shell;
        md.coupling = params.spin_matrix();
      } else {
        const Vec3 dir = kAxes[s / 2];
        md.k = kn * dir;
        md.weight = 4.0 * kPi / 6.0 * shell;
        md.coupling = polarization_coupling(polarization(md.k, s % 2 + 1));
      }
      modes.push_back(md);
    }
  }
}

int ModeGrid::shifted(int idx, int dlevel) const {
  const int lv = modes[idx].level + dlevel;
  if (lv < 0 || lv >= levels) return -1;
  return index(lv, modes[idx].slot);
}

double ModeGrid::weight_sum() const {
  double s = 0;
  for (const auto& md : modes) s += md.weight;
  return s;
}

nlohmann::json ModeGrid::dump() const {
  nlohmann::json j;
  j["dim"] = dim;
  j["levels"] = levels;
  j["per_level"] = per_level;
  j["ratio"] = ratio;
  auto& arr = j["modes"] = nlohmann::json::array();
  for (const auto& md : modes) {
    arr.push_back({{"level", md.level}, {"slot", md.slot}, {"energy", md.energy},
                   {"k", {md.k.x(), md.k.y(), md.k.z()}}, {"weight", md.weight}});
  }
  return j;
}

FockBasis::FockBasis(ModeGrid g, int nmax, double cap) : grid(std::move(g)), n_max(nmax), energy_cap(cap) {
  std::vector<int> cur;
  const double tol = 1e-12;
  // depth-first over non-decreasing mode lists
  std::function<void(int, double, Vec3)> rec = [&](int start, double e, Vec3 l) {
    lookup_[cur] = static_cast<int>(states.size());
    states.push_back(cur);
    energy.push_back(e);
    momentum.push_back(l);
    if (static_cast<int>(cur.size()) == n_max) return;
    for (int k = start; k < grid.size(); ++k) {
      const double e2 = e + grid.modes[k].energy;
      if (e2 > energy_cap + tol) continue;
      cur.push_back(k);
      rec(k, e2, l + grid.modes[k].k);
      cur.pop_back();
    }
  };
  rec(0, 0.0, Vec3::Zero());
  // order by photon number, then lexicographically; vacuum first
  std::vector<int> perm(states.size());
  for (size_t i = 0; i < perm.size(); ++i) perm[i] = static_cast<int>(i);
  std::stable_sort(perm.begin(), perm.end(), [&](int a, int b) {
    if (states[a].size() != states[b].size()) return states[a].size() < states[b].size();
    return states[a] < states[b];
  });
  std::vector<std::vector<int>> st;
  std::vector<double> en;
  std::vector<Vec3> mo;
  for (int i : perm) {
    st.push_back(states[i]);
    en.push_back(energy[i]);
    mo.push_back(momentum[i]);
  }
  states = std::move(st);
  energy = std::move(en);
  momentum = std::move(mo);
  lookup_.clear();
  for (int i = 0; i < dim(); ++i) lookup_[states[i]] = i;
}

int FockBasis::find(const std::vector<int>& state) const {
  auto it = lookup_.find(state);
  return it == lookup_.end() ? -1 : it->second;
}

nlohmann::json FockBasis::dump() const {
  nlohmann::json j;
  j["n_max"] = n_max;
  j["energy_cap"] = std::isfinite(energy_cap) ? nlohmann::json(energy_cap) : nlohmann::json(nullptr);
  j["grid"] = grid.dump();
  auto& arr = j["states"] = nlohmann::json::array();
  for (int i = 0; i < dim(); ++i) {
    arr.push_back({{"modes", states[i]},
                   {"energy", energy[i]},
                   {"momentum", {momentum[i].x(), momentum[i].y(), momentum[i].z()}}});
  }
  return j;
}

double annihilate_in_place(std::vector<int>& state, int k) {
  auto range = std::equal_range(state.begin(), state.end(), k);
  const long n = range.second - range.first;
  if (n == 0) return 0.0;
  state.erase(range.first);
  return std::sqrt(static_cast<double>(n));
}

double create_in_place(std::vector<int>& state, int k) {
  auto range = std::equal_range(state.begin(), state.end(), k);
  const long n = range.second - range.first;
  state.insert(range.second, k);
  return std::sqrt(static_cast<double>(n + 1));
}

SpMat ladder(const FockBasis& basis, int mode, bool create) {
  if (mode < 0 || mode >= basis.grid.size()) throw std::out_of_range("ladder: unknown mode index");
  std::vector<Eigen::Triplet<cplx>> trip;
  for (int j = 0; j < basis.dim(); ++j) {
    std::vector<int> st = basis.states[j];
    const double amp = create ? create_in_place(st, mode) : annihilate_in_place(st, mode);
    if (amp == 0.0) continue;
    const int i = basis.find(st);
    if (i >= 0) trip.emplace_back(i, j, amp);
  }
  SpMat a(basis.dim(), basis.dim());
  a.setFromTriplets(trip.begin(), trip.end());
  return a;
}

SpMat functional_calculus(const FockBasis& basis, const std::function<cplx(double, const Vec3&)>& f) {
  std::vector<Eigen::Triplet<cplx>> trip;
  for (int i = 0; i < basis.dim(); ++i) {
    const cplx v = f(basis.energy[i], basis.momentum[i]);
    if (!std::isfinite(v.real()) || !std::isfinite(v.imag())) {
      throw std::domain_error("functional_calculus: non-finite value");
    }
    trip.emplace_back(i, i, v);
  }
  SpMat d(basis.dim(), basis.dim());
  d.setFromTriplets(trip.begin(), trip.end());
  return d;
}

SpMat dilation_map(const FockBasis& from, const FockBasis& to, int dlevels) {
  std::vector<Eigen::Triplet<cplx>> trip;
  for (int j = 0; j < from.dim(); ++j) {
    std::vector<int> st;
    bool ok = true;
    for (int k : from.states[j]) {
      const int lv = from.grid.modes[k].level + dlevels;
      if (lv < 0 || lv >= to.grid.levels) {
        ok = false;
        break;
      }
      st.push_back(to.grid.index(lv, from.grid.modes[k].slot));
    }
    if (!ok) continue;
    std::sort(st.begin(), st.end());
    const int i = to.find(st);
    if (i >= 0) trip.emplace_back(i, j, 1.0);
  }
  SpMat g(to.dim(), from.dim());
  g.setFromTriplets(trip.begin(), trip.end());
  return g;
}

SpMat dilation(const FockBasis& basis, double rho) {
  const double e = std::log(rho) / std::log(basis.grid.ratio);
  const int s = static_cast<int>(std::lround(e));
  if (std::abs(e - s) > 1e-9 || s < 1) {
    throw std::invalid_argument("dilation: rho is not an integer power of the grid ratio");
  }
  std::vector<Eigen::Triplet<cplx>> trip;
  const SpMat g = dilation_map(basis, basis, -s);
  for (int k = 0; k < g.outerSize(); ++k) {
    if (basis.energy[k] > rho * (1.0 + 1e-12)) continue;
    for (SpMat::InnerIterator it(g, k); it; ++it) trip.emplace_back(it.row(), it.col(), it.value());
  }
  SpMat out(basis.dim(), basis.dim());
  out.setFromTriplets(trip.begin(), trip.end());
  return out;
}

SpMat spin_kron(const Mat2& s, const SpMat& a) {
  const int n = static_cast<int>(a.rows());
  std::vector<Eigen::Triplet<cplx>> trip;
  for (int k = 0; k < a.outerSize(); ++k) {
    for (SpMat::InnerIterator it(a, k); it; ++it) {
      for (int u = 0; u < 2; ++u) {
        for (int v = 0; v < 2; ++v) {
          if (s(u, v) != 0.0) trip.emplace_back(u * n + it.row(), v * n + it.col(), s(u, v) * it.value());
        }
      }
    }
  }
  SpMat out(2 * n, 2 * a.cols());
  out.setFromTriplets(trip.begin(), trip.end());
  return out;
}

SpMat identity(int n) {
  SpMat id(n, n);
  id.setIdentity();
  return id;
}

}  // namespace srg
