#include "srg/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace srg {

namespace {

int ipow(int b, int e) {
  int r = 1;
  for (int i = 0; i < e; ++i) r *= b;
  return r;
}

// first derivative at x[1] (or x[0] / x[2] for one-sided) from three samples
double d3(const double* x, const cplx* f, int at, cplx& out) {
  const double h1 = x[1] - x[0];
  const double h2 = x[2] - x[1];
  if (at == 0) {
    out = -(2 * h1 + h2) / (h1 * (h1 + h2)) * f[0] + (h1 + h2) / (h1 * h2) * f[1] - h1 / (h2 * (h1 + h2)) * f[2];
  } else if (at == 1) {
    out = -h2 / (h1 * (h1 + h2)) * f[0] + (h2 - h1) / (h1 * h2) * f[1] + h1 / (h2 * (h1 + h2)) * f[2];
  } else {
    out = h2 / (h1 * (h1 + h2)) * f[0] - (h1 + h2) / (h1 * h2) * f[1] + (2 * h2 + h1) / (h2 * (h1 + h2)) * f[2];
  }
  return 0;
}

}  // namespace

KernelGrid::KernelGrid(int d, double q, int rpl, int rlev, int tn)
    : dim(d), ratio(q), r_per_level(rpl), r_levels(rlev), t_nodes(tn) {
  if (t_nodes < 3 || t_nodes % 2 == 0) throw std::invalid_argument("KernelGrid: t_nodes must be odd and >= 3");
  const int J = r_per_level * r_levels;
  r.push_back(0.0);
  for (int j = J; j >= 0; --j) r.push_back(std::pow(ratio, static_cast<double>(j) / r_per_level));
  r.back() = 1.0;
  for (int i = 0; i < t_nodes; ++i) t.push_back(-1.0 + 2.0 * i / (t_nodes - 1));
  t[(t_nodes - 1) / 2] = 0.0;
}

KernelGrid KernelGrid::from_params(const ModelParams& p) {
  return KernelGrid(p.dim, p.mode_ratio(), p.r_nodes_per_level, p.levels + p.r_floor_levels, p.t_nodes);
}

Vec3 KernelGrid::node_t(int node) const {
  const int it = node % nt();
  if (dim == 1) return Vec3(t[it], 0, 0);
  const int a = it / (t_nodes * t_nodes);
  const int b = (it / t_nodes) % t_nodes;
  const int c = it % t_nodes;
  return Vec3(t[a], t[b], t[c]);
}

bool KernelGrid::in_base(int node) const { return node_t(node).norm() <= 1.0 + 1e-12; }

int KernelGrid::stencil(double rr, const Vec3& l, int* idx, double* w) const {
  int ir[2];
  double wr[2];
  int nrr = 1;
  const int J = r_per_level * r_levels;
  if (rr <= 0.0) {
    ir[0] = 0;
    wr[0] = 1.0;
  } else if (rr >= 1.0) {
    ir[0] = nr() - 1;
    wr[0] = 1.0;
  } else if (rr <= r[1]) {
    ir[0] = 0;
    ir[1] = 1;
    wr[1] = rr / r[1];
    wr[0] = 1.0 - wr[1];
    nrr = 2;
  } else {
    const double u = r_per_level * std::log(rr) / std::log(ratio);
    int j = static_cast<int>(std::floor(u));
    j = std::clamp(j, 0, J - 1);
    const int hi = 1 + J - j;
    const int lo = hi - 1;
    ir[0] = lo;
    ir[1] = hi;
    wr[1] = (rr - r[lo]) / (r[hi] - r[lo]);
    wr[0] = 1.0 - wr[1];
    nrr = 2;
  }
  // t stencil per axis
  int ti[3][2];
  double tw[3][2];
  int tn[3] = {1, 1, 1};
  const int axes = dim == 1 ? 1 : 3;
  const double h = 2.0 / (t_nodes - 1);
  for (int a = 0; a < axes; ++a) {
    double tv = rr > 0 ? l[a] / rr : 0.0;
    tv = std::clamp(tv, -1.0, 1.0);
    double u = (tv + 1.0) / h;
    int k = static_cast<int>(std::floor(u));
    k = std::clamp(k, 0, t_nodes - 2);
    const double f = u - k;
    if (f < 1e-14) {
      ti[a][0] = k;
      tw[a][0] = 1.0;
      tn[a] = 1;
    } else if (f > 1.0 - 1e-14) {
      ti[a][0] = k + 1;
      tw[a][0] = 1.0;
      tn[a] = 1;
    } else {
      ti[a][0] = k;
      ti[a][1] = k + 1;
      tw[a][0] = 1.0 - f;
      tw[a][1] = f;
      tn[a] = 2;
    }
  }
  int count = 0;
  for (int x = 0; x < nrr; ++x) {
    if (ir[x] == 0) {
      // r = 0 row holds one value; use the t = 0 column
      const int mid = (t_nodes - 1) / 2;
      const int it = dim == 1 ? mid : (mid * t_nodes + mid) * t_nodes + mid;
      idx[count] = node(0, it);
      w[count++] = wr[x];
      continue;
    }
    for (int a = 0; a < tn[0]; ++a) {
      if (dim == 1) {
        idx[count] = node(ir[x], ti[0][a]);
        w[count++] = wr[x] * tw[0][a];
        continue;
      }
      for (int b = 0; b < tn[1]; ++b) {
        for (int c = 0; c < tn[2]; ++c) {
          const int it = (ti[0][a] * t_nodes + ti[1][b]) * t_nodes + ti[2][c];
          idx[count] = node(ir[x], it);
          w[count++] = wr[x] * tw[0][a] * tw[1][b] * tw[2][c];
        }
      }
    }
  }
  return count;
}

int KernelGrid::r_shift(double rho) const {
  const double e = r_per_level * std::log(rho) / std::log(ratio);
  const int s = static_cast<int>(std::lround(e));
  if (std::abs(e - s) > 1e-9 || s < 0) return -1;
  return s;
}

bool KernelGrid::operator==(const KernelGrid& o) const {
  return dim == o.dim && std::abs(ratio - o.ratio) < 1e-15 && r_per_level == o.r_per_level &&
         r_levels == o.r_levels && t_nodes == o.t_nodes;
}

nlohmann::json KernelGrid::dump() const {
  return {{"dim", dim}, {"ratio", ratio}, {"r_per_level", r_per_level}, {"r_levels", r_levels}, {"t_nodes", t_nodes}};
}

int Kernel::tuples() const { return ipow(nmodes, m + n); }

KernelSequence::KernelSequence(KernelGrid g, ModeGrid md) : grid(std::move(g)), modes(std::move(md)) {}

Kernel& KernelSequence::add(int m, int n) {
  Kernel& k = kernels[{m, n}];
  k.m = m;
  k.n = n;
  k.nmodes = modes.size();
  k.data.assign(static_cast<size_t>(k.tuples()) * grid.nodes(), cplx(0.0));
  return k;
}

Kernel* KernelSequence::find(int m, int n) {
  auto it = kernels.find({m, n});
  return it == kernels.end() ? nullptr : &it->second;
}

const Kernel* KernelSequence::find(int m, int n) const {
  auto it = kernels.find({m, n});
  return it == kernels.end() ? nullptr : &it->second;
}

int KernelSequence::tuple_index(const int* md, int count) const {
  int t = 0;
  for (int i = 0; i < count; ++i) t = t * modes.size() + md[i];
  return t;
}

void KernelSequence::tuple_modes(int tuple, int count, int* out) const {
  for (int i = count - 1; i >= 0; --i) {
    out[i] = tuple % modes.size();
    tuple /= modes.size();
  }
}

cplx KernelSequence::eval(const Kernel& k, int tuple, double r, const Vec3& l) const {
  int idx[16];
  double w[16];
  const int c = grid.stencil(r, l, idx, w);
  const cplx* base = k.data.data() + static_cast<size_t>(tuple) * grid.nodes();
  cplx s = 0.0;
  for (int i = 0; i < c; ++i) s += w[i] * base[idx[i]];
  return s;
}

cplx KernelSequence::eval(int m, int n, int tuple, double r, const Vec3& l) const {
  const Kernel* k = find(m, n);
  if (!k) return 0.0;
  return eval(*k, tuple, r, l);
}

double KernelSequence::tuple_factor(int tuple, int count) const {
  int md[8];
  tuple_modes(tuple, count, md);
  double f = 1.0;
  for (int i = 0; i < count; ++i) f /= std::sqrt(modes.modes[md[i]].energy);
  return f;
}

nlohmann::json KernelSequence::dump() const {
  nlohmann::json j;
  j["schema"] = "srg.kernels/1";
  j["grid"] = grid.dump();
  j["modes"] = modes.dump();
  j["p"] = {p.x(), p.y(), p.z()};
  j["z"] = {z.real(), z.imag()};
  j["dropped_mass"] = dropped_mass;
  auto& arr = j["kernels"] = nlohmann::json::array();
  for (const auto& [key, k] : kernels) {
    std::vector<double> re(k.data.size()), im(k.data.size());
    for (size_t i = 0; i < k.data.size(); ++i) {
      re[i] = k.data[i].real();
      im[i] = k.data[i].imag();
    }
    arr.push_back({{"m", k.m}, {"n", k.n}, {"re", re}, {"im", im}});
  }
  return j;
}

KernelSequence KernelSequence::load(const nlohmann::json& j) {
  if (j.value("schema", "") != "srg.kernels/1") throw std::invalid_argument("kernel dump: unknown schema");
  const auto& g = j.at("grid");
  KernelSequence seq(KernelGrid(g.at("dim"), g.at("ratio"), g.at("r_per_level"), g.at("r_levels"), g.at("t_nodes")),
                     ModeGrid());
  const auto& md = j.at("modes");
  seq.modes.dim = md.at("dim");
  seq.modes.levels = md.at("levels");
  seq.modes.per_level = md.at("per_level");
  seq.modes.ratio = md.at("ratio");
  for (const auto& e : md.at("modes")) {
    Mode mode;
    mode.level = e.at("level");
    mode.slot = e.at("slot");
    mode.energy = e.at("energy");
    mode.k = Vec3(e.at("k")[0], e.at("k")[1], e.at("k")[2]);
    mode.weight = e.at("weight");
    seq.modes.modes.push_back(mode);
  }
  seq.p = Vec3(j.at("p")[0], j.at("p")[1], j.at("p")[2]);
  seq.z = cplx(j.at("z")[0], j.at("z")[1]);
  seq.dropped_mass = j.value("dropped_mass", 0.0);
  for (const auto& e : j.at("kernels")) {
    Kernel& k = seq.add(e.at("m"), e.at("n"));
    const auto& re = e.at("re");
    const auto& im = e.at("im");
    if (re.size() != k.data.size() || im.size() != k.data.size()) {
      throw std::invalid_argument("kernel dump: array size does not match grid");
    }
    for (size_t i = 0; i < k.data.size(); ++i) k.data[i] = cplx(re[i].get<double>(), im[i].get<double>());
  }
  return seq;
}

nlohmann::json NormLedger::dump() const {
  nlohmann::json j{{"gamma", gamma}, {"delta", delta}, {"eps", eps}, {"dropped", dropped}};
  auto& s = j["sharp"] = nlohmann::json::object();
  for (const auto& [key, v] : sharp) s[std::to_string(key.first) + "," + std::to_string(key.second)] = v;
  return j;
}

void node_derivatives(const KernelGrid& g, const cplx* f, int node, cplx& dr, cplx dl[3]) {
  const int nt = g.nt();
  const int ir0 = node / nt;
  const int it = node % nt;
  const int ir = ir0 == 0 ? 1 : ir0;
  const int axes = g.dim == 1 ? 1 : 3;
  const int stride[3] = {g.dim == 1 ? 1 : g.t_nodes * g.t_nodes, g.t_nodes, 1};
  int tidx[3];
  if (g.dim == 1) {
    tidx[0] = it;
  } else {
    tidx[0] = it / (g.t_nodes * g.t_nodes);
    tidx[1] = (it / g.t_nodes) % g.t_nodes;
    tidx[2] = it % g.t_nodes;
  }
  const double h = g.t[1] - g.t[0];
  const double rv = g.r[ir];
  Vec3 tv = g.node_t(node);
  dl[0] = dl[1] = dl[2] = 0.0;
  for (int a = 0; a < axes; ++a) {
    const int k = tidx[a];
    const int base = ir * nt + it - k * stride[a];
    auto at = [&](int kk) { return f[base + kk * stride[a]]; };
    cplx dt;
    if (k == 0) {
      dt = (-3.0 * at(0) + 4.0 * at(1) - at(2)) / (2 * h);
    } else if (k == g.t_nodes - 1) {
      dt = (3.0 * at(k) - 4.0 * at(k - 1) + at(k - 2)) / (2 * h);
    } else {
      dt = (at(k + 1) - at(k - 1)) / (2 * h);
    }
    dl[a] = dt / rv;
  }
  // d/dr at fixed t
  const int nr = g.nr();
  int i0;
  int pos;
  if (ir0 == 0) {
    i0 = 0;
    pos = 0;
  } else if (ir0 == nr - 1) {
    i0 = nr - 3;
    pos = 2;
  } else {
    i0 = ir0 - 1;
    pos = 1;
  }
  // r = 0 only holds l = 0: differentiate along the t = 0 column
  const int jt = ir0 == 0 ? nt / 2 : it;
  const double x[3] = {g.r[i0], g.r[i0 + 1], g.r[i0 + 2]};
  const cplx fv[3] = {f[i0 * nt + jt], f[(i0 + 1) * nt + jt], f[(i0 + 2) * nt + jt]};
  cplx drt;
  d3(x, fv, pos, drt);
  cplx corr = 0.0;
  if (ir0 > 0) {
    for (int a = 0; a < axes; ++a) corr += tv[a] * dl[a];
  }
  dr = drt - corr;
}

namespace {

double sharp_parts(const KernelSequence& seq, const Kernel& k, bool weighted, double& v0, double& sr, double sl[3]) {
  const KernelGrid& g = seq.grid;
  const int nodes = g.nodes();
  const int cnt = k.m + k.n;
  v0 = 0;
  sr = 0;
  sl[0] = sl[1] = sl[2] = 0;
  double sup = 0;
  for (int tu = 0; tu < k.tuples(); ++tu) {
    const double fac = weighted ? seq.tuple_factor(tu, cnt) : 1.0;
    const cplx* f = k.data.data() + static_cast<size_t>(tu) * nodes;
    for (int nd = 0; nd < nodes; ++nd) {
      if (!g.in_base(nd)) continue;
      sup = std::max(sup, std::abs(f[nd]) * fac);
      cplx dr;
      cplx dl[3];
      node_derivatives(g, f, nd, dr, dl);
      sr = std::max(sr, std::abs(dr) * fac);
      for (int a = 0; a < 3; ++a) sl[a] = std::max(sl[a], std::abs(dl[a]) * fac);
    }
    if (tu == 0) {
      int idx[16];
      double w[16];
      const int c = g.stencil(0.0, Vec3::Zero(), idx, w);
      cplx s = 0;
      for (int i = 0; i < c; ++i) s += w[i] * f[idx[i]];
      v0 = std::abs(s);
    }
  }
  return sup;
}

}  // namespace

double norm_half(const KernelSequence& seq, const Kernel& k) {
  const int nodes = seq.grid.nodes();
  double sup = 0;
  for (int tu = 0; tu < k.tuples(); ++tu) {
    const double fac = seq.tuple_factor(tu, k.m + k.n);
    const cplx* f = k.data.data() + static_cast<size_t>(tu) * nodes;
    for (int nd = 0; nd < nodes; ++nd) {
      if (seq.grid.in_base(nd)) sup = std::max(sup, std::abs(f[nd]) * fac);
    }
  }
  return sup;
}

double norm_sharp(const KernelSequence& seq, const Kernel& k) {
  if (seq.grid.nr() < 3 || seq.grid.t_nodes < 3) throw std::invalid_argument("norm_sharp: grid too coarse for stencil");
  double v0, sr, sl[3];
  if (k.m + k.n == 0) {
    sharp_parts(seq, k, false, v0, sr, sl);
    return v0 + sr + sl[0] + sl[1] + sl[2];
  }
  const double sup = sharp_parts(seq, k, true, v0, sr, sl);
  return sup + sr + sl[0] + sl[1] + sl[2];
}

double norm_xi(const KernelSequence& seq, double xi) {
  double s = 0;
  for (const auto& [key, k] : seq.kernels) {
    const int mn = key.first + key.second;
    if (mn == 0) continue;
    s += std::pow(xi, -mn) * norm_sharp(seq, k);
  }
  return s + seq.dropped_mass;
}

NormLedger polydisc_measure(const KernelSequence& seq, double m, double xi) {
  const Kernel* w00 = seq.find(0, 0);
  if (!w00) throw std::invalid_argument("polydisc_measure: sequence has no (0,0) kernel");
  NormLedger led;
  const KernelGrid& g = seq.grid;
  Kernel dev = *w00;
  cplx origin = seq.eval(*w00, 0, 0.0, Vec3::Zero());
  for (int nd = 0; nd < g.nodes(); ++nd) {
    const double r = g.node_r(nd);
    const Vec3 l = g.node_l(nd);
    dev.data[nd] -= origin + (r - seq.p.dot(l) / m);
  }
  led.gamma = norm_sharp(seq, dev);
  led.delta = std::abs(origin + seq.z);
  led.eps = norm_xi(seq, xi);
  led.dropped = seq.dropped_mass;
  for (const auto& [key, k] : seq.kernels) led.sharp[key] = norm_sharp(seq, k);
  return led;
}

SpMat assemble_monomial(const FockBasis& basis, int m, int n, const MonomialKernel& kernel) {
  const ModeGrid& grid = basis.grid;
  const int nm = grid.size();
  std::vector<Eigen::Triplet<cplx>> trip;
  std::vector<int> md(static_cast<size_t>(m + n));
  std::vector<double> sqw(nm);
  for (int i = 0; i < nm; ++i) sqw[i] = std::sqrt(grid.modes[i].weight);
  const int ctuples = ipow(nm, m);
  for (int j = 0; j < basis.dim(); ++j) {
    // ordered annihilation tuples b(kt_1)...b(kt_n), rightmost acts first
    std::function<void(int, std::vector<int>&, double, double, Vec3)> ann = [&](int pos, std::vector<int>& st,
                                                                             double amp, double e, Vec3 P) {
      if (pos < 0) {
        for (int ct = 0; ct < ctuples; ++ct) {
          int c = ct;
          for (int i = m - 1; i >= 0; --i) {
            md[i] = c % nm;
            c /= nm;
          }
          const cplx kv = kernel(md.data(), e, P);
          if (kv == 0.0) continue;
          std::vector<int> out = st;
          double a2 = amp;
          for (int i = m - 1; i >= 0; --i) a2 *= create_in_place(out, md[i]) * sqw[md[i]];
          const int row = basis.find(out);
          if (row >= 0) trip.emplace_back(row, j, a2 * kv);
        }
        return;
      }
      // distinct modes present in the state
      for (size_t s = 0; s < st.size(); ++s) {
        if (s > 0 && st[s] == st[s - 1]) continue;
        const int k = st[s];
        std::vector<int> next = st;
        const double a = annihilate_in_place(next, k);
        md[m + pos] = k;
        ann(pos - 1, next, amp * a * sqw[k], e - grid.modes[k].energy, P - grid.modes[k].k);
      }
    };
    std::vector<int> st = basis.states[j];
    ann(n - 1, st, 1.0, basis.energy[j], basis.momentum[j]);
  }
  SpMat out(basis.dim(), basis.dim());
  out.setFromTriplets(trip.begin(), trip.end());
  return out;
}

SpMat assemble_operator(const KernelSequence& seq, const FockBasis& basis) {
  if (basis.grid.size() != seq.modes.size()) throw std::invalid_argument("assemble_operator: basis/grid mismatch");
  for (int i = 0; i < seq.modes.size(); ++i) {
    if (std::abs(basis.grid.modes[i].energy - seq.modes.modes[i].energy) > 1e-14) {
      throw std::invalid_argument("assemble_operator: basis/grid mismatch");
    }
  }
  SpMat h(basis.dim(), basis.dim());
  for (const auto& [key, k] : seq.kernels) {
    const Kernel* kp = &k;
    const int cnt = key.first + key.second;
    h += assemble_monomial(basis, key.first, key.second, [&](const int* md, double r, const Vec3& l) {
      return seq.eval(*kp, seq.tuple_index(md, cnt), r, l);
    });
  }
  return h;
}

KernelSequence scale_transform(const KernelSequence& seq, double rho) {
  const int rs = seq.grid.r_shift(rho);
  const double e = std::log(rho) / std::log(seq.modes.ratio);
  const int s = static_cast<int>(std::lround(e));
  if (rs < 0 || std::abs(e - s) > 1e-9) throw std::invalid_argument("scale_transform: rho is not a grid power");
  ModeGrid md = seq.modes;
  md.levels = std::max(0, seq.modes.levels - s);
  md.modes.resize(static_cast<size_t>(md.levels * md.per_level));
  KernelSequence out(seq.grid, md);
  out.p = seq.p;
  out.z = seq.z;
  out.dropped_mass = seq.dropped_mass;
  const KernelGrid& g = seq.grid;
  for (const auto& [key, k] : seq.kernels) {
    const int cnt = key.first + key.second;
    Kernel& o = out.add(key.first, key.second);
    const double fac = std::pow(rho, 1.5 * cnt - 1.0);
    int mdx[8];
    for (int tu = 0; tu < o.tuples(); ++tu) {
      out.tuple_modes(tu, cnt, mdx);
      for (int i = 0; i < cnt; ++i) mdx[i] = seq.modes.shifted(mdx[i], s);
      const int src = seq.tuple_index(mdx, cnt);
      for (int nd = 0; nd < g.nodes(); ++nd) {
        const int ir = nd / g.nt();
        const int it = nd % g.nt();
        cplx v;
        if (ir == 0) {
          v = k.data[static_cast<size_t>(src) * g.nodes() + nd];
        } else if (ir - rs >= 1) {
          v = k.data[static_cast<size_t>(src) * g.nodes() + g.node(ir - rs, it)];
        } else {
          v = seq.eval(k, src, rho * g.node_r(nd), rho * g.node_l(nd));
        }
        o.data[static_cast<size_t>(tu) * g.nodes() + nd] = fac * v;
      }
    }
  }
  return out;
}

}  // namespace srg
