#pragma once
// Wick ordering of chains W F W ... F W: contraction schemes, pull-through
// shifts, combinatorial weights, symmetrization and the vacuum-expectation
// kernels V that make up the renormalized sequence.

#include <array>
#include <boost/multiprecision/cpp_int.hpp>
#include <cmath>
#include <functional>
#include <map>
#include <utility>
#include <vector>

#include <json.hpp>

#include "srg/kernels.hpp"
#include "srg/fockspace.hpp"
#include "srg/model.hpp"

namespace srg {

// one vertex: m external creators, p contracted creators, n external annihilators, q contracted annihilators
struct VertexSpec {
  int m = 0;
  int p = 0;
  int n = 0;
  int q = 0;
  bool operator<(const VertexSpec& o) const;
  bool operator==(const VertexSpec& o) const = default;
};

struct TermSpec {
  std::vector<VertexSpec> v;

  int L() const { return static_cast<int>(v.size()); }
  int M() const;
  int N() const;
  int lines() const;
  // the contracted operators admit a nonzero vacuum expectation
  bool vacuum_possible() const;
  void validate() const;
  std::string str() const;
};

// Shifts indexed as vertices 1..L: r[i], l[i] for i >= 1 (entry 0 unused);
// rt[i], lt[i] for i = 0..L.
struct ShiftRecord {
  std::vector<double> r, rt;
  std::vector<Vec3> l, lt;
};

struct ContractionScheme {
  std::vector<int> uncontracted;             // pattern positions, in order
  std::vector<std::pair<int, int>> pairs;    // (annihilator position, creator position)
};

// pattern[i] = true for a creation operator; operators ordered left to right
std::vector<ContractionScheme> enumerate_contractions(const std::vector<bool>& pattern);

ShiftRecord pull_shifts(const TermSpec& spec, const std::vector<std::vector<Vec3>>& k_create,
                        const std::vector<std::vector<Vec3>>& k_annih);

boost::multiprecision::cpp_int combinatorial_weight(const TermSpec& spec);

// average over S_M x S_N of the photon arguments; data[tuple * stride + s]
void symmetrize(std::vector<cplx>& data, int nmodes, int M, int N, int stride);

// all specs of depth L with totals (M, N) whose vertex kernels (m+p, n+q) pass `allowed`
std::vector<TermSpec> enumerate_specs(int M, int N, int L, const std::function<bool(int, int)>& allowed);

// Line structures of a spec: each internal annihilator at vertex a is paired with a creator at
// vertex c > a. Returned as (lines, multiplicity), lines sorted.
struct LineSet {
  std::vector<std::pair<int, int>> lines;  // (a, c), 0-based vertices
  long count = 0;
};
std::vector<LineSet> line_structures(const TermSpec& spec);

// Everything is expressed in the units of the internal mode grid; external modes are
// passed already mapped onto it (level shift), external (r, l) are multiplied by rho.
template <class Value>
struct ChainContext {
  const ModeGrid* modes = nullptr;
  double rho = 1.0;
  bool chi_ends = true;
  bool project_reduced = false;
  // vertex(M, N, modes (creators then annihilators), r, l)
  std::function<Value(int, int, const int*, double, const Vec3&)> vertex;
  std::function<Value(double, const Vec3&)> F;
};

namespace detail {

template <class Value>
struct ChainWork {
  const ChainContext<Value>* ctx;
  const TermSpec* spec;
  const LineSet* ls;
  int L;
  double R0;
  Vec3 L0;
  // per-vertex external shifts (internal units)
  std::vector<double> rv, rg;
  std::vector<Vec3> lv, lg;
  std::vector<std::vector<int>> cre, ann;  // mode slots per vertex
  std::vector<int> x;
  Value sum;
  bool have = false;

  void run(size_t line, double wprod) {
    const auto& grid = *ctx->modes;
    if (line == x.size()) {
      leaf(wprod);
      return;
    }
    for (int k = 0; k < grid.size(); ++k) {
      x[line] = k;
      run(line + 1, wprod * grid.modes[k].weight);
    }
  }

  void leaf(double wprod) {
    const auto& grid = *ctx->modes;
    const auto& lines = ls->lines;
    Value acc;
    bool first = true;
    for (int i = 0; i < L; ++i) {
      double er = R0 + rv[i];
      Vec3 el = L0 + lv[i];
      for (size_t t = 0; t < lines.size(); ++t) {
        if (lines[t].first < i && i < lines[t].second) {
          er += grid.modes[x[t]].energy;
          el += grid.modes[x[t]].k;
        }
      }
      int md[16];
      int cnt = 0;
      for (int c : cre[i]) md[cnt++] = c;
      for (size_t t = 0; t < lines.size(); ++t) {
        if (lines[t].second == i) md[cnt++] = x[t];
      }
      const int Mi = cnt;
      for (int c : ann[i]) md[cnt++] = c;
      for (size_t t = 0; t < lines.size(); ++t) {
        if (lines[t].first == i) md[cnt++] = x[t];
      }
      Value v = ctx->vertex(Mi, cnt - Mi, md, er, el);
      acc = first ? v : Value(acc * v);
      first = false;
      if (i == L - 1) break;
      double fr = R0 + rg[i];
      Vec3 fl = L0 + lg[i];
      for (size_t t = 0; t < lines.size(); ++t) {
        if (lines[t].first <= i && i < lines[t].second) {
          fr += grid.modes[x[t]].energy;
          fl += grid.modes[x[t]].k;
        }
      }
      if (ctx->project_reduced && fr > 1.0 + 1e-12) return;
      acc = acc * ctx->F(fr, fl);
    }
    if (!have) {
      sum = wprod * acc;
      have = true;
    } else {
      sum += wprod * acc;
    }
  }
};

}  // namespace detail

// V for one spec at the external point (r, l); ext_create[i] / ext_annih[i] are the mapped
// external modes of vertex i. Returns `zero` when the spec has no contribution.
template <class Value>
Value assemble_V(const ChainContext<Value>& ctx, const TermSpec& spec, const std::vector<LineSet>& structures,
                 double r, const Vec3& l, const std::vector<std::vector<int>>& ext_create,
                 const std::vector<std::vector<int>>& ext_annih, const Value& zero) {
  const auto& grid = *ctx.modes;
  const int L = spec.L();
  double tot_c = 0, tot_a = 0;
  Vec3 pc = Vec3::Zero(), pa = Vec3::Zero();
  std::vector<double> ec(L), ea(L);
  std::vector<Vec3> kc(L, Vec3::Zero()), ka(L, Vec3::Zero());
  for (int i = 0; i < L; ++i) {
    ec[i] = ea[i] = 0;
    for (int c : ext_create[i]) {
      ec[i] += grid.modes[c].energy;
      kc[i] += grid.modes[c].k;
    }
    for (int c : ext_annih[i]) {
      ea[i] += grid.modes[c].energy;
      ka[i] += grid.modes[c].k;
    }
    tot_c += ec[i];
    tot_a += ea[i];
    pc += kc[i];
    pa += ka[i];
  }
  const double R0 = ctx.rho * r;
  double ends = 1.0;
  if (ctx.chi_ends) ends = chi(R0 + tot_c, ctx.rho) * chi(R0 + tot_a, ctx.rho);
  if (ends == 0.0) return zero;
  detail::ChainWork<Value> w;
  w.ctx = &ctx;
  w.spec = &spec;
  w.L = L;
  w.R0 = R0;
  w.L0 = ctx.rho * l;
  w.rv.assign(L, 0.0);
  w.rg.assign(L, 0.0);
  w.lv.assign(L, Vec3::Zero());
  w.lg.assign(L, Vec3::Zero());
  // r_i = sum_{j<i} annihilated + sum_{j>i} created; rt_i = r_i + annihilated at i
  for (int i = 0; i < L; ++i) {
    for (int j = 0; j < i; ++j) {
      w.rv[i] += ea[j];
      w.lv[i] += ka[j];
    }
    for (int j = i + 1; j < L; ++j) {
      w.rv[i] += ec[j];
      w.lv[i] += kc[j];
    }
    w.rg[i] = w.rv[i] + ea[i];
    w.lg[i] = w.lv[i] + ka[i];
  }
  w.cre = ext_create;
  w.ann = ext_annih;
  Value total = zero;
  bool any = false;
  for (const auto& ls : structures) {
    w.ls = &ls;
    w.x.assign(ls.lines.size(), 0);
    w.have = false;
    w.run(0, 1.0);
    if (w.have) {
      total = any ? Value(total + static_cast<double>(ls.count) * w.sum) : Value(static_cast<double>(ls.count) * w.sum);
      any = true;
    }
  }
  if (!any) return zero;
  return ends * total;
}

// Values at several spectral parameters carried through one chain traversal.
template <class T>
struct Batch {
  static constexpr int kMax = 16;
  std::array<T, kMax> v;
  int n = 0;
  Batch() = default;
  Batch(const Batch& o) : n(o.n) {
    for (int i = 0; i < n; ++i) v[i] = o.v[i];
  }
  Batch& operator=(const Batch& o) {
    n = o.n;
    for (int i = 0; i < n; ++i) v[i] = o.v[i];
    return *this;
  }
  Batch& operator+=(const Batch& o) {
    for (int i = 0; i < n; ++i) v[i] += o.v[i];
    return *this;
  }
};
template <class T>
Batch<T> operator*(const Batch<T>& a, const Batch<T>& b) {
  Batch<T> r;
  r.n = a.n;
  for (int i = 0; i < a.n; ++i) r.v[i] = a.v[i] * b.v[i];
  return r;
}
template <class T>
Batch<T> operator+(const Batch<T>& a, const Batch<T>& b) {
  Batch<T> r = a;
  r += b;
  return r;
}
template <class T>
Batch<T> operator*(double s, const Batch<T>& a) {
  Batch<T> r;
  r.n = a.n;
  for (int i = 0; i < a.n; ++i) r.v[i] = s * a.v[i];
  return r;
}

// Calls sink(tuple, node, coeff * C(spec), V_spec(r, l, K)) for every spec of depth L with totals
// (M, N). ext_map sends an external mode to the internal grid (-1: absent). `skip` may veto a
// spec; returns the number of specs evaluated.
template <class Value, class Sink>
int accumulate_series(const ChainContext<Value>& ctx, const KernelGrid& grid, const std::vector<int>& ext_map, int M,
                      int N, int L, const std::function<bool(int, int)>& allowed, cplx coeff, const Value& zero,
                      Sink&& sink, const std::function<bool(const TermSpec&)>& skip = nullptr) {
  const int next = static_cast<int>(ext_map.size());
  const int cnt = M + N;
  int tuples = 1;
  for (int i = 0; i < cnt; ++i) tuples *= next;
  const int nodes = grid.nodes();
  int done = 0;
  for (const auto& spec : enumerate_specs(M, N, L, allowed)) {
    if (skip && skip(spec)) continue;
    const auto ls = line_structures(spec);
    if (ls.empty()) continue;
    const cplx c = coeff * combinatorial_weight(spec).template convert_to<double>();
    ++done;
    std::vector<std::vector<int>> ec(L), ea(L);
    int md[8];
    for (int tu = 0; tu < tuples; ++tu) {
      int t = tu;
      bool ok = true;
      for (int i = cnt - 1; i >= 0; --i) {
        md[i] = ext_map[t % next];
        t /= next;
        ok = ok && md[i] >= 0;
      }
      if (!ok) continue;
      int pc = 0, pa = M;
      for (int v = 0; v < L; ++v) {
        ec[v].clear();
        ea[v].clear();
        for (int k = 0; k < spec.v[v].m; ++k) ec[v].push_back(md[pc++]);
        for (int k = 0; k < spec.v[v].n; ++k) ea[v].push_back(md[pa++]);
      }
      for (int nd = 0; nd < nodes; ++nd) {
        sink(tu, nd, c, assemble_V<Value>(ctx, spec, ls, grid.node_r(nd), grid.node_l(nd), ec, ea, zero));
      }
    }
  }
  return done;
}

// Wick-identity suite: compare direct operator products with their Wick-ordered
// reassembly on a small padded Fock space.
struct WickCheckReport {
  int chains = 0;
  int terms = 0;
  double max_dev = 0;
  std::string worst;
  nlohmann::json dump() const;
};
WickCheckReport wick_check(int max_depth, int max_legs, unsigned seed);

}  // namespace srg
