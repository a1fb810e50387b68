#include "srg/wick.hpp"

#include <algorithm>
#include <numeric>
#include <random>
#include <sstream>
#include <stdexcept>

#include "srg/kernels.hpp"

namespace srg {

bool VertexSpec::operator<(const VertexSpec& o) const {
  return std::tie(m, p, n, q) < std::tie(o.m, o.p, o.n, o.q);
}

int TermSpec::M() const {
  int s = 0;
  for (const auto& x : v) s += x.m;
  return s;
}

int TermSpec::N() const {
  int s = 0;
  for (const auto& x : v) s += x.n;
  return s;
}

int TermSpec::lines() const {
  int s = 0;
  for (const auto& x : v) s += x.p;
  return s;
}

bool TermSpec::vacuum_possible() const {
  int alive = 0;
  for (int i = L() - 1; i >= 0; --i) {
    if (v[i].q > alive) return false;
    alive += v[i].p - v[i].q;
  }
  return alive == 0;
}

void TermSpec::validate() const {
  if (v.empty()) throw std::invalid_argument("TermSpec: depth must be at least 1");
  for (const auto& x : v) {
    if (x.m < 0 || x.n < 0 || x.p < 0 || x.q < 0) throw std::invalid_argument("TermSpec: negative entry");
    if (x.m + x.n + x.p + x.q < 1) throw std::invalid_argument("TermSpec: empty vertex");
  }
}

std::string TermSpec::str() const {
  std::ostringstream os;
  for (size_t i = 0; i < v.size(); ++i) {
    if (i) os << ' ';
    os << '(' << v[i].m << ',' << v[i].p << ',' << v[i].n << ',' << v[i].q << ')';
  }
  return os.str();
}

std::vector<ContractionScheme> enumerate_contractions(const std::vector<bool>& pattern) {
  const int n = static_cast<int>(pattern.size());
  if (n == 0) throw std::invalid_argument("enumerate_contractions: empty pattern");
  std::vector<ContractionScheme> out;
  for (unsigned mask = 0; mask < (1u << n); ++mask) {
    // bit set = contracted
    std::vector<int> comp, unc;
    for (int i = 0; i < n; ++i) ((mask >> i) & 1u ? comp : unc).push_back(i);
    if (comp.size() % 2) continue;
    std::vector<std::pair<int, int>> pairs;
    std::vector<bool> used(n, false);
    std::function<void(size_t)> rec = [&](size_t k) {
      while (k < comp.size() && used[comp[k]]) ++k;
      if (k == comp.size()) {
        out.push_back({unc, pairs});
        return;
      }
      const int a = comp[k];
      if (pattern[a]) return;  // leftmost open operator is a creator: vacuum expectation vanishes
      used[a] = true;
      for (size_t j = k + 1; j < comp.size(); ++j) {
        const int c = comp[j];
        if (used[c] || !pattern[c]) continue;
        used[c] = true;
        pairs.emplace_back(a, c);
        rec(k + 1);
        pairs.pop_back();
        used[c] = false;
      }
      used[a] = false;
    };
    rec(0);
  }
  return out;
}

ShiftRecord pull_shifts(const TermSpec& spec, const std::vector<std::vector<Vec3>>& kc,
                        const std::vector<std::vector<Vec3>>& ka) {
  const int L = spec.L();
  if (static_cast<int>(kc.size()) != L || static_cast<int>(ka.size()) != L) {
    throw std::invalid_argument("pull_shifts: assignment length does not match depth");
  }
  std::vector<double> ec(L + 1, 0.0), ea(L + 1, 0.0);
  std::vector<Vec3> pc(L + 1, Vec3::Zero()), pa(L + 1, Vec3::Zero());
  for (int i = 0; i < L; ++i) {
    if (static_cast<int>(kc[i].size()) != spec.v[i].m || static_cast<int>(ka[i].size()) != spec.v[i].n) {
      throw std::invalid_argument("pull_shifts: multiplicity mismatch at vertex " + std::to_string(i + 1));
    }
    for (const auto& k : kc[i]) {
      ec[i + 1] += k.norm();
      pc[i + 1] += k;
    }
    for (const auto& k : ka[i]) {
      ea[i + 1] += k.norm();
      pa[i + 1] += k;
    }
  }
  ShiftRecord s;
  s.r.assign(L + 1, 0.0);
  s.rt.assign(L + 1, 0.0);
  s.l.assign(L + 1, Vec3::Zero());
  s.lt.assign(L + 1, Vec3::Zero());
  for (int i = 0; i <= L; ++i) {
    for (int j = 1; j <= L; ++j) {
      if (j < i) {
        s.r[i] += ea[j];
        s.l[i] += pa[j];
      }
      if (j <= i) {
        s.rt[i] += ea[j];
        s.lt[i] += pa[j];
      }
      if (j > i) {
        s.r[i] += ec[j];
        s.l[i] += pc[j];
        s.rt[i] += ec[j];
        s.lt[i] += pc[j];
      }
    }
  }
  s.r[0] = 0.0;
  s.l[0] = Vec3::Zero();
  return s;
}

boost::multiprecision::cpp_int combinatorial_weight(const TermSpec& spec) {
  using boost::multiprecision::cpp_int;
  auto binom = [](int n, int k) {
    cpp_int r = 1;
    for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
    return r;
  };
  cpp_int c = 1;
  for (const auto& x : spec.v) c *= binom(x.m + x.p, x.p) * binom(x.n + x.q, x.q);
  return c;
}

void symmetrize(std::vector<cplx>& data, int nmodes, int M, int N, int stride) {
  const int cnt = M + N;
  if (cnt <= 1) return;
  int tuples = 1;
  for (int i = 0; i < cnt; ++i) tuples *= nmodes;
  if (static_cast<size_t>(tuples) * stride != data.size()) throw std::invalid_argument("symmetrize: size mismatch");
  std::vector<std::vector<int>> perms_c, perms_a;
  std::vector<int> pc(M), pa(N);
  std::iota(pc.begin(), pc.end(), 0);
  std::iota(pa.begin(), pa.end(), 0);
  do perms_c.push_back(pc);
  while (std::next_permutation(pc.begin(), pc.end()));
  do perms_a.push_back(pa);
  while (std::next_permutation(pa.begin(), pa.end()));
  const double norm = 1.0 / static_cast<double>(perms_c.size() * perms_a.size());
  std::vector<cplx> out(data.size(), 0.0);
  std::vector<int> md(cnt), pm(cnt);
  for (int t = 0; t < tuples; ++t) {
    int c = t;
    for (int i = cnt - 1; i >= 0; --i) {
      md[i] = c % nmodes;
      c /= nmodes;
    }
    for (const auto& a : perms_c) {
      for (const auto& b : perms_a) {
        for (int i = 0; i < M; ++i) pm[i] = md[a[i]];
        for (int i = 0; i < N; ++i) pm[M + i] = md[M + b[i]];
        int src = 0;
        for (int i = 0; i < cnt; ++i) src = src * nmodes + pm[i];
        for (int s = 0; s < stride; ++s) out[static_cast<size_t>(t) * stride + s] += data[static_cast<size_t>(src) * stride + s];
      }
    }
  }
  for (auto& x : out) x *= norm;
  data.swap(out);
}

std::vector<TermSpec> enumerate_specs(int M, int N, int L, const std::function<bool(int, int)>& allowed) {
  std::vector<VertexSpec> choices;
  for (int m = 0; m <= M; ++m) {
    for (int n = 0; n <= N; ++n) {
      for (int p = 0; p <= 4; ++p) {
        for (int q = 0; q <= 4; ++q) {
          if (m + n + p + q < 1 || !allowed(m + p, n + q)) continue;
          choices.push_back({m, p, n, q});
        }
      }
    }
  }
  std::vector<TermSpec> out;
  TermSpec cur;
  std::function<void(int, int, int)> rec = [&](int i, int mleft, int nleft) {
    if (i == L) {
      if (mleft == 0 && nleft == 0 && cur.vacuum_possible()) out.push_back(cur);
      return;
    }
    for (const auto& c : choices) {
      if (c.m > mleft || c.n > nleft) continue;
      cur.v.push_back(c);
      rec(i + 1, mleft - c.m, nleft - c.n);
      cur.v.pop_back();
    }
  };
  rec(0, M, N);
  return out;
}

std::vector<LineSet> line_structures(const TermSpec& spec) {
  const int L = spec.L();
  std::vector<int> ann_slots, cre_slots;  // vertex of each slot
  for (int i = 0; i < L; ++i) {
    for (int k = 0; k < spec.v[i].q; ++k) ann_slots.push_back(i);
    for (int k = 0; k < spec.v[i].p; ++k) cre_slots.push_back(i);
  }
  std::map<std::vector<std::pair<int, int>>, long> acc;
  if (ann_slots.size() != cre_slots.size()) return {};
  std::vector<bool> used(cre_slots.size(), false);
  std::vector<std::pair<int, int>> cur;
  std::function<void(size_t)> rec = [&](size_t k) {
    if (k == ann_slots.size()) {
      auto key = cur;
      std::sort(key.begin(), key.end());
      ++acc[key];
      return;
    }
    for (size_t j = 0; j < cre_slots.size(); ++j) {
      if (used[j] || cre_slots[j] <= ann_slots[k]) continue;
      used[j] = true;
      cur.emplace_back(ann_slots[k], cre_slots[j]);
      rec(k + 1);
      cur.pop_back();
      used[j] = false;
    }
  };
  rec(0);
  std::vector<LineSet> out;
  for (auto& [lines, count] : acc) out.push_back({lines, count});
  return out;
}

nlohmann::json WickCheckReport::dump() const {
  return {{"chains", chains}, {"terms", terms}, {"max_dev", max_dev}, {"worst", worst}};
}

WickCheckReport wick_check(int max_depth, int max_legs, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> U(-1.0, 1.0);
  ModeGrid grid;
  grid.dim = 1;
  grid.levels = 1;
  grid.per_level = 2;
  grid.modes.resize(2);
  grid.modes[0].energy = 0.3;
  grid.modes[0].k = Vec3(0.3, 0, 0);
  grid.modes[0].weight = 0.7;
  grid.modes[1].energy = 0.45;
  grid.modes[1].k = Vec3(-0.45, 0, 0);
  grid.modes[1].weight = 0.4;
  const int n_block = 3;
  const FockBasis basis(grid, n_block + 2 * max_depth);

  // random analytic kernels, symmetric in creators and in annihilators
  struct RandomKernel {
    std::map<std::pair<std::vector<int>, std::vector<int>>, cplx> coef;
    double a = 0, b = 0;
  };
  std::map<std::pair<int, int>, RandomKernel> kern;
  std::vector<std::pair<int, int>> types;
  for (int Mi = 0; Mi <= max_legs; ++Mi) {
    for (int Ni = 0; Ni + Mi <= max_legs; ++Ni) {
      if (Mi + Ni == 0) continue;
      types.emplace_back(Mi, Ni);
      RandomKernel& rk = kern[{Mi, Ni}];
      rk.a = 0.5 * U(rng);
      rk.b = 0.5 * U(rng);
      const int cnt = Mi + Ni;
      for (int t = 0; t < (1 << cnt); ++t) {
        std::vector<int> c, a;
        for (int i = 0; i < cnt; ++i) ((i < Mi) ? c : a).push_back((t >> i) & 1);
        std::sort(c.begin(), c.end());
        std::sort(a.begin(), a.end());
        auto key = std::make_pair(c, a);
        if (!rk.coef.count(key)) rk.coef[key] = cplx(U(rng), U(rng));
      }
    }
  }
  auto kernel_value = [&](int Mi, int Ni, const int* md, double r, const Vec3& l) -> cplx {
    auto it = kern.find({Mi, Ni});
    if (it == kern.end()) return 0.0;
    std::vector<int> c(md, md + Mi), a(md + Mi, md + Mi + Ni);
    std::sort(c.begin(), c.end());
    std::sort(a.begin(), a.end());
    return it->second.coef.at({c, a}) * std::exp(it->second.a * r + it->second.b * l.x());
  };
  auto Ffun = [](double r, const Vec3& l) -> cplx { return 1.0 / cplx(r + 1.3 + 0.2 * l.x(), 0.1); };

  std::map<std::pair<int, int>, SpMat> Wmat;
  for (const auto& t : types) {
    Wmat[t] = assemble_monomial(basis, t.first, t.second, [&, t](const int* md, double r, const Vec3& l) {
      return kernel_value(t.first, t.second, md, r, l);
    });
  }
  const SpMat Fm = functional_calculus(basis, Ffun);
  std::vector<int> block;
  for (int i = 0; i < basis.dim(); ++i) {
    if (static_cast<int>(basis.states[i].size()) <= n_block) block.push_back(i);
  }

  ChainContext<cplx> ctx;
  ctx.modes = &basis.grid;
  ctx.rho = 1.0;
  ctx.chi_ends = false;
  ctx.vertex = kernel_value;
  ctx.F = Ffun;

  WickCheckReport rep;
  std::vector<std::pair<int, int>> chain;
  std::function<void()> run_chain = [&]() {
    const int L = static_cast<int>(chain.size());
    SpMat direct = Wmat[chain[0]];
    for (int i = 1; i < L; ++i) {
      SpMat t1 = direct * Fm;
      direct = t1 * Wmat[chain[i]];
    }
    SpMat wick(basis.dim(), basis.dim());
    // all splits into external / contracted legs
    TermSpec spec;
    spec.v.resize(L);
    std::function<void(int)> split = [&](int i) {
      if (i == L) {
        if (!spec.vacuum_possible()) return;
        const auto ls = line_structures(spec);
        if (ls.empty() && spec.lines() > 0) return;
        const double C = combinatorial_weight(spec).convert_to<double>();
        const int M = spec.M();
        const int N = spec.N();
        ++rep.terms;
        wick += C * assemble_monomial(basis, M, N, [&](const int* md, double r, const Vec3& l) {
          std::vector<std::vector<int>> ec(L), ea(L);
          int pc = 0, pa = M;
          for (int v = 0; v < L; ++v) {
            for (int k = 0; k < spec.v[v].m; ++k) ec[v].push_back(md[pc++]);
            for (int k = 0; k < spec.v[v].n; ++k) ea[v].push_back(md[pa++]);
          }
          return assemble_V<cplx>(ctx, spec, ls, r, l, ec, ea, cplx(0.0));
        });
        return;
      }
      const auto [Mi, Ni] = chain[i];
      for (int m = 0; m <= Mi; ++m) {
        for (int n = 0; n <= Ni; ++n) {
          spec.v[i] = {m, Mi - m, n, Ni - n};
          split(i + 1);
        }
      }
    };
    split(0);
    const MatX d = MatX(direct) - MatX(wick);
    double dev = 0;
    for (int a : block) {
      for (int b : block) dev = std::max(dev, std::abs(d(a, b)));
    }
    ++rep.chains;
    if (dev >= rep.max_dev) {
      rep.max_dev = dev;
      std::ostringstream os;
      for (const auto& c : chain) os << '[' << c.first << ',' << c.second << ']';
      rep.worst = os.str();
    }
  };
  std::function<void(int)> rec = [&](int depth) {
    if (depth > 0) run_chain();
    if (depth == max_depth) return;
    for (const auto& t : types) {
      chain.push_back(t);
      rec(depth + 1);
      chain.pop_back();
    }
  };
  rec(0);
  return rep;
}

}  // namespace srg
