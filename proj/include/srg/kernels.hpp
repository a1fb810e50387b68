#pragma once
// Sampled kernel sequences w = (w_{m,n}), their norms, polydisc measures and
// the assembly map into Fock operators.

#include <functional>
#include <map>
#include <utility>
#include <vector>

#include <json.hpp>

#include "srg/fockspace.hpp"
#include "srg/model.hpp"

namespace srg {

// Sampling grid over B = {(r,l): |l| <= r <= 1}. Nodes are (r, t) with l = r*t;
// r runs over 0 and ratio^(j/R), j = 0..R*r_levels; t is uniform on [-1,1]
// per component (product grid in d=3).
class KernelGrid {
 public:
  KernelGrid() = default;
  KernelGrid(int dim, double ratio, int r_per_level, int r_levels, int t_nodes);
  static KernelGrid from_params(const ModelParams& params);

  int dim = 1;
  double ratio = 0.5;
  int r_per_level = 1;
  int r_levels = 0;
  int t_nodes = 3;
  std::vector<double> r;  // ascending, r[0] = 0, r.back() = 1
  std::vector<double> t;

  int nr() const { return static_cast<int>(r.size()); }
  int nt() const { return dim == 1 ? t_nodes : t_nodes * t_nodes * t_nodes; }
  int nodes() const { return nr() * nt(); }
  int node(int ir, int it) const { return ir * nt() + it; }
  double node_r(int node) const { return r[node / nt()]; }
  Vec3 node_t(int node) const;
  Vec3 node_l(int node) const { return node_r(node) * node_t(node); }
  // |t| <= 1, i.e. the node lies in B
  bool in_base(int node) const;
  // multilinear stencil in (r, t); returns the number of entries written (<= 16)
  int stencil(double rr, const Vec3& l, int* idx, double* w) const;
  // grid index offset realizing r -> rho*r, or -1 when rho is not a power of ratio^(1/R)
  int r_shift(double rho) const;
  bool operator==(const KernelGrid& o) const;
  nlohmann::json dump() const;
};

struct Kernel {
  int m = 0;
  int n = 0;
  int nmodes = 0;
  std::vector<cplx> data;  // [tuple * nodes + node], tuples lexicographic (creators, then annihilators)

  int tuples() const;
};

class KernelSequence {
 public:
  KernelSequence() = default;
  KernelSequence(KernelGrid grid, ModeGrid modes);

  KernelGrid grid;
  ModeGrid modes;
  std::map<std::pair<int, int>, Kernel> kernels;
  Vec3 p = Vec3::Zero();
  cplx z = 0.0;
  double dropped_mass = 0.0;

  Kernel& add(int m, int n);
  Kernel* find(int m, int n);
  const Kernel* find(int m, int n) const;
  int tuple_index(const int* modes, int count) const;
  // modes of a tuple index
  void tuple_modes(int tuple, int count, int* out) const;
  cplx eval(const Kernel& k, int tuple, double r, const Vec3& l) const;
  cplx eval(int m, int n, int tuple, double r, const Vec3& l) const;
  // sup_K |K|^{-1/2} over all modes of a tuple
  double tuple_factor(int tuple, int count) const;

  nlohmann::json dump() const;
  static KernelSequence load(const nlohmann::json& j);
};

struct NormLedger {
  double gamma = 0;
  double delta = 0;
  double eps = 0;
  double dropped = 0;
  std::map<std::pair<int, int>, double> sharp;
  nlohmann::json dump() const;
};

// FD derivatives at a node: d/dr at fixed l and d/dl_i
void node_derivatives(const KernelGrid& g, const cplx* values, int node, cplx& dr, cplx dl[3]);

double norm_half(const KernelSequence& seq, const Kernel& k);
double norm_sharp(const KernelSequence& seq, const Kernel& k);
double norm_xi(const KernelSequence& seq, double xi);
NormLedger polydisc_measure(const KernelSequence& seq, double m, double xi);

// Wick monomial on a basis; kernel(modes, r, l) gets m creator modes then n annihilator modes
using MonomialKernel = std::function<cplx(const int* modes, double r, const Vec3& l)>;
SpMat assemble_monomial(const FockBasis& basis, int m, int n, const MonomialKernel& kernel);
SpMat assemble_operator(const KernelSequence& seq, const FockBasis& basis);

// s_rho on every kernel; the output mode grid drops the levels that leave the grid
KernelSequence scale_transform(const KernelSequence& seq, double rho);

}  // namespace srg
