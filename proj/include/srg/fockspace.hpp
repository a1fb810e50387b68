#pragma once
// Truncated bosonic Fock space over a rho-geometric photon grid.

#include <Eigen/Sparse>
#include <functional>
#include <limits>
#include <map>
#include <vector>

#include <json.hpp>

#include "srg/model.hpp"

namespace srg {

using SpMat = Eigen::SparseMatrix<cplx>;
using MatX = Eigen::MatrixXcd;
using VecX = Eigen::VectorXcd;

struct Mode {
  int level = 0;
  int slot = 0;
  double energy = 0;
  Vec3 k = Vec3::Zero();
  double weight = 0;
  Mat2 coupling = Mat2::Zero();
};

// Radial shells (q^(i+1), q^i], node at q^(i+1/2), i = 0..levels-1, with
// q = rho^(1/levels_per_rho). d=1 uses the measure 2 pi k^2 dk on each half line;
// d=3 splits the shell into 6 axis cones with 2 polarizations each.
class ModeGrid {
 public:
  ModeGrid() = default;
  ModeGrid(const ModelParams& params, int levels);

  int dim = 1;
  int levels = 0;
  int per_level = 0;
  int levels_per_rho = 1;
  double ratio = 0.5;
  std::vector<Mode> modes;

  int size() const { return static_cast<int>(modes.size()); }
  int index(int level, int slot) const { return level * per_level + slot; }
  // mode with the same slot, `dlevel` shells lower in energy; -1 if absent
  int shifted(int idx, int dlevel) const;
  double weight_sum() const;
  nlohmann::json dump() const;
};

class FockBasis {
 public:
  FockBasis() = default;
  FockBasis(ModeGrid grid, int n_max, double energy_cap = std::numeric_limits<double>::infinity());

  ModeGrid grid;
  int n_max = 0;
  double energy_cap = 0;
  std::vector<std::vector<int>> states;  // sorted mode lists
  std::vector<double> energy;
  std::vector<Vec3> momentum;

  int dim() const { return static_cast<int>(states.size()); }
  int find(const std::vector<int>& state) const;
  nlohmann::json dump() const;

 private:
  std::map<std::vector<int>, int> lookup_;
};

// b_k / b_k^* on a sorted occupation list; returns the amplitude (0 when b_k hits an empty mode)
double annihilate_in_place(std::vector<int>& state, int k);
double create_in_place(std::vector<int>& state, int k);

SpMat ladder(const FockBasis& basis, int mode, bool create);
SpMat functional_calculus(const FockBasis& basis, const std::function<cplx(double, const Vec3&)>& f);
// Gamma_rho: maps the H_f <= rho sector onto the reduced space (momenta scaled by 1/rho)
SpMat dilation(const FockBasis& basis, double rho);
// state-wise level shift from one basis into another (negative shift raises energies)
SpMat dilation_map(const FockBasis& from, const FockBasis& to, int dlevels);
// spin (2x2) tensor Fock operator, spin index major
SpMat spin_kron(const Mat2& s, const SpMat& a);
SpMat identity(int n);

}  // namespace srg
