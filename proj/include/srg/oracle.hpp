#pragma once
// Direct truncated-Fock diagonalization of the fiber Hamiltonian, second-order
// perturbation theory and dispersion sweeps.

#include <functional>
#include <limits>
#include <vector>

#include <json.hpp>

#include "srg/fockspace.hpp"
#include "srg/model.hpp"

namespace srg {

// spin (x) Fock, spin index major: row = s * basis.dim() + j
SpMat build_fiber_hamiltonian(const ModelParams& params, const FockBasis& basis);
SpMat interaction_operator(const ModelParams& params, const FockBasis& basis);

struct GroundState {
  double energy = 0;
  VecX vector;
  double residual = 0;
  double gap = std::numeric_limits<double>::quiet_NaN();
  int iterations = 0;
};

class SolverError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// seeded Lanczos with full reorthogonalization; dense below `dense_below`
GroundState ground_energy(const SpMat& h, unsigned seed = 1, int dense_below = 2000);

double pt2_energy(const ModelParams& params, const ModeGrid& grid);

struct DispersionRecord {
  double p = 0;
  double e_oracle = 0;
  double e_rg = std::numeric_limits<double>::quiet_NaN();
  double e_pt2 = 0;
  double gap = 0;
  double residual = 0;
};

// E_rg is filled by `rg` when given
std::vector<DispersionRecord> dispersion_sweep(const ModelParams& params, const std::vector<double>& ps,
                                               const std::function<double(const ModelParams&)>& rg = nullptr);

struct EffectiveMass {
  double m_fd = 0;
  double m_fit = 0;
  double fit_residual = 0;
  double spread = 0;     // max - min of E
  double asymmetry = 0;  // max |E(p) - E(-p)|
  double slope0 = 0;     // dE/dp at 0
  std::vector<double> coeffs;  // a0, a2, a4, a6
  nlohmann::json dump() const;
};
EffectiveMass effective_mass(const std::vector<DispersionRecord>& records, double m, bool use_rg = false);

}  // namespace srg
