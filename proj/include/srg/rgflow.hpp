#pragma once
// Renormalization map R_rho = S_rho o F_chi_rho o E_rho^{-1} on sampled kernel
// sequences, the iterated flow and ground-state reconstruction.

#include <stdexcept>
#include <vector>

#include <json.hpp>

#include "srg/firststep.hpp"
#include "srg/kernels.hpp"

namespace srg {

struct FlowOptions {
  int z_samples = 9;
  int n_max = 40;
  int n_min = 0;
  double tol = 1e-10;  // times mu
  double screen_tol = 1e-13;
  double zeta_seed = 0.0;  // tracked spectral parameter, units of mu
  double eps_slack = 1.5;
  int burn_in = 2;
  PolydiscTargets targets;
  nlohmann::json dump() const;
};

class FlowError : public std::runtime_error {
 public:
  FlowError(const std::string& what, int iteration, nlohmann::json last_good = {})
      : std::runtime_error(what), iteration_(iteration), last_good_(std::move(last_good)) {}
  int iteration() const { return iteration_; }
  const nlohmann::json& last_good() const { return last_good_; }

 private:
  int iteration_;
  nlohmann::json last_good_;
};

// Chebyshev points of the first kind on [-h, h]; the middle point of an odd set is exactly 0
std::vector<double> chebyshev_nodes(int n, double h);
// barycentric interpolation coefficients at z
std::vector<cplx> barycentric_coeffs(const std::vector<double>& nodes, cplx z);
cplx barycentric(const std::vector<double>& nodes, const std::vector<cplx>& values, cplx z);
KernelSequence interpolate_sequence(const std::vector<KernelSequence>& samples, const std::vector<double>& nodes,
                                    cplx z);

struct EInverse {
  cplx z = 0;
  double residual = 0;
  int iterations = 0;
  bool bisected = false;
};
// the z with -g(z)/rho = zeta; g is w00(z, 0, 0)
EInverse e_rho_inverse(const std::function<cplx(cplx)>& g, double rho, cplx zeta, double mu);

struct StepReport {
  int specs_evaluated = 0;
  int specs_screened = 0;
  double screened_mass = 0;
  double feshbach_margin = 0;        // min |w00| on Ran chibar
  std::vector<double> order_size;    // max |contribution| per depth L
  nlohmann::json dump() const;
};

// S_rho F_chi_rho(H(w)) for each sequence, all sharing one mode grid; z of the output is set by the caller
std::vector<KernelSequence> feshbach_scale_step(const std::vector<KernelSequence>& seqs, const ModelParams& params,
                                                const FlowOptions& opt, StepReport* report = nullptr);

struct FlowState {
  int n = 0;
  std::vector<double> zeta;          // sample points of this stage
  std::vector<KernelSequence> seqs;  // w^(n)(zeta_j)
  std::vector<cplx> g;               // w00(zeta_j; 0, 0)
  NormLedger ledger;                 // worst case over samples
  cplx e0 = 0;                       // e_{0,n}(zeta_seed)
  double alpha = 1;
  Vec3 beta = Vec3::Zero();
  double eps_ratio = 0;
  double cauchy_ratio = 0;
  double c_measured = 0;  // sup |d_z w00(z,0,0) + 1|
  StepReport step;
  nlohmann::json trace() const;
};

FlowState initial_state(const ModelParams& params, const FlowOptions& opt);
FlowState renormalize(const FlowState& state, const ModelParams& params, const FlowOptions& opt);

struct FlowResult {
  std::vector<FlowState> history;
  cplx z_inf = 0;  // rho0 * e_{0,inf}
  bool converged = false;
  int iterations = 0;
  double alpha = 1;
  Vec3 beta = Vec3::Zero();
  std::vector<cplx> z_chain;  // stage spectral parameters realizing zeta_seed, stage 0 first
  nlohmann::json summary() const;
};

// E_0^{-1} o ... o E_{n-1}^{-1}(zeta) through the first n stages
cplx e_composition(const std::vector<FlowState>& history, int n, cplx zeta, double rho, double mu,
                   std::vector<cplx>* chain = nullptr);

FlowResult run_flow(const ModelParams& params, const FlowOptions& opt = {});
FlowResult run_flow_from(FlowState start, const ModelParams& params, const FlowOptions& opt);

std::pair<double, Vec3> extract_alpha_beta(const FlowState& state, cplx zeta = 0.0);

// Psi = Q_{-1} Gamma_rho0^* Q_0 Gamma_rho^* ... Q_n (down x Omega) on `phys`
VecX ground_state(const ModelParams& params, const FlowResult& flow, const FockBasis& phys, int n_photons = 3);

std::string flow_csv_header();
std::string flow_csv_row(const ModelParams& params, const FlowResult& flow);

}  // namespace srg
