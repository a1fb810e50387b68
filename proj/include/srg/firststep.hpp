#pragma once
// First decimation: the two-level Feshbach step that integrates out the excited
// level and all photons above rho0, followed by S_rho0.

#include <stdexcept>
#include <vector>

#include <json.hpp>

#include "srg/feshbach.hpp"
#include "srg/kernels.hpp"
#include "srg/model.hpp"

namespace srg {

class FirstStepError : public std::runtime_error {
 public:
  FirstStepError(const std::string& what, double ratio) : std::runtime_error(what), ratio_(ratio) {}
  double ratio() const { return ratio_; }

 private:
  double ratio_;
};

// Target radii of the polydisc the first-step output has to land in:
// gamma <= dim*rho0/m + c_gamma*mu, delta <= c_delta*rho*mu, eps <= c_eps*(rho*mu)^2.
struct PolydiscTargets {
  double c_gamma = 0.5;
  double c_delta = 0.5;
  double c_eps = 0.5;

  double gamma(const ModelParams& p) const;
  double delta(const ModelParams& p) const;
  double eps(const ModelParams& p) const;
  bool contains(const ModelParams& p, const NormLedger& led) const;
  nlohmann::json dump(const ModelParams& p) const;
};

// b1 (lower level, active only for r >= 3 rho0/4) and b2 (excited level) in physical units
cplx resolvent_b1(const ModelParams& p, cplx z, double r, const Vec3& l);
cplx resolvent_b2(const ModelParams& p, cplx z, double r, const Vec3& l);
// spin-diagonal F = P_down chibar_rho0^2 / b1 + P_up / b2
Mat2 resolvent_F(const ModelParams& p, cplx z, double r, const Vec3& l);

struct ResolventMargins {
  double b1_min = 0;    // min Re b1 over the grid where chibar != 0
  double b1_bound = 0;  // mu rho0 / 4
  double b2_min = 0;    // min |b2|
  double b2_bound = 0;  // omega0 - mu rho0 / 2
  bool ok = false;
  nlohmann::json dump() const;
};
// physical z = rho0 * z_reduced
ResolventMargins resolvent_margins(const ModelParams& p, cplx z_reduced);

// The first-step kernels split by powers of lambda0: seq(lambda) = free + sum_L lambda^L order[L].
struct FirstStepPieces {
  KernelSequence free;
  std::vector<KernelSequence> order;  // index L = 1..depth; entry 0 unused
  KernelSequence combine(double lambda) const;
};
FirstStepPieces first_step_pieces(const ModelParams& p, cplx z);
// one chain traversal for several z (at most 16); depth < 0 means neumann_depth + 1
std::vector<FirstStepPieces> first_step_pieces(const ModelParams& p, const std::vector<cplx>& zs, int depth = -1);

// sup norm of |T|^{-1/2} chibar H_I chibar |T|^{-1/2} at lambda0 = 1 (spin x Fock, N <= 2)
double neumann_kappa(const ModelParams& p);

// w^(0)(p, z); throws FirstStepError when lambda0 * kappa >= 1
KernelSequence initial_kernels(const ModelParams& p, cplx z);

struct LambdaCritical {
  double lambda_c = 0;
  double lambda_neumann = 0;
  double lambda_polydisc = 0;
  double kappa = 0;
  nlohmann::json dump() const;
};
LambdaCritical lambda_critical_estimate(const ModelParams& p, const PolydiscTargets& targets = {});

// The pair (H(p) - rho0 z, H0(p) - rho0 z) with chi = P_down chi_rho0(H_f) on a physical basis.
FeshbachPair first_step_pair(const ModelParams& p, cplx z, const FockBasis& phys);
// Matrix-path first step: Feshbach map on `phys`, down block, H_f <= rho0, dilated onto `reduced`
// (whose grid has levels - rho0_levels levels) and scaled by 1/rho0.
MatX matrix_first_step(const ModelParams& p, cplx z, const FockBasis& phys, const FockBasis& reduced);

struct FirstStepReport {
  double kappa = 0;
  double neumann_ratio = 0;
  ResolventMargins margins;
  NormLedger ledger;
  PolydiscTargets targets;
  std::vector<double> order_norms;  // xi-norm of each lambda^L piece times lambda^L
  nlohmann::json dump(const ModelParams& p) const;
};
FirstStepReport first_step_report(const ModelParams& p, const KernelSequence& seq, const FirstStepPieces& pieces,
                                  const PolydiscTargets& targets = {});

}  // namespace srg
