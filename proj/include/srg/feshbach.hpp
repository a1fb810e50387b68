#pragma once
// Smooth Feshbach-Schur map on dense matrix representations.

#include <stdexcept>
#include <string>

#include <json.hpp>

#include "srg/fockspace.hpp"

namespace srg {

class NotFeshbachPair : public std::runtime_error {
 public:
  NotFeshbachPair(const std::string& what, double margin)
      : std::runtime_error("not a Feshbach pair: " + what + " (margin " + std::to_string(margin) + ")"),
        margin_(margin) {}
  double margin() const { return margin_; }

 private:
  double margin_;
};

struct FeshbachPair {
  MatX H, T, chi, chibar;
  // singular values below floor * scale count as zero
  double floor = 1e-10;
};

struct PairMargins {
  double partition = 0;   // max |chi^2 + chibar^2 - 1|
  double commutator = 0;  // max of |[chi, T]|, |[chibar, T]|
  double t_margin = 0;    // smallest singular value of T on Ran chibar
  double h_margin = 0;    // smallest singular value of H_chibar on Ran chibar
  bool valid = false;
  nlohmann::json dump() const;
};

PairMargins pair_margins(const FeshbachPair& pair);
// H_chibar^{-1} on Ran chibar, extended by zero
MatX hbar_inverse(const FeshbachPair& pair);
MatX feshbach_map(const FeshbachPair& pair);
// (Q, Q#)
std::pair<MatX, MatX> q_operators(const FeshbachPair& pair);

struct IsospectralReport {
  double sigma_h = 0;  // smallest singular value of H
  double sigma_f = 0;  // smallest singular value of F on Ran chi
  bool invertibility_consistent = false;
  int ker_h = 0;
  int ker_f = 0;
  double chi_kernel_residual = 0;  // max ||F chi v|| over ker H
  double q_kernel_residual = 0;    // max ||H Q u|| over ker F
  double q_chi_identity = 0;       // max ||Q chi v - v|| over ker H
  double resolvent_residual = -1;  // relative, when H is invertible
  bool pass = false;
  nlohmann::json dump() const;
};
IsospectralReport isospectral_test(const FeshbachPair& pair, double tol);

// lower bound r(mu - gamma) - mu*rho/2 on |w00| used as a cheap pair pre-filter
double w00_lower_bound(double r, double mu, double gamma, double rho);

}  // namespace srg
