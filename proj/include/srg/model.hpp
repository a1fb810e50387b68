#pragma once
// Physical model: parameters, the smooth cutoff pair (chi, chibar), the
// coupling form factor and the polarization frame.

#include <Eigen/Dense>
#include <complex>
#include <stdexcept>
#include <string>

namespace srg {

using cplx = std::complex<double>;
using Vec3 = Eigen::Vector3d;
using Mat2 = Eigen::Matrix2cd;

// Spin basis order: index 0 is the excited level (energy omega0), index 1 the ground level.
constexpr int kUp = 0;
constexpr int kDown = 1;

class ParamError : public std::invalid_argument {
 public:
  ParamError(std::string field, const std::string& what)
      : std::invalid_argument(field + ": " + what), field_(std::move(field)) {}
  const std::string& field() const { return field_; }

 private:
  std::string field_;
};

struct ModelParams {
  double m = 1.0;
  double omega0 = 0.5;
  double lambda0 = 0.0;
  Vec3 p_star = Vec3::Zero();
  Vec3 p = Vec3::Zero();
  double rho0 = 0.125;
  double rho = 0.25;
  double xi = 0.048;
  int dim = 1;
  // d=1 spin coupling S = spin_x*sigma_x + spin_z*sigma_z
  double spin_x = 1.0;
  double spin_z = 0.0;
  int m_max = 2;
  int l_max = 3;
  int neumann_depth = 3;
  int n_max = 3;
  // mode grid: `levels` radial shells with ratio rho^(1/levels_per_rho)
  int levels = 12;
  int levels_per_rho = 2;
  int n_dirs = 6;
  // kernel sampling grid
  int r_nodes_per_level = 2;
  int r_floor_levels = 2;
  int t_nodes = 5;
  double uv_cutoff = 1.0;

  double mu() const { return (m - p_star.norm()) / (2.0 * m); }
  int polarizations() const { return dim == 1 ? 1 : 2; }
  double mode_ratio() const;
  // integer k with rho = ratio^k (levels_per_rho) and rho0 = ratio^k0
  int rho_levels() const { return levels_per_rho; }
  int rho0_levels() const;
  Mat2 spin_matrix() const;
  void validate() const;
};

namespace pauli {
Mat2 x();
Mat2 y();
Mat2 z();
}  // namespace pauli

// chi(x/scale): 1 on [0,3/4], cos^2((pi/2)(4u-3)) on [3/4,1], 0 beyond
double chi(double x, double scale = 1.0);
double chibar(double x, double scale = 1.0);
double chi_derivative(double x, double scale = 1.0);
// sup |d chi/dx| for scale 1
double chi_derivative_bound();

double form_factor(double kabs, double uv_cutoff = 1.0);
double form_factor(const Vec3& k, double uv_cutoff = 1.0);

// Transverse polarization eps_lambda(k), lambda in {1,2}; frame (e_x,e_y) along e_z.
Vec3 polarization(const Vec3& k, int lambda);
// eps.sigma
Mat2 polarization_coupling(const Vec3& eps);

}  // namespace srg
