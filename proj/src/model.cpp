#include "srg/model.hpp"

#include <cmath>
#include <numbers>

namespace srg {

namespace {
constexpr double kPi = std::numbers::pi;

bool is_integer_power(double value, double base, int& k) {
  const double e = std::log(value) / std::log(base);
  k = static_cast<int>(std::lround(e));
  return std::abs(e - k) < 1e-9;
}
}  // namespace

double ModelParams::mode_ratio() const { return std::pow(rho, 1.0 / levels_per_rho); }

int ModelParams::rho0_levels() const {
  int k = 0;
  if (!is_integer_power(rho0, mode_ratio(), k)) {
    throw ParamError("rho0", "must be an integer power of the mode ratio rho^(1/levels_per_rho)");
  }
  return k;
}

Mat2 ModelParams::spin_matrix() const { return spin_x * pauli::x() + spin_z * pauli::z(); }

void ModelParams::validate() const {
  if (!(m > 0)) throw ParamError("m", "must be positive");
  if (!(omega0 > 0)) throw ParamError("omega0", "must be positive");
  if (!(lambda0 >= 0)) throw ParamError("lambda0", "must be non-negative");
  if (dim != 1 && dim != 3) throw ParamError("dim", "must be 1 or 3");
  if (!(p_star.norm() < m)) throw ParamError("p_star", "|p_star| must be below m");
  if (!((p - p_star).norm() < mu() * m)) throw ParamError("p", "|p - p_star| must be below mu*m");
  if (dim == 1 && (p.tail<2>().norm() > 0 || p_star.tail<2>().norm() > 0)) {
    throw ParamError("p", "d=1 momenta live on the first axis");
  }
  if (!(rho > 0 && rho < 0.5)) throw ParamError("rho", "must lie in (0, 1/2)");
  const double xi_max = 1.0 / (4.0 * std::sqrt(8.0 * kPi));
  if (!(xi > 0 && xi < xi_max)) throw ParamError("xi", "must lie in (0, 1/(4 sqrt(8 pi)))");
  if (!(rho0 > 0 && rho0 < omega0)) throw ParamError("rho0", "must lie in (0, omega0)");
  if (!(rho0 < std::pow(xi, 2.0 / 3.0))) throw ParamError("rho0", "must be below xi^(2/3)");
  if (levels_per_rho < 1) throw ParamError("levels_per_rho", "must be at least 1");
  rho0_levels();
  if (levels <= rho0_levels()) throw ParamError("levels", "no modes survive the first decimation");
  if (m_max < 1 || m_max > 2) throw ParamError("m_max", "supported range is 1..2");
  if (l_max < 1 || l_max > 4) throw ParamError("l_max", "supported range is 1..4");
  if (neumann_depth < 1 || neumann_depth > 3) throw ParamError("neumann_depth", "supported range is 1..3");
  if (n_max < 1) throw ParamError("n_max", "must be at least 1");
  if (n_dirs != 6) throw ParamError("n_dirs", "only the 6 axis directions are implemented");
  if (r_nodes_per_level < 1) throw ParamError("r_nodes_per_level", "must be at least 1");
  if (r_floor_levels < 0) throw ParamError("r_floor_levels", "must be non-negative");
  if (t_nodes < 3 || t_nodes % 2 == 0) throw ParamError("t_nodes", "must be odd and at least 3");
  if (!(uv_cutoff > 0)) throw ParamError("uv_cutoff", "must be positive");
}

namespace pauli {
Mat2 x() {
  Mat2 s;
  s << 0, 1, 1, 0;
  return s;
}
Mat2 y() {
  Mat2 s;
  s << 0, cplx(0, -1), cplx(0, 1), 0;
  return s;
}
Mat2 z() {
  Mat2 s;
  s << 1, 0, 0, -1;
  return s;
}
}  // namespace pauli

double chi(double x, double scale) {
  const double u = x / scale;
  if (u <= 0.75) return 1.0;
  if (u >= 1.0) return 0.0;
  const double c = std::cos(0.5 * kPi * (4.0 * u - 3.0));
  return c * c;
}

double chibar(double x, double scale) {
  const double u = x / scale;
  if (u <= 0.75) return 0.0;
  if (u >= 1.0) return 1.0;
  const double c = chi(x, scale);
  return std::sqrt((1.0 - c) * (1.0 + c));
}

double chi_derivative(double x, double scale) {
  const double u = x / scale;
  if (u <= 0.75 || u >= 1.0) return 0.0;
  return -2.0 * kPi * std::sin(kPi * (4.0 * u - 3.0)) / scale;
}

double chi_derivative_bound() { return 2.0 * kPi; }

double form_factor(double kabs, double uv_cutoff) {
  if (kabs > uv_cutoff * (1.0 + 1e-14)) return 0.0;
  return std::sqrt(kabs);
}

double form_factor(const Vec3& k, double uv_cutoff) { return form_factor(k.norm(), uv_cutoff); }

Vec3 polarization(const Vec3& k, int lambda) {
  if (lambda != 1 && lambda != 2) throw std::invalid_argument("polarization index must be 1 or 2");
  const double kn = k.norm();
  if (kn == 0.0) throw std::invalid_argument("polarization undefined at k = 0");
  const Vec3 khat = k / kn;
  const Vec3 ez(0, 0, 1);
  const Vec3 cross = khat.cross(ez);
  if (cross.norm() < 1e-12) return lambda == 1 ? Vec3(1, 0, 0) : Vec3(0, 1, 0);
  const Vec3 e1 = cross.normalized();
  if (lambda == 1) return e1;
  return khat.cross(e1);
}

Mat2 polarization_coupling(const Vec3& eps) {
  return eps.x() * pauli::x() + eps.y() * pauli::y() + eps.z() * pauli::z();
}

}  // namespace srg
