#include "srg/feshbach.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>

namespace srg {

namespace {

bool is_diagonal(const MatX& a) {
  for (int j = 0; j < a.cols(); ++j) {
    for (int i = 0; i < a.rows(); ++i) {
      if (i != j && a(i, j) != 0.0) return false;
    }
  }
  return true;
}

// orthonormal basis of Ran(a) for a Hermitian a
MatX range_basis(const MatX& a) {
  const int n = static_cast<int>(a.rows());
  if (is_diagonal(a)) {
    std::vector<int> idx;
    for (int i = 0; i < n; ++i) {
      if (std::abs(a(i, i)) > 1e-12) idx.push_back(i);
    }
    MatX v = MatX::Zero(n, static_cast<int>(idx.size()));
    for (size_t k = 0; k < idx.size(); ++k) v(idx[k], static_cast<int>(k)) = 1.0;
    return v;
  }
  Eigen::SelfAdjointEigenSolver<MatX> es(a);
  std::vector<int> idx;
  for (int i = 0; i < n; ++i) {
    if (std::abs(es.eigenvalues()(i)) > 1e-12) idx.push_back(i);
  }
  MatX v(n, static_cast<int>(idx.size()));
  for (size_t k = 0; k < idx.size(); ++k) v.col(static_cast<int>(k)) = es.eigenvectors().col(idx[k]);
  return v;
}

double inf_norm(const MatX& a) { return a.rows() == 0 ? 0.0 : a.cwiseAbs().rowwise().sum().maxCoeff(); }

double smallest_singular(const MatX& a) {
  if (a.rows() == 0) return std::numeric_limits<double>::infinity();
  if (a.rows() <= 400) {
    Eigen::JacobiSVD<MatX> svd(a);
    return svd.singularValues()(svd.singularValues().size() - 1);
  }
  // power iteration on (a^* a)^{-1}
  Eigen::PartialPivLU<MatX> lu(a);
  Eigen::PartialPivLU<MatX> lut(a.adjoint());
  VecX v = VecX::Ones(a.rows()) / std::sqrt(static_cast<double>(a.rows()));
  double s = 0;
  for (int it = 0; it < 40; ++it) {
    VecX w = lut.solve(v);
    w = lu.solve(w);
    const double nrm = w.norm();
    if (!std::isfinite(nrm) || nrm == 0) return 0.0;
    const double s_new = 1.0 / std::sqrt(nrm);
    v = w / nrm;
    if (it > 3 && std::abs(s_new - s) < 1e-10 * s_new) return s_new;
    s = s_new;
  }
  return s;
}

double scale_of(const FeshbachPair& p) { return std::max({inf_norm(p.H), inf_norm(p.T), 1.0}); }

MatX null_space(const MatX& a, double thresh) {
  Eigen::JacobiSVD<MatX> svd(a, Eigen::ComputeFullV);
  const auto& s = svd.singularValues();
  std::vector<int> idx;
  for (int i = 0; i < s.size(); ++i) {
    if (s(i) < thresh) idx.push_back(i);
  }
  MatX v(a.cols(), static_cast<int>(idx.size()));
  for (size_t k = 0; k < idx.size(); ++k) v.col(static_cast<int>(k)) = svd.matrixV().col(idx[k]);
  return v;
}

}  // namespace

nlohmann::json PairMargins::dump() const {
  return {{"partition", partition}, {"commutator", commutator}, {"t_margin", t_margin},
          {"h_margin", h_margin},   {"valid", valid}};
}

PairMargins pair_margins(const FeshbachPair& p) {
  PairMargins m;
  const int n = static_cast<int>(p.H.rows());
  m.partition = (p.chi * p.chi + p.chibar * p.chibar - MatX::Identity(n, n)).cwiseAbs().maxCoeff();
  m.commutator = std::max((p.chi * p.T - p.T * p.chi).cwiseAbs().maxCoeff(),
                          (p.chibar * p.T - p.T * p.chibar).cwiseAbs().maxCoeff());
  const MatX V = range_basis(p.chibar);
  const MatX W = p.H - p.T;
  m.t_margin = smallest_singular(V.adjoint() * p.T * V);
  m.h_margin = smallest_singular(V.adjoint() * (p.T + p.chibar * W * p.chibar) * V);
  const double floor = p.floor * scale_of(p);
  m.valid = m.partition < 1e-12 && m.commutator < 1e-12 * scale_of(p) && m.t_margin > floor && m.h_margin > floor;
  return m;
}

MatX hbar_inverse(const FeshbachPair& p) {
  const MatX V = range_basis(p.chibar);
  const MatX W = p.H - p.T;
  const MatX hb = V.adjoint() * (p.T + p.chibar * W * p.chibar) * V;
  const double sv = smallest_singular(hb);
  if (!(sv > p.floor * scale_of(p))) throw NotFeshbachPair("H_chibar is singular on Ran(chibar)", sv);
  return V * hb.partialPivLu().inverse() * V.adjoint();
}

MatX feshbach_map(const FeshbachPair& p) {
  const MatX W = p.H - p.T;
  const MatX hinv = hbar_inverse(p);
  return p.T + p.chi * W * p.chi - p.chi * W * p.chibar * hinv * p.chibar * W * p.chi;
}

std::pair<MatX, MatX> q_operators(const FeshbachPair& p) {
  const MatX W = p.H - p.T;
  const MatX hinv = hbar_inverse(p);
  MatX Q = p.chi - p.chibar * hinv * p.chibar * W * p.chi;
  MatX Qs = p.chi - p.chi * W * p.chibar * hinv * p.chibar;
  return {Q, Qs};
}

nlohmann::json IsospectralReport::dump() const {
  return {{"sigma_h", sigma_h},
          {"sigma_f", sigma_f},
          {"invertibility_consistent", invertibility_consistent},
          {"ker_h", ker_h},
          {"ker_f", ker_f},
          {"chi_kernel_residual", chi_kernel_residual},
          {"q_kernel_residual", q_kernel_residual},
          {"q_chi_identity", q_chi_identity},
          {"resolvent_residual", resolvent_residual},
          {"pass", pass}};
}

IsospectralReport isospectral_test(const FeshbachPair& p, double tol) {
  IsospectralReport rep;
  const double scale = scale_of(p);
  const MatX F = feshbach_map(p);
  const auto [Q, Qs] = q_operators(p);
  const MatX Vc = range_basis(p.chi);
  const MatX Fr = Vc.adjoint() * F * Vc;
  const double thresh = tol * scale;
  rep.sigma_h = smallest_singular(p.H);
  rep.sigma_f = smallest_singular(Fr);
  rep.invertibility_consistent = (rep.sigma_h > thresh) == (rep.sigma_f > thresh);
  const MatX kh = null_space(p.H, thresh);
  const MatX kf = null_space(Fr, thresh);
  rep.ker_h = static_cast<int>(kh.cols());
  rep.ker_f = static_cast<int>(kf.cols());
  for (int i = 0; i < kh.cols(); ++i) {
    const VecX v = kh.col(i);
    rep.chi_kernel_residual = std::max(rep.chi_kernel_residual, (F * (p.chi * v)).norm());
    rep.q_chi_identity = std::max(rep.q_chi_identity, (Q * (p.chi * v) - v).norm());
  }
  for (int i = 0; i < kf.cols(); ++i) {
    const VecX u = Vc * kf.col(i);
    rep.q_kernel_residual = std::max(rep.q_kernel_residual, (p.H * (Q * u)).norm() / std::max(1.0, (Q * u).norm()));
  }
  bool ok = rep.invertibility_consistent && rep.ker_h == rep.ker_f && rep.chi_kernel_residual <= thresh &&
            rep.q_kernel_residual <= thresh && rep.q_chi_identity <= tol * std::max(1.0, inf_norm(Q));
  if (rep.sigma_h > thresh && rep.sigma_f > thresh) {
    const MatX hinv = p.H.partialPivLu().inverse();
    const MatX finv = Vc * Fr.partialPivLu().inverse() * Vc.adjoint();
    const MatX rhs = p.chibar * hbar_inverse(p) * p.chibar + Q * finv * Qs;
    const double nrm = hinv.cwiseAbs().maxCoeff();
    rep.resolvent_residual = (hinv - rhs).cwiseAbs().maxCoeff() / nrm;
    ok = ok && rep.resolvent_residual <= tol;
  }
  rep.pass = ok;
  return rep;
}

double w00_lower_bound(double r, double mu, double gamma, double rho) { return r * (mu - gamma) - mu * rho / 2.0; }

}  // namespace srg
