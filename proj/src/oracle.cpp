#include "srg/oracle.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <random>

namespace srg {

SpMat interaction_operator(const ModelParams& params, const FockBasis& basis) {
  const int n = basis.dim();
  SpMat h(2 * n, 2 * n);
  const cplx I(0, 1);
  for (int k = 0; k < basis.grid.size(); ++k) {
    const Mode& md = basis.grid.modes[k];
    const double g = form_factor(md.energy, params.uv_cutoff) * std::sqrt(md.weight);
    if (g == 0.0) continue;
    const SpMat b = ladder(basis, k, false);
    const SpMat bd = ladder(basis, k, true);
    h += spin_kron(I * g * md.coupling, SpMat(b - bd));
  }
  return h;
}

SpMat build_fiber_hamiltonian(const ModelParams& params, const FockBasis& basis) {
  const int n = basis.dim();
  std::vector<Eigen::Triplet<cplx>> trip;
  for (int s = 0; s < 2; ++s) {
    for (int j = 0; j < n; ++j) {
      const Vec3& P = basis.momentum[j];
      double d = basis.energy[j] + P.squaredNorm() / (2.0 * params.m) - params.p.dot(P) / params.m;
      if (s == kUp) d += params.omega0;
      trip.emplace_back(s * n + j, s * n + j, d);
    }
  }
  SpMat h(2 * n, 2 * n);
  h.setFromTriplets(trip.begin(), trip.end());
  if (params.lambda0 != 0.0) h += params.lambda0 * interaction_operator(params, basis);
  h.makeCompressed();
  return h;
}

namespace {

GroundState dense_ground(const SpMat& h) {
  const MatX d = MatX(h);
  Eigen::SelfAdjointEigenSolver<MatX> es(d);
  if (es.info() != Eigen::Success) throw SolverError("dense eigensolver failed");
  GroundState gs;
  gs.energy = es.eigenvalues()(0);
  gs.vector = es.eigenvectors().col(0);
  if (d.rows() > 1) gs.gap = es.eigenvalues()(1) - es.eigenvalues()(0);
  gs.residual = (d * gs.vector - gs.energy * gs.vector).norm();
  return gs;
}

}  // namespace

GroundState ground_energy(const SpMat& h, unsigned seed, int dense_below) {
  const int n = static_cast<int>(h.rows());
  if (n == 0) throw SolverError("empty matrix");
  if (n < dense_below) return dense_ground(h);
  const double hnorm = [&] {
    double s = 0;
    for (int k = 0; k < h.outerSize(); ++k) {
      double c = 0;
      for (SpMat::InnerIterator it(h, k); it; ++it) c += std::abs(it.value());
      s = std::max(s, c);
    }
    return s;
  }();
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> nd;
  VecX v(n);
  for (int i = 0; i < n; ++i) v(i) = cplx(nd(rng), 0.0);
  v /= v.norm();
  const int kmax = std::min(n, 160);
  const double target = 1e-10 * hnorm;
  GroundState gs;
  double prev = 0;
  for (int restart = 0; restart < 60; ++restart) {
    MatX Q(n, kmax);
    std::vector<double> alpha, beta;
    Q.col(0) = v;
    int k = 0;
    for (; k < kmax; ++k) {
      VecX w = h * Q.col(k);
      const double a = std::real(Q.col(k).dot(w));
      alpha.push_back(a);
      // full reorthogonalization, twice
      for (int pass = 0; pass < 2; ++pass) w -= Q.leftCols(k + 1) * (Q.leftCols(k + 1).adjoint() * w);
      const double b = w.norm();
      if (k + 1 == kmax || b < 1e-14 * hnorm) break;
      beta.push_back(b);
      Q.col(k + 1) = w / b;
    }
    const int m = static_cast<int>(alpha.size());
    Eigen::MatrixXd t = Eigen::MatrixXd::Zero(m, m);
    for (int i = 0; i < m; ++i) t(i, i) = alpha[i];
    for (int i = 0; i + 1 < m; ++i) t(i, i + 1) = t(i + 1, i) = beta[i];
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(t);
    const Eigen::VectorXd y = es.eigenvectors().col(0);
    v = Q.leftCols(m) * y.cast<cplx>();
    v /= v.norm();
    gs.energy = es.eigenvalues()(0);
    if (m > 1) gs.gap = es.eigenvalues()(1) - es.eigenvalues()(0);
    gs.residual = (h * v - gs.energy * v).norm();
    gs.iterations += m;
    if (gs.residual < target) {
      gs.vector = v;
      return gs;
    }
    if (restart > 0 && std::abs(gs.energy - prev) < 1e-15 * hnorm && gs.residual < 1e-8 * hnorm) {
      gs.vector = v;
      return gs;
    }
    prev = gs.energy;
  }
  throw SolverError("Lanczos did not converge (residual " + std::to_string(gs.residual) + ")");
}

double pt2_energy(const ModelParams& params, const ModeGrid& grid) {
  double e = 0;
  for (const auto& md : grid.modes) {
    const double g = form_factor(md.energy, params.uv_cutoff);
    if (g == 0.0) continue;
    const double kin = md.energy + md.k.squaredNorm() / (2.0 * params.m) - params.p.dot(md.k) / params.m;
    if (!(kin > 0)) throw std::domain_error("pt2_energy: vanishing denominator");
    const double up = std::norm(md.coupling(kUp, kDown));
    const double down = std::norm(md.coupling(kDown, kDown));
    e -= md.weight * g * g * (up / (params.omega0 + kin) + down / kin);
  }
  return params.lambda0 * params.lambda0 * e;
}

std::vector<DispersionRecord> dispersion_sweep(const ModelParams& params, const std::vector<double>& ps,
                                               const std::function<double(const ModelParams&)>& rg) {
  std::vector<DispersionRecord> out(ps.size());
  const ModeGrid grid(params, params.levels);
  const FockBasis basis(grid, params.n_max);
  for (int i = 0; i < static_cast<int>(ps.size()); ++i) {
    ModelParams q = params;
    q.p = Vec3(ps[i], 0, 0);
    q.p_star = q.p;
    const auto gs = ground_energy(build_fiber_hamiltonian(q, basis));
    DispersionRecord& r = out[i];
    r.p = ps[i];
    r.e_oracle = gs.energy;
    r.gap = gs.gap;
    r.residual = gs.residual;
    r.e_pt2 = pt2_energy(q, grid);
    if (rg) r.e_rg = rg(q);
  }
  return out;
}

nlohmann::json EffectiveMass::dump() const {
  return {{"m_fd", m_fd},           {"m_fit", m_fit},         {"fit_residual", fit_residual}, {"spread", spread},
          {"asymmetry", asymmetry}, {"slope0", slope0},       {"coeffs", coeffs}};
}

EffectiveMass effective_mass(const std::vector<DispersionRecord>& rec, double m, bool use_rg) {
  auto val = [&](const DispersionRecord& r) { return use_rg ? r.e_rg : r.e_oracle; };
  const int n = static_cast<int>(rec.size());
  if (n < 5) throw std::invalid_argument("effective_mass: need at least 5 points");
  int i0 = -1;
  for (int i = 0; i < n; ++i) {
    if (rec[i].p == 0.0) i0 = i;
  }
  if (i0 < 0) throw std::invalid_argument("effective_mass: grid must contain p = 0");
  EffectiveMass em;
  double lo = val(rec[0]), hi = lo;
  double h = 0;
  int ip = -1, im = -1;
  for (int i = 0; i < n; ++i) {
    lo = std::min(lo, val(rec[i]));
    hi = std::max(hi, val(rec[i]));
    if (rec[i].p == 0.0) continue;
    int mirror = -1;
    for (int j = 0; j < n; ++j) {
      if (std::abs(rec[j].p + rec[i].p) < 1e-14 * std::abs(rec[i].p)) mirror = j;
    }
    if (mirror < 0) throw std::invalid_argument("effective_mass: grid is not symmetric about 0");
    em.asymmetry = std::max(em.asymmetry, std::abs(val(rec[i]) - val(rec[mirror])));
    if (rec[i].p > 0 && (ip < 0 || rec[i].p < h)) {
      h = rec[i].p;
      ip = i;
      im = mirror;
    }
  }
  em.spread = hi - lo;
  const double e0 = val(rec[i0]);
  const double d2 = (val(rec[ip]) - 2.0 * e0 + val(rec[im])) / (h * h);
  em.slope0 = (val(rec[ip]) - val(rec[im])) / (2.0 * h);
  em.m_fd = 1.0 / (1.0 / m + d2);
  const int nc = 4;
  Eigen::MatrixXd A(n, nc);
  Eigen::VectorXd b(n);
  for (int i = 0; i < n; ++i) {
    const double x = rec[i].p * rec[i].p;
    double pw = 1.0;
    for (int c = 0; c < nc; ++c) {
      A(i, c) = pw;
      pw *= x;
    }
    b(i) = val(rec[i]);
  }
  const Eigen::VectorXd c = A.colPivHouseholderQr().solve(b);
  em.coeffs.assign(c.data(), c.data() + nc);
  em.fit_residual = (A * c - b).cwiseAbs().maxCoeff();
  em.m_fit = 1.0 / (1.0 / m + 2.0 * c(1));
  return em;
}

}  // namespace srg
