#include "nf/spectral.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/LU>

#include <algorithm>
#include <cmath>

namespace nf {

OperatorMatrix assemble_operator(const WaveSolution& ws, OperatorKind kind) {
  const GridSpec& g = ws.grid;
  const int n = g.n_points;
  const ExpConvolution conv(g, ws.params.kernel.sigma);
  Vec fp1(n);
  for (int i = 0; i < n; ++i) fp1[i] = gain_d1(ws.params.gain, ws.profile[i]);
  OperatorMatrix op;
  op.kind = kind;
  op.entries = Transport(g, ws.speed).matrix() + conv.matrix() * fp1.asDiagonal();
  op.entries.diagonal().array() -= 1.0;
  const Vec w = quadrature_weights(g);
  if (kind == OperatorKind::LSharpAdjoint) {
    Mat t = op.entries.transpose();
    op.entries = w.cwiseInverse().asDiagonal() * t * w.asDiagonal();
  }
  return op;
}

AdjointSolution solve_adjoint(const WaveSolution& ws) {
  const GridSpec& g = ws.grid;
  const int n = g.n_points;
  const Vec w = quadrature_weights(g);
  const Mat l = assemble_operator(ws, OperatorKind::LSharp).entries;
  Eigen::PartialPivLU<Mat> lu(l);

  // W psi spans the left null space of L#
  Vec y = w.cwiseProduct(ws.d1);
  for (int k = 0; k < 4; ++k) {
    y = lu.transpose().solve(y);
    y /= y.norm();
  }
  AdjointSolution out;
  out.sigma_min = (l.transpose() * y).norm();

  // second singular value via the bordered matrix, which is nonsingular when the
  // null space is one-dimensional
  Mat m = Mat::Zero(n + 1, n + 1);
  m.topLeftCorner(n, n) = l;
  m.col(n).head(n) = y;
  m.row(n).head(n) = ws.d1.transpose() / ws.d1.norm();
  Eigen::PartialPivLU<Mat> mlu(m);
  Vec x = Vec::Ones(n + 1) / std::sqrt(n + 1.0);
  double growth = 0.0;
  for (int k = 0; k < 30; ++k) {
    Vec z = mlu.solve(Vec(mlu.transpose().solve(x)));
    growth = z.norm();
    x = z / growth;
  }
  out.sigma_2 = 1.0 / std::sqrt(growth);
  if (out.sigma_2 < 10.0 * out.sigma_min) throw ModelError("null space not simple");

  Vec psi = y.cwiseQuotient(w);
  if (psi.sum() < 0) psi = -psi;
  psi /= inner(w, ws.d1, psi);
  if (psi.minCoeff() < -1e-12 * psi.maxCoeff()) throw ModelError("positivity violated");

  const Vec lstar = w.cwiseInverse().cwiseProduct(l.transpose() * w.cwiseProduct(psi));
  out.residual = std::sqrt(inner(w, lstar, lstar) / inner(w, psi, psi));
  out.psi = psi;
  out.phi = conv_exp(g, psi, ws.params.kernel.sigma);
  return out;
}

Density make_density(const WaveSolution& ws, const Vec& psi, double floor) {
  const int n = ws.grid.n_points;
  Density d;
  int imax = 0;
  ws.d1.maxCoeff(&imax);
  const double ux = floor * ws.d1.maxCoeff(), ps = floor * psi.maxCoeff();
  auto ok = [&](int i) { return ws.d1[i] > ux && psi[i] > ps; };
  d.lo = d.hi = imax;
  while (d.lo > 0 && ok(d.lo - 1)) --d.lo;
  while (d.hi < n - 1 && ok(d.hi + 1)) ++d.hi;
  d.rho.resize(n);
  for (int i = 0; i < n; ++i) {
    const int j = std::clamp(i, d.lo, d.hi);
    d.rho[i] = psi[j] / ws.d1[j];
  }
  return d;
}

double estimate_gap(const OperatorMatrix& op, const WaveSolution& ws, const Vec& psi, const Vec& rho) {
  (void)psi;
  const Vec r = quadrature_weights(ws.grid).cwiseProduct(rho).cwiseSqrt();
  Mat a = r.asDiagonal() * op.entries * r.cwiseInverse().asDiagonal();
  Mat k = 0.5 * (a + a.transpose());
  Vec u = r.cwiseProduct(ws.d1);
  u /= u.norm();
  const Vec ku = k * u;
  const double uku = u.dot(ku);
  // project onto u-perp and push the u direction far down the spectrum
  const double shift = 10.0 * (1.0 + k.cwiseAbs().rowwise().sum().maxCoeff());
  k.noalias() -= u * ku.transpose();
  k.noalias() -= ku * u.transpose();
  k.noalias() += (uku - shift) * (u * u.transpose());
  Eigen::SelfAdjointEigenSolver<Mat> es(k, Eigen::EigenvaluesOnly);
  return -es.eigenvalues().maxCoeff();
}

AssumptionConstants assumption_constants(const Vec& rho, const WaveSolution& ws) {
  const GridSpec& g = ws.grid;
  const int n = g.n_points;
  if (!(rho.minCoeff() > 0) || !rho.allFinite()) throw ModelError("assumption violated on grid");
  AssumptionConstants ac;
  double run = rho[0];
  for (int i = 0; i < n; ++i) {
    run = std::max(run, rho[i]);
    ac.l_rho = std::max(ac.l_rho, run / rho[i]);
  }
  const Vec wr = conv_exp(g, rho, ws.params.kernel.sigma);
  ac.k_rho = wr.cwiseQuotient(rho).maxCoeff();
  double m = 0.0;
  for (int i = 0; i < n; ++i) {
    const double u = ws.profile[i];
    m = std::max(m, std::abs(gain_d2(ws.params.gain, u) * ws.d1[i] / gain_d1(ws.params.gain, u)));
  }
  ac.m_bound = m + 2.0 / ws.params.kernel.sigma;
  const Vec rx = diff(g, rho);
  ac.max_rho_x_ratio = rx.cwiseAbs().cwiseQuotient(rho).maxCoeff();
  ac.rho_x_ok = ac.max_rho_x_ratio <= ac.m_bound;
  if (!std::isfinite(ac.l_rho) || !std::isfinite(ac.k_rho)) throw ModelError("assumption violated on grid");
  return ac;
}

namespace {

void sign_change(const Vec& f, double tol, bool& single, int& last_pos, int& first_neg) {
  last_pos = -1;
  first_neg = -1;
  for (int i = 0; i < f.size(); ++i) {
    if (f[i] > tol) last_pos = i;
    if (f[i] < -tol && first_neg < 0) first_neg = i;
  }
  single = last_pos >= 0 && first_neg >= 0 && last_pos < first_neg;
}

}  // namespace

SignReport check_sign_structure(const WaveSolution& ws, const Vec& psi, const Vec& phi, double tol) {
  SignReport r;
  sign_change(ws.d2, tol, r.uxx_single_change, r.uxx_last_positive, r.uxx_first_negative);
  sign_change(diff(ws.grid, phi), tol, r.phix_single_change, r.phix_last_positive, r.phix_first_negative);
  sign_change(diff(ws.grid, psi), tol, r.psix_single_change, r.psix_last_positive, r.psix_first_negative);
  r.phi_positive = phi.minCoeff() > 0;
  return r;
}

TailFit tail_rate_fit(const GridSpec& g, const Vec& f, double x_lo, double x_hi) {
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int m = 0;
  for (int i = 0; i < g.n_points; ++i) {
    const double x = g.x(i);
    if (x < x_lo || x > x_hi || !(f[i] > 0)) continue;
    const double y = std::log(f[i]);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
    ++m;
  }
  TailFit t;
  t.samples = m;
  if (m < 2) return t;
  t.rate = (m * sxy - sx * sy) / (m * sxx - sx * sx);
  t.intercept = (sy - t.rate * sx) / m;
  return t;
}

SpectralData build_spectral(const WaveSolution& ws, bool with_gap) {
  SpectralData sd;
  const AdjointSolution adj = solve_adjoint(ws);
  sd.psi = adj.psi;
  sd.phi = adj.phi;
  sd.psi_x = diff(ws.grid, sd.psi);
  sd.adjoint_residual = adj.residual;
  sd.sigma_min = adj.sigma_min;
  sd.sigma_2 = adj.sigma_2;
  const Density d = make_density(ws, sd.psi);
  sd.rho = d.rho;
  sd.rho_lo = d.lo;
  sd.rho_hi = d.hi;
  const AssumptionConstants ac = assumption_constants(sd.rho, ws);
  sd.l_rho = ac.l_rho;
  sd.k_rho = ac.k_rho;
  sd.m_bound = ac.m_bound;
  sd.rho_x_ok = ac.rho_x_ok;
  if (with_gap) sd.gap = estimate_gap(assemble_operator(ws, OperatorKind::LSharp), ws, sd.psi, sd.rho);
  return sd;
}

}  // namespace nf
