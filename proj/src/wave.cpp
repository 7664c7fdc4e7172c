#include "nf/wave.hpp"

#include <Eigen/LU>

#include <cmath>
#include <vector>

namespace nf {

int inflow_node(const GridSpec& g, double c) {
  if (c > 0) return g.n_points - 1;
  if (c < 0) return 0;
  return -1;
}

Transport::Transport(const GridSpec& g, double c) : g_(g), c_(c) {
  const Vec w = quadrature_weights(g);
  winv_ = w.cwiseInverse();
  node_ = inflow_node(g, c);
  if (node_ >= 0) pen_ = std::abs(c) / w[node_];
}

void Transport::apply(const Vec& v, Vec& out) const {
  const int n = g_.n_points;
  diff(g_, v, d_);
  t_.resize(n - 3);
  for (int i = 0; i < n - 3; ++i) t_[i] = -v[i] + 3.0 * v[i + 1] - 3.0 * v[i + 2] + v[i + 3];
  out.resize(n);
  const double a = std::abs(c_) / 60.0;
  for (int i = 0; i < n; ++i) out[i] = c_ * d_[i];
  if (a != 0.0) {
    // out -= a W^{-1} T^T t
    Vec& s = d_;
    s.setZero(n);
    for (int i = 0; i < n - 3; ++i) {
      s[i] -= t_[i];
      s[i + 1] += 3.0 * t_[i];
      s[i + 2] -= 3.0 * t_[i];
      s[i + 3] += t_[i];
    }
    for (int i = 0; i < n; ++i) out[i] -= a * winv_[i] * s[i];
  }
  if (node_ >= 0) out[node_] -= pen_ * v[node_];
}

Mat Transport::matrix() const {
  Mat m = c_ * diff_matrix(g_) - std::abs(c_) * dissipation_matrix(g_);
  if (node_ >= 0) m(node_, node_) -= pen_;
  return m;
}

Vec Transport::dc(const Vec& v) const {
  const double s = c_ >= 0 ? 1.0 : -1.0;
  Vec d = diff(g_, v);
  Vec a;
  dissipation(g_, v, a);
  Vec out = d - s * a;
  const int b = node_ >= 0 ? node_ : (c_ >= 0 ? g_.n_points - 1 : 0);
  out[b] -= s * winv_[b] * v[b];
  return out;
}

namespace {

double boundary_target(const Transport& tr, const FixedPoints& fp) { return tr.node() == 0 ? fp.a1 : fp.a2; }

void assemble_residual(const GridSpec& g, const ModelParams& mp, const ExpConvolution& conv, const FixedPoints& fp,
                       const Vec& u, double c, Vec& out) {
  Vec fu(u.size());
  for (int i = 0; i < u.size(); ++i) fu[i] = gain(mp.gain, u[i]);
  Vec cf = conv.apply(fu);
  const Transport tr(g, c);
  Vec tu;
  tr.apply(u, tu);
  out = tu - u + cf;
  if (tr.node() >= 0) out[tr.node()] += tr.penalty() * boundary_target(tr, fp);
}

}  // namespace

Vec wave_residual(const WaveSolution& ws, const ExpConvolution& conv) {
  Vec r;
  assemble_residual(ws.grid, ws.params, conv, ws.fixed_points, ws.profile, ws.speed, r);
  return r;
}

WaveSolution solve_wave(const ModelParams& mp, const GridSpec& g, double tol, int max_iter) {
  const FixedPoints fp = validate_gain(mp.gain);
  const int n = g.n_points;
  const ExpConvolution conv(g, mp.kernel.sigma);
  const Mat cm = conv.matrix();
  const Stencil pin = interp_stencil(g, 0.0);
  if (pin.first < 0 || pin.first + 7 >= n) throw ModelError("grid too small for phase condition");

  WaveSolution ws;
  ws.grid = g;
  ws.params = mp;
  ws.fixed_points = fp;
  Vec u(n);
  for (int i = 0; i < n; ++i) u[i] = fp.a1 + (fp.a2 - fp.a1) / (1.0 + std::exp(-g.x(i)));
  double c = 0.0;

  Vec res;
  Mat jac(n + 1, n + 1);
  Eigen::PartialPivLU<Mat> lu;
  int it = 0;
  double err = 0.0;
  for (;; ++it) {
    assemble_residual(g, mp, conv, fp, u, c, res);
    double pinval = -fp.a;
    for (int k = 0; k < 8; ++k) pinval += pin.w[k] * u[pin.first + k];
    err = std::max(res.cwiseAbs().maxCoeff(), std::abs(pinval));
    if (!std::isfinite(err)) throw ModelError("wave solve diverged");
    if (err <= tol) break;
    if (it >= max_iter) throw ModelError("wave solve diverged");

    const Transport tr(g, c);
    Vec fp1(n);
    for (int i = 0; i < n; ++i) fp1[i] = gain_d1(mp.gain, u[i]);
    jac.topLeftCorner(n, n) = tr.matrix() + cm * fp1.asDiagonal();
    jac.topLeftCorner(n, n).diagonal().array() -= 1.0;
    Vec dcu = tr.dc(u);
    const int b = tr.node() >= 0 ? tr.node() : (c >= 0 ? n - 1 : 0);
    const Transport side(g, b == 0 ? -1.0 : 1.0);
    dcu[b] += (c >= 0 ? 1.0 : -1.0) * side.penalty() * (b == 0 ? fp.a1 : fp.a2);
    jac.col(n).head(n) = dcu;
    jac.row(n).setZero();
    for (int k = 0; k < 8; ++k) jac(n, pin.first + k) = pin.w[k];
    Vec rhs(n + 1);
    rhs.head(n) = -res;
    rhs[n] = -pinval;
    lu.compute(jac);
    const Vec dz = lu.solve(rhs);
    u += dz.head(n);
    c += dz[n];
  }
  ws.profile = u;
  ws.speed = c;
  ws.residual = err;
  ws.iterations = it;

  // u-hat_x as the discrete null vector of the linearisation, scaled to match D u-hat
  Vec fp1(n);
  for (int i = 0; i < n; ++i) fp1[i] = gain_d1(mp.gain, u[i]);
  Mat lin = Transport(g, c).matrix() + cm * fp1.asDiagonal();
  lin.diagonal().array() -= 1.0;
  Eigen::PartialPivLU<Mat> llu(lin);
  const Vec du = diff(g, u);
  Vec v = du;
  for (int k = 0; k < 4; ++k) {
    v = llu.solve(v);
    v /= v.norm();
  }
  v *= v.dot(du) / v.dot(v);
  ws.d1 = v;
  ws.d2 = diff(g, ws.d1);
  ws.d3 = diff(g, ws.d2);

  const double dmax = ws.d1.maxCoeff();
  if (ws.d1.minCoeff() < -1e-10 * dmax) throw ModelError("nonmonotone profile");
  if (std::abs(u[0] - fp.a1) > 1e-4 || std::abs(u[n - 1] - fp.a2) > 1e-4)
    throw ModelError("front does not reach the fixed points; enlarge the grid");
  return ws;
}

double wave_speed_oracle(const ModelParams& mp, const GridSpec& g, double horizon, double dt) {
  const FixedPoints fp = validate_gain(mp.gain);
  const int n = g.n_points;
  const ExpConvolution conv(g, mp.kernel.sigma);
  Vec u(n), fu(n), cf;
  for (int i = 0; i < n; ++i) u[i] = g.x(i) < 0 ? fp.a1 : fp.a2;
  const double e = std::exp(-dt), h = 1.0 - e;
  const int steps = static_cast<int>(std::lround(horizon / dt));
  const double margin = 5.0 * mp.kernel.sigma;
  std::vector<double> ts, xs;
  for (int s = 1; s <= steps; ++s) {
    for (int i = 0; i < n; ++i) fu[i] = gain(mp.gain, u[i]);
    conv.apply(fu, cf);
    u = e * u + h * cf;
    const double t = s * dt;
    if (t < 0.5 * horizon) continue;
    int k = -1;
    for (int i = 0; i + 1 < n; ++i)
      if ((u[i] - fp.a) * (u[i + 1] - fp.a) <= 0 && u[i] != u[i + 1]) {
        k = i;
        break;
      }
    if (k < 0) throw ModelError("domain too small");
    const double x = g.x(k) + g.spacing * (fp.a - u[k]) / (u[k + 1] - u[k]);
    if (std::abs(x) > g.half_length - margin) throw ModelError("domain too small");
    ts.push_back(t);
    xs.push_back(x);
  }
  if (ts.size() < 2) throw ModelError("horizon too short for speed fit");
  double mt = 0, mx = 0;
  for (std::size_t i = 0; i < ts.size(); ++i) {
    mt += ts[i];
    mx += xs[i];
  }
  mt /= ts.size();
  mx /= ts.size();
  double sxy = 0, sxx = 0;
  for (std::size_t i = 0; i < ts.size(); ++i) {
    sxy += (ts[i] - mt) * (xs[i] - mx);
    sxx += (ts[i] - mt) * (ts[i] - mt);
  }
  return sxy / sxx;
}

}  // namespace nf
