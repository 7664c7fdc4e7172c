#include "nf/phase.hpp"

#include <cmath>

namespace nf {

Vec project_orth(const Vec& h, double t, const WaveSolution& ws, const SpectralData& sd) {
  const double s = ws.speed * t;
  const Vec w = quadrature_weights(ws.grid);
  const Vec psi = s == 0.0 ? sd.psi : shift(ws.grid, sd.psi, s);
  const Vec ux = s == 0.0 ? ws.d1 : shift(ws.grid, ws.d1, s);
  return h - (inner(w, h, psi) / inner(w, ux, psi)) * ux;
}

namespace {

double phase_rate(const FrozenDynamics& dyn, const Vec& v, double C, double m, Vec& a, Vec& b) {
  const WaveSolution& ws = dyn.wave();
  shift(ws.grid, ws.profile, C, a);
  shift(ws.grid, dyn.spectral().psi, C, b);
  return -m * inner(dyn.weights(), Vec(v + ws.profile - a), b);
}

}  // namespace

PhaseTrace track_phase_m(const std::vector<double>& times, const std::vector<Vec>& v, double m,
                         const FrozenDynamics& dyn, double c_init) {
  if (!(m > 0)) throw SimError("relaxation rate must be positive");
  for (std::size_t k = 1; k < times.size(); ++k)
    if (m * (times[k] - times[k - 1]) > 0.5) throw SimError("phase ODE unstable");
  PhaseTrace tr;
  tr.relaxation_m = m;
  tr.times = times;
  Vec a, b;
  double C = c_init;
  for (std::size_t k = 0; k < times.size(); ++k) {
    const double rate = phase_rate(dyn, v[k], C, m, a, b);
    tr.C_m.push_back(C);
    tr.c_m.push_back(rate);
    if (k + 1 == times.size()) break;
    const double h = times[k + 1] - times[k];
    const Vec mid = 0.5 * (v[k] + v[k + 1]);
    const double k1 = rate;
    const double k2 = phase_rate(dyn, mid, C + 0.5 * h * k1, m, a, b);
    const double k3 = phase_rate(dyn, mid, C + 0.5 * h * k2, m, a, b);
    const double k4 = phase_rate(dyn, v[k + 1], C + h * k3, m, a, b);
    C += h / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4);
  }
  return tr;
}

PhaseTrace track_phase_m(const SimPath& path, double m, const FrozenDynamics& dyn) {
  return track_phase_m(path.times, path.snapshots, m, dyn, 0.0);
}

Mat noise_pairing_table(const NoiseModel& noise, const Vec& psi, double speed, double dt, int steps) {
  Mat t(noise.rank(), steps);
  for (int k = 0; k < steps; ++k) t.col(k) = noise.pairings(speed * k * dt, psi);
  return t;
}

Vec compute_C0(const SimPath& path, const Mat& table, const Vec& eta, const Vec& w, const Vec& psi) {
  Vec c(path.steps + 1);
  c[0] = eta.size() == psi.size() ? -inner(w, eta, psi) : 0.0;
  for (int k = 0; k < path.steps; ++k) c[k + 1] = c[k] - path.increments.col(k).dot(table.col(k));
  return c;
}

Vec compute_C0(const SimPath& path, const FrozenDynamics& dyn, const NoiseModel& noise, const Vec& eta) {
  const Mat table = noise_pairing_table(noise, dyn.spectral().psi, dyn.wave().speed, path.dt, path.steps);
  return compute_C0(path, table, eta, dyn.weights(), dyn.spectral().psi);
}

namespace {

struct MState {
  double m, decay, gain;
  double c0, c1;
  Vec v0, v1;
  FiniteM out;
};

}  // namespace

ExpansionCoefficients expand_path(const SimPath& path, const FrozenDynamics& dyn, const NoiseModel& noise,
                                  const Vec& eta_in, const ExpansionOptions& opt) {
  const WaveSolution& ws = dyn.wave();
  const SpectralData& sd = dyn.spectral();
  const GridSpec& g = ws.grid;
  const int n = g.n_points;
  const Vec& w = dyn.weights();
  const Vec& psi = sd.psi;
  const Vec& d1 = ws.d1;
  const Vec& d2 = ws.d2;
  const Vec eta = eta_in.size() == n ? eta_in : Vec::Zero(n);
  const double dt = path.dt;
  const double h = -std::expm1(-dt);
  const bool second = opt.order >= 2;
  const double psi_norm = std::sqrt(inner(w, psi, psi));
  const double d1_psix = inner(w, d1, sd.psi_x);
  const Vec wpsi = w.cwiseProduct(psi);
  const Vec wpsix = w.cwiseProduct(sd.psi_x);

  ExpansionCoefficients ex;
  double c0 = -wpsi.dot(eta);
  Vec v0 = eta + c0 * d1;
  Vec v2 = Vec::Zero(n);  // second-order part of v, from which v1 is read off
  double p_sum = 0.0;     // sum_k h <C(F''(v0^2/2 - C0 u_x v0)), psi>

  std::vector<MState> ms;
  for (double m : opt.m_ladder) {
    MState s;
    s.m = m;
    s.decay = std::exp(-m * dt);
    s.gain = -std::expm1(-m * dt);
    s.c0 = 0.0;
    s.c1 = 0.0;
    s.v0 = eta;
    s.v1 = Vec::Zero(n);
    s.out.m = m;
    ms.push_back(std::move(s));
  }

  Vec dw, lv, q, tmp, g2;
  std::size_t next_record = 0;
  auto record = [&](int k) {
    ex.times.push_back(k * dt);
    ex.C0.push_back(c0);
    if (opt.keep_fields) ex.v0.push_back(v0);
    if (second) {
      const double ident = c0 * wpsix.dot(v0);
      const double c1 = -p_sum + ident - 0.5 * c0 * c0 * d1_psix;
      ex.C1.push_back(c1);
      const Vec v1 = v2 + c1 * d1 - 0.5 * c0 * c0 * d2;
      ex.v1_pairing.push_back(wpsi.dot(v1));
      ex.v1_identity.push_back(ident);
      if (opt.keep_fields) ex.v1.push_back(v1);
    }
    for (auto& s : ms) {
      s.out.C0.push_back(s.c0);
      if (opt.keep_fields) s.out.v0.push_back(s.v0);
      if (second) {
        s.out.C1.push_back(s.c1);
        if (opt.keep_fields) s.out.v1.push_back(s.v1);
      }
    }
  };

  const double speed = ws.speed;
  for (int k = 0;; ++k) {
    if (next_record < path.times.size() && std::abs(path.times[next_record] - k * dt) < 0.5 * dt) {
      record(k);
      ++next_record;
    }
    if (k == path.steps) break;

    frame_increment(noise, speed, k * dt, path.increments.col(k), dw);
    const double dc0 = -wpsi.dot(dw);

    for (auto& s : ms) {
      // S = C0^m - C0 relaxes at rate m, driven by -dC0 spread evenly over the step
      const double snext = s.decay * (s.c0 - c0) - dc0 * s.gain / (s.m * dt);
      const double c0_next = snext + c0 + dc0;
      double c1_next = 0.0;
      if (second) {
        const double target = -p_sum + s.c0 * wpsix.dot(s.v0) - 0.5 * d1_psix * s.c0 * s.c0;
        c1_next = s.decay * s.c1 + s.gain * target;
        g2 = 0.5 * s.v0.cwiseProduct(s.v0) - s.c0 * d1.cwiseProduct(s.v0);
        dyn.second(g2, q);
        dyn.linear(s.v1, lv);
        s.v1 += h * (lv + q) - 0.5 * (c0_next * c0_next - s.c0 * s.c0) * d2 + (c1_next - s.c1) * d1;
      }
      dyn.linear(s.v0, lv);
      s.v0 += h * lv + (c0_next - s.c0) * d1 + dw;
      s.c0 = c0_next;
      s.c1 = c1_next;
    }

    if (second) {
      // forcing at the left-point values of v0 and C0
      g2 = 0.5 * v0.cwiseProduct(v0) - c0 * d1.cwiseProduct(v0);
      const double a = dyn.second_pairing(g2);
      tmp = v0 - c0 * d1;
      dyn.second(tmp.cwiseProduct(tmp), q);
      dyn.linear(v2, lv);
      v2 += h * (lv + 0.5 * q);
      p_sum += h * a;
    }

    dyn.linear(v0, lv);
    v0 += h * lv + dw + dc0 * d1;
    const double rel = std::abs(wpsi.dot(v0)) / (std::sqrt(inner(w, v0, v0)) * psi_norm + 1e-300);
    if (v0.squaredNorm() > 0) ex.max_orthogonality = std::max(ex.max_orthogonality, rel);
    c0 += dc0;
    if (!v0.allFinite() || !v2.allFinite()) throw SimError("blow-up");
  }
  for (auto& s : ms) ex.finite_m.push_back(std::move(s.out));
  return ex;
}

std::vector<Vec> evolve_v0(const SimPath& path, const FrozenDynamics& dyn, const NoiseModel& noise, const Vec& eta) {
  return expand_path(path, dyn, noise, eta, {.order = 1, .m_ladder = {}}).v0;
}

std::vector<double> compute_C1(const SimPath& path, const FrozenDynamics& dyn, const NoiseModel& noise,
                               const Vec& eta) {
  return expand_path(path, dyn, noise, eta, {.order = 2, .m_ladder = {}, .keep_fields = false}).C1;
}

std::vector<Vec> evolve_v1(const SimPath& path, const FrozenDynamics& dyn, const NoiseModel& noise, const Vec& eta) {
  return expand_path(path, dyn, noise, eta).v1;
}

}  // namespace nf
