#include "fixture.hpp"

#include <doctest.h>

#include <cmath>

using namespace nf;

namespace {

double rel_pair(const test::Fixture& f, const Vec& h, double t) {
  const Vec psi_t = shift(f.g, f.sd.psi, f.ws.speed * t);
  return std::abs(inner(f.w, h, psi_t)) / std::sqrt(inner(f.w, h, h) * inner(f.w, psi_t, psi_t));
}

SimPath quiet_path(int steps, int stride, int rank, double dt = 1e-3) {
  SimPath p;
  p.dt = dt;
  p.steps = steps;
  p.increments = Mat::Zero(rank, steps);
  for (int k = 0; k <= steps; k += stride) p.times.push_back(k * dt);
  return p;
}

}  // namespace

TEST_CASE("projection off the direction of motion") {
  const auto& f = test::fixture();
  const double t = 1.3;
  const Vec ux = shift(f.g, f.ws.d1, f.ws.speed * t);
  const Vec z = project_orth(ux, t, f.ws, f.sd);
  CHECK(std::sqrt(inner(f.w, z, z)) <= 1e-10 * std::sqrt(inner(f.w, ux, ux)));

  Vec h(f.g.n_points);
  for (int i = 0; i < h.size(); ++i) h[i] = std::exp(-std::pow(f.g.x(i) - 3, 2) / 4) * std::cos(f.g.x(i));
  const Vec p = project_orth(h, t, f.ws, f.sd);
  CHECK(rel_pair(f, p, t) <= 1e-10);
  const Vec pp = project_orth(p, t, f.ws, f.sd);
  CHECK((pp - p).cwiseAbs().maxCoeff() <= 1e-12 * p.cwiseAbs().maxCoeff());
}

TEST_CASE("phase ODE at an exactly shifted front does not move") {
  const auto& f = test::fixture();
  const double a = 0.2;
  const Vec v = shift(f.g, f.ws.profile, a) - f.ws.profile;
  std::vector<double> times;
  for (int k = 0; k <= 20; ++k) times.push_back(0.01 * k);
  const PhaseTrace tr = track_phase_m(times, std::vector<Vec>(times.size(), v), 10.0, *f.dyn, a);
  for (double c : tr.c_m) CHECK(std::abs(c) < 1e-8);
  CHECK(tr.C_m.back() == doctest::Approx(a).epsilon(1e-9));
}

TEST_CASE("phase ODE speed at a frozen perturbation along u_x") {
  const auto& f = test::fixture();
  const double beta = 1e-3, m = 10;
  const Vec v = beta * f.ws.d1;
  const std::vector<double> times = {0, 0.01, 0.02};
  const PhaseTrace tr = track_phase_m(times, std::vector<Vec>(3, v), m, *f.dyn, 0.0);
  CHECK(tr.c_m[0] == doctest::Approx(-m * beta).epsilon(1e-9));
}

TEST_CASE("phase relaxes toward a frozen shift at rate m") {
  const auto& f = test::fixture();
  const double a = 1e-3, m = 20;
  const Vec v = shift(f.g, f.ws.profile, a) - f.ws.profile;
  std::vector<double> times;
  for (int k = 0; k <= 100; ++k) times.push_back(0.002 * k);
  const PhaseTrace tr = track_phase_m(times, std::vector<Vec>(times.size(), v), m, *f.dyn, 0.0);
  const double rate = -std::log(std::abs(tr.C_m[50] - a) / std::abs(tr.C_m[0] - a)) / times[50];
  CHECK(rate == doctest::Approx(m).epsilon(0.05));
}

TEST_CASE("phase ODE refuses an unstable step") {
  const auto& f = test::fixture();
  const std::vector<double> times = {0, 0.1};
  const std::vector<Vec> v(2, Vec::Zero(f.g.n_points));
  CHECK_THROWS_AS(track_phase_m(times, v, 10.0, *f.dyn), SimError);
}

TEST_CASE("C0 without noise") {
  const auto& f = test::fixture();
  const SimPath p = quiet_path(200, 10, f.noise.rank());
  const Vec c = compute_C0(p, *f.dyn, f.noise, Vec());
  CHECK(c.cwiseAbs().maxCoeff() == 0.0);
  const double beta = 0.7;
  const Vec cb = compute_C0(p, *f.dyn, f.noise, beta * f.ws.d1);
  CHECK((cb.array() + beta).abs().maxCoeff() < 1e-12);
}

TEST_CASE("zero data and zero noise give vanishing coefficients") {
  const auto& f = test::fixture();
  const SimPath p = quiet_path(200, 10, f.noise.rank());
  const ExpansionCoefficients ex = expand_path(p, *f.dyn, f.noise, Vec(), {.order = 2, .m_ladder = {10}});
  for (std::size_t k = 0; k < ex.times.size(); ++k) {
    CHECK(ex.C0[k] == 0.0);
    CHECK(ex.C1[k] == 0.0);
    CHECK(ex.v0[k].cwiseAbs().maxCoeff() == 0.0);
    CHECK(ex.v1[k].cwiseAbs().maxCoeff() == 0.0);
  }
}

TEST_CASE("orthogonal data decay at least at the spectral gap") {
  const auto& f = test::fixture();
  Vec eta(f.g.n_points);
  for (int i = 0; i < eta.size(); ++i) eta[i] = std::exp(-f.g.x(i) * f.g.x(i) / 4);
  eta = project_orth(eta, 0, f.ws, f.sd);
  eta /= frame_norms(f.g, f.w, eta, f.sd.rho).l2_rho;
  const SimPath p = quiet_path(4000, 500, f.noise.rank());
  const ExpansionCoefficients ex = expand_path(p, *f.dyn, f.noise, eta, {.order = 1, .m_ladder = {}});
  for (std::size_t k = 0; k < ex.times.size(); ++k) {
    const double n = frame_norms(f.g, f.w, ex.v0[k], f.sd.rho).l2_rho;
    CHECK(n <= std::exp(-f.sd.gap * ex.times[k]) * 1.05);
  }
}

TEST_CASE("expansion identities along a noisy path") {
  const auto& f = test::fixture();
  const SimPath inc = draw_increments(f.noise, 1e-3, 1000, 10, RngStream(2, 0));
  const Vec eta = 0.04 * f.sd.psi / f.sd.psi.maxCoeff();
  const ExpansionCoefficients ex = expand_path(inc, *f.dyn, f.noise, eta, {.order = 2, .m_ladder = {1000}});
  CHECK(ex.max_orthogonality <= 1e-6);
  for (std::size_t k = 1; k < ex.times.size(); ++k) {
    CHECK(rel_pair(f, ex.v0[k], 0.0) <= 1e-6);  // fields live in the moving frame
    CHECK(std::abs(ex.v1_pairing[k] - ex.v1_identity[k]) <= 1e-4 * std::abs(ex.v1_identity[k]) + 1e-12);
  }
  // the table-driven C0 agrees with the one-pass expansion
  const Mat table = noise_pairing_table(f.noise, f.sd.psi, f.ws.speed, 1e-3, 1000);
  const Vec c0 = compute_C0(inc, table, eta, f.w, f.sd.psi);
  for (std::size_t k = 0; k < ex.times.size(); ++k) CHECK(c0[10 * k] == doctest::Approx(ex.C0[k]).epsilon(1e-12));

  // v0^m - v0 lies along u_x: v0^m = v0 + (C0^m - C0) u_x(. - c t)
  const FiniteM& fm = ex.finite_m[0];
  for (std::size_t k = 0; k < ex.times.size(); k += 20) {
    const Vec gap = fm.v0[k] - ex.v0[k] - (fm.C0[k] - ex.C0[k]) * f.ws.d1;
    CHECK(std::sqrt(inner(f.w, gap, gap)) <= 1e-6);
  }
}
