#include "fixture.hpp"

#include <doctest.h>

#include <cmath>
#include <cstring>

using namespace nf;

TEST_CASE("zero noise and zero data stay exactly zero") {
  const auto& f = test::fixture();
  SimConfig sc;
  sc.epsilon = 0;
  sc.horizon = 0.5;
  const SimPath p = run_path(sc, *f.dyn, f.noise, RngStream(1, 0));
  CHECK_FALSE(p.stopped);
  for (const Vec& v : p.snapshots) CHECK(v.cwiseAbs().maxCoeff() == 0.0);
  const Vec v = step_snfe(*f.dyn, Vec::Zero(f.g.n_points), 1e-3, Vec::Ones(f.g.n_points), 0.0);
  CHECK(v.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("a single step from rest adds exactly eps dW") {
  const auto& f = test::fixture();
  Vec dw = f.sd.psi;
  const Vec v = step_snfe(*f.dyn, Vec::Zero(f.g.n_points), 1e-3, dw, 0.3);
  CHECK((v - 0.3 * dw).cwiseAbs().maxCoeff() <= 1e-15 * dw.cwiseAbs().maxCoeff());
}

TEST_CASE("shifted fronts are steady in the moving frame") {
  const auto& f = test::fixture();
  const double h = 0.5;
  const Vec v0 = shift(f.g, f.ws.profile, h) - f.ws.profile;
  Vec v = v0, work, zero = Vec::Zero(f.g.n_points);
  for (int k = 0; k < 5000; ++k) step_snfe_inplace(*f.dyn, v, 1e-3, zero, 0.0, work);
  CHECK((v - v0).cwiseAbs().maxCoeff() <= 1e-3);
}

TEST_CASE("weighted norms") {
  const auto& f = test::fixture();
  const Norms z = weighted_norms(Vec::Zero(f.g.n_points), 0.3, f.ws, f.sd);
  CHECK(z.l2 == 0.0);
  CHECK(z.l2_rho == 0.0);
  CHECK(z.h1_rho == 0.0);
  // a front derivative carried along with the wave keeps its norm
  const Norms n0 = weighted_norms(f.ws.d1, 0.0, f.ws, f.sd);
  for (double t : {0.7, 2.3}) {
    const Vec h = shift(f.g, f.ws.d1, f.ws.speed * t);
    const Norms nt = weighted_norms(h, t, f.ws, f.sd);
    CHECK(std::abs(nt.h1_rho / n0.h1_rho - 1) < 1e-6);
  }
  const Norms fr = frame_norms(f.g, f.w, f.ws.d1, f.sd.rho);
  CHECK(fr.h1_rho == doctest::Approx(n0.h1_rho).epsilon(1e-14));
  // with rho the weighted L2 norm is <u_x, psi>
  CHECK(fr.l2_rho * fr.l2_rho == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("sup norm is dominated by the weighted H1 norm") {
  const auto& f = test::fixture();
  double k = 0;
  for (int i = 0; i < 20; ++i) {
    Vec h(f.g.n_points);
    const double a = 0.3 + 0.1 * i, x0 = -20 + 2 * i;
    for (int j = 0; j < h.size(); ++j) h[j] = std::exp(-a * (f.g.x(j) - x0) * (f.g.x(j) - x0)) * std::sin(j * 0.05 * i);
    if (h.cwiseAbs().maxCoeff() == 0) continue;
    k = std::max(k, h.cwiseAbs().maxCoeff() / frame_norms(f.g, f.w, h, f.sd.rho).h1_rho);
  }
  CHECK(k > 0);
  CHECK(k < 2);
}

TEST_CASE("run_path is deterministic and records tau") {
  const auto& f = test::fixture();
  SimConfig sc;
  sc.epsilon = 0.05;
  sc.horizon = 0.3;
  const SimPath a = run_path(sc, *f.dyn, f.noise, RngStream(3, 1));
  const SimPath b = run_path(sc, *f.dyn, f.noise, RngStream(3, 1));
  REQUIRE(a.snapshots.size() == b.snapshots.size());
  for (std::size_t k = 0; k < a.snapshots.size(); ++k)
    CHECK(std::memcmp(a.snapshots[k].data(), b.snapshots[k].data(), sizeof(double) * f.g.n_points) == 0);
  CHECK(a.times.size() == 31);
  CHECK(a.increments.cols() == 300);
  // a threshold below the initial norm stops the path at t = 0
  sc.q_exponent = 0.999;
  sc.epsilon = 0.5;
  sc.initial_eta = Vec::Ones(f.g.n_points) * 10;
  const SimPath c = run_path(sc, *f.dyn, f.noise, RngStream(3, 1));
  CHECK(c.stopped);
  CHECK(c.tau == 0.0);
}

TEST_CASE("small noise rarely triggers the stopping time") {
  const auto& f = test::fixture();
  SimConfig sc;
  sc.epsilon = 1e-3;
  sc.horizon = 10;
  sc.record_stride = 1000;
  std::vector<int> ok(16);
  parallel_for(16, [&](int p) { ok[p] = !run_path(sc, *f.dyn, f.noise, RngStream(17, p)).stopped; });
  int n = 0;
  for (int o : ok) n += o;
  CHECK(n >= 15);
}

TEST_CASE("stream seeds differ by salt") {
  CHECK(stream_seed(1, 4) != stream_seed(1, 5));
  CHECK(stream_seed(1, 4) == stream_seed(1, 4));
}
