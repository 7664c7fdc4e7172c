#include "fixture.hpp"

#include <doctest.h>

#include <cmath>

using namespace nf;

TEST_CASE("symmetric gain has its middle root at the threshold") {
  const FixedPoints fp = validate_gain({.gamma = 8, .theta = 0.5});
  CHECK(fp.a == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(gain_d1({8, 0.5}, 0.5) == doctest::Approx(2.0));
  CHECK(std::abs(fp.a2 - (1 - fp.a1)) < 1e-11);
  CHECK(std::abs(gain({8, 0.5}, fp.a1) - fp.a1) < 1e-12);
}

TEST_CASE("gains that are not bistable are rejected") {
  try {
    validate_gain({.gamma = 2, .theta = 0.5});
    FAIL("accepted a monostable gain");
  } catch (const ModelError& e) {
    CHECK(std::string(e.what()).starts_with("bistability violated"));
  }
}

TEST_CASE("recursive exponential convolution matches quadrature") {
  const GridSpec g = GridSpec::make(20, 401);
  Vec h(g.n_points);
  for (int i = 0; i < g.n_points; ++i) h[i] = std::tanh(g.x(i)) + std::cos(g.x(i)) * std::exp(-g.x(i) * g.x(i) / 8);
  const double err = (conv_exp(g, h, 1.3) - conv_exp_reference(g, h, 1.3)).cwiseAbs().maxCoeff();
  CHECK(err < 1e-10);
  // constants are reproduced exactly thanks to the tail terms
  const Vec one = Vec::Ones(g.n_points);
  CHECK((conv_exp(g, one, 1.0) - one).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("decay-rate cubic") {
  CHECK(std::abs(decay_rate(0, 1, 0.3) - std::sqrt(0.3)) < 1e-12);
  const double r = decay_rate(0.6, 1.5, 0.4);
  CHECK(std::abs(decay_cubic(r, 0.6, 1.5, 0.4)) < 1e-12);
  CHECK(r > std::sqrt(0.4));
  CHECK(r < 1);
  CHECK(decay_rate(0.7, 1.5, 0.4) > r);
}

TEST_CASE("front solution at N = 1024") {
  const auto& f = test::fixture();
  CHECK(f.ws.residual < 1e-8);
  CHECK(f.ws.speed > 0);
  CHECK(inner(f.w, f.ws.d1, f.sd.psi) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(f.sd.psi.minCoeff() > 0);
  CHECK(f.sd.adjoint_residual < 1e-8);
  CHECK(f.sd.gap > 0);
}

TEST_CASE("reflecting the threshold reverses the speed") {
  // F_theta(u) = 1 - F_{1-theta}(1 - u), so u -> 1 - u(-x) maps fronts onto fronts
  const GridSpec g = GridSpec::make(40, 1024);
  const WaveSolution a = solve_wave({.gain = {8, 0.6}, .kernel = {1}}, g, 1e-12);
  const WaveSolution b = solve_wave({.gain = {8, 0.4}, .kernel = {1}}, g, 1e-12);
  CHECK(a.speed == doctest::Approx(-b.speed).epsilon(1e-6));
}
