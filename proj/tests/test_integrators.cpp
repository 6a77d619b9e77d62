#include <doctest.h>

#include <cmath>

#include "phsysid/integrators.hpp"
#include "phsysid/rng.hpp"

using namespace phsysid;

namespace {

const RhsFn cubic_probe = [](const Vec& x, double t) {
  Vec y(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double z = x[(i + 1) % x.size()];
    y[i] = x[i] * x[i] * x[i] - 0.5 * z + 0.3 * std::sin(t) * x[i];
  }
  return y;
};

/// Appendix-A Butcher tableau evaluated the long way: stages resolved from
/// the two endpoints, then Psi = sum of b_i k_i. Independent of psi().
Vec srk4_tableau_psi(const RhsFn& g, const Vec& xn, const Vec& xnp1, double tn, double dt) {
  const double c1 = 0.5 - std::sqrt(3.0) / 6.0;
  const double c2 = 0.5 + std::sqrt(3.0) / 6.0;
  const double s = std::sqrt(3.0) / 6.0;
  const std::size_t d = xn.size();
  auto mix = [&](double w) {
    Vec y(d);
    for (std::size_t i = 0; i < d; ++i) y[i] = xn[i] + w * (xnp1[i] - xn[i]);
    return y;
  };
  // Y2, Y3 depend only on the endpoint difference (weights sum per row).
  const Vec k2 = g(mix(c1), tn + c1 * dt);
  const Vec k3 = g(mix(c2), tn + c2 * dt);
  Vec y1(d), y4(d);
  for (std::size_t i = 0; i < d; ++i) {
    const double mid = 0.5 * (xn[i] + xnp1[i]);
    y1[i] = mid - s * dt * k3[i];
    y4[i] = mid + s * dt * k2[i];
  }
  const Vec k1 = g(y1, tn + c1 * dt);
  const Vec k4 = g(y4, tn + c2 * dt);
  Vec out(d);
  for (std::size_t i = 0; i < d; ++i) out[i] = 0.5 * (k1[i] + k4[i]);
  return out;
}

}  // namespace

TEST_CASE("scheme metadata matches the integrator property table") {
  auto check = [](SchemeName n, int order, int evals, bool expl, bool mono, bool sym,
                  bool sympl, bool sep_only) {
    const IntegratorScheme& s = scheme_info(n);
    CHECK(s.order == order);
    CHECK(s.g_evals == evals);
    CHECK(s.is_explicit == expl);
    CHECK(s.mono_implicit == mono);
    CHECK(s.symmetric == sym);
    CHECK(s.symplectic == sympl);
    CHECK(s.separable_only == sep_only);
  };
  check(SchemeName::euler, 1, 1, true, true, false, false, false);
  check(SchemeName::midpoint, 2, 1, false, true, true, true, false);
  check(SchemeName::rk4, 4, 4, true, true, false, false, false);
  check(SchemeName::srk4, 4, 4, false, true, true, false, false);
  check(SchemeName::srk6, 6, 5, false, true, true, false, false);
  check(SchemeName::prk4, 4, 7, true, true, true, true, true);
}

TEST_CASE("psi closed forms") {
  const RhsFn linear = [](const Vec& x, double) { return x; };
  SUBCASE("euler returns g(x_n, t_n)") {
    const Vec p = psi(SchemeName::euler, cubic_probe, {0.4, -0.2}, {9.0, 9.0}, 0.3, 0.1);
    const Vec expect = cubic_probe({0.4, -0.2}, 0.3);
    CHECK(p == expect);
  }
  SUBCASE("midpoint evaluates at the endpoint average") {
    const Vec p = psi(SchemeName::midpoint, linear, {1.0}, {1.2}, 0.0, 0.1);
    CHECK(p[0] == doctest::Approx(1.1));
  }
  SUBCASE("srk4 on a constant rhs returns the constant") {
    const RhsFn constant = [](const Vec& x, double) { return Vec(x.size(), 2.5); };
    const Vec p = psi(SchemeName::srk4, constant, {0.0, 1.0}, {3.0, -2.0}, 0.0, 0.2);
    CHECK(p[0] == doctest::Approx(2.5));
    CHECK(p[1] == doctest::Approx(2.5));
  }
  SUBCASE("srk6 is feature-gated") {
    CHECK_THROWS_AS((void)psi(SchemeName::srk6, linear, {1.0}, {1.1}, 0.0, 0.1),
                    std::runtime_error);
  }
  SUBCASE("prk4 is rejected by psi") {
    CHECK_THROWS_AS((void)psi(SchemeName::prk4, linear, {1.0}, {1.1}, 0.0, 0.1),
                    std::invalid_argument);
  }
}

TEST_CASE("srk4 solved residual reproduces exp(dt) to fourth order") {
  // Bisection oracle on the scalar Eq-(6) residual for dx/dt = x.
  const RhsFn linear = [](const Vec& x, double) { return x; };
  const double dt = 0.1;
  auto residual = [&](double xnp1) {
    return scheme_residual(SchemeName::srk4, linear, {1.0}, {xnp1}, 0.0, dt)[0];
  };
  double lo = 1.0, hi = 1.3;
  REQUIRE(residual(lo) * residual(hi) < 0.0);
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    (residual(lo) * residual(mid) <= 0.0 ? hi : lo) = mid;
  }
  CHECK(std::abs(0.5 * (lo + hi) - std::exp(dt)) < 1e-6);
}

TEST_CASE("srk4 psi equals the Appendix-A Butcher tableau") {
  Rng rng(41);
  for (int probe = 0; probe < 50; ++probe) {
    Vec xn(3), xnp1(3);
    for (double& v : xn) v = rng.uniform(-1.0, 1.0);
    for (double& v : xnp1) v = rng.uniform(-1.0, 1.0);
    const double tn = rng.uniform(0.0, 2.0), dt = rng.uniform(0.01, 0.3);
    const Vec a = psi(SchemeName::srk4, cubic_probe, xn, xnp1, tn, dt);
    const Vec b = srk4_tableau_psi(cubic_probe, xn, xnp1, tn, dt);
    for (int i = 0; i < 3; ++i) CHECK(a[i] == doctest::Approx(b[i]).epsilon(1e-14));
  }
  SUBCASE("tableau row sums equal the abscissae") {
    const double s3 = std::sqrt(3.0);
    const double rows[4][4] = {{0.25, 0.0, -s3 / 6.0, 0.25},
                               {0.25 - s3 / 12.0, 0.0, 0.0, 0.25 - s3 / 12.0},
                               {0.25 + s3 / 12.0, 0.0, 0.0, 0.25 + s3 / 12.0},
                               {0.25, s3 / 6.0, 0.0, 0.25}};
    const double abscissae[4] = {kSrk4C1, kSrk4C1, kSrk4C2, kSrk4C2};
    for (int i = 0; i < 4; ++i) {
      double sum = 0.0;
      for (int j = 0; j < 4; ++j) sum += rows[i][j];
      CHECK(sum == doctest::Approx(abscissae[i]).epsilon(1e-15));
    }
    const double weights[4] = {0.5, 0.0, 0.0, 0.5};
    CHECK(weights[0] + weights[1] + weights[2] + weights[3] == doctest::Approx(1.0));
  }
}

// The step-form residual x^{n+1} - x^n - dt*Psi is exactly negated under
// (x_n, x_np1, dt, t_n) -> (x_np1, x_n, -dt, t_n+dt) for symmetric schemes;
// equivalently, the Eq-(6) quotient residual is invariant.
namespace {
Vec step_residual(SchemeName scheme, const RhsFn& g, const Vec& xn, const Vec& xnp1,
                  double tn, double dt) {
  return dt * scheme_residual(scheme, g, xn, xnp1, tn, dt);
}
}  // namespace

TEST_CASE("symmetric schemes negate the step residual under endpoint swap") {
  Rng rng(43);
  for (SchemeName scheme : {SchemeName::midpoint, SchemeName::srk4}) {
    for (int probe = 0; probe < 100; ++probe) {
      Vec xn(3), xnp1(3);
      for (double& v : xn) v = rng.uniform(-1.0, 1.0);
      for (double& v : xnp1) v = rng.uniform(-1.0, 1.0);
      const double tn = rng.uniform(0.0, 2.0), dt = rng.uniform(0.05, 0.4);
      const Vec fwd = step_residual(scheme, cubic_probe, xn, xnp1, tn, dt);
      const Vec bwd = step_residual(scheme, cubic_probe, xnp1, xn, tn + dt, -dt);
      for (int i = 0; i < 3; ++i) CHECK(std::abs(fwd[i] + bwd[i]) <= 1e-12);
    }
  }
}

TEST_CASE("one-endpoint schemes break the swap symmetry on a cubic probe") {
  const Vec xn = {0.8, -0.3, 0.5}, xnp1 = {0.2, 0.6, -0.4};
  for (SchemeName scheme : {SchemeName::euler, SchemeName::rk4}) {
    const Vec fwd = step_residual(scheme, cubic_probe, xn, xnp1, 0.4, 0.3);
    const Vec bwd = step_residual(scheme, cubic_probe, xnp1, xn, 0.7, -0.3);
    CHECK(inf_norm(fwd + bwd) > 1e-6);
  }
}

TEST_CASE("psi consistency: Psi(g, x, x, t) -> g(x, t) as dt -> 0") {
  const Vec x = {0.3, -0.7, 0.9};
  const Vec g0 = cubic_probe(x, 1.1);
  for (SchemeName scheme :
       {SchemeName::euler, SchemeName::midpoint, SchemeName::rk4, SchemeName::srk4}) {
    const Vec p = psi(scheme, cubic_probe, x, x, 1.1, 1e-8);
    CHECK(inf_norm(p - g0) < 1e-6);
  }
}

TEST_CASE("step examples on dx/dt = x") {
  const RhsFn linear = [](const Vec& x, double) { return x; };
  SUBCASE("euler") {
    const StepResult r = step(SchemeName::euler, linear, {1.0}, 0.0, 0.1);
    CHECK(r.converged);
    CHECK(r.x_next[0] == doctest::Approx(1.1));
  }
  SUBCASE("midpoint closed form (1+h/2)/(1-h/2)") {
    const StepResult r = step(SchemeName::midpoint, linear, {1.0}, 0.0, 0.1);
    CHECK(r.converged);
    CHECK(r.x_next[0] == doctest::Approx(1.05 / 0.95).epsilon(1e-10));
  }
  SUBCASE("rk4 four-stage Taylor sum") {
    const StepResult r = step(SchemeName::rk4, linear, {1.0}, 0.0, 0.1);
    const double h = 0.1;
    const double taylor = 1.0 + h + h * h / 2.0 + h * h * h / 6.0 + h * h * h * h / 24.0;
    CHECK(r.x_next[0] == doctest::Approx(taylor).epsilon(1e-12));
    CHECK(r.x_next[0] == doctest::Approx(1.10517083).epsilon(1e-8));
  }
  SUBCASE("non-convergence reports the best iterate") {
    // dt far beyond the contraction regime
    const StepResult r = step(SchemeName::midpoint, linear, {1.0}, 0.0, 3.0, 1e-14, 8);
    CHECK(!r.converged);
    CHECK(r.iterations == 8);
  }
}

TEST_CASE("prk4_step") {
  // harmonic oscillator H = (q^2 + p^2)/2: dq/dt = p, dp/dt = -q
  const auto f_q = [](const Vec& p) { return p; };
  const auto f_p = [](const Vec& q) { return Vec{-q[0]}; };
  SUBCASE("one step matches the exact rotation") {
    const auto [q, p] = prk4_step(f_q, f_p, {1.0}, {0.0}, 0.1);
    CHECK(std::abs(q[0] - std::cos(0.1)) < 1e-6);
    CHECK(std::abs(p[0] + std::sin(0.1)) < 1e-6);
  }
  SUBCASE("dt = 0 is the identity") {
    const auto [q, p] = prk4_step(f_q, f_p, {0.7}, {-0.4}, 0.0);
    CHECK(q[0] == 0.7);
    CHECK(p[0] == -0.4);
  }
  SUBCASE("no secular energy drift over 1e4 steps") {
    Vec q = {1.0}, p = {0.0};
    double max_drift = 0.0;
    for (int k = 0; k < 10000; ++k) {
      std::tie(q, p) = prk4_step(f_q, f_p, q, p, 0.1);
      max_drift = std::max(max_drift, std::abs(0.5 * (q[0] * q[0] + p[0] * p[0]) - 0.5));
    }
    CHECK(max_drift < 1e-5);
  }
}

TEST_CASE("reference_simulate") {
  const OdeSystem ms = make_benchmark("mass_spring", {{"c", {0.0}}, {"alpha", {0.0}}});
  SUBCASE("oscillator closes its period to 1e-8") {
    const double pi = 3.14159265358979323846;
    const Trajectory traj = reference_simulate(ms, {1.0, 0.0}, 2.0 * pi, pi / 2.0, 100);
    REQUIRE(traj.size() == 5);
    CHECK(std::abs(traj.states.back()[0] - 1.0) < 1e-8);
    CHECK(std::abs(traj.states.back()[1] - 0.0) < 1e-8);
  }
  SUBCASE("t_end = 0 gives the single-point trajectory") {
    const Trajectory traj = reference_simulate(ms, {0.3, 0.4}, 0.0, 0.1);
    CHECK(traj.size() == 1);
    CHECK(traj.states[0] == Vec{0.3, 0.4});
  }
  SUBCASE("Henon-Heiles energy conserved to 1e-7 relative") {
    const OdeSystem hh = make_benchmark("henon_heiles");
    const Vec x0 = {0.1, -0.2, 0.4, 0.5};
    const double h0 = hh.hamiltonian(x0);
    const Trajectory traj = reference_simulate(hh, x0, 10.0, 0.1, 100);
    for (const Vec& x : traj.states)
      CHECK(std::abs(hh.hamiltonian(x) - h0) / std::abs(h0) < 1e-7);
  }
}

TEST_CASE("convergence orders on dx/dt = x") {
  const TestProblem problem = linear_test_problem();
  const std::vector<double> dts = {0.2, 0.1, 0.05, 0.025};
  CHECK(convergence_order(SchemeName::euler, problem, dts) == doctest::Approx(1.0).epsilon(0.2));
  CHECK(convergence_order(SchemeName::midpoint, problem, dts) ==
        doctest::Approx(2.0).epsilon(0.1));
  CHECK(convergence_order(SchemeName::rk4, problem, dts) == doctest::Approx(4.0).epsilon(0.05));
  CHECK(convergence_order(SchemeName::srk4, problem, dts) ==
        doctest::Approx(4.0).epsilon(0.05));
  CHECK_THROWS_AS((void)convergence_order(SchemeName::euler, problem, {0.1, 0.05}),
                  std::invalid_argument);
}
