#pragma once

#include <cmath>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include "phsysid/dynamics.hpp"
#include "phsysid/vec.hpp"

namespace phsysid {

enum class SchemeName { euler, midpoint, rk4, srk4, srk6, prk4 };

/// Discretization metadata (order, cost, structural properties). For prk4
/// the explicit/mono-implicit/symplectic entries hold for separable systems
/// only, flagged via `separable_only`.
struct IntegratorScheme {
  SchemeName name;
  int order;
  int g_evals;
  bool is_explicit;     // depends on (x^n, t^n) only
  bool mono_implicit;   // explicit in the two endpoints x^n, x^{n+1}
  bool symmetric;
  bool symplectic;
  bool separable_only;
};

const IntegratorScheme& scheme_info(SchemeName name);
SchemeName scheme_from_string(const std::string& s);
std::string to_string(SchemeName name);

/// Abscissae of the symmetric fourth-order scheme.
inline const double kSrk4C1 = 0.5 - std::sqrt(3.0) / 6.0;
inline const double kSrk4C2 = 0.5 + std::sqrt(3.0) / 6.0;

using RhsFn = std::function<Vec(const Vec&, double)>;

/// The discretization map Psi evaluated explicitly from the two endpoints
/// (no root finding). Generic in the scalar type so the same formulas are
/// recorded on the autodiff tape during training. `g` maps
/// (std::vector<T> state, double time) -> std::vector<T>.
template <class T, class G>
std::vector<T> psi_eval(SchemeName scheme, const G& g, const std::vector<T>& xn,
                        const std::vector<T>& xnp1, double tn, double dt) {
  const std::size_t d = xn.size();
  auto lincomb = [d](double a, const std::vector<T>& x, double b, const std::vector<T>& y) {
    std::vector<T> r(d);
    for (std::size_t i = 0; i < d; ++i) r[i] = x[i] * a + y[i] * b;
    return r;
  };
  switch (scheme) {
    case SchemeName::euler:
      return g(xn, tn);
    case SchemeName::midpoint:
      return g(lincomb(0.5, xn, 0.5, xnp1), tn + 0.5 * dt);
    case SchemeName::rk4: {
      const std::vector<T> k1 = g(xn, tn);
      const std::vector<T> k2 = g(lincomb(1.0, xn, 0.5 * dt, k1), tn + 0.5 * dt);
      const std::vector<T> k3 = g(lincomb(1.0, xn, 0.5 * dt, k2), tn + 0.5 * dt);
      const std::vector<T> k4 = g(lincomb(1.0, xn, dt, k3), tn + dt);
      std::vector<T> r(d);
      for (std::size_t i = 0; i < d; ++i)
        r[i] = (k1[i] + (k2[i] + k3[i]) * 2.0 + k4[i]) * (1.0 / 6.0);
      return r;
    }
    case SchemeName::srk4: {
      const double s = std::sqrt(3.0) / 6.0;
      const std::vector<T> k1 = g(lincomb(kSrk4C1, xn, kSrk4C2, xnp1), tn + kSrk4C2 * dt);
      const std::vector<T> k2 = g(lincomb(kSrk4C2, xn, kSrk4C1, xnp1), tn + kSrk4C1 * dt);
      const std::vector<T> mid = lincomb(0.5, xn, 0.5, xnp1);
      const std::vector<T> g1 = g(lincomb(1.0, mid, -s * dt, k1), tn + kSrk4C1 * dt);
      const std::vector<T> g2 = g(lincomb(1.0, mid, s * dt, k2), tn + kSrk4C2 * dt);
      std::vector<T> r(d);
      for (std::size_t i = 0; i < d; ++i) r[i] = (g1[i] + g2[i]) * 0.5;
      return r;
    }
    case SchemeName::srk6:
      throw std::runtime_error(
          "srk6: tableau not sourced in this build; scheme metadata only");
    case SchemeName::prk4:
      throw std::invalid_argument("psi: prk4 is partitioned, use prk4_step");
  }
  throw std::invalid_argument("psi: unknown scheme");
}

/// Double-path Psi.
Vec psi(SchemeName scheme, const RhsFn& g, const Vec& xn, const Vec& xnp1, double tn,
        double dt);

/// Residual of the integration scheme: (x^{n+1} - x^n)/dt - Psi(...).
Vec scheme_residual(SchemeName scheme, const RhsFn& g, const Vec& xn, const Vec& xnp1,
                    double tn, double dt);

struct StepResult {
  Vec x_next;
  bool converged = false;
  int iterations = 0;
};

/// One integration step. Explicit schemes are closed-form; mono-implicit
/// schemes solve x = x^n + dt*Psi(g, x^n, x, t^n) by damped fixed-point
/// iteration to infinity-norm residual <= tol. On non-convergence the best
/// iterate is returned with converged = false.
StepResult step(SchemeName scheme, const RhsFn& g, const Vec& xn, double tn, double dt,
                double tol = 1e-12, int max_iter = 100);

/// One step of Yoshida's fourth-order composition of leapfrog for separable
/// systems: dq/dt = f_q(p), dp/dt = f_p(q).
std::pair<Vec, Vec> prk4_step(const std::function<Vec(const Vec&)>& f_q,
                              const std::function<Vec(const Vec&)>& f_p, const Vec& q,
                              const Vec& p, double dt);

/// Classic RK4 with a fixed internal step h = dt_out/substeps, sampled at
/// dt_out. Throws on non-finite states.
Trajectory simulate_fixed_rk4(const RhsFn& rhs, const Vec& x0, double t0, double t_end,
                              double dt_out, int substeps);

/// High-accuracy reference stepper used for data generation.
Trajectory reference_simulate(const OdeSystem& system, const Vec& x0, double t_end,
                              double dt_out, int substeps = 100);

struct TestProblem {
  RhsFn rhs;
  std::function<Vec(double)> exact;
  Vec x0;
  double t0 = 0.0;
  double t1 = 1.0;
};

/// dx/dt = x, x(0) = 1 on [0, 1].
TestProblem linear_test_problem();

/// Least-squares slope of log(global error) vs log(dt) over the given steps.
double convergence_order(SchemeName scheme, const TestProblem& problem,
                         const std::vector<double>& dt_list);

}  // namespace phsysid
