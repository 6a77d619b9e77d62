#include "phsysid/integrators.hpp"

#include <array>
#include <cmath>

namespace phsysid {

namespace {

const std::array<IntegratorScheme, 6> kSchemes = {{
    // name, order, g_evals, explicit, mono_implicit, symmetric, symplectic, separable_only
    {SchemeName::euler, 1, 1, true, true, false, false, false},
    {SchemeName::midpoint, 2, 1, false, true, true, true, false},
    {SchemeName::rk4, 4, 4, true, true, false, false, false},
    {SchemeName::srk4, 4, 4, false, true, true, false, false},
    {SchemeName::srk6, 6, 5, false, true, true, false, false},
    {SchemeName::prk4, 4, 7, true, true, true, true, true},
}};

Vec rk4_substep(const RhsFn& rhs, const Vec& x, double t, double h) {
  const std::size_t d = x.size();
  const Vec k1 = rhs(x, t);
  Vec tmp(d);
  for (std::size_t i = 0; i < d; ++i) tmp[i] = x[i] + 0.5 * h * k1[i];
  const Vec k2 = rhs(tmp, t + 0.5 * h);
  for (std::size_t i = 0; i < d; ++i) tmp[i] = x[i] + 0.5 * h * k2[i];
  const Vec k3 = rhs(tmp, t + 0.5 * h);
  for (std::size_t i = 0; i < d; ++i) tmp[i] = x[i] + h * k3[i];
  const Vec k4 = rhs(tmp, t + h);
  Vec out(d);
  for (std::size_t i = 0; i < d; ++i)
    out[i] = x[i] + h / 6.0 * (k1[i] + 2.0 * (k2[i] + k3[i]) + k4[i]);
  return out;
}

}  // namespace

const IntegratorScheme& scheme_info(SchemeName name) {
  for (const auto& s : kSchemes)
    if (s.name == name) return s;
  throw std::invalid_argument("scheme_info: unknown scheme");
}

SchemeName scheme_from_string(const std::string& s) {
  if (s == "euler") return SchemeName::euler;
  if (s == "midpoint") return SchemeName::midpoint;
  if (s == "rk4") return SchemeName::rk4;
  if (s == "srk4") return SchemeName::srk4;
  if (s == "srk6") return SchemeName::srk6;
  if (s == "prk4") return SchemeName::prk4;
  throw std::invalid_argument("unknown integrator '" + s + "'");
}

std::string to_string(SchemeName name) {
  switch (name) {
    case SchemeName::euler: return "euler";
    case SchemeName::midpoint: return "midpoint";
    case SchemeName::rk4: return "rk4";
    case SchemeName::srk4: return "srk4";
    case SchemeName::srk6: return "srk6";
    case SchemeName::prk4: return "prk4";
  }
  return "?";
}

Vec psi(SchemeName scheme, const RhsFn& g, const Vec& xn, const Vec& xnp1, double tn,
        double dt) {
  if (xn.size() != xnp1.size()) throw std::invalid_argument("psi: endpoint size mismatch");
  return psi_eval<double>(scheme, g, xn, xnp1, tn, dt);
}

Vec scheme_residual(SchemeName scheme, const RhsFn& g, const Vec& xn, const Vec& xnp1,
                    double tn, double dt) {
  const Vec p = psi(scheme, g, xn, xnp1, tn, dt);
  Vec r(xn.size());
  for (std::size_t i = 0; i < xn.size(); ++i) r[i] = (xnp1[i] - xn[i]) / dt - p[i];
  return r;
}

StepResult step(SchemeName scheme, const RhsFn& g, const Vec& xn, double tn, double dt,
                double tol, int max_iter) {
  if (tol <= 0.0) throw std::invalid_argument("step: tol must be positive");
  const IntegratorScheme& info = scheme_info(scheme);
  StepResult res;
  if (info.is_explicit && !info.separable_only) {
    const Vec p = psi(scheme, g, xn, xn, tn, dt);
    res.x_next = xn;
    axpy(dt, p, res.x_next);
    res.converged = true;
    return res;
  }
  if (scheme == SchemeName::prk4)
    throw std::invalid_argument("step: prk4 needs a separable split, use prk4_step");

  // Damped fixed-point iteration on x = x^n + dt * Psi(g, x^n, x, t^n).
  Vec x = xn;
  axpy(dt, g(xn, tn), x);  // Euler predictor
  double beta = 1.0;
  double prev_res = std::numeric_limits<double>::infinity();
  for (int it = 1; it <= max_iter; ++it) {
    Vec target = xn;
    axpy(dt, psi(scheme, g, xn, x, tn, dt), target);
    Vec delta = target - x;
    const double rnorm = inf_norm(delta);
    res.iterations = it;
    if (!std::isfinite(rnorm)) break;
    if (rnorm > prev_res) beta = std::max(0.125, beta * 0.5);
    prev_res = rnorm;
    axpy(beta, delta, x);
    if (rnorm <= tol) {
      res.x_next = x;
      res.converged = true;
      return res;
    }
  }
  res.x_next = x;
  res.converged = false;
  return res;
}

std::pair<Vec, Vec> prk4_step(const std::function<Vec(const Vec&)>& f_q,
                              const std::function<Vec(const Vec&)>& f_p, const Vec& q,
                              const Vec& p, double dt) {
  // Triple-jump composition weights (Yoshida).
  const double w1 = 1.0 / (2.0 - std::cbrt(2.0));
  const double w0 = 1.0 - 2.0 * w1;
  Vec qq = q, pp = p;
  auto leapfrog = [&](double h) {
    axpy(0.5 * h, f_p(qq), pp);
    axpy(h, f_q(pp), qq);
    axpy(0.5 * h, f_p(qq), pp);
  };
  leapfrog(w1 * dt);
  leapfrog(w0 * dt);
  leapfrog(w1 * dt);
  return {qq, pp};
}

Trajectory simulate_fixed_rk4(const RhsFn& rhs, const Vec& x0, double t0, double t_end,
                              double dt_out, int substeps) {
  if (substeps < 1) throw std::invalid_argument("simulate: substeps must be >= 1");
  if (dt_out <= 0.0) throw std::invalid_argument("simulate: dt_out must be positive");
  const int n_out = static_cast<int>(std::llround((t_end - t0) / dt_out));
  Trajectory traj;
  traj.dt = dt_out;
  traj.times.reserve(n_out + 1);
  traj.states.reserve(n_out + 1);
  Vec x = x0;
  traj.times.push_back(t0);
  traj.states.push_back(x);
  const double h = dt_out / substeps;
  for (int n = 0; n < n_out; ++n) {
    double t = t0 + n * dt_out;
    for (int s = 0; s < substeps; ++s) x = rk4_substep(rhs, x, t + s * h, h);
    if (!all_finite(x))
      throw std::runtime_error("simulate: non-finite state at t=" +
                               std::to_string(t0 + (n + 1) * dt_out));
    traj.times.push_back(t0 + (n + 1) * dt_out);
    traj.states.push_back(x);
  }
  return traj;
}

Trajectory reference_simulate(const OdeSystem& system, const Vec& x0, double t_end,
                              double dt_out, int substeps) {
  if (static_cast<int>(x0.size()) != system.dim)
    throw std::invalid_argument("reference_simulate: state dimension mismatch");
  if (t_end == 0.0) {
    Trajectory traj;
    traj.dt = dt_out;
    traj.times = {0.0};
    traj.states = {x0};
    return traj;
  }
  return simulate_fixed_rk4(system.rhs, x0, 0.0, t_end, dt_out, substeps);
}

TestProblem linear_test_problem() {
  TestProblem p;
  p.rhs = [](const Vec& x, double) { return Vec{x[0]}; };
  p.exact = [](double t) { return Vec{std::exp(t)}; };
  p.x0 = {1.0};
  p.t0 = 0.0;
  p.t1 = 1.0;
  return p;
}

double convergence_order(SchemeName scheme, const TestProblem& problem,
                         const std::vector<double>& dt_list) {
  if (dt_list.size() < 3)
    throw std::invalid_argument("convergence_order: need at least 3 step sizes");
  std::vector<double> log_dt, log_err;
  for (double dt : dt_list) {
    if (dt <= 0.0) throw std::invalid_argument("convergence_order: dt must be positive");
    const int n = static_cast<int>(std::llround((problem.t1 - problem.t0) / dt));
    Vec x = problem.x0;
    double t = problem.t0;
    for (int k = 0; k < n; ++k) {
      x = step(scheme, problem.rhs, x, t, dt).x_next;
      t += dt;
    }
    const Vec err = x - problem.exact(t);
    log_dt.push_back(std::log(dt));
    log_err.push_back(std::log(std::max(l2_norm(err), 1e-300)));
  }
  // least-squares slope
  const std::size_t n = log_dt.size();
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    sx += log_dt[i];
    sy += log_err[i];
    sxx += log_dt[i] * log_dt[i];
    sxy += log_dt[i] * log_err[i];
  }
  const double denom = n * sxx - sx * sx;
  if (std::abs(denom) < 1e-14)
    throw std::invalid_argument("convergence_order: degenerate dt list");
  return (n * sxy - sx * sy) / denom;
}

}  // namespace phsysid
