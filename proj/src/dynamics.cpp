#include "phsysid/dynamics.hpp"

#include <cmath>
#include <stdexcept>

#include "phsysid/integrators.hpp"
#include "phsysid/rng.hpp"

namespace phsysid {

namespace {

double scalar_param(const SystemParams& params, const std::string& key, double fallback) {
  auto it = params.find(key);
  if (it == params.end()) return fallback;
  if (it->second.size() != 1)
    throw std::invalid_argument("make_benchmark: parameter '" + key + "' must be scalar");
  return it->second[0];
}

Vec vector_param(const SystemParams& params, const std::string& key, const Vec& fallback,
                 std::size_t required_size) {
  auto it = params.find(key);
  Vec v = it == params.end() ? fallback : it->second;
  if (v.size() != required_size)
    throw std::invalid_argument("make_benchmark: parameter '" + key + "' must have length " +
                                std::to_string(required_size));
  return v;
}

OdeSystem make_henon_heiles() {
  OdeSystem sys;
  sys.name = "henon_heiles";
  sys.dim = 4;
  sys.separable = true;
  sys.n_pairs = 2;
  sys.structure = canonical_structure(2);
  sys.var_names = {"q1", "q2", "p1", "p2"};
  sys.hamiltonian = [](const Vec& x) {
    const double q1 = x[0], q2 = x[1], p1 = x[2], p2 = x[3];
    return 0.5 * (q1 * q1 + q2 * q2 + p1 * p1 + p2 * p2) + q1 * q1 * q2 -
           q2 * q2 * q2 / 3.0;
  };
  sys.hamiltonian_gradient = [](const Vec& x) {
    const double q1 = x[0], q2 = x[1], p1 = x[2], p2 = x[3];
    return Vec{q1 + 2.0 * q1 * q2, q2 + q1 * q1 - q2 * q2, p1, p2};
  };
  sys.rhs = [](const Vec& x, double) {
    const double q1 = x[0], q2 = x[1], p1 = x[2], p2 = x[3];
    return Vec{p1, p2, -q1 - 2.0 * q1 * q2, -q2 - q1 * q1 + q2 * q2};
  };
  sys.damping_truth = Vec(4, 0.0);
  sys.force_truth = [](const Vec&, double) { return Vec(4, 0.0); };
  sys.truth_h_terms = {
      {{2, 0, 0, 0}, 0.5}, {{0, 2, 0, 0}, 0.5}, {{0, 0, 2, 0}, 0.5},
      {{0, 0, 0, 2}, 0.5}, {{2, 1, 0, 0}, 1.0}, {{0, 3, 0, 0}, -1.0 / 3.0},
  };
  return sys;
}

OdeSystem make_nls() {
  OdeSystem sys;
  sys.name = "nls";
  sys.dim = 4;
  sys.separable = false;
  sys.n_pairs = 2;
  sys.structure = canonical_structure(2);
  sys.var_names = {"q1", "q2", "p1", "p2"};
  sys.hamiltonian = [](const Vec& x) {
    const double q1 = x[0], q2 = x[1], p1 = x[2], p2 = x[3];
    const double a = q1 * q1 + p1 * p1, b = q2 * q2 + p2 * p2;
    return 0.25 * a * a + 0.25 * b * b - q1 * q1 * q2 * q2 - p1 * p1 * p2 * p2 +
           q1 * q1 * p2 * p2 + q2 * q2 * p1 * p1 - 4.0 * q1 * q2 * p1 * p2;
  };
  sys.hamiltonian_gradient = [](const Vec& x) {
    const double q1 = x[0], q2 = x[1], p1 = x[2], p2 = x[3];
    return Vec{
        q1 * (q1 * q1 + p1 * p1) - 2.0 * q1 * q2 * q2 + 2.0 * q1 * p2 * p2 -
            4.0 * q2 * p1 * p2,
        q2 * (q2 * q2 + p2 * p2) - 2.0 * q1 * q1 * q2 + 2.0 * q2 * p1 * p1 -
            4.0 * q1 * p1 * p2,
        p1 * (q1 * q1 + p1 * p1) - 2.0 * p1 * p2 * p2 + 2.0 * q2 * q2 * p1 -
            4.0 * q1 * q2 * p2,
        p2 * (q2 * q2 + p2 * p2) - 2.0 * p1 * p1 * p2 + 2.0 * q1 * q1 * p2 -
            4.0 * q1 * q2 * p1,
    };
  };
  sys.rhs = [grad = sys.hamiltonian_gradient](const Vec& x, double) {
    const Vec g = grad(x);
    return Vec{g[2], g[3], -g[0], -g[1]};
  };
  sys.damping_truth = Vec(4, 0.0);
  sys.force_truth = [](const Vec&, double) { return Vec(4, 0.0); };
  sys.truth_h_terms = {
      {{4, 0, 0, 0}, 0.25}, {{2, 0, 2, 0}, 0.5},  {{0, 0, 4, 0}, 0.25},
      {{0, 4, 0, 0}, 0.25}, {{0, 2, 0, 2}, 0.5},  {{0, 0, 0, 4}, 0.25},
      {{2, 2, 0, 0}, -1.0}, {{0, 0, 2, 2}, -1.0}, {{2, 0, 0, 2}, 1.0},
      {{0, 2, 2, 0}, 1.0},  {{1, 1, 1, 1}, -4.0},
  };
  return sys;
}

OdeSystem make_mass_spring(const SystemParams& params) {
  const double k = scalar_param(params, "k", 1.0);
  const double m = scalar_param(params, "m", 1.0);
  const double alpha = scalar_param(params, "alpha", 2.0);
  const double omega = scalar_param(params, "omega", 0.5);
  const double c = scalar_param(params, "c", 0.3);

  OdeSystem sys;
  sys.name = "mass_spring";
  sys.dim = 2;
  sys.separable = true;
  sys.n_pairs = 1;
  sys.structure = canonical_structure(1);
  sys.var_names = {"q", "p"};
  sys.hamiltonian = [k, m](const Vec& x) {
    return 0.5 * k * x[0] * x[0] + 0.5 / m * x[1] * x[1];
  };
  sys.hamiltonian_gradient = [k, m](const Vec& x) { return Vec{k * x[0], x[1] / m}; };
  sys.rhs = [k, m, alpha, omega, c](const Vec& x, double t) {
    return Vec{x[1] / m, -k * x[0] - c * x[1] / m + alpha * std::sin(omega * t)};
  };
  sys.damping_truth = Vec{0.0, c};
  sys.force_truth = [alpha, omega](const Vec&, double t) {
    return Vec{0.0, alpha * std::sin(omega * t)};
  };
  sys.truth_h_terms = {{{2, 0}, 0.5 * k}, {{0, 2}, 0.5 / m}};
  sys.truth_force_params = {{"alpha", alpha}, {"omega", omega}};
  return sys;
}

OdeSystem make_tanks(const SystemParams& params) {
  constexpr int kPipes = 5, kTanks = 4;
  const double rho = scalar_param(params, "rho", 1.0);
  const double J = scalar_param(params, "J", 0.02);
  const double grav = scalar_param(params, "g", 9.81);
  const Vec A = vector_param(params, "A", Vec(kTanks, 1.0), kTanks);
  const Vec r_p = vector_param(params, "r_p",
                               Vec{0.03, 0.03, 0.09, 0.05, 0.05}, kPipes);
  // 0 = clamp reading (leak follows the level, saturating at 0.3),
  // 1 = the expression exactly as printed (constant -3).
  const bool literal_leak = scalar_param(params, "leak_literal", 0.0) != 0.0;

  // Incidence: pipes 1-4 form the cycle tank1->2->3->4->1, pipe 5 tank1->3.
  // +1 at the source tank, -1 at the destination. Overridable row-major.
  Vec b_default = {1, -1, 0, 0,  0, 1, -1, 0,  0, 0, 1, -1,  -1, 0, 0, 1,  1, 0, -1, 0};
  const Vec b_flat = vector_param(params, "B", b_default, kPipes * kTanks);
  Mat B(kPipes, Vec(kTanks));
  for (int i = 0; i < kPipes; ++i)
    for (int j = 0; j < kTanks; ++j) B[i][j] = b_flat[i * kTanks + j];

  OdeSystem sys;
  sys.name = "tanks";
  sys.dim = kPipes + kTanks;
  sys.structure = Mat(sys.dim, Vec(sys.dim, 0.0));
  for (int i = 0; i < kPipes; ++i)
    for (int j = 0; j < kTanks; ++j) {
      sys.structure[i][kPipes + j] = B[i][j];
      sys.structure[kPipes + j][i] = -B[i][j];
    }
  sys.var_names.resize(sys.dim);
  for (int i = 0; i < sys.dim; ++i) sys.var_names[i] = "x" + std::to_string(i + 1);

  sys.hamiltonian = [J, grav, rho, A](const Vec& x) {
    double h = 0.0;
    for (int i = 0; i < kPipes; ++i) h += x[i] * x[i] / (2.0 * J);
    for (int j = 0; j < kTanks; ++j)
      h += grav * rho / (2.0 * A[j]) * x[kPipes + j] * x[kPipes + j];
    return h;
  };
  sys.hamiltonian_gradient = [J, grav, rho, A](const Vec& x) {
    Vec g(kPipes + kTanks);
    for (int i = 0; i < kPipes; ++i) g[i] = x[i] / J;
    for (int j = 0; j < kTanks; ++j) g[kPipes + j] = grav * rho / A[j] * x[kPipes + j];
    return g;
  };
  auto leak = [literal_leak](double mu4) {
    return literal_leak ? -10.0 * std::min(0.3, std::max(mu4, 0.3))
                        : -10.0 * std::min(0.3, std::max(mu4, 0.0));
  };
  sys.force_truth = [leak](const Vec& x, double) {
    Vec f(kPipes + kTanks, 0.0);
    f[kPipes + kTanks - 1] = leak(x[kPipes + kTanks - 1]);
    return f;
  };
  sys.damping_truth = Vec(sys.dim, 0.0);
  for (int i = 0; i < kPipes; ++i) sys.damping_truth[i] = r_p[i];
  sys.rhs = [B, J, grav, rho, A, r_p, leak](const Vec& x, double) {
    Vec dx(kPipes + kTanks, 0.0);
    for (int i = 0; i < kPipes; ++i) {
      double acc = -r_p[i] * x[i] / J;
      for (int j = 0; j < kTanks; ++j)
        acc += B[i][j] * grav * rho / A[j] * x[kPipes + j];
      dx[i] = acc;
    }
    for (int j = 0; j < kTanks; ++j) {
      double acc = 0.0;
      for (int i = 0; i < kPipes; ++i) acc -= B[i][j] * x[i] / J;
      dx[kPipes + j] = acc;
    }
    dx[kPipes + kTanks - 1] += leak(x[kPipes + kTanks - 1]);
    return dx;
  };
  for (int i = 0; i < kPipes; ++i) {
    std::vector<int> e(sys.dim, 0);
    e[i] = 2;
    sys.truth_h_terms.emplace_back(e, 1.0 / (2.0 * J));
  }
  for (int j = 0; j < kTanks; ++j) {
    std::vector<int> e(sys.dim, 0);
    e[kPipes + j] = 2;
    sys.truth_h_terms.emplace_back(e, grav * rho / (2.0 * A[j]));
  }
  return sys;
}

}  // namespace

Mat canonical_structure(int n_pairs) {
  const int d = 2 * n_pairs;
  Mat s(d, Vec(d, 0.0));
  for (int i = 0; i < n_pairs; ++i) {
    s[i][n_pairs + i] = 1.0;
    s[n_pairs + i][i] = -1.0;
  }
  return s;
}

OdeSystem make_benchmark(const std::string& name, const SystemParams& params) {
  if (name == "henon_heiles") return make_henon_heiles();
  if (name == "nls") return make_nls();
  if (name == "mass_spring") return make_mass_spring(params);
  if (name == "tanks") return make_tanks(params);
  throw std::invalid_argument("make_benchmark: unknown system '" + name + "'");
}

Vec eval_rhs(const OdeSystem& system, const Vec& x, double t) {
  if (static_cast<int>(x.size()) != system.dim)
    throw std::invalid_argument("eval_rhs: state dimension mismatch");
  return system.rhs(x, t);
}

double two_point_noise_std(double sigma) {
  if (sigma < 0.0) throw std::invalid_argument("two_point_noise_std: sigma must be >= 0");
  return sigma / std::sqrt(2.0);
}

Dataset generate_dataset(const OdeSystem& system, int n_traj, double t_end, double dt,
                         double init_low, double init_high, double sigma,
                         std::uint64_t seed) {
  if (dt <= 0.0) throw std::invalid_argument("generate_dataset: dt must be positive");
  if (n_traj < 1) throw std::invalid_argument("generate_dataset: n_traj must be >= 1");
  if (!(init_low < init_high))
    throw std::invalid_argument("generate_dataset: init_low must be < init_high");
  if (sigma < 0.0) throw std::invalid_argument("generate_dataset: sigma must be >= 0");

  Dataset ds;
  ds.noise_sigma = sigma;
  ds.seed = seed;
  ds.dt = dt;
  ds.clean_copy.emplace();
  ds.trajectories.reserve(n_traj);
  ds.clean_copy->reserve(n_traj);

  for (int k = 0; k < n_traj; ++k) {
    Rng rng(Rng::derive(seed, static_cast<std::uint64_t>(k)));
    Vec x0(system.dim);
    for (double& v : x0) v = rng.uniform(init_low, init_high);
    Trajectory clean;
    try {
      clean = reference_simulate(system, x0, t_end, dt);
    } catch (const std::exception& e) {
      throw std::runtime_error("generate_dataset: trajectory " + std::to_string(k) +
                               ": " + e.what());
    }
    Trajectory noisy = clean;
    if (sigma > 0.0) {
      for (auto& state : noisy.states)
        for (double& v : state) v += sigma * rng.gaussian();
    }
    ds.clean_copy->push_back(std::move(clean));
    ds.trajectories.push_back(std::move(noisy));
  }
  return ds;
}

}  // namespace phsysid
