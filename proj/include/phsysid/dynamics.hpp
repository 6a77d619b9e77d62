#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "phsysid/vec.hpp"

namespace phsysid {

/// Uniformly sampled states of one simulated trajectory.
struct Trajectory {
  std::vector<double> times;
  std::vector<Vec> states;
  double dt = 0.0;

  std::size_t size() const { return times.size(); }
};

struct Dataset {
  std::vector<Trajectory> trajectories;
  double noise_sigma = 0.0;
  std::optional<std::vector<Trajectory>> clean_copy;
  std::uint64_t seed = 0;
  double dt = 0.0;
};

/// An ODE dx/dt = g(x, t), optionally equipped with its pseudo-Hamiltonian
/// decomposition (S - diag(r)) grad H + F and with ground-truth coefficient
/// tables used by experiment reports.
struct OdeSystem {
  std::string name;
  int dim = 0;
  std::function<Vec(const Vec&, double)> rhs;

  std::function<double(const Vec&)> hamiltonian;          // may be empty
  std::function<Vec(const Vec&)> hamiltonian_gradient;    // may be empty
  Mat structure;                                          // S, empty if none
  Vec damping_truth;                                      // diagonal of R, empty if none
  std::function<Vec(const Vec&, double)> force_truth;     // may be empty

  bool separable = false;  // H = T(p) + V(q) with canonical S
  int n_pairs = 0;         // (q, p) pairs when canonical

  std::vector<std::pair<std::vector<int>, double>> truth_h_terms;
  std::map<std::string, double> truth_force_params;  // e.g. alpha / omega
  std::vector<std::string> var_names;
};

using SystemParams = std::map<std::string, std::vector<double>>;

/// Builds one of the benchmark systems: henon_heiles, nls, mass_spring,
/// tanks. `params` overrides the published constants (see each builder for
/// the recognized keys).
OdeSystem make_benchmark(const std::string& name, const SystemParams& params = {});

Vec eval_rhs(const OdeSystem& system, const Vec& x, double t);

/// Standard deviation of the endpoint average (x^n + x^{n+1})/2 when both
/// points carry independent Gaussian noise of std sigma.
double two_point_noise_std(double sigma);

/// Simulates `n_traj` trajectories with uniformly drawn initial states and
/// adds i.i.d. Gaussian observation noise of std `sigma` to every stored
/// component. The noise-free trajectories are retained as `clean_copy`.
/// Deterministic for a given seed; trajectory i uses the child seed
/// derive(seed, i), so the result does not depend on generation order.
Dataset generate_dataset(const OdeSystem& system, int n_traj, double t_end, double dt,
                         double init_low, double init_high, double sigma,
                         std::uint64_t seed);

/// The 2n x 2n canonical structure matrix [[0, I], [-I, 0]].
Mat canonical_structure(int n_pairs);

}  // namespace phsysid
