#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "phsysid/autodiff.hpp"
#include "phsysid/basis.hpp"
#include "phsysid/dynamics.hpp"
#include "phsysid/vec.hpp"

namespace phsysid {

/// Scalar symbolic force: a candidate-term library over selected inputs
/// (state components, or time when the force is assumed t-only), whose value
/// is added to each of the listed output components.
struct SymbolicForce {
  BasisLibrary lib;
  std::vector<int> inputs;          // state component index, or -1 for t
  std::vector<int> out_components;  // rhs components receiving the value
};

/// Dense ReLU network force; output k is added to out_components[k].
struct MlpForce {
  std::vector<int> layer_sizes;  // {d_in, hidden..., d_out}
  std::vector<int> out_components;

  int n_params() const { return ad::mlp_param_count(layer_sizes); }
};

enum class ForceKind { none, symbolic, mlp };

/// Trainable pseudo-Hamiltonian right-hand side
///   g(x, t) = (S - diag(r)) grad H(x) + F(x, t)
/// with fixed antisymmetric S, a coefficient library for H, damping entries
/// restricted to a fixed support, and an optional symbolic or MLP force.
/// All trainable values live in one flat parameter vector:
/// [H coefficients | damping entries | force parameters].
struct PseudoHamiltonianModel {
  int dim = 0;
  Mat S;
  BasisLibrary h_lib;
  std::vector<int> damping_components;
  ForceKind force_kind = ForceKind::none;
  SymbolicForce sym_force;
  MlpForce mlp_force;

  std::vector<double> params;
  std::vector<std::uint8_t> pruned;    // 1 = masked, value frozen at exactly 0
  std::vector<std::uint8_t> prunable;  // 1 = subject to the pruning rule

  int h_offset() const { return 0; }
  int n_h() const { return h_lib.total_params(); }
  int damping_offset() const { return n_h(); }
  int n_damping() const { return static_cast<int>(damping_components.size()); }
  int force_offset() const { return n_h() + n_damping(); }
  int n_force() const;
  int n_params() const { return force_offset() + n_force(); }

  /// Trainable damping entry for a state component (0 outside the support).
  double r_hat(int component) const;
  /// Learned H coefficient for an exponent vector (0 if not in the library).
  double h_coefficient(const std::vector<int>& exponents) const;
};

PseudoHamiltonianModel make_phsi_model(const Mat& S, BasisLibrary h_lib,
                                       std::vector<int> damping_components);
void attach_symbolic_force(PseudoHamiltonianModel& m, SymbolicForce force);
void attach_mlp_force(PseudoHamiltonianModel& m, std::vector<int> hidden,
                      std::vector<int> out_components, std::uint64_t seed);

/// Sets every parameter to its training initialization: monomial
/// coefficients and damping entries 0.2, trig amplitude and frequency 1.
/// MLP weights are re-drawn from U(+-1/sqrt(fan_in)) with the given seed.
void initialize_parameters(PseudoHamiltonianModel& m, std::uint64_t mlp_seed);

Vec mlp_forward(const MlpForce& net, std::span<const double> weights, const Vec& x);

Vec phsi_rhs(const PseudoHamiltonianModel& m, const Vec& x, double t);

/// Copy of the model with the external force removed; the remaining internal
/// dynamics describe the system as if unforced.
PseudoHamiltonianModel remove_external_force(const PseudoHamiltonianModel& m);

/// Direct sparse model of g(x, t): one coefficient row per component over a
/// shared library. When `time_augmented`, the library input is (x, t) and
/// the simulated state carries t as an extra coordinate with dt/dt = 1.
struct BaselineModel {
  int n_state = 0;
  bool time_augmented = false;
  BasisLibrary lib;
  std::vector<double> params;  // n_state rows of lib.total_params() slots
  std::vector<std::uint8_t> pruned, prunable;

  int row_params() const { return lib.total_params(); }
  int n_params() const { return n_state * row_params(); }
};

BaselineModel make_bsi_model(int n_state, BasisLibrary lib);

/// Full-state rhs; for time-augmented models x has n_state+1 entries and the
/// returned vector's last component is identically 1.
Vec baseline_rhs(const BaselineModel& m, const Vec& x, double t);

/// Sequential thresholded least squares on finite-difference derivative
/// estimates (central differences, one-sided at trajectory endpoints). The
/// library must be purely polynomial; an input dimension of d+1 marks a
/// time-augmented fit.
BaselineModel sindy_fit(const Dataset& data, const BasisLibrary& lib, double threshold,
                        int sweeps);

struct ReportRow {
  std::string section;  // "H", "R", "F"
  std::string term;
  double learned = 0.0;
};

struct EquationReport {
  std::vector<ReportRow> rows;
};

/// Human-readable learned equation terms; exact zeros (pruned or otherwise)
/// are omitted. Ordering follows the library / component order.
EquationReport extract_equations(const PseudoHamiltonianModel& m);
EquationReport extract_equations(const BaselineModel& m);

// ---- generic evaluation (shared by the double path and the tape path) ----

namespace detail {

template <class S>
std::vector<S> mlp_eval(const MlpForce& net, std::span<const S> theta, int offset,
                        const std::vector<S>& x);

template <>
inline std::vector<double> mlp_eval<double>(const MlpForce& net,
                                            std::span<const double> theta, int offset,
                                            const std::vector<double>& x) {
  return mlp_forward(net, theta.subspan(offset, net.n_params()), x);
}

template <>
inline std::vector<ad::Var> mlp_eval<ad::Var>(const MlpForce& net,
                                              std::span<const ad::Var> theta, int offset,
                                              const std::vector<ad::Var>& x) {
  (void)theta;
  return x[0].tape->mlp(net.layer_sizes, offset, x);
}

}  // namespace detail

template <class S>
std::vector<S> phsi_rhs_t(const PseudoHamiltonianModel& m, std::span<const S> theta,
                          const std::vector<S>& x, double t,
                          std::vector<S>* mlp_out_collector = nullptr) {
  if (static_cast<int>(x.size()) != m.dim)
    throw std::invalid_argument("phsi_rhs: state dimension mismatch");
  if (static_cast<int>(theta.size()) != m.n_params())
    throw std::invalid_argument("phsi_rhs: parameter count mismatch");
  using std::sin;
  const std::vector<S> gh = library_gradient_t<S>(
      m.h_lib, theta.subspan(m.h_offset(), m.n_h()), x, t);

  std::vector<S> y(m.dim);
  for (int i = 0; i < m.dim; ++i) {
    S acc = x[0] * 0.0;
    for (int j = 0; j < m.dim; ++j) {
      const double s_ij = m.S[i][j];
      if (s_ij != 0.0) acc = acc + gh[j] * s_ij;
    }
    y[i] = acc;
  }
  for (int k = 0; k < m.n_damping(); ++k) {
    const int c = m.damping_components[k];
    y[c] = y[c] - theta[m.damping_offset() + k] * gh[c];
  }

  if (m.force_kind == ForceKind::symbolic) {
    std::vector<S> u;
    u.reserve(m.sym_force.inputs.size());
    for (int idx : m.sym_force.inputs)
      u.push_back(idx < 0 ? make_scalar(t, x[0]) : x[idx]);
    const S val = library_value_t<S>(
        m.sym_force.lib, theta.subspan(m.force_offset(), m.n_force()), u, t);
    for (int c : m.sym_force.out_components) y[c] = y[c] + val;
  } else if (m.force_kind == ForceKind::mlp) {
    std::vector<S> out = detail::mlp_eval<S>(m.mlp_force, theta, m.force_offset(), x);
    for (std::size_t k = 0; k < out.size(); ++k) {
      const int c = m.mlp_force.out_components[k];
      y[c] = y[c] + out[k];
    }
    if (mlp_out_collector && mlp_out_collector->empty()) *mlp_out_collector = std::move(out);
  }
  return y;
}

template <class S>
std::vector<S> baseline_rhs_t(const BaselineModel& m, std::span<const S> theta,
                              const std::vector<S>& x, double t) {
  const int d_in = m.lib.dimension;
  if (static_cast<int>(x.size()) != d_in)
    throw std::invalid_argument("baseline_rhs: state dimension mismatch");
  std::vector<S> y(d_in);
  const int row = m.row_params();
  for (int i = 0; i < m.n_state; ++i)
    y[i] = library_value_t<S>(m.lib, theta.subspan(i * row, row), x, t);
  if (m.time_augmented) y[d_in - 1] = make_scalar(1.0, x[0]);
  return y;
}

}  // namespace phsysid
