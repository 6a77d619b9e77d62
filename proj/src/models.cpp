#include "phsysid/models.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>

#include "phsysid/rng.hpp"

namespace phsysid {

namespace {

void check_antisymmetric(const Mat& S) {
  for (std::size_t i = 0; i < S.size(); ++i)
    for (std::size_t j = 0; j < S.size(); ++j)
      if (S[i][j] != -S[j][i])
        throw std::invalid_argument("structure matrix must be antisymmetric");
}

/// Solves (G + ridge I) x = b in place via Cholesky; returns false if a
/// pivot is not positive.
bool cholesky_solve(Mat g, Vec b, double ridge, Vec& x) {
  const int n = static_cast<int>(b.size());
  for (int i = 0; i < n; ++i) g[i][i] += ridge;
  for (int j = 0; j < n; ++j) {
    double d = g[j][j];
    for (int k = 0; k < j; ++k) d -= g[j][k] * g[j][k];
    if (d <= 0.0) return false;
    g[j][j] = std::sqrt(d);
    for (int i = j + 1; i < n; ++i) {
      double s = g[i][j];
      for (int k = 0; k < j; ++k) s -= g[i][k] * g[j][k];
      g[i][j] = s / g[j][j];
    }
  }
  for (int i = 0; i < n; ++i) {
    double s = b[i];
    for (int k = 0; k < i; ++k) s -= g[i][k] * b[k];
    b[i] = s / g[i][i];
  }
  x.assign(n, 0.0);
  for (int i = n - 1; i >= 0; --i) {
    double s = b[i];
    for (int k = i + 1; k < n; ++k) s -= g[k][i] * x[k];
    x[i] = s / g[i][i];
  }
  return true;
}

void init_library_slots(const BasisLibrary& lib, double* params, std::uint8_t* prunable) {
  for (int i = 0; i < lib.n_terms(); ++i) {
    const int off = lib.param_offsets[i];
    if (lib.terms[i].kind == TermKind::monomial) {
      params[off] = 0.2;
      prunable[off] = 1;
    } else {
      params[off] = 1.0;  // amplitude
      params[off + 1] = lib.terms[i].init_frequency;
      prunable[off] = 1;
      prunable[off + 1] = 0;  // frequency is not a term coefficient
    }
  }
}

}  // namespace

int PseudoHamiltonianModel::n_force() const {
  switch (force_kind) {
    case ForceKind::none: return 0;
    case ForceKind::symbolic: return sym_force.lib.total_params();
    case ForceKind::mlp: return mlp_force.n_params();
  }
  return 0;
}

double PseudoHamiltonianModel::r_hat(int component) const {
  for (int k = 0; k < n_damping(); ++k)
    if (damping_components[k] == component) return params[damping_offset() + k];
  return 0.0;
}

double PseudoHamiltonianModel::h_coefficient(const std::vector<int>& exponents) const {
  for (int i = 0; i < h_lib.n_terms(); ++i) {
    const Term& t = h_lib.terms[i];
    if (t.kind == TermKind::monomial && t.exponents == exponents)
      return params[h_offset() + h_lib.param_offsets[i]];
  }
  return 0.0;
}

PseudoHamiltonianModel make_phsi_model(const Mat& S, BasisLibrary h_lib,
                                       std::vector<int> damping_components) {
  check_antisymmetric(S);
  PseudoHamiltonianModel m;
  m.dim = static_cast<int>(S.size());
  m.S = S;
  if (h_lib.dimension != m.dim)
    throw std::invalid_argument("make_phsi_model: H library dimension mismatch");
  m.h_lib = std::move(h_lib);
  m.damping_components = std::move(damping_components);
  for (int c : m.damping_components)
    if (c < 0 || c >= m.dim)
      throw std::invalid_argument("make_phsi_model: damping component out of range");
  initialize_parameters(m, 0);
  return m;
}

void attach_symbolic_force(PseudoHamiltonianModel& m, SymbolicForce force) {
  if (static_cast<int>(force.inputs.size()) != force.lib.dimension)
    throw std::invalid_argument("attach_symbolic_force: inputs/library mismatch");
  for (int c : force.out_components)
    if (c < 0 || c >= m.dim)
      throw std::invalid_argument("attach_symbolic_force: component out of range");
  m.force_kind = ForceKind::symbolic;
  m.sym_force = std::move(force);
  initialize_parameters(m, 0);
}

void attach_mlp_force(PseudoHamiltonianModel& m, std::vector<int> hidden,
                      std::vector<int> out_components, std::uint64_t seed) {
  MlpForce net;
  net.layer_sizes.push_back(m.dim);
  for (int h : hidden) net.layer_sizes.push_back(h);
  net.layer_sizes.push_back(static_cast<int>(out_components.size()));
  net.out_components = std::move(out_components);
  for (int c : net.out_components)
    if (c < 0 || c >= m.dim)
      throw std::invalid_argument("attach_mlp_force: component out of range");
  m.force_kind = ForceKind::mlp;
  m.mlp_force = std::move(net);
  initialize_parameters(m, seed);
}

void initialize_parameters(PseudoHamiltonianModel& m, std::uint64_t mlp_seed) {
  m.params.assign(m.n_params(), 0.0);
  m.pruned.assign(m.n_params(), 0);
  m.prunable.assign(m.n_params(), 0);
  init_library_slots(m.h_lib, m.params.data() + m.h_offset(),
                     m.prunable.data() + m.h_offset());
  for (int k = 0; k < m.n_damping(); ++k) m.params[m.damping_offset() + k] = 0.2;
  if (m.force_kind == ForceKind::symbolic) {
    init_library_slots(m.sym_force.lib, m.params.data() + m.force_offset(),
                       m.prunable.data() + m.force_offset());
  } else if (m.force_kind == ForceKind::mlp) {
    Rng rng(Rng::derive(mlp_seed, 0x6d6c70));
    const auto& layers = m.mlp_force.layer_sizes;
    int ofs = m.force_offset();
    for (std::size_t l = 1; l < layers.size(); ++l) {
      const double bound = 1.0 / std::sqrt(static_cast<double>(layers[l - 1]));
      const int count = layers[l] * (layers[l - 1] + 1);
      for (int k = 0; k < count; ++k) m.params[ofs + k] = rng.uniform(-bound, bound);
      ofs += count;
    }
  }
}

Vec mlp_forward(const MlpForce& net, std::span<const double> weights, const Vec& x) {
  const auto& layers = net.layer_sizes;
  if (static_cast<int>(x.size()) != layers.front())
    throw std::invalid_argument("mlp_forward: input size mismatch");
  Vec a = x, z;
  int ofs = 0;
  for (std::size_t l = 1; l < layers.size(); ++l) {
    const int n_in = layers[l - 1], n_out = layers[l];
    const bool last = (l + 1 == layers.size());
    z.assign(n_out, 0.0);
    const double* wl = weights.data() + ofs;
    const double* bl = wl + n_out * n_in;
    for (int i = 0; i < n_out; ++i) {
      double acc = bl[i];
      const double* row = wl + i * n_in;
      for (int j = 0; j < n_in; ++j) acc += row[j] * a[j];
      z[i] = last ? acc : relu(acc);
    }
    a.swap(z);
    ofs += n_out * (n_in + 1);
  }
  return a;
}

Vec phsi_rhs(const PseudoHamiltonianModel& m, const Vec& x, double t) {
  return phsi_rhs_t<double>(m, std::span<const double>(m.params), x, t);
}

PseudoHamiltonianModel remove_external_force(const PseudoHamiltonianModel& m) {
  PseudoHamiltonianModel out = m;
  if (out.force_kind == ForceKind::none) return out;
  // Drop the force parameters entirely so the layout stays consistent.
  out.params.resize(out.force_offset());
  out.pruned.resize(out.force_offset());
  out.prunable.resize(out.force_offset());
  out.force_kind = ForceKind::none;
  out.sym_force = SymbolicForce{};
  out.mlp_force = MlpForce{};
  return out;
}

BaselineModel make_bsi_model(int n_state, BasisLibrary lib) {
  BaselineModel m;
  m.n_state = n_state;
  m.lib = std::move(lib);
  if (m.lib.dimension != n_state && m.lib.dimension != n_state + 1)
    throw std::invalid_argument("make_bsi_model: library dimension mismatch");
  m.time_augmented = (m.lib.dimension == n_state + 1);
  m.params.assign(m.n_params(), 0.0);
  m.pruned.assign(m.n_params(), 0);
  m.prunable.assign(m.n_params(), 0);
  for (int i = 0; i < n_state; ++i)
    init_library_slots(m.lib, m.params.data() + i * m.row_params(),
                       m.prunable.data() + i * m.row_params());
  return m;
}

Vec baseline_rhs(const BaselineModel& m, const Vec& x, double t) {
  return baseline_rhs_t<double>(m, std::span<const double>(m.params), x, t);
}

BaselineModel sindy_fit(const Dataset& data, const BasisLibrary& lib, double threshold,
                        int sweeps) {
  for (const Term& t : lib.terms)
    if (t.kind != TermKind::monomial)
      throw std::invalid_argument("sindy_fit: library must be purely polynomial");
  if (data.trajectories.empty() || data.trajectories.front().size() < 2)
    throw std::invalid_argument("sindy_fit: need at least 2 points per trajectory");

  const int d = static_cast<int>(data.trajectories.front().states.front().size());
  const bool augmented = (lib.dimension == d + 1);
  if (!augmented && lib.dimension != d)
    throw std::invalid_argument("sindy_fit: library dimension mismatch");

  const int p = lib.total_params();
  std::vector<Vec> rows;     // library term values per sample
  std::vector<Vec> targets;  // finite-difference derivative per sample
  for (const Trajectory& traj : data.trajectories) {
    const std::size_t n = traj.size();
    if (n < 2) throw std::invalid_argument("sindy_fit: need at least 2 points per trajectory");
    for (std::size_t k = 0; k < n; ++k) {
      Vec u = traj.states[k];
      if (augmented) u.push_back(traj.times[k]);
      Vec row(p);
      for (int j = 0; j < lib.n_terms(); ++j) {
        double v = 1.0;
        for (int c = 0; c < lib.dimension; ++c) v *= powi(u[c], lib.terms[j].exponents[c]);
        row[lib.param_offsets[j]] = v;
      }
      rows.push_back(std::move(row));
      Vec dx(d);
      for (int c = 0; c < d; ++c) {
        if (k == 0)
          dx[c] = (traj.states[1][c] - traj.states[0][c]) / traj.dt;
        else if (k == n - 1)
          dx[c] = (traj.states[n - 1][c] - traj.states[n - 2][c]) / traj.dt;
        else
          dx[c] = (traj.states[k + 1][c] - traj.states[k - 1][c]) / (2.0 * traj.dt);
      }
      targets.push_back(std::move(dx));
    }
  }

  BaselineModel model = make_bsi_model(d, lib);
  std::fill(model.params.begin(), model.params.end(), 0.0);

  // Normal equations, shared across components.
  Mat gram(p, Vec(p, 0.0));
  for (const Vec& r : rows)
    for (int i = 0; i < p; ++i)
      for (int j = i; j < p; ++j) gram[i][j] += r[i] * r[j];
  for (int i = 0; i < p; ++i)
    for (int j = 0; j < i; ++j) gram[i][j] = gram[j][i];

  for (int comp = 0; comp < d; ++comp) {
    Vec rhs(p, 0.0);
    for (std::size_t s = 0; s < rows.size(); ++s)
      for (int i = 0; i < p; ++i) rhs[i] += rows[s][i] * targets[s][comp];

    std::vector<int> active(p);
    for (int i = 0; i < p; ++i) active[i] = i;
    Vec coef(p, 0.0);
    for (int sweep = 0; sweep < sweeps && !active.empty(); ++sweep) {
      const int na = static_cast<int>(active.size());
      Mat g(na, Vec(na));
      Vec b(na);
      for (int i = 0; i < na; ++i) {
        b[i] = rhs[active[i]];
        for (int j = 0; j < na; ++j) g[i][j] = gram[active[i]][active[j]];
      }
      Vec sol;
      if (!cholesky_solve(g, b, 0.0, sol)) {
        std::cerr << "sindy_fit: rank-deficient regression, adding ridge 1e-10\n";
        if (!cholesky_solve(g, b, 1e-10, sol))
          throw std::runtime_error("sindy_fit: regression failed even with ridge");
      }
      coef.assign(p, 0.0);
      std::vector<int> keep;
      for (int i = 0; i < na; ++i) {
        if (std::abs(sol[i]) >= threshold) {
          coef[active[i]] = sol[i];
          keep.push_back(active[i]);
        }
      }
      const bool changed = keep.size() != active.size();
      active.swap(keep);
      if (!changed) break;
    }
    for (int i = 0; i < p; ++i) model.params[comp * p + i] = coef[i];
  }
  return model;
}

namespace {

void library_rows(const BasisLibrary& lib, const double* params, const std::string& section,
                  std::vector<ReportRow>& rows) {
  for (int i = 0; i < lib.n_terms(); ++i) {
    const int off = lib.param_offsets[i];
    if (params[off] == 0.0) continue;  // pruned or exactly zero: omitted
    rows.push_back(ReportRow{
        section,
        term_to_string(lib, i, std::span<const double>(params + off, lib.terms[i].n_params())),
        params[off]});
  }
}

}  // namespace

EquationReport extract_equations(const PseudoHamiltonianModel& m) {
  EquationReport rep;
  library_rows(m.h_lib, m.params.data() + m.h_offset(), "H", rep.rows);
  for (int k = 0; k < m.n_damping(); ++k) {
    const double v = m.params[m.damping_offset() + k];
    if (v == 0.0) continue;
    rep.rows.push_back(
        ReportRow{"R", "r[" + std::to_string(m.damping_components[k] + 1) + "]", v});
  }
  if (m.force_kind == ForceKind::symbolic)
    library_rows(m.sym_force.lib, m.params.data() + m.force_offset(), "F", rep.rows);
  return rep;
}

EquationReport extract_equations(const BaselineModel& m) {
  EquationReport rep;
  for (int c = 0; c < m.n_state; ++c)
    library_rows(m.lib, m.params.data() + c * m.row_params(),
                 "g[" + std::to_string(c + 1) + "]", rep.rows);
  return rep;
}

}  // namespace phsysid
