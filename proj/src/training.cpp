#include "phsysid/training.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>

#include "phsysid/rng.hpp"

namespace phsysid {

void adam_step(AdamState& state, std::vector<double>& params,
               const std::vector<double>& grads, double lr, double weight_decay,
               const std::vector<std::uint8_t>* masked) {
  if (params.size() != grads.size())
    throw std::invalid_argument("adam_step: parameter/gradient size mismatch");
  if (state.m.empty()) {
    state.m.assign(params.size(), 0.0);
    state.v.assign(params.size(), 0.0);
  }
  ++state.step;
  const double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step));
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (masked && (*masked)[i]) continue;
    const double g = grads[i];
    state.m[i] = state.beta1 * state.m[i] + (1.0 - state.beta1) * g;
    state.v[i] = state.beta2 * state.v[i] + (1.0 - state.beta2) * g * g;
    const double mhat = state.m[i] / bc1;
    const double vhat = state.v[i] / bc2;
    params[i] -= lr * weight_decay * params[i];
    params[i] -= lr * mhat / (std::sqrt(vhat) + state.epsilon);
  }
}

void prune(std::vector<double>& params, std::vector<std::uint8_t>& masks,
           const std::vector<Vec>& history_ring, double eps, int p,
           const std::vector<std::uint8_t>& prunable, std::vector<int>* events) {
  if (static_cast<int>(history_ring.size()) < p) return;
  for (std::size_t s = 0; s < params.size(); ++s) {
    if (masks[s] || !prunable[s]) continue;
    bool below = true;
    for (int k = 0; k < p && below; ++k) {
      const Vec& snap = history_ring[history_ring.size() - 1 - k];
      below = std::abs(snap[s]) < eps;
    }
    if (below) {
      masks[s] = 1;
      params[s] = 0.0;
      if (events) events->push_back(static_cast<int>(s));
    }
  }
}

std::vector<int> epoch_permutation(std::uint64_t seed, int epoch, int n) {
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  Rng rng(Rng::derive(seed, 0x9d5f + static_cast<std::uint64_t>(epoch)));
  for (int i = n - 1; i > 0; --i) {
    const int j = static_cast<int>(rng.next_u64() % static_cast<std::uint64_t>(i + 1));
    std::swap(order[i], order[j]);
  }
  return order;
}

std::vector<SamplePair> make_pairs(const Dataset& data) {
  std::vector<SamplePair> pairs;
  for (const Trajectory& traj : data.trajectories) {
    for (std::size_t k = 0; k + 1 < traj.size(); ++k) {
      SamplePair s;
      s.xn = traj.states[k];
      s.xnp1 = traj.states[k + 1];
      s.tn = traj.times[k];
      pairs.push_back(std::move(s));
    }
  }
  return pairs;
}

namespace {

std::vector<std::uint8_t> slot_range_mask(int total, int begin, int count) {
  std::vector<std::uint8_t> m(total, 0);
  for (int i = begin; i < begin + count; ++i) m[i] = 1;
  return m;
}

bool is_canonical(const Mat& s) {
  const int d = static_cast<int>(s.size());
  if (d % 2 != 0) return false;
  const Mat c = canonical_structure(d / 2);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j)
      if (s[i][j] != c[i][j]) return false;
  return true;
}

}  // namespace

RhsSpec make_rhs_spec(const PseudoHamiltonianModel& m) {
  RhsSpec spec;
  spec.dim = m.dim;
  const int total = m.n_params();
  spec.reg_h = slot_range_mask(total, m.h_offset(), m.n_h());
  spec.reg_r = slot_range_mask(total, m.damping_offset(), m.n_damping());
  spec.reg_f.assign(total, 0);
  if (m.force_kind == ForceKind::symbolic) {
    // every force coefficient except trig frequencies
    const BasisLibrary& lib = m.sym_force.lib;
    for (int i = 0; i < lib.n_terms(); ++i)
      spec.reg_f[m.force_offset() + lib.param_offsets[i]] = 1;
  } else if (m.force_kind == ForceKind::mlp) {
    spec.mlp_force_l1 = true;
  }
  spec.rhs = [&m](const std::vector<ad::Var>& theta, const std::vector<ad::Var>& x,
                  double t, std::vector<ad::Var>* collector) {
    return phsi_rhs_t<ad::Var>(m, std::span<const ad::Var>(theta), x, t, collector);
  };
  if (is_canonical(m.S) && m.damping_components.empty() &&
      m.force_kind == ForceKind::none) {
    const int n = m.dim / 2;
    spec.yoshida = [&m, n](const std::vector<ad::Var>& theta, const std::vector<ad::Var>& x0,
                           double dt) {
      std::span<const ad::Var> h_coeffs(theta.data() + m.h_offset(),
                                        static_cast<std::size_t>(m.n_h()));
      std::vector<ad::Var> x = x0;
      auto kick = [&](double h) {
        const std::vector<ad::Var> gh = library_gradient_t<ad::Var>(m.h_lib, h_coeffs, x, 0.0);
        for (int i = 0; i < n; ++i) x[n + i] = x[n + i] - gh[i] * h;
      };
      auto drift = [&](double h) {
        const std::vector<ad::Var> gh = library_gradient_t<ad::Var>(m.h_lib, h_coeffs, x, 0.0);
        for (int i = 0; i < n; ++i) x[i] = x[i] + gh[n + i] * h;
      };
      const double w1 = 1.0 / (2.0 - std::cbrt(2.0));
      const double w0 = 1.0 - 2.0 * w1;
      for (double w : {w1, w0, w1}) {
        kick(0.5 * w * dt);
        drift(w * dt);
        kick(0.5 * w * dt);
      }
      return x;
    };
  }
  return spec;
}

RhsSpec make_rhs_spec(const BaselineModel& m) {
  RhsSpec spec;
  spec.dim = m.lib.dimension;
  const int total = m.n_params();
  // Direct models regularize the whole coefficient table through lambda_h;
  // trig frequencies excluded as elsewhere.
  spec.reg_h.assign(total, 0);
  for (int c = 0; c < m.n_state; ++c)
    for (int i = 0; i < m.lib.n_terms(); ++i)
      spec.reg_h[c * m.row_params() + m.lib.param_offsets[i]] = 1;
  spec.reg_f.assign(total, 0);
  spec.reg_r.assign(total, 0);
  spec.rhs = [&m](const std::vector<ad::Var>& theta, const std::vector<ad::Var>& x,
                  double t, std::vector<ad::Var>*) {
    return baseline_rhs_t<ad::Var>(m, std::span<const ad::Var>(theta), x, t);
  };
  return spec;
}

ad::Var loss_on_tape(ad::Tape& tape, const std::vector<ad::Var>& theta, const RhsSpec& spec,
                     std::span<const SamplePair> batch, double dt, SchemeName scheme,
                     double lambda_h, double lambda_f, double lambda_r, bool reg_active,
                     LossParts* parts) {
  if (batch.empty()) throw std::invalid_argument("loss: empty batch");
  const int d = spec.dim;
  ad::Var total = tape.constant(0.0);
  std::vector<std::vector<ad::Var>> collectors(batch.size());
  for (std::size_t s = 0; s < batch.size(); ++s) {
    const SamplePair& pair = batch[s];
    std::vector<ad::Var> xn(d), xnp1(d);
    for (int i = 0; i < d; ++i) {
      xn[i] = tape.state(pair.xn[i]);
      xnp1[i] = tape.state(pair.xnp1[i]);
    }
    std::vector<ad::Var>* collector = spec.mlp_force_l1 ? &collectors[s] : nullptr;
    std::vector<ad::Var> psi_v;
    if (scheme == SchemeName::prk4) {
      if (!spec.yoshida)
        throw std::invalid_argument("loss: prk4 requires a canonical separable model");
      const std::vector<ad::Var> xe = spec.yoshida(theta, xn, dt);
      psi_v.resize(d);
      for (int i = 0; i < d; ++i) psi_v[i] = (xe[i] - xn[i]) * (1.0 / dt);
    } else {
      auto g = [&](const std::vector<ad::Var>& x, double t) {
        return spec.rhs(theta, x, t, collector);
      };
      psi_v = psi_eval<ad::Var>(scheme, g, xn, xnp1, pair.tn, dt);
    }
    ad::Var sq = tape.constant(0.0);
    for (int i = 0; i < d; ++i) {
      const double target = (pair.xnp1[i] - pair.xn[i]) / dt;
      const ad::Var r = psi_v[i] * -1.0 + target;
      sq = sq + r * r;
    }
    total = total + sq;
  }
  ad::Var data_loss = total * (1.0 / static_cast<double>(batch.size()));
  if (parts) parts->data = data_loss.value();

  if (!reg_active || (lambda_h == 0.0 && lambda_f == 0.0 && lambda_r == 0.0)) {
    if (parts) parts->reg = 0.0;
    return data_loss;
  }
  ad::Var reg = tape.constant(0.0);
  auto add_l1 = [&](const std::vector<std::uint8_t>& mask, double lambda) {
    if (lambda == 0.0) return;
    ad::Var sum = tape.constant(0.0);
    for (std::size_t i = 0; i < theta.size(); ++i)
      if (i < mask.size() && mask[i]) sum = sum + ad::abs_v(theta[i]);
    reg = reg + sum * lambda;
  };
  add_l1(spec.reg_h, lambda_h);
  add_l1(spec.reg_r, lambda_r);
  if (spec.mlp_force_l1) {
    if (lambda_f != 0.0) {
      ad::Var sum = tape.constant(0.0);
      for (auto& outs : collectors)
        for (ad::Var v : outs) sum = sum + ad::abs_v(v);
      reg = reg + sum * (lambda_f / static_cast<double>(batch.size()));
    }
  } else {
    add_l1(spec.reg_f, lambda_f);
  }
  if (parts) parts->reg = reg.value();
  return data_loss + reg;
}

double loss_value(const PseudoHamiltonianModel& m, std::span<const SamplePair> batch,
                  double dt, SchemeName scheme, double lambda_h, double lambda_f,
                  double lambda_r, bool reg_active) {
  const RhsSpec spec = make_rhs_spec(m);
  ad::Tape tape;
  std::vector<ad::Var> theta = tape.bind_params(m.params);
  return loss_on_tape(tape, theta, spec, batch, dt, scheme, lambda_h, lambda_f, lambda_r,
                      reg_active)
      .value();
}

TrainHistory train_on_pairs(const RhsSpec& spec, std::vector<double>& params,
                            std::vector<std::uint8_t>& pruned,
                            const std::vector<std::uint8_t>& prunable,
                            const std::vector<SamplePair>& samples, double dt,
                            const Hyperparams& hp, std::ostream* progress) {
  if (samples.empty()) throw std::invalid_argument("train: empty dataset");
  const int n = static_cast<int>(samples.size());
  const int b = std::max(1, hp.batch_size);

  TrainHistory hist;
  AdamState adam;
  ad::Tape tape;
  std::vector<Vec> ring;  // |param| snapshots of the last p epochs
  std::vector<SamplePair> batch;

  for (int epoch = 1; epoch <= hp.epochs; ++epoch) {
    const std::vector<int> order = epoch_permutation(hp.seed, epoch, n);
    const bool reg_active = !(hp.reg_drop_at_half && epoch > hp.epochs / 2);

    double sum_loss = 0.0, sum_data = 0.0, sum_reg = 0.0;
    int n_batches = 0;
    bool failed = false;
    for (int start = 0; start < n; start += b) {
      const int len = std::min(b, n - start);
      batch.clear();
      for (int k = 0; k < len; ++k) batch.push_back(samples[order[start + k]]);
      LossParts parts;
      ad::GradResult res;
      try {
        res = ad::grad(
            tape,
            [&](ad::Tape& tp, const std::vector<ad::Var>& theta) {
              return loss_on_tape(tp, theta, spec, batch, dt, hp.integrator, hp.lambda_h,
                                  hp.lambda_f, hp.lambda_r, reg_active, &parts);
            },
            params, &pruned);
      } catch (const ad::NonFiniteError&) {
        failed = true;
        break;
      }
      adam_step(adam, params, res.grad, hp.learning_rate, hp.weight_decay, &pruned);
      sum_loss += res.loss;
      sum_data += parts.data;
      sum_reg += parts.reg;
      ++n_batches;
    }
    if (failed || n_batches == 0) {
      hist.diverged = true;
      break;
    }
    hist.epoch_loss.push_back(sum_loss / n_batches);
    hist.epoch_data_loss.push_back(sum_data / n_batches);
    hist.epoch_reg_loss.push_back(sum_reg / n_batches);

    Vec snap(params.size());
    for (std::size_t i = 0; i < params.size(); ++i) snap[i] = std::abs(params[i]);
    ring.push_back(std::move(snap));
    if (static_cast<int>(ring.size()) > std::max(1, hp.prune_history)) ring.erase(ring.begin());

    if (hp.prune_interval > 0 && epoch % hp.prune_interval == 0) {
      std::vector<int> new_slots;
      prune(params, pruned, ring, hp.prune_threshold, hp.prune_history, prunable,
            &new_slots);
      for (int s : new_slots) hist.prune_events.push_back(PruneEvent{epoch, s});
    }
    int active = 0;
    for (std::size_t i = 0; i < params.size(); ++i)
      if (prunable[i] && !pruned[i]) ++active;
    hist.active_counts.push_back(active);
    if (progress) {
      (*progress) << "epoch=" << epoch << " loss=" << hist.epoch_loss.back()
                  << " active=" << active << "\n";
    }
    if (!std::isfinite(hist.epoch_loss.back())) {
      hist.diverged = true;
      break;
    }
  }
  hist.final_mask = pruned;
  return hist;
}

TrainHistory train(PseudoHamiltonianModel& model, const Dataset& data,
                   const Hyperparams& hp, std::ostream* progress) {
  const RhsSpec spec = make_rhs_spec(model);
  return train_on_pairs(spec, model.params, model.pruned, model.prunable,
                        make_pairs(data), data.dt, hp, progress);
}

TrainHistory train(BaselineModel& model, const Dataset& data, const Hyperparams& hp,
                   std::ostream* progress) {
  const RhsSpec spec = make_rhs_spec(model);
  return train_on_pairs(spec, model.params, model.pruned, model.prunable,
                        make_pairs(data), data.dt, hp, progress);
}

}  // namespace phsysid
