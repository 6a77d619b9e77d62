#include "phsysid/autodiff.hpp"

#include <algorithm>

namespace phsysid::ad {

std::string op_name(Op op) {
  switch (op) {
    case Op::constant: return "constant";
    case Op::parameter: return "parameter";
    case Op::state: return "state";
    case Op::add: return "add";
    case Op::sub: return "sub";
    case Op::mul: return "mul";
    case Op::add_c: return "add_c";
    case Op::mul_c: return "mul_c";
    case Op::pow_int: return "pow_int";
    case Op::sin_op: return "sin";
    case Op::cos_op: return "cos";
    case Op::relu_op: return "relu";
    case Op::min_op: return "min";
    case Op::max_op: return "max";
    case Op::mlp_out: return "mlp_out";
  }
  return "?";
}

int mlp_param_count(const std::vector<int>& layers) {
  int n = 0;
  for (std::size_t l = 1; l < layers.size(); ++l) n += layers[l] * (layers[l - 1] + 1);
  return n;
}

std::vector<Var> Tape::mlp(const std::vector<int>& layers, int param_slot_base,
                           const std::vector<Var>& inputs) {
  if (params_ == nullptr) throw std::logic_error("Tape::mlp: bind_params must run first");
  if (layers.size() < 2) throw std::invalid_argument("Tape::mlp: need at least two layers");
  if (static_cast<int>(inputs.size()) != layers.front())
    throw std::invalid_argument("Tape::mlp: input size mismatch");

  MlpCall call;
  call.layers = layers;
  call.param_slot_base = param_slot_base;
  call.in.resize(inputs.size());
  for (std::size_t j = 0; j < inputs.size(); ++j) call.in[j] = inputs[j].idx;

  const int n_layers = static_cast<int>(layers.size());
  int act_total = 0;
  for (int l = 0; l + 1 < n_layers; ++l) act_total += layers[l];
  call.act.resize(act_total);

  const double* w = params_->data() + param_slot_base;
  // a0 = input values
  double* a_prev = call.act.data();
  for (std::size_t j = 0; j < inputs.size(); ++j) a_prev[j] = nodes_[inputs[j].idx].val;

  std::vector<double> out;
  int wofs = 0;
  int act_ofs = 0;
  for (int l = 1; l < n_layers; ++l) {
    const int n_in = layers[l - 1];
    const int n_out = layers[l];
    const bool last = (l == n_layers - 1);
    double* a_next = last ? nullptr : call.act.data() + act_ofs + n_in;
    if (last) out.resize(n_out);
    const double* wl = w + wofs;
    const double* bl = wl + n_out * n_in;
    for (int i = 0; i < n_out; ++i) {
      double z = bl[i];
      const double* row = wl + i * n_in;
      for (int j = 0; j < n_in; ++j) z += row[j] * a_prev[j];
      if (last)
        out[i] = z;
      else
        a_next[i] = z > 0.0 ? z : 0.0;
    }
    wofs += n_out * (n_in + 1);
    if (!last) {
      act_ofs += n_in;
      a_prev = a_next;
    }
  }

  call.out_base = static_cast<std::int32_t>(nodes_.size());
  const std::int32_t call_id = static_cast<std::int32_t>(calls_.size());
  std::vector<Var> result(out.size());
  for (std::size_t k = 0; k < out.size(); ++k)
    result[k] = make(Op::mlp_out, call_id, static_cast<std::int32_t>(k), out[k]);
  calls_.push_back(std::move(call));
  return result;
}

void Tape::mlp_backward(const MlpCall& call, std::vector<double>& adjoint) {
  const std::vector<int>& layers = call.layers;
  const int n_layers = static_cast<int>(layers.size());
  const double* w = params_->data() + call.param_slot_base;
  const std::int32_t leaf_base = param_base_ + call.param_slot_base;

  // delta of the output layer comes from the mlp_out node adjoints
  std::vector<double> delta(layers.back());
  for (int k = 0; k < layers.back(); ++k) delta[k] = adjoint[call.out_base + k];

  // offsets of W_l within the slot block and of a_{l-1} within act
  std::vector<int> wofs(n_layers), aofs(n_layers);
  int wo = 0, ao = 0;
  for (int l = 1; l < n_layers; ++l) {
    wofs[l] = wo;
    aofs[l] = ao;
    wo += layers[l] * (layers[l - 1] + 1);
    ao += layers[l - 1];
  }

  std::vector<double> delta_prev;
  for (int l = n_layers - 1; l >= 1; --l) {
    const int n_in = layers[l - 1];
    const int n_out = layers[l];
    const double* a_prev = call.act.data() + aofs[l];
    const double* wl = w + wofs[l];
    double* gw = adjoint.data() + leaf_base + wofs[l];
    double* gb = gw + n_out * n_in;
    delta_prev.assign(n_in, 0.0);
    for (int i = 0; i < n_out; ++i) {
      const double d = delta[i];
      gb[i] += d;
      if (d != 0.0) {
        const double* row = wl + i * n_in;
        double* grow = gw + i * n_in;
        for (int j = 0; j < n_in; ++j) {
          grow[j] += d * a_prev[j];
          delta_prev[j] += d * row[j];
        }
      }
    }
    if (l > 1) {
      // ReLU mask of the hidden layer below (post-activation > 0)
      for (int j = 0; j < n_in; ++j)
        if (a_prev[j] <= 0.0) delta_prev[j] = 0.0;
    } else {
      for (int j = 0; j < n_in; ++j) adjoint[call.in[j]] += delta_prev[j];
    }
    delta.swap(delta_prev);
  }
}

std::vector<double> Tape::backward(Var loss, const std::vector<std::uint8_t>* pruned) {
  adjoint_.assign(nodes_.size(), 0.0);
  adjoint_[loss.idx] = 1.0;
  for (std::int32_t i = loss.idx; i >= 0; --i) {
    const Node& n = nodes_[i];
    if (n.op == Op::mlp_out) {
      // Run the fused VJP once, when reaching the first output of the call:
      // all sibling output adjoints are final by then.
      if (n.b == 0) mlp_backward(calls_[n.a], adjoint_);
      continue;
    }
    const double ad = adjoint_[i];
    if (ad == 0.0) continue;
    switch (n.op) {
      case Op::add:
        adjoint_[n.a] += ad;
        adjoint_[n.b] += ad;
        break;
      case Op::sub:
        adjoint_[n.a] += ad;
        adjoint_[n.b] -= ad;
        break;
      case Op::mul:
        adjoint_[n.a] += ad * nodes_[n.b].val;
        adjoint_[n.b] += ad * nodes_[n.a].val;
        break;
      case Op::add_c:
        adjoint_[n.a] += ad;
        break;
      case Op::mul_c:
        adjoint_[n.a] += ad * n.aux;
        break;
      case Op::pow_int:
        adjoint_[n.a] += ad * n.b * powi(nodes_[n.a].val, n.b - 1);
        break;
      case Op::sin_op:
        adjoint_[n.a] += ad * std::cos(nodes_[n.a].val);
        break;
      case Op::cos_op:
        adjoint_[n.a] -= ad * std::sin(nodes_[n.a].val);
        break;
      case Op::relu_op:
        if (nodes_[n.a].val > 0.0) adjoint_[n.a] += ad;
        break;
      case Op::min_op:
        adjoint_[nodes_[n.a].val <= nodes_[n.b].val ? n.a : n.b] += ad;
        break;
      case Op::max_op:
        adjoint_[nodes_[n.a].val >= nodes_[n.b].val ? n.a : n.b] += ad;
        break;
      default:
        break;  // leaves
    }
  }
  const int n_slots = params_ ? static_cast<int>(params_->size()) : 0;
  std::vector<double> g(n_slots, 0.0);
  for (int s = 0; s < n_slots; ++s) g[s] = adjoint_[param_base_ + s];
  if (pruned) {
    for (int s = 0; s < n_slots && s < static_cast<int>(pruned->size()); ++s)
      if ((*pruned)[s]) g[s] = 0.0;
  }
  return g;
}

std::int32_t Tape::first_non_finite() const {
  for (std::size_t i = 0; i < nodes_.size(); ++i)
    if (!std::isfinite(nodes_[i].val)) return static_cast<std::int32_t>(i);
  return -1;
}

GradResult grad(Tape& tape, const LossBuilder& builder, const std::vector<double>& params,
                const std::vector<std::uint8_t>* pruned) {
  tape.clear();
  std::vector<Var> theta = tape.bind_params(params);
  Var loss = builder(tape, theta);
  if (!std::isfinite(loss.value())) {
    const std::int32_t bad = tape.first_non_finite();
    throw NonFiniteError("autodiff: non-finite primal value at node " +
                         std::to_string(bad));
  }
  GradResult r;
  r.loss = loss.value();
  r.grad = tape.backward(loss, pruned);
  return r;
}

GradResult grad(const LossBuilder& builder, const std::vector<double>& params,
                const std::vector<std::uint8_t>* pruned) {
  Tape tape;
  return grad(tape, builder, params, pruned);
}

double eval_loss(const LossBuilder& builder, const std::vector<double>& params) {
  Tape tape;
  std::vector<Var> theta = tape.bind_params(params);
  return builder(tape, theta).value();
}

double finite_diff_check(const LossBuilder& builder, const std::vector<double>& params,
                         double h, const std::vector<int>* coords) {
  if (h <= 0.0) throw std::invalid_argument("finite_diff_check: h must be positive");
  GradResult r = grad(builder, params);
  std::vector<int> all;
  if (!coords) {
    all.resize(params.size());
    for (std::size_t i = 0; i < params.size(); ++i) all[i] = static_cast<int>(i);
    coords = &all;
  }
  double worst = 0.0;
  std::vector<double> p = params;
  for (int c : *coords) {
    const double save = p[c];
    p[c] = save + h;
    const double up = eval_loss(builder, p);
    p[c] = save - h;
    const double dn = eval_loss(builder, p);
    p[c] = save;
    const double fd = (up - dn) / (2.0 * h);
    const double a = r.grad[c];
    const double rel = std::abs(a - fd) / std::max({std::abs(a), std::abs(fd), 1.0});
    worst = std::max(worst, rel);
  }
  return worst;
}

}  // namespace phsysid::ad
