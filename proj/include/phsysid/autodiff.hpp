#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include "phsysid/basis.hpp"
#include "phsysid/vec.hpp"

namespace phsysid::ad {

enum class Op : std::uint8_t {
  constant,
  parameter,
  state,
  add,
  sub,
  mul,
  add_c,   // a + aux
  mul_c,   // a * aux
  pow_int, // a ^ b (integer exponent in b)
  sin_op,
  cos_op,
  relu_op,
  min_op,
  max_op,
  mlp_out, // output b of fused MLP call a
};

struct Node {
  Op op;
  std::int32_t a = -1;
  std::int32_t b = -1;
  double val = 0.0;
  double aux = 0.0;
};

class Tape;

/// Handle to a scalar value on a tape.
struct Var {
  Tape* tape = nullptr;
  std::int32_t idx = -1;
  double value() const;
};

/// Reverse-mode tape. Nodes are recorded eagerly with cached primal values;
/// `backward` runs one reverse sweep and reads parameter gradients off the
/// parameter-leaf adjoints. The tape is rebuilt per batch and reused via
/// `clear()` to keep allocations flat.
class Tape {
 public:
  Var make(Op op, std::int32_t a, std::int32_t b, double val, double aux = 0.0) {
    nodes_.push_back(Node{op, a, b, val, aux});
    return Var{this, static_cast<std::int32_t>(nodes_.size() - 1)};
  }

  Var constant(double v) { return make(Op::constant, -1, -1, v); }
  Var state(double v) { return make(Op::state, -1, -1, v); }

  /// Creates one parameter leaf per entry of `theta` (contiguously) and binds
  /// the vector for fused-node weight access. Call once per tape build.
  std::vector<Var> bind_params(const std::vector<double>& theta) {
    if (param_base_ >= 0) throw std::logic_error("bind_params: already bound on this tape");
    params_ = &theta;
    param_base_ = static_cast<std::int32_t>(nodes_.size());
    std::vector<Var> vars(theta.size());
    for (std::size_t s = 0; s < theta.size(); ++s)
      vars[s] = make(Op::parameter, static_cast<std::int32_t>(s), -1, theta[s]);
    return vars;
  }

  /// Fused dense ReLU network (affine layers, ReLU on hidden layers, linear
  /// output). Weights/biases live in the bound parameter vector starting at
  /// `param_slot_base`, laid out [W1, b1, W2, b2, ...] row-major. The forward
  /// pass runs here in plain doubles; the reverse sweep applies the matching
  /// vector-Jacobian products. Returns one output node per output unit.
  std::vector<Var> mlp(const std::vector<int>& layers, int param_slot_base,
                       const std::vector<Var>& inputs);

  double value(std::int32_t idx) const { return nodes_[idx].val; }
  std::size_t size() const { return nodes_.size(); }
  std::int32_t param_base() const { return param_base_; }

  void clear() {
    nodes_.clear();
    calls_.clear();
    params_ = nullptr;
    param_base_ = -1;
  }

  /// Reverse sweep from `loss`; returns the gradient with respect to the
  /// bound parameter vector. Slots flagged in `pruned` are hard-zeroed.
  std::vector<double> backward(Var loss, const std::vector<std::uint8_t>* pruned = nullptr);

  /// Index and op name of the first node with a non-finite primal value, for
  /// error reporting; returns -1 if all values are finite.
  std::int32_t first_non_finite() const;

 private:
  struct MlpCall {
    std::vector<int> layers;
    int param_slot_base = 0;
    std::vector<std::int32_t> in;
    std::int32_t out_base = -1;
    std::vector<double> act;  // inputs to each layer: a0, a1, ..., a_{L-1}
  };

  void mlp_backward(const MlpCall& call, std::vector<double>& adjoint);

  std::vector<Node> nodes_;
  std::vector<MlpCall> calls_;
  const std::vector<double>* params_ = nullptr;
  std::int32_t param_base_ = -1;
  std::vector<double> adjoint_;
};

inline double Var::value() const { return tape->value(idx); }

std::string op_name(Op op);

/// Number of parameter slots a dense network with the given layer sizes uses.
int mlp_param_count(const std::vector<int>& layers);

// ---- operator sugar ----------------------------------------------------

inline Var operator+(Var a, Var b) {
  return a.tape->make(Op::add, a.idx, b.idx, a.value() + b.value());
}
inline Var operator-(Var a, Var b) {
  return a.tape->make(Op::sub, a.idx, b.idx, a.value() - b.value());
}
inline Var operator*(Var a, Var b) {
  return a.tape->make(Op::mul, a.idx, b.idx, a.value() * b.value());
}
inline Var operator+(Var a, double c) {
  return a.tape->make(Op::add_c, a.idx, -1, a.value() + c, c);
}
inline Var operator*(Var a, double c) {
  return a.tape->make(Op::mul_c, a.idx, -1, a.value() * c, c);
}
inline Var operator+(double c, Var a) { return a + c; }
inline Var operator-(Var a, double c) { return a + (-c); }
inline Var operator-(double c, Var a) { return a * -1.0 + c; }
inline Var operator*(double c, Var a) { return a * c; }
inline Var operator/(Var a, double c) { return a * (1.0 / c); }
inline Var operator-(Var a) { return a * -1.0; }

inline Var sin(Var a) { return a.tape->make(Op::sin_op, a.idx, -1, std::sin(a.value())); }
inline Var cos(Var a) { return a.tape->make(Op::cos_op, a.idx, -1, std::cos(a.value())); }
inline Var relu(Var a) {
  return a.tape->make(Op::relu_op, a.idx, -1, a.value() > 0.0 ? a.value() : 0.0);
}
/// Gradient flows to the selected branch only; ties select the first argument.
inline Var vmin(Var a, Var b) {
  return a.tape->make(Op::min_op, a.idx, b.idx, a.value() <= b.value() ? a.value() : b.value());
}
inline Var vmax(Var a, Var b) {
  return a.tape->make(Op::max_op, a.idx, b.idx, a.value() >= b.value() ? a.value() : b.value());
}
/// |x| composed from relu so the subgradient at 0 is 0.
inline Var abs_v(Var a) { return relu(a) + relu(a * -1.0); }

inline double vmin(double a, double b) { return a <= b ? a : b; }
inline double vmax(double a, double b) { return a >= b ? a : b; }
inline double abs_v(double a) { return std::abs(a); }

inline Var pow_int(Var a, int e) {
  if (e == 0) return a.tape->constant(1.0);
  if (e == 1) return a;
  return a.tape->make(Op::pow_int, a.idx, e, powi(a.value(), e));
}

}  // namespace phsysid::ad

namespace phsysid {
inline ad::Var make_scalar(double v, const ad::Var& like) { return like.tape->constant(v); }
}  // namespace phsysid

namespace phsysid::ad {

// ---- spec-level entry points --------------------------------------------

using LossBuilder = std::function<Var(Tape&, const std::vector<Var>&)>;

/// Thrown when the primal pass produced a NaN or infinity.
struct NonFiniteError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct GradResult {
  double loss = 0.0;
  std::vector<double> grad;
};

/// Records `builder(params)` on the given tape and returns loss plus the
/// exact reverse-mode gradient. Throws if the primal pass produced a
/// non-finite value (reporting the offending node).
GradResult grad(Tape& tape, const LossBuilder& builder, const std::vector<double>& params,
                const std::vector<std::uint8_t>* pruned = nullptr);

GradResult grad(const LossBuilder& builder, const std::vector<double>& params,
                const std::vector<std::uint8_t>* pruned = nullptr);

/// Primal-only evaluation of a loss builder.
double eval_loss(const LossBuilder& builder, const std::vector<double>& params);

/// Max over (selected) parameters of the relative error between the
/// reverse-mode gradient and central finite differences with step h. The
/// relative error uses denominator max(|a|, |b|, 1).
double finite_diff_check(const LossBuilder& builder, const std::vector<double>& params,
                         double h, const std::vector<int>* coords = nullptr);

}  // namespace phsysid::ad

namespace phsysid::detail {
template <>
inline ad::Var powi_t<ad::Var>(const ad::Var& x, int e) {
  return ad::pow_int(x, e);
}
}  // namespace phsysid::detail
