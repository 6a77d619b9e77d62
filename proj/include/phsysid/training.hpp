#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <span>
#include <vector>

#include "phsysid/autodiff.hpp"
#include "phsysid/dynamics.hpp"
#include "phsysid/integrators.hpp"
#include "phsysid/models.hpp"

namespace phsysid {

struct Hyperparams {
  int epochs = 100;
  double learning_rate = 1e-3;
  int batch_size = 32;
  double weight_decay = 1e-4;
  double lambda_h = 0.0;
  double lambda_f = 0.0;
  double lambda_r = 0.0;
  int prune_interval = 10;       // P; 0 disables pruning
  int prune_history = 1;         // p
  double prune_threshold = 0.05; // epsilon
  SchemeName integrator = SchemeName::srk4;
  std::uint64_t seed = 0;
  bool reg_drop_at_half = true;
};

struct PruneEvent {
  int epoch = 0;
  int slot = 0;
};

struct TrainHistory {
  std::vector<double> epoch_loss;      // recorded loss (data + penalty)
  std::vector<double> epoch_data_loss;
  std::vector<double> epoch_reg_loss;
  std::vector<int> active_counts;      // unmasked prunable slots per epoch
  std::vector<PruneEvent> prune_events;
  std::vector<std::uint8_t> final_mask;
  bool diverged = false;
};

struct AdamState {
  Vec m, v;
  long step = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

/// Bias-corrected Adam update with decoupled weight decay
/// (theta -= lr*wd*theta applied separately from the moment update).
/// Slots flagged in `masked` are left untouched.
void adam_step(AdamState& state, std::vector<double>& params,
               const std::vector<double>& grads, double lr, double weight_decay,
               const std::vector<std::uint8_t>* masked = nullptr);

/// Masks (and zeroes, permanently) every unmasked prunable slot whose
/// recorded |value| stayed strictly below eps for the last p epochs.
/// `history_ring` holds the per-epoch snapshots, most recent last. Newly
/// pruned slot indices are appended to `events`.
void prune(std::vector<double>& params, std::vector<std::uint8_t>& masks,
           const std::vector<Vec>& history_ring, double eps, int p,
           const std::vector<std::uint8_t>& prunable, std::vector<int>* events = nullptr);

struct SamplePair {
  Vec xn, xnp1;
  double tn = 0.0;
};

/// All consecutive (x^n, x^{n+1}) pairs of the (noisy) trajectories.
std::vector<SamplePair> make_pairs(const Dataset& data);

/// The deterministic sample order for one epoch (a Fisher-Yates shuffle of
/// 0..n-1 seeded by (seed, epoch)).
std::vector<int> epoch_permutation(std::uint64_t seed, int epoch, int n);

/// How a trainable model plugs into the loss: its rhs recorded on a tape,
/// plus the slot classification for the L1 penalties.
struct RhsSpec {
  int dim = 0;
  std::function<std::vector<ad::Var>(const std::vector<ad::Var>& theta,
                                     const std::vector<ad::Var>& x, double t,
                                     std::vector<ad::Var>* mlp_collector)>
      rhs;
  std::vector<std::uint8_t> reg_h, reg_f, reg_r;  // per-slot L1 membership
  bool mlp_force_l1 = false;  // penalize MLP outputs instead of weights
  // One full step of the Yoshida composition on the model (set only for
  // canonical separable models); enables prk4 in the training loss.
  std::function<std::vector<ad::Var>(const std::vector<ad::Var>& theta,
                                     const std::vector<ad::Var>& x, double dt)>
      yoshida;
};

RhsSpec make_rhs_spec(const PseudoHamiltonianModel& m);
RhsSpec make_rhs_spec(const BaselineModel& m);

struct LossParts {
  double data = 0.0;
  double reg = 0.0;
};

/// Eq-(10)-style batch loss on the tape: mean squared scheme residual plus
/// (while active) the L1 penalties.
ad::Var loss_on_tape(ad::Tape& tape, const std::vector<ad::Var>& theta, const RhsSpec& spec,
                     std::span<const SamplePair> batch, double dt, SchemeName scheme,
                     double lambda_h, double lambda_f, double lambda_r, bool reg_active,
                     LossParts* parts = nullptr);

/// Loss value for a model snapshot (no gradient).
double loss_value(const PseudoHamiltonianModel& m, std::span<const SamplePair> batch,
                  double dt, SchemeName scheme, double lambda_h, double lambda_f,
                  double lambda_r, bool reg_active);

/// Algorithm-1 training loop: epoch-seeded shuffling, Adam with decoupled
/// weight decay, periodic pruning, and the drop-regularization-at-half-time
/// schedule. Emits one progress line per epoch to `progress` when given.
TrainHistory train(PseudoHamiltonianModel& model, const Dataset& data,
                   const Hyperparams& hp, std::ostream* progress = nullptr);
TrainHistory train(BaselineModel& model, const Dataset& data, const Hyperparams& hp,
                   std::ostream* progress = nullptr);

/// Core loop over explicitly supplied sample pairs.
TrainHistory train_on_pairs(const RhsSpec& spec, std::vector<double>& params,
                            std::vector<std::uint8_t>& pruned,
                            const std::vector<std::uint8_t>& prunable,
                            const std::vector<SamplePair>& samples, double dt,
                            const Hyperparams& hp, std::ostream* progress = nullptr);

}  // namespace phsysid
