#pragma once

#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "phsysid/dynamics.hpp"
#include "phsysid/integrators.hpp"
#include "phsysid/io.hpp"
#include "phsysid/models.hpp"
#include "phsysid/training.hpp"

namespace phsysid {

struct DataBudget {
  int n_traj = 1;
  double t_end = 1.0;
  double dt = 0.1;
  double sigma = 0.0;
  std::uint64_t seed = 1;
  double init_low = -1.0;
  double init_high = 1.0;
};

struct EvalSpec {
  int n_inits = 10;
  double t_end = 10.0;
  double dt_out = 0.1;
  std::uint64_t seed = 777;
  double truth_bound = 1e6;  // redraw when the exact orbit leaves this box
  // accept draws with H(x0) below this only (systems with escape orbits)
  double max_init_energy = std::numeric_limits<double>::infinity();
  std::vector<Vec> fixed_inits;  // used instead of random draws when nonempty
};

/// Candidate-library description as it appears in config files.
struct LibSpec {
  int degree = 3;
  bool constant = false;
  bool trig_sin = false;
  bool trig_cos = false;
  bool time_input = false;      // library over t instead of the state
  std::vector<int> components;  // output components (forces)
  // one sin/cos slot pair per entry; empty means a single pair at init 1
  std::vector<double> trig_freq_inits;
};

struct ExperimentConfig {
  std::string preset_name;
  std::string system;
  SystemParams system_params;
  DataBudget data;
  std::string model = "phsi";  // phsi | phsi_hybrid | bsi | sindy
  LibSpec h_lib;
  bool has_force = false;
  LibSpec f_lib;
  std::vector<int> mlp_hidden = {100, 100, 100};
  std::vector<int> damping_components;
  LibSpec g_lib;  // baseline/SINDy library (one degree lower, with constant)
  double sindy_threshold = 0.05;
  int sindy_sweeps = 10;
  bool sindy_time_augmented = false;
  Hyperparams train;
  EvalSpec eval;
  std::string budget = "paper";
};

/// Paper-budget presets: henon-heiles, nls, mass-spring, tanks.
ExperimentConfig preset(const std::string& name);

/// budget == "desk" divides n_traj and epochs by 5 for quick runs.
void apply_budget(ExperimentConfig& config, const std::string& budget);

nlohmann::json config_to_json(const ExperimentConfig& config);
ExperimentConfig config_from_json(const nlohmann::json& j);

/// Assembled trainable model for a config (parameters at initialization).
struct TrainedModel {
  std::string kind;  // phsi | bsi | sindy
  PseudoHamiltonianModel phsi;
  BaselineModel baseline;
};

TrainedModel build_model(const ExperimentConfig& config, const OdeSystem& system);

/// Full-state rhs of a trained model (handles SINDy time augmentation).
RhsFn model_rhs_fn(const TrainedModel& model);

/// Mean discrete L2 trajectory error against the exact system over random
/// initial conditions: per trajectory sqrt(sum_n |xhat - x|^2 * dt_out),
/// averaged. Initial conditions whose exact trajectory blows up or leaves
/// the `truth_bound` box (escape orbits, far outside the training region)
/// are skipped and redrawn; model blow-ups count as infinite error and are
/// tallied in `n_blowups`.
double trajectory_error(
    const RhsFn& model_rhs, const OdeSystem& system, int n_inits, double t_end,
    double dt_out, std::uint64_t seed, double truth_bound = 1e6,
    double max_init_energy = std::numeric_limits<double>::infinity(),
    int* n_blowups = nullptr, Vec* per_init = nullptr);

/// Same metric from explicitly given initial conditions.
double trajectory_error_fixed(const RhsFn& model_rhs, const OdeSystem& system,
                              const std::vector<Vec>& inits, double t_end, double dt_out,
                              int* n_blowups = nullptr, Vec* per_init = nullptr);

struct ExperimentReport {
  std::string config_echo;  // JSON text
  std::vector<CoeffRow> coefficients;
  Vec per_init_errors;
  double mean_l2 = 0.0;
  int blowups = 0;
  TrainHistory history;
  double wall_seconds = 0.0;  // console only, never written to report files
};

/// generate -> train -> evaluate -> emit. Writes, under out_dir (when not
/// empty): config_echo.json, coefficients.csv, errors.csv, model.json,
/// history.json, train_log.txt.
ExperimentReport run_experiment(const ExperimentConfig& config, const std::string& out_dir,
                                TrainedModel* out_model = nullptr);

struct IntegratorCell {
  SchemeName scheme = SchemeName::srk4;
  int budget_index = 0;
  double sigma = 0.0;
  double mean_l2 = 0.0;
  int blowups = 0;
  Vec friction_ratios;          // learned r / truth, systems with damping truth
  double mean_friction_ratio = 0.0;
};

/// Trains one model per (integrator, budget, noise) cell. Cells run in
/// parallel with per-cell derived seeds; results are ordered by cell index.
std::vector<IntegratorCell> integrator_sweep(const ExperimentConfig& base,
                                             const std::vector<SchemeName>& integrators,
                                             const std::vector<DataBudget>& budgets,
                                             const std::vector<double>& noise_levels,
                                             std::uint64_t seed, int n_threads = 0);

struct RegPruneCell {
  double lambda_h = 0.0;
  int prune_interval = 0;
  double mean_l2 = 0.0;
  int active_terms = 0;
};

std::vector<RegPruneCell> reg_prune_sweep(const ExperimentConfig& base,
                                          const std::vector<double>& lambda_grid,
                                          const std::vector<int>& p_grid, int epochs,
                                          std::uint64_t seed, int n_threads = 0);

void write_integrator_sweep_csv(const std::string& path,
                                const std::vector<IntegratorCell>& cells);
void write_reg_prune_csv(const std::string& path, const std::vector<RegPruneCell>& cells,
                         const std::vector<double>& lambda_grid,
                         const std::vector<int>& p_grid);

/// Simulates the exact system and the model from one initial condition and
/// writes an SVG with one polyline per state component of each.
void write_simulation_svg(const std::string& path, const OdeSystem& system,
                          const RhsFn& model_rhs, const Vec& x0, double t_end,
                          double dt_out);

}  // namespace phsysid
