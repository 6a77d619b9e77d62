#include "phsysid/experiments.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <sstream>
#include <thread>

#include <nlohmann/json.hpp>

#include "phsysid/rng.hpp"

namespace phsysid {

using nlohmann::json;

namespace {

BasisLibrary make_library(const LibSpec& spec, int dim,
                          const std::vector<std::string>& var_names) {
  BasisLibrary lib = build_polynomial_library(dim, spec.degree, spec.constant);
  if (!var_names.empty()) lib.var_names = var_names;
  if (spec.trig_freq_inits.empty()) {
    add_trig_terms(lib, spec.trig_sin, spec.trig_cos);
  } else {
    for (double f : spec.trig_freq_inits) {
      if (spec.trig_sin) add_trig_slot(lib, TrigShape::sin, f);
      if (spec.trig_cos) add_trig_slot(lib, TrigShape::cos, f);
    }
  }
  return lib;
}

}  // namespace

ExperimentConfig preset(const std::string& name) {
  ExperimentConfig c;
  c.preset_name = name;
  if (name == "henon-heiles") {
    c.system = "henon_heiles";
    c.data = {3000, 0.1, 0.1, 0.02, 11, -1.0, 1.0};
    c.h_lib = {3, false, false, false, false, {}};
    c.g_lib = {2, true, false, false, false, {}};
    c.train.epochs = 60;
    c.train.learning_rate = 3e-3;
    c.train.lambda_h = 0.0;
    c.train.prune_interval = 5;
    c.train.seed = 11;
    c.eval = {10, 10.0, 0.1, 1001, 2.0, 0.15, {}};  // below the escape energy 1/6
  } else if (name == "nls") {
    c.system = "nls";
    c.data = {30, 0.99, 0.01, 5e-5, 22, -1.0, 1.0};
    c.h_lib = {4, false, false, false, false, {}};
    c.g_lib = {3, true, false, false, false, {}};
    c.train.epochs = 100;
    c.train.learning_rate = 1e-2;
    c.train.lambda_h = 0.0;
    c.train.prune_interval = 20;
    c.train.seed = 22;
    c.eval = {10, 1.0, 0.01, 1002, 1e6, std::numeric_limits<double>::infinity(), {}};
  } else if (name == "mass-spring") {
    c.system = "mass_spring";
    c.data = {50, 10.0, 0.1, 0.2, 33, -1.0, 1.0};
    c.h_lib = {3, false, false, false, false, {}};
    c.has_force = true;
    // state polynomials plus trainable trig-in-t, injected on the momentum
    c.f_lib = {3, true, true, true, false, {1}};
    c.damping_components = {1};
    c.g_lib = {3, true, true, true, false, {}};
    c.train.epochs = 150;
    c.train.learning_rate = 5e-3;
    c.train.lambda_h = 0.1;
    c.train.lambda_f = 0.01;
    c.train.prune_interval = 20;
    c.train.seed = 33;
    c.sindy_time_augmented = true;
    c.eval = {30, 10.0, 0.1, 1003, 1e6, std::numeric_limits<double>::infinity(), {}};
  } else if (name == "tanks") {
    c.system = "tanks";
    c.model = "phsi_hybrid";
    c.data = {60, 0.5, 0.01, 0.005, 44, -1.0, 1.0};
    c.h_lib = {2, false, false, false, false, {}};
    c.has_force = true;
    c.f_lib = {1, false, false, false, false, {8}};  // MLP on the leaky tank
    c.damping_components = {0, 1, 2, 3, 4};
    c.g_lib = {1, true, false, false, false, {}};
    c.train.epochs = 100;
    c.train.learning_rate = 3e-2;
    c.train.lambda_h = 0.5;
    c.train.lambda_f = 0.001;
    c.train.prune_interval = 10;
    c.train.seed = 44;
    c.eval = {30, 1.0, 0.01, 1004, 1e6, std::numeric_limits<double>::infinity(), {}};
  } else {
    throw std::invalid_argument("unknown preset '" + name + "'");
  }
  return c;
}

void apply_budget(ExperimentConfig& config, const std::string& budget) {
  if (budget == "paper") {
    config.budget = "paper";
    return;
  }
  if (budget != "desk") throw std::invalid_argument("budget must be paper or desk");
  config.budget = "desk";
  config.data.n_traj = std::max(1, config.data.n_traj / 5);
  config.train.epochs = std::max(1, config.train.epochs / 5);
}

namespace {

json lib_spec_to_json(const LibSpec& s) {
  return json{{"degree", s.degree},
              {"constant", s.constant},
              {"trig", {{"sin", s.trig_sin}, {"cos", s.trig_cos}}},
              {"time_input", s.time_input},
              {"components", s.components},
              {"trig_freq_inits", s.trig_freq_inits}};
}

LibSpec lib_spec_from_json(const json& j) {
  LibSpec s;
  s.degree = j.at("degree").get<int>();
  s.constant = j.at("constant").get<bool>();
  s.trig_sin = j.at("trig").at("sin").get<bool>();
  s.trig_cos = j.at("trig").at("cos").get<bool>();
  s.time_input = j.value("time_input", false);
  s.components = j.value("components", std::vector<int>{});
  s.trig_freq_inits = j.value("trig_freq_inits", std::vector<double>{});
  return s;
}

}  // namespace

json config_to_json(const ExperimentConfig& c) {
  json params = json::object();
  for (const auto& [k, v] : c.system_params) params[k] = v;
  return json{
      {"preset", c.preset_name},
      {"system", c.system},
      {"system_params", params},
      {"data",
       {{"n_traj", c.data.n_traj},
        {"t_end", c.data.t_end},
        {"dt", c.data.dt},
        {"sigma", c.data.sigma},
        {"seed", c.data.seed},
        {"init_low", c.data.init_low},
        {"init_high", c.data.init_high}}},
      {"model", c.model},
      {"h_lib", lib_spec_to_json(c.h_lib)},
      {"has_force", c.has_force},
      {"f_lib", lib_spec_to_json(c.f_lib)},
      {"mlp_hidden", c.mlp_hidden},
      {"damping_components", c.damping_components},
      {"g_lib", lib_spec_to_json(c.g_lib)},
      {"sindy",
       {{"threshold", c.sindy_threshold},
        {"sweeps", c.sindy_sweeps},
        {"time_augmented", c.sindy_time_augmented}}},
      {"train",
       {{"epochs", c.train.epochs},
        {"learning_rate", c.train.learning_rate},
        {"batch_size", c.train.batch_size},
        {"weight_decay", c.train.weight_decay},
        {"lambda_h", c.train.lambda_h},
        {"lambda_f", c.train.lambda_f},
        {"lambda_r", c.train.lambda_r},
        {"prune_interval", c.train.prune_interval},
        {"prune_history", c.train.prune_history},
        {"prune_threshold", c.train.prune_threshold},
        {"integrator", to_string(c.train.integrator)},
        {"seed", c.train.seed},
        {"reg_drop_at_half", c.train.reg_drop_at_half}}},
      {"eval",
       {{"n_inits", c.eval.n_inits},
        {"t_end", c.eval.t_end},
        {"dt_out", c.eval.dt_out},
        {"seed", c.eval.seed},
        {"truth_bound", c.eval.truth_bound},
        {"max_init_energy", std::isfinite(c.eval.max_init_energy)
                                ? nlohmann::json(c.eval.max_init_energy)
                                : nlohmann::json()}}},
      {"budget", c.budget}};
}

ExperimentConfig config_from_json(const json& j) {
  ExperimentConfig c;
  c.preset_name = j.value("preset", "");
  c.system = j.at("system").get<std::string>();
  if (j.contains("system_params"))
    for (auto it = j["system_params"].begin(); it != j["system_params"].end(); ++it)
      c.system_params[it.key()] = it.value().get<Vec>();
  const json& d = j.at("data");
  c.data.n_traj = d.at("n_traj").get<int>();
  c.data.t_end = d.at("t_end").get<double>();
  c.data.dt = d.at("dt").get<double>();
  c.data.sigma = d.at("sigma").get<double>();
  c.data.seed = d.at("seed").get<std::uint64_t>();
  c.data.init_low = d.value("init_low", -1.0);
  c.data.init_high = d.value("init_high", 1.0);
  c.model = j.value("model", "phsi");
  if (j.contains("h_lib")) c.h_lib = lib_spec_from_json(j["h_lib"]);
  c.has_force = j.value("has_force", false);
  if (j.contains("f_lib")) c.f_lib = lib_spec_from_json(j["f_lib"]);
  c.mlp_hidden = j.value("mlp_hidden", std::vector<int>{100, 100, 100});
  c.damping_components = j.value("damping_components", std::vector<int>{});
  if (j.contains("g_lib")) c.g_lib = lib_spec_from_json(j["g_lib"]);
  if (j.contains("sindy")) {
    c.sindy_threshold = j["sindy"].value("threshold", 0.05);
    c.sindy_sweeps = j["sindy"].value("sweeps", 10);
    c.sindy_time_augmented = j["sindy"].value("time_augmented", false);
  }
  const json& t = j.at("train");
  c.train.epochs = t.at("epochs").get<int>();
  c.train.learning_rate = t.at("learning_rate").get<double>();
  c.train.batch_size = t.value("batch_size", 32);
  c.train.weight_decay = t.value("weight_decay", 1e-4);
  c.train.lambda_h = t.value("lambda_h", 0.0);
  c.train.lambda_f = t.value("lambda_f", 0.0);
  c.train.lambda_r = t.value("lambda_r", 0.0);
  c.train.prune_interval = t.value("prune_interval", 10);
  c.train.prune_history = t.value("prune_history", 1);
  c.train.prune_threshold = t.value("prune_threshold", 0.05);
  c.train.integrator = scheme_from_string(t.value("integrator", "srk4"));
  c.train.seed = t.value("seed", std::uint64_t{0});
  c.train.reg_drop_at_half = t.value("reg_drop_at_half", true);
  const json& e = j.at("eval");
  c.eval.n_inits = e.at("n_inits").get<int>();
  c.eval.t_end = e.at("t_end").get<double>();
  c.eval.dt_out = e.at("dt_out").get<double>();
  c.eval.seed = e.value("seed", std::uint64_t{777});
  c.eval.truth_bound = e.value("truth_bound", 1e6);
  if (e.contains("max_init_energy") && !e["max_init_energy"].is_null())
    c.eval.max_init_energy = e["max_init_energy"].get<double>();
  c.budget = j.value("budget", "paper");
  return c;
}

TrainedModel build_model(const ExperimentConfig& config, const OdeSystem& system) {
  TrainedModel tm;
  if (config.model == "phsi" || config.model == "phsi_hybrid") {
    tm.kind = "phsi";
    BasisLibrary h_lib = make_library(config.h_lib, system.dim, system.var_names);
    tm.phsi = make_phsi_model(system.structure, std::move(h_lib),
                              config.damping_components);
    if (config.model == "phsi_hybrid") {
      attach_mlp_force(tm.phsi, config.mlp_hidden, config.f_lib.components,
                       config.train.seed);
    } else if (config.has_force) {
      SymbolicForce force;
      if (config.f_lib.time_input) {
        force.lib = make_library(config.f_lib, 1, {"t"});
        force.inputs = {-1};
      } else {
        force.lib = make_library(config.f_lib, system.dim, system.var_names);
        force.inputs.resize(system.dim);
        for (int i = 0; i < system.dim; ++i) force.inputs[i] = i;
      }
      force.out_components = config.f_lib.components;
      attach_symbolic_force(tm.phsi, std::move(force));
    }
  } else if (config.model == "bsi") {
    tm.kind = "bsi";
    tm.baseline =
        make_bsi_model(system.dim, make_library(config.g_lib, system.dim, system.var_names));
  } else if (config.model == "sindy") {
    tm.kind = "sindy";
    const int d_in = system.dim + (config.sindy_time_augmented ? 1 : 0);
    LibSpec spec = config.g_lib;
    spec.trig_sin = spec.trig_cos = false;  // SINDy regression is linear
    std::vector<std::string> names = system.var_names;
    if (config.sindy_time_augmented) names.push_back("t");
    tm.baseline = make_bsi_model(system.dim, make_library(spec, d_in, names));
  } else {
    throw std::invalid_argument("unknown model '" + config.model + "'");
  }
  return tm;
}

RhsFn model_rhs_fn(const TrainedModel& model) {
  if (model.kind == "phsi") {
    PseudoHamiltonianModel m = model.phsi;
    return [m](const Vec& x, double t) { return phsi_rhs(m, x, t); };
  }
  BaselineModel m = model.baseline;
  if (!m.time_augmented)
    return [m](const Vec& x, double t) { return baseline_rhs(m, x, t); };
  const int d = m.n_state;
  return [m, d](const Vec& x, double t) {
    Vec u = x;
    u.push_back(t);  // tau(0)=t0 and dtau/dt=1, so tau == t along the flow
    Vec y = baseline_rhs(m, u, t);
    y.resize(d);
    return y;
  };
}

double trajectory_error(const RhsFn& model_rhs, const OdeSystem& system, int n_inits,
                        double t_end, double dt_out, std::uint64_t seed,
                        double truth_bound, double max_init_energy, int* n_blowups,
                        Vec* per_init) {
  if (n_inits < 1) throw std::invalid_argument("trajectory_error: n_inits must be >= 1");
  int blowups = 0;
  Vec errors;
  int attempts = 0;
  const int max_attempts = 100 * n_inits;
  std::uint64_t draw = 0;
  while (static_cast<int>(errors.size()) < n_inits && attempts < max_attempts) {
    ++attempts;
    Rng rng(Rng::derive(seed, draw++));
    Vec x0(system.dim);
    for (double& v : x0) v = rng.uniform(-1.0, 1.0);
    if (std::isfinite(max_init_energy) && system.hamiltonian &&
        system.hamiltonian(x0) > max_init_energy)
      continue;
    Trajectory truth;
    try {
      truth = reference_simulate(system, x0, t_end, dt_out);
    } catch (const std::exception&) {
      continue;  // exact trajectory unbounded: redraw
    }
    bool escaped = false;
    for (const Vec& xs : truth.states)
      if (inf_norm(xs) > truth_bound) escaped = true;
    if (escaped) continue;
    double err;
    try {
      const Trajectory sim = simulate_fixed_rk4(model_rhs, x0, 0.0, t_end, dt_out, 100);
      double acc = 0.0;
      for (std::size_t k = 0; k < truth.size(); ++k)
        acc += l2_norm_sq(sim.states[k] - truth.states[k]);
      err = std::sqrt(acc * dt_out);
    } catch (const std::exception&) {
      err = std::numeric_limits<double>::infinity();
      ++blowups;
    }
    errors.push_back(err);
  }
  if (static_cast<int>(errors.size()) < n_inits)
    throw std::runtime_error("trajectory_error: could not find enough bounded exact trajectories");
  double mean = 0.0;
  for (double e : errors) mean += e;
  mean /= errors.size();
  if (n_blowups) *n_blowups = blowups;
  if (per_init) *per_init = errors;
  return mean;
}

double trajectory_error_fixed(const RhsFn& model_rhs, const OdeSystem& system,
                              const std::vector<Vec>& inits, double t_end, double dt_out,
                              int* n_blowups, Vec* per_init) {
  int blowups = 0;
  Vec errors;
  for (const Vec& x0 : inits) {
    const Trajectory truth = reference_simulate(system, x0, t_end, dt_out);
    double err;
    try {
      const Trajectory sim = simulate_fixed_rk4(model_rhs, x0, 0.0, t_end, dt_out, 100);
      double acc = 0.0;
      for (std::size_t k = 0; k < truth.size(); ++k)
        acc += l2_norm_sq(sim.states[k] - truth.states[k]);
      err = std::sqrt(acc * dt_out);
    } catch (const std::exception&) {
      err = std::numeric_limits<double>::infinity();
      ++blowups;
    }
    errors.push_back(err);
  }
  double mean = 0.0;
  for (double e : errors) mean += e;
  mean /= errors.empty() ? 1.0 : errors.size();
  if (n_blowups) *n_blowups = blowups;
  if (per_init) *per_init = errors;
  return mean;
}

namespace {

void coeff_rows_for_phsi(const PseudoHamiltonianModel& m, const OdeSystem& system,
                         std::vector<CoeffRow>& rows) {
  // Hamiltonian terms: every term with a nonzero truth or learned value.
  for (int i = 0; i < m.h_lib.n_terms(); ++i) {
    const Term& term = m.h_lib.terms[i];
    if (term.kind != TermKind::monomial) continue;
    const double learned = m.params[m.h_offset() + m.h_lib.param_offsets[i]];
    double truth = 0.0;
    for (const auto& [exps, coeff] : system.truth_h_terms)
      if (exps == term.exponents) truth = coeff;
    if (truth == 0.0 && learned == 0.0) continue;
    rows.push_back(CoeffRow{"H", term_name(m.h_lib, i), truth, learned, true});
  }
  for (int k = 0; k < m.n_damping(); ++k) {
    const int comp = m.damping_components[k];
    const double truth =
        comp < static_cast<int>(system.damping_truth.size()) ? system.damping_truth[comp] : 0.0;
    rows.push_back(CoeffRow{"R", "r[" + std::to_string(comp + 1) + "]", truth,
                            m.params[m.damping_offset() + k], true});
  }
  if (m.force_kind == ForceKind::symbolic) {
    const BasisLibrary& lib = m.sym_force.lib;
    for (int i = 0; i < lib.n_terms(); ++i) {
      const int off = m.force_offset() + lib.param_offsets[i];
      if (lib.terms[i].kind == TermKind::trig) {
        const bool is_sin = lib.terms[i].trig_shape == TrigShape::sin;
        const double alpha_truth =
            is_sin && system.truth_force_params.count("alpha")
                ? system.truth_force_params.at("alpha")
                : 0.0;
        const double omega_truth =
            is_sin && system.truth_force_params.count("omega")
                ? system.truth_force_params.at("omega")
                : 0.0;
        rows.push_back(CoeffRow{"F", std::string(is_sin ? "alpha_sin" : "alpha_cos"),
                                alpha_truth, m.params[off], true});
        if (m.params[off] != 0.0 || alpha_truth != 0.0)
          rows.push_back(CoeffRow{"F", std::string(is_sin ? "omega_sin" : "omega_cos"),
                                  omega_truth, m.params[off + 1], is_sin});
      } else {
        const double learned = m.params[off];
        if (learned == 0.0) continue;
        rows.push_back(CoeffRow{"F", term_name(lib, i), 0.0, learned, true});
      }
    }
  }
}

void coeff_rows_for_baseline(const BaselineModel& m, std::vector<CoeffRow>& rows) {
  for (int c = 0; c < m.n_state; ++c) {
    for (int i = 0; i < m.lib.n_terms(); ++i) {
      const int off = c * m.row_params() + m.lib.param_offsets[i];
      if (m.params[off] == 0.0) continue;
      if (m.lib.terms[i].kind == TermKind::trig) {
        const bool is_sin = m.lib.terms[i].trig_shape == TrigShape::sin;
        rows.push_back(CoeffRow{"g[" + std::to_string(c + 1) + "]",
                                std::string(is_sin ? "alpha_sin" : "alpha_cos"), 0.0,
                                m.params[off], false});
        rows.push_back(CoeffRow{"g[" + std::to_string(c + 1) + "]",
                                std::string(is_sin ? "omega_sin" : "omega_cos"), 0.0,
                                m.params[off + 1], false});
      } else {
        rows.push_back(CoeffRow{"g[" + std::to_string(c + 1) + "]", term_name(m.lib, i),
                                0.0, m.params[off], false});
      }
    }
  }
}

}  // namespace

ExperimentReport run_experiment(const ExperimentConfig& config, const std::string& out_dir,
                                TrainedModel* out_model) {
  const auto t_start = std::chrono::steady_clock::now();
  ExperimentReport report;
  report.config_echo = config_to_json(config).dump(2) + "\n";

  const OdeSystem system = make_benchmark(config.system, config.system_params);
  const Dataset dataset =
      generate_dataset(system, config.data.n_traj, config.data.t_end, config.data.dt,
                       config.data.init_low, config.data.init_high, config.data.sigma,
                       config.data.seed);

  TrainedModel tm = build_model(config, system);
  std::ostringstream log;
  if (tm.kind == "phsi") {
    report.history = train(tm.phsi, dataset, config.train, &log);
  } else if (tm.kind == "bsi") {
    report.history = train(tm.baseline, dataset, config.train, &log);
  } else {
    tm.baseline = sindy_fit(dataset, tm.baseline.lib, config.sindy_threshold,
                            config.sindy_sweeps);
  }

  report.mean_l2 =
      trajectory_error(model_rhs_fn(tm), system, config.eval.n_inits, config.eval.t_end,
                       config.eval.dt_out, config.eval.seed, config.eval.truth_bound,
                       config.eval.max_init_energy, &report.blowups,
                       &report.per_init_errors);

  if (tm.kind == "phsi")
    coeff_rows_for_phsi(tm.phsi, system, report.coefficients);
  else
    coeff_rows_for_baseline(tm.baseline, report.coefficients);

  if (!out_dir.empty()) {
    std::filesystem::create_directories(out_dir);
    write_text_file(out_dir + "/config_echo.json", report.config_echo);
    write_coeff_csv(out_dir + "/coefficients.csv", report.coefficients);
    write_errors_csv(out_dir + "/errors.csv", report.per_init_errors, report.blowups);
    const json mj = tm.kind == "phsi" ? model_to_json(tm.phsi) : model_to_json(tm.baseline);
    write_text_file(out_dir + "/model.json", mj.dump(2) + "\n");
    write_text_file(out_dir + "/history.json", history_to_json(report.history).dump(2) + "\n");
    write_text_file(out_dir + "/train_log.txt", log.str());
  }
  if (out_model) *out_model = std::move(tm);
  report.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
  return report;
}

namespace {

template <class Cell, class Fn>
void run_cells(std::vector<Cell>& cells, const Fn& work, int n_threads) {
  if (n_threads <= 0)
    n_threads = static_cast<int>(std::thread::hardware_concurrency());
  n_threads = std::max(1, std::min<int>(n_threads, static_cast<int>(cells.size())));
  if (n_threads == 1) {
    for (std::size_t i = 0; i < cells.size(); ++i) work(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  pool.reserve(n_threads);
  for (int t = 0; t < n_threads; ++t) {
    pool.emplace_back([&]() {
      for (;;) {
        const std::size_t i = next.fetch_add(1);
        if (i >= cells.size()) return;
        work(i);
      }
    });
  }
  for (auto& th : pool) th.join();
}

}  // namespace

std::vector<IntegratorCell> integrator_sweep(const ExperimentConfig& base,
                                             const std::vector<SchemeName>& integrators,
                                             const std::vector<DataBudget>& budgets,
                                             const std::vector<double>& noise_levels,
                                             std::uint64_t seed, int n_threads) {
  const OdeSystem probe = make_benchmark(base.system, base.system_params);
  for (SchemeName s : integrators) {
    if (s == SchemeName::prk4 && !probe.separable)
      throw std::invalid_argument("integrator_sweep: prk4 requires a separable system");
    if (s == SchemeName::srk6)
      throw std::invalid_argument("integrator_sweep: srk6 tableau not sourced");
  }
  std::vector<IntegratorCell> cells;
  for (std::size_t i = 0; i < integrators.size(); ++i)
    for (std::size_t b = 0; b < budgets.size(); ++b)
      for (std::size_t s = 0; s < noise_levels.size(); ++s) {
        IntegratorCell cell;
        cell.scheme = integrators[i];
        cell.budget_index = static_cast<int>(b);
        cell.sigma = noise_levels[s];
        cells.push_back(cell);
      }

  run_cells(cells, [&](std::size_t idx) {
    IntegratorCell& cell = cells[idx];
    ExperimentConfig cfg = base;
    cfg.data = budgets[cell.budget_index];
    cfg.data.sigma = cell.sigma;
    cfg.train.integrator = cell.scheme;
    cfg.data.seed = Rng::derive(seed, 2 * idx);
    cfg.train.seed = Rng::derive(seed, 2 * idx + 1);
    TrainedModel tm;
    const ExperimentReport rep = run_experiment(cfg, "", &tm);
    cell.mean_l2 = rep.mean_l2;
    cell.blowups = rep.blowups;
    if (tm.kind == "phsi" && !tm.phsi.damping_components.empty()) {
      const OdeSystem system = make_benchmark(cfg.system, cfg.system_params);
      for (int k = 0; k < tm.phsi.n_damping(); ++k) {
        const int comp = tm.phsi.damping_components[k];
        const double truth = system.damping_truth[comp];
        if (truth != 0.0)
          cell.friction_ratios.push_back(tm.phsi.params[tm.phsi.damping_offset() + k] /
                                         truth);
      }
      double mean = 0.0;
      for (double r : cell.friction_ratios) mean += r;
      if (!cell.friction_ratios.empty())
        cell.mean_friction_ratio = mean / cell.friction_ratios.size();
    }
  }, n_threads);
  return cells;
}

std::vector<RegPruneCell> reg_prune_sweep(const ExperimentConfig& base,
                                          const std::vector<double>& lambda_grid,
                                          const std::vector<int>& p_grid, int epochs,
                                          std::uint64_t seed, int n_threads) {
  if (lambda_grid.empty() || p_grid.empty())
    throw std::invalid_argument("reg_prune_sweep: empty grid");
  std::vector<RegPruneCell> cells;
  for (double lh : lambda_grid)
    for (int p : p_grid) cells.push_back(RegPruneCell{lh, p, 0.0, 0});

  run_cells(cells, [&](std::size_t idx) {
    RegPruneCell& cell = cells[idx];
    ExperimentConfig cfg = base;
    cfg.data.sigma = 0.0;  // the sparsity study runs on noiseless data
    cfg.train.lambda_h = cell.lambda_h;
    cfg.train.prune_interval = cell.prune_interval;
    cfg.train.epochs = epochs;
    cfg.data.seed = Rng::derive(seed, 2 * idx);
    cfg.train.seed = Rng::derive(seed, 2 * idx + 1);
    TrainedModel tm;
    const ExperimentReport rep = run_experiment(cfg, "", &tm);
    cell.mean_l2 = rep.mean_l2;
    int active = 0;
    const auto& params = tm.kind == "phsi" ? tm.phsi.params : tm.baseline.params;
    const auto& prunable = tm.kind == "phsi" ? tm.phsi.prunable : tm.baseline.prunable;
    for (std::size_t i = 0; i < params.size(); ++i)
      if (prunable[i] && params[i] != 0.0) ++active;
    cell.active_terms = active;
  }, n_threads);
  return cells;
}

void write_integrator_sweep_csv(const std::string& path,
                                const std::vector<IntegratorCell>& cells) {
  std::ostringstream out;
  out << "integrator,budget_index,sigma,mean_l2,blowups,mean_friction_ratio\n";
  for (const IntegratorCell& c : cells) {
    out << to_string(c.scheme) << "," << c.budget_index << "," << format_full(c.sigma)
        << "," << format_full(c.mean_l2) << "," << c.blowups << ","
        << format_full(c.mean_friction_ratio) << "\n";
  }
  write_text_file(path, out.str());
}

void write_reg_prune_csv(const std::string& path, const std::vector<RegPruneCell>& cells,
                         const std::vector<double>& lambda_grid,
                         const std::vector<int>& p_grid) {
  Mat values(lambda_grid.size(), Vec(p_grid.size(), 0.0));
  Mat counts(lambda_grid.size(), Vec(p_grid.size(), 0.0));
  std::size_t idx = 0;
  for (std::size_t r = 0; r < lambda_grid.size(); ++r)
    for (std::size_t c = 0; c < p_grid.size(); ++c, ++idx) {
      values[r][c] = cells[idx].mean_l2;
      counts[r][c] = cells[idx].active_terms;
    }
  std::vector<std::string> rows, cols;
  for (double l : lambda_grid) rows.push_back("lambda_h=" + format_full(l));
  for (int p : p_grid) cols.push_back("P=" + std::to_string(p));
  write_grid_csv(path, "mean_l2", rows, cols, values);
  write_grid_csv(path + ".terms.csv", "active_terms", rows, cols, counts);
}

void write_simulation_svg(const std::string& path, const OdeSystem& system,
                          const RhsFn& model_rhs, const Vec& x0, double t_end,
                          double dt_out) {
  const Trajectory truth = reference_simulate(system, x0, t_end, dt_out);
  std::vector<Series> series;
  for (int c = 0; c < system.dim; ++c) {
    Series s;
    s.first = system.var_names.empty() ? "x" + std::to_string(c + 1) : system.var_names[c];
    for (std::size_t k = 0; k < truth.size(); ++k)
      s.second.emplace_back(truth.times[k], truth.states[k][c]);
    series.push_back(std::move(s));
  }
  try {
    const Trajectory sim = simulate_fixed_rk4(model_rhs, x0, 0.0, t_end, dt_out, 100);
    for (int c = 0; c < system.dim; ++c) {
      Series s;
      s.first = series[c].first + "_model";
      for (std::size_t k = 0; k < sim.size(); ++k)
        s.second.emplace_back(sim.times[k], sim.states[k][c]);
      series.push_back(std::move(s));
    }
  } catch (const std::exception&) {
    // model blow-up: emit the exact trajectories only
  }
  write_svg_polylines(path, series);
}

}  // namespace phsysid
