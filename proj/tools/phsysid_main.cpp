// Command-line front end: dataset generation, training, evaluation,
// simulation, and the sweep studies, all driven by JSON configs or the
// built-in presets.

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "phsysid/experiments.hpp"
#include "phsysid/io.hpp"
#include "phsysid/rng.hpp"

using namespace phsysid;
using nlohmann::json;

namespace {

struct CommonOpts {
  std::string config_path;
  std::string preset_name;
  std::string integrator;
  std::string budget;
  std::uint64_t seed = 0;
  bool has_seed = false;
  double sigma = -1.0;
  std::string out_dir = "out";
};

void add_common(CLI::App* cmd, CommonOpts& opts) {
  cmd->add_option("--config", opts.config_path, "JSON experiment config");
  cmd->add_option("--preset", opts.preset_name,
                  "preset name: henon-heiles | nls | mass-spring | tanks");
  cmd->add_option("--integrator", opts.integrator,
                  "loss integrator: euler | midpoint | rk4 | srk4 | prk4");
  cmd->add_option("--budget", opts.budget, "paper | desk");
  cmd->add_option("--seed", opts.seed, "master seed (data and training)")
      ->each([&](const std::string&) { opts.has_seed = true; });
  cmd->add_option("--sigma", opts.sigma, "noise std override (>= 0)");
  cmd->add_option("--out", opts.out_dir, "output directory");
}

ExperimentConfig resolve_config(const CommonOpts& opts) {
  ExperimentConfig cfg;
  if (!opts.config_path.empty()) {
    cfg = config_from_json(json::parse(read_text_file(opts.config_path)));
  } else if (!opts.preset_name.empty()) {
    cfg = preset(opts.preset_name);
  } else {
    throw std::runtime_error("either --config or --preset is required");
  }
  if (!opts.integrator.empty()) cfg.train.integrator = scheme_from_string(opts.integrator);
  if (!opts.budget.empty()) apply_budget(cfg, opts.budget);
  if (opts.has_seed) {
    cfg.data.seed = opts.seed;
    cfg.train.seed = Rng::derive(opts.seed, 1);
  }
  if (opts.sigma >= 0.0) cfg.data.sigma = opts.sigma;
  return cfg;
}

std::vector<double> parse_double_list(const std::string& s) {
  std::vector<double> out;
  std::stringstream ss(s);
  std::string cell;
  while (std::getline(ss, cell, ',')) out.push_back(std::stod(cell));
  return out;
}

std::vector<int> parse_int_list(const std::string& s) {
  std::vector<int> out;
  std::stringstream ss(s);
  std::string cell;
  while (std::getline(ss, cell, ',')) out.push_back(std::stoi(cell));
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"phsysid: identification of pseudo-Hamiltonian governing equations"};
  app.require_subcommand(1);

  CommonOpts opts;
  std::string model_path, integrators_arg = "euler,midpoint,rk4,srk4";
  std::string lambda_arg = "0,0.05,0.5", pgrid_arg = "10,40,80", noise_arg = "0";
  std::string init_arg;
  int sweep_epochs = 80;
  double sim_t_end = 10.0;

  CLI::App* c_generate = app.add_subcommand("generate", "simulate a training dataset");
  add_common(c_generate, opts);

  CLI::App* c_train = app.add_subcommand("train", "train a model per config");
  add_common(c_train, opts);

  CLI::App* c_eval = app.add_subcommand("evaluate", "trajectory error of a saved model");
  add_common(c_eval, opts);
  c_eval->add_option("--model", model_path, "model.json path")->required();

  CLI::App* c_sim = app.add_subcommand("simulate", "simulate system (and model) to SVG/CSV");
  add_common(c_sim, opts);
  c_sim->add_option("--model", model_path, "model.json path (optional)");
  c_sim->add_option("--init", init_arg, "comma-separated initial state");
  c_sim->add_option("--t-end", sim_t_end, "simulation horizon");

  CLI::App* c_swi = app.add_subcommand("sweep-integrators", "train across integrators");
  add_common(c_swi, opts);
  c_swi->add_option("--integrators", integrators_arg, "comma-separated scheme names");
  c_swi->add_option("--noise", noise_arg, "comma-separated noise levels");

  CLI::App* c_swr = app.add_subcommand("sweep-reg", "regularization/pruning heatmap");
  add_common(c_swr, opts);
  c_swr->add_option("--lambda-grid", lambda_arg, "comma-separated lambda_H values");
  c_swr->add_option("--p-grid", pgrid_arg, "comma-separated pruning intervals");
  c_swr->add_option("--epochs", sweep_epochs, "epochs per cell");

  CLI::App* c_report = app.add_subcommand("report", "coefficient table for a saved model");
  add_common(c_report, opts);
  c_report->add_option("--model", model_path, "model.json path")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    std::filesystem::create_directories(opts.out_dir);

    if (c_generate->parsed()) {
      const ExperimentConfig cfg = resolve_config(opts);
      const OdeSystem system = make_benchmark(cfg.system, cfg.system_params);
      const Dataset ds = generate_dataset(system, cfg.data.n_traj, cfg.data.t_end,
                                          cfg.data.dt, cfg.data.init_low,
                                          cfg.data.init_high, cfg.data.sigma, cfg.data.seed);
      save_dataset_csv(ds, opts.out_dir + "/dataset", cfg.system, cfg.system_params);
      std::cout << "wrote " << opts.out_dir << "/dataset.csv (" << ds.trajectories.size()
                << " trajectories)\n";
    } else if (c_train->parsed() || c_eval->parsed()) {
      ExperimentConfig cfg = resolve_config(opts);
      if (c_eval->parsed()) {
        const OdeSystem system = make_benchmark(cfg.system, cfg.system_params);
        const json mj = json::parse(read_text_file(model_path));
        TrainedModel tm;
        if (mj.at("type") == "phsi") {
          tm.kind = "phsi";
          tm.phsi = model_from_json(mj);
        } else {
          tm.kind = "bsi";
          tm.baseline = baseline_from_json(mj);
        }
        Vec per_init;
        int blowups = 0;
        const double err = trajectory_error(model_rhs_fn(tm), system, cfg.eval.n_inits,
                                            cfg.eval.t_end, cfg.eval.dt_out, cfg.eval.seed,
                                            cfg.eval.truth_bound, cfg.eval.max_init_energy,
                                            &blowups, &per_init);
        write_errors_csv(opts.out_dir + "/errors.csv", per_init, blowups);
        std::cout << "mean_l2=" << format_full(err) << " blowups=" << blowups << "\n";
      } else {
        const ExperimentReport rep = run_experiment(cfg, opts.out_dir);
        std::cout << "mean_l2=" << format_full(rep.mean_l2)
                  << " blowups=" << rep.blowups << " wall_s=" << rep.wall_seconds << "\n";
      }
    } else if (c_sim->parsed()) {
      const ExperimentConfig cfg = resolve_config(opts);
      const OdeSystem system = make_benchmark(cfg.system, cfg.system_params);
      Vec x0;
      if (!init_arg.empty()) {
        x0 = parse_double_list(init_arg);
      } else {
        Rng rng(cfg.eval.seed);
        x0.resize(system.dim);
        for (double& v : x0) v = rng.uniform(-1.0, 1.0);
      }
      RhsFn rhs = system.rhs;
      if (!model_path.empty()) {
        const json mj = json::parse(read_text_file(model_path));
        TrainedModel tm;
        if (mj.at("type") == "phsi") {
          tm.kind = "phsi";
          tm.phsi = model_from_json(mj);
        } else {
          tm.kind = mj.value("time_augmented", false) ? "sindy" : "bsi";
          tm.baseline = baseline_from_json(mj);
        }
        rhs = model_rhs_fn(tm);
      }
      write_simulation_svg(opts.out_dir + "/simulation.svg", system, rhs, x0, sim_t_end,
                           cfg.eval.dt_out);
      const Trajectory traj = simulate_fixed_rk4(rhs, x0, 0.0, sim_t_end, cfg.eval.dt_out, 100);
      Dataset ds;
      ds.dt = cfg.eval.dt_out;
      ds.trajectories.push_back(traj);
      save_dataset_csv(ds, opts.out_dir + "/simulation", cfg.system, cfg.system_params);
      std::cout << "wrote " << opts.out_dir << "/simulation.svg\n";
    } else if (c_swi->parsed()) {
      const ExperimentConfig cfg = resolve_config(opts);
      std::vector<SchemeName> schemes;
      {
        std::stringstream ss(integrators_arg);
        std::string cell;
        while (std::getline(ss, cell, ',')) schemes.push_back(scheme_from_string(cell));
      }
      const std::vector<IntegratorCell> cells =
          integrator_sweep(cfg, schemes, {cfg.data}, parse_double_list(noise_arg),
                           cfg.data.seed);
      write_integrator_sweep_csv(opts.out_dir + "/integrator_sweep.csv", cells);
      std::cout << "wrote " << opts.out_dir << "/integrator_sweep.csv (" << cells.size()
                << " cells)\n";
    } else if (c_swr->parsed()) {
      const ExperimentConfig cfg = resolve_config(opts);
      const std::vector<double> lambdas = parse_double_list(lambda_arg);
      const std::vector<int> ps = parse_int_list(pgrid_arg);
      const std::vector<RegPruneCell> cells =
          reg_prune_sweep(cfg, lambdas, ps, sweep_epochs, cfg.data.seed);
      write_reg_prune_csv(opts.out_dir + "/reg_prune.csv", cells, lambdas, ps);
      std::cout << "wrote " << opts.out_dir << "/reg_prune.csv (" << cells.size()
                << " cells)\n";
    } else if (c_report->parsed()) {
      const json mj = json::parse(read_text_file(model_path));
      std::vector<CoeffRow> rows;
      if (mj.at("type") == "phsi") {
        const PseudoHamiltonianModel m = model_from_json(mj);
        const EquationReport rep = extract_equations(m);
        for (const ReportRow& r : rep.rows)
          rows.push_back(CoeffRow{r.section, r.term, 0.0, r.learned, false});
      } else {
        const BaselineModel m = baseline_from_json(mj);
        const EquationReport rep = extract_equations(m);
        for (const ReportRow& r : rep.rows)
          rows.push_back(CoeffRow{r.section, r.term, 0.0, r.learned, false});
      }
      write_coeff_csv(opts.out_dir + "/coefficients.csv", rows);
      std::cout << "wrote " << opts.out_dir << "/coefficients.csv (" << rows.size()
                << " terms)\n";
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
