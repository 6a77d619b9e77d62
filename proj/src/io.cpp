#include "phsysid/io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

namespace phsysid {

using nlohmann::json;

std::string format_full(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  out << content;
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

namespace {

void write_trajectories_csv(const std::vector<Trajectory>& trajs, int dim,
                            const std::string& path) {
  std::ostringstream out;
  out << "traj_id,t";
  for (int i = 0; i < dim; ++i) out << ",x" << i;
  out << "\n";
  for (std::size_t k = 0; k < trajs.size(); ++k) {
    const Trajectory& tr = trajs[k];
    for (std::size_t n = 0; n < tr.size(); ++n) {
      out << k << "," << format_full(tr.times[n]);
      for (double v : tr.states[n]) out << "," << format_full(v);
      out << "\n";
    }
  }
  write_text_file(path, out.str());
}

std::vector<Trajectory> read_trajectories_csv(const std::string& path, double dt) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read '" + path + "'");
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("empty dataset file " + path);
  std::vector<Trajectory> trajs;
  long long current_id = -1;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string cell;
    std::getline(ss, cell, ',');
    const long long id = std::stoll(cell);
    std::getline(ss, cell, ',');
    const double t = std::stod(cell);
    Vec state;
    while (std::getline(ss, cell, ',')) state.push_back(std::stod(cell));
    if (id != current_id) {
      trajs.emplace_back();
      trajs.back().dt = dt;
      current_id = id;
    }
    trajs.back().times.push_back(t);
    trajs.back().states.push_back(std::move(state));
  }
  return trajs;
}

}  // namespace

void save_dataset_csv(const Dataset& data, const std::string& base,
                      const std::string& system_name, const SystemParams& params) {
  int dim = 0;
  if (!data.trajectories.empty() && !data.trajectories.front().states.empty())
    dim = static_cast<int>(data.trajectories.front().states.front().size());
  write_trajectories_csv(data.trajectories, dim, base + ".csv");
  if (data.clean_copy) write_trajectories_csv(*data.clean_copy, dim, base + "_clean.csv");

  std::ostringstream meta;
  meta << "system=" << system_name << "\n";
  for (const auto& [key, values] : params) {
    meta << "param." << key << "=";
    for (std::size_t i = 0; i < values.size(); ++i)
      meta << (i ? ";" : "") << format_full(values[i]);
    meta << "\n";
  }
  meta << "dt=" << format_full(data.dt) << "\n";
  meta << "sigma=" << format_full(data.noise_sigma) << "\n";
  meta << "seed=" << data.seed << "\n";
  meta << "has_clean=" << (data.clean_copy ? 1 : 0) << "\n";
  write_text_file(base + ".meta", meta.str());
}

Dataset load_dataset_csv(const std::string& base, std::string* system_name,
                         SystemParams* params) {
  Dataset ds;
  bool has_clean = false;
  std::istringstream meta(read_text_file(base + ".meta"));
  std::string line;
  while (std::getline(meta, line)) {
    const auto eq = line.find('=');
    if (eq == std::string::npos) continue;
    const std::string key = line.substr(0, eq);
    const std::string value = line.substr(eq + 1);
    if (key == "system") {
      if (system_name) *system_name = value;
    } else if (key.rfind("param.", 0) == 0) {
      if (params) {
        Vec vals;
        std::stringstream ss(value);
        std::string cell;
        while (std::getline(ss, cell, ';')) vals.push_back(std::stod(cell));
        (*params)[key.substr(6)] = vals;
      }
    } else if (key == "dt") {
      ds.dt = std::stod(value);
    } else if (key == "sigma") {
      ds.noise_sigma = std::stod(value);
    } else if (key == "seed") {
      ds.seed = std::stoull(value);
    } else if (key == "has_clean") {
      has_clean = value == "1";
    }
  }
  ds.trajectories = read_trajectories_csv(base + ".csv", ds.dt);
  if (has_clean) ds.clean_copy = read_trajectories_csv(base + "_clean.csv", ds.dt);
  return ds;
}

namespace {

json library_to_json(const BasisLibrary& lib) {
  json terms = json::array();
  for (const Term& t : lib.terms) {
    json jt;
    if (t.kind == TermKind::monomial) {
      jt["kind"] = "monomial";
      jt["exponents"] = t.exponents;
    } else {
      jt["kind"] = "trig";
      jt["shape"] = t.trig_shape == TrigShape::sin ? "sin" : "cos";
      jt["init_frequency"] = t.init_frequency;
    }
    terms.push_back(jt);
  }
  return json{{"dimension", lib.dimension},
              {"degree", lib.degree},
              {"constant", lib.includes_constant},
              {"var_names", lib.var_names},
              {"terms", terms}};
}

BasisLibrary library_from_json(const json& j) {
  BasisLibrary lib;
  lib.dimension = j.at("dimension").get<int>();
  lib.degree = j.at("degree").get<int>();
  lib.includes_constant = j.at("constant").get<bool>();
  lib.var_names = j.at("var_names").get<std::vector<std::string>>();
  for (const json& jt : j.at("terms")) {
    Term t;
    if (jt.at("kind") == "monomial") {
      t.kind = TermKind::monomial;
      t.exponents = jt.at("exponents").get<std::vector<int>>();
    } else {
      t.kind = TermKind::trig;
      t.trig_shape = jt.at("shape") == "sin" ? TrigShape::sin : TrigShape::cos;
      t.init_frequency = jt.value("init_frequency", 1.0);
    }
    lib.terms.push_back(std::move(t));
  }
  lib.rebuild_offsets();
  return lib;
}

}  // namespace

json model_to_json(const PseudoHamiltonianModel& m) {
  json j;
  j["type"] = "phsi";
  j["dim"] = m.dim;
  j["S"] = m.S;
  j["h_lib"] = library_to_json(m.h_lib);
  j["damping_components"] = m.damping_components;
  switch (m.force_kind) {
    case ForceKind::none: j["force"] = {{"kind", "none"}}; break;
    case ForceKind::symbolic:
      j["force"] = {{"kind", "symbolic"},
                    {"lib", library_to_json(m.sym_force.lib)},
                    {"inputs", m.sym_force.inputs},
                    {"components", m.sym_force.out_components}};
      break;
    case ForceKind::mlp:
      j["force"] = {{"kind", "mlp"},
                    {"layers", m.mlp_force.layer_sizes},
                    {"components", m.mlp_force.out_components}};
      break;
  }
  j["params"] = m.params;
  j["pruned"] = m.pruned;
  j["prunable"] = m.prunable;
  return j;
}

PseudoHamiltonianModel model_from_json(const json& j) {
  PseudoHamiltonianModel m;
  m.dim = j.at("dim").get<int>();
  m.S = j.at("S").get<Mat>();
  m.h_lib = library_from_json(j.at("h_lib"));
  m.damping_components = j.at("damping_components").get<std::vector<int>>();
  const json& f = j.at("force");
  if (f.at("kind") == "symbolic") {
    m.force_kind = ForceKind::symbolic;
    m.sym_force.lib = library_from_json(f.at("lib"));
    m.sym_force.inputs = f.at("inputs").get<std::vector<int>>();
    m.sym_force.out_components = f.at("components").get<std::vector<int>>();
  } else if (f.at("kind") == "mlp") {
    m.force_kind = ForceKind::mlp;
    m.mlp_force.layer_sizes = f.at("layers").get<std::vector<int>>();
    m.mlp_force.out_components = f.at("components").get<std::vector<int>>();
  }
  m.params = j.at("params").get<std::vector<double>>();
  m.pruned = j.at("pruned").get<std::vector<std::uint8_t>>();
  m.prunable = j.at("prunable").get<std::vector<std::uint8_t>>();
  if (static_cast<int>(m.params.size()) != m.n_params())
    throw std::runtime_error("model_from_json: inconsistent parameter count");
  return m;
}

json model_to_json(const BaselineModel& m) {
  return json{{"type", "baseline"},
              {"n_state", m.n_state},
              {"time_augmented", m.time_augmented},
              {"lib", library_to_json(m.lib)},
              {"params", m.params},
              {"pruned", m.pruned},
              {"prunable", m.prunable}};
}

BaselineModel baseline_from_json(const json& j) {
  BaselineModel m;
  m.n_state = j.at("n_state").get<int>();
  m.time_augmented = j.at("time_augmented").get<bool>();
  m.lib = library_from_json(j.at("lib"));
  m.params = j.at("params").get<std::vector<double>>();
  m.pruned = j.at("pruned").get<std::vector<std::uint8_t>>();
  m.prunable = j.at("prunable").get<std::vector<std::uint8_t>>();
  return m;
}

json history_to_json(const TrainHistory& h) {
  json events = json::array();
  for (const PruneEvent& e : h.prune_events)
    events.push_back(json{{"epoch", e.epoch}, {"slot", e.slot}});
  return json{{"epoch_loss", h.epoch_loss},
              {"epoch_data_loss", h.epoch_data_loss},
              {"epoch_reg_loss", h.epoch_reg_loss},
              {"active_counts", h.active_counts},
              {"prune_events", events},
              {"final_mask", h.final_mask},
              {"diverged", h.diverged}};
}

void write_coeff_csv(const std::string& path, const std::vector<CoeffRow>& rows) {
  std::ostringstream out;
  out << "section,term,truth,learned,abs_error\n";
  for (const CoeffRow& r : rows) {
    out << r.section << "," << r.term << ",";
    if (r.has_truth)
      out << format_full(r.truth) << "," << format_full(r.learned) << ","
          << format_full(std::abs(r.learned - r.truth));
    else
      out << "," << format_full(r.learned) << ",";
    out << "\n";
  }
  write_text_file(path, out.str());
}

void write_errors_csv(const std::string& path, const Vec& per_init, int blowups) {
  std::ostringstream out;
  out << "init,l2_error\n";
  double sum = 0.0;
  for (std::size_t i = 0; i < per_init.size(); ++i) {
    out << i << "," << format_full(per_init[i]) << "\n";
    sum += per_init[i];
  }
  out << "mean," << format_full(per_init.empty() ? 0.0 : sum / per_init.size()) << "\n";
  out << "blowups," << blowups << "\n";
  write_text_file(path, out.str());
}

void write_grid_csv(const std::string& path, const std::string& corner,
                    const std::vector<std::string>& row_labels,
                    const std::vector<std::string>& col_labels, const Mat& values) {
  std::ostringstream out;
  out << corner;
  for (const std::string& c : col_labels) out << "," << c;
  out << "\n";
  for (std::size_t r = 0; r < row_labels.size(); ++r) {
    out << row_labels[r];
    for (std::size_t c = 0; c < col_labels.size(); ++c)
      out << "," << format_full(values[r][c]);
    out << "\n";
  }
  write_text_file(path, out.str());
}

void write_svg_polylines(const std::string& path, const std::vector<Series>& series,
                         int width, int height) {
  double xmin = 0, xmax = 1, ymin = 0, ymax = 1;
  bool first = true;
  for (const Series& s : series)
    for (const auto& [x, y] : s.second) {
      if (!std::isfinite(x) || !std::isfinite(y)) continue;
      if (first) {
        xmin = xmax = x;
        ymin = ymax = y;
        first = false;
      } else {
        xmin = std::min(xmin, x);
        xmax = std::max(xmax, x);
        ymin = std::min(ymin, y);
        ymax = std::max(ymax, y);
      }
    }
  if (xmax == xmin) xmax = xmin + 1;
  if (ymax == ymin) ymax = ymin + 1;
  const double margin = 40.0;
  auto sx = [&](double x) {
    return margin + (x - xmin) / (xmax - xmin) * (width - 2 * margin);
  };
  auto sy = [&](double y) {
    return height - margin - (y - ymin) / (ymax - ymin) * (height - 2 * margin);
  };
  static const char* kColors[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728",
                                  "#9467bd", "#8c564b", "#e377c2", "#7f7f7f"};
  std::ostringstream out;
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\""
      << height << "\">\n";
  out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  int ci = 0;
  for (const Series& s : series) {
    out << "<polyline fill=\"none\" stroke=\"" << kColors[ci++ % 8]
        << "\" stroke-width=\"1.5\" points=\"";
    for (const auto& [x, y] : s.second) {
      if (!std::isfinite(x) || !std::isfinite(y)) continue;
      char buf[64];
      std::snprintf(buf, sizeof(buf), "%.2f,%.2f ", sx(x), sy(y));
      out << buf;
    }
    out << "\"/>\n";
  }
  // legend
  for (std::size_t i = 0; i < series.size(); ++i) {
    out << "<text x=\"" << (margin + 4) << "\" y=\"" << (margin + 16.0 * (i + 1))
        << "\" font-size=\"12\" fill=\"" << kColors[i % 8] << "\">" << series[i].first
        << "</text>\n";
  }
  out << "</svg>\n";
  write_text_file(path, out.str());
}

}  // namespace phsysid
