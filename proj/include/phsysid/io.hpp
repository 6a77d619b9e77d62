#pragma once

#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "phsysid/dynamics.hpp"
#include "phsysid/models.hpp"
#include "phsysid/training.hpp"

namespace phsysid {

/// Formats a double with 17 significant digits (lossless round trip).
std::string format_full(double v);

void write_text_file(const std::string& path, const std::string& content);
std::string read_text_file(const std::string& path);

/// Writes `<base>.csv` with header traj_id,t,x0,...,x{d-1} plus the sidecar
/// `<base>.meta` (key=value lines: system, params, dt, sigma, seed). The
/// clean mirror, when present, goes to `<base>_clean.csv`.
void save_dataset_csv(const Dataset& data, const std::string& base,
                      const std::string& system_name, const SystemParams& params);

/// Rebuilds a dataset from `<base>.csv` / `<base>.meta` (+ clean mirror when
/// present). States round-trip exactly at 17 significant digits.
Dataset load_dataset_csv(const std::string& base, std::string* system_name = nullptr,
                         SystemParams* params = nullptr);

nlohmann::json model_to_json(const PseudoHamiltonianModel& m);
PseudoHamiltonianModel model_from_json(const nlohmann::json& j);

nlohmann::json model_to_json(const BaselineModel& m);
BaselineModel baseline_from_json(const nlohmann::json& j);

nlohmann::json history_to_json(const TrainHistory& h);

struct CoeffRow {
  std::string section;  // "H", "R", "F", "g[i]"
  std::string term;
  double truth = 0.0;
  double learned = 0.0;
  bool has_truth = false;
};

/// columns: section, term, truth, learned, abs_error
void write_coeff_csv(const std::string& path, const std::vector<CoeffRow>& rows);

void write_errors_csv(const std::string& path, const Vec& per_init, int blowups);

/// Grid (heatmap) values as CSV: first column = row label.
void write_grid_csv(const std::string& path, const std::string& corner,
                    const std::vector<std::string>& row_labels,
                    const std::vector<std::string>& col_labels, const Mat& values);

using Series = std::pair<std::string, std::vector<std::pair<double, double>>>;

/// Minimal dependency-free line chart: one polyline per series.
void write_svg_polylines(const std::string& path, const std::vector<Series>& series,
                         int width = 720, int height = 420);

}  // namespace phsysid
