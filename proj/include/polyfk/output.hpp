#pragma once

#include "polyfk/dgspace.hpp"
#include "polyfk/model.hpp"
#include "polyfk/solver.hpp"

#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

namespace polyfk {

/// One row of the time-series CSV:
///   t,S_h,min_c,mean_c_global,mean_c_label_<l>...
struct SeriesRow {
  double t = 0.0;
  double entropy = 0.0;
  double min_c = 0.0;
  double mean_global = 0.0;
  std::map<int, double> mean_by_label;
};

SeriesRow series_row(const DGSpace &space, const State &state);

void write_series_csv(std::ostream &os, const std::vector<SeriesRow> &rows);
void write_series_csv(const std::filesystem::path &path, const std::vector<SeriesRow> &rows);

/// element_id,label,t_activate with "NA" for elements never activated.
void write_activation_csv(std::ostream &os, const PolyMesh &mesh,
                          const std::vector<std::optional<double>> &activation);
void write_activation_csv(const std::filesystem::path &path, const PolyMesh &mesh,
                          const std::vector<std::optional<double>> &activation);

/// step,t,newton_iters,residual,stagnated,min_c,S_h,wall_seconds
void write_step_stats_csv(const std::filesystem::path &path,
                          const std::vector<StepStats> &stats);

/// Legacy-VTK ASCII polygonal dataset of the concentration:
///   cell data  c_mean (element mean), label, t_activate (-1 if never / unknown)
///   point data c (average of the incident elements' traces at each vertex)
/// Numbers are written with 17 significant digits, so output is bit-stable.
void write_vtk(std::ostream &os, const DGSpace &space, const State &state,
               const std::vector<std::optional<double>> *activation = nullptr,
               const std::string &title = "polyfk concentration");
void write_vtk(const std::filesystem::path &path, const DGSpace &space, const State &state,
               const std::vector<std::optional<double>> *activation = nullptr,
               const std::string &title = "polyfk concentration");

/// Build and environment facts for run metadata.
std::string git_commit();
std::string host_name();

/// Opens `path` for writing or throws naming the path.
std::ofstream open_output(const std::filesystem::path &path);

} // namespace polyfk
