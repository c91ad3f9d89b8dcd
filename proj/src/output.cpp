#include "polyfk/output.hpp"

#include "polyfk/forms.hpp"
#include "polyfk/verify.hpp"

#include <unistd.h>

#include <cmath>
#include <fstream>
#include <iomanip>
#include <set>
#include <stdexcept>

#ifndef POLYFK_GIT_COMMIT
#define POLYFK_GIT_COMMIT "unknown"
#endif

namespace polyfk {

std::ofstream open_output(const std::filesystem::path &path) {
  std::ofstream os(path);
  if (!os)
    throw std::runtime_error("cannot open '" + path.string() + "' for writing");
  return os;
}

SeriesRow series_row(const DGSpace &space, const State &state) {
  SeriesRow r;
  r.t = state.time;
  r.entropy = state.variable == Variable::log_concentration
                  ? discrete_entropy(space, state.dofs)
                  : std::numeric_limits<double>::quiet_NaN();
  r.min_c = min_concentration(space, state);
  const RegionMeans m = region_means(space, state);
  r.mean_global = m.global;
  r.mean_by_label = m.by_label;
  return r;
}

namespace {

void put(std::ostream &os, double v) {
  if (std::isnan(v))
    os << "NA";
  else
    os << v;
}

} // namespace

void write_series_csv(std::ostream &os, const std::vector<SeriesRow> &rows) {
  std::set<int> labels;
  for (const SeriesRow &r : rows)
    for (const auto &kv : r.mean_by_label)
      labels.insert(kv.first);
  os << "t,S_h,min_c,mean_c_global";
  for (int l : labels)
    os << ",mean_c_label_" << l;
  os << '\n' << std::setprecision(17);
  for (const SeriesRow &r : rows) {
    put(os, r.t);
    os << ',';
    put(os, r.entropy);
    os << ',';
    put(os, r.min_c);
    os << ',';
    put(os, r.mean_global);
    for (int l : labels) {
      os << ',';
      const auto it = r.mean_by_label.find(l);
      put(os, it == r.mean_by_label.end() ? std::numeric_limits<double>::quiet_NaN()
                                          : it->second);
    }
    os << '\n';
  }
}

void write_series_csv(const std::filesystem::path &path, const std::vector<SeriesRow> &rows) {
  auto os = open_output(path);
  write_series_csv(os, rows);
}

void write_activation_csv(std::ostream &os, const PolyMesh &mesh,
                          const std::vector<std::optional<double>> &activation) {
  os << "element_id,label,t_activate\n" << std::setprecision(17);
  for (int k = 0; k < mesh.num_elements(); ++k) {
    os << k << ',' << mesh.labels[k] << ',';
    if (activation[k])
      os << *activation[k];
    else
      os << "NA";
    os << '\n';
  }
}

void write_activation_csv(const std::filesystem::path &path, const PolyMesh &mesh,
                          const std::vector<std::optional<double>> &activation) {
  auto os = open_output(path);
  write_activation_csv(os, mesh, activation);
}

void write_step_stats_csv(const std::filesystem::path &path,
                          const std::vector<StepStats> &stats) {
  auto os = open_output(path);
  os << "step,t,newton_iters,residual,stagnated,min_c,S_h,wall_seconds\n"
     << std::setprecision(17);
  for (const StepStats &s : stats) {
    os << s.step << ',' << s.time << ',' << s.newton_iters << ',' << s.residual << ','
       << (s.stagnated ? 1 : 0) << ',';
    put(os, s.min_c);
    os << ',';
    put(os, s.entropy);
    os << ',' << s.wall_seconds << '\n';
  }
}

void write_vtk(std::ostream &os, const DGSpace &space, const State &state,
               const std::vector<std::optional<double>> *activation,
               const std::string &title) {
  const PolyMesh &mesh = space.mesh();
  const int nv = static_cast<int>(mesh.vertices.size());
  const int ne = mesh.num_elements();
  const bool log_var = state.variable == Variable::log_concentration;

  std::vector<double> vsum(nv, 0.0);
  std::vector<int> vcount(nv, 0);
  for (int k = 0; k < ne; ++k)
    for (int v : mesh.elements[k]) {
      const double val = space.evaluate_at(state.dofs, k, mesh.vertices[v]);
      vsum[v] += log_var ? std::exp(val) : val;
      ++vcount[v];
    }
  const std::vector<double> means = element_means(space, state);

  os << "# vtk DataFile Version 3.0\n" << title << "\nASCII\nDATASET POLYDATA\n";
  os << std::setprecision(17);
  os << "POINTS " << nv << " double\n";
  for (const Point &p : mesh.vertices)
    os << p.x() << ' ' << p.y() << " 0\n";
  int size = 0;
  for (const auto &e : mesh.elements)
    size += static_cast<int>(e.size()) + 1;
  os << "POLYGONS " << ne << ' ' << size << '\n';
  for (const auto &e : mesh.elements) {
    os << e.size();
    for (int v : e)
      os << ' ' << v;
    os << '\n';
  }
  os << "CELL_DATA " << ne << "\nSCALARS c_mean double 1\nLOOKUP_TABLE default\n";
  for (double m : means)
    os << m << '\n';
  os << "SCALARS label int 1\nLOOKUP_TABLE default\n";
  for (int l : mesh.labels)
    os << l << '\n';
  os << "SCALARS t_activate double 1\nLOOKUP_TABLE default\n";
  for (int k = 0; k < ne; ++k)
    os << (activation && (*activation)[k] ? *(*activation)[k] : -1.0) << '\n';
  os << "POINT_DATA " << nv << "\nSCALARS c double 1\nLOOKUP_TABLE default\n";
  for (int v = 0; v < nv; ++v)
    os << (vcount[v] ? vsum[v] / vcount[v] : 0.0) << '\n';
}

void write_vtk(const std::filesystem::path &path, const DGSpace &space, const State &state,
               const std::vector<std::optional<double>> *activation,
               const std::string &title) {
  auto os = open_output(path);
  write_vtk(os, space, state, activation, title);
}

std::string git_commit() { return POLYFK_GIT_COMMIT; }

std::string host_name() {
  char buf[256] = {};
  if (gethostname(buf, sizeof(buf) - 1) != 0)
    return "unknown";
  return buf;
}

} // namespace polyfk
