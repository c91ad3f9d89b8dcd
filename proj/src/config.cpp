#include "polyfk/config.hpp"

#include "polyfk/mesh_io.hpp"
#include "polyfk/voronoi.hpp"

#include <cmath>
#include <fstream>
#include <functional>
#include <iomanip>
#include <map>
#include <set>
#include <sstream>
#include <vector>

namespace polyfk {

namespace {

std::string trim(const std::string &s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos)
    return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

[[noreturn]] void fail(const std::string &key, const std::string &msg) {
  throw ConfigError(key + ": " + msg);
}

double to_double(const std::string &key, const std::string &v) {
  try {
    std::size_t n = 0;
    const double d = std::stod(v, &n);
    if (n == v.size() && std::isfinite(d))
      return d;
  } catch (const std::exception &) {
  }
  fail(key, "expected a finite number, got '" + v + "'");
}

long long to_integer(const std::string &key, const std::string &v) {
  try {
    std::size_t n = 0;
    const long long i = std::stoll(v, &n);
    if (n == v.size())
      return i;
  } catch (const std::exception &) {
  }
  fail(key, "expected an integer, got '" + v + "'");
}

std::string fmt(double d) {
  std::ostringstream os;
  os << std::setprecision(17) << d;
  return os.str();
}

void check_choice(const std::string &key, const std::string &v,
                  std::initializer_list<const char *> choices) {
  for (const char *c : choices)
    if (v == c)
      return;
  std::string list;
  for (const char *c : choices)
    list += std::string(list.empty() ? "" : ", ") + c;
  fail(key, "unknown value '" + v + "' (expected one of " + list + ")");
}

/// One configurable field: section, key, setter and printer.
struct Field {
  std::string section, key;
  std::function<void(const std::string &path, const std::string &value)> set;
  std::function<std::string()> get;
};

std::vector<Field> fields(RunSpec &s) {
  std::vector<Field> f;
  auto num = [&f](const char *sec, const char *key, double &ref) {
    f.push_back({sec, key, [&ref](const std::string &p, const std::string &v) { ref = to_double(p, v); },
                 [&ref] { return fmt(ref); }});
  };
  auto integer = [&f](const char *sec, const char *key, int &ref) {
    f.push_back({sec, key,
                 [&ref](const std::string &p, const std::string &v) {
                   const long long i = to_integer(p, v);
                   if (i < std::numeric_limits<int>::min() || i > std::numeric_limits<int>::max())
                     fail(p, "integer out of range");
                   ref = static_cast<int>(i);
                 },
                 [&ref] { return std::to_string(ref); }});
  };
  auto text = [&f](const char *sec, const char *key, std::string &ref) {
    f.push_back({sec, key, [&ref](const std::string &, const std::string &v) { ref = v; },
                 [&ref] { return ref; }});
  };

  MeshSpec &m = s.mesh;
  text("mesh", "kind", m.kind);
  integer("mesh", "elements", m.elements);
  num("mesh", "h_target", m.h_target);
  num("mesh", "h_tolerance", m.h_tolerance);
  f.push_back({"mesh", "domain",
               [&m](const std::string &p, const std::string &v) {
                 std::istringstream is(v);
                 std::vector<std::string> parts;
                 std::string w;
                 while (is >> w)
                   parts.push_back(w);
                 if (parts.size() != 4)
                   fail(p, "expected 'x0 y0 x1 y1'");
                 m.domain.lo = Point(to_double(p, parts[0]), to_double(p, parts[1]));
                 m.domain.hi = Point(to_double(p, parts[2]), to_double(p, parts[3]));
               },
               [&m] {
                 return fmt(m.domain.lo.x()) + " " + fmt(m.domain.lo.y()) + " " +
                        fmt(m.domain.hi.x()) + " " + fmt(m.domain.hi.y());
               }});
  f.push_back({"mesh", "seed",
               [&m](const std::string &p, const std::string &v) {
                 const long long i = to_integer(p, v);
                 if (i < 0)
                   fail(p, "seed must be non-negative");
                 m.seed = static_cast<std::uint64_t>(i);
               },
               [&m] { return std::to_string(m.seed); }});
  integer("mesh", "lloyd_iters", m.lloyd_iters);
  text("mesh", "boundary", m.boundary);
  text("mesh", "file", m.file);
  integer("mesh", "degree", m.degree);
  num("mesh", "radius", m.radius);
  integer("mesh", "rings", m.rings);
  num("mesh", "inner_radius", m.inner_radius);
  integer("mesh", "target_elements", m.target_elements);

  ModelSpec &md = s.model;
  text("model", "preset", md.preset);
  num("model", "d", md.d);
  num("model", "alpha", md.alpha);
  num("model", "v", md.wave.v);
  num("model", "psi0", md.wave.psi0);
  num("model", "chi0", md.wave.chi0);
  num("model", "alpha_white", md.disk.alpha_white);
  num("model", "alpha_grey", md.disk.alpha_grey);
  num("model", "d_ext", md.disk.d_ext);
  num("model", "d_axn_white", md.disk.d_axn_white);
  num("model", "d_axn_grey", md.disk.d_axn_grey);

  RunConfig &r = s.run;
  num("time", "theta", r.theta);
  num("time", "dt", r.dt);
  num("time", "T", r.T);
  num("newton", "tol", r.newton.tol);
  integer("newton", "max_iters", r.newton.max_iters);
  num("newton", "relaxation", r.newton.relaxation);
  num("newton", "divergence_bound", r.newton.divergence_bound);
  f.push_back({"newton", "jacobian",
               [&r](const std::string &p, const std::string &v) {
                 if (v != "frozen_eta" && v != "exact")
                   fail(p, "expected frozen_eta or exact");
                 r.newton.exact_penalty_jacobian = v == "exact";
               },
               [&r] {
                 return std::string(r.newton.exact_penalty_jacobian ? "exact" : "frozen_eta");
               }});
  f.push_back({"newton", "line_search",
               [&r](const std::string &p, const std::string &v) {
                 if (v != "true" && v != "false")
                   fail(p, "expected true or false");
                 r.newton.line_search = v == "true";
               },
               [&r] { return std::string(r.newton.line_search ? "true" : "false"); }});
  f.push_back({"scheme", "name",
               [&r](const std::string &p, const std::string &v) {
                 try {
                   r.scheme = parse_scheme(v);
                 } catch (const std::invalid_argument &e) {
                   fail(p, e.what());
                 }
               },
               [&r] { return to_string(r.scheme); }});
  num("scheme", "eta0", r.eta0);
  num("scheme", "epsilon", r.epsilon);
  integer("scheme", "quadrature_offset", s.quadrature_offset);

  OutputSpec &o = s.output;
  integer("output", "every", o.every);
  integer("output", "vtk_every", o.vtk_every);
  num("output", "c_crit", o.c_crit);

  InitialSpec &in = s.initial;
  text("initial", "preset", in.preset);
  num("initial", "c_min", in.c_min);
  num("initial", "center_x", in.center_x);
  num("initial", "center_y", in.center_y);
  num("initial", "radius", in.radius);
  num("initial", "amplitude", in.amplitude);
  num("initial", "value", in.value);
  text("initial", "file", in.file);
  return f;
}

const std::set<std::string> kMandatory = {"time.theta", "time.dt", "time.T", "scheme.eta0"};

void validate(const RunSpec &s) {
  const MeshSpec &m = s.mesh;
  check_choice("mesh.kind", m.kind, {"voronoi", "voronoi_h", "disk", "file"});
  check_choice("mesh.boundary", m.boundary, {"dirichlet", "neumann", "wave", "file"});
  if (m.degree < 1)
    fail("mesh.degree", "polynomial degree must be >= 1");
  if (m.kind == "voronoi" && m.elements < 1)
    fail("mesh.elements", "must be positive");
  if (m.kind == "voronoi_h" && !(m.h_target > 0.0))
    fail("mesh.h_target", "must be positive for kind voronoi_h");
  if (m.kind == "file" && m.file.empty())
    fail("mesh.file", "required for kind file");
  if (m.kind != "file" && m.boundary == "file")
    fail("mesh.boundary", "'file' requires mesh.kind = file");
  if (!(m.domain.width() > 0.0 && m.domain.height() > 0.0))
    fail("mesh.domain", "empty rectangle");
  if (m.lloyd_iters < 0)
    fail("mesh.lloyd_iters", "must be non-negative");
  if (m.kind == "disk") {
    if (!(m.radius > 0.0) || m.rings < 1)
      fail("mesh.radius", "disk needs positive radius and rings");
    if (m.target_elements < 2)
      fail("mesh.target_elements", "need at least two aggregates (two labels)");
  }

  check_choice("model.preset", s.model.preset, {"manufactured", "wave", "disk", "uniform"});
  if (s.model.preset == "disk" && m.kind != "disk")
    fail("model.preset", "disk preset requires mesh.kind = disk");
  if (!(s.model.d > 0.0))
    fail("model.d", "diffusivity must be positive");

  const RunConfig &r = s.run;
  if (!(r.theta >= 0.0 && r.theta <= 1.0))
    fail("time.theta", "theta out of range [0, 1]");
  if (!(r.dt > 0.0))
    fail("time.dt", "dt must be positive");
  if (!(r.T > 0.0))
    fail("time.T", "T must be positive");
  if (r.dt > r.T * (1.0 + 1e-12))
    fail("time.dt", "dt exceeds T: zero steps requested");
  if (!(r.eta0 > 0.0))
    fail("scheme.eta0", "must be positive");
  if (!(r.epsilon >= 0.0))
    fail("scheme.epsilon", "must be non-negative");
  if (s.quadrature_offset < 0)
    fail("scheme.quadrature_offset", "must be non-negative");
  if (!(r.newton.tol > 0.0))
    fail("newton.tol", "must be positive");
  if (r.newton.max_iters < 1)
    fail("newton.max_iters", "must be at least 1");
  if (!(r.newton.relaxation > 0.0 && r.newton.relaxation <= 1.0))
    fail("newton.relaxation", "relaxation out of range (0, 1]");
  if (!(r.newton.divergence_bound > 0.0))
    fail("newton.divergence_bound", "must be positive");

  if (s.output.every < 1)
    fail("output.every", "must be at least 1");
  if (s.output.vtk_every < 0)
    fail("output.vtk_every", "must be non-negative");

  check_choice("initial.preset", s.initial.preset,
               {"manufactured", "wave", "seeded_region", "constant", "file"});
  if (!(s.initial.c_min > 0.0))
    fail("initial.c_min", "floor must be positive");
  if (s.initial.preset == "constant" && s.initial.value < 0.0)
    fail("initial.value", "invalid concentration (negative)");
  if (s.initial.preset == "seeded_region" &&
      (!(s.initial.radius > 0.0) || s.initial.amplitude < 0.0))
    fail("initial.radius", "seeded_region needs radius > 0 and amplitude >= 0");
  if (s.initial.preset == "file" && s.initial.file.empty())
    fail("initial.file", "required for preset file");
  if (s.initial.preset == "manufactured" && s.model.preset != "manufactured")
    fail("initial.preset", "manufactured initial data requires model.preset = manufactured");
  if (s.initial.preset == "wave" && s.model.preset != "wave")
    fail("initial.preset", "wave initial data requires model.preset = wave");
}

} // namespace

RunSpec parse_config(std::istream &in, const std::string &source) {
  RunSpec spec;
  std::vector<Field> table = fields(spec);
  std::map<std::string, Field *> index;
  std::set<std::string> sections;
  for (Field &f : table) {
    index[f.section + "." + f.key] = &f;
    sections.insert(f.section);
  }

  std::string line, section;
  int lineno = 0;
  bool header = false;
  std::set<std::string> seen;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos)
      line.resize(hash);
    line = trim(line);
    if (line.empty())
      continue;
    const std::string where = source + ":" + std::to_string(lineno) + ": ";
    if (!header) {
      if (line != "polyfk-config v1")
        throw ConfigError(where + "expected header 'polyfk-config v1'");
      header = true;
      continue;
    }
    if (line.front() == '[') {
      if (line.back() != ']')
        throw ConfigError(where + "malformed section header");
      section = trim(line.substr(1, line.size() - 2));
      if (!sections.count(section))
        throw ConfigError(where + "unknown section [" + section + "]");
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError(where + "expected 'key = value'");
    if (section.empty())
      throw ConfigError(where + "key outside of any section");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    const std::string path = section + "." + key;
    const auto it = index.find(path);
    if (it == index.end())
      throw ConfigError(where + "unknown key '" + path + "'");
    if (!seen.insert(path).second)
      throw ConfigError(where + "duplicate key '" + path + "'");
    try {
      it->second->set(path, value);
    } catch (const ConfigError &e) {
      throw ConfigError(where + e.what());
    }
  }
  if (!header)
    throw ConfigError(source + ": empty config (missing 'polyfk-config v1' header)");
  for (const std::string &k : kMandatory)
    if (!seen.count(k))
      throw ConfigError(source + ": missing mandatory key '" + k + "'");
  validate(spec);
  return spec;
}

RunSpec parse_config(const std::filesystem::path &path) {
  std::ifstream in(path);
  if (!in)
    throw ConfigError("cannot read config '" + path.string() + "'");
  return parse_config(in, path.string());
}

std::string RunSpec::normalized() const {
  RunSpec copy = *this;
  std::vector<Field> table = fields(copy);
  std::ostringstream os;
  os << "polyfk-config v1\n";
  std::string section;
  for (const Field &f : table) {
    if (f.section != section) {
      section = f.section;
      os << "\n[" << section << "]\n";
    }
    os << f.key << " = " << f.get() << '\n';
  }
  return os.str();
}

// ---------------------------------------------------------------------------

Problem build_problem(const RunSpec &spec, std::optional<std::uint64_t> seed_override) {
  const MeshSpec &ms = spec.mesh;
  const std::uint64_t seed = seed_override.value_or(ms.seed);
  Problem pb;

  std::optional<DiskCase> disk;
  PolyMesh mesh;
  if (ms.kind == "voronoi") {
    mesh = generate_voronoi(ms.elements, ms.domain, seed, ms.lloyd_iters);
  } else if (ms.kind == "voronoi_h") {
    bool found = false;
    mesh = voronoi_for_target_h(ms.h_target, ms.domain, seed, ms.lloyd_iters,
                                ms.h_tolerance, &found);
    pb.mesh_tolerance_met = found;
  } else if (ms.kind == "disk") {
    DiskParams dp = spec.model.disk;
    dp.radius = ms.radius;
    dp.rings = ms.rings;
    dp.inner_radius = ms.inner_radius;
    dp.target_elements = ms.target_elements;
    disk = disk_case(dp);
    mesh = *disk->mesh;
  } else {
    mesh = read_mesh(ms.file);
  }
  if (ms.boundary == "dirichlet" || ms.boundary == "neumann") {
    const BoundaryTag tag =
        ms.boundary == "dirichlet" ? BoundaryTag::dirichlet : BoundaryTag::neumann;
    retag_boundary(mesh, [tag](const Face &) { return tag; });
  } else if (ms.boundary == "wave") {
    mesh = wave_boundary_tags(std::move(mesh));
  }
  pb.mesh = std::make_shared<const PolyMesh>(std::move(mesh));
  pb.space = std::make_shared<const DGSpace>(pb.mesh, ms.degree,
                                             QuadratureOptions{spec.quadrature_offset});

  const ModelSpec &md = spec.model;
  ScalarField c0;
  std::optional<WaveCase> wave;
  if (md.preset == "manufactured") {
    const ManufacturedCase mc = manufactured_case();
    pb.model = mc.model(*pb.mesh);
    pb.exact = mc.exact;
    c0 = [c = mc.exact.c](const Point &x) { return c(x, 0.0); };
  } else if (md.preset == "wave") {
    WaveParams wp = md.wave;
    wp.d = md.d;
    wp.alpha = md.alpha;
    wave = wave_case(wp);
    pb.model = wave->model(*pb.mesh);
    pb.exact = wave->exact();
    c0 = wave->initial_c();
  } else if (md.preset == "disk") {
    pb.model = disk->model;
  } else {
    pb.model = isotropic_model(*pb.mesh, md.d, md.alpha);
  }

  const InitialSpec &is = spec.initial;
  if (is.preset == "seeded_region") {
    const Point c(is.center_x, is.center_y);
    const double amp = is.amplitude, r2 = 2.0 * is.radius * is.radius;
    c0 = [c, amp, r2](const Point &x) { return amp * std::exp(-(x - c).squaredNorm() / r2); };
  } else if (is.preset == "constant") {
    c0 = [v = is.value](const Point &) { return v; };
  }

  const bool log_var = spec.run.scheme == Scheme::exp_transform;
  if (is.preset == "file") {
    std::ifstream in(is.file);
    if (!in)
      throw ConfigError("initial.file: cannot read '" + is.file + "'");
    std::vector<double> v;
    double x;
    while (in >> x)
      v.push_back(x);
    if (static_cast<int>(v.size()) != pb.space->num_dofs())
      throw ConfigError("initial.file: expected " + std::to_string(pb.space->num_dofs()) +
                        " dofs, found " + std::to_string(v.size()));
    pb.initial.dofs = Eigen::Map<Eigen::VectorXd>(v.data(), v.size());
    pb.initial.variable = log_var ? Variable::log_concentration : Variable::concentration;
  } else if (log_var) {
    pb.initial = initial_lambda(*pb.space, c0, is.c_min);
  } else {
    pb.initial = initial_concentration(*pb.space, c0);
  }
  pb.initial.time = 0.0;
  return pb;
}

} // namespace polyfk
