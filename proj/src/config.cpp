#include "chb/config.hpp"

#include "chb/errors.hpp"
#include "chb/snapshot.hpp"
#include "chb/spectral.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <random>
#include <sstream>
#include <stdexcept>

namespace chb {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos)
    return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double to_double(const std::string& key, const std::string& v) {
  double out = 0.0;
  const char* end = v.data() + v.size();
  auto [ptr, ec] = std::from_chars(v.data(), end, out);
  if (ec != std::errc() || ptr != end || !std::isfinite(out))
    throw std::invalid_argument(key + " expects a finite number, got '" + v + "'");
  return out;
}

long long to_integer(const std::string& key, const std::string& v) {
  long long out = 0;
  const char* end = v.data() + v.size();
  auto [ptr, ec] = std::from_chars(v.data(), end, out);
  if (ec != std::errc() || ptr != end)
    throw std::invalid_argument(key + " expects an integer, got '" + v + "'");
  return out;
}

int to_int(const std::string& key, const std::string& v) {
  const long long x = to_integer(key, v);
  if (x < INT32_MIN || x > INT32_MAX)
    throw std::invalid_argument(key + " is out of range");
  return static_cast<int>(x);
}

std::uint64_t to_seed(const std::string& key, const std::string& v) {
  std::uint64_t out = 0;
  const char* end = v.data() + v.size();
  auto [ptr, ec] = std::from_chars(v.data(), end, out);
  if (ec != std::errc() || ptr != end)
    throw std::invalid_argument(key + " expects a non-negative integer, got '" + v + "'");
  return out;
}

std::vector<double> to_list(const std::string& key, const std::string& v) {
  std::vector<double> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ','))
    out.push_back(to_double(key, trim(item)));
  if (out.empty())
    throw std::invalid_argument(key + " expects a comma-separated list");
  return out;
}

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string fmt_list(const std::vector<double>& v) {
  std::string out;
  for (std::size_t k = 0; k < v.size(); ++k)
    out += (k ? "," : "") + fmt(v[k]);
  return out;
}

using Setter = std::function<void(RunConfig&, const std::string& key, const std::string& value)>;

const std::map<std::string, Setter>& setters() {
  static const std::map<std::string, Setter> table = {
      {"grid.nx", [](RunConfig& c, const std::string& k, const std::string& v) { c.grid.nx = to_int(k, v); }},
      {"grid.ny", [](RunConfig& c, const std::string& k, const std::string& v) { c.grid.ny = to_int(k, v); }},
      {"grid.lx", [](RunConfig& c, const std::string& k, const std::string& v) { c.grid.lx = to_double(k, v); }},
      {"grid.ly", [](RunConfig& c, const std::string& k, const std::string& v) { c.grid.ly = to_double(k, v); }},
      {"grid.bc",
       [](RunConfig& c, const std::string& k, const std::string& v) {
         if (v == "neumann")
           c.solver.bc = ScalarBC::Neumann;
         else if (v == "periodic")
           c.solver.bc = ScalarBC::Periodic;
         else
           throw std::invalid_argument(k + " must be neumann or periodic");
       }},
      {"phys.nu", [](RunConfig& c, const std::string& k, const std::string& v) { c.phys.nu = to_double(k, v); }},
      {"phys.eta", [](RunConfig& c, const std::string& k, const std::string& v) { c.phys.eta = to_double(k, v); }},
      {"phys.M", [](RunConfig& c, const std::string& k, const std::string& v) { c.phys.M = to_double(k, v); }},
      {"phys.eps", [](RunConfig& c, const std::string& k, const std::string& v) { c.phys.eps = to_double(k, v); }},
      {"phys.gamma",
       [](RunConfig& c, const std::string& k, const std::string& v) { c.phys.gamma = to_double(k, v); }},
      {"potential.kind",
       [](RunConfig& c, const std::string& k, const std::string& v) {
         if (v == "quartic")
           c.potential = Potential::quartic();
         else if (v == "polynomial") {
           if (c.potential.kind() != Potential::Kind::Polynomial)
             c.potential = Potential::polynomial({0.0, 0.0, -2.0, 0.0, 1.0});
         } else
           throw std::invalid_argument(k + " must be quartic or polynomial");
       }},
      {"potential.coeffs",
       [](RunConfig& c, const std::string& k, const std::string& v) {
         try {
           c.potential = Potential::polynomial(to_list(k, v));
         } catch (const std::invalid_argument& e) {
           const std::string msg = e.what();
           throw std::invalid_argument(msg.rfind(k, 0) == 0 ? msg : k + ": " + msg);
         }
       }},
      {"solver.dt", [](RunConfig& c, const std::string& k, const std::string& v) { c.solver.dt = to_double(k, v); }},
      {"solver.t_end",
       [](RunConfig& c, const std::string& k, const std::string& v) { c.solver.t_end = to_double(k, v); }},
      {"solver.stab",
       [](RunConfig& c, const std::string& k, const std::string& v) {
         if (v == "auto")
           c.solver.stab.reset();
         else
           c.solver.stab = to_double(k, v);
       }},
      {"solver.cadence",
       [](RunConfig& c, const std::string& k, const std::string& v) { c.solver.cadence = to_int(k, v); }},
      {"solver.snapshot_every",
       [](RunConfig& c, const std::string& k, const std::string& v) { c.solver.snapshot_every = to_int(k, v); }},
      {"flow.tol", [](RunConfig& c, const std::string& k, const std::string& v) { c.solver.flow.tol = to_double(k, v); }},
      {"flow.max_iters",
       [](RunConfig& c, const std::string& k, const std::string& v) { c.solver.flow.max_iters = to_int(k, v); }},
      {"ic.kind",
       [](RunConfig& c, const std::string& k, const std::string& v) {
         if (v == "constant")
           c.ic.kind = IcKind::Constant;
         else if (v == "spinodal")
           c.ic.kind = IcKind::Spinodal;
         else if (v == "stripe")
           c.ic.kind = IcKind::Stripe;
         else if (v == "file")
           c.ic.kind = IcKind::File;
         else
           throw std::invalid_argument(k + " must be constant, spinodal, stripe or file");
       }},
      {"ic.value", [](RunConfig& c, const std::string& k, const std::string& v) { c.ic.value = to_double(k, v); }},
      {"ic.mean", [](RunConfig& c, const std::string& k, const std::string& v) { c.ic.mean = to_double(k, v); }},
      {"ic.amplitude",
       [](RunConfig& c, const std::string& k, const std::string& v) { c.ic.amplitude = to_double(k, v); }},
      {"ic.seed", [](RunConfig& c, const std::string& k, const std::string& v) { c.ic.seed = to_seed(k, v); }},
      {"ic.smooth", [](RunConfig& c, const std::string& k, const std::string& v) { c.ic.smooth = to_double(k, v); }},
      {"ic.width", [](RunConfig& c, const std::string& k, const std::string& v) { c.ic.width = to_double(k, v); }},
      {"ic.path", [](RunConfig& c, const std::string&, const std::string& v) { c.ic.path = v; }},
      {"experiment",
       [](RunConfig& c, const std::string& k, const std::string& v) {
         if (v != "run" && v != "sweep" && v != "depend" && v != "equilibrium" && v != "probe")
           throw std::invalid_argument(k + " must be run, sweep, depend, equilibrium or probe");
         c.experiment = v;
       }},
      {"output.dir", [](RunConfig& c, const std::string&, const std::string& v) { c.output_dir = v; }},
      {"sweep.nu", [](RunConfig& c, const std::string& k, const std::string& v) { c.sweep.nu = to_list(k, v); }},
      {"depend.delta",
       [](RunConfig& c, const std::string& k, const std::string& v) { c.depend.delta = to_double(k, v); }},
      {"depend.seed", [](RunConfig& c, const std::string& k, const std::string& v) { c.depend.seed = to_seed(k, v); }},
      {"equilibrium.window_lo",
       [](RunConfig& c, const std::string& k, const std::string& v) { c.equilibrium.window_lo = to_double(k, v); }},
      {"equilibrium.window_hi",
       [](RunConfig& c, const std::string& k, const std::string& v) { c.equilibrium.window_hi = to_double(k, v); }},
      {"equilibrium.sample_every",
       [](RunConfig& c, const std::string& k, const std::string& v) { c.equilibrium.sample_every = to_double(k, v); }},
      {"probe.radii", [](RunConfig& c, const std::string& k, const std::string& v) { c.probe.radii = to_list(k, v); }},
      {"probe.mean", [](RunConfig& c, const std::string& k, const std::string& v) { c.probe.mean = to_double(k, v); }},
      {"probe.seed", [](RunConfig& c, const std::string& k, const std::string& v) { c.probe.seed = to_seed(k, v); }},
  };
  return table;
}

void set_key(RunConfig& cfg, const std::string& key, const std::string& value, int line) {
  const auto& table = setters();
  const auto it = table.find(key);
  if (it == table.end())
    throw ConfigError("unknown key '" + key + "'", line);
  if (value.empty())
    throw ConfigError(key + " has an empty value", line);
  try {
    it->second(cfg, key, value);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what(), line);
  }
}

// Message prefix "<key> ..." identifies the line to blame.
int line_for(const std::string& msg, const std::map<std::string, int>& lines) {
  int best = 0;
  std::size_t best_len = 0;
  for (const auto& [key, line] : lines)
    if (msg.rfind(key, 0) == 0 && key.size() > best_len) {
      best = line;
      best_len = key.size();
    }
  return best;
}

void require(bool ok, const std::string& msg) {
  if (!ok)
    throw std::invalid_argument(msg);
}

void validate_fields(const RunConfig& c) {
  require(c.grid.nx >= 4, "grid.nx must be >= 4");
  require(c.grid.ny >= 4, "grid.ny must be >= 4");
  require(c.grid.lx > 0.0, "grid.lx must be > 0");
  require(c.grid.ly > 0.0, "grid.ly must be > 0");
  c.phys.validate();
  c.solver.validate();
  require(c.ic.amplitude >= 0.0, "ic.amplitude must be >= 0");
  require(c.ic.smooth >= 0.0, "ic.smooth must be >= 0");
  require(c.ic.width > 0.0, "ic.width must be > 0");
  if (c.ic.kind == IcKind::File) {
    require(!c.ic.path.empty(), "ic.path is required when ic.kind = file");
    require(std::filesystem::exists(c.ic.path), "ic.path " + c.ic.path.string() + " does not exist");
  }
  require(!c.output_dir.empty(), "output.dir must not be empty");
  for (std::size_t k = 0; k < c.sweep.nu.size(); ++k) {
    require(c.sweep.nu[k] > 0.0, "sweep.nu entries must be > 0");
    require(k == 0 || c.sweep.nu[k] < c.sweep.nu[k - 1], "sweep.nu must be strictly decreasing");
  }
  require(c.phys.eta > 0.0 || c.sweep.nu.empty(), "phys.eta must be > 0 for the Darcy reference of a sweep");
  require(c.depend.delta > 0.0, "depend.delta must be > 0");
  require(c.equilibrium.window_lo >= 0.0, "equilibrium.window_lo must be >= 0");
  require(c.equilibrium.window_hi == 0.0 || c.equilibrium.window_hi > c.equilibrium.window_lo,
          "equilibrium.window_hi must be 0 or > equilibrium.window_lo");
  require(c.equilibrium.sample_every > 0.0, "equilibrium.sample_every must be > 0");
  for (double r : c.probe.radii)
    require(r > 0.0, "probe.radii entries must be > 0");
}

} // namespace

std::string to_string(IcKind kind) {
  switch (kind) {
  case IcKind::Constant:
    return "constant";
  case IcKind::Spinodal:
    return "spinodal";
  case IcKind::Stripe:
    return "stripe";
  case IcKind::File:
    return "file";
  }
  return "?";
}

void RunConfig::validate() const {
  try {
    validate_fields(*this);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
}

bool operator==(const RunConfig& a, const RunConfig& b) {
  auto solver_eq = [](const SolverConfig& x, const SolverConfig& y) {
    return x.dt == y.dt && x.t_end == y.t_end && x.stab == y.stab && x.bc == y.bc && x.flow.tol == y.flow.tol &&
           x.flow.max_iters == y.flow.max_iters && x.cadence == y.cadence && x.snapshot_every == y.snapshot_every;
  };
  return a.grid == b.grid && a.phys == b.phys && a.potential == b.potential && solver_eq(a.solver, b.solver) &&
         a.ic == b.ic && a.output_dir == b.output_dir && a.experiment == b.experiment && a.sweep == b.sweep && a.depend == b.depend &&
         a.equilibrium == b.equilibrium && a.probe == b.probe;
}

RunConfig parse_config(const std::string& text, const std::filesystem::path& base_dir) {
  RunConfig cfg;
  std::map<std::string, int> lines;
  std::istringstream in(text);
  std::string raw;
  int lineno = 0;
  while (std::getline(in, raw)) {
    ++lineno;
    const std::string line = trim(raw.substr(0, raw.find('#')));
    if (line.empty())
      continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("expected 'key = value'", lineno);
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (lines.count(key))
      throw ConfigError("duplicate key '" + key + "'", lineno);
    set_key(cfg, key, value, lineno);
    lines[key] = lineno;
  }
  if (cfg.ic.kind == IcKind::File && cfg.ic.path.is_relative() && !base_dir.empty())
    cfg.ic.path = base_dir / cfg.ic.path;
  try {
    validate_fields(cfg);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what(), line_for(e.what(), lines));
  }
  return cfg;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in)
    throw ConfigError("cannot open config file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), path.parent_path());
}

void apply_override(RunConfig& cfg, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos)
    throw ConfigError("override '" + assignment + "' is not key=value");
  set_key(cfg, trim(assignment.substr(0, eq)), trim(assignment.substr(eq + 1)), 0);
}

std::string serialize(const RunConfig& c) {
  std::ostringstream out;
  out << "grid.nx = " << c.grid.nx << '\n'
      << "grid.ny = " << c.grid.ny << '\n'
      << "grid.lx = " << fmt(c.grid.lx) << '\n'
      << "grid.ly = " << fmt(c.grid.ly) << '\n'
      << "grid.bc = " << to_string(c.solver.bc) << '\n'
      << "phys.nu = " << fmt(c.phys.nu) << '\n'
      << "phys.eta = " << fmt(c.phys.eta) << '\n'
      << "phys.M = " << fmt(c.phys.M) << '\n'
      << "phys.eps = " << fmt(c.phys.eps) << '\n'
      << "phys.gamma = " << fmt(c.phys.gamma) << '\n'
      << "potential.kind = " << to_string(c.potential.kind()) << '\n';
  if (c.potential.kind() == Potential::Kind::Polynomial)
    out << "potential.coeffs = " << fmt_list(c.potential.coeffs()) << '\n';
  out << "solver.dt = " << fmt(c.solver.dt) << '\n'
      << "solver.t_end = " << fmt(c.solver.t_end) << '\n'
      << "solver.stab = " << (c.solver.stab ? fmt(*c.solver.stab) : "auto") << '\n'
      << "solver.cadence = " << c.solver.cadence << '\n'
      << "solver.snapshot_every = " << c.solver.snapshot_every << '\n'
      << "flow.tol = " << fmt(c.solver.flow.tol) << '\n'
      << "flow.max_iters = " << c.solver.flow.max_iters << '\n'
      << "ic.kind = " << to_string(c.ic.kind) << '\n'
      << "ic.value = " << fmt(c.ic.value) << '\n'
      << "ic.mean = " << fmt(c.ic.mean) << '\n'
      << "ic.amplitude = " << fmt(c.ic.amplitude) << '\n'
      << "ic.seed = " << c.ic.seed << '\n'
      << "ic.smooth = " << fmt(c.ic.smooth) << '\n'
      << "ic.width = " << fmt(c.ic.width) << '\n';
  if (!c.ic.path.empty())
    out << "ic.path = " << c.ic.path.string() << '\n';
  out << "output.dir = " << c.output_dir.string() << '\n'
      << "experiment = " << c.experiment << '\n'
      << "sweep.nu = " << fmt_list(c.sweep.nu) << '\n'
      << "depend.delta = " << fmt(c.depend.delta) << '\n'
      << "depend.seed = " << c.depend.seed << '\n'
      << "equilibrium.window_lo = " << fmt(c.equilibrium.window_lo) << '\n'
      << "equilibrium.window_hi = " << fmt(c.equilibrium.window_hi) << '\n'
      << "equilibrium.sample_every = " << fmt(c.equilibrium.sample_every) << '\n'
      << "probe.radii = " << fmt_list(c.probe.radii) << '\n'
      << "probe.mean = " << fmt(c.probe.mean) << '\n'
      << "probe.seed = " << c.probe.seed << '\n';
  return out.str();
}

ScalarField make_initial(const InitialSpec& spec, const GridSpec& grid, ScalarBC bc, double eps) {
  switch (spec.kind) {
  case IcKind::Constant:
    return ScalarField(grid, bc, spec.value);
  case IcKind::Spinodal: {
    std::mt19937_64 rng(spec.seed);
    std::uniform_real_distribution<double> dist(-1.0, 1.0);
    ScalarField f(grid, bc);
    for (double& v : f.values())
      v = spec.amplitude * dist(rng);
    if (spec.smooth > 0.0 && spec.amplitude > 0.0) {
      const HelmholtzOperator heat(grid, 1.0, -spec.smooth, 0.0, bc);
      f = heat.solve(heat.solve(f));
      remove_mean(f);
      f *= spec.amplitude / max_abs(f);
    }
    remove_mean(f);
    for (double& v : f.values())
      v += spec.mean;
    return f;
  }
  case IcKind::Stripe: {
    ScalarField f(grid, bc);
    const double c = 0.5 * grid.lx;
    for (int j = 0; j < grid.ny; ++j)
      for (int i = 0; i < grid.nx; ++i)
        f(i, j) = std::tanh((0.5 * spec.width - std::abs(grid.xc(i) - c)) / (std::sqrt(2.0) * eps));
    return f;
  }
  case IcKind::File: {
    const auto bytes_grid = [&] {
      try {
        return read_scalar_snapshot(spec.path, bc);
      } catch (const std::runtime_error& e) {
        throw ConfigError(std::string("ic.path: ") + e.what());
      }
    }();
    if (!(bytes_grid.grid() == grid))
      throw ConfigError("ic.path snapshot grid " + std::to_string(bytes_grid.grid().nx) + "x" +
                        std::to_string(bytes_grid.grid().ny) + " does not match the configured grid " +
                        std::to_string(grid.nx) + "x" + std::to_string(grid.ny));
    return bytes_grid;
  }
  }
  throw std::logic_error("unknown initial condition kind");
}

} // namespace chb
