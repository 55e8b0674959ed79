// Command-line driver: run, sweep, depend, equilibrium, probe, validate.
// Exit codes: 0 success, 2 configuration error, 3 numerical failure.

#include "chb/config.hpp"
#include "chb/equilibrium.hpp"
#include "chb/errors.hpp"
#include "chb/experiments.hpp"
#include "chb/snapshot.hpp"
#include "chb/validate.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using namespace chb;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitNumerical = 3;

struct Common {
  std::string config;
  std::string output;
  std::vector<std::string> overrides;
};

RunConfig resolve(const Common& c) {
  RunConfig cfg = c.config.empty() ? parse_config("") : load_config(c.config);
  for (const std::string& kv : c.overrides)
    apply_override(cfg, kv);
  if (!c.overrides.empty()) {
    if (cfg.ic.kind == IcKind::File && cfg.ic.path.is_relative() && !c.config.empty())
      cfg.ic.path = fs::path(c.config).parent_path() / cfg.ic.path;
    cfg.validate();
  }
  if (!c.output.empty())
    cfg.output_dir = c.output;
  return cfg;
}

std::ofstream open_out(const fs::path& path) {
  std::ofstream out(path);
  if (!out)
    throw ConfigError("cannot write " + path.string());
  return out;
}

fs::path prepare_output(const RunConfig& cfg) {
  std::error_code ec;
  fs::create_directories(cfg.output_dir, ec);
  if (ec)
    throw ConfigError("cannot create output directory " + cfg.output_dir.string() + ": " + ec.message());
  open_out(cfg.output_dir / "config.used") << serialize(cfg);
  return cfg.output_dir;
}

ScalarField initial_field(const RunConfig& cfg) {
  return make_initial(cfg.ic, cfg.grid, cfg.solver.bc, cfg.phys.eps);
}

std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

int cmd_run(const RunConfig& cfg) {
  const fs::path out = prepare_output(cfg);
  RunOptions opts;
  opts.output_dir = out;
  const RunResult r = run(initial_field(cfg), cfg.phys, cfg.potential, cfg.solver, opts);
  {
    auto file = open_out(out / "diagnostics.csv");
    write_diagnostics_csv(file, r.records);
  }
  write_snapshot(out / "phi_final.chbf", r.final_state.phi);
  write_snapshot(out / "u_final.chbf", r.final_state.u);
  auto rep = open_out(out / "run_report.txt");
  rep << "steps " << r.steps << "\nt " << num(r.final_state.t) << "\nenergy_monotone " << r.energy_monotone
      << "\nmax_energy_increase " << num(r.max_energy_increase) << "\nmax_mass_deviation "
      << num(r.max_mass_deviation) << "\nmax_abs_residual " << num(r.max_abs_residual)
      << "\nmax_flow_defect_ratio " << num(r.max_flow_defect_ratio) << "\ncfl_violations " << r.cfl_violations
      << '\n';
  std::cout << "run: " << r.steps << " steps to t=" << r.final_state.t << ", energy "
            << (r.energy_monotone ? "monotone" : "NOT monotone") << ", mass drift " << r.max_mass_deviation
            << ", " << r.cfl_violations << " CFL flags\n";
  if (r.blew_up) {
    rep << "failure " << r.failure << '\n';
    std::cerr << "chb: " << r.failure << '\n';
    return kExitNumerical;
  }
  return 0;
}

int cmd_sweep(const RunConfig& cfg) {
  const fs::path out = prepare_output(cfg);
  const SweepResult r = viscosity_sweep(initial_field(cfg), cfg.sweep.nu, cfg.phys, cfg.potential, cfg.solver);
  {
    auto file = open_out(out / "sweep.csv");
    write_sweep_csv(file, r);
  }
  {
    auto file = open_out(out / "sweep_report.txt");
    write_sweep_report(file, r);
  }
  std::cout << "sweep: slope " << r.slope << ", C " << r.C << ", " << (r.monotone ? "monotone" : "NOT monotone")
            << " over " << r.fitted_points << " points\n";
  return 0;
}

int cmd_depend(const RunConfig& cfg) {
  const fs::path out = prepare_output(cfg);
  const ScalarField phi1 = initial_field(cfg);
  ScalarField phi2 = phi1;
  phi2 += cfg.depend.delta * perturbation_direction(cfg.grid, static_cast<unsigned>(cfg.depend.seed), cfg.solver.bc);
  const DependenceResult r = continuous_dependence(phi1, phi2, cfg.phys, cfg.potential, cfg.solver);
  {
    auto csv = open_out(out / "dependence.csv");
    csv << "t,gap_h1_sq\n";
    for (std::size_t k = 0; k < r.t.size(); ++k)
      csv << num(r.t[k]) << ',' << num(r.gap_sq[k]) << '\n';
  }
  open_out(out / "dependence_report.txt") << "delta0 " << num(r.delta0) << "\nmax_gap_sq " << num(r.max_gap_sq)
                                          << "\namplification " << num(r.amplification) << "\nfitted_K "
                                          << num(r.fitted_K) << "\nvelocity_gap_integral "
                                          << num(r.velocity_gap_integral) << '\n';
  std::cout << "depend: delta0 " << r.delta0 << ", max gap " << r.max_gap_sq << ", K " << r.fitted_K << '\n';
  return 0;
}

int cmd_equilibrium(const RunConfig& cfg) {
  const fs::path out = prepare_output(cfg);
  const RelaxationReport r = relaxation_study(initial_field(cfg), cfg.phys, cfg.potential, cfg.solver,
                                              cfg.equilibrium.window_lo, cfg.equilibrium.window_hi,
                                              cfg.equilibrium.sample_every);
  {
    auto file = open_out(out / "diagnostics.csv");
    write_diagnostics_csv(file, r.run.records);
  }
  write_snapshot(out / "phi_star.chbf", r.limit.z);
  {
    auto csv = open_out(out / "decay.csv");
    csv << "t,phi_gap_h1,u_h1\n";
    for (std::size_t k = 0; k < r.phi_gap.size(); ++k)
      csv << num(r.phi_gap[k].t) << ',' << num(r.phi_gap[k].value) << ','
          << (k < r.u_norm.size() ? num(r.u_norm[k].value) : "nan") << '\n';
  }
  if (r.fit_ok)
    {
      auto file = open_out(out / "rate_fit.csv");
      write_rate_fit_csv(file, r.fit);
    }
  auto rep = open_out(out / "equilibrium_report.txt");
  rep << "final_residual " << num(r.final_residual) << "\nlimit_residual " << num(r.limit.residual)
      << "\nlagrange_const " << num(r.limit.lagrange_const) << "\nenergy_monotone " << r.run.energy_monotone
      << "\nfit_ok " << r.fit_ok << '\n';
  if (!r.fit_ok)
    rep << "fit_error " << r.fit_error << '\n';
  rep << "velocity_decay_ok " << r.velocity.ok << "\nvelocity_detail " << r.velocity.detail << '\n';
  std::cout << "equilibrium: residual " << r.final_residual << ", fit "
            << (r.fit_ok ? "exponent " + std::to_string(r.fit.exponent) : "failed: " + r.fit_error)
            << ", velocity decay " << (r.velocity.ok ? "ok" : "violated") << '\n';
  if (r.run.blew_up) {
    std::cerr << "chb: " << r.run.failure << '\n';
    return kExitNumerical;
  }
  return 0;
}

int cmd_probe(const RunConfig& cfg) {
  const fs::path out = prepare_output(cfg);
  const ProbeReport r = dissipativity_probe(cfg.grid, cfg.probe.radii, cfg.probe.mean, cfg.phys, cfg.potential,
                                            cfg.solver, static_cast<unsigned>(cfg.probe.seed));
  {
    auto file = open_out(out / "probe.csv");
    write_probe_csv(file, r);
  }
  open_out(out / "probe_report.txt") << "mean " << num(r.mean) << "\nbound " << num(r.bound)
                                     << "\nterminal_spread " << num(r.terminal_spread) << "\nall_absorbed "
                                     << r.all_absorbed << '\n';
  std::cout << "probe: bound " << r.bound << ", terminal spread " << r.terminal_spread << ", "
            << (r.all_absorbed ? "all absorbed" : "NOT all absorbed") << '\n';
  return 0;
}

int cmd_validate(const Common& c) {
  const fs::path out = c.output.empty() ? fs::path("out") : fs::path(c.output);
  std::error_code ec;
  fs::create_directories(out, ec);
  if (ec)
    throw ConfigError("cannot create output directory " + out.string() + ": " + ec.message());
  int failed = 0;
  const auto results = run_invariants([&](const CheckResult& r) {
    failed += r.passed ? 0 : 1;
    std::printf("%-4s %-40s %s\n", r.passed ? "ok" : "FAIL", r.name.c_str(), r.detail.c_str());
    std::fflush(stdout);
  });
  {
    auto file = open_out(out / "validate.csv");
    write_validate_csv(file, results);
  }
  std::printf("%zu checks, %d failed\n", results.size(), failed);
  return failed ? kExitNumerical : 0;
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"Cahn-Hilliard-Brinkman solver and experiment harness"};
  app.require_subcommand(0, 1);
  Common common;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("-c,--config", common.config, "configuration file (key = value lines)");
    sub->add_option("-o,--output", common.output, "output directory (overrides output.dir)");
    sub->add_option("--set", common.overrides, "override a key, e.g. --set phys.nu=0.1")->take_all();
  };
  add_common(&app);
  const std::vector<std::pair<std::string, std::string>> commands = {
      {"run", "time-step one configuration and write diagnostics"},
      {"sweep", "vanishing-viscosity sweep against the Darcy limit"},
      {"depend", "continuous dependence on the initial datum"},
      {"equilibrium", "relaxation to equilibrium and decay-rate fit"},
      {"probe", "dissipativity probe over initial radii"},
      {"validate", "invariant suite on small grids"},
  };
  for (const auto& [name, help] : commands)
    add_common(app.add_subcommand(name, help));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  try {
    std::string which;
    for (const auto& [name, help] : commands)
      if (app.got_subcommand(name))
        which = name;
    if (which == "validate")
      return cmd_validate(common);
    const RunConfig cfg = resolve(common);
    if (which.empty()) {
      if (common.config.empty()) {
        std::cerr << app.help();
        return kExitConfig;
      }
      which = cfg.experiment;
    }
    if (which == "run")
      return cmd_run(cfg);
    if (which == "sweep")
      return cmd_sweep(cfg);
    if (which == "depend")
      return cmd_depend(cfg);
    if (which == "equilibrium")
      return cmd_equilibrium(cfg);
    return cmd_probe(cfg);
  } catch (const ConfigError& e) {
    std::cerr << "chb: config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::invalid_argument& e) {
    std::cerr << "chb: invalid parameter: " << e.what() << '\n';
    return kExitConfig;
  } catch (const NumericalError& e) {
    std::cerr << "chb: numerical failure: " << e.what() << '\n';
    return kExitNumerical;
  } catch (const std::exception& e) {
    std::cerr << "chb: " << e.what() << '\n';
    return 1;
  }
}
