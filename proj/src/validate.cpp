#include "chb/validate.hpp"

#include "chb/config.hpp"
#include "chb/equilibrium.hpp"
#include "chb/experiments.hpp"
#include "chb/manufactured.hpp"
#include "chb/snapshot.hpp"
#include "chb/spectral.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numbers>
#include <ostream>
#include <random>
#include <sstream>

namespace chb {

namespace {

constexpr double kPi = std::numbers::pi;

struct Outcome {
  bool passed;
  std::string detail;
};

std::string sci(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3e", v);
  return buf;
}

Outcome bound(double value, double limit, const std::string& what) {
  return {value <= limit, what + " = " + sci(value) + " (limit " + sci(limit) + ")"};
}

Outcome at_least(double value, double limit, const std::string& what) {
  return {value >= limit, what + " = " + sci(value) + " (min " + sci(limit) + ")"};
}

Outcome all_of(std::initializer_list<Outcome> parts) {
  Outcome out{true, ""};
  for (const Outcome& p : parts) {
    out.passed = out.passed && p.passed;
    out.detail += (out.detail.empty() ? "" : "; ") + p.detail;
  }
  return out;
}

ScalarField random_field(const GridSpec& g, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  ScalarField f(g);
  for (double& v : f.values())
    v = dist(rng);
  return f;
}

MacVector random_faces(const GridSpec& g, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  MacVector u(g, VelocityBC::NoPenetration);
  for (double& v : u.ux_values())
    v = dist(rng);
  for (double& v : u.uy_values())
    v = dist(rng);
  u.enforce_boundary();
  return u;
}

ScalarField smooth_field(const GridSpec& g, double a, double b) {
  ScalarField f(g);
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i)
      f(i, j) = std::cos(a * g.xc(i)) * std::sin(b * g.yc(j)) + 0.3 * g.xc(i) * g.yc(j);
  return f;
}

ScalarField spinodal(const GridSpec& g, double mean_value, unsigned seed) {
  InitialSpec spec;
  spec.mean = mean_value;
  spec.amplitude = 0.05;
  spec.seed = seed;
  spec.smooth = 1.0;
  return make_initial(spec, g, ScalarBC::Neumann, 1.0);
}

// Small spinodal run shared by several chb checks.
const RunResult& spinodal_run() {
  static const RunResult result = [] {
    const GridSpec g{32, 32, 8.0, 8.0};
    SolverConfig cfg;
    cfg.dt = 1e-2;
    cfg.t_end = 8.0;
    return run(spinodal(g, 0.1, 42), PhysParams{}, Potential::quartic(), cfg);
  }();
  return result;
}

// --- grid_core ---

Outcome grid_summation_by_parts() {
  const GridSpec g{12, 10, 1.3, 0.9};
  const ScalarField f = random_field(g, 1), h = random_field(g, 2);
  const double lhs = -inner(laplacian(f), h);
  const double rhs = inner(gradient_to_faces(f), gradient_to_faces(h));
  const double scale = l2_norm(gradient_to_faces(f)) * l2_norm(gradient_to_faces(h));
  return bound(std::abs(lhs - rhs) / scale, 1e-12, "relative SBP defect");
}

Outcome grid_div_grad() {
  const GridSpec g{12, 10, 1.3, 0.9};
  const ScalarField f = random_field(g, 3);
  const ScalarField lap = laplacian(f);
  return bound(l2_norm(divergence(gradient_to_faces(f)) - lap) / l2_norm(lap), 1e-14, "relative difference");
}

Outcome grid_mean_annihilation() {
  const GridSpec g{12, 10, 1.3, 0.9};
  const ScalarField lap = laplacian(random_field(g, 4));
  const ScalarField div = divergence(random_faces(g, 5));
  return all_of({bound(std::abs(mean(lap)) / max_abs(lap), 1e-12, "|mean(Lap f)|/max"),
                 bound(std::abs(mean(div)) / max_abs(div), 1e-12, "|mean(div V)|/max")});
}

Outcome grid_second_order() {
  // f = exp(cos(kx x)) exp(cos(ky y)) has zero normal derivative on the walls.
  const double lx = 1.0, ly = 1.5, kx = kPi / lx, ky = kPi / ly;
  auto g1 = [](double k, double x) { return std::exp(std::cos(k * x)); };
  auto g2 = [](double k, double x) {
    const double s = std::sin(k * x), c = std::cos(k * x);
    return k * k * (s * s - c) * std::exp(c);
  };
  std::vector<double> err;
  for (int n : {16, 32, 64}) {
    const GridSpec g{n, n, lx, ly};
    ScalarField f(g), exact(g);
    for (int j = 0; j < n; ++j)
      for (int i = 0; i < n; ++i) {
        const double x = g.xc(i), y = g.yc(j);
        f(i, j) = g1(kx, x) * g1(ky, y);
        exact(i, j) = g2(kx, x) * g1(ky, y) + g1(kx, x) * g2(ky, y);
      }
    err.push_back(l2_norm(laplacian(f) - exact));
  }
  return at_least(std::min(std::log2(err[0] / err[1]), std::log2(err[1] / err[2])), 1.9, "observed order");
}

Outcome grid_snapshot_round_trip() {
  const GridSpec g{7, 5, 1.1, 0.7};
  const ScalarField f = random_field(g, 6);
  const ScalarField back = decode_scalar_snapshot(encode_snapshot(f));
  const MacVector u = random_faces(g, 7);
  const MacVector ub = decode_vector_snapshot(encode_snapshot(u));
  const bool ok = back.grid() == g && l2_norm(back - f) == 0.0 && l2_norm(ub - u) == 0.0;
  return {ok, ok ? "bitwise identical" : "snapshot changed on round trip"};
}

// --- spectral_solvers ---

Outcome spectral_round_trip() {
  const GridSpec g{12, 10, 1.3, 0.9};
  const HelmholtzOperator op(g, 2.0, -0.7, 0.3);
  const ScalarField r = random_field(g, 8);
  return bound(l2_norm(op.apply(op.solve(r)) - r) / l2_norm(r), 1e-11, "relative residual");
}

Outcome spectral_mean_preservation() {
  const GridSpec g{12, 10, 1.3, 0.9};
  const HelmholtzOperator op(g, 0.0, 1.0, 0.2);
  ScalarField r = random_field(g, 9);
  remove_mean(r);
  const ScalarField x = op.solve(r, 0.375);
  return bound(std::abs(mean(x) - 0.375), 1e-15, "|mean - constraint|");
}

Outcome spectral_orthogonality() {
  const GridSpec g{12, 10, 1.3, 0.9};
  const ScalarField f = random_field(g, 10);
  const auto tr = modal_transform(g, Basis::CosineCell, Basis::CosineCell);
  const std::vector<double> back = tr->inverse(tr->forward(f.values()));
  double num = 0.0, den = 0.0;
  for (std::size_t k = 0; k < back.size(); ++k) {
    num += (back[k] - f.values()[k]) * (back[k] - f.values()[k]);
    den += f.values()[k] * f.values()[k];
  }
  return bound(std::sqrt(num / den), 1e-13, "relative round-trip error");
}

// --- potential ---

Outcome potential_derivative() {
  const Potential pot = Potential::quartic();
  double worst = 0.0;
  for (double h : {1e-4, 1e-5})
    for (int k = 0; k < 1000; ++k) {
      const double s = -2.0 + 4.0 * k / 999.0;
      const double fd = (pot.F(s + h) - pot.F(s - h)) / (2 * h);
      worst = std::max(worst, std::abs(pot.f(s) - fd) / (h * h));
    }
  return bound(worst, 20.0, "max |f - central difference|/h^2");
}

Outcome potential_growth() {
  const Potential pot = Potential::quartic();
  double worst = 0.0;
  for (int k = 0; k <= 2000; ++k) {
    const double s = -10.0 + 20.0 * k / 2000.0;
    worst = std::max(worst, std::abs(pot.f(s)) / (1 + std::abs(s) * std::abs(s) * std::abs(s)));
  }
  return bound(worst, 1e3, "max |f(s)|/(1+|s|^3) on [-10,10]");
}

Outcome potential_fprime_bounded_below() {
  const Potential pot = Potential::quartic();
  double lo = std::numeric_limits<double>::infinity();
  for (int k = 0; k <= 2000; ++k)
    lo = std::min(lo, pot.fprime(-10.0 + 20.0 * k / 2000.0));
  return {std::isfinite(lo), "min f' on [-10,10] = " + sci(lo)};
}

// --- flow ---

MacVector test_force(const GridSpec& g) {
  return capillary_force(smooth_field(g, 4.0, 2.0), smooth_field(g, 3.0, 5.0), 1.0);
}

Outcome flow_energy_identity() {
  const GridSpec g{16, 12, 1.0, 0.75};
  const MacVector f = test_force(g);
  double worst = 0.0;
  for (const PhysParams& p : {PhysParams{1.0, 1.0, 1, 1, 1}, PhysParams{0.1, 0.0, 1, 1, 1}, PhysParams{0.0, 2.0, 1, 1, 1}}) {
    const FlowSolution s = flow_solve(f, p);
    worst = std::max(worst, std::abs(velocity_energy_defect(s, f, p)) / (l2_norm(f) * l2_norm(s.u)));
  }
  return bound(worst, FlowOptions{}.tol, "max defect/(||force|| ||u||)");
}

Outcome flow_divergence_free() {
  const GridSpec g{16, 12, 1.0, 0.75};
  const MacVector f = test_force(g);
  double worst = 0.0;
  for (const PhysParams& p : {PhysParams{1.0, 1.0, 1, 1, 1}, PhysParams{0.0, 2.0, 1, 1, 1}})
    worst = std::max(worst, l2_norm(divergence(flow_solve(f, p).u)));
  return bound(worst, FlowOptions{}.tol, "max ||div u||");
}

Outcome flow_no_penetration() {
  const GridSpec g{16, 12, 1.0, 0.75};
  const MacVector f = test_force(g);
  double worst = 0.0;
  for (const PhysParams& p : {PhysParams{1.0, 1.0, 1, 1, 1}, PhysParams{0.0, 2.0, 1, 1, 1}})
    worst = std::max(worst, flow_solve(f, p).u.boundary_normal_max());
  return {worst == 0.0, "max |boundary normal velocity| = " + sci(worst)};
}

Outcome flow_darcy_limit() {
  const GridSpec g{16, 16, 1.0, 1.0};
  const MacVector f = test_force(g);
  const PhysParams darcy{0.0, 1.0, 1.0, 1.0, 1.0};
  const MacVector ud = darcy_solve(f, darcy).u;
  double prev = INFINITY;
  bool monotone = true;
  std::string detail = "||u_nu - u_darcy||:";
  for (double nu : {1e-1, 1e-2, 1e-3, 1e-4, 1e-5, 1e-6}) {
    PhysParams p = darcy;
    p.nu = nu;
    const double d = l2_norm(brinkman_solve(f, p).u - ud);
    monotone = monotone && d < prev;
    prev = d;
    detail += " " + sci(d);
  }
  return {monotone, detail};
}

// --- chb ---

Outcome chb_mass() {
  const RunResult& r = spinodal_run();
  return all_of({{!r.blew_up, r.blew_up ? r.failure : "completed"},
                 bound(r.max_mass_deviation, 1e-12 * (1 + 0.1), "max |<phi(t)> - <phi0>|")});
}

Outcome chb_energy() {
  const RunResult& r = spinodal_run();
  return {r.energy_monotone && !r.blew_up, "max energy increase = " + sci(r.max_energy_increase)};
}

Outcome chb_fixed_point() {
  const GridSpec g{16, 16, 4.0, 4.0};
  SolverConfig cfg;
  cfg.dt = 0.1;
  Stepper stepper(g, PhysParams{}, Potential::quartic(), cfg);
  SimState s = initial_state(ScalarField(g, ScalarBC::Neumann, 0.3));
  for (int k = 0; k < 5; ++k)
    s = stepper.step(s);
  double dev = 0.0;
  for (double v : s.phi.values())
    dev = std::max(dev, std::abs(v - 0.3));
  return all_of({bound(dev, 1e-14, "max |phi - 0.3| after 5 steps"), bound(max_abs(s.u), 0.0, "max |u|")});
}

Outcome chb_spatial_order() {
  const ConvergenceStudy st = spatial_convergence(ManufacturedCase{}, {16, 32, 64}, 1.0);
  return at_least(st.min_order, 1.9, "min observed spatial order");
}

Outcome chb_temporal_order() {
  const ConvergenceStudy st = temporal_convergence(ManufacturedCase{}, 32, {0.02, 0.01, 0.005, 0.0025});
  return at_least(st.min_order, 0.9, "min observed temporal order");
}

Outcome chb_bounded() {
  const RunResult& r = spinodal_run();
  double transient = 0.0, overall = 0.0;
  for (const DiagnosticsRecord& rec : r.records) {
    if (rec.t <= 0.25 * 8.0)
      transient = std::max(transient, rec.phi_h1);
    overall = std::max(overall, rec.phi_h1);
  }
  return bound(overall / transient, 2.0, "sup ||phi||_1 / transient max");
}

// --- equilibrium ---

const StationaryState& stationary() {
  static const StationaryState st = [] {
    const GridSpec g{16, 16, 8.0, 8.0};
    return solve_stationary(spinodal(g, 0.2, 5), Potential::quartic(), 1.0, 1e-8);
  }();
  return st;
}

Outcome equilibrium_mean() {
  return bound(std::abs(stationary().mean - 0.2), 1e-14, "|mean(z) - mean(z0)|");
}

Outcome equilibrium_energy() {
  const StationaryState& st = stationary();
  return {st.energy_monotone, "energy monotone over " + std::to_string(st.iterations) + " iterations, residual " +
                                  sci(st.residual)};
}

Outcome equilibrium_fit() {
  std::vector<DecayPoint> series;
  for (int k = 0; k <= 100; ++k) {
    const double t = 0.5 * k;
    series.push_back({t, 3.0 * std::pow(1.0 + t, -0.7)});
  }
  const RateFit fit = fit_decay(series, 1.0, 50.0);
  return bound(std::abs(fit.exponent - 0.7) / 0.7, 1e-6, "relative exponent error");
}

// --- experiments ---

Outcome experiments_determinism() {
  const GridSpec g{16, 16, 8.0, 8.0};
  SolverConfig cfg;
  cfg.dt = 1e-2;
  cfg.t_end = 0.5;
  auto csv = [&] {
    std::ostringstream out;
    write_diagnostics_csv(out, run(spinodal(g, 0.0, 3), PhysParams{}, Potential::quartic(), cfg).records);
    return out.str();
  };
  return {csv() == csv(), "diagnostics CSVs of two identical runs compared byte by byte"};
}

Outcome experiments_reference() {
  const GridSpec g{16, 16, 8.0, 8.0};
  SolverConfig cfg;
  cfg.dt = 1e-2;
  cfg.t_end = 0.5;
  const SweepResult r = viscosity_sweep(spinodal(g, 0.1, 4), {1e-1, 1e-2}, PhysParams{}, Potential::quartic(), cfg);
  return all_of({bound(r.reference_mass_deviation, 1e-12 * 1.1, "reference mass deviation"),
                 {r.reference_energy_monotone, r.reference_energy_monotone ? "reference energy monotone"
                                                                            : "reference energy increased"}});
}

Outcome experiments_swap() {
  const GridSpec g{16, 16, 8.0, 8.0};
  SolverConfig cfg;
  cfg.dt = 1e-2;
  cfg.t_end = 0.3;
  const ScalarField a = spinodal(g, 0.0, 6);
  ScalarField b = a;
  b += 1e-3 * perturbation_direction(g, 2);
  const DependenceResult ab = continuous_dependence(a, b, PhysParams{}, Potential::quartic(), cfg);
  const DependenceResult ba = continuous_dependence(b, a, PhysParams{}, Potential::quartic(), cfg);
  return {ab.gap_sq == ba.gap_sq, "gap series of swapped arguments compared exactly"};
}

// --- cli_io ---

Outcome config_round_trip() {
  RunConfig c;
  c.grid = GridSpec{24, 16, 2.0, 1.5};
  c.phys.nu = 1.0 / 3.0;
  c.solver.stab = 7.25;
  c.ic.kind = IcKind::Stripe;
  c.sweep.nu = {0.3, 0.03};
  const bool ok = parse_config(serialize(c)) == c && parse_config("") == RunConfig{};
  return {ok, "serialize/parse round trip and defaults"};
}

Outcome initial_determinism() {
  const GridSpec g{16, 16, 1.0, 1.0};
  InitialSpec s;
  s.seed = 42;
  const ScalarField a = make_initial(s, g, ScalarBC::Neumann, 1.0);
  const ScalarField b = make_initial(s, g, ScalarBC::Neumann, 1.0);
  InitialSpec c;
  c.kind = IcKind::Constant;
  c.value = 0.3;
  return {l2_norm(a - b) == 0.0 && mean(make_initial(c, g, ScalarBC::Neumann, 1.0)) == 0.3,
          "seeded spinodal reproducible, constant mean exact"};
}

struct Check {
  const char* name;
  Outcome (*fn)();
};

const std::vector<Check>& checks() {
  static const std::vector<Check> list = {
      {"grid.summation_by_parts", grid_summation_by_parts},
      {"grid.div_grad_is_laplacian", grid_div_grad},
      {"grid.mean_annihilation", grid_mean_annihilation},
      {"grid.second_order_laplacian", grid_second_order},
      {"grid.snapshot_round_trip", grid_snapshot_round_trip},
      {"spectral.round_trip", spectral_round_trip},
      {"spectral.mean_preservation", spectral_mean_preservation},
      {"spectral.transform_orthogonality", spectral_orthogonality},
      {"potential.derivative_consistency", potential_derivative},
      {"potential.cubic_growth", potential_growth},
      {"potential.fprime_bounded_below", potential_fprime_bounded_below},
      {"flow.energy_identity", flow_energy_identity},
      {"flow.divergence_free", flow_divergence_free},
      {"flow.no_penetration_exact", flow_no_penetration},
      {"flow.darcy_limit_monotone", flow_darcy_limit},
      {"chb.mass_conservation", chb_mass},
      {"chb.energy_non_increasing", chb_energy},
      {"chb.constant_fixed_point", chb_fixed_point},
      {"chb.spatial_order", chb_spatial_order},
      {"chb.temporal_order", chb_temporal_order},
      {"chb.bounded_h1", chb_bounded},
      {"equilibrium.mean_preserved", equilibrium_mean},
      {"equilibrium.energy_non_increasing", equilibrium_energy},
      {"equilibrium.fit_recovers_exponent", equilibrium_fit},
      {"experiments.deterministic_diagnostics", experiments_determinism},
      {"experiments.reference_invariants", experiments_reference},
      {"experiments.dependence_swap_symmetry", experiments_swap},
      {"config.round_trip", config_round_trip},
      {"config.initial_determinism", initial_determinism},
  };
  return list;
}

} // namespace

std::vector<std::string> invariant_names() {
  std::vector<std::string> out;
  for (const Check& c : checks())
    out.emplace_back(c.name);
  return out;
}

std::vector<CheckResult> run_invariants(const std::function<void(const CheckResult&)>& progress) {
  std::vector<CheckResult> results;
  for (const Check& c : checks()) {
    CheckResult r;
    r.name = c.name;
    const auto t0 = std::chrono::steady_clock::now();
    try {
      const Outcome o = c.fn();
      r.passed = o.passed;
      r.detail = o.detail;
    } catch (const std::exception& e) {
      r.passed = false;
      r.detail = std::string("exception: ") + e.what();
    }
    r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (progress)
      progress(r);
    results.push_back(std::move(r));
  }
  return results;
}

void write_validate_csv(std::ostream& out, const std::vector<CheckResult>& results) {
  out << kValidateHeader << '\n';
  for (const CheckResult& r : results) {
    std::string detail = r.detail;
    for (char& ch : detail)
      if (ch == '"')
        ch = '\'';
    char secs[32];
    std::snprintf(secs, sizeof secs, "%.3f", r.seconds);
    out << r.name << ',' << (r.passed ? 1 : 0) << ',' << secs << ",\"" << detail << "\"\n";
  }
}

} // namespace chb
