// Acceptance run: one PASS/FAIL line per criterion.
// Usage: acceptance [criterion numbers...]   (default: all)

#include "chb/config.hpp"
#include "chb/equilibrium.hpp"
#include "chb/experiments.hpp"
#include "chb/manufactured.hpp"
#include "chb/simulation.hpp"
#include "chb/spectral.hpp"
#include "dense_oracle.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <optional>
#include <set>
#include <string>
#include <vector>

using namespace chb;
using namespace chb::test;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string fmt(const char* f, double a) {
  char buf[128];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

struct Verdict {
  bool pass = true;
  std::string detail;
  double extra_seconds = 0.0;  // shared work done on behalf of this criterion

  void require(bool ok, const std::string& what) {
    pass = pass && ok;
    detail += (detail.empty() ? "" : "; ") + what + (ok ? "" : " [x]");
  }
};

// Spinodal setting shared by criteria 1, 2, 3, 5, 7: eps = 1 on a 16x16 square,
// N = 64, tau = 1e-3, nu = eta = 1, smoothed random datum.
const GridSpec kSpinodalGrid{64, 64, 16.0, 16.0};

ScalarField spinodal_datum() {
  InitialSpec s;
  s.amplitude = 0.05;
  s.smooth = 1.0;
  s.seed = 42;
  return make_initial(s, kSpinodalGrid, ScalarBC::Neumann, 1.0);
}

SolverConfig spinodal_config(double t_end, double dt = 1e-3) {
  SolverConfig cfg;
  cfg.dt = dt;
  cfg.t_end = t_end;
  return cfg;
}

struct LongRun {
  RunResult result;
  double mean0 = 0.0;
  double seconds = 0.0;
};

// 10^4 steps, computed once.
const LongRun& long_run_cached() {
  static const LongRun lr = [] {
    const auto t0 = Clock::now();
    LongRun out;
    const ScalarField phi0 = spinodal_datum();
    out.mean0 = mean(phi0);
    out.result = run(phi0, PhysParams{}, Potential::quartic(), spinodal_config(10.0));
    out.seconds = seconds_since(t0);
    return out;
  }();
  return lr;
}

// Returns the shared run and charges its cost to the caller if it was
// computed earlier (otherwise the caller's own clock already includes it).
const LongRun& long_run(Verdict& v) {
  const auto t0 = Clock::now();
  const LongRun& lr = long_run_cached();
  v.extra_seconds = std::max(0.0, lr.seconds - seconds_since(t0));
  return lr;
}

Verdict mass_conservation() {
  Verdict v;
  const LongRun& lr = long_run(v);
  v.require(!lr.result.blew_up, "steps " + std::to_string(lr.result.steps));
  v.require(lr.result.steps == 10000, "10^4 steps");
  v.require(lr.result.max_mass_deviation <= 1e-12 * (1 + std::abs(lr.mean0)),
            fmt("max |<phi(t)>-<phi0>| = %.2e", lr.result.max_mass_deviation));
  return v;
}

Verdict energy_law() {
  Verdict v;
  const LongRun& lr = long_run(v);
  v.require(lr.result.energy_monotone, fmt("max E_{n+1}-E_n = %.2e over 10^4 steps", lr.result.max_energy_increase));
  const ScalarField phi0 = spinodal_datum();
  std::vector<double> peaks;
  for (double dt : {1e-3, 5e-4, 2.5e-4}) {
    const RunResult r = run(phi0, PhysParams{}, Potential::quartic(), spinodal_config(1.0, dt));
    double peak = 0.0;
    for (double x : dissipation_audit(r.records, dt, PhysParams{}))
      peak = std::max(peak, std::abs(x));
    peaks.push_back(peak);
    v.require(r.energy_monotone, fmt("tau=%.2e monotone", dt));
  }
  for (std::size_t k = 0; k + 1 < peaks.size(); ++k) {
    const double ratio = peaks[k] / peaks[k + 1];
    v.require(ratio >= 1.6 && ratio <= 2.4,
              fmt("audit max %.3e", peaks[k]) + fmt(" -> %.3e", peaks[k + 1]) + fmt(" ratio %.3f", ratio));
  }
  return v;
}

Verdict velocity_identity() {
  Verdict v;
  const LongRun& lr = long_run(v);
  v.require(lr.result.max_flow_defect_ratio <= 1e-8,
            fmt("Brinkman max defect/(|f||u|) = %.2e over 10^4 solves", lr.result.max_flow_defect_ratio));
  const RunResult darcy = run(spinodal_datum(), PhysParams{0.0, 1.0, 1.0, 1.0, 1.0}, Potential::quartic(),
                              spinodal_config(1.0));
  v.require(!darcy.blew_up && darcy.max_flow_defect_ratio <= 1e-8,
            fmt("Darcy max defect/(|f||u|) = %.2e over 10^3 solves", darcy.max_flow_defect_ratio));
  return v;
}

Verdict operators() {
  Verdict v;
  const GridSpec g{8, 8, 1.0, 1.0};
  const MatrixXd L = cell_laplacian(g);
  const Eigen::Index n = L.rows();

  ScalarField r = random_field(g, 11);
  remove_mean(r);
  MatrixXd K = MatrixXd::Zero(n + 1, n + 1);
  K.topLeftCorner(n, n) = L;
  K.block(n, 0, 1, n).setOnes();
  K.block(0, n, n, 1).setOnes();
  VectorXd rhs(n + 1);
  rhs << to_vec(r), 0.0;
  const double poisson = rel_diff(to_vec(poisson_solve(r)), K.fullPivLu().solve(rhs).head(n));
  v.require(poisson <= 1e-10, fmt("Poisson %.1e", poisson));

  const double a = 1e3, b = -4.0, c = 1.0;
  const MatrixXd H = a * MatrixXd::Identity(n, n) + b * L + c * L * L;
  const ScalarField q = random_field(g, 12);
  const double helm = rel_diff(to_vec(HelmholtzOperator(g, a, b, c).solve(q)), H.fullPivLu().solve(to_vec(q)));
  v.require(helm <= 1e-10, fmt("Helmholtz-biharmonic %.1e", helm));

  double brink = 0.0;
  for (auto [nu, eta] : {std::pair{1.0, 1.0}, std::pair{0.01, 5.0}}) {
    const MacVector f = random_faces(g, 13, VelocityBC::NoSlip);
    const Eigen::Index m = to_vec(f).size();
    const DenseFlow d = dense_flow(g, -nu * noslip_vector_laplacian(g) + eta * MatrixXd::Identity(m, m), to_vec(f));
    const FlowSolution s = BrinkmanSolver(g, nu, eta).solve(f, FlowOptions{1e-14, 1000});
    brink = std::max({brink, rel_diff(to_vec(s.u), d.u), rel_diff(to_vec(s.p), d.p)});
  }
  v.require(brink <= 1e-10, fmt("Brinkman saddle %.1e", brink));

  const MacVector f = random_faces(g, 14);
  const Eigen::Index m = to_vec(f).size();
  const double eta = 1.7;
  const DenseFlow d = dense_flow(g, eta * MatrixXd::Identity(m, m), to_vec(f));
  const FlowSolution s = darcy_solve(f, PhysParams{0.0, eta, 1.0, 1.0, 1.0});
  const double darcy = std::max(rel_diff(to_vec(s.u), d.u), rel_diff(to_vec(s.p), d.p));
  v.require(darcy <= 1e-10, fmt("Darcy %.1e", darcy));
  return v;
}

Verdict continuous_dependence_check() {
  Verdict v;
  const ScalarField base = spinodal_datum();
  const SolverConfig cfg = spinodal_config(1.0);
  const PhysParams params;
  const Potential pot = Potential::quartic();

  const DependenceResult same = continuous_dependence(base, base, params, pot, cfg);
  v.require(same.max_gap_sq <= 1e-12, fmt("identical data gap %.1e", same.max_gap_sq));

  const ScalarField psi = perturbation_direction(kSpinodalGrid, 7);
  const double delta = 1e-6;
  std::vector<DependenceResult> runs;
  for (double d : {delta, delta / 2}) {
    ScalarField phi2 = base;
    phi2 += d * psi;
    runs.push_back(continuous_dependence(base, phi2, params, pot, cfg));
  }
  const DependenceResult& r = runs[0];
  bool within = std::isfinite(r.fitted_K);
  for (std::size_t k = 0; k < r.t.size(); ++k)
    within = within && r.gap_sq[k] <= r.delta0 * std::exp(r.fitted_K * r.t[k]) * (1 + 1e-12);
  v.require(within, fmt("gap^2 <= delta0 e^{Kt} with K = %.3f", r.fitted_K) + fmt(", delta0 = %.2e", r.delta0));
  const double ratio = std::sqrt(runs[0].max_gap_sq / runs[1].max_gap_sq);
  v.require(std::abs(ratio - 2.0) <= 0.4, fmt("gap(delta)/gap(delta/2) = %.4f", ratio));
  return v;
}

Verdict equilibrium_check() {
  Verdict v;
  const GridSpec g{64, 64, 16.0, 16.0};
  InitialSpec s;
  s.kind = IcKind::Stripe;
  s.width = 8.0;
  SolverConfig cfg;
  cfg.dt = 1e-2;
  cfg.t_end = 50.0;
  const RelaxationReport r =
      relaxation_study(make_initial(s, g, ScalarBC::Neumann, 1.0), PhysParams{}, Potential::quartic(), cfg, 1.0, 0.0, 0.1);
  v.require(!r.run.blew_up && r.run.final_state.t > 50.0 - 1e-9, fmt("t = %.1f", r.run.final_state.t));
  v.require(r.final_residual <= 1e-8, fmt("stationarity residual %.2e", r.final_residual));
  const double u_final = r.u_norm.empty() ? INFINITY : r.u_norm.back().value;
  v.require(u_final <= 1e-8, fmt("||u|| %.2e", u_final));
  v.require(r.run.energy_monotone, "energy monotone");
  v.require(r.fit_ok, r.fit_ok ? fmt("fit: algebraic exponent %.3f", r.fit.exponent) +
                                     fmt(" (r2 %.3f)", r.fit.r2) + fmt(", exponential rate %.3f", r.fit.exp_rate) +
                                     fmt(" (r2 %.3f)", r.fit.exp_r2) +
                                     (r.fit.exponential_preferred ? ", exponential preferred" : ", algebraic preferred")
                               : "fit failed: " + r.fit_error);
  return v;
}

Verdict vanishing_viscosity() {
  Verdict v;
  const SweepResult r = viscosity_sweep(spinodal_datum(), {1e-1, 1e-2, 1e-3, 1e-4}, PhysParams{},
                                        Potential::quartic(), spinodal_config(1.0));
  std::string series = "sup diff^2:";
  for (double d : r.diff_sq)
    series += fmt(" %.3e", d);
  v.require(r.monotone && r.fitted_points == 4, series + (r.monotone ? " strictly decreasing" : " not decreasing"));
  bool bounded = std::isfinite(r.C);
  for (std::size_t k = 0; k < r.nu.size(); ++k)
    bounded = bounded && r.diff_sq[k] <= r.C * std::sqrt(r.nu[k]) * (1 + 1e-12);
  v.require(bounded, fmt("diff^2 <= C nu^{1/2} with C = %.3e", r.C));
  v.require(r.slope >= 0.4, fmt("log-log slope %.3f", r.slope));
  v.require(r.reference_energy_monotone && r.reference_mass_deviation <= 1e-12, "Darcy reference invariants");
  return v;
}

Verdict convergence_orders() {
  Verdict v;
  const ManufacturedCase mc;
  const ConvergenceStudy sp = spatial_convergence(mc, {16, 32, 64, 128}, 1.0);
  std::string so = "space orders";
  for (double o : sp.orders)
    so += fmt(" %.3f", o);
  v.require(sp.orders.size() == 3 && sp.min_order >= 1.9, so);
  const ConvergenceStudy tm = temporal_convergence(mc, 32, {0.02, 0.01, 0.005, 0.0025, 0.00125});
  std::string to = "time orders";
  for (double o : tm.orders)
    to += fmt(" %.3f", o);
  v.require(tm.orders.size() == 3 && tm.min_order >= 0.9, to);
  return v;
}

Verdict dissipativity() {
  Verdict v;
  const GridSpec g{64, 64, 2.0, 2.0};
  SolverConfig cfg;
  cfg.dt = 1e-2;
  cfg.t_end = 20.0;
  const ProbeReport r = dissipativity_probe(g, {1.0, 2.0, 4.0}, 0.0, PhysParams{}, Potential::quartic(), cfg, 11);
  std::string runs;
  for (const ProbeRun& p : r.runs)
    runs += fmt(" r=%.0f:", p.radius) + fmt(" entry %.2f", p.entry_time) + fmt(" terminal %.6f", p.terminal_h1);
  v.require(r.all_absorbed, fmt("ball radius %.4f,", r.bound) + runs);
  v.require(r.terminal_spread <= 0.05, fmt("terminal spread %.2e", r.terminal_spread));
  return v;
}

struct Criterion {
  int id;
  const char* name;
  double limit_s;
  std::function<Verdict()> check;
};

} // namespace

int main(int argc, char** argv) {
  const std::vector<Criterion> criteria = {
      {1, "mass conservation", 120, mass_conservation},
      {2, "energy law", 300, energy_law},
      {3, "velocity energy identity", 600, velocity_identity},
      {4, "operator correctness", 10, operators},
      {5, "continuous dependence", 300, continuous_dependence_check},
      {6, "convergence to equilibrium", 600, equilibrium_check},
      {7, "vanishing viscosity", 900, vanishing_viscosity},
      {8, "convergence orders", 300, convergence_orders},
      {9, "dissipativity probe", 600, dissipativity},
  };
  std::set<int> selected;
  for (int k = 1; k < argc; ++k)
    selected.insert(std::atoi(argv[k]));

  int failed = 0;
  for (const Criterion& c : criteria) {
    if (!selected.empty() && !selected.count(c.id))
      continue;
    const auto t0 = Clock::now();
    Verdict v;
    try {
      v = c.check();
    } catch (const std::exception& e) {
      v.pass = false;
      v.detail = std::string("exception: ") + e.what();
    }
    // Shared work is charged to each criterion that depends on it.
    const double elapsed = seconds_since(t0) + v.extra_seconds;
    const bool in_time = elapsed < c.limit_s;
    const bool pass = v.pass && in_time;
    failed += pass ? 0 : 1;
    std::printf("criterion %d (%s): %s  [%.1fs, limit %.0fs%s] %s\n", c.id, c.name, pass ? "PASS" : "FAIL", elapsed,
                c.limit_s, in_time ? "" : ", too slow", v.detail.c_str());
    std::fflush(stdout);
  }
  return failed == 0 ? 0 : 1;
}
