#include "chb/simulation.hpp"

#include "chb/errors.hpp"
#include "chb/snapshot.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>
#include <stdexcept>

namespace chb {

namespace {

constexpr double kBlowupBound = 10.0;
// Relative round-off allowance when judging energy monotonicity.
constexpr double kEnergyRoundoff = 1e-12;

} // namespace

void SolverConfig::validate() const {
  if (!(dt > 0.0) || !std::isfinite(dt))
    throw std::invalid_argument("solver.dt must be > 0");
  if (!(t_end >= 0.0) || !std::isfinite(t_end))
    throw std::invalid_argument("solver.t_end must be >= 0");
  if (stab && (!(*stab >= 0.0) || !std::isfinite(*stab)))
    throw std::invalid_argument("solver.stab must be >= 0");
  if (cadence < 1)
    throw std::invalid_argument("solver.cadence must be >= 1");
  if (snapshot_every < 0)
    throw std::invalid_argument("solver.snapshot_every must be >= 0");
  if (!(flow.tol > 0.0))
    throw std::invalid_argument("flow.tol must be > 0");
  if (flow.max_iters < 1)
    throw std::invalid_argument("flow.max_iters must be >= 1");
}

double energy(const ScalarField& phi, const Potential& pot, double eps) {
  double bulk = 0.0;
  for (double v : phi.values())
    bulk += pot.F(v);
  bulk *= phi.grid().cell_area();
  return 0.5 * eps * grad_sq(phi) + bulk / eps;
}

ScalarField chemical_potential(const ScalarField& phi, const Potential& pot, double eps) {
  ScalarField mu = laplacian(phi);
  auto m = mu.values();
  auto p = phi.values();
  for (std::size_t k = 0; k < m.size(); ++k)
    m[k] = -eps * m[k] + pot.f(p[k]) / eps;
  return mu;
}

ScalarField convective_divergence(const ScalarField& phi, const MacVector& u) {
  if (!(phi.grid() == u.grid()))
    throw std::invalid_argument("convective divergence: phi and u live on different grids");
  MacVector flux = face_product(average_to_faces(phi), u);
  flux.set_bc(u.bc());
  return divergence(flux);
}

DiagnosticsRecord diagnose(const SimState& s, const PhysParams& params, const Potential& pot) {
  DiagnosticsRecord r;
  r.t = s.t;
  r.step = s.step;
  r.mass = mean(s.phi) * s.phi.grid().area();
  r.energy = energy(s.phi, pot, params.eps);
  r.grad_mu_sq = grad_sq(chemical_potential(s.phi, pot, params.eps));
  r.visc_diss = params.nu > 0.0 ? params.nu * vector_grad_sq(s.u) : 0.0;
  r.darcy_diss = params.eta * inner(s.u, s.u);
  r.residual = std::numeric_limits<double>::quiet_NaN();
  r.phi_l2 = l2_norm(s.phi);
  r.phi_h1 = h1_norm(s.phi);
  return r;
}

// -- Stepper -------------------------------------------------------------------------

Stepper::Stepper(const GridSpec& grid, PhysParams params, Potential pot, SolverConfig cfg,
                 StepSources sources)
    : grid_(grid), params_(params), pot_(std::move(pot)), cfg_(cfg), sources_(std::move(sources)) {
  grid_.validate();
  params_.validate();
  cfg_.validate();
  if (params_.nu > 0.0 && !sources_.prescribed_velocity)
    brinkman_ = std::make_unique<BrinkmanSolver>(grid_, params_.nu, params_.eta, cfg_.bc);
}

const HelmholtzOperator& Stepper::implicit_operator(double stab) {
  if (!op_ || stab != op_stab_) {
    const double M = params_.M, eps = params_.eps;
    op_ = std::make_unique<HelmholtzOperator>(grid_, 1.0 / cfg_.dt, -M * stab / eps, M * eps, cfg_.bc);
    op_stab_ = stab;
  }
  return *op_;
}

SimState Stepper::step(const SimState& s) {
  const ScalarField& phi = s.phi;
  if (!(phi.grid() == grid_) || phi.bc() != cfg_.bc)
    throw std::invalid_argument("state does not match the stepper grid");
  if (!phi.all_finite())
    throw NumericalError("blow-up detected at step " + std::to_string(s.step));

  const auto [lo_it, hi_it] = std::minmax_element(phi.values().begin(), phi.values().end());
  const double lo = *lo_it, hi = *hi_it;
  double stab;
  if (cfg_.stab) {
    stab = *cfg_.stab;
    const double required = stabilization(pot_, lo, hi);
    if (stab < required)
      throw std::invalid_argument("solver.stab = " + std::to_string(stab) +
                                  " is below the bound " + std::to_string(required) +
                                  " for the observed phi range");
  } else {
    stab = stabilization(pot_, std::min(lo, -1.0), std::max(hi, 1.0));
  }
  last_stab_ = stab;

  const double eps = params_.eps;
  const ScalarField mu = chemical_potential(phi, pot_, eps);

  SimState next;
  flow_report_ = FlowReport{};
  if (sources_.prescribed_velocity) {
    next.u = sources_.prescribed_velocity(s.t);
    next.p = ScalarField(grid_, cfg_.bc);
  } else {
    MacVector force = capillary_force(phi, mu, params_.gamma);
    if (sources_.force_x || sources_.force_y) {
      const double hx = grid_.hx(), hy = grid_.hy();
      const int i0 = cfg_.bc == ScalarBC::Periodic ? 0 : 1;
      if (sources_.force_x)
        for (int j = 0; j < grid_.ny; ++j)
          for (int i = i0; i < grid_.nx; ++i)
            force.ux(i, j) += sources_.force_x(i * hx, (j + 0.5) * hy, s.t);
      if (sources_.force_y)
        for (int j = i0; j < grid_.ny; ++j)
          for (int i = 0; i < grid_.nx; ++i)
            force.uy(i, j) += sources_.force_y((i + 0.5) * hx, j * hy, s.t);
      force.enforce_boundary();
    }
    FlowSolution sol = brinkman_ ? brinkman_->solve(force, cfg_.flow, &s.p)
                                 : darcy_solve(force, params_, cfg_.flow);
    flow_report_.energy_defect = std::abs(velocity_energy_defect(sol, force, params_));
    flow_report_.force_norm = l2_norm(force);
    flow_report_.velocity_norm = l2_norm(sol.u);
    flow_report_.divergence_norm = sol.divergence_norm;
    flow_report_.momentum_residual = sol.momentum_residual;
    flow_report_.iterations = sol.iterations;
    flow_report_.solved = true;
    next.u = std::move(sol.u);
    next.p = std::move(sol.p);
  }

  const double umax = max_abs(next.u);
  if (umax * cfg_.dt > 0.5 * std::min(grid_.hx(), grid_.hy()))
    ++cfl_violations_;

  // Explicit part: f(phi)/eps - (S/eps) phi, then M*Lap_h of it.
  ScalarField g(grid_, cfg_.bc);
  {
    auto gv = g.values();
    auto pv = phi.values();
    for (std::size_t k = 0; k < gv.size(); ++k)
      gv[k] = (pot_.f(pv[k]) - stab * pv[k]) / eps;
  }
  ScalarField rhs = (1.0 / cfg_.dt) * phi;
  rhs -= convective_divergence(phi, next.u);
  rhs += params_.M * laplacian(g);
  if (sources_.phi_source) {
    const double t1 = s.t + cfg_.dt;
    for (int j = 0; j < grid_.ny; ++j)
      for (int i = 0; i < grid_.nx; ++i)
        rhs(i, j) += sources_.phi_source(grid_.xc(i), grid_.yc(j), t1);
  }

  next.phi = implicit_operator(stab).solve(rhs);
  next.t = s.t + cfg_.dt;
  next.step = s.step + 1;

  for (double v : next.phi.values())
    if (!std::isfinite(v) || std::abs(v) > kBlowupBound)
      throw NumericalError("blow-up detected at step " + std::to_string(next.step));
  return next;
}

SimState ch_step(const SimState& s, const PhysParams& params, const Potential& pot, const SolverConfig& cfg) {
  Stepper stepper(s.phi.grid(), params, pot, cfg);
  return stepper.step(s);
}

SimState initial_state(const ScalarField& phi0) {
  SimState s;
  s.phi = phi0;
  s.u = MacVector(phi0.grid(), face_bc_for(phi0.bc()));
  s.p = ScalarField(phi0.grid(), phi0.bc());
  return s;
}

// -- run -------------------------------------------------------------------------------

std::string snapshot_name(const std::string& prefix, long step) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%s_%08ld.chbf", prefix.c_str(), step);
  return buf;
}

RunResult run(const ScalarField& phi0, const PhysParams& params, const Potential& pot,
              const SolverConfig& cfg, const RunOptions& opts) {
  if (!phi0.all_finite())
    throw std::invalid_argument("initial phase field must be finite");
  if (phi0.bc() != cfg.bc)
    throw std::invalid_argument("initial phase field BC does not match solver BC");

  Stepper stepper(phi0.grid(), params, pot, cfg, opts.sources);
  RunResult res;
  SimState s = initial_state(phi0);
  const double mass0 = mean(phi0);

  auto write_snapshots = [&](const SimState& st) {
    if (!opts.output_dir || cfg.snapshot_every == 0 || st.step % cfg.snapshot_every != 0)
      return;
    write_snapshot(*opts.output_dir / snapshot_name("phi", st.step), st.phi);
    write_snapshot(*opts.output_dir / snapshot_name("u", st.step), st.u);
  };

  DiagnosticsRecord prev = diagnose(s, params, pot);
  res.records.push_back(prev);
  write_snapshots(s);

  const long nsteps = std::lround(cfg.t_end / cfg.dt);
  for (long k = 0; k < nsteps; ++k) {
    SimState next;
    try {
      next = stepper.step(s);
    } catch (const NumericalError& e) {
      res.blew_up = true;
      res.failure = e.what();
      break;
    }
    DiagnosticsRecord rec = diagnose(next, params, pot);
    rec.residual = (rec.energy - prev.energy) / cfg.dt + params.M * rec.grad_mu_sq +
                   (rec.visc_diss + rec.darcy_diss) / params.gamma;

    const double dE = rec.energy - prev.energy;
    if (k == 0 || dE > res.max_energy_increase)
      res.max_energy_increase = dE;
    if (dE > kEnergyRoundoff * std::max(1.0, std::abs(prev.energy)))
      res.energy_monotone = false;
    res.max_mass_deviation = std::max(res.max_mass_deviation, std::abs(mean(next.phi) - mass0));
    res.max_abs_residual = std::max(res.max_abs_residual, std::abs(rec.residual));
    const FlowReport& fr = stepper.last_flow();
    if (fr.solved && fr.force_norm > 0.0 && fr.velocity_norm > 0.0)
      res.max_flow_defect_ratio =
          std::max(res.max_flow_defect_ratio, fr.energy_defect / (fr.force_norm * fr.velocity_norm));

    if (opts.observer)
      opts.observer(next, rec, fr);
    s = std::move(next);
    ++res.steps;
    if (s.step % cfg.cadence == 0 || k == nsteps - 1)
      res.records.push_back(rec);
    write_snapshots(s);
    prev = rec;
  }
  if (res.blew_up && (res.records.empty() || res.records.back().step != prev.step))
    res.records.push_back(prev);
  res.cfl_violations = stepper.cfl_violations();
  res.final_state = std::move(s);
  return res;
}

std::vector<double> dissipation_audit(const std::vector<DiagnosticsRecord>& series, double dt,
                                      const PhysParams& params) {
  std::vector<double> out;
  for (std::size_t n = 0; n + 1 < series.size(); ++n) {
    const auto& a = series[n];
    const auto& b = series[n + 1];
    if (std::abs((b.t - a.t) - dt) > 1e-9 * dt || b.step != a.step + 1)
      throw std::invalid_argument("dissipation audit needs records one step apart");
    out.push_back((b.energy - a.energy) / dt + params.M * b.grad_mu_sq +
                  (b.visc_diss + b.darcy_diss) / params.gamma);
  }
  return out;
}

void write_diagnostics_csv(std::ostream& out, const std::vector<DiagnosticsRecord>& records) {
  out << kDiagnosticsHeader << '\n';
  char buf[512];
  for (const auto& r : records) {
    std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n", r.t,
                  r.mass, r.energy, r.grad_mu_sq, r.visc_diss, r.darcy_diss, r.residual, r.phi_l2,
                  r.phi_h1);
    out << buf;
  }
}

} // namespace chb
