#pragma once

// Energy-stable decoupled time stepping of the Cahn-Hilliard-Brinkman
// system and its Darcy limit, with per-step diagnostics.
//
// One step from phi^n:
//   mu^n     = -eps*Lap_h phi^n + f(phi^n)/eps
//   (u^n,p^n) from the flow solve with force -gamma*phi^n*grad(mu^n)
//   [I/dt + M*eps*Lap_h^2 - (M*S/eps)*Lap_h] phi^{n+1}
//       = phi^n/dt - div(phi^n u^n) + M*Lap_h[f(phi^n)/eps - (S/eps)*phi^n]
// The linear operator is constant-coefficient and solved in the cosine basis.

#include "chb/flow.hpp"
#include "chb/grid.hpp"
#include "chb/potential.hpp"

#include <filesystem>
#include <functional>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace chb {

struct SimState {
  ScalarField phi;
  MacVector u;
  ScalarField p;
  double t = 0.0;
  long step = 0;
};

struct SolverConfig {
  double dt = 1e-3;
  double t_end = 1.0;
  /// Stabilization S. Unset: derived each step from the potential over
  /// [min(phi,-1), max(phi,1)].
  std::optional<double> stab;
  ScalarBC bc = ScalarBC::Neumann;
  FlowOptions flow;
  int cadence = 1;          ///< diagnostics every `cadence` steps
  int snapshot_every = 0;   ///< 0 disables snapshots

  void validate() const;
};

struct DiagnosticsRecord {
  double t = 0.0;
  long step = 0;
  double mass = 0.0;        ///< <phi>*|Omega|
  double energy = 0.0;
  double grad_mu_sq = 0.0;
  double visc_diss = 0.0;   ///< nu*||grad u||^2
  double darcy_diss = 0.0;  ///< eta*||u||^2
  double residual = 0.0;    ///< dissipation residual of the step ending here (NaN at t=0)
  double phi_l2 = 0.0;
  double phi_h1 = 0.0;
};

/// Optional forcing for manufactured-solution studies.
struct StepSources {
  /// Added to d(phi)/dt at cell centers, evaluated at t^{n+1}.
  std::function<double(double x, double y, double t)> phi_source;
  /// Added to the capillary force on x/y faces, evaluated at t^n.
  std::function<double(double x, double y, double t)> force_x;
  std::function<double(double x, double y, double t)> force_y;
  /// Replaces the flow solve with a given velocity at t^n.
  std::function<MacVector(double t)> prescribed_velocity;
};

/// Per-step flow solve report.
struct FlowReport {
  double energy_defect = 0.0;       ///< |nu||grad u||^2 + eta||u||^2 - <force,u>|
  double force_norm = 0.0;
  double velocity_norm = 0.0;
  double divergence_norm = 0.0;
  double momentum_residual = 0.0;
  int iterations = 0;
  bool solved = false;              ///< false when the velocity was prescribed
};

double energy(const ScalarField& phi, const Potential& pot, double eps);
ScalarField chemical_potential(const ScalarField& phi, const Potential& pot, double eps);
/// div(avg(phi)*u). Throws std::invalid_argument on grid mismatch.
ScalarField convective_divergence(const ScalarField& phi, const MacVector& u);
/// Snapshot of the diagnostic channels for a state (residual left NaN).
DiagnosticsRecord diagnose(const SimState& s, const PhysParams& params, const Potential& pot);

/// Reusable stepper; caches the flow solver and the implicit operator.
class Stepper {
public:
  Stepper(const GridSpec& grid, PhysParams params, Potential pot, SolverConfig cfg,
          StepSources sources = {});

  /// Throws NumericalError "blow-up detected at step N" when phi leaves
  /// [-10,10] or turns non-finite; flow failures propagate.
  SimState step(const SimState& s);

  double stabilization_used() const { return last_stab_; }
  const FlowReport& last_flow() const { return flow_report_; }
  long cfl_violations() const { return cfl_violations_; }

  const PhysParams& params() const { return params_; }
  const Potential& potential() const { return pot_; }
  const SolverConfig& config() const { return cfg_; }

private:
  const HelmholtzOperator& implicit_operator(double stab);

  GridSpec grid_;
  PhysParams params_;
  Potential pot_;
  SolverConfig cfg_;
  StepSources sources_;
  std::unique_ptr<BrinkmanSolver> brinkman_;
  std::unique_ptr<HelmholtzOperator> op_;
  double op_stab_ = -1.0;
  double last_stab_ = 0.0;
  FlowReport flow_report_;
  long cfl_violations_ = 0;
};

/// Single step with a fresh Stepper.
SimState ch_step(const SimState& s, const PhysParams& params, const Potential& pot, const SolverConfig& cfg);

SimState initial_state(const ScalarField& phi0);

struct RunOptions {
  std::optional<std::filesystem::path> output_dir;  ///< snapshots go here when set
  /// Called after every step with the new state and its diagnostics.
  std::function<void(const SimState&, const DiagnosticsRecord&, const FlowReport&)> observer;
  StepSources sources;
};

struct RunResult {
  SimState final_state;
  std::vector<DiagnosticsRecord> records;  ///< t=0 plus every cadence step
  long steps = 0;
  bool blew_up = false;
  std::string failure;
  bool energy_monotone = true;
  double max_energy_increase = 0.0;  ///< largest E_{n+1}-E_n observed (<= 0 when monotone)
  double max_mass_deviation = 0.0;   ///< max |<phi(t)> - <phi0>|
  double max_abs_residual = 0.0;
  double max_flow_defect_ratio = 0.0;  ///< max energy_defect/(||force|| ||u||) over solves
  long cfl_violations = 0;
};

/// Steps phi0 to cfg.t_end. Numerical failures stop the run and are reported
/// in the result with the diagnostics gathered so far.
RunResult run(const ScalarField& phi0, const PhysParams& params, const Potential& pot,
              const SolverConfig& cfg, const RunOptions& opts = {});

/// residual_n = (E_{n+1}-E_n)/dt + M||grad mu_{n+1}||^2 + (visc_n+darcy_n)/gamma,
/// where visc/darcy are those of the velocity used in step n (stored on record n+1).
/// Throws std::invalid_argument if records are not spaced by dt.
std::vector<double> dissipation_audit(const std::vector<DiagnosticsRecord>& series, double dt,
                                      const PhysParams& params);

inline constexpr const char* kDiagnosticsHeader =
    "t,mass,energy,grad_mu_sq,visc_diss,darcy_diss,residual,phi_l2,phi_h1";
void write_diagnostics_csv(std::ostream& out, const std::vector<DiagnosticsRecord>& records);
std::string snapshot_name(const std::string& prefix, long step);

} // namespace chb
