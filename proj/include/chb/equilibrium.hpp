#pragma once

// Stationary states of the Cahn-Hilliard energy at fixed mass and
// decay-rate estimates for trajectories relaxing towards them.

#include "chb/simulation.hpp"

#include <iosfwd>
#include <string>
#include <vector>

namespace chb {

struct StationaryState {
  ScalarField z;
  double lagrange_const = 0.0;  ///< mean of the chemical potential
  double residual = 0.0;        ///< ||mu - mean(mu)||
  double mean = 0.0;
  long iterations = 0;
  bool energy_monotone = true;
};

struct StationaryOptions {
  double dt = 10.0;         ///< pseudo-time step of the stabilized gradient flow
  long max_iters = 200000;
};

/// ||P0(-eps*Lap_h z + f(z)/eps)||, P0 removing the mean.
double stationarity_residual(const ScalarField& z, const Potential& pot, double eps);

/// Mass-conserving H^-1 gradient flow (CH with u = 0) until the stationarity
/// residual drops to tol. Throws ConvergenceError with the best residual.
StationaryState solve_stationary(const ScalarField& z0, const Potential& pot, double eps, double tol,
                                 const StationaryOptions& opts = {});

struct DecayPoint {
  double t;
  double value;
};

struct RateFit {
  // algebraic model value ~ prefactor * (1+t)^(-exponent)
  double exponent = 0.0;
  double theta_hat = 0.0;  ///< exponent / (1 + 2*exponent)
  double prefactor = 0.0;
  double r2 = 0.0;
  // exponential model value ~ exp_prefactor * exp(-exp_rate * t)
  double exp_rate = 0.0;
  double exp_prefactor = 0.0;
  double exp_r2 = 0.0;
  bool exponential_preferred = false;
  double window_lo = 0.0;
  double window_hi = 0.0;
  std::size_t points = 0;
};

/// Least-squares fits of log(value) against log(1+t) and against t over the
/// window. Points below 1e-13 or non-finite are skipped. Throws
/// std::invalid_argument with fewer than 5 usable points or "no decay detected".
RateFit fit_decay(const std::vector<DecayPoint>& series, double window_lo, double window_hi);

inline constexpr const char* kRateFitHeader = "model,exponent,theta_hat,prefactor,r2,window_lo,window_hi";
/// Two rows, preferred model first; the exponential row reports its rate as the exponent.
void write_rate_fit_csv(std::ostream& out, const RateFit& fit);

struct VelocityDecayReport {
  bool ok = false;
  double rate = 0.0;       ///< exponent/4 used in the bound
  double constant = 0.0;   ///< c fitted on the first half of the window
  double worst_ratio = 0.0;  ///< max ||u||/(c(1+t)^-rate) over the second half
  double final_norm = 0.0;
  std::string detail;
};

/// Checks ||u(t)||_1 <= c*(1+t)^(-exponent/4) on the second half of the fit
/// window with c taken from the first half, and that the last value is below 1e-8.
VelocityDecayReport velocity_decay_check(const std::vector<DecayPoint>& series, const RateFit& fit);

struct RelaxationReport {
  RunResult run;
  double final_residual = 0.0;      ///< stationarity residual of the final field
  StationaryState limit;            ///< phi_star (final field, polished if needed)
  std::vector<DecayPoint> phi_gap;  ///< ||phi(t) - phi_star||_1
  std::vector<DecayPoint> u_norm;   ///< ||u(t)||_1
  RateFit fit;
  bool fit_ok = false;
  std::string fit_error;
  VelocityDecayReport velocity;
};

/// Runs phi0 to cfg.t_end, takes the limit as phi_star and fits the decay of
/// ||phi(t) - phi_star||_1 over [window_lo, window_hi] (window_hi <= 0 means t_end/2).
RelaxationReport relaxation_study(const ScalarField& phi0, const PhysParams& params, const Potential& pot,
                                  const SolverConfig& cfg, double window_lo, double window_hi,
                                  double sample_every);

} // namespace chb
