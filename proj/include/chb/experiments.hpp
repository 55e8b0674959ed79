#pragma once

// Paired and swept simulation studies: continuous dependence on the
// initial data, vanishing viscosity against the Darcy limit, and
// absorbing-ball diagnostics.

#include "chb/simulation.hpp"

#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace chb {

/// Worker cap: CHB_THREADS when set to a positive integer, otherwise the
/// hardware concurrency (at least 1).
int worker_count();

/// Runs job(0..n-1) on up to worker_count() threads. The first exception
/// (lowest index) is rethrown after all workers finish.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& job);

/// Smooth mean-zero field with unit H1 norm, reproducible from the seed.
ScalarField perturbation_direction(const GridSpec& grid, unsigned seed, ScalarBC bc = ScalarBC::Neumann);

struct DependenceResult {
  double delta0 = 0.0;              ///< ||phi1(0) - phi2(0)||_1^2
  std::vector<double> t;
  std::vector<double> gap_sq;       ///< ||phi1(t) - phi2(t)||_1^2, gap_sq[0] = delta0
  double amplification = 0.0;       ///< max gap_sq / delta0 (0 when delta0 = 0)
  double velocity_gap_integral = 0.0;  ///< sum dt*||u1-u2||^2 (H1 for Brinkman, L2 for Darcy)
  double fitted_K = 0.0;            ///< smallest K with gap_sq <= delta0*exp(K t)
  double max_gap_sq = 0.0;
};

/// Steps both data in lockstep. Throws std::invalid_argument when the means
/// differ and NumericalError when either run blows up.
DependenceResult continuous_dependence(const ScalarField& phi1, const ScalarField& phi2, const PhysParams& params,
                                       const Potential& pot, const SolverConfig& cfg);

struct SweepResult {
  std::vector<double> nu;           ///< strictly decreasing
  std::vector<double> diff_sq;      ///< sup_t ||phi_nu - phi_0||_1^2
  std::vector<double> u_diff_int;   ///< sum dt*||u_nu - u_0||^2
  std::vector<double> runtime_s;
  std::vector<bool> at_floor;       ///< diff_sq indistinguishable from round-off
  double slope = 0.0;               ///< least-squares slope of log diff_sq vs log nu (above the floor)
  double C = 0.0;                   ///< max diff_sq / nu^(1/2) (above the floor)
  double floor_level = 0.0;
  bool monotone = false;            ///< diff_sq strictly decreasing as nu decreases (above the floor)
  std::size_t fitted_points = 0;
  // reference (nu = 0) run
  double reference_mass_deviation = 0.0;
  bool reference_energy_monotone = true;
};

/// One Brinkman run per nu against the nu = 0 Darcy run from the same datum,
/// compared step by step. Runs execute concurrently. Throws NumericalError
/// naming nu when a run blows up.
SweepResult viscosity_sweep(const ScalarField& phi0, std::vector<double> nu_list, const PhysParams& params,
                            const Potential& pot, const SolverConfig& cfg);

inline constexpr const char* kSweepHeader = "nu,sup_phi_diff_h1_sq,int_u_diff_sq,runtime_s";
void write_sweep_csv(std::ostream& out, const SweepResult& r);
void write_sweep_report(std::ostream& out, const SweepResult& r);

struct ProbeRun {
  double radius = 0.0;       ///< ||phi0||_1
  double entry_time = -1.0;  ///< first time after which ||phi||_1 <= bound for good (-1: never)
  double terminal_h1 = 0.0;
  double max_h1 = 0.0;
  std::vector<double> t, h1;
};

struct ProbeReport {
  double mean = 0.0;
  double bound = 0.0;        ///< common ball radius: 1.1 * max terminal norm
  double terminal_spread = 0.0;  ///< (max - min)/max of terminal norms
  bool all_absorbed = false;
  std::vector<ProbeRun> runs;
};

/// Initial data mean + a*psi with ||.||_1 = radius for a fixed direction psi;
/// runs all radii (concurrently) to cfg.t_end.
ProbeReport dissipativity_probe(const GridSpec& grid, const std::vector<double>& radii, double mean, const PhysParams& params,
                                const Potential& pot, const SolverConfig& cfg, unsigned seed);

void write_probe_csv(std::ostream& out, const ProbeReport& r);

} // namespace chb
