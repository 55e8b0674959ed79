#pragma once

// Manufactured smooth solutions of the coupled system and observed
// convergence orders.
//
// On [0,L]^2 with k = pi/L:
//   phi_e = A e^{-t} cos(kx) cos(ky)
//   u_e   = curl of psi = B e^{-t} sin^2(kx) sin^2(ky)   (no-slip), p_e = 0
// The phase equation gets the source d_t phi_e + u_e.grad phi_e - M Lap mu_e and the
// momentum equation the force -nu Lap u_e + eta u_e + gamma phi_e grad mu_e.

#include "chb/flow.hpp"
#include "chb/grid.hpp"
#include "chb/potential.hpp"
#include "chb/simulation.hpp"

#include <vector>

namespace chb {

struct ManufacturedCase {
  double length = 1.0;
  double phi_amplitude = 0.5;
  double u_amplitude = 0.5;
  double t_end = 0.1;
  PhysParams params{1.0, 1.0, 1.0, 1.0, 1.0};
  Potential potential;

  double phi(double x, double y, double t) const;
  double ux(double x, double y, double t) const;
  double uy(double x, double y, double t) const;
  StepSources sources() const;
  /// L2 distance between a computed field and phi_e(., t).
  double phi_error(const ScalarField& phi, double t) const;
  /// L2 distance between a computed velocity and u_e(., t) on the faces.
  double velocity_error(const MacVector& u, double t) const;
};

struct ConvergenceStudy {
  std::vector<double> steps;   ///< h (space) or tau (time), coarse to fine
  std::vector<double> errors;
  std::vector<double> orders;  ///< observed orders between consecutive levels
  std::vector<double> velocity_errors;  ///< spatial study only: final flow solve vs u_e
  double min_order = 0.0;
};

/// Runs the manufactured case on n x n grids with tau = tau_factor*h^2, so
/// both error terms scale like h^2. Errors are against phi_e(t_end).
ConvergenceStudy spatial_convergence(const ManufacturedCase& mc, const std::vector<int>& sizes,
                                     double tau_factor);

/// Runs on a fixed n x n grid with the given time steps (each halving the
/// previous). Errors are differences between consecutive levels, so the
/// spatial error cancels.
ConvergenceStudy temporal_convergence(const ManufacturedCase& mc, int n, const std::vector<double>& dts);

} // namespace chb
