#pragma once

// Velocity solvers for the Brinkman (nu > 0, no-slip) and Darcy
// (nu = 0, no-penetration) momentum balances driven by -gamma*phi*grad(mu).

#include "chb/grid.hpp"
#include "chb/spectral.hpp"

#include <memory>
#include <optional>

namespace chb {

struct PhysParams {
  double nu = 1.0;     ///< viscosity
  double eta = 1.0;    ///< inverse permeability (drag)
  double M = 1.0;      ///< mobility
  double eps = 1.0;    ///< interface parameter
  double gamma = 1.0;  ///< surface tension

  /// Throws std::invalid_argument when nu < 0, eta < 0, nu + eta == 0,
  /// M/eps/gamma <= 0 or anything non-finite.
  void validate() const;
  bool darcy() const { return nu == 0.0; }
  bool operator==(const PhysParams&) const = default;
};

struct FlowSolution {
  MacVector u;
  ScalarField p;  ///< mean-zero
  double momentum_residual = 0.0;
  double divergence_norm = 0.0;
  int iterations = 0;
};

struct FlowOptions {
  double tol = 1e-10;
  int max_iters = 10000;
};

/// Face force -gamma * avg(phi) * grad(mu); zero on wall normal faces.
MacVector capillary_force(const ScalarField& phi, const ScalarField& mu, double gamma);

/// Precomputed Brinkman solver for one grid, (nu, eta) pair and BC mode.
///
/// Solves -nu*Lap_h u + eta*u + grad p = force, div u = 0 by preconditioned
/// conjugate gradients on the pressure Schur complement. The velocity block
/// is inverted exactly with sine/cosine transforms; the preconditioner
/// nu*I + eta*(-Lap_h)^{-1} is exact for periodic data.
class BrinkmanSolver {
public:
  BrinkmanSolver(const GridSpec& grid, double nu, double eta, ScalarBC bc = ScalarBC::Neumann);

  const GridSpec& grid() const { return grid_; }

  /// Applies (-nu*Lap_h + eta)^{-1} to each face component.
  MacVector apply_inverse(const MacVector& v) const;
  /// Stencil application of -nu*Lap_h + eta.
  MacVector apply_operator(const MacVector& v) const;

  /// Throws ConvergenceError when max_iters is exceeded.
  FlowSolution solve(const MacVector& force, const FlowOptions& opts,
                     const ScalarField* pressure_guess = nullptr) const;

private:
  GridSpec grid_;
  double nu_, eta_;
  ScalarBC bc_;
  VelocityBC vbc_;
  std::shared_ptr<const ModalTransform> tx_, ty_;
  std::vector<double> inv_x_, inv_y_;
  HelmholtzOperator poisson_;
};

/// One-shot Brinkman solve. Throws std::invalid_argument "use darcy_solve" for nu <= 0.
FlowSolution brinkman_solve(const MacVector& force, const PhysParams& params, const FlowOptions& opts = {});

/// Darcy solve: Lap_h p = div(force), u = (force - grad p)/eta.
/// Throws std::invalid_argument for eta <= 0.
FlowSolution darcy_solve(const MacVector& force, const PhysParams& params, const FlowOptions& opts = {});

/// Dispatches on params.nu (Brinkman for nu > 0, Darcy for nu = 0).
FlowSolution flow_solve(const MacVector& force, const PhysParams& params, const FlowOptions& opts = {});

/// nu*||grad u||^2 + eta*||u||^2 - <force, u>.
double velocity_energy_defect(const FlowSolution& sol, const MacVector& force, const PhysParams& params);

} // namespace chb
