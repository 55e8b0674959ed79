#include "chb/flow.hpp"

#include "chb/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace chb {

void PhysParams::validate() const {
  for (double v : {nu, eta, M, eps, gamma})
    if (!std::isfinite(v))
      throw std::invalid_argument("physical parameters must be finite");
  if (nu < 0.0)
    throw std::invalid_argument("phys.nu must be >= 0");
  if (eta < 0.0)
    throw std::invalid_argument("phys.eta must be >= 0");
  if (nu == 0.0 && eta <= 0.0)
    throw std::invalid_argument("phys.eta must be > 0 when phys.nu = 0");
  if (M <= 0.0)
    throw std::invalid_argument("phys.M must be > 0");
  if (eps <= 0.0)
    throw std::invalid_argument("phys.eps must be > 0");
  if (gamma <= 0.0)
    throw std::invalid_argument("phys.gamma must be > 0");
}

MacVector capillary_force(const ScalarField& phi, const ScalarField& mu, double gamma) {
  if (!phi.same_layout(mu))
    throw std::invalid_argument("capillary force: phi and mu live on different grids");
  MacVector force = face_product(average_to_faces(phi), gradient_to_faces(mu));
  force *= -gamma;
  force.enforce_boundary();
  return force;
}

// -- Brinkman ----------------------------------------------------------------------

BrinkmanSolver::BrinkmanSolver(const GridSpec& grid, double nu, double eta, ScalarBC bc)
    : grid_(grid), nu_(nu), eta_(eta), bc_(bc),
      vbc_(bc == ScalarBC::Periodic ? VelocityBC::Periodic : VelocityBC::NoSlip),
      poisson_(grid, 0.0, 1.0, 0.0, bc) {
  if (!(nu > 0.0))
    throw std::invalid_argument("use darcy_solve for nu <= 0");
  if (eta < 0.0 || !std::isfinite(eta))
    throw std::invalid_argument("eta must be >= 0");
  if (bc == ScalarBC::Periodic) {
    tx_ = ty_ = modal_transform(grid, Basis::Fourier, Basis::Fourier);
  } else {
    tx_ = modal_transform(grid, Basis::SineFace, Basis::SineCell);
    ty_ = modal_transform(grid, Basis::SineCell, Basis::SineFace);
  }
  auto invert = [&](const ModalTransform& t) {
    std::vector<double> inv(t.modes());
    for (std::size_t m = 0; m < inv.size(); ++m) {
      const double s = nu_ * t.eigenvalue(m) + eta_;
      // eta = 0 with periodic data leaves the mean velocity free; pin it to 0.
      inv[m] = s > 0.0 ? 1.0 / s : 0.0;
    }
    return inv;
  };
  inv_x_ = invert(*tx_);
  inv_y_ = invert(*ty_);
}

MacVector BrinkmanSolver::apply_inverse(const MacVector& v) const {
  const int nx = grid_.nx, ny = grid_.ny;
  MacVector out(grid_, vbc_);
  if (vbc_ == VelocityBC::Periodic) {
    std::vector<double> bx(grid_.cells()), by(grid_.cells());
    for (int j = 0; j < ny; ++j)
      for (int i = 0; i < nx; ++i) {
        bx[static_cast<std::size_t>(j) * nx + i] = v.ux(i, j);
        by[static_cast<std::size_t>(j) * nx + i] = v.uy(i, j);
      }
    tx_->apply_diagonal(bx, inv_x_);
    ty_->apply_diagonal(by, inv_y_);
    for (int j = 0; j < ny; ++j)
      for (int i = 0; i < nx; ++i) {
        out.ux(i, j) = bx[static_cast<std::size_t>(j) * nx + i];
        out.uy(i, j) = by[static_cast<std::size_t>(j) * nx + i];
      }
    out.enforce_boundary();
    return out;
  }

  std::vector<double> bx(static_cast<std::size_t>(nx - 1) * ny);
  for (int j = 0; j < ny; ++j)
    for (int i = 1; i < nx; ++i)
      bx[static_cast<std::size_t>(j) * (nx - 1) + (i - 1)] = v.ux(i, j);
  tx_->apply_diagonal(bx, inv_x_);
  for (int j = 0; j < ny; ++j)
    for (int i = 1; i < nx; ++i)
      out.ux(i, j) = bx[static_cast<std::size_t>(j) * (nx - 1) + (i - 1)];

  std::vector<double> by(static_cast<std::size_t>(nx) * (ny - 1));
  for (int j = 1; j < ny; ++j)
    for (int i = 0; i < nx; ++i)
      by[static_cast<std::size_t>(j - 1) * nx + i] = v.uy(i, j);
  ty_->apply_diagonal(by, inv_y_);
  for (int j = 1; j < ny; ++j)
    for (int i = 0; i < nx; ++i)
      out.uy(i, j) = by[static_cast<std::size_t>(j - 1) * nx + i];
  return out;
}

MacVector BrinkmanSolver::apply_operator(const MacVector& v) const {
  MacVector w = v;
  w.set_bc(vbc_);
  w.enforce_boundary();
  MacVector out = vector_laplacian(w);
  out *= -nu_;
  out += eta_ * w;
  return out;
}

FlowSolution BrinkmanSolver::solve(const MacVector& force, const FlowOptions& opts,
                                   const ScalarField* pressure_guess) const {
  if (!(force.grid() == grid_))
    throw std::invalid_argument("force does not match solver grid");
  if (!force.all_finite())
    throw NumericalError("non-finite force");

  MacVector f = force;
  f.set_bc(vbc_);
  f.enforce_boundary();
  const double fnorm = l2_norm(f);

  ScalarField p(grid_, bc_);
  if (pressure_guess && pressure_guess->same_layout(p)) {
    p = *pressure_guess;
    remove_mean(p);
  }

  auto precondition = [&](const ScalarField& r) {
    ScalarField z = nu_ * r;
    z -= eta_ * poisson_.solve(r, 0.0);
    return z;
  };

  FlowSolution sol;
  int total_iters = 0;
  double best = std::numeric_limits<double>::infinity();
  // Restarts guard against drift between the recursive and the true residual.
  for (int restart = 0; restart < 4; ++restart) {
    MacVector u = apply_inverse(f - gradient_to_faces(p));
    ScalarField r = -1.0 * divergence(u);
    remove_mean(r);
    double rnorm = l2_norm(r);
    best = std::min(best, rnorm);

    auto converged = [&](double rn) {
      if (rn == 0.0)
        return true;
      const double pn = l2_norm(p);
      const double un = l2_norm(u);
      // Keep <p, div u> negligible against <force, u> as well as meeting tol.
      const double rel = pn > 0.0 ? fnorm * un / pn : 1.0;
      return rn <= opts.tol * std::min(1.0, rel);
    };

    if (!converged(rnorm)) {
      ScalarField z = precondition(r);
      ScalarField d = z;
      double rz = inner(r, z);
      int since_tol = 0;
      while (total_iters < opts.max_iters) {
        ++total_iters;
        const MacVector w = apply_inverse(gradient_to_faces(d));
        ScalarField sd = -1.0 * divergence(w);
        remove_mean(sd);
        const double dsd = inner(d, sd);
        if (!(dsd > 0.0))
          break;
        const double alpha = rz / dsd;
        p += alpha * d;
        u -= alpha * w;
        r -= alpha * sd;
        remove_mean(r);
        rnorm = l2_norm(r);
        best = std::min(best, rnorm);
        if (converged(rnorm))
          break;
        // Round-off floor: the absolute target is met but the relative one
        // cannot be reached (e.g. a pure-gradient force leaves u at noise level).
        if (rnorm <= opts.tol && ++since_tol > 50)
          break;
        z = precondition(r);
        const double rz_new = inner(r, z);
        const double beta = rz_new / rz;
        rz = rz_new;
        d = z + beta * d;
      }
    }

    remove_mean(p);
    sol.u = apply_inverse(f - gradient_to_faces(p));
    sol.p = p;
    sol.divergence_norm = l2_norm(divergence(sol.u));
    if (sol.divergence_norm <= opts.tol || total_iters >= opts.max_iters)
      break;
  }
  if (sol.divergence_norm > opts.tol)
    throw ConvergenceError("Brinkman solve did not converge in " + std::to_string(total_iters) +
                               " iterations",
                           std::min(best, sol.divergence_norm));

  sol.iterations = total_iters;
  MacVector res = apply_operator(sol.u) + gradient_to_faces(sol.p);
  res -= f;
  sol.momentum_residual = l2_norm(res);
  return sol;
}

FlowSolution brinkman_solve(const MacVector& force, const PhysParams& params, const FlowOptions& opts) {
  if (!(params.nu > 0.0))
    throw std::invalid_argument("use darcy_solve");
  const ScalarBC bc = force.bc() == VelocityBC::Periodic ? ScalarBC::Periodic : ScalarBC::Neumann;
  return BrinkmanSolver(force.grid(), params.nu, params.eta, bc).solve(force, opts);
}

// -- Darcy -------------------------------------------------------------------------

FlowSolution darcy_solve(const MacVector& force, const PhysParams& params, const FlowOptions& opts) {
  if (!(params.eta > 0.0))
    throw std::invalid_argument("darcy_solve requires eta > 0");
  if (!force.all_finite())
    throw NumericalError("non-finite force");
  const bool periodic = force.bc() == VelocityBC::Periodic;

  MacVector f = force;
  f.set_bc(periodic ? VelocityBC::Periodic : VelocityBC::NoPenetration);
  f.enforce_boundary();

  ScalarField rhs = divergence(f);
  remove_mean(rhs);
  FlowSolution sol;
  sol.p = poisson_solve(rhs);
  sol.u = f - gradient_to_faces(sol.p);
  sol.u *= 1.0 / params.eta;
  sol.u.enforce_boundary();
  sol.divergence_norm = l2_norm(divergence(sol.u));
  if (sol.divergence_norm > opts.tol * std::max(1.0, l2_norm(f)))
    throw NumericalError("Darcy projection left divergence " + std::to_string(sol.divergence_norm));

  MacVector res = params.eta * sol.u + gradient_to_faces(sol.p);
  res -= f;
  sol.momentum_residual = l2_norm(res);
  sol.iterations = 0;
  return sol;
}

FlowSolution flow_solve(const MacVector& force, const PhysParams& params, const FlowOptions& opts) {
  return params.nu > 0.0 ? brinkman_solve(force, params, opts) : darcy_solve(force, params, opts);
}

double velocity_energy_defect(const FlowSolution& sol, const MacVector& force, const PhysParams& params) {
  return params.nu * vector_grad_sq(sol.u) + params.eta * inner(sol.u, sol.u) - inner(force, sol.u);
}

} // namespace chb
