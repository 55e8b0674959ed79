#pragma once

// Exact fast solvers for constant-coefficient operators
// a*I + b*Lap_h + c*Lap_h^2 on the MAC grid.
//
// Each supported ghost treatment of the 5-point stencil has a trigonometric
// eigenbasis (DCT-II for mirrored cell data, DST-II for odd-mirrored cell
// data, DST-I for face data pinned to zero at the walls, DFT for periodic
// data), so every operator here is diagonal after a 2D transform.

#include "chb/grid.hpp"

#include <memory>
#include <optional>
#include <span>
#include <vector>

namespace chb {

enum class Basis { CosineCell, SineCell, SineFace, Fourier };

/// 2D trigonometric transform of an ny-by-nx row-major array (y outer) with
/// the eigenvalues of -Lap_h for every mode. Immutable and safe to share.
class ModalTransform {
public:
  ModalTransform(int nx, int ny, Basis bx, Basis by, double hx, double hy);
  ~ModalTransform();
  ModalTransform(const ModalTransform&) = delete;
  ModalTransform& operator=(const ModalTransform&) = delete;

  int nx() const { return nx_; }
  int ny() const { return ny_; }
  std::size_t size() const { return static_cast<std::size_t>(nx_) * ny_; }
  /// Number of spectral coefficients (complex count for Fourier).
  std::size_t modes() const { return lambda_.size(); }
  /// Eigenvalue of -Lap_h for mode m.
  double eigenvalue(std::size_t m) const { return lambda_[m]; }
  std::span<const double> eigenvalues() const { return lambda_; }

  /// Coefficient storage size in doubles (2*modes for Fourier).
  std::size_t coeff_size() const;

  /// Unnormalized forward transform.
  std::vector<double> forward(std::span<const double> values) const;
  /// Inverse of forward, normalization included.
  std::vector<double> inverse(std::span<const double> coeffs) const;

  /// values <- inverse(factor .* forward(values)); factor has one entry per mode.
  void apply_diagonal(std::span<double> values, std::span<const double> factor) const;

private:
  struct Plans;
  int nx_, ny_;
  Basis bx_, by_;
  std::vector<double> lambda_;
  std::unique_ptr<Plans> plans_;
  double norm_;
};

/// 1D eigenvalues of -Lap_h (second difference with spacing h) for a basis of n
/// grid unknowns.
std::vector<double> basis_eigenvalues(Basis b, int n, double h);

/// Cell-centered operator a*I + b*Lap_h + c*Lap_h^2 under Neumann or periodic BC.
class HelmholtzOperator {
public:
  HelmholtzOperator(const GridSpec& grid, double a, double b, double c,
                    ScalarBC bc = ScalarBC::Neumann);

  const GridSpec& grid() const { return grid_; }
  ScalarBC bc() const { return bc_; }
  double a() const { return a_; }
  double b() const { return b_; }
  double c() const { return c_; }

  /// Symbol a - b*lambda + c*lambda^2 for -Lap_h eigenvalue lambda.
  double symbol(double lambda) const { return a_ - b_ * lambda + c_ * lambda * lambda; }
  /// True when the constant mode is in the kernel.
  bool singular() const;

  /// Stencil application (not spectral), used for residual checks.
  ScalarField apply(const ScalarField& x) const;

  /// Solve op(x) = rhs. When singular, rhs must be mean-zero and mean_constraint
  /// fixes mean(x); otherwise a given mean_constraint overrides the mean of x.
  /// Throws NumericalError "incompatible singular system" / "non-finite input".
  ScalarField solve(const ScalarField& rhs, std::optional<double> mean_constraint = std::nullopt) const;

private:
  GridSpec grid_;
  double a_, b_, c_;
  ScalarBC bc_;
  std::shared_ptr<const ModalTransform> transform_;
  std::vector<double> inv_symbol_;
};

/// Shared transform for a grid and basis pair; plans are created once per key.
std::shared_ptr<const ModalTransform> modal_transform(const GridSpec& grid, Basis bx, Basis by);

/// Solve Lap_h x = rhs with mean(x) = 0 (Neumann or periodic).
ScalarField poisson_solve(const ScalarField& rhs);

/// sqrt(<f, (-Lap_h)^{-1} f>); throws std::invalid_argument "mean-zero required".
double hminus1_norm(const ScalarField& f);

} // namespace chb
