#pragma once

// Uniform 2D MAC grid on the rectangle [0,lx]x[0,ly].
//
// Scalars (phi, mu, p) live at cell centers, velocity components on cell
// faces. Homogeneous Neumann conditions on scalars are realized by mirrored
// ghost cells; no-slip on velocities by zero normal faces plus odd-mirrored
// tangential ghosts. Storage is row-major with y as the outer index.

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace chb {

enum class ScalarBC { Neumann, Periodic };
enum class VelocityBC { NoSlip, NoPenetration, Periodic };

std::string to_string(ScalarBC bc);
std::string to_string(VelocityBC bc);

struct GridSpec {
  int nx = 64;
  int ny = 64;
  double lx = 1.0;
  double ly = 1.0;

  double hx() const { return lx / nx; }
  double hy() const { return ly / ny; }
  double cell_area() const { return hx() * hy(); }
  double area() const { return lx * ly; }
  std::size_t cells() const { return static_cast<std::size_t>(nx) * ny; }
  double xc(int i) const { return (i + 0.5) * hx(); }
  double yc(int j) const { return (j + 0.5) * hy(); }

  /// Throws std::invalid_argument on nx,ny < 4 or non-positive/non-finite lengths.
  void validate() const;

  bool operator==(const GridSpec&) const = default;
};

class ScalarField {
public:
  ScalarField() = default;
  explicit ScalarField(const GridSpec& grid, ScalarBC bc = ScalarBC::Neumann, double value = 0.0);

  const GridSpec& grid() const { return grid_; }
  ScalarBC bc() const { return bc_; }
  int nx() const { return grid_.nx; }
  int ny() const { return grid_.ny; }

  double& operator()(int i, int j) { return values_[static_cast<std::size_t>(j) * grid_.nx + i]; }
  double operator()(int i, int j) const { return values_[static_cast<std::size_t>(j) * grid_.nx + i]; }

  std::span<double> values() { return values_; }
  std::span<const double> values() const { return values_; }
  std::size_t size() const { return values_.size(); }

  /// Value at (i,j) with ghost handling for i in [-1,nx], j in [-1,ny].
  double ghosted(int i, int j) const;

  bool all_finite() const;
  bool same_layout(const ScalarField& o) const { return grid_ == o.grid_ && bc_ == o.bc_; }

  ScalarField& operator+=(const ScalarField& o);
  ScalarField& operator-=(const ScalarField& o);
  ScalarField& operator*=(double s);

private:
  GridSpec grid_{};
  ScalarBC bc_ = ScalarBC::Neumann;
  std::vector<double> values_;
};

ScalarField operator+(ScalarField a, const ScalarField& b);
ScalarField operator-(ScalarField a, const ScalarField& b);
ScalarField operator*(double s, ScalarField a);

/// Face-centered vector field. ux has (nx+1)*ny entries on vertical faces,
/// uy has nx*(ny+1) entries on horizontal faces. In periodic mode the last
/// face column/row duplicates the first.
class MacVector {
public:
  MacVector() = default;
  explicit MacVector(const GridSpec& grid, VelocityBC bc = VelocityBC::NoSlip);

  const GridSpec& grid() const { return grid_; }
  VelocityBC bc() const { return bc_; }
  void set_bc(VelocityBC bc) { bc_ = bc; }

  double& ux(int i, int j) { return ux_[static_cast<std::size_t>(j) * (grid_.nx + 1) + i]; }
  double ux(int i, int j) const { return ux_[static_cast<std::size_t>(j) * (grid_.nx + 1) + i]; }
  double& uy(int i, int j) { return uy_[static_cast<std::size_t>(j) * grid_.nx + i]; }
  double uy(int i, int j) const { return uy_[static_cast<std::size_t>(j) * grid_.nx + i]; }

  std::span<double> ux_values() { return ux_; }
  std::span<const double> ux_values() const { return ux_; }
  std::span<double> uy_values() { return uy_; }
  std::span<const double> uy_values() const { return uy_; }

  bool all_finite() const;
  /// Max |normal component| on the domain boundary (0 for periodic).
  double boundary_normal_max() const;
  /// Zero normal boundary faces (walls) or copy first face into the duplicate (periodic).
  void enforce_boundary();

  MacVector& operator+=(const MacVector& o);
  MacVector& operator-=(const MacVector& o);
  MacVector& operator*=(double s);

private:
  GridSpec grid_{};
  VelocityBC bc_ = VelocityBC::NoSlip;
  std::vector<double> ux_;
  std::vector<double> uy_;
};

MacVector operator+(MacVector a, const MacVector& b);
MacVector operator-(MacVector a, const MacVector& b);
MacVector operator*(double s, MacVector a);

/// Velocity BC matching a scalar BC for the gradient of that scalar.
VelocityBC face_bc_for(ScalarBC bc);

// -- discrete differential operators -----------------------------------------

/// 5-point Laplacian with mirrored (Neumann) or wrapped (periodic) ghosts.
ScalarField laplacian(const ScalarField& f);

/// Face differences of adjacent cells; wall normal faces get 0.
MacVector gradient_to_faces(const ScalarField& f);

/// Per-cell flux difference; the result is periodic iff v is.
ScalarField divergence(const MacVector& v);

/// Two-cell arithmetic average onto faces (wall faces take the adjacent cell value).
MacVector average_to_faces(const ScalarField& f);

/// Pointwise product on faces.
MacVector face_product(const MacVector& a, const MacVector& b);

/// Componentwise 5-point Laplacian of a face field under its velocity BC.
/// NoSlip: zero normal faces, odd-mirrored tangential ghosts.
/// NoPenetration: zero normal faces, even-mirrored tangential ghosts.
MacVector vector_laplacian(const MacVector& v);

// -- reductions ---------------------------------------------------------------

double mean(const ScalarField& f);
double sum_weighted(const ScalarField& f);
double inner(const ScalarField& a, const ScalarField& b);
double inner(const MacVector& a, const MacVector& b);
double max_abs(const ScalarField& f);
double max_abs(const MacVector& v);

double l2_norm(const ScalarField& f);
double l2_norm(const MacVector& v);
/// ||grad f||^2 over faces.
double grad_sq(const ScalarField& f);
double h1_norm(const ScalarField& f);
/// Discrete Dirichlet form of a face field, equal to <-vector_laplacian(v), v>.
double vector_grad_sq(const MacVector& v);
double h1_norm(const MacVector& v);

/// Subtract the mean in place; returns the removed mean.
double remove_mean(ScalarField& f);

} // namespace chb
