#include "chb/grid.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace chb {

std::string to_string(ScalarBC bc) {
  return bc == ScalarBC::Neumann ? "neumann" : "periodic";
}

std::string to_string(VelocityBC bc) {
  switch (bc) {
  case VelocityBC::NoSlip:
    return "noslip";
  case VelocityBC::NoPenetration:
    return "nopenetration";
  case VelocityBC::Periodic:
    return "periodic";
  }
  return "?";
}

void GridSpec::validate() const {
  if (nx < 4 || ny < 4)
    throw std::invalid_argument("grid needs at least 4 cells per direction");
  if (!(lx > 0.0) || !(ly > 0.0) || !std::isfinite(lx) || !std::isfinite(ly))
    throw std::invalid_argument("grid side lengths must be positive and finite");
}

VelocityBC face_bc_for(ScalarBC bc) {
  return bc == ScalarBC::Periodic ? VelocityBC::Periodic : VelocityBC::NoPenetration;
}

// -- ScalarField ----------------------------------------------------------------

ScalarField::ScalarField(const GridSpec& grid, ScalarBC bc, double value)
    : grid_(grid), bc_(bc), values_(grid.cells(), value) {
  grid_.validate();
}

double ScalarField::ghosted(int i, int j) const {
  if (bc_ == ScalarBC::Periodic) {
    i = (i + grid_.nx) % grid_.nx;
    j = (j + grid_.ny) % grid_.ny;
  } else {
    i = std::clamp(i, 0, grid_.nx - 1);
    j = std::clamp(j, 0, grid_.ny - 1);
  }
  return (*this)(i, j);
}

bool ScalarField::all_finite() const {
  return std::all_of(values_.begin(), values_.end(), [](double v) { return std::isfinite(v); });
}

ScalarField& ScalarField::operator+=(const ScalarField& o) {
  if (!same_layout(o))
    throw std::invalid_argument("scalar field layout mismatch");
  for (std::size_t k = 0; k < values_.size(); ++k)
    values_[k] += o.values_[k];
  return *this;
}

ScalarField& ScalarField::operator-=(const ScalarField& o) {
  if (!same_layout(o))
    throw std::invalid_argument("scalar field layout mismatch");
  for (std::size_t k = 0; k < values_.size(); ++k)
    values_[k] -= o.values_[k];
  return *this;
}

ScalarField& ScalarField::operator*=(double s) {
  for (double& v : values_)
    v *= s;
  return *this;
}

ScalarField operator+(ScalarField a, const ScalarField& b) { return a += b; }
ScalarField operator-(ScalarField a, const ScalarField& b) { return a -= b; }
ScalarField operator*(double s, ScalarField a) { return a *= s; }

// -- MacVector ------------------------------------------------------------------

MacVector::MacVector(const GridSpec& grid, VelocityBC bc)
    : grid_(grid), bc_(bc),
      ux_(static_cast<std::size_t>(grid.nx + 1) * grid.ny, 0.0),
      uy_(static_cast<std::size_t>(grid.nx) * (grid.ny + 1), 0.0) {
  grid_.validate();
}

bool MacVector::all_finite() const {
  auto fin = [](double v) { return std::isfinite(v); };
  return std::all_of(ux_.begin(), ux_.end(), fin) && std::all_of(uy_.begin(), uy_.end(), fin);
}

double MacVector::boundary_normal_max() const {
  if (bc_ == VelocityBC::Periodic)
    return 0.0;
  double m = 0.0;
  for (int j = 0; j < grid_.ny; ++j)
    m = std::max({m, std::abs(ux(0, j)), std::abs(ux(grid_.nx, j))});
  for (int i = 0; i < grid_.nx; ++i)
    m = std::max({m, std::abs(uy(i, 0)), std::abs(uy(i, grid_.ny))});
  return m;
}

void MacVector::enforce_boundary() {
  const int nx = grid_.nx, ny = grid_.ny;
  if (bc_ == VelocityBC::Periodic) {
    for (int j = 0; j < ny; ++j)
      ux(nx, j) = ux(0, j);
    for (int i = 0; i < nx; ++i)
      uy(i, ny) = uy(i, 0);
    return;
  }
  for (int j = 0; j < ny; ++j)
    ux(0, j) = ux(nx, j) = 0.0;
  for (int i = 0; i < nx; ++i)
    uy(i, 0) = uy(i, ny) = 0.0;
}

MacVector& MacVector::operator+=(const MacVector& o) {
  if (!(grid_ == o.grid_))
    throw std::invalid_argument("face field grid mismatch");
  for (std::size_t k = 0; k < ux_.size(); ++k)
    ux_[k] += o.ux_[k];
  for (std::size_t k = 0; k < uy_.size(); ++k)
    uy_[k] += o.uy_[k];
  return *this;
}

MacVector& MacVector::operator-=(const MacVector& o) {
  if (!(grid_ == o.grid_))
    throw std::invalid_argument("face field grid mismatch");
  for (std::size_t k = 0; k < ux_.size(); ++k)
    ux_[k] -= o.ux_[k];
  for (std::size_t k = 0; k < uy_.size(); ++k)
    uy_[k] -= o.uy_[k];
  return *this;
}

MacVector& MacVector::operator*=(double s) {
  for (double& v : ux_)
    v *= s;
  for (double& v : uy_)
    v *= s;
  return *this;
}

MacVector operator+(MacVector a, const MacVector& b) { return a += b; }
MacVector operator-(MacVector a, const MacVector& b) { return a -= b; }
MacVector operator*(double s, MacVector a) { return a *= s; }

// -- operators ------------------------------------------------------------------

ScalarField laplacian(const ScalarField& f) {
  const GridSpec& g = f.grid();
  const double ax = 1.0 / (g.hx() * g.hx());
  const double ay = 1.0 / (g.hy() * g.hy());
  ScalarField out(g, f.bc());
  for (int j = 0; j < g.ny; ++j) {
    for (int i = 0; i < g.nx; ++i) {
      const double c = f(i, j);
      out(i, j) = ax * (f.ghosted(i + 1, j) - 2.0 * c + f.ghosted(i - 1, j)) +
                  ay * (f.ghosted(i, j + 1) - 2.0 * c + f.ghosted(i, j - 1));
    }
  }
  return out;
}

MacVector gradient_to_faces(const ScalarField& f) {
  const GridSpec& g = f.grid();
  const bool periodic = f.bc() == ScalarBC::Periodic;
  MacVector out(g, face_bc_for(f.bc()));
  const int i0 = periodic ? 0 : 1;
  for (int j = 0; j < g.ny; ++j)
    for (int i = i0; i < g.nx; ++i)
      out.ux(i, j) = (f(i, j) - f.ghosted(i - 1, j)) / g.hx();
  for (int j = i0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i)
      out.uy(i, j) = (f(i, j) - f.ghosted(i, j - 1)) / g.hy();
  out.enforce_boundary();
  return out;
}

ScalarField divergence(const MacVector& v) {
  const GridSpec& g = v.grid();
  ScalarField out(g, v.bc() == VelocityBC::Periodic ? ScalarBC::Periodic : ScalarBC::Neumann);
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i)
      out(i, j) = (v.ux(i + 1, j) - v.ux(i, j)) / g.hx() + (v.uy(i, j + 1) - v.uy(i, j)) / g.hy();
  return out;
}

MacVector average_to_faces(const ScalarField& f) {
  const GridSpec& g = f.grid();
  MacVector out(g, face_bc_for(f.bc()));
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i <= g.nx; ++i)
      out.ux(i, j) = 0.5 * (f.ghosted(i, j) + f.ghosted(i - 1, j));
  for (int j = 0; j <= g.ny; ++j)
    for (int i = 0; i < g.nx; ++i)
      out.uy(i, j) = 0.5 * (f.ghosted(i, j) + f.ghosted(i, j - 1));
  if (f.bc() == ScalarBC::Periodic)
    out.enforce_boundary();
  return out;
}

MacVector face_product(const MacVector& a, const MacVector& b) {
  if (!(a.grid() == b.grid()))
    throw std::invalid_argument("face field grid mismatch");
  MacVector out(a.grid(), a.bc());
  auto ox = out.ux_values();
  auto oy = out.uy_values();
  auto ax = a.ux_values(), bx = b.ux_values();
  auto ay = a.uy_values(), by = b.uy_values();
  for (std::size_t k = 0; k < ox.size(); ++k)
    ox[k] = ax[k] * bx[k];
  for (std::size_t k = 0; k < oy.size(); ++k)
    oy[k] = ay[k] * by[k];
  return out;
}

MacVector vector_laplacian(const MacVector& v) {
  const GridSpec& g = v.grid();
  const int nx = g.nx, ny = g.ny;
  const double ax = 1.0 / (g.hx() * g.hx());
  const double ay = 1.0 / (g.hy() * g.hy());
  MacVector out(g, v.bc());

  if (v.bc() == VelocityBC::Periodic) {
    auto wx = [nx](int i) { return (i + nx) % nx; };
    auto wy = [ny](int j) { return (j + ny) % ny; };
    for (int j = 0; j < ny; ++j)
      for (int i = 0; i < nx; ++i) {
        const double c = v.ux(i, j);
        out.ux(i, j) = ax * (v.ux(wx(i + 1), j) - 2.0 * c + v.ux(wx(i - 1), j)) +
                       ay * (v.ux(i, wy(j + 1)) - 2.0 * c + v.ux(i, wy(j - 1)));
      }
    for (int j = 0; j < ny; ++j)
      for (int i = 0; i < nx; ++i) {
        const double c = v.uy(i, j);
        out.uy(i, j) = ax * (v.uy(wx(i + 1), j) - 2.0 * c + v.uy(wx(i - 1), j)) +
                       ay * (v.uy(i, wy(j + 1)) - 2.0 * c + v.uy(i, wy(j - 1)));
      }
    out.enforce_boundary();
    return out;
  }

  // Tangential ghost: -u for no-slip (zero wall trace), +u for free slip.
  const double mirror = v.bc() == VelocityBC::NoSlip ? -1.0 : 1.0;
  for (int j = 0; j < ny; ++j)
    for (int i = 1; i < nx; ++i) {
      const double c = v.ux(i, j);
      const double below = j > 0 ? v.ux(i, j - 1) : mirror * c;
      const double above = j < ny - 1 ? v.ux(i, j + 1) : mirror * c;
      out.ux(i, j) = ax * (v.ux(i + 1, j) - 2.0 * c + v.ux(i - 1, j)) + ay * (above - 2.0 * c + below);
    }
  for (int j = 1; j < ny; ++j)
    for (int i = 0; i < nx; ++i) {
      const double c = v.uy(i, j);
      const double left = i > 0 ? v.uy(i - 1, j) : mirror * c;
      const double right = i < nx - 1 ? v.uy(i + 1, j) : mirror * c;
      out.uy(i, j) = ax * (right - 2.0 * c + left) + ay * (v.uy(i, j + 1) - 2.0 * c + v.uy(i, j - 1));
    }
  out.enforce_boundary();
  return out;
}

// -- reductions -----------------------------------------------------------------

double sum_weighted(const ScalarField& f) {
  double s = 0.0;
  for (double v : f.values())
    s += v;
  return s * f.grid().cell_area();
}

double mean(const ScalarField& f) {
  if (f.size() == 0)
    return 0.0;
  // shifted sum: exact for uniform fields
  const double v0 = f.values()[0];
  double s = 0.0;
  for (double v : f.values())
    s += v - v0;
  return v0 + s / static_cast<double>(f.size());
}

double inner(const ScalarField& a, const ScalarField& b) {
  if (!(a.grid() == b.grid()))
    throw std::invalid_argument("scalar field grid mismatch");
  double s = 0.0;
  auto av = a.values(), bv = b.values();
  for (std::size_t k = 0; k < av.size(); ++k)
    s += av[k] * bv[k];
  return s * a.grid().cell_area();
}

double inner(const MacVector& a, const MacVector& b) {
  if (!(a.grid() == b.grid()))
    throw std::invalid_argument("face field grid mismatch");
  const GridSpec& g = a.grid();
  // Wall normal faces carry no weight; periodic skips the duplicated face.
  const bool periodic = a.bc() == VelocityBC::Periodic;
  const int lo = periodic ? 0 : 1;
  double s = 0.0;
  for (int j = 0; j < g.ny; ++j)
    for (int i = lo; i < g.nx; ++i)
      s += a.ux(i, j) * b.ux(i, j);
  for (int j = lo; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i)
      s += a.uy(i, j) * b.uy(i, j);
  return s * g.cell_area();
}

double max_abs(const ScalarField& f) {
  double m = 0.0;
  for (double v : f.values())
    m = std::max(m, std::abs(v));
  return m;
}

double max_abs(const MacVector& v) {
  double m = 0.0;
  for (double x : v.ux_values())
    m = std::max(m, std::abs(x));
  for (double x : v.uy_values())
    m = std::max(m, std::abs(x));
  return m;
}

double l2_norm(const ScalarField& f) { return std::sqrt(inner(f, f)); }
double l2_norm(const MacVector& v) { return std::sqrt(inner(v, v)); }

double grad_sq(const ScalarField& f) {
  const MacVector g = gradient_to_faces(f);
  return inner(g, g);
}

double h1_norm(const ScalarField& f) { return std::sqrt(inner(f, f) + grad_sq(f)); }

double vector_grad_sq(const MacVector& v) {
  const GridSpec& g = v.grid();
  const int nx = g.nx, ny = g.ny;
  const double ax = 1.0 / (g.hx() * g.hx());
  const double ay = 1.0 / (g.hy() * g.hy());
  double s = 0.0;

  if (v.bc() == VelocityBC::Periodic) {
    for (int j = 0; j < ny; ++j)
      for (int i = 0; i < nx; ++i) {
        const double dxx = v.ux(i + 1, j) - v.ux(i, j);
        const double dxy = v.ux(i, (j + 1) % ny) - v.ux(i, j);
        const double dyx = v.uy((i + 1) % nx, j) - v.uy(i, j);
        const double dyy = v.uy(i, j + 1) - v.uy(i, j);
        s += ax * (dxx * dxx + dyx * dyx) + ay * (dxy * dxy + dyy * dyy);
      }
    return s * g.cell_area();
  }

  // Wall edges of the tangential component see the ghost at half weight.
  const double wall = v.bc() == VelocityBC::NoSlip ? 2.0 : 0.0;
  for (int j = 0; j < ny; ++j) {
    for (int i = 0; i < nx; ++i) {
      const double d = v.ux(i + 1, j) - v.ux(i, j);
      s += ax * d * d;
    }
    for (int i = 1; i < nx; ++i) {
      if (j < ny - 1) {
        const double d = v.ux(i, j + 1) - v.ux(i, j);
        s += ay * d * d;
      }
      if (j == 0 || j == ny - 1)
        s += ay * wall * v.ux(i, j) * v.ux(i, j);
    }
  }
  for (int i = 0; i < nx; ++i) {
    for (int j = 0; j < ny; ++j) {
      const double d = v.uy(i, j + 1) - v.uy(i, j);
      s += ay * d * d;
    }
    for (int j = 1; j < ny; ++j) {
      if (i < nx - 1) {
        const double d = v.uy(i + 1, j) - v.uy(i, j);
        s += ax * d * d;
      }
      if (i == 0 || i == nx - 1)
        s += ax * wall * v.uy(i, j) * v.uy(i, j);
    }
  }
  return s * g.cell_area();
}

double h1_norm(const MacVector& v) { return std::sqrt(inner(v, v) + vector_grad_sq(v)); }

double remove_mean(ScalarField& f) {
  const double m = mean(f);
  for (double& v : f.values())
    v -= m;
  return m;
}

} // namespace chb
