#pragma once

// Dense reference operators assembled from 1D difference matrices with
// Kronecker products. They share nothing with the library's stencil or
// transform code and serve as independent oracles on small grids.

#include "chb/grid.hpp"

#include <Eigen/Dense>

#include <random>

namespace chb::test {

using Eigen::MatrixXd;
using Eigen::VectorXd;

inline MatrixXd kron(const MatrixXd& a, const MatrixXd& b) {
  MatrixXd out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j)
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

inline MatrixXd eye(int n) { return MatrixXd::Identity(n, n); }

/// 1D second difference on n cell centers with mirrored ghosts.
inline MatrixXd neumann_1d(int n, double h) {
  MatrixXd m = MatrixXd::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    if (i > 0) {
      m(i, i - 1) = 1.0;
      m(i, i) -= 1.0;
    }
    if (i < n - 1) {
      m(i, i + 1) = 1.0;
      m(i, i) -= 1.0;
    }
  }
  return m / (h * h);
}

/// 1D second difference on n cell centers with odd ghosts (zero at the wall).
inline MatrixXd wall_cell_1d(int n, double h) {
  MatrixXd m = neumann_1d(n, h) * h * h;
  m(0, 0) -= 2.0;
  m(n - 1, n - 1) -= 2.0;
  return m / (h * h);
}

/// 1D second difference on the n-1 interior faces with zero end values.
inline MatrixXd wall_face_1d(int n, double h) {
  const int m = n - 1;
  MatrixXd d = MatrixXd::Zero(m, m);
  for (int i = 0; i < m; ++i) {
    d(i, i) = -2.0;
    if (i > 0)
      d(i, i - 1) = 1.0;
    if (i < m - 1)
      d(i, i + 1) = 1.0;
  }
  return d / (h * h);
}

/// (n-1) x n difference from cells to interior faces.
inline MatrixXd diff_1d(int n, double h) {
  MatrixXd d = MatrixXd::Zero(n - 1, n);
  for (int i = 0; i < n - 1; ++i) {
    d(i, i) = -1.0 / h;
    d(i, i + 1) = 1.0 / h;
  }
  return d;
}

/// Cell Laplacian, row-major y-outer indexing (idx = j*nx + i).
inline MatrixXd cell_laplacian(const GridSpec& g) {
  return kron(eye(g.ny), neumann_1d(g.nx, g.hx())) + kron(neumann_1d(g.ny, g.hy()), eye(g.nx));
}

/// Cells -> [ux interior (ny x (nx-1)); uy interior ((ny-1) x nx)].
inline MatrixXd face_gradient(const GridSpec& g) {
  const MatrixXd gx = kron(eye(g.ny), diff_1d(g.nx, g.hx()));
  const MatrixXd gy = kron(diff_1d(g.ny, g.hy()), eye(g.nx));
  MatrixXd out(gx.rows() + gy.rows(), gx.cols());
  out << gx, gy;
  return out;
}

/// No-slip vector Laplacian on interior faces.
inline MatrixXd noslip_vector_laplacian(const GridSpec& g) {
  const MatrixXd lx = kron(wall_cell_1d(g.ny, g.hy()), eye(g.nx - 1)) +
                      kron(eye(g.ny), wall_face_1d(g.nx, g.hx()));
  const MatrixXd ly = kron(wall_face_1d(g.ny, g.hy()), eye(g.nx)) +
                      kron(eye(g.ny - 1), wall_cell_1d(g.nx, g.hx()));
  MatrixXd out = MatrixXd::Zero(lx.rows() + ly.rows(), lx.cols() + ly.cols());
  out.topLeftCorner(lx.rows(), lx.cols()) = lx;
  out.bottomRightCorner(ly.rows(), ly.cols()) = ly;
  return out;
}

// Saddle system [A G; G^T 0] with a mean-zero multiplier row, A on interior faces.
struct DenseFlow {
  VectorXd u, p;
};

inline DenseFlow dense_flow(const GridSpec& g, const MatrixXd& A, const VectorXd& f) {
  const MatrixXd G = face_gradient(g);
  const Eigen::Index nu = G.rows(), np = G.cols();
  MatrixXd K = MatrixXd::Zero(nu + np + 1, nu + np + 1);
  K.topLeftCorner(nu, nu) = A;
  K.block(0, nu, nu, np) = G;
  K.block(nu, 0, np, nu) = G.transpose();
  K.block(nu + np, nu, 1, np).setOnes();
  K.block(nu, nu + np, np, 1).setOnes();
  VectorXd rhs = VectorXd::Zero(nu + np + 1);
  rhs.head(nu) = f;
  const VectorXd x = K.fullPivLu().solve(rhs);
  return {x.head(nu), x.segment(nu, np)};
}

inline VectorXd to_vec(const ScalarField& f) {
  VectorXd v(f.size());
  for (std::size_t k = 0; k < f.size(); ++k)
    v(static_cast<Eigen::Index>(k)) = f.values()[k];
  return v;
}

inline ScalarField to_field(const VectorXd& v, const GridSpec& g, ScalarBC bc = ScalarBC::Neumann) {
  ScalarField f(g, bc);
  for (std::size_t k = 0; k < f.size(); ++k)
    f.values()[k] = v(static_cast<Eigen::Index>(k));
  return f;
}

/// Interior faces of a wall-bounded face field, ux block then uy block.
inline VectorXd to_vec(const MacVector& u) {
  const GridSpec& g = u.grid();
  VectorXd v((g.nx - 1) * g.ny + g.nx * (g.ny - 1));
  Eigen::Index k = 0;
  for (int j = 0; j < g.ny; ++j)
    for (int i = 1; i < g.nx; ++i)
      v(k++) = u.ux(i, j);
  for (int j = 1; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i)
      v(k++) = u.uy(i, j);
  return v;
}

inline MacVector to_faces(const VectorXd& v, const GridSpec& g, VelocityBC bc) {
  MacVector u(g, bc);
  Eigen::Index k = 0;
  for (int j = 0; j < g.ny; ++j)
    for (int i = 1; i < g.nx; ++i)
      u.ux(i, j) = v(k++);
  for (int j = 1; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i)
      u.uy(i, j) = v(k++);
  return u;
}

inline ScalarField random_field(const GridSpec& g, unsigned seed, ScalarBC bc = ScalarBC::Neumann) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  ScalarField f(g, bc);
  for (double& v : f.values())
    v = dist(rng);
  return f;
}

inline MacVector random_faces(const GridSpec& g, unsigned seed, VelocityBC bc = VelocityBC::NoPenetration) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  MacVector u(g, bc);
  for (double& v : u.ux_values())
    v = dist(rng);
  for (double& v : u.uy_values())
    v = dist(rng);
  u.enforce_boundary();
  return u;
}

inline double rel_diff(const VectorXd& a, const VectorXd& b) {
  return (a - b).norm() / std::max(b.norm(), 1e-300);
}

} // namespace chb::test
