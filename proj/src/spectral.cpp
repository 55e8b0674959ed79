#include "chb/spectral.hpp"

#include "chb/errors.hpp"

#include <fftw3.h>

#include <cmath>
#include <map>
#include <mutex>
#include <numbers>
#include <stdexcept>
#include <tuple>

namespace chb {

namespace {

// FFTW planning is not thread-safe; execution with new-array calls is.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

fftw_r2r_kind forward_kind(Basis b) {
  switch (b) {
  case Basis::CosineCell:
    return FFTW_REDFT10;
  case Basis::SineCell:
    return FFTW_RODFT10;
  case Basis::SineFace:
    return FFTW_RODFT00;
  case Basis::Fourier:
    break;
  }
  throw std::logic_error("no r2r kind for Fourier basis");
}

fftw_r2r_kind inverse_kind(Basis b) {
  switch (b) {
  case Basis::CosineCell:
    return FFTW_REDFT01;
  case Basis::SineCell:
    return FFTW_RODFT01;
  case Basis::SineFace:
    return FFTW_RODFT00;
  case Basis::Fourier:
    break;
  }
  throw std::logic_error("no r2r kind for Fourier basis");
}

// forward followed by inverse multiplies by this factor per dimension
double roundtrip_factor(Basis b, int n) {
  return b == Basis::SineFace ? 2.0 * (n + 1) : (b == Basis::Fourier ? n : 2.0 * n);
}

} // namespace

std::vector<double> basis_eigenvalues(Basis b, int n, double h) {
  using std::numbers::pi;
  std::vector<double> lam(n);
  const double s = 4.0 / (h * h);
  for (int k = 0; k < n; ++k) {
    double theta = 0.0;
    switch (b) {
    case Basis::CosineCell:
      theta = pi * k / (2.0 * n);
      break;
    case Basis::SineCell:
      theta = pi * (k + 1) / (2.0 * n);
      break;
    case Basis::SineFace:
      theta = pi * (k + 1) / (2.0 * (n + 1));
      break;
    case Basis::Fourier:
      theta = pi * k / n;
      break;
    }
    const double sn = std::sin(theta);
    lam[k] = s * sn * sn;
  }
  return lam;
}

struct ModalTransform::Plans {
  fftw_plan fwd = nullptr;
  fftw_plan bwd = nullptr;
};

ModalTransform::ModalTransform(int nx, int ny, Basis bx, Basis by, double hx, double hy)
    : nx_(nx), ny_(ny), bx_(bx), by_(by), plans_(std::make_unique<Plans>()) {
  if (nx < 1 || ny < 1)
    throw std::invalid_argument("transform size must be positive");
  if ((bx == Basis::Fourier) != (by == Basis::Fourier))
    throw std::invalid_argument("Fourier basis must be used in both directions");

  const auto lx = basis_eigenvalues(bx, nx, hx);
  const auto ly = basis_eigenvalues(by, ny, hy);
  const bool fourier = bx == Basis::Fourier;
  const int ncx = fourier ? nx / 2 + 1 : nx;
  lambda_.resize(static_cast<std::size_t>(ncx) * ny);
  for (int j = 0; j < ny; ++j)
    for (int i = 0; i < ncx; ++i)
      lambda_[static_cast<std::size_t>(j) * ncx + i] = lx[i] + ly[j];
  norm_ = roundtrip_factor(bx, nx) * roundtrip_factor(by, ny);

  std::lock_guard<std::mutex> lock(planner_mutex());
  const unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
  std::vector<double> buf(size());
  if (fourier) {
    std::vector<double> cbuf(2 * modes());
    auto* c = reinterpret_cast<fftw_complex*>(cbuf.data());
    plans_->fwd = fftw_plan_dft_r2c_2d(ny, nx, buf.data(), c, flags);
    plans_->bwd = fftw_plan_dft_c2r_2d(ny, nx, c, buf.data(), flags);
  } else {
    plans_->fwd =
        fftw_plan_r2r_2d(ny, nx, buf.data(), buf.data(), forward_kind(by), forward_kind(bx), flags);
    plans_->bwd =
        fftw_plan_r2r_2d(ny, nx, buf.data(), buf.data(), inverse_kind(by), inverse_kind(bx), flags);
  }
  if (!plans_->fwd || !plans_->bwd)
    throw std::runtime_error("FFTW planning failed");
}

ModalTransform::~ModalTransform() {
  std::lock_guard<std::mutex> lock(planner_mutex());
  if (plans_->fwd)
    fftw_destroy_plan(plans_->fwd);
  if (plans_->bwd)
    fftw_destroy_plan(plans_->bwd);
}

std::size_t ModalTransform::coeff_size() const {
  return bx_ == Basis::Fourier ? 2 * modes() : modes();
}

std::vector<double> ModalTransform::forward(std::span<const double> values) const {
  if (values.size() != size())
    throw std::invalid_argument("transform input size mismatch");
  std::vector<double> in(values.begin(), values.end());
  if (bx_ == Basis::Fourier) {
    std::vector<double> out(coeff_size());
    fftw_execute_dft_r2c(plans_->fwd, in.data(), reinterpret_cast<fftw_complex*>(out.data()));
    return out;
  }
  fftw_execute_r2r(plans_->fwd, in.data(), in.data());
  return in;
}

std::vector<double> ModalTransform::inverse(std::span<const double> coeffs) const {
  if (coeffs.size() != coeff_size())
    throw std::invalid_argument("transform coefficient size mismatch");
  std::vector<double> c(coeffs.begin(), coeffs.end());
  std::vector<double> out(size());
  if (bx_ == Basis::Fourier)
    fftw_execute_dft_c2r(plans_->bwd, reinterpret_cast<fftw_complex*>(c.data()), out.data());
  else
    fftw_execute_r2r(plans_->bwd, c.data(), out.data());
  for (double& v : out)
    v /= norm_;
  return out;
}

void ModalTransform::apply_diagonal(std::span<double> values, std::span<const double> factor) const {
  if (values.size() != size() || factor.size() != modes())
    throw std::invalid_argument("diagonal application size mismatch");
  const double inv_norm = 1.0 / norm_;
  if (bx_ == Basis::Fourier) {
    std::vector<double> c(coeff_size());
    auto* cc = reinterpret_cast<fftw_complex*>(c.data());
    fftw_execute_dft_r2c(plans_->fwd, values.data(), cc);
    for (std::size_t m = 0; m < modes(); ++m) {
      const double f = factor[m] * inv_norm;
      cc[m][0] *= f;
      cc[m][1] *= f;
    }
    fftw_execute_dft_c2r(plans_->bwd, cc, values.data());
    return;
  }
  fftw_execute_r2r(plans_->fwd, values.data(), values.data());
  for (std::size_t m = 0; m < modes(); ++m)
    values[m] *= factor[m] * inv_norm;
  fftw_execute_r2r(plans_->bwd, values.data(), values.data());
}

std::shared_ptr<const ModalTransform> modal_transform(const GridSpec& grid, Basis bx, Basis by) {
  // nx/ny here are the transform sizes; SineFace drops the two wall faces.
  const int nx = bx == Basis::SineFace ? grid.nx - 1 : grid.nx;
  const int ny = by == Basis::SineFace ? grid.ny - 1 : grid.ny;
  using Key = std::tuple<int, int, int, int, double, double>;
  static std::mutex cache_mutex;
  static std::map<Key, std::shared_ptr<const ModalTransform>> cache;
  const Key key{nx, ny, static_cast<int>(bx), static_cast<int>(by), grid.hx(), grid.hy()};
  std::lock_guard<std::mutex> lock(cache_mutex);
  auto it = cache.find(key);
  if (it != cache.end())
    return it->second;
  auto t = std::make_shared<const ModalTransform>(nx, ny, bx, by, grid.hx(), grid.hy());
  cache.emplace(key, t);
  return t;
}

// -- HelmholtzOperator -----------------------------------------------------------

HelmholtzOperator::HelmholtzOperator(const GridSpec& grid, double a, double b, double c, ScalarBC bc)
    : grid_(grid), a_(a), b_(b), c_(c), bc_(bc) {
  grid_.validate();
  if (!std::isfinite(a) || !std::isfinite(b) || !std::isfinite(c))
    throw std::invalid_argument("operator coefficients must be finite");
  const Basis basis = bc == ScalarBC::Periodic ? Basis::Fourier : Basis::CosineCell;
  transform_ = modal_transform(grid_, basis, basis);

  const auto lam = transform_->eigenvalues();
  double scale = 0.0;
  for (double l : lam)
    scale = std::max(scale, std::abs(symbol(l)));
  inv_symbol_.resize(lam.size());
  for (std::size_t m = 0; m < lam.size(); ++m) {
    const double s = symbol(lam[m]);
    if (std::abs(s) <= 1e-14 * scale) {
      if (m != 0)
        throw std::invalid_argument("operator symbol vanishes on a non-constant mode");
      inv_symbol_[m] = 0.0;
    } else {
      inv_symbol_[m] = 1.0 / s;
    }
  }
}

bool HelmholtzOperator::singular() const { return inv_symbol_[0] == 0.0; }

ScalarField HelmholtzOperator::apply(const ScalarField& x) const {
  ScalarField out = a_ * x;
  if (b_ != 0.0 || c_ != 0.0) {
    const ScalarField lx = laplacian(x);
    if (b_ != 0.0)
      out += b_ * lx;
    if (c_ != 0.0)
      out += c_ * laplacian(lx);
  }
  return out;
}

ScalarField HelmholtzOperator::solve(const ScalarField& rhs, std::optional<double> mean_constraint) const {
  if (!(rhs.grid() == grid_) || rhs.bc() != bc_)
    throw std::invalid_argument("right-hand side does not match operator grid");
  if (!rhs.all_finite())
    throw NumericalError("non-finite input");
  if (singular()) {
    const double m = mean(rhs);
    if (std::abs(m) * std::sqrt(grid_.area()) > 1e-10 * l2_norm(rhs))
      throw NumericalError("incompatible singular system");
    if (!mean_constraint)
      throw std::invalid_argument("singular operator needs a mean constraint");
  }
  ScalarField x = rhs;
  transform_->apply_diagonal(x.values(), inv_symbol_);
  if (mean_constraint) {
    const double shift = *mean_constraint - mean(x);
    for (double& v : x.values())
      v += shift;
  }
  return x;
}

ScalarField poisson_solve(const ScalarField& rhs) {
  return HelmholtzOperator(rhs.grid(), 0.0, 1.0, 0.0, rhs.bc()).solve(rhs, 0.0);
}

double hminus1_norm(const ScalarField& f) {
  const double m = mean(f);
  if (std::abs(m) * std::sqrt(f.grid().area()) > 1e-10 * l2_norm(f))
    throw std::invalid_argument("mean-zero required");
  if (max_abs(f) == 0.0)
    return 0.0;
  ScalarField centered = f;
  remove_mean(centered);
  const ScalarField x = -1.0 * poisson_solve(centered);
  return std::sqrt(std::max(0.0, inner(centered, x)));
}

} // namespace chb
