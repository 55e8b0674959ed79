#include "chb/equilibrium.hpp"

#include "chb/errors.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>
#include <stdexcept>

namespace chb {

namespace {

struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r2 = 0.0;
};

LineFit least_squares(const std::vector<double>& x, const std::vector<double>& y) {
  const double n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    mx += x[k];
    my += y[k];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    sxx += (x[k] - mx) * (x[k] - mx);
    sxy += (x[k] - mx) * (y[k] - my);
    syy += (y[k] - my) * (y[k] - my);
  }
  LineFit f;
  f.slope = sxx > 0.0 ? sxy / sxx : 0.0;
  f.intercept = my - f.slope * mx;
  double sse = 0.0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    const double e = y[k] - (f.intercept + f.slope * x[k]);
    sse += e * e;
  }
  f.r2 = syy > 0.0 ? 1.0 - sse / syy : (sse == 0.0 ? 1.0 : 0.0);
  return f;
}

} // namespace

double stationarity_residual(const ScalarField& z, const Potential& pot, double eps) {
  ScalarField mu = chemical_potential(z, pot, eps);
  remove_mean(mu);
  return l2_norm(mu);
}

StationaryState solve_stationary(const ScalarField& z0, const Potential& pot, double eps, double tol,
                                 const StationaryOptions& opts) {
  if (!z0.all_finite())
    throw std::invalid_argument("stationary solve needs a finite initial field");
  if (!(tol > 0.0))
    throw std::invalid_argument("stationary tolerance must be > 0");
  const GridSpec& g = z0.grid();

  PhysParams params;
  params.eps = eps;
  SolverConfig cfg;
  cfg.dt = opts.dt;
  cfg.bc = z0.bc();
  StepSources sources;
  const VelocityBC vbc = face_bc_for(z0.bc());
  sources.prescribed_velocity = [&](double) { return MacVector(g, vbc); };
  Stepper stepper(g, params, pot, cfg, sources);

  StationaryState out;
  out.mean = mean(z0);
  SimState s = initial_state(z0);
  double res = stationarity_residual(s.phi, pot, eps);
  double best = res;
  double e_prev = energy(s.phi, pot, eps);
  while (res > tol) {
    if (out.iterations >= opts.max_iters)
      throw ConvergenceError("stationary solve did not converge in " + std::to_string(opts.max_iters) +
                                 " iterations",
                             best);
    s = stepper.step(s);
    ++out.iterations;
    res = stationarity_residual(s.phi, pot, eps);
    best = std::min(best, res);
    const double e = energy(s.phi, pot, eps);
    if (e > e_prev + 1e-12 * std::max(1.0, std::abs(e_prev)))
      out.energy_monotone = false;
    e_prev = e;
  }
  out.z = s.phi;
  out.residual = res;
  out.lagrange_const = mean(chemical_potential(out.z, pot, eps));
  return out;
}

RateFit fit_decay(const std::vector<DecayPoint>& series, double window_lo, double window_hi) {
  if (!(window_hi > window_lo))
    throw std::invalid_argument("fit window needs lo < hi");
  std::vector<double> la, lt, ly;
  for (const auto& p : series) {
    if (p.t < window_lo || p.t > window_hi || !std::isfinite(p.value) || !std::isfinite(p.t) ||
        p.value < 1e-13 || p.t <= -1.0)
      continue;
    la.push_back(std::log1p(p.t));
    lt.push_back(p.t);
    ly.push_back(std::log(p.value));
  }
  if (la.size() < 5)
    throw std::invalid_argument("fewer than 5 usable points in the fit window");

  const LineFit alg = least_squares(la, ly);
  if (!(alg.slope < 0.0))
    throw std::invalid_argument("no decay detected");
  const LineFit ex = least_squares(lt, ly);

  RateFit f;
  f.exponent = -alg.slope;
  f.theta_hat = f.exponent / (1.0 + 2.0 * f.exponent);
  f.prefactor = std::exp(alg.intercept);
  f.r2 = alg.r2;
  f.exp_rate = -ex.slope;
  f.exp_prefactor = std::exp(ex.intercept);
  f.exp_r2 = ex.r2;
  f.exponential_preferred = ex.r2 > alg.r2;
  f.window_lo = window_lo;
  f.window_hi = window_hi;
  f.points = la.size();
  return f;
}

void write_rate_fit_csv(std::ostream& out, const RateFit& fit) {
  out << kRateFitHeader << '\n';
  char alg[256], ex[256];
  std::snprintf(alg, sizeof alg, "algebraic,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n", fit.exponent,
                fit.theta_hat, fit.prefactor, fit.r2, fit.window_lo, fit.window_hi);
  std::snprintf(ex, sizeof ex, "exponential,%.17g,nan,%.17g,%.17g,%.17g,%.17g\n", fit.exp_rate,
                fit.exp_prefactor, fit.exp_r2, fit.window_lo, fit.window_hi);
  if (fit.exponential_preferred)
    out << ex << alg;
  else
    out << alg << ex;
}

VelocityDecayReport velocity_decay_check(const std::vector<DecayPoint>& series, const RateFit& fit) {
  VelocityDecayReport rep;
  rep.rate = fit.exponent / 4.0;
  if (series.empty()) {
    rep.detail = "empty velocity series";
    return rep;
  }
  rep.final_norm = series.back().value;

  std::vector<DecayPoint> win;
  for (const auto& p : series)
    if (p.t >= fit.window_lo && p.t <= fit.window_hi)
      win.push_back(p);
  if (win.size() < 2)
    win = series;
  const std::size_t half = win.size() / 2;
  auto envelope = [&](double t) { return std::pow(1.0 + t, -rep.rate); };

  for (std::size_t k = 0; k < half; ++k)
    rep.constant = std::max(rep.constant, win[k].value / envelope(win[k].t));
  bool bounded = true;
  for (std::size_t k = half; k < win.size(); ++k) {
    const double bound = rep.constant * envelope(win[k].t);
    if (!std::isfinite(win[k].value) || win[k].value > bound) {
      bounded = false;
      rep.worst_ratio = bound > 0.0 ? std::max(rep.worst_ratio, win[k].value / bound)
                                    : std::numeric_limits<double>::infinity();
    } else if (bound > 0.0) {
      rep.worst_ratio = std::max(rep.worst_ratio, win[k].value / bound);
    }
  }
  const bool vanishes = rep.final_norm < 1e-8;
  rep.ok = bounded && vanishes;
  char buf[256];
  std::snprintf(buf, sizeof buf, "c=%.6g rate=%.6g worst_ratio=%.6g final=%.6g%s%s", rep.constant, rep.rate,
                rep.worst_ratio, rep.final_norm, bounded ? "" : " bound violated",
                vanishes ? "" : " velocity not below 1e-8");
  rep.detail = buf;
  return rep;
}

RelaxationReport relaxation_study(const ScalarField& phi0, const PhysParams& params, const Potential& pot,
                                  const SolverConfig& cfg, double window_lo, double window_hi,
                                  double sample_every) {
  RelaxationReport rep;
  std::vector<std::pair<double, ScalarField>> samples;
  const long stride = std::max(1L, std::lround(sample_every / cfg.dt));
  samples.emplace_back(0.0, phi0);
  rep.u_norm.push_back({0.0, 0.0});
  RunOptions opts;
  opts.observer = [&](const SimState& s, const DiagnosticsRecord&, const FlowReport&) {
    if (s.step % stride != 0)
      return;
    samples.emplace_back(s.t, s.phi);
    rep.u_norm.push_back({s.t, h1_norm(s.u)});
  };
  rep.run = run(phi0, params, pot, cfg, opts);
  if (rep.run.blew_up)
    throw NumericalError("relaxation run failed: " + rep.run.failure);

  const ScalarField& last = rep.run.final_state.phi;
  rep.final_residual = stationarity_residual(last, pot, params.eps);
  rep.limit.z = last;
  rep.limit.residual = rep.final_residual;
  rep.limit.mean = mean(last);
  if (rep.final_residual > 1e-10) {
    try {
      rep.limit = solve_stationary(last, pot, params.eps, 1e-10);
    } catch (const ConvergenceError&) {
      // keep the final field; the fit then measures distance to it
    }
  }
  rep.limit.lagrange_const = mean(chemical_potential(rep.limit.z, pot, params.eps));

  for (const auto& [t, phi] : samples)
    rep.phi_gap.push_back({t, h1_norm(phi - rep.limit.z)});

  const double hi = window_hi > 0.0 ? window_hi : 0.5 * cfg.t_end;
  try {
    rep.fit = fit_decay(rep.phi_gap, window_lo, hi);
    rep.fit_ok = true;
    rep.velocity = velocity_decay_check(rep.u_norm, rep.fit);
  } catch (const std::invalid_argument& e) {
    rep.fit_error = e.what();
    RateFit none;
    none.window_lo = window_lo;
    none.window_hi = hi;
    rep.velocity = velocity_decay_check(rep.u_norm, none);
  }
  return rep;
}

} // namespace chb
