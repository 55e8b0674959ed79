#include "chb/equilibrium.hpp"
#include "chb/errors.hpp"
#include "dense_oracle.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

using namespace chb;
using chb::test::random_field;

namespace {

std::vector<DecayPoint> series(double t_end, int n, auto fn) {
  std::vector<DecayPoint> s;
  for (int k = 0; k <= n; ++k) {
    const double t = t_end * k / n;
    s.push_back({t, fn(t)});
  }
  return s;
}

ScalarField stripe(const GridSpec& g, double width, double eps) {
  ScalarField f(g);
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i)
      f(i, j) = std::tanh((0.5 * width - std::abs(g.xc(i) - 0.5 * g.lx)) / (std::sqrt(2.0) * eps));
  return f;
}

} // namespace

TEST(Stationary, ConstantsAreStationary) {
  const GridSpec g{16, 16, 1.0, 1.0};
  const Potential pot;
  const StationaryState s = solve_stationary(ScalarField(g, ScalarBC::Neumann, 0.3), pot, 0.5, 1e-10);
  EXPECT_EQ(s.iterations, 0);
  EXPECT_EQ(s.residual, 0.0);
  EXPECT_DOUBLE_EQ(s.lagrange_const, pot.f(0.3) / 0.5);
  for (double v : s.z.values())
    EXPECT_EQ(v, 0.3);
}

TEST(Stationary, SpinodalPerturbationLeavesTheUnstableState) {
  const GridSpec g{32, 32, 8.0, 8.0};
  ScalarField z0 = random_field(g, 3);
  z0 *= 1e-3;
  remove_mean(z0);
  const Potential pot;
  const StationaryState s = solve_stationary(z0, pot, 1.0, 1e-9);
  EXPECT_LE(s.residual, 1e-9);
  EXPECT_NEAR(mean(s.z), 0.0, 1e-12);
  EXPECT_GT(max_abs(s.z), 0.5);  // nonconstant
  EXPECT_TRUE(s.energy_monotone);

  // direct evaluation of the chemical potential
  const ScalarField lap = laplacian(s.z);
  ScalarField mu(g);
  for (std::size_t k = 0; k < mu.size(); ++k)
    mu.values()[k] = -lap.values()[k] + pot.f(s.z.values()[k]);
  const double m = mean(mu);
  EXPECT_NEAR(m, s.lagrange_const, 1e-9);
  double dev = 0.0;
  for (double v : mu.values())
    dev = std::max(dev, std::abs(v - m));
  EXPECT_LE(dev, 1e-9 / std::sqrt(g.cell_area()));
}

TEST(Stationary, PreservesMeanAndReportsFailure) {
  const GridSpec g{16, 16, 4.0, 4.0};
  ScalarField z0 = random_field(g, 5);
  z0 *= 0.2;
  remove_mean(z0);
  for (double& v : z0.values())
    v += 0.25;
  StationaryOptions opts;
  opts.max_iters = 3;
  try {
    solve_stationary(z0, Potential(), 1.0, 1e-14, opts);
    FAIL();
  } catch (const ConvergenceError& e) {
    EXPECT_GT(e.best_residual(), 0.0);
  }
  const StationaryState s = solve_stationary(z0, Potential(), 1.0, 1e-10);
  EXPECT_NEAR(mean(s.z), 0.25, 1e-12);
  EXPECT_NEAR(s.mean, 0.25, 1e-12);
}

TEST(FitDecay, RecoversPowerLaw) {
  const auto s = series(20.0, 200, [](double t) { return 3.0 / std::sqrt(1.0 + t); });
  const RateFit f = fit_decay(s, 1.0, 20.0);
  EXPECT_NEAR(f.exponent, 0.5, 1e-6);
  EXPECT_NEAR(f.theta_hat, 0.25, 1e-6);
  EXPECT_NEAR(f.prefactor, 3.0, 1e-6);
  EXPECT_NEAR(f.r2, 1.0, 1e-12);
  EXPECT_FALSE(f.exponential_preferred);
  EXPECT_GT(f.theta_hat, 0.0);
  EXPECT_LT(f.theta_hat, 0.5);
}

TEST(FitDecay, PrefersExponentialForExponentialData) {
  const auto s = series(20.0, 200, [](double t) { return 2.0 * std::exp(-0.8 * t); });
  const RateFit f = fit_decay(s, 0.0, 20.0);
  EXPECT_TRUE(f.exponential_preferred);
  EXPECT_NEAR(f.exp_rate, 0.8, 1e-10);
  EXPECT_LT(f.r2, f.exp_r2);
  EXPECT_LT(f.r2, 0.95);
}

TEST(FitDecay, Errors) {
  const auto flat = series(10.0, 50, [](double) { return 1.0; });
  try {
    fit_decay(flat, 0.0, 10.0);
    FAIL();
  } catch (const std::invalid_argument& e) {
    EXPECT_STREQ(e.what(), "no decay detected");
  }
  const auto few = series(10.0, 3, [](double t) { return 1.0 / (1 + t); });
  EXPECT_THROW(fit_decay(few, 0.0, 10.0), std::invalid_argument);
  // values below 1e-13 are skipped
  auto tiny = series(10.0, 50, [](double t) { return t < 9.5 ? 1e-14 : 1.0 / (1 + t); });
  EXPECT_THROW(fit_decay(tiny, 0.0, 10.0), std::invalid_argument);
}

TEST(FitDecay, CsvHasPreferredModelFirst) {
  const auto s = series(20.0, 100, [](double t) { return std::exp(-t); });
  std::ostringstream os;
  write_rate_fit_csv(os, fit_decay(s, 0.0, 10.0));
  std::istringstream is(os.str());
  std::string line;
  std::getline(is, line);
  EXPECT_EQ(line, kRateFitHeader);
  std::getline(is, line);
  EXPECT_EQ(line.rfind("exponential,", 0), 0u);
  std::getline(is, line);
  EXPECT_EQ(line.rfind("algebraic,", 0), 0u);
}

TEST(VelocityDecay, Examples) {
  RateFit fit;
  fit.exponent = 1.0;
  fit.window_lo = 0.0;
  fit.window_hi = 10.0;
  EXPECT_TRUE(velocity_decay_check(series(10.0, 20, [](double) { return 0.0; }), fit).ok);

  const auto decaying = series(10.0, 20, [](double t) { return 1e-9 * std::pow(1 + t, -0.25); });
  EXPECT_TRUE(velocity_decay_check(decaying, fit).ok);

  auto bump = decaying;
  bump[18].value *= 10.0;
  const VelocityDecayReport r = velocity_decay_check(bump, fit);
  EXPECT_FALSE(r.ok);
  EXPECT_GT(r.worst_ratio, 1.0);

  const auto slow = series(10.0, 20, [](double t) { return 1e-3 * std::pow(1 + t, -2.0); });
  EXPECT_FALSE(velocity_decay_check(slow, fit).ok);  // never below 1e-8
}

TEST(Relaxation, StripeRelaxesToOneDimensionalEquilibrium) {
  const GridSpec g{32, 8, 1.0, 0.25};
  PhysParams params;
  params.eps = 0.1;
  SolverConfig cfg;
  cfg.dt = 1e-3;
  cfg.t_end = 5.0;
  const RelaxationReport rep = relaxation_study(stripe(g, 0.5, 0.1), params, Potential(), cfg, 0.05, 1.0, 0.01);
  EXPECT_FALSE(rep.run.blew_up);
  EXPECT_LT(l2_norm(rep.run.final_state.u), 1e-6);
  EXPECT_LT(rep.final_residual, 1e-6);
  EXPECT_TRUE(rep.run.energy_monotone);
}
