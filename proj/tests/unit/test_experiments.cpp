#include "chb/errors.hpp"
#include "chb/experiments.hpp"
#include "chb/spectral.hpp"

#include <gtest/gtest.h>

#include <atomic>
#include <cmath>
#include <cstdlib>
#include <numbers>
#include <sstream>

using namespace chb;
using std::numbers::pi;

namespace {

SolverConfig short_run(double dt, double t_end) {
  SolverConfig cfg;
  cfg.dt = dt;
  cfg.t_end = t_end;
  return cfg;
}

ScalarField base_field(const GridSpec& g, unsigned seed, double amp) {
  ScalarField f = perturbation_direction(g, seed);
  f *= amp / max_abs(f);
  return f;
}

} // namespace

TEST(Workers, EnvironmentCapsThreads) {
  setenv("CHB_THREADS", "3", 1);
  EXPECT_EQ(worker_count(), 3);
  setenv("CHB_THREADS", "zero", 1);
  EXPECT_GE(worker_count(), 1);
  setenv("CHB_THREADS", "1", 1);
  EXPECT_EQ(worker_count(), 1);
  unsetenv("CHB_THREADS");
  EXPECT_GE(worker_count(), 1);
}

TEST(Workers, ParallelForVisitsEveryIndexAndRethrows) {
  setenv("CHB_THREADS", "4", 1);
  std::vector<int> hits(37, 0);
  parallel_for(hits.size(), [&](std::size_t k) { hits[k] += 1; });
  for (int h : hits)
    EXPECT_EQ(h, 1);
  EXPECT_THROW(parallel_for(8, [](std::size_t k) {
                 if (k == 5)
                   throw NumericalError("boom");
               }),
               NumericalError);
  unsetenv("CHB_THREADS");
}

TEST(Perturbation, MeanZeroUnitNormDeterministic) {
  const GridSpec g{32, 24, 4.0, 3.0};
  const ScalarField a = perturbation_direction(g, 7), b = perturbation_direction(g, 7);
  EXPECT_NEAR(mean(a), 0.0, 1e-15);
  EXPECT_NEAR(h1_norm(a), 1.0, 1e-14);
  EXPECT_TRUE(std::equal(a.values().begin(), a.values().end(), b.values().begin()));
  EXPECT_FALSE(std::equal(a.values().begin(), a.values().end(), perturbation_direction(g, 8).values().begin()));
}

TEST(Dependence, IdenticalDataStayIdentical) {
  const GridSpec g{32, 32, 8.0, 8.0};
  const ScalarField phi = base_field(g, 1, 0.3);
  const DependenceResult r = continuous_dependence(phi, phi, PhysParams{}, Potential(), short_run(1e-2, 0.2));
  EXPECT_EQ(r.delta0, 0.0);
  for (double v : r.gap_sq)
    EXPECT_LE(v, 1e-12);
  EXPECT_EQ(r.fitted_K, 0.0);
}

TEST(Dependence, SwappedArgumentsGiveIdenticalSeries) {
  const GridSpec g{32, 32, 8.0, 8.0};
  const ScalarField phi = base_field(g, 1, 0.3);
  ScalarField psi = perturbation_direction(g, 2);
  psi *= 1e-3;
  const ScalarField phi2 = phi + psi;
  const SolverConfig cfg = short_run(1e-2, 0.2);
  const DependenceResult a = continuous_dependence(phi, phi2, PhysParams{}, Potential(), cfg);
  const DependenceResult b = continuous_dependence(phi2, phi, PhysParams{}, Potential(), cfg);
  ASSERT_EQ(a.gap_sq.size(), b.gap_sq.size());
  for (std::size_t k = 0; k < a.gap_sq.size(); ++k)
    EXPECT_EQ(a.gap_sq[k], b.gap_sq[k]);
  EXPECT_EQ(a.velocity_gap_integral, b.velocity_gap_integral);
}

TEST(Dependence, BoundHoldsAndGapIsLinearInDelta) {
  const GridSpec g{32, 32, 8.0, 8.0};
  const ScalarField phi = base_field(g, 3, 0.5);
  const ScalarField psi = perturbation_direction(g, 4);
  const SolverConfig cfg = short_run(1e-2, 0.5);
  double sup[2];
  for (int k = 0; k < 2; ++k) {
    const double delta = k == 0 ? 1e-6 : 5e-7;
    ScalarField p2 = psi;
    p2 *= delta;
    const DependenceResult r = continuous_dependence(phi, phi + p2, PhysParams{}, Potential(), cfg);
    EXPECT_NEAR(r.delta0, delta * delta, 1e-6 * delta * delta);
    EXPECT_TRUE(std::isfinite(r.fitted_K));
    for (std::size_t n = 1; n < r.t.size(); ++n)
      EXPECT_LE(r.gap_sq[n], r.delta0 * std::exp(r.fitted_K * r.t[n]) * (1 + 1e-12));
    sup[k] = std::sqrt(r.max_gap_sq);
  }
  EXPECT_NEAR(sup[1] / sup[0], 0.5, 0.1);
}

TEST(Dependence, RejectsDifferentMeans) {
  const GridSpec g{16, 16, 4.0, 4.0};
  const ScalarField phi = base_field(g, 1, 0.3);
  ScalarField shifted = phi;
  for (double& v : shifted.values())
    v += 1e-3;
  EXPECT_THROW(continuous_dependence(phi, shifted, PhysParams{}, Potential(), short_run(1e-2, 0.1)),
               std::invalid_argument);
}

TEST(Sweep, MonotoneDecreasingDifferences) {
  const GridSpec g{16, 16, 8.0, 8.0};
  const ScalarField phi = base_field(g, 5, 0.5);
  const SweepResult r = viscosity_sweep(phi, {1e-1, 1e-2, 1e-3}, PhysParams{}, Potential(), short_run(1e-2, 0.3));
  ASSERT_EQ(r.diff_sq.size(), 3u);
  EXPECT_TRUE(r.monotone);
  for (double d : r.diff_sq)
    EXPECT_GT(d, 0.0);
  EXPECT_GE(r.slope, 0.4);
  for (std::size_t k = 0; k < 3; ++k)
    EXPECT_LE(r.diff_sq[k], r.C * std::sqrt(r.nu[k]) * (1 + 1e-12));
  EXPECT_TRUE(r.reference_energy_monotone);
  EXPECT_LE(r.reference_mass_deviation, 1e-12);

  std::ostringstream csv, rep;
  write_sweep_csv(csv, r);
  write_sweep_report(rep, r);
  const std::string text = csv.str();
  EXPECT_EQ(text.substr(0, text.find('\n')), kSweepHeader);
  EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 4);
  EXPECT_NE(rep.str().find("slope"), std::string::npos);
  EXPECT_NE(rep.str().find("C_T"), std::string::npos);
}

TEST(Sweep, DetectsNoiseFloor) {
  const GridSpec g{16, 16, 8.0, 8.0};
  const ScalarField phi = base_field(g, 5, 0.5);
  const SweepResult r = viscosity_sweep(phi, {1e-1, 1e-2, 1e-15}, PhysParams{}, Potential(), short_run(1e-2, 0.1));
  EXPECT_FALSE(r.at_floor[0]);
  EXPECT_FALSE(r.at_floor[1]);
  EXPECT_TRUE(r.at_floor[2]);
  EXPECT_EQ(r.fitted_points, 2u);
  std::ostringstream rep;
  write_sweep_report(rep, r);
  EXPECT_NE(rep.str().find("truncated_at_nu"), std::string::npos);
}

TEST(Sweep, RejectsBadViscosityLists) {
  const GridSpec g{16, 16, 8.0, 8.0};
  const ScalarField phi(g);
  const SolverConfig cfg = short_run(1e-2, 0.1);
  EXPECT_THROW(viscosity_sweep(phi, {1e-2, 1e-1}, PhysParams{}, Potential(), cfg), std::invalid_argument);
  EXPECT_THROW(viscosity_sweep(phi, {0.0}, PhysParams{}, Potential(), cfg), std::invalid_argument);
  EXPECT_THROW(viscosity_sweep(phi, {}, PhysParams{}, Potential(), cfg), std::invalid_argument);
}

TEST(Sweep, SingleModeOneStepClosedForm) {
  // Quadratic F and an eigenmode phi turn the capillary force into an exact
  // gradient, so only the solenoidal source drives the flow: u_nu = s/(nu*lam + eta), u_0 = s/eta.
  const GridSpec g{16, 16, 1.0, 1.0};
  const Potential pot = Potential::polynomial({0.0, 0.0, 0.5});
  const double eta = 1.5, nu = 0.02, dt = 1e-2;
  const int kx = 1, ky = 2;
  auto psi = [&](double x, double y) { return std::cos(2 * pi * (kx * x + ky * y)); };
  const double hx = g.hx(), hy = g.hy();
  StepSources src;
  src.force_x = [&](double x, double y, double) { return (psi(x, y + 0.5 * hy) - psi(x, y - 0.5 * hy)) / hy; };
  src.force_y = [&](double x, double y, double) { return -(psi(x + 0.5 * hx, y) - psi(x - 0.5 * hx, y)) / hx; };

  ScalarField phi(g, ScalarBC::Periodic);
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i)
      phi(i, j) = 0.4 * std::sin(2 * pi * g.xc(i));

  SolverConfig cfg;
  cfg.dt = dt;
  cfg.bc = ScalarBC::Periodic;
  cfg.stab = 1.0;
  cfg.flow.tol = 1e-13;
  PhysParams pb{nu, eta, 1.0, 1.0, 1.0}, pd{0.0, eta, 1.0, 1.0, 1.0};
  const SimState sb = Stepper(g, pb, pot, cfg, src).step(initial_state(phi));
  const SimState sd = Stepper(g, pd, pot, cfg, src).step(initial_state(phi));

  MacVector s(g, VelocityBC::Periodic);
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i <= g.nx; ++i)
      s.ux(i, j) = src.force_x(i * hx, g.yc(j), 0.0);
  for (int j = 0; j <= g.ny; ++j)
    for (int i = 0; i < g.nx; ++i)
      s.uy(i, j) = src.force_y(g.xc(i), j * hy, 0.0);
  const double lam = 4.0 / (hx * hx) * std::pow(std::sin(pi * kx / 16), 2) +
                     4.0 / (hy * hy) * std::pow(std::sin(pi * ky / 16), 2);
  MacVector du = s;
  du *= 1.0 / (nu * lam + eta) - 1.0 / eta;
  EXPECT_LE(l2_norm((sb.u - sd.u) - du), 1e-9 * l2_norm(du));

  const HelmholtzOperator op(g, 1.0 / dt, -1.0, 1.0, ScalarBC::Periodic);
  const ScalarField expect = op.solve(-1.0 * convective_divergence(phi, du));
  EXPECT_LE(l2_norm((sb.phi - sd.phi) - expect), 1e-9 * l2_norm(expect));
}

TEST(Probe, EqualRadiiBehaveIdentically) {
  setenv("CHB_THREADS", "2", 1);
  const GridSpec g{16, 16, 2.0, 2.0};
  const ProbeReport r = dissipativity_probe(g, {3.0, 3.0}, 0.0, PhysParams{}, Potential(), short_run(1e-2, 0.5), 1);
  ASSERT_EQ(r.runs.size(), 2u);
  EXPECT_EQ(r.runs[0].h1, r.runs[1].h1);
  EXPECT_EQ(r.runs[0].entry_time, r.runs[1].entry_time);
  unsetenv("CHB_THREADS");
}

TEST(Probe, LargeDataEnterTheBall) {
  const GridSpec g{16, 16, 2.0, 2.0};
  const ProbeReport r =
      dissipativity_probe(g, {4.0, 8.0}, 0.0, PhysParams{}, Potential(), short_run(1e-2, 3.0), 1);
  EXPECT_TRUE(r.all_absorbed);
  EXPECT_LE(r.runs[0].entry_time, r.runs[1].entry_time);
  EXPECT_NEAR(r.runs[0].h1.front(), 4.0, 1e-12);
  EXPECT_THROW(dissipativity_probe(g, {1.0}, 0.9, PhysParams{}, Potential(), short_run(1e-2, 0.1), 1),
               std::invalid_argument);
}
