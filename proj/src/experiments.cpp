#include "chb/experiments.hpp"

#include "chb/errors.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <exception>
#include <limits>
#include <numbers>
#include <ostream>
#include <random>
#include <stdexcept>
#include <thread>

namespace chb {

int worker_count() {
  if (const char* env = std::getenv("CHB_THREADS")) {
    int n = 0;
    const char* end = env + std::strlen(env);
    auto [ptr, ec] = std::from_chars(env, end, n);
    if (ec == std::errc() && ptr == end && n > 0)
      return n;
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

void parallel_for(std::size_t n, const std::function<void(std::size_t)>& job) {
  const std::size_t workers = std::min<std::size_t>(n, static_cast<std::size_t>(worker_count()));
  std::vector<std::exception_ptr> errors(n);
  if (workers <= 1) {
    for (std::size_t k = 0; k < n; ++k) {
      try {
        job(k);
      } catch (...) {
        errors[k] = std::current_exception();
      }
    }
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w)
      pool.emplace_back([&] {
        for (std::size_t k = next++; k < n; k = next++) {
          try {
            job(k);
          } catch (...) {
            errors[k] = std::current_exception();
          }
        }
      });
    for (auto& t : pool)
      t.join();
  }
  for (auto& e : errors)
    if (e)
      std::rethrow_exception(e);
}

ScalarField perturbation_direction(const GridSpec& grid, unsigned seed, ScalarBC bc) {
  using std::numbers::pi;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  const double kx = bc == ScalarBC::Periodic ? 2 * pi / grid.lx : pi / grid.lx;
  const double ky = bc == ScalarBC::Periodic ? 2 * pi / grid.ly : pi / grid.ly;
  ScalarField f(grid, bc);
  for (int m = 0; m <= 4; ++m)
    for (int n = 0; n <= 4; ++n) {
      const double a = dist(rng) / (1.0 + m * m + n * n);
      if (m == 0 && n == 0)
        continue;
      for (int j = 0; j < grid.ny; ++j)
        for (int i = 0; i < grid.nx; ++i)
          f(i, j) += a * std::cos(m * kx * grid.xc(i)) * std::cos(n * ky * grid.yc(j));
    }
  remove_mean(f);
  f *= 1.0 / h1_norm(f);
  return f;
}

// -- continuous dependence ---------------------------------------------------------------

DependenceResult continuous_dependence(const ScalarField& phi1, const ScalarField& phi2, const PhysParams& params,
                                       const Potential& pot, const SolverConfig& cfg) {
  if (!(phi1.grid() == phi2.grid()) || phi1.bc() != phi2.bc())
    throw std::invalid_argument("continuous dependence needs data on the same grid");
  const double m1 = mean(phi1), m2 = mean(phi2);
  if (std::abs(m1 - m2) > 1e-12 * (1.0 + std::abs(m1)))
    throw std::invalid_argument("initial data must have equal means");

  Stepper s1(phi1.grid(), params, pot, cfg), s2(phi2.grid(), params, pot, cfg);
  SimState a = initial_state(phi1), b = initial_state(phi2);
  DependenceResult r;
  r.delta0 = std::pow(h1_norm(phi1 - phi2), 2);
  r.t.push_back(0.0);
  r.gap_sq.push_back(r.delta0);
  r.max_gap_sq = r.delta0;

  const long nsteps = std::lround(cfg.t_end / cfg.dt);
  for (long k = 0; k < nsteps; ++k) {
    a = s1.step(a);
    b = s2.step(b);
    const MacVector du = a.u - b.u;
    const double ugap = params.darcy() ? inner(du, du) : std::pow(h1_norm(du), 2);
    r.velocity_gap_integral += cfg.dt * ugap;
    const double gap = std::pow(h1_norm(a.phi - b.phi), 2);
    r.t.push_back(a.t);
    r.gap_sq.push_back(gap);
    r.max_gap_sq = std::max(r.max_gap_sq, gap);
    if (r.delta0 > 0.0) {
      r.amplification = std::max(r.amplification, gap / r.delta0);
      if (gap > 0.0)
        r.fitted_K = std::max(r.fitted_K, std::log(gap / r.delta0) / a.t);
    }
  }
  return r;
}

// -- viscosity sweep ------------------------------------------------------------------------

namespace {

struct SweepJob {
  double diff_sq = 0.0;
  double u_diff_int = 0.0;
  double runtime = 0.0;
  double ref_sup_h1 = 0.0;
  double ref_mass_dev = 0.0;
  bool ref_monotone = true;
};

SweepJob sweep_job(const ScalarField& phi0, double nu, const PhysParams& params, const Potential& pot,
                   const SolverConfig& cfg) {
  const auto start = std::chrono::steady_clock::now();
  PhysParams pb = params, pd = params;
  pb.nu = nu;
  pd.nu = 0.0;
  Stepper brinkman(phi0.grid(), pb, pot, cfg), darcy(phi0.grid(), pd, pot, cfg);
  SimState a = initial_state(phi0), b = initial_state(phi0);
  SweepJob out;
  const double m0 = mean(phi0);
  double e_prev = energy(phi0, pot, params.eps);
  out.ref_sup_h1 = h1_norm(phi0);

  const long nsteps = std::lround(cfg.t_end / cfg.dt);
  for (long k = 0; k < nsteps; ++k) {
    try {
      a = brinkman.step(a);
    } catch (const NumericalError& e) {
      throw NumericalError("sweep run nu = " + std::to_string(nu) + " failed: " + e.what());
    }
    try {
      b = darcy.step(b);
    } catch (const NumericalError& e) {
      throw NumericalError(std::string("sweep reference run nu = 0 failed: ") + e.what());
    }
    out.diff_sq = std::max(out.diff_sq, std::pow(h1_norm(a.phi - b.phi), 2));
    const MacVector du = a.u - b.u;
    out.u_diff_int += cfg.dt * inner(du, du);

    out.ref_sup_h1 = std::max(out.ref_sup_h1, h1_norm(b.phi));
    out.ref_mass_dev = std::max(out.ref_mass_dev, std::abs(mean(b.phi) - m0));
    const double e = energy(b.phi, pot, params.eps);
    if (e > e_prev + 1e-12 * std::max(1.0, std::abs(e_prev)))
      out.ref_monotone = false;
    e_prev = e;
  }
  out.runtime = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return out;
}

} // namespace

SweepResult viscosity_sweep(const ScalarField& phi0, std::vector<double> nu_list, const PhysParams& params,
                            const Potential& pot, const SolverConfig& cfg) {
  if (nu_list.empty())
    throw std::invalid_argument("sweep needs at least one viscosity");
  for (std::size_t k = 0; k < nu_list.size(); ++k) {
    if (!(nu_list[k] > 0.0) || !std::isfinite(nu_list[k]))
      throw std::invalid_argument("sweep viscosities must be positive");
    if (k > 0 && !(nu_list[k] < nu_list[k - 1]))
      throw std::invalid_argument("sweep viscosities must be strictly decreasing");
  }
  if (!(params.eta > 0.0))
    throw std::invalid_argument("sweep needs eta > 0 for the Darcy reference");

  std::vector<SweepJob> jobs(nu_list.size());
  parallel_for(jobs.size(), [&](std::size_t k) { jobs[k] = sweep_job(phi0, nu_list[k], params, pot, cfg); });

  SweepResult r;
  r.nu = nu_list;
  double scale = 0.0;
  for (const auto& j : jobs) {
    r.diff_sq.push_back(j.diff_sq);
    r.u_diff_int.push_back(j.u_diff_int);
    r.runtime_s.push_back(j.runtime);
    scale = std::max(scale, j.ref_sup_h1);
  }
  r.reference_mass_deviation = jobs.front().ref_mass_dev;
  r.reference_energy_monotone = jobs.front().ref_monotone;

  // Round-off in an H1 difference of two O(scale) fields after many steps.
  r.floor_level = std::pow(1e3 * std::numeric_limits<double>::epsilon() * scale, 2);
  bool floor = false;
  for (double d : r.diff_sq) {
    floor = floor || d <= r.floor_level;
    r.at_floor.push_back(floor);
  }

  std::vector<double> lx, ly;
  r.monotone = true;
  for (std::size_t k = 0; k < r.nu.size(); ++k) {
    if (r.at_floor[k])
      break;
    lx.push_back(std::log(r.nu[k]));
    ly.push_back(std::log(r.diff_sq[k]));
    r.C = std::max(r.C, r.diff_sq[k] / std::sqrt(r.nu[k]));
    if (k > 0 && !(r.diff_sq[k] < r.diff_sq[k - 1]))
      r.monotone = false;
  }
  r.fitted_points = lx.size();
  if (lx.size() >= 2) {
    double mx = 0.0, my = 0.0;
    for (std::size_t k = 0; k < lx.size(); ++k) {
      mx += lx[k];
      my += ly[k];
    }
    mx /= lx.size();
    my /= ly.size();
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t k = 0; k < lx.size(); ++k) {
      sxx += (lx[k] - mx) * (lx[k] - mx);
      sxy += (lx[k] - mx) * (ly[k] - my);
    }
    r.slope = sxy / sxx;
  } else {
    r.slope = std::numeric_limits<double>::quiet_NaN();
    r.monotone = false;
  }
  return r;
}

void write_sweep_csv(std::ostream& out, const SweepResult& r) {
  out << kSweepHeader << '\n';
  char buf[256];
  for (std::size_t k = 0; k < r.nu.size(); ++k) {
    std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%.17g\n", r.nu[k], r.diff_sq[k], r.u_diff_int[k],
                  r.runtime_s[k]);
    out << buf;
  }
}

void write_sweep_report(std::ostream& out, const SweepResult& r) {
  char buf[256];
  std::snprintf(buf, sizeof buf, "slope %.6g\nC_T %.6g\n", r.slope, r.C);
  out << buf;
  out << "fitted_points " << r.fitted_points << '\n';
  out << "monotone " << (r.monotone ? "yes" : "no") << '\n';
  std::snprintf(buf, sizeof buf, "noise_floor %.3g\n", r.floor_level);
  out << buf;
  for (std::size_t k = 0; k < r.nu.size(); ++k)
    if (r.at_floor[k]) {
      std::snprintf(buf, sizeof buf, "truncated_at_nu %.6g\n", r.nu[k]);
      out << buf;
      break;
    }
  std::snprintf(buf, sizeof buf, "reference_mass_deviation %.3g\n", r.reference_mass_deviation);
  out << buf;
  out << "reference_energy_monotone " << (r.reference_energy_monotone ? "yes" : "no") << '\n';
}

// -- dissipativity probe ------------------------------------------------------------------

ProbeReport dissipativity_probe(const GridSpec& grid, const std::vector<double>& radii, double mean_value,
                                const PhysParams& params, const Potential& pot, const SolverConfig& cfg,
                                unsigned seed) {
  if (radii.empty())
    throw std::invalid_argument("probe needs at least one radius");
  if (pot.kind() != Potential::Kind::Quartic)
    throw std::invalid_argument("dissipativity probe requires the quartic potential");
  const ScalarField psi = perturbation_direction(grid, seed, cfg.bc);
  // ||m + a*psi||_1^2 = m^2|Omega| + a^2 since psi is mean-zero with unit H1 norm
  const double base_sq = mean_value * mean_value * grid.area();
  for (double r : radii)
    if (!(r * r > base_sq))
      throw std::invalid_argument("probe radius " + std::to_string(r) + " does not exceed the H1 norm of the mean");

  ProbeReport rep;
  rep.mean = mean_value;
  rep.runs.resize(radii.size());
  parallel_for(radii.size(), [&](std::size_t k) {
    ScalarField phi0 = psi;
    phi0 *= std::sqrt(radii[k] * radii[k] - base_sq);
    for (double& v : phi0.values())
      v += mean_value;
    ProbeRun& pr = rep.runs[k];
    pr.radius = radii[k];
    pr.t.push_back(0.0);
    pr.h1.push_back(h1_norm(phi0));
    RunOptions opts;
    opts.observer = [&](const SimState& s, const DiagnosticsRecord& rec, const FlowReport&) {
      pr.t.push_back(s.t);
      pr.h1.push_back(rec.phi_h1);
    };
    const RunResult res = run(phi0, params, pot, cfg, opts);
    if (res.blew_up)
      throw NumericalError("probe run radius " + std::to_string(radii[k]) + " failed: " + res.failure);
    pr.terminal_h1 = pr.h1.back();
    pr.max_h1 = *std::max_element(pr.h1.begin(), pr.h1.end());
  });

  double tmax = 0.0, tmin = std::numeric_limits<double>::infinity();
  for (const auto& pr : rep.runs) {
    tmax = std::max(tmax, pr.terminal_h1);
    tmin = std::min(tmin, pr.terminal_h1);
  }
  rep.bound = 1.1 * tmax;
  rep.terminal_spread = tmax > 0.0 ? (tmax - tmin) / tmax : 0.0;
  rep.all_absorbed = true;
  for (auto& pr : rep.runs) {
    std::size_t last_out = pr.h1.size();
    for (std::size_t k = pr.h1.size(); k-- > 0;)
      if (pr.h1[k] > rep.bound) {
        last_out = k;
        break;
      }
    if (last_out == pr.h1.size())
      pr.entry_time = 0.0;
    else if (last_out + 1 < pr.h1.size())
      pr.entry_time = pr.t[last_out + 1];
    else
      pr.entry_time = -1.0;
    rep.all_absorbed = rep.all_absorbed && pr.entry_time >= 0.0;
  }
  return rep;
}

void write_probe_csv(std::ostream& out, const ProbeReport& r) {
  out << "radius,entry_time,terminal_h1,max_h1\n";
  char buf[256];
  for (const auto& run : r.runs) {
    std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%.17g\n", run.radius, run.entry_time, run.terminal_h1,
                  run.max_h1);
    out << buf;
  }
}

} // namespace chb
