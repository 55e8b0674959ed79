#include "chb/manufactured.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace chb {

namespace {

// F''' from the polynomial coefficients.
double third_derivative(const Potential& pot, double s) {
  const auto& c = pot.coeffs();
  double out = 0.0, pw = 1.0;
  for (std::size_t k = 3; k < c.size(); ++k) {
    out += static_cast<double>(k * (k - 1) * (k - 2)) * c[k] * pw;
    pw *= s;
  }
  return out;
}

struct Exact {
  const ManufacturedCase& mc;
  double k;

  double a(double t) const { return mc.phi_amplitude * std::exp(-t); }
  double b(double t) const { return mc.u_amplitude * std::exp(-t); }
  static double S(double k, double x) { return std::sin(k * x) * std::sin(k * x); }
  static double S1(double k, double x) { return k * std::sin(2 * k * x); }
  static double S2(double k, double x) { return 2 * k * k * std::cos(2 * k * x); }
  static double S3(double k, double x) { return -4 * k * k * k * std::sin(2 * k * x); }

  double phi(double x, double y, double t) const { return a(t) * std::cos(k * x) * std::cos(k * y); }
  double phi_x(double x, double y, double t) const { return -k * a(t) * std::sin(k * x) * std::cos(k * y); }
  double phi_y(double x, double y, double t) const { return -k * a(t) * std::cos(k * x) * std::sin(k * y); }
  // grad mu = g * grad phi with g = 2 eps k^2 + f'(phi)/eps
  double mu_factor(double ph) const {
    const double eps = mc.params.eps;
    return 2 * eps * k * k + mc.potential.fprime(ph) / eps;
  }
  double lap_mu(double x, double y, double t) const {
    const double eps = mc.params.eps;
    const double ph = phi(x, y, t);
    const double lap_phi = -2 * k * k * ph;
    const double grad_sq = phi_x(x, y, t) * phi_x(x, y, t) + phi_y(x, y, t) * phi_y(x, y, t);
    return 2 * eps * k * k * lap_phi +
           (third_derivative(mc.potential, ph) * grad_sq + mc.potential.fprime(ph) * lap_phi) / eps;
  }
  double ux(double x, double y, double t) const { return b(t) * S(k, x) * S1(k, y); }
  double uy(double x, double y, double t) const { return -b(t) * S1(k, x) * S(k, y); }
  double lap_ux(double x, double y, double t) const {
    return b(t) * (S2(k, x) * S1(k, y) + S(k, x) * S3(k, y));
  }
  double lap_uy(double x, double y, double t) const {
    return -b(t) * (S3(k, x) * S(k, y) + S1(k, x) * S2(k, y));
  }
};

Exact exact_of(const ManufacturedCase& mc) { return Exact{mc, std::numbers::pi / mc.length}; }

ScalarField sample_phi(const ManufacturedCase& mc, const GridSpec& g, double t) {
  ScalarField f(g, ScalarBC::Neumann);
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i)
      f(i, j) = mc.phi(g.xc(i), g.yc(j), t);
  return f;
}

SimState run_case(const ManufacturedCase& mc, int n, double dt) {
  const long steps = std::lround(mc.t_end / dt);
  if (steps < 1 || std::abs(steps * dt - mc.t_end) > 1e-9 * mc.t_end)
    throw std::invalid_argument("time step must divide t_end");
  const GridSpec g{n, n, mc.length, mc.length};
  SolverConfig cfg;
  cfg.dt = dt;
  cfg.t_end = mc.t_end;
  cfg.flow.tol = 1e-12;
  Stepper stepper(g, mc.params, mc.potential, cfg, mc.sources());
  SimState s = initial_state(sample_phi(mc, g, 0.0));
  for (long k = 0; k < steps; ++k)
    s = stepper.step(s);
  return s;
}

void fill_orders(ConvergenceStudy& st) {
  st.orders.clear();
  for (std::size_t k = 0; k + 1 < st.errors.size(); ++k)
    st.orders.push_back(std::log(st.errors[k] / st.errors[k + 1]) / std::log(st.steps[k] / st.steps[k + 1]));
  st.min_order = st.orders.empty() ? 0.0 : st.orders.front();
  for (double o : st.orders)
    st.min_order = std::min(st.min_order, o);
}

} // namespace

double ManufacturedCase::phi(double x, double y, double t) const { return exact_of(*this).phi(x, y, t); }
double ManufacturedCase::ux(double x, double y, double t) const { return exact_of(*this).ux(x, y, t); }
double ManufacturedCase::uy(double x, double y, double t) const { return exact_of(*this).uy(x, y, t); }

StepSources ManufacturedCase::sources() const {
  const ManufacturedCase mc = *this;
  StepSources src;
  src.phi_source = [mc](double x, double y, double t) {
    const Exact e = exact_of(mc);
    return -e.phi(x, y, t) + e.ux(x, y, t) * e.phi_x(x, y, t) + e.uy(x, y, t) * e.phi_y(x, y, t) -
           mc.params.M * e.lap_mu(x, y, t);
  };
  src.force_x = [mc](double x, double y, double t) {
    const Exact e = exact_of(mc);
    const double ph = e.phi(x, y, t);
    return -mc.params.nu * e.lap_ux(x, y, t) + mc.params.eta * e.ux(x, y, t) +
           mc.params.gamma * ph * e.mu_factor(ph) * e.phi_x(x, y, t);
  };
  src.force_y = [mc](double x, double y, double t) {
    const Exact e = exact_of(mc);
    const double ph = e.phi(x, y, t);
    return -mc.params.nu * e.lap_uy(x, y, t) + mc.params.eta * e.uy(x, y, t) +
           mc.params.gamma * ph * e.mu_factor(ph) * e.phi_y(x, y, t);
  };
  return src;
}

double ManufacturedCase::phi_error(const ScalarField& phi, double t) const {
  return l2_norm(phi - sample_phi(*this, phi.grid(), t));
}

double ManufacturedCase::velocity_error(const MacVector& u, double t) const {
  const GridSpec& g = u.grid();
  MacVector e(g, u.bc());
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i <= g.nx; ++i)
      e.ux(i, j) = ux(i * g.hx(), g.yc(j), t);
  for (int j = 0; j <= g.ny; ++j)
    for (int i = 0; i < g.nx; ++i)
      e.uy(i, j) = uy(g.xc(i), j * g.hy(), t);
  return l2_norm(u - e);
}

ConvergenceStudy spatial_convergence(const ManufacturedCase& mc, const std::vector<int>& sizes, double tau_factor) {
  ConvergenceStudy st;
  for (int n : sizes) {
    const double h = mc.length / n;
    // Round tau down so that it divides t_end.
    const long steps = static_cast<long>(std::ceil(mc.t_end / (tau_factor * h * h)));
    const double dt = mc.t_end / steps;
    const SimState s = run_case(mc, n, dt);
    st.steps.push_back(h);
    st.errors.push_back(mc.phi_error(s.phi, mc.t_end));
    st.velocity_errors.push_back(mc.velocity_error(s.u, mc.t_end - dt));
  }
  fill_orders(st);
  return st;
}

ConvergenceStudy temporal_convergence(const ManufacturedCase& mc, int n, const std::vector<double>& dts) {
  ConvergenceStudy st;
  std::vector<ScalarField> finals;
  for (double dt : dts)
    finals.push_back(run_case(mc, n, dt).phi);
  for (std::size_t k = 0; k + 1 < finals.size(); ++k) {
    st.steps.push_back(dts[k]);
    st.errors.push_back(l2_norm(finals[k] - finals[k + 1]));
  }
  fill_orders(st);
  return st;
}

} // namespace chb
