#include "chb/potential.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace chb {

namespace {

double horner(const std::vector<double>& c, double s) {
  double v = 0.0;
  for (auto it = c.rbegin(); it != c.rend(); ++it)
    v = v * s + *it;
  return v;
}

std::vector<double> derivative(const std::vector<double>& c) {
  std::vector<double> d;
  for (std::size_t k = 1; k < c.size(); ++k)
    d.push_back(static_cast<double>(k) * c[k]);
  return d;
}

void check_finite(double s) {
  if (!std::isfinite(s))
    throw std::invalid_argument("potential evaluated at non-finite argument");
}

} // namespace

Potential::Potential() : Potential(quartic()) {}

Potential::Potential(Kind kind, std::vector<double> coeffs) : kind_(kind), coeffs_(std::move(coeffs)) {}

Potential Potential::quartic() { return Potential(Kind::Quartic, {1.0, 0.0, -2.0, 0.0, 1.0}); }

Potential Potential::polynomial(std::vector<double> coeffs) {
  while (!coeffs.empty() && coeffs.back() == 0.0)
    coeffs.pop_back();
  for (double c : coeffs)
    if (!std::isfinite(c))
      throw std::invalid_argument("potential coefficients must be finite");
  if (coeffs.size() < 3)
    throw std::invalid_argument("potential needs degree >= 2");
  if (coeffs.size() > 5)
    throw std::invalid_argument("potential degree must be <= 4 (growth |f(s)| <= c(1+|s|^3))");
  if (coeffs.size() > 1 && coeffs[1] != 0.0)
    throw std::invalid_argument("potential must satisfy f(0) = 0 (no linear term)");
  const std::size_t degree = coeffs.size() - 1;
  if (degree % 2 != 0 || coeffs.back() <= 0.0)
    throw std::invalid_argument("potential must have even degree and positive leading coefficient");
  return Potential(Kind::Polynomial, std::move(coeffs));
}

PotentialValue Potential::eval(double s) const {
  check_finite(s);
  if (kind_ == Kind::Quartic) {
    const double s2 = s * s;
    return {(s2 - 1.0) * (s2 - 1.0), 4.0 * s * (s2 - 1.0), 12.0 * s2 - 4.0};
  }
  const auto d1 = derivative(coeffs_);
  return {horner(coeffs_, s), horner(d1, s), horner(derivative(d1), s)};
}

double Potential::F(double s) const {
  check_finite(s);
  if (kind_ == Kind::Quartic) {
    const double t = s * s - 1.0;
    return t * t;
  }
  return horner(coeffs_, s);
}

double Potential::f(double s) const {
  check_finite(s);
  if (kind_ == Kind::Quartic)
    return 4.0 * s * (s * s - 1.0);
  double v = 0.0;
  for (std::size_t k = coeffs_.size() - 1; k >= 1; --k)
    v = v * s + static_cast<double>(k) * coeffs_[k];
  return v;
}

double Potential::fprime(double s) const { return eval(s).fprime; }

double Potential::lower_bound() const {
  if (kind_ == Kind::Quartic)
    return 0.0;
  // Critical points of a degree <= 4 polynomial lie where f = 0; scan a
  // bracket wide enough to contain them and polish by bisection.
  double bound = 0.0;
  for (std::size_t k = 0; k + 1 < coeffs_.size(); ++k)
    bound = std::max(bound, std::abs(coeffs_[k] / coeffs_.back()));
  bound += 1.0;
  double best = std::min(F(-bound), F(bound));
  const int n = 4000;
  double prev_s = -bound, prev_f = f(prev_s);
  for (int k = 1; k <= n; ++k) {
    const double s = -bound + 2.0 * bound * k / n;
    const double fs = f(s);
    best = std::min(best, F(s));
    if ((prev_f < 0.0) != (fs < 0.0)) {
      double a = prev_s, b = s;
      for (int it = 0; it < 80; ++it) {
        const double m = 0.5 * (a + b);
        if ((f(a) < 0.0) == (f(m) < 0.0))
          a = m;
        else
          b = m;
      }
      best = std::min(best, F(0.5 * (a + b)));
    }
    prev_s = s;
    prev_f = fs;
  }
  return best;
}

double stabilization(const Potential& pot, double lo, double hi) {
  if (!(lo <= hi))
    throw std::invalid_argument("stabilization range needs lo <= hi");
  constexpr double pad = 0.1;
  constexpr double safety = 1.1;
  const double a = lo - pad, b = hi + pad;
  // f' has degree <= 2, so its maximum on [a,b] is at an endpoint or at the
  // vertex of the parabola.
  double m = std::max(pot.fprime(a), pot.fprime(b));
  const auto& c = pot.coeffs();
  if (c.size() == 5 && c[4] != 0.0) {
    const double vertex = -(6.0 * c[3]) / (24.0 * c[4]);
    if (vertex > a && vertex < b)
      m = std::max(m, pot.fprime(vertex));
  }
  return std::max(0.0, safety * m / 2.0);
}

std::string to_string(Potential::Kind kind) {
  return kind == Potential::Kind::Quartic ? "quartic" : "polynomial";
}

} // namespace chb
