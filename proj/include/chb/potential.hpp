#pragma once

#include <string>
#include <vector>

namespace chb {

struct PotentialValue {
  double F;
  double f;       ///< F'
  double fprime;  ///< F''
};

/// Polynomial bulk free energy F(s) = sum_k coeffs[k] s^k.
///
/// The default is the quartic double well (s^2-1)^2. Custom polynomials must
/// satisfy f(0) = 0 (no linear term), have even degree with positive leading
/// coefficient so that F is bounded below, and degree <= 4 so that
/// |f(s)| <= c(1+|s|^3).
class Potential {
public:
  enum class Kind { Quartic, Polynomial };

  Potential();
  static Potential quartic();
  static Potential polynomial(std::vector<double> coeffs);

  Kind kind() const { return kind_; }
  const std::vector<double>& coeffs() const { return coeffs_; }

  PotentialValue eval(double s) const;
  double F(double s) const;
  double f(double s) const;
  double fprime(double s) const;

  /// Lower bound of F on the real line (finite by construction).
  double lower_bound() const;

  bool operator==(const Potential&) const = default;

private:
  Potential(Kind kind, std::vector<double> coeffs);
  Kind kind_;
  std::vector<double> coeffs_;
};

/// Smallest admissible stabilization for phi in [lo, hi]:
/// max(0, 1.1 * max_{s in [lo-0.1, hi+0.1]} f'(s) / 2).
double stabilization(const Potential& pot, double lo, double hi);

std::string to_string(Potential::Kind kind);

} // namespace chb
