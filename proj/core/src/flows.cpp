#include "splitac/flows.hpp"

#include <cmath>
#include <stdexcept>

namespace splitac {

FlowParams::FlowParams(double t)
    : t_(t), e2t_(std::exp(-2.0 * t)), one_minus_e2t_(-std::expm1(-2.0 * t)) {
  if (!(t >= 0.0)) throw std::invalid_argument("FlowParams: t must be >= 0");
}

double phi(const FlowParams& p, double z) noexcept {
  // radicand >= e^{-2t} > 0 for every finite z
  return z / std::sqrt(p.e2t() + p.one_minus_e2t() * z * z);
}

double psi(const FlowParams& p, double z) noexcept {
  if (p.t() == 0.0) return reaction(z);
  // phi - z = z (1/sqrt(1+u) - 1) = -z u / (sqrt(1+u) (1 + sqrt(1+u))),
  // u = (1 - e^{-2t})(z^2 - 1). Dividing (1 - e^{-2t}) by t first keeps the
  // small-t limit free of cancellation.
  const double z2 = z * z;
  const double root = std::sqrt(p.e2t() + p.one_minus_e2t() * z2);
  const double rate = p.one_minus_e2t() / p.t();
  return -z * rate * (z2 - 1.0) / (root * (1.0 + root));
}

void phi_in_place(const FlowParams& p, std::span<double> x) noexcept {
  const double a = p.e2t();
  const double b = p.one_minus_e2t();
  for (double& z : x) z = z / std::sqrt(a + b * z * z);
}

GridFunction phi_grid(const FlowParams& p, const GridFunction& x) {
  GridFunction y = x;
  phi_in_place(p, y.values());
  return y;
}

}  // namespace splitac
