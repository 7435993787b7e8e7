#include "chainheat/params.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "chainheat/errors.hpp"

namespace chainheat {

const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::ParameterDomain: return "parameter-domain";
    case ErrorKind::NumericalAccuracy: return "numerical-accuracy";
    case ErrorKind::Structural: return "structural";
    case ErrorKind::StepSize: return "step-size";
    case ErrorKind::Stiffness: return "stiffness";
    case ErrorKind::Relaxation: return "relaxation";
    case ErrorKind::Config: return "config";
    case ErrorKind::Io: return "io";
  }
  return "unknown";
}

bool ChainParams::forced() const {
  for (const auto& [l, c] : force)
    if (c != cplx(0.0)) return true;
  return false;
}

void ChainParams::validate() const {
  if (n < 1) throw DomainError("n must be >= 1, got " + std::to_string(n));
  if (!(omega0 > 0)) throw DomainError("omega0 must be positive");
  if (!(gamma > 0)) throw DomainError("gamma must be positive");
  if (!(t_minus > 0)) throw DomainError("t_minus must be positive");
  if (!(theta > 0)) throw DomainError("theta must be positive");
  if (std::abs(b - a - 0.5) > 1e-12 || a > 0 || b < 0)
    throw DomainError("scaling exponents need b - a = 1/2, a <= 0, b >= 0");
  for (const auto& [l, c] : force) {
    if (l <= 0) throw DomainError("force map holds only l > 0 after normalisation");
    if (!std::isfinite(c.real()) || !std::isfinite(c.imag()))
      throw DomainError("non-finite force coefficient at l=" + std::to_string(l));
  }
}

double ChainParams::amplitude() const { return std::pow(double(n), a); }

double ChainParams::period() const { return std::pow(double(n), b) * theta; }

double ChainParams::frequency(int l) const {
  return 2.0 * std::numbers::pi * l / period();
}

double ChainParams::force_at(double tau) const {
  double s = 0.0;
  double ph = tau / period();
  for (const auto& [l, c] : force) {
    double arg = 2.0 * std::numbers::pi * l * (ph - std::floor(ph));
    s += 2.0 * (c.real() * std::cos(arg) - c.imag() * std::sin(arg));
  }
  return amplitude() * s;
}

void set_force_coefficient(std::map<int, cplx>& force, int l, cplx value) {
  if (l == 0) {
    if (value != cplx(0.0))
      throw DomainError("Fhat(0) must vanish: the force has zero time average");
    return;
  }
  int key = std::abs(l);
  cplx v = l > 0 ? value : std::conj(value);
  auto it = force.find(key);
  if (it != force.end() && std::abs(it->second - v) > 1e-14 * (1 + std::abs(v)))
    throw DomainError("Fhat(" + std::to_string(-l) + ") is not the conjugate of Fhat(" +
                      std::to_string(l) + ")");
  force[key] = v;
}

ChainParams with_sites(ChainParams p, int n) {
  p.n = n;
  return p;
}

}  // namespace chainheat
