#pragma once

// Constant-coefficient solution for the probe pair E4, E2*.
//
// Reduced system (E4, E2 measured relative to their own dispersive phases):
//   dE4/dz  = -a4/2 E4  + i g4  exp(+i dk z) E2*
//   dE2*/dz = -a2/2 E2* - i g2* exp(-i dk z) E4
// Its solution is exp(N z) with N = [[-b, i g4], [-i g2*, b]], N^2 = R^2 I,
// times the prefactors exp((-a4/2 + b) z) and exp((-a2/2 - b) z).

#include <cmath>
#include <complex>
#include <optional>
#include <stdexcept>
#include <utility>

#include "dlambda/doppler.hpp"
#include "dlambda/scheme.hpp"

namespace dlambda {

struct OpaCoefficients {
  double alpha4 = 0.0;
  double alpha2 = 0.0;
  double delta_k = 0.0;  ///< dk1 + dk3 - dk2 - dk4
  cplx gamma4{}, gamma2{};

  /// beta = [(a4 - a2)/2 + i dk] / 2
  cplx beta() const { return cplx(0.5 * (alpha4 - alpha2), delta_k) / 2.0; }
  /// gamma^2 = g2* g4
  cplx gamma_sq() const { return std::conj(gamma2) * gamma4; }
  /// Principal root of beta^2 + gamma^2.
  cplx root() const {
    const cplx b = beta();
    return std::sqrt(b * b + gamma_sq());
  }
  double gain2() const { return -alpha2; }
};

inline OpaCoefficients to_opa(const MacroscopicCoefficients& m) {
  OpaCoefficients c;
  c.alpha4 = m.alpha(E4);
  c.alpha2 = m.alpha(E2);
  c.delta_k = m.phase_mismatch();
  c.gamma4 = m.gamma4;
  c.gamma2 = m.gamma2;
  return c;
}

struct BoundaryAmplitudes {
  cplx e40{}, e20{};
};

/// E4(z) and E2*(z).
struct OpaState {
  cplx e4{}, e2c{};
};

namespace detail {

/// cosh(Rz) and sinh(Rz)/R, each scaled by exp(-shift); both even in R.
struct HyperbolicPair {
  cplx c, s;
};

inline HyperbolicPair hyperbolic(cplx r, double z, double shift) {
  const cplx rz = r * z;
  if (std::abs(rz) < 1e-4) {
    const cplx q = rz * rz;
    const double e = std::exp(-shift);
    return {e * (1.0 + q / 2.0 + q * q / 24.0), e * z * (1.0 + q / 6.0 + q * q / 120.0)};
  }
  const cplx up = std::exp(rz - shift);
  const cplx down = std::exp(-rz - shift);
  return {(up + down) / 2.0, (up - down) / (2.0 * r)};
}

}  // namespace detail

/// Evaluate the solution with an explicitly supplied root R (either sign).
inline OpaState opa_solution_with_root(const OpaCoefficients& c, const BoundaryAmplitudes& b,
                                       double z, cplx r) {
  if (!(z >= 0.0)) throw std::domain_error("opa_solution: z must be >= 0");
  // the result only depends on R^2; fix the sign so that Re R >= 0
  if (r.real() < 0.0 || (r.real() == 0.0 && r.imag() < 0.0)) r = -r;
  const cplx beta = c.beta();
  const cplx i{0.0, 1.0};
  const cplx e20c = std::conj(b.e20);
  // growth exp(Re(R) z) is folded into the prefactors to avoid overflow
  const double shift = r.real() * z;
  const auto [ch, sh] = detail::hyperbolic(r, z, shift);
  const cplx p4 = std::exp(cplx((-c.alpha4 / 2.0) * z + shift, 0.0) + beta * z);
  const cplx p2 = std::exp(cplx((-c.alpha2 / 2.0) * z + shift, 0.0) - beta * z);
  OpaState out;
  out.e4 = p4 * (i * c.gamma4 * sh * e20c + b.e40 * (ch - beta * sh));
  out.e2c = p2 * (-i * std::conj(c.gamma2) * sh * b.e40 + e20c * (ch + beta * sh));
  return out;
}

inline OpaState opa_solution(const OpaCoefficients& c, const BoundaryAmplitudes& b, double z) {
  return opa_solution_with_root(c, b, z, c.root());
}

struct LimitValue {
  double value = 0.0;
  bool valid = false;  ///< |gamma^2/beta^2| <= 1e-2 and dk == 0
  /// |gamma^2 L / (2 beta)|: the exact amplitudes carry exp(-+ this) factors
  /// that the limit formulas drop.
  double omitted_exponent = 0.0;
};

namespace detail {
inline bool weak_coupling(const OpaCoefficients& c) {
  const cplx beta = c.beta();
  return std::abs(c.gamma_sq() / (beta * beta)) <= 1e-2 && c.delta_k == 0.0;
}
}  // namespace detail

/// I4/I40 = |exp(-a4 L/2) + [g^2/(2b)^2] (exp(g2 L/2) - exp(-a4 L/2))|^2, g2 = -a2.
inline LimitValue fwm_gain_limit(const OpaCoefficients& c, double length) {
  const cplx beta = c.beta();
  if (beta == cplx{}) throw std::domain_error("fwm_gain_limit: beta is zero");
  const double decay = std::exp(-c.alpha4 * length / 2.0);
  const double grow = std::exp(c.gain2() * length / 2.0);
  const cplx amp = decay + c.gamma_sq() / (4.0 * beta * beta) * (grow - decay);
  return {std::norm(amp), detail::weak_coupling(c),
          std::abs(c.gamma_sq() * length / (2.0 * beta))};
}

/// eta4 = I4/I20 = [|g4|^2/|2b|^2] |exp(g2 L/2) - exp(-a4 L/2)|^2 for E40 = 0.
inline LimitValue eta4_conversion(const OpaCoefficients& c, double length) {
  const cplx beta = c.beta();
  if (beta == cplx{}) throw std::domain_error("eta4_conversion: beta is zero");
  const double diff = std::exp(c.gain2() * length / 2.0) - std::exp(-c.alpha4 * length / 2.0);
  return {std::norm(c.gamma4) / std::norm(2.0 * beta) * diff * diff, detail::weak_coupling(c),
          std::abs(c.gamma_sq() * length / (2.0 * beta))};
}

/// Smallest L in (0, L_max] where |E4(L)|^2/|E40|^2 returns to 1 with E20 = 0,
/// located by a scan at `scan_step` and bisection to 1e-6.  Returns 0 when the
/// probe never drops below its input level at the start of the medium.
inline std::optional<double> oscillation_threshold(const OpaCoefficients& c,
                                                   double max_length = 60.0,
                                                   double scan_step = 1e-2) {
  const BoundaryAmplitudes b{1.0, 0.0};
  auto excess = [&](double l) { return std::norm(opa_solution(c, b, l).e4) - 1.0; };
  const int n = std::max(1, static_cast<int>(std::ceil(max_length / scan_step)));
  const double h = max_length / n;
  double lo = 0.0;
  bool below = false;
  for (int k = 1; k <= n; ++k) {
    const double l = h * k;
    const double f = excess(l);
    if (f < 0.0) {
      below = true;
      lo = l;
      continue;
    }
    if (!below) {
      if (c.alpha4 <= 0.0) return 0.0;
      // the dip below 1 is narrower than one scan step
      lo = 0.0;
      double a = 0.0, bb = l;
      bool found = false;
      for (int s = 0; s < 60 && !found; ++s) {
        const double mid = 0.5 * (a + bb);
        if (excess(mid) < 0.0) {
          lo = mid;
          found = true;
        } else {
          bb = mid;
        }
      }
      if (!found) return 0.0;
    }
    double a = lo, bb = l;
    while (bb - a > 1e-6) {
      const double mid = 0.5 * (a + bb);
      (excess(mid) < 0.0 ? a : bb) = mid;
    }
    return 0.5 * (a + bb);
  }
  return std::nullopt;
}

}  // namespace dlambda
