#pragma once

// Maxwell averaging of the per-class response into macroscopic propagation
// coefficients, and a Voigt-profile reference used to check it.

#include <array>
#include <cmath>
#include <complex>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "dlambda/errors.hpp"
#include "dlambda/liouville.hpp"
#include "dlambda/parallel.hpp"
#include "dlambda/quadrature.hpp"
#include "dlambda/scheme.hpp"

namespace dlambda {

/// Velocity-averaged coefficients in units of alpha40, with every field on the
/// Rabi scale:
///   dE4/dz = i sigma4 E4 + i gamma4 E2*,   dE2/dz = i sigma2 E2 + i gamma2 E4*
///   dG1/dz = i sigma1 G1 + i sigma_tilde1 E4 E2 G3*
///   dG3/dz = i sigma3 G3 + i sigma_tilde3 E4 E2 G1*
/// sigma_j = dk_j + i alpha_j / 2.  gamma4 = cross4 G1 G3, gamma2 = cross2 G1 G3.
struct MacroscopicCoefficients {
  std::array<cplx, 4> sigma{};
  cplx gamma4{}, gamma2{};
  cplx cross4{}, cross2{};
  cplx sigma_tilde1{}, sigma_tilde3{};

  double alpha(Wave w) const { return 2.0 * sigma[w].imag(); }
  double delta_k(Wave w) const { return sigma[w].real(); }
  /// dk1 + dk3 - dk2 - dk4
  double phase_mismatch() const {
    return delta_k(E1) + delta_k(E3) - delta_k(E2) - delta_k(E4);
  }
};

namespace detail {

inline constexpr double kRabiFloor = 1e-6;

/// Drive amplitude used where a ratio per unit drive is needed.
inline cplx floored(cplx g) {
  if (std::abs(g) >= kRabiFloor) return g;
  const double phase = g == cplx{} ? 0.0 : std::arg(g);
  return std::polar(kRabiFloor, phase);
}

struct ClassTerms {
  cplx a4, a2, b4, b2, r1, r3;
};

}  // namespace detail

/// Reusable averaging context: nodes and the alpha40 normalization are set up
/// once per medium.
class DopplerAverager {
 public:
  DopplerAverager(const LevelScheme& scheme, const RelaxationSet& relax,
                  const MediumParams& medium, const QuadratureSpec& quad)
      : scheme_(scheme), relax_(relax), medium_(medium), quad_(quad) {
    scheme_.validate();
    relax_.validate();
    medium_.validate();
    const QuadratureNodes q = make_nodes(quad_);
    velocity_.resize(q.x.size());
    weight_.resize(q.w.size());
    CompensatedSum total;
    for (double w : q.w) total.add(w);
    for (std::size_t i = 0; i < q.x.size(); ++i) {
      velocity_[i] = q.x[i] * quad_.thermal_speed;
      weight_[i] = q.w[i] / total.value();
    }

    // alpha4(G = 0, Omega4 = 0) == alpha40 fixes the overall scale
    const auto zero = raw_average(FieldConfig{}, 0.0, 0.0, 1);
    const double im = zero.a4.imag();
    if (!(im > 0.0)) throw NumericalError("weak-field probe absorption is not positive");
    const double k4 = scheme_.wavenumber(E4);
    const double d4 = scheme_.dipole_rel[E4];
    for (std::size_t j = 0; j < 4; ++j) {
      const double kr = scheme_.wavenumber(static_cast<Wave>(j)) / k4;
      const double dr = scheme_.dipole_rel[j] / d4;
      scale_[j] = medium_.alpha40 / (2.0 * im) * kr * dr * dr;
    }
  }

  const QuadratureSpec& quadrature() const { return quad_; }
  std::size_t node_count() const { return velocity_.size(); }
  /// sigma_j per unit microscopic response (alpha40 units).
  double scale(Wave w) const { return scale_[w]; }

  MacroscopicCoefficients average(const FieldConfig& f, cplx g1, cplx g3,
                                  unsigned threads = 1) const {
    const cplx g1f = detail::floored(g1), g3f = detail::floored(g3);
    const auto t = raw_average(f, g1f, g3f, threads);
    MacroscopicCoefficients c;
    c.sigma[E1] = scale_[E1] * t.r1;
    c.sigma[E2] = scale_[E2] * t.a2;
    c.sigma[E3] = scale_[E3] * t.r3;
    c.sigma[E4] = scale_[E4] * t.a4;
    c.cross4 = scale_[E4] * t.b4 / (g1f * g3f);
    c.cross2 = scale_[E2] * t.b2 / (g1f * g3f);
    c.gamma4 = c.cross4 * g1 * g3;
    c.gamma2 = c.cross2 * g1 * g3;
    c.sigma_tilde1 = scale_[E1] / scale_[E4] * c.cross4;
    c.sigma_tilde3 = scale_[E3] / scale_[E2] * c.cross2;
    return c;
  }

 private:
  detail::ClassTerms raw_average(const FieldConfig& f, cplx g1, cplx g3,
                                 unsigned threads) const {
    const detail::VelocityClassSolver solver(scheme_, relax_, medium_, f, g1, g3);
    const std::size_t n = velocity_.size();
    std::vector<detail::ClassTerms> terms(n);
    parallel_for(n, threads, [&](std::size_t i) {
      try {
        const ZerothOrderState st = solver.zeroth(velocity_[i]);
        const ProbeResponse p = solver.probe(velocity_[i], st);
        const cplx rgl = st.coherence(Level::g, Level::l);
        const cplx rmn = st.coherence(Level::m, Level::n);
        terms[i] = {p.a4, p.a2, p.b4, p.b2, g1 == cplx{} ? cplx{} : rgl / g1,
                    g3 == cplx{} ? cplx{} : rmn / g3};
      } catch (const NumericalError& e) {
        std::ostringstream os;
        os << e.what() << " (velocity node " << i << ", v = " << velocity_[i] << " m/s)";
        throw SingularSystemError(os.str());
      }
    });
    CompensatedComplexSum a4, a2, b4, b2, r1, r3;
    for (std::size_t i = 0; i < n; ++i) {
      const double w = weight_[i];
      a4.add(w * terms[i].a4);
      a2.add(w * terms[i].a2);
      b4.add(w * terms[i].b4);
      b2.add(w * terms[i].b2);
      r1.add(w * terms[i].r1);
      r3.add(w * terms[i].r3);
    }
    return {a4.value(), a2.value(), b4.value(), b2.value(), r1.value(), r3.value()};
  }

  LevelScheme scheme_;
  RelaxationSet relax_;
  MediumParams medium_;
  QuadratureSpec quad_;
  std::vector<double> velocity_;
  std::vector<double> weight_;
  std::array<double, 4> scale_{};
};

inline MacroscopicCoefficients average_coefficients(const LevelScheme& scheme,
                                                    const RelaxationSet& relax,
                                                    const MediumParams& medium,
                                                    const FieldConfig& fields, cplx g1, cplx g3,
                                                    const QuadratureSpec& quad) {
  return DopplerAverager(scheme, relax, medium, quad).average(fields, g1, g3);
}

struct ConvergenceReport {
  QuadratureSpec spec;
  double relative_change = 0.0;
  bool converged = false;
};

/// Refine the quadrature until alpha4 changes by less than `tol` (relative)
/// between successive rules, or the node cap is reached.
inline ConvergenceReport converge_quadrature(const Setup& s, cplx g1, cplx g3,
                                             QuadratureSpec start, double tol = 1e-6,
                                             int max_nodes = 32001, unsigned threads = 1) {
  ConvergenceReport rep;
  QuadratureSpec cur = start;
  double prev = DopplerAverager(s.scheme, s.relax, s.medium, cur)
                    .average(s.fields, g1, g3, threads)
                    .alpha(E4);
  while (true) {
    const QuadratureSpec next = cur.refined();
    if (next.nodes > max_nodes) {
      rep.spec = cur;
      return rep;
    }
    const double val = DopplerAverager(s.scheme, s.relax, s.medium, next)
                           .average(s.fields, g1, g3, threads)
                           .alpha(E4);
    rep.relative_change = std::abs(val - prev) / std::max(std::abs(val), 1e-300);
    if (rep.relative_change < tol) {
      rep.spec = cur;
      rep.converged = true;
      return rep;
    }
    cur = next;
    prev = val;
  }
}

/// Complex Voigt profile
///   V(W) = int dx exp(-x^2)/sqrt(pi) * G / (G - i (W - D x))
/// by adaptive Gauss-Kronrod quadrature.  D -> 0 gives G / (G - i W); the real
/// part is the absorptive profile.
inline cplx voigt_reference(double omega, double gamma, double doppler_width) {
  if (!(gamma > 0.0) || !(doppler_width > 0.0))
    throw std::domain_error("voigt_reference: widths must be positive");
  using boost::math::quadrature::gauss_kronrod;
  const double norm = 1.0 / std::sqrt(std::numbers::pi);
  auto lorentz = [&](double x) {
    return gamma / cplx(gamma, -(omega - doppler_width * x));
  };
  auto re = [&](double x) { return norm * std::exp(-x * x) * lorentz(x).real(); };
  auto im = [&](double x) { return norm * std::exp(-x * x) * lorentz(x).imag(); };

  constexpr double edge = 10.0;  // exp(-100) is far below double resolution
  std::vector<double> breaks = {-edge};
  const double centre = omega / doppler_width;
  if (centre > -edge && centre < edge) breaks.push_back(centre);
  breaks.push_back(edge);

  cplx total{};
  double err_re = 0.0, err_im = 0.0;
  for (std::size_t k = 0; k + 1 < breaks.size(); ++k) {
    double e1 = 0.0, e2 = 0.0;
    total += cplx(gauss_kronrod<double, 31>::integrate(re, breaks[k], breaks[k + 1], 15, 1e-12, &e1),
                  gauss_kronrod<double, 31>::integrate(im, breaks[k], breaks[k + 1], 15, 1e-12, &e2));
    err_re += e1;
    err_im += e2;
  }
  if (err_re + err_im > 1e-8 * std::max(std::abs(total), 1e-300))
    throw NumericalError("voigt_reference: adaptive quadrature did not converge");
  return total;
}

}  // namespace dlambda
