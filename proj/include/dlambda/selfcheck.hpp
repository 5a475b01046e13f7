#pragma once

// Invariant self-checks shared by `dlambda validate` and the acceptance
// runner.  Each check is self-contained and reports its worst deviation.

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "dlambda/coupledwave.hpp"
#include "dlambda/doppler.hpp"
#include "dlambda/liouville.hpp"
#include "dlambda/propagate.hpp"
#include "dlambda/scheme.hpp"

namespace dlambda::selfcheck {

struct CheckResult {
  std::string name;
  bool passed = false;
  std::string detail;
};

namespace detail {

inline std::string fmt(double x) {
  std::ostringstream os;
  os.precision(3);
  os << x;
  return os.str();
}

/// Reduced two-field system integrated with classical RK4.
inline OpaState reduced_rk4(const OpaCoefficients& c, const BoundaryAmplitudes& b, double z,
                            int steps) {
  const cplx i{0.0, 1.0};
  auto f = [&](double zz, cplx e4, cplx e2c) {
    const cplx ph = std::polar(1.0, c.delta_k * zz);
    return std::pair<cplx, cplx>{-c.alpha4 / 2 * e4 + i * c.gamma4 * ph * e2c,
                                 -c.alpha2 / 2 * e2c - i * std::conj(c.gamma2) * std::conj(ph) * e4};
  };
  cplx e4 = b.e40, e2c = std::conj(b.e20);
  const double h = z / steps;
  for (int k = 0; k < steps; ++k) {
    const double zz = h * k;
    const auto [a1, b1] = f(zz, e4, e2c);
    const auto [a2, b2] = f(zz + h / 2, e4 + h / 2 * a1, e2c + h / 2 * b1);
    const auto [a3, b3] = f(zz + h / 2, e4 + h / 2 * a2, e2c + h / 2 * b2);
    const auto [a4, b4] = f(zz + h, e4 + h * a3, e2c + h * b3);
    e4 += h / 6 * (a1 + 2.0 * a2 + 2.0 * a3 + a4);
    e2c += h / 6 * (b1 + 2.0 * b2 + 2.0 * b3 + b4);
  }
  return {e4, e2c};
}

}  // namespace detail

/// Drives off: I4(L)/I40 = exp(-alpha4 L) for L in {1, 5, 20}.
inline CheckResult beer_lambert(const Setup& base) {
  Setup s = base;
  s.fields.g10 = s.fields.g30 = 0.0;
  if (std::abs(s.fields.e40) == 0.0) s.fields.e40 = 0.1;
  const DopplerAverager avg(s.scheme, s.relax, s.medium,
                            default_quadrature(s.scheme, s.medium));
  const double a4 = avg.average(s.fields, 0.0, 0.0).alpha(E4);
  double worst = 0.0;
  for (double l : {1.0, 5.0, 20.0}) {
    PropagationOptions po;
    po.error_estimate = false;
    const auto tr = integrate(s, l, 256, nullptr, po);
    const double ratio = std::norm(tr.samples.back().e4) / std::norm(s.fields.e40);
    worst = std::max(worst, std::abs(ratio / std::exp(-a4 * l) - 1.0));
  }
  return {"beer_lambert", worst <= 1e-6, "max relative error " + detail::fmt(worst)};
}

/// opa_solution against RK4 with 1e5 steps on random constant coefficients.
inline CheckResult opa_oracle(int draws = 100, std::uint64_t seed = 17) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> a(-0.5, 1.5), dk(-1.0, 1.0), g(-0.5, 0.5);
  const BoundaryAmplitudes b{cplx(1.0, 0.2), cplx(-0.3, 0.4)};
  double worst = 0.0;
  for (int k = 0; k < draws; ++k) {
    OpaCoefficients c;
    c.alpha4 = a(rng);
    c.alpha2 = a(rng);
    c.delta_k = dk(rng);
    c.gamma4 = {g(rng), g(rng)};
    c.gamma2 = {g(rng), g(rng)};
    const auto exact = opa_solution(c, b, 7.0);
    const auto num = detail::reduced_rk4(c, b, 7.0, 100000);
    const double scale = std::hypot(std::abs(num.e4), std::abs(num.e2c));
    worst = std::max(worst, std::hypot(std::abs(exact.e4 - num.e4), std::abs(exact.e2c - num.e2c)) /
                                scale);
  }
  return {"opa_oracle", worst <= 1e-8, "max relative error " + detail::fmt(worst)};
}

/// Weak-coupling limit formulas against the closed form.  With `strict` every
/// draw with |g^2/b^2| <= 1e-2 and dk = 0 counts; otherwise draws whose
/// dropped exponent exceeds 2.5e-3 are skipped.
inline CheckResult limit_formulas(bool strict, int draws = 400, std::uint64_t seed = 3) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> lb(-2.0, 0.0), lx(-5.0, -2.0),
      ph(-std::numbers::pi, std::numbers::pi), a4(0.0, 2.0), len(0.0, 20.0);
  double worst = 0.0;
  int used = 0, failed = 0;
  for (int k = 0; k < draws; ++k) {
    const double b = std::pow(10.0, lb(rng)), x = std::pow(10.0, lx(rng)), phase = ph(rng);
    OpaCoefficients c;
    c.alpha4 = a4(rng);
    c.alpha2 = c.alpha4 - 4 * b;
    const cplx gsq = std::polar(x * b * b, phase);
    c.gamma4 = std::polar(std::sqrt(std::abs(gsq)), phase / 2);
    c.gamma2 = std::conj(gsq / c.gamma4);
    const double l = len(rng);
    const auto gain = fwm_gain_limit(c, l);
    if (!strict && gain.omitted_exponent > 2.5e-3) continue;
    ++used;
    const double exact_gain = std::norm(opa_solution(c, {1.0, 0.0}, l).e4);
    double err = std::abs(gain.value / exact_gain - 1.0);
    if (l > 0.0) {
      const double exact_eta = std::norm(opa_solution(c, {0.0, 1.0}, l).e4);
      err = std::max(err, std::abs(eta4_conversion(c, l).value / exact_eta - 1.0));
    }
    if (err > 0.01) ++failed;
    worst = std::max(worst, err);
  }
  std::string msg = "max relative error " + detail::fmt(worst) + " over " +
                    std::to_string(used) + " draws";
  if (failed) msg += " (" + std::to_string(failed) + " above 1%)";
  return {strict ? "limit_formulas_all" : "limit_formulas", failed == 0 && used > 0, msg};
}

/// |E4|^2 - |E2|^2 is constant for equal lossless coupling.
inline CheckResult manley_rowe() {
  const OpaCoefficients c{0.0, 0.0, 0.0, cplx(0.5, 0.0), cplx(0.5, 0.0)};
  const BoundaryAmplitudes b{cplx(0.8, 0.1), cplx(0.3, 0.2)};
  const double invariant = std::norm(b.e40) - std::norm(b.e20);
  double worst = 0.0;
  for (int k = 0; k <= 400; ++k) {
    const auto s = opa_solution(c, b, 10.0 * k / 400);
    worst = std::max(worst, std::abs(std::norm(s.e4) - std::norm(s.e2c) - invariant) /
                                std::abs(invariant));
  }
  return {"manley_rowe", worst <= 1e-9, "max relative drift " + detail::fmt(worst)};
}

/// Trace, Hermiticity, populations, two-level saturation and the
/// Autler-Townes doublet of the single-class solver.
inline CheckResult density_matrix(const Setup& s) {
  const auto& r = s.relax;
  auto det = [](double o1, double o2, double o3, double o4) {
    VelocityDetunings d;
    d.omega = {o1, o2, o3, o4};
    return d;
  };
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> om(-500.0, 500.0), amp(0.0, 400.0), ph(-3.0, 3.0);
  double trace_err = 0.0, herm_err = 0.0, pop_err = 0.0;
  for (int k = 0; k < 200; ++k) {
    const auto st = solve_zeroth_order(s.scheme, r, s.medium, det(om(rng), om(rng), om(rng), om(rng)),
                                       std::polar(amp(rng), ph(rng)), std::polar(amp(rng), ph(rng)));
    trace_err = std::max(trace_err, std::abs(st.trace() - 1.0));
    herm_err = std::max(herm_err, st.hermiticity_error());
    for (Level lv : {Level::l, Level::n, Level::g, Level::m}) {
      const double p = st.population(lv);
      pop_err = std::max({pop_err, -p, p - 1.0});
    }
  }
  double sat_err = 0.0;
  for (double g1 : {1.0, 10.0, 100.0})
    for (double o1 : {0.0, 55.0}) {
      const auto st = solve_zeroth_order(s.scheme, r, s.medium, det(o1, 0, 40, 0), g1, 0.0);
      const double w = 2.0 * g1 * g1 * r.coh_gl / (r.coh_gl * r.coh_gl + o1 * o1);
      const double want = w / (r.pop_g + w);
      const double got = st.population(Level::g) / st.population(Level::l);
      sat_err = std::max(sat_err, std::abs(got / want - 1.0));
    }
  // Stokes absorption dressed by G1 = 300
  const double g1 = 300.0;
  double best_pos = -1e300, best_neg = -1e300, at_pos = 0.0, at_neg = 0.0;
  for (double o2 = -700.0; o2 <= 700.0; o2 += 1.0) {
    const auto d = det(0.0, o2, 0.0, 0.0);
    const auto st = solve_zeroth_order(s.scheme, r, s.medium, d, g1, 0.0);
    const double y = std::abs(solve_probe_response(st, s.scheme, r, s.medium, d, g1, 0.0).a2.imag());
    if (o2 > 0 && y > best_pos) best_pos = y, at_pos = o2;
    if (o2 < 0 && y > best_neg) best_neg = y, at_neg = o2;
  }
  const bool at_ok = std::abs(at_pos - g1) <= 0.2 * g1 && std::abs(at_neg + g1) <= 0.2 * g1;
  const bool ok = trace_err <= 1e-12 && herm_err <= 1e-12 && pop_err <= 1e-12 &&
                  sat_err <= 1e-10 && at_ok;
  return {"density_matrix", ok,
          "trace " + detail::fmt(trace_err) + ", hermiticity " + detail::fmt(herm_err) +
              ", saturation " + detail::fmt(sat_err) + ", doublet at " + detail::fmt(at_neg) +
              "/" + detail::fmt(at_pos) + " MHz"};
}

/// Zero-drive alpha4 against the Voigt profile over +-3 GHz, and the Doppler
/// FWHM of the probe line.
inline CheckResult doppler(const Setup& s) {
  const DopplerAverager avg(s.scheme, s.relax, s.medium, default_quadrature(s.scheme, s.medium));
  const double dw = s.scheme.doppler_per_velocity(E4) * s.medium.thermal_speed(s.scheme.mass_kg);
  const double peak = voigt_reference(0.0, s.relax.coh_ml, dw).real();
  const double span = 2.0 * std::numbers::pi * 3000.0;
  double worst = 0.0;
  for (int k = -20; k <= 20; ++k) {
    FieldConfig f;
    f.omega4 = span * k / 20.0;
    const double got = avg.average(f, 0.0, 0.0).alpha(E4);
    const double want = voigt_reference(f.omega4, s.relax.coh_ml, dw).real() / peak;
    worst = std::max(worst, std::abs(got / want - 1.0));
  }
  const double fwhm = doppler_fwhm(723.0, 480e-9, s.scheme.mass_kg);
  const bool ok = worst <= 1e-3 && fwhm >= 1.6e9 && fwhm <= 1.9e9;
  return {"doppler", ok,
          "Voigt max relative error " + detail::fmt(worst) + ", FWHM " + detail::fmt(fwhm / 1e9) +
              " GHz"};
}

/// Interpolation error of the default coefficient cache at the boundary
/// detunings.
inline CheckResult cache_accuracy(const Setup& s, unsigned threads = 1) {
  if (std::abs(s.fields.g10) == 0.0 || std::abs(s.fields.g30) == 0.0)
    return {"cache_accuracy", true, "skipped (drives off)"};
  CoefficientCache::Options co;
  co.threads = threads;
  const CoefficientCache cache(s, default_quadrature(s.scheme, s.medium), co);
  const double e = cache.validation_error();
  return {"cache_accuracy", e < 1e-4, "max relative error " + detail::fmt(e)};
}

/// Everything `validate` runs.
inline std::vector<CheckResult> run_all(const Setup& s, unsigned threads = 1) {
  return {beer_lambert(s), opa_oracle(), limit_formulas(false), manley_rowe(),
          density_matrix(s), doppler(s), cache_accuracy(s, threads)};
}

}  // namespace dlambda::selfcheck
