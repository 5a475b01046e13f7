#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "dlambda/doppler.hpp"

using namespace dlambda;

namespace {

double doppler_width_e4(const dlambda::Setup& s) {
  return s.scheme.doppler_per_velocity(E4) * s.medium.thermal_speed(s.scheme.mass_kg);
}

}  // namespace

TEST(Quadrature, NodesIntegrateTheMaxwellWeight) {
  for (const auto& q : {gauss_hermite_nodes(64), trapezoid_nodes(4001, 4.5)}) {
    double w = 0, x2 = 0, x4 = 0;
    for (std::size_t i = 0; i < q.x.size(); ++i) {
      w += q.w[i];
      x2 += q.w[i] * q.x[i] * q.x[i];
      x4 += q.w[i] * std::pow(q.x[i], 4);
    }
    // the trapezoid range stops at 4.5 u, which loses ~x^n exp(-20) of each moment
    EXPECT_NEAR(w, 1.0, 1e-9);
    EXPECT_NEAR(x2, 0.5, 1e-8);
    EXPECT_NEAR(x4, 0.75, 2e-7);
  }
  QuadratureSpec bad;
  bad.nodes = 4;
  EXPECT_THROW(bad.validate(), ConfigError);
  QuadratureSpec gh;
  gh.rule = QuadratureRule::gauss_hermite;
  gh.nodes = 64;
  EXPECT_EQ(gh.refined().nodes, 128);
  EXPECT_EQ(QuadratureSpec{}.refined().nodes, 8001);
}

TEST(Doppler, NormalizationAtZeroDrive) {
  const dlambda::Setup s = na2_preset();
  const DopplerAverager avg(s.scheme, s.relax, s.medium, default_quadrature(s.scheme, s.medium));
  const auto c = avg.average(FieldConfig{}, 0.0, 0.0);
  EXPECT_NEAR(c.alpha(E4), 1.0, 1e-14);
  EXPECT_EQ(c.gamma4, cplx{});
  EXPECT_EQ(c.gamma2, cplx{});
  EXPECT_GT(c.alpha(E2), 0.0);
  EXPECT_NEAR(c.delta_k(E4), 0.0, 1e-12);
}

TEST(Doppler, ZeroDriveMatchesVoigtOracle) {
  const dlambda::Setup s = na2_preset();
  const DopplerAverager avg(s.scheme, s.relax, s.medium, default_quadrature(s.scheme, s.medium));
  const double dw = doppler_width_e4(s);
  const double peak = voigt_reference(0.0, s.relax.coh_ml, dw).real();
  const double span = 2.0 * std::numbers::pi * 3000.0;  // +-3 GHz
  for (int k = -20; k <= 20; ++k) {
    FieldConfig f;
    f.omega4 = span * k / 20.0;
    const double got = avg.average(f, 0.0, 0.0).alpha(E4);
    const double want = voigt_reference(f.omega4, s.relax.coh_ml, dw).real() / peak;
    EXPECT_NEAR(got / want, 1.0, 1e-3) << "Omega4 = " << f.omega4;
  }
}

TEST(Doppler, SpectrumReflection) {
  // all drive detunings zero, real drives: alpha is even and the dispersion
  // odd under Omega4 -> -Omega4
  const dlambda::Setup s = na2_preset();
  const DopplerAverager avg(s.scheme, s.relax, s.medium, default_quadrature(s.scheme, s.medium));
  FieldConfig f;
  for (double o4 : {35.0, 120.0, 260.0}) {
    f.omega4 = o4;
    const auto a = avg.average(f, 100.0, 40.0);
    f.omega4 = -o4;
    const auto b = avg.average(f, 100.0, 40.0);
    for (Wave w : {E1, E2, E3, E4}) {
      EXPECT_NEAR(a.alpha(w), b.alpha(w), 1e-9 * std::abs(a.alpha(w)) + 1e-15);
      EXPECT_NEAR(a.delta_k(w), -b.delta_k(w), 1e-9 * std::abs(a.sigma[w]) + 1e-15);
    }
    EXPECT_NEAR(std::abs(a.gamma4 + std::conj(b.gamma4)), 0.0, 1e-9 * std::abs(a.gamma4));
    EXPECT_NEAR(std::abs(a.gamma2 + std::conj(b.gamma2)), 0.0, 1e-9 * std::abs(a.gamma2));
  }
}

TEST(Doppler, ColdLimitIsTheRestFrameClass) {
  dlambda::Setup s = na2_preset();
  s.medium.temperature_K = 1e-10;
  const QuadratureSpec q = default_quadrature(s.scheme, s.medium);
  const DopplerAverager avg(s.scheme, s.relax, s.medium, q);
  FieldConfig f = s.fields;
  f.omega4 = 125.0;
  const auto c = avg.average(f, 100.0, 40.0);

  const detail::VelocityClassSolver zero(s.scheme, s.relax, s.medium, FieldConfig{}, 0.0, 0.0);
  const double k4 = 1.0 / (2.0 * zero.probe(0.0, zero.zeroth(0.0)).a4.imag());
  const detail::VelocityClassSolver one(s.scheme, s.relax, s.medium, f, 100.0, 40.0);
  const auto st = one.zeroth(0.0);
  const auto p = one.probe(0.0, st);
  EXPECT_NEAR(std::abs(c.sigma[E4] - k4 * p.a4), 0.0, 1e-9 * std::abs(c.sigma[E4]));
  EXPECT_NEAR(std::abs(c.gamma4 - k4 * p.b4), 0.0, 1e-9 * std::abs(c.gamma4));
  EXPECT_NEAR(std::abs(c.sigma[E2] - avg.scale(E2) * p.a2), 0.0, 1e-9 * std::abs(c.sigma[E2]));
  EXPECT_NEAR(std::abs(c.sigma[E1] - avg.scale(E1) * st.coherence(Level::g, Level::l) / 100.0),
              0.0, 1e-9 * std::abs(c.sigma[E1]));
}

TEST(Doppler, ScaleFollowsWavenumberAndDipole) {
  const dlambda::Setup s = na2_preset();
  const DopplerAverager avg(s.scheme, s.relax, s.medium, default_quadrature(s.scheme, s.medium));
  for (Wave w : {E1, E2, E3}) {
    const double d = s.scheme.dipole_rel[w];
    EXPECT_NEAR(avg.scale(w) / avg.scale(E4),
                s.scheme.wavelength_m[E4] / s.scheme.wavelength_m[w] * d * d, 1e-14);
  }
}

TEST(Doppler, ThreadCountDoesNotChangeBits) {
  const dlambda::Setup s = na2_preset();
  QuadratureSpec q = default_quadrature(s.scheme, s.medium);
  q.nodes = 1001;
  const DopplerAverager avg(s.scheme, s.relax, s.medium, q);
  FieldConfig f = s.fields;
  f.omega4 = 75.0;
  const auto a = avg.average(f, 100.0, 40.0, 1);
  const auto b = avg.average(f, 100.0, 40.0, 3);
  const auto c = avg.average(f, 100.0, 40.0, 7);
  for (int j = 0; j < 4; ++j) {
    EXPECT_EQ(a.sigma[j], b.sigma[j]);
    EXPECT_EQ(a.sigma[j], c.sigma[j]);
  }
  EXPECT_EQ(a.gamma4, c.gamma4);
  EXPECT_EQ(a.gamma2, b.gamma2);
}

TEST(Doppler, GammaCarriesTheDriveProduct) {
  const dlambda::Setup s = na2_preset();
  QuadratureSpec q = default_quadrature(s.scheme, s.medium);
  const DopplerAverager avg(s.scheme, s.relax, s.medium, q);
  FieldConfig f = s.fields;
  f.omega4 = 125.0;
  const auto a = avg.average(f, 100.0, 40.0);
  const cplx p1 = std::polar(1.0, 0.4), p3 = std::polar(1.0, -1.1);
  const auto b = avg.average(f, 100.0 * p1, 40.0 * p3);
  EXPECT_NEAR(std::abs(b.gamma4 - a.gamma4 * p1 * p3), 0.0, 1e-12 * std::abs(a.gamma4));
  EXPECT_NEAR(std::abs(b.gamma2 - a.gamma2 * p1 * p3), 0.0, 1e-12 * std::abs(a.gamma2));
  EXPECT_NEAR(std::abs(b.sigma[E4] - a.sigma[E4]), 0.0, 1e-12 * std::abs(a.sigma[E4]));
  EXPECT_NEAR(std::abs(a.gamma4 - a.cross4 * 4000.0), 0.0, 1e-15);
}

// Both rules agree where the velocity structure is resolved by 64
// Gauss-Hermite nodes (Doppler width comparable to the homogeneous widths).
TEST(Doppler, RuleIndependenceInBroadLineRegime) {
  dlambda::Setup s = na2_preset();
  s.medium.temperature_K = 0.05;
  QuadratureSpec gh = default_quadrature(s.scheme, s.medium);
  gh.rule = QuadratureRule::gauss_hermite;
  gh.nodes = 64;
  const QuadratureSpec tz = default_quadrature(s.scheme, s.medium);
  const DopplerAverager a(s.scheme, s.relax, s.medium, gh), b(s.scheme, s.relax, s.medium, tz);
  for (double o4 : {-150.0, 0.0, 75.0, 125.0, 160.0, 300.0}) {
    FieldConfig f = s.fields;
    f.omega4 = o4;
    const auto x = a.average(f, 100.0, 40.0), y = b.average(f, 100.0, 40.0);
    EXPECT_NEAR(x.alpha(E4), y.alpha(E4), 1e-5 * std::abs(y.sigma[E4]));
    EXPECT_NEAR(x.alpha(E2), y.alpha(E2), 1e-5 * std::abs(y.sigma[E2]));
    EXPECT_LT(std::abs(x.gamma4 - y.gamma4), 1e-5 * std::abs(y.gamma4));
  }
}

TEST(Doppler, DefaultRuleIsConvergedAtPreset) {
  dlambda::Setup s = na2_preset();
  s.fields.omega4 = 125.0;
  const auto rep = converge_quadrature(s, 100.0, 40.0, default_quadrature(s.scheme, s.medium),
                                       1e-6, 8001);
  EXPECT_TRUE(rep.converged) << rep.relative_change;
  EXPECT_EQ(rep.spec.nodes, 4001);
}

TEST(Doppler, FailuresNameTheVelocityNode) {
  dlambda::Setup s = na2_preset();
  s.relax = RelaxationSet{};
  QuadratureSpec q = default_quadrature(s.scheme, s.medium);
  q.nodes = 11;
  try {
    DopplerAverager avg(s.scheme, s.relax, s.medium, q);
    FAIL() << "expected a singular system";
  } catch (const SingularSystemError& e) {
    EXPECT_NE(std::string(e.what()).find("velocity node"), std::string::npos);
  }
}

TEST(Voigt, LorentzianLimit) {
  for (double o : {-300.0, -40.0, 0.0, 12.0, 500.0}) {
    const cplx v = voigt_reference(o, 110.0, 1e-6);
    const cplx l = 110.0 / cplx(110.0, -o);
    EXPECT_LT(std::abs(v - l), 1e-8);
  }
}

TEST(Voigt, CentreIsRealAndMaximal) {
  const cplx c = voigt_reference(0.0, 50.0, 50.0);
  EXPECT_NEAR(c.imag(), 0.0, 1e-12);
  EXPECT_GT(c.real(), voigt_reference(1.0, 50.0, 50.0).real());
  EXPECT_GT(c.real(), voigt_reference(-1.0, 50.0, 50.0).real());
  EXPECT_NEAR(voigt_reference(30.0, 50.0, 50.0).imag(), -voigt_reference(-30.0, 50.0, 50.0).imag(),
              1e-10);
}

TEST(Voigt, GaussianWidthWhenDopplerDominates) {
  const double gam = 1.0, dw = 100.0;
  const double half = voigt_reference(0.0, gam, dw).real() / 2.0;
  double lo = 0.0, hi = 5 * dw;
  while (hi - lo > 1e-3) {
    const double mid = 0.5 * (lo + hi);
    (voigt_reference(mid, gam, dw).real() > half ? lo : hi) = mid;
  }
  const double edge = 0.5 * (lo + hi);
  const double gauss_fwhm = 2.0 * dw * std::sqrt(std::numbers::ln2);
  EXPECT_NEAR(2.0 * edge / gauss_fwhm, 1.0, 0.02);
}

TEST(Voigt, RejectsNonPositiveWidths) {
  EXPECT_THROW(voigt_reference(0.0, 0.0, 1.0), std::domain_error);
  EXPECT_THROW(voigt_reference(0.0, 1.0, -1.0), std::domain_error);
}
