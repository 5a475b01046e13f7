#pragma once

// Level scheme, relaxation rates, medium and field configuration of the
// double-Lambda system.
//
// Levels: l (ground), n (low-lying), g and m (upper).  The four waves are
//   E1: l-g (drive),  E2: n-g (Stokes probe),
//   E3: n-m (drive),  E4: l-m (anti-Stokes probe),
// with w4 + w2 = w1 + w3.
//
// Units: rates, detunings and Rabi frequencies are angular frequencies in
// 1e6 s^-1 ("MHz units").  Lengths are in L4 = 1/alpha40.

#include <array>
#include <cmath>
#include <complex>
#include <cstddef>
#include <numbers>
#include <stdexcept>
#include <string>

#include "dlambda/errors.hpp"

namespace dlambda {

using cplx = std::complex<double>;

namespace constants {
inline constexpr double boltzmann = 1.380649e-23;     // J/K
inline constexpr double planck = 6.62607015e-34;      // J s
inline constexpr double speed_of_light = 299792458.0; // m/s
inline constexpr double atomic_mass = 1.66053906660e-27;  // kg
inline constexpr double zero_celsius = 273.15;            // K
inline constexpr double rate_unit = 1e6;                  // s^-1 per "MHz unit"
}  // namespace constants

enum class Level : std::size_t { l = 0, n = 1, g = 2, m = 3 };

/// Index of a wave/transition; arrays over transitions use this order.
enum Wave : std::size_t { E1 = 0, E2 = 1, E3 = 2, E4 = 3 };

inline constexpr std::size_t index(Level lv) { return static_cast<std::size_t>(lv); }

/// Wavelength of the n-g transition that closes w4 + w2 = w1 + w3.
inline double closure_wavelength(double lambda1, double lambda3, double lambda4) {
  return 1.0 / (1.0 / lambda1 + 1.0 / lambda3 - 1.0 / lambda4);
}

struct LevelScheme {
  std::array<double, 4> wavelength_m{};  ///< vacuum wavelengths of E1..E4
  std::array<double, 4> dipole_rel{};    ///< d_lg, d_gn, d_nm, d_ml relative to d_ml
  double mass_kg = 0.0;

  /// Vacuum wave number 2*pi/lambda (rad/m).
  double wavenumber(Wave w) const { return 2.0 * std::numbers::pi / wavelength_m[w]; }

  /// Doppler shift k*v for unit velocity, in MHz units per (m/s).
  double doppler_per_velocity(Wave w) const {
    return wavenumber(w) / constants::rate_unit;
  }

  /// Relative mismatch of 1/l1 + 1/l3 - 1/l2 - 1/l4.
  double closure_mismatch() const {
    const auto& l = wavelength_m;
    const double lhs = 1.0 / l[E1] + 1.0 / l[E3];
    const double rhs = 1.0 / l[E2] + 1.0 / l[E4];
    return std::abs(lhs - rhs) / lhs;
  }

  void validate() const {
    for (std::size_t j = 0; j < 4; ++j) {
      if (!(wavelength_m[j] > 0.0) || !std::isfinite(wavelength_m[j]))
        throw ConfigError("wavelength of E" + std::to_string(j + 1) + " must be positive");
      if (!(dipole_rel[j] > 0.0) || !std::isfinite(dipole_rel[j]))
        throw ConfigError("relative dipole of E" + std::to_string(j + 1) + " must be positive");
    }
    if (!(mass_kg > 0.0)) throw ConfigError("molecular mass must be positive");
    if (closure_mismatch() > 1e-6)
      throw ConfigError("wavelengths violate w4 + w2 = w1 + w3");
  }
};

/// Relaxation constants, all in MHz units.  Coherence rates are symmetric
/// (Gamma_ij = Gamma_ji) and taken as independent inputs.
struct RelaxationSet {
  // population decay
  double pop_m = 0, pop_g = 0, pop_n = 0;
  // coherence decay
  double coh_ml = 0, coh_gl = 0, coh_mn = 0, coh_gn = 0, coh_nl = 0, coh_gm = 0;
  // spontaneous interlevel channels
  double spont_mn = 0, spont_ml = 0, spont_gn = 0, spont_gl = 0;

  void validate() const {
    const double all[] = {pop_m,  pop_g,  pop_n,  coh_ml,   coh_gl,   coh_mn,   coh_gn,
                          coh_nl, coh_gm, spont_mn, spont_ml, spont_gn, spont_gl};
    for (double r : all)
      if (!(r >= 0.0) || !std::isfinite(r)) throw ConfigError("relaxation rates must be >= 0");
    if (spont_mn + spont_ml > pop_m) throw ConfigError("branching of m exceeds Gamma_m");
    if (spont_gn + spont_gl > pop_g) throw ConfigError("branching of g exceeds Gamma_g");
  }
};

struct MediumParams {
  double temperature_K = 0.0;
  double alpha40 = 1.0;  ///< weak-field resonant absorption of E4; defines L4
  double p_n = 0.0;      ///< zero-field population share of level n

  /// Most probable speed sqrt(2 kB T / M) (m/s).
  double thermal_speed(double mass_kg) const {
    return std::sqrt(2.0 * constants::boltzmann * temperature_K / mass_kg);
  }

  void validate() const {
    if (!(temperature_K > 0.0)) throw ConfigError("temperature must be positive");
    if (!(alpha40 > 0.0)) throw ConfigError("alpha40 must be positive");
    if (!(p_n >= 0.0 && p_n < 1.0)) throw ConfigError("p_n must lie in [0, 1)");
  }
};

/// Detunings and boundary amplitudes.  Omega2 is slaved to the four-photon
/// condition and never stored.
struct FieldConfig {
  double omega1 = 0;  ///< w1 - w_gl
  double omega3 = 0;  ///< w3 - w_mn
  double omega4 = 0;  ///< w4 - w_ml
  cplx g10{0.0};      ///< boundary Rabi amplitude E1 d_lg / 2hbar
  cplx g30{0.0};      ///< boundary Rabi amplitude E3 d_nm / 2hbar
  cplx e40{0.0};      ///< boundary anti-Stokes probe (Rabi scale)
  cplx e20{0.0};      ///< boundary Stokes probe (Rabi scale)

  double omega2() const { return omega1 + omega3 - omega4; }

  void validate() const {
    const double vals[] = {omega1, omega3, omega4, g10.real(), g10.imag(), g30.real(),
                           g30.imag(), e40.real(), e40.imag(), e20.real(), e20.imag()};
    for (double v : vals)
      if (!std::isfinite(v)) throw ConfigError("field configuration contains non-finite values");
  }
};

/// Complete model input.
struct Setup {
  LevelScheme scheme;
  RelaxationSet relax;
  MediumParams medium;
  FieldConfig fields;

  void validate() const {
    scheme.validate();
    relax.validate();
    medium.validate();
    fields.validate();
  }
};

/// Na2 parameter set.  lambda2 follows from closure of the other three
/// wavelengths.  The relative dipoles are not tabulated for these lines; the
/// defaults reproduce the reported drive depletion (G1 ~ 43 MHz and
/// G3 ~ 39 MHz after 20 L4) and the reported order of the maximum gain.
inline Setup na2_preset() {
  Setup s;
  const double nm = 1e-9;
  s.scheme.wavelength_m = {655.0 * nm, 0.0, 532.0 * nm, 480.0 * nm};
  s.scheme.wavelength_m[E2] = closure_wavelength(s.scheme.wavelength_m[E1],
                                                 s.scheme.wavelength_m[E3],
                                                 s.scheme.wavelength_m[E4]);
  s.scheme.dipole_rel = {0.34, 1.70, 0.26, 1.0};
  s.scheme.mass_kg = 2.0 * 22.98976928 * constants::atomic_mass;

  auto& r = s.relax;
  r.pop_m = 260.0;
  r.pop_g = 200.0;
  r.pop_n = 30.0;
  r.coh_mn = 110.0;  // Gamma_nm
  r.coh_ml = 110.0;  // Gamma_lm
  r.coh_gm = 130.0;
  r.coh_gn = 140.0;  // Gamma_ng
  r.coh_gl = 140.0;  // Gamma_lg
  r.coh_nl = 15.0;
  r.spont_mn = 24.0;
  r.spont_ml = 20.0;
  r.spont_gn = 10.0;
  r.spont_gl = 40.0;

  s.medium.temperature_K = 450.0 + constants::zero_celsius;
  s.medium.alpha40 = 1.0;
  s.medium.p_n = 0.02;

  s.fields.omega1 = 0.0;
  s.fields.omega3 = 100.0;
  s.fields.omega4 = 0.0;
  s.fields.g10 = 100.0;
  s.fields.g30 = 40.0;
  s.fields.e40 = 0.1;  // 1e-3 of G10
  s.fields.e20 = 0.0;
  return s;
}

/// Doppler FWHM (Hz) of a line at wavelength lambda:
/// (1/lambda) sqrt(8 ln2 kB T / M).
inline double doppler_fwhm(double temperature_K, double lambda_m, double mass_kg) {
  if (!(temperature_K > 0.0) || !(lambda_m > 0.0) || !(mass_kg > 0.0))
    throw std::domain_error("doppler_fwhm: arguments must be positive");
  return std::sqrt(8.0 * std::numbers::ln2 * constants::boltzmann * temperature_K / mass_kg) /
         lambda_m;
}

/// Boltzmann factor exp(-h dnu / kB T) for a splitting dnu (Hz).
inline double boltzmann_fraction(double temperature_K, double splitting_hz) {
  if (!(temperature_K > 0.0)) throw std::domain_error("boltzmann_fraction: T must be positive");
  return std::exp(-constants::planck * splitting_hz / (constants::boltzmann * temperature_K));
}

/// l-n splitting c (1/lambda1 - 1/lambda2) in Hz.
inline double lower_splitting_hz(const LevelScheme& s) {
  return constants::speed_of_light * (1.0 / s.wavelength_m[E1] - 1.0 / s.wavelength_m[E2]);
}

}  // namespace dlambda
