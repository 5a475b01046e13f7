#pragma once

// JSON configuration.  Every key is optional; missing keys keep the Na2
// preset value.
//
//   scheme:     wavelengths_nm [4], dipoles_rel [4], mass_amu
//   relaxation: gamma_pop_MHz {m,g,n}, gamma_coh_MHz {ml,gl,mn,gn,nl,gm},
//               gamma_spont_MHz {mn,ml,gn,gl}
//   medium:     temperature_C, alpha40_per_L4 (must be 1), p_n
//   fields:     Omega1_MHz, Omega3_MHz, Omega4_MHz, G10_MHz, G30_MHz, E40, E20
//
// Complex amplitudes are written as a number or as [re, im].

#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "dlambda/scheme.hpp"

namespace dlambda {

using json = nlohmann::json;

namespace detail {

inline cplx complex_from_json(const json& j, const char* key) {
  if (j.is_number()) return {j.get<double>(), 0.0};
  if (j.is_array() && j.size() == 2 && j[0].is_number() && j[1].is_number())
    return {j[0].get<double>(), j[1].get<double>()};
  throw ConfigError(std::string("fields.") + key + ": expected number or [re, im]");
}

inline json complex_to_json(cplx z) {
  if (z.imag() == 0.0) return z.real();
  return json::array({z.real(), z.imag()});
}

template <class T>
void read_if(const json& obj, const char* key, T& out, const char* section) {
  if (!obj.contains(key)) return;
  try {
    out = obj.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string(section) + "." + key + ": " + e.what());
  }
}

}  // namespace detail

inline json to_json(const Setup& s) {
  json j;
  const auto& sc = s.scheme;
  json wl = json::array();
  for (double l : sc.wavelength_m) wl.push_back(l * 1e9);
  j["scheme"] = {{"wavelengths_nm", wl},
                 {"dipoles_rel", sc.dipole_rel},
                 {"mass_amu", sc.mass_kg / constants::atomic_mass}};
  const auto& r = s.relax;
  j["relaxation"] = {
      {"gamma_pop_MHz", {{"m", r.pop_m}, {"g", r.pop_g}, {"n", r.pop_n}}},
      {"gamma_coh_MHz",
       {{"ml", r.coh_ml}, {"gl", r.coh_gl}, {"mn", r.coh_mn},
        {"gn", r.coh_gn}, {"nl", r.coh_nl}, {"gm", r.coh_gm}}},
      {"gamma_spont_MHz",
       {{"mn", r.spont_mn}, {"ml", r.spont_ml}, {"gn", r.spont_gn}, {"gl", r.spont_gl}}}};
  j["medium"] = {{"temperature_C", s.medium.temperature_K - constants::zero_celsius},
                 {"alpha40_per_L4", s.medium.alpha40},
                 {"p_n", s.medium.p_n}};
  const auto& f = s.fields;
  j["fields"] = {{"Omega1_MHz", f.omega1},
                 {"Omega3_MHz", f.omega3},
                 {"Omega4_MHz", f.omega4},
                 {"G10_MHz", detail::complex_to_json(f.g10)},
                 {"G30_MHz", detail::complex_to_json(f.g30)},
                 {"E40", detail::complex_to_json(f.e40)},
                 {"E20", detail::complex_to_json(f.e20)}};
  return j;
}

/// Overlay a parsed configuration on the Na2 preset and validate.
inline Setup setup_from_json(const json& j) {
  if (!j.is_object()) throw ConfigError("configuration root must be an object");
  Setup s = na2_preset();

  if (j.contains("scheme")) {
    const json& sc = j.at("scheme");
    if (sc.contains("wavelengths_nm")) {
      std::array<double, 4> wl{};
      detail::read_if(sc, "wavelengths_nm", wl, "scheme");
      for (std::size_t k = 0; k < 4; ++k) s.scheme.wavelength_m[k] = wl[k] / 1e9;  // exact round trip with m * 1e9
      // lambda2 is always rebuilt from closure
      s.scheme.wavelength_m[E2] = closure_wavelength(
          s.scheme.wavelength_m[E1], s.scheme.wavelength_m[E3], s.scheme.wavelength_m[E4]);
    }
    detail::read_if(sc, "dipoles_rel", s.scheme.dipole_rel, "scheme");
    if (sc.contains("mass_amu")) {
      double amu = 0;
      detail::read_if(sc, "mass_amu", amu, "scheme");
      s.scheme.mass_kg = amu * constants::atomic_mass;
    }
  }

  if (j.contains("relaxation")) {
    const json& r = j.at("relaxation");
    auto& rs = s.relax;
    if (r.contains("gamma_pop_MHz")) {
      const json& p = r.at("gamma_pop_MHz");
      detail::read_if(p, "m", rs.pop_m, "gamma_pop_MHz");
      detail::read_if(p, "g", rs.pop_g, "gamma_pop_MHz");
      detail::read_if(p, "n", rs.pop_n, "gamma_pop_MHz");
    }
    if (r.contains("gamma_coh_MHz")) {
      const json& c = r.at("gamma_coh_MHz");
      detail::read_if(c, "ml", rs.coh_ml, "gamma_coh_MHz");
      detail::read_if(c, "gl", rs.coh_gl, "gamma_coh_MHz");
      detail::read_if(c, "mn", rs.coh_mn, "gamma_coh_MHz");
      detail::read_if(c, "gn", rs.coh_gn, "gamma_coh_MHz");
      detail::read_if(c, "nl", rs.coh_nl, "gamma_coh_MHz");
      detail::read_if(c, "gm", rs.coh_gm, "gamma_coh_MHz");
    }
    if (r.contains("gamma_spont_MHz")) {
      const json& c = r.at("gamma_spont_MHz");
      detail::read_if(c, "mn", rs.spont_mn, "gamma_spont_MHz");
      detail::read_if(c, "ml", rs.spont_ml, "gamma_spont_MHz");
      detail::read_if(c, "gn", rs.spont_gn, "gamma_spont_MHz");
      detail::read_if(c, "gl", rs.spont_gl, "gamma_spont_MHz");
    }
  }

  if (j.contains("medium")) {
    const json& m = j.at("medium");
    if (m.contains("temperature_C")) {
      double tc = 0;
      detail::read_if(m, "temperature_C", tc, "medium");
      s.medium.temperature_K = tc + constants::zero_celsius;
    }
    detail::read_if(m, "alpha40_per_L4", s.medium.alpha40, "medium");
    if (s.medium.alpha40 != 1.0)
      throw ConfigError("medium.alpha40_per_L4 is the length unit and must equal 1");
    detail::read_if(m, "p_n", s.medium.p_n, "medium");
  }

  if (j.contains("fields")) {
    const json& f = j.at("fields");
    detail::read_if(f, "Omega1_MHz", s.fields.omega1, "fields");
    detail::read_if(f, "Omega3_MHz", s.fields.omega3, "fields");
    detail::read_if(f, "Omega4_MHz", s.fields.omega4, "fields");
    if (f.contains("Omega2_MHz"))
      throw ConfigError("fields.Omega2_MHz is derived (Omega1 + Omega3 - Omega4); remove it");
    if (f.contains("G10_MHz")) s.fields.g10 = detail::complex_from_json(f.at("G10_MHz"), "G10_MHz");
    if (f.contains("G30_MHz")) s.fields.g30 = detail::complex_from_json(f.at("G30_MHz"), "G30_MHz");
    if (f.contains("E40")) s.fields.e40 = detail::complex_from_json(f.at("E40"), "E40");
    if (f.contains("E20")) s.fields.e20 = detail::complex_from_json(f.at("E20"), "E20");
  }

  s.validate();
  return s;
}

inline Setup load_setup(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open configuration file '" + path + "'");
  json j;
  try {
    in >> j;
  } catch (const json::parse_error& e) {
    throw ConfigError("parse error in '" + path + "': " + e.what());
  }
  return setup_from_json(j);
}

inline std::string dump_setup(const Setup& s) { return to_json(s).dump(2) + "\n"; }

}  // namespace dlambda
