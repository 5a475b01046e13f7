#pragma once

// Tabular scans: coefficient spectra, spatial dynamics and switching curves,
// plus the CSV writer used by the command-line tool.

#include <charconv>
#include <cmath>
#include <memory>
#include <ostream>
#include <string>
#include <system_error>
#include <vector>

#include "dlambda/coupledwave.hpp"
#include "dlambda/doppler.hpp"
#include "dlambda/errors.hpp"
#include "dlambda/parallel.hpp"
#include "dlambda/propagate.hpp"

namespace dlambda {

struct Column {
  std::string name;
  std::string unit;
};

/// A scan: named columns with units and one record per sweep point.
struct ScanTable {
  std::string id;
  std::vector<Column> columns;
  std::vector<std::vector<double>> rows;

  std::size_t column(const std::string& name) const {
    for (std::size_t k = 0; k < columns.size(); ++k)
      if (columns[k].name == name) return k;
    throw std::out_of_range("no column " + name);
  }
  std::vector<double> values(const std::string& name) const {
    const std::size_t k = column(name);
    std::vector<double> out;
    out.reserve(rows.size());
    for (const auto& r : rows) out.push_back(r[k]);
    return out;
  }
};

/// Shortest round-trip-safe text for a double, independent of the locale.
inline std::string format_number(double x) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, x, std::chars_format::general, 17);
  if (res.ec != std::errc{}) throw std::runtime_error("number formatting failed");
  return std::string(buf, res.ptr);
}

inline void write_csv(std::ostream& os, const ScanTable& t) {
  for (std::size_t k = 0; k < t.columns.size(); ++k)
    os << (k ? "," : "") << t.columns[k].name << '[' << t.columns[k].unit << ']';
  os << '\n';
  for (const auto& r : t.rows) {
    for (std::size_t k = 0; k < r.size(); ++k) os << (k ? "," : "") << format_number(r[k]);
    os << '\n';
  }
}

/// Linear sweep min..max with `count` points (count == 1 gives min).
inline std::vector<double> linspace(double lo, double hi, int count) {
  if (count < 1) throw ConfigError("sweep needs at least one point");
  std::vector<double> v(count);
  for (int k = 0; k < count; ++k) v[k] = count == 1 ? lo : lo + (hi - lo) * k / (count - 1);
  return v;
}

enum class SpectrumVariable { omega4, omega2 };

struct SpectraOptions {
  QuadratureSpec quad{};
  unsigned threads = 1;
  SpectrumVariable variable = SpectrumVariable::omega4;
  std::optional<cplx> g1;  ///< drive overrides; default: boundary values
  std::optional<cplx> g3;
};

/// alpha2, alpha4, gamma4, gamma2 against Omega4 (or Omega2, with Omega4
/// slaved through the four-photon condition).
inline ScanTable spectra_scan(const Setup& base, const std::vector<double>& sweep,
                              const SpectraOptions& opt = {}) {
  if (sweep.empty()) throw ConfigError("spectra sweep is empty");
  base.validate();
  const QuadratureSpec quad = detail::resolve_quadrature(base, opt.quad);
  const DopplerAverager avg(base.scheme, base.relax, base.medium, quad);
  const cplx g1 = opt.g1.value_or(base.fields.g10);
  const cplx g3 = opt.g3.value_or(base.fields.g30);
  ScanTable t;
  t.id = "spectra";
  t.columns = {{"Omega4", "MHz"},      {"Omega2", "MHz"},      {"alpha4", "1/L4"},
               {"alpha2", "1/L4"},     {"re_gamma4", "1/L4"},  {"im_gamma4", "1/L4"},
               {"re_gamma2", "1/L4"},  {"im_gamma2", "1/L4"},  {"delta_k", "1/L4"}};
  t.rows.resize(sweep.size());
  parallel_for(sweep.size(), opt.threads, [&](std::size_t i) {
    FieldConfig f = base.fields;
    f.omega4 = opt.variable == SpectrumVariable::omega4 ? sweep[i]
                                                        : f.omega1 + f.omega3 - sweep[i];
    const MacroscopicCoefficients c = avg.average(f, g1, g3);
    t.rows[i] = {f.omega4,        f.omega2(),      c.alpha(E4),     c.alpha(E2),
                 c.gamma4.real(), c.gamma4.imag(), c.gamma2.real(), c.gamma2.imag(),
                 c.phase_mismatch()};
  });
  return t;
}

struct DynamicsOptions {
  PropagationOptions propagation{};
  bool use_cache = false;
  CoefficientCache::Options cache{};
};

struct DynamicsResult {
  ScanTable table;
  PropagationTrace trace;
  double cache_validation_error = 0.0;
};

/// Intensities along z from one integration of the configuration as given.
inline DynamicsResult spatial_dynamics(const Setup& s, double length, int steps,
                                       const DynamicsOptions& opt = {}) {
  if (std::abs(s.fields.e40) == 0.0) throw ConfigError("spatial dynamics needs E40 != 0");
  DynamicsResult r;
  std::unique_ptr<CoefficientCache> cache;
  PropagationOptions po = opt.propagation;
  po.quad = detail::resolve_quadrature(s, po.quad);
  if (opt.use_cache && std::abs(s.fields.g10) > 0.0 && std::abs(s.fields.g30) > 0.0) {
    CoefficientCache::Options co = opt.cache;
    co.threads = po.threads;
    cache = std::make_unique<CoefficientCache>(s, po.quad, co);
    r.cache_validation_error = cache->validation_error();
  }
  r.trace = integrate(s, length, steps, cache.get(), po);
  auto ratio = [](cplx a, cplx a0) {
    return std::norm(a0) > 0.0 ? std::norm(a) / std::norm(a0) : 0.0;
  };
  const FieldStateZ& z0 = r.trace.samples.front();
  r.table.id = "dynamics";
  r.table.columns = {{"z", "L4"},        {"I1", "I10"},     {"I3", "I30"},
                     {"I4", "I40"},      {"I2", "I40"},     {"G1_abs", "MHz"},
                     {"G3_abs", "MHz"}};
  for (const auto& st : r.trace.samples)
    r.table.rows.push_back({st.z, ratio(st.g1, z0.g1), ratio(st.g3, z0.g3), ratio(st.e4, z0.e4),
                            ratio(st.e2, z0.e4), std::abs(st.g1), std::abs(st.g3)});
  return r;
}

enum class SwitchControl { omega4, g10 };

struct SwitchingOptions {
  PropagationOptions propagation{};
  SwitchControl control = SwitchControl::omega4;
  bool use_cache = true;  ///< used for the G10 sweep, where detunings are fixed
  CoefficientCache::Options cache{};
};

struct SwitchingResult {
  ScanTable table;
  std::vector<double> transparency_crossings;  ///< control values where I4/I40 passes 1
  std::size_t cache_fallbacks = 0;
  double cache_validation_error = 0.0;
};

/// Largest factor by which a positive curve changes inside any window of
/// width `window` along x.
inline double max_change_within(const std::vector<double>& x, const std::vector<double>& y,
                                double window) {
  double best = 1.0;
  for (std::size_t a = 0; a < x.size(); ++a)
    for (std::size_t b = a + 1; b < x.size() && std::abs(x[b] - x[a]) <= window * (1 + 1e-12);
         ++b) {
      const double hi = std::max(y[a], y[b]), lo = std::min(y[a], y[b]);
      if (lo > 0.0) best = std::max(best, hi / lo);
    }
  return best;
}

/// I4(L)/I40 at fixed length against Omega4 or G10.
inline SwitchingResult switching_curve(const Setup& base, double length,
                                       const std::vector<double>& sweep, int steps,
                                       const SwitchingOptions& opt = {}) {
  if (sweep.empty()) throw ConfigError("switching sweep is empty");
  if (std::abs(base.fields.e40) == 0.0) throw ConfigError("switching curve needs E40 != 0");
  PropagationOptions po = opt.propagation;
  po.quad = detail::resolve_quadrature(base, po.quad);
  po.error_estimate = false;
  const unsigned threads = po.threads;
  SwitchingResult r;
  std::unique_ptr<CoefficientCache> cache;
  const bool by_g10 = opt.control == SwitchControl::g10;
  if (by_g10 && opt.use_cache && std::abs(base.fields.g30) > 0.0) {
    double top = 0.0;
    for (double g : sweep) top = std::max(top, std::abs(g));
    if (top > 0.0) {
      CoefficientCache::Options co = opt.cache;
      co.g1_max = 1.05 * top;
      co.threads = threads;
      cache = std::make_unique<CoefficientCache>(base, po.quad, co);
      r.cache_validation_error = cache->validation_error();
    }
  }
  // scan points run in parallel; each integration is then single threaded
  po.threads = 1;
  std::vector<double> ratio(sweep.size());
  std::vector<std::size_t> fallbacks(sweep.size(), 0);
  parallel_for(sweep.size(), threads, [&](std::size_t i) {
    Setup s = base;
    if (by_g10) {
      const double mag = std::abs(s.fields.g10);
      s.fields.g10 = mag > 0.0 ? s.fields.g10 / mag * sweep[i] : cplx(sweep[i]);
    } else {
      s.fields.omega4 = sweep[i];
    }
    const auto tr = integrate(s, length, steps, cache.get(), po);
    ratio[i] = std::norm(tr.samples.back().e4) / std::norm(s.fields.e40);
    fallbacks[i] = tr.cache_fallbacks;
  });
  r.table.id = "switch";
  r.table.columns = {by_g10 ? Column{"G10", "MHz"} : Column{"Omega4", "MHz"}, {"I4", "I40"}};
  for (std::size_t i = 0; i < sweep.size(); ++i) {
    r.table.rows.push_back({sweep[i], ratio[i]});
    r.cache_fallbacks += fallbacks[i];
    if (i > 0 && (ratio[i - 1] - 1.0) * (ratio[i] - 1.0) < 0.0) {
      // interpolate in log ratio
      const double a = std::log(ratio[i - 1]), b = std::log(ratio[i]);
      r.transparency_crossings.push_back(sweep[i - 1] + (sweep[i] - sweep[i - 1]) * a / (a - b));
    }
  }
  return r;
}

}  // namespace dlambda
