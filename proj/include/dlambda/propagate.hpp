#pragma once

// z-integration of the four coupled waves with coefficients that follow the
// local drive amplitudes.  All amplitudes are on the Rabi scale (MHz units);
// z is in L4.

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <complex>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "dlambda/doppler.hpp"
#include "dlambda/errors.hpp"
#include "dlambda/parallel.hpp"
#include "dlambda/quadrature.hpp"
#include "dlambda/scheme.hpp"

namespace dlambda {

struct FieldStateZ {
  double z = 0.0;
  cplx g1{}, g3{};  ///< drive Rabi amplitudes
  cplx e4{}, e2{};  ///< probes

  bool finite() const {
    for (cplx c : {g1, g3, e4, e2})
      if (!std::isfinite(c.real()) || !std::isfinite(c.imag())) return false;
    return true;
  }
};

struct PropagationTrace {
  std::vector<FieldStateZ> samples;
  std::vector<MacroscopicCoefficients> coefficients;  ///< at each sample
  int steps = 0;
  std::optional<double> error_estimate;  ///< max relative change of |E4| under step halving
  std::size_t cache_fallbacks = 0;
};

/// Derivative of the field state for coefficients evaluated at that state.
/// Only gamma4, gamma2 carry the drive product; the back-action on the drives
/// uses sigma_tilde.
inline FieldStateZ rhs(const FieldStateZ& s, const MacroscopicCoefficients& c) {
  const cplx i{0.0, 1.0};
  FieldStateZ d;
  d.z = 1.0;
  d.g1 = i * c.sigma[E1] * s.g1 + i * c.sigma_tilde1 * s.e4 * s.e2 * std::conj(s.g3);
  d.g3 = i * c.sigma[E3] * s.g3 + i * c.sigma_tilde3 * s.e4 * s.e2 * std::conj(s.g1);
  d.e4 = i * c.sigma[E4] * s.e4 + i * c.gamma4 * std::conj(s.e2);
  d.e2 = i * c.sigma[E2] * s.e2 + i * c.gamma2 * std::conj(s.e4);
  return d;
}

/// Bicubic (Catmull-Rom) table of the drive-dependent coefficients over
/// (|G1|, |G3|) for fixed detunings.
class CoefficientCache {
 public:
  struct Options {
    int n1 = 48, n3 = 48;
    double g1_max = 0.0, g3_max = 0.0;  ///< 0: 1.05 x boundary amplitude
    int validation_probes = 50;
    std::uint64_t seed = 20240917;
    unsigned threads = 1;
  };

  CoefficientCache(const Setup& s, const QuadratureSpec& quad, Options opt)
      : fields_(s.fields), averager_(std::make_shared<DopplerAverager>(s.scheme, s.relax, s.medium, quad)) {
    if (opt.n1 < 4 || opt.n3 < 4) throw ConfigError("cache grid needs at least 4x4 nodes");
    g1_max_ = opt.g1_max > 0.0 ? opt.g1_max : 1.05 * std::abs(s.fields.g10);
    g3_max_ = opt.g3_max > 0.0 ? opt.g3_max : 1.05 * std::abs(s.fields.g30);
    if (!(g1_max_ > 0.0) || !(g3_max_ > 0.0))
      throw ConfigError("cache bounds must be positive (drives switched off?)");
    n1_ = opt.n1;
    n3_ = opt.n3;
    h1_ = g1_max_ / (n1_ - 1);
    h3_ = g3_max_ / (n3_ - 1);
    table_.resize(std::size_t(n1_) * n3_);
    parallel_for(table_.size(), opt.threads, [&](std::size_t k) {
      const int a = int(k) / n3_, b = int(k) % n3_;
      table_[k] = pack(averager_->average(fields_, h1_ * a, h3_ * b));
    });
    validate(opt);
  }

  double g1_max() const { return g1_max_; }
  double g3_max() const { return g3_max_; }
  int n1() const { return n1_; }
  int n3() const { return n3_; }
  const FieldConfig& fields() const { return fields_; }
  const DopplerAverager& averager() const { return *averager_; }
  /// Largest interpolation error seen on the validation probes, relative to
  /// each quantity's largest magnitude over the grid.
  double validation_error() const { return validation_error_; }

  bool contains(cplx g1, cplx g3) const {
    return std::abs(g1) <= g1_max_ && std::abs(g3) <= g3_max_;
  }

  /// Interpolated coefficients; the caller checks contains() first.
  MacroscopicCoefficients at(cplx g1, cplx g3) const {
    const Packed p = interpolate(std::abs(g1), std::abs(g3));
    return unpack(p, g1, g3);
  }

  MacroscopicCoefficients direct(cplx g1, cplx g3) const {
    return averager_->average(fields_, g1, g3);
  }

 private:
  static constexpr int kQuantities = 6;  // sigma1..4, cross4, cross2
  using Packed = std::array<cplx, kQuantities>;

  static Packed pack(const MacroscopicCoefficients& c) {
    return {c.sigma[0], c.sigma[1], c.sigma[2], c.sigma[3], c.cross4, c.cross2};
  }

  MacroscopicCoefficients unpack(const Packed& p, cplx g1, cplx g3) const {
    MacroscopicCoefficients c;
    for (int j = 0; j < 4; ++j) c.sigma[j] = p[j];
    c.cross4 = p[4];
    c.cross2 = p[5];
    c.gamma4 = c.cross4 * g1 * g3;
    c.gamma2 = c.cross2 * g1 * g3;
    c.sigma_tilde1 = averager_->scale(E1) / averager_->scale(E4) * c.cross4;
    c.sigma_tilde3 = averager_->scale(E3) / averager_->scale(E2) * c.cross2;
    return c;
  }

  const Packed& node(int a, int b) const { return table_[std::size_t(a) * n3_ + b]; }

  // Value at integer offsets, extended past the edges: evenly across zero
  // (the coefficients depend on |G|^2), by quadratic extrapolation at the top.
  cplx value(int q, int a, int b) const {
    auto along3 = [&](int aa) -> cplx {
      if (b < 0) return node(aa, -b)[q];
      if (b >= n3_) {
        const int e = n3_ - 1;
        return 3.0 * node(aa, e)[q] - 3.0 * node(aa, e - 1)[q] + node(aa, e - 2)[q];
      }
      return node(aa, b)[q];
    };
    if (a < 0) return along3(-a);
    if (a >= n1_) {
      const int e = n1_ - 1;
      return 3.0 * along3(e) - 3.0 * along3(e - 1) + along3(e - 2);
    }
    return along3(a);
  }

  static std::array<double, 4> catmull_rom(double t) {
    const double t2 = t * t, t3 = t2 * t;
    return {0.5 * (-t3 + 2.0 * t2 - t), 0.5 * (3.0 * t3 - 5.0 * t2 + 2.0),
            0.5 * (-3.0 * t3 + 4.0 * t2 + t), 0.5 * (t3 - t2)};
  }

  Packed interpolate(double x1, double x3) const {
    const double u = x1 / h1_, w = x3 / h3_;
    const int a = std::min(int(std::floor(u)), n1_ - 2);
    const int b = std::min(int(std::floor(w)), n3_ - 2);
    const auto wa = catmull_rom(u - a), wb = catmull_rom(w - b);
    Packed out{};
    for (int q = 0; q < kQuantities; ++q) {
      cplx acc{};
      for (int i = 0; i < 4; ++i) {
        cplx row{};
        for (int j = 0; j < 4; ++j) row += wb[j] * value(q, a - 1 + i, b - 1 + j);
        acc += wa[i] * row;
      }
      out[q] = acc;
    }
    return out;
  }

  void validate(const Options& opt) {
    std::array<double, kQuantities> scale{};
    for (const auto& p : table_)
      for (int q = 0; q < kQuantities; ++q) scale[q] = std::max(scale[q], std::abs(p[q]));
    std::mt19937_64 rng(opt.seed);
    std::uniform_real_distribution<double> d1(0.0, g1_max_), d3(0.0, g3_max_);
    std::vector<std::pair<double, double>> probes(opt.validation_probes);
    for (auto& pr : probes) pr = {d1(rng), d3(rng)};
    std::vector<double> err(probes.size(), 0.0);
    parallel_for(probes.size(), opt.threads, [&](std::size_t k) {
      const auto [x1, x3] = probes[k];
      const Packed ref = pack(averager_->average(fields_, x1, x3));
      const Packed got = interpolate(x1, x3);
      for (int q = 0; q < kQuantities; ++q)
        if (scale[q] > 0.0) err[k] = std::max(err[k], std::abs(got[q] - ref[q]) / scale[q]);
    });
    validation_error_ = err.empty() ? 0.0 : *std::max_element(err.begin(), err.end());
  }

  FieldConfig fields_;
  std::shared_ptr<const DopplerAverager> averager_;
  int n1_ = 0, n3_ = 0;
  double g1_max_ = 0.0, g3_max_ = 0.0, h1_ = 0.0, h3_ = 0.0;
  std::vector<Packed> table_;
  double validation_error_ = 0.0;
};

struct PropagationOptions {
  QuadratureSpec quad{};  ///< thermal_speed <= 0 selects the medium default
  unsigned threads = 1;
  bool error_estimate = true;
  /// Testing hook: coefficients pinned to their z = 0 values, drive magnitudes
  /// held fixed (only the dispersive phase evolves), no back-action.
  bool frozen = false;
};

inline constexpr int kMinSamples = 256;

namespace detail {

inline QuadratureSpec resolve_quadrature(const Setup& s, QuadratureSpec q) {
  if (!(q.thermal_speed > 0.0)) q.thermal_speed = s.medium.thermal_speed(s.scheme.mass_kg);
  return q;
}

/// Coefficient lookup used by the stepper: cache when in bounds, direct
/// evaluation otherwise.
class CoefficientSource {
 public:
  CoefficientSource(const Setup& s, const CoefficientCache* cache, const PropagationOptions& o)
      : setup_(s), cache_(cache), opt_(o) {
    if (cache_) {
      const auto& f = cache_->fields();
      if (f.omega1 != s.fields.omega1 || f.omega3 != s.fields.omega3 ||
          f.omega4 != s.fields.omega4)
        throw ConfigError("coefficient cache was built for different detunings");
    }
  }

  MacroscopicCoefficients operator()(cplx g1, cplx g3) {
    if (cache_ && cache_->contains(g1, g3)) return cache_->at(g1, g3);
    if (cache_) ++fallbacks_;
    // drives that stay at zero ask for the same point at every stage
    if (last_ && last_g1_ == g1 && last_g3_ == g3) return *last_;
    if (!averager_)
      averager_ = std::make_unique<DopplerAverager>(setup_.scheme, setup_.relax, setup_.medium,
                                                    resolve_quadrature(setup_, opt_.quad));
    last_ = averager_->average(setup_.fields, g1, g3, opt_.threads);
    last_g1_ = g1;
    last_g3_ = g3;
    return *last_;
  }

  std::size_t fallbacks() const { return fallbacks_; }

 private:
  const Setup& setup_;
  const CoefficientCache* cache_;
  PropagationOptions opt_;
  std::unique_ptr<DopplerAverager> averager_;
  std::size_t fallbacks_ = 0;
  std::optional<MacroscopicCoefficients> last_;
  cplx last_g1_{}, last_g3_{};
};

inline FieldStateZ axpy(const FieldStateZ& s, double h, const FieldStateZ& d) {
  return {s.z + h * d.z, s.g1 + h * d.g1, s.g3 + h * d.g3, s.e4 + h * d.e4, s.e2 + h * d.e2};
}

/// RK4 through ascending z points with a step close to h; returns the state
/// at every point.
template <class Eval>
std::vector<FieldStateZ> rk4_through(FieldStateZ s, const std::vector<double>& points, double h,
                                     Eval&& deriv) {
  std::vector<FieldStateZ> out;
  out.reserve(points.size());
  for (double target : points) {
    const double span = target - s.z;
    if (span > 0.0) {
      const int n = std::max(1, int(std::ceil(span / h - 1e-9)));
      const double dz = span / n;
      const double z0 = s.z;
      for (int k = 0; k < n; ++k) {
        FieldStateZ k1, k2, k3, k4;
        try {
          k1 = deriv(s);
          k2 = deriv(axpy(s, dz / 2, k1));
          k3 = deriv(axpy(s, dz / 2, k2));
          k4 = deriv(axpy(s, dz, k3));
        } catch (const BlowUpError&) {
          throw;
        } catch (const SingularSystemError& e) {
          throw SingularSystemError(std::string(e.what()) + " at z = " + std::to_string(s.z));
        } catch (const NumericalError& e) {
          throw NumericalError(std::string(e.what()) + " at z = " + std::to_string(s.z));
        }
        FieldStateZ next;
        next.z = z0 + dz * (k + 1);
        next.g1 = s.g1 + dz / 6 * (k1.g1 + 2.0 * k2.g1 + 2.0 * k3.g1 + k4.g1);
        next.g3 = s.g3 + dz / 6 * (k1.g3 + 2.0 * k2.g3 + 2.0 * k3.g3 + k4.g3);
        next.e4 = s.e4 + dz / 6 * (k1.e4 + 2.0 * k2.e4 + 2.0 * k3.e4 + k4.e4);
        next.e2 = s.e2 + dz / 6 * (k1.e2 + 2.0 * k2.e2 + 2.0 * k3.e2 + k4.e2);
        if (!next.finite()) throw BlowUpError("non-finite field amplitude", next.z);
        s = next;
      }
      s.z = target;
    }
    out.push_back(s);
  }
  return out;
}

/// Integrate to each of `points` and optionally record coefficients there.
inline std::vector<FieldStateZ> integrate_points(const Setup& s, const std::vector<double>& points,
                                                 double h, const CoefficientCache* cache,
                                                 const PropagationOptions& opt,
                                                 std::vector<MacroscopicCoefficients>* coeffs,
                                                 std::size_t* fallbacks) {
  CoefficientSource source(s, cache, opt);
  FieldStateZ start{0.0, s.fields.g10, s.fields.g30, s.fields.e40, s.fields.e20};
  std::vector<FieldStateZ> out;
  if (opt.frozen) {
    const MacroscopicCoefficients c0 = source(start.g1, start.g3);
    const cplx i{0.0, 1.0};
    auto deriv = [&](const FieldStateZ& st) {
      MacroscopicCoefficients c = c0;
      c.gamma4 = c0.cross4 * st.g1 * st.g3;
      c.gamma2 = c0.cross2 * st.g1 * st.g3;
      FieldStateZ d;
      d.z = 1.0;
      d.g1 = i * c.delta_k(E1) * st.g1;
      d.g3 = i * c.delta_k(E3) * st.g3;
      d.e4 = i * c.sigma[E4] * st.e4 + i * c.gamma4 * std::conj(st.e2);
      d.e2 = i * c.sigma[E2] * st.e2 + i * c.gamma2 * std::conj(st.e4);
      return d;
    };
    out = rk4_through(start, points, h, deriv);
    if (coeffs)
      for (const auto& st : out) {
        MacroscopicCoefficients c = c0;
        c.gamma4 = c0.cross4 * st.g1 * st.g3;
        c.gamma2 = c0.cross2 * st.g1 * st.g3;
        coeffs->push_back(c);
      }
  } else {
    auto deriv = [&](const FieldStateZ& st) { return rhs(st, source(st.g1, st.g3)); };
    out = rk4_through(start, points, h, deriv);
    if (coeffs)
      for (const auto& st : out) coeffs->push_back(source(st.g1, st.g3));
  }
  if (fallbacks) *fallbacks += source.fallbacks();
  return out;
}

}  // namespace detail

/// Fixed-step RK4 from z = 0 to `length`.  The effective step count is
/// max(steps, 256); every step is recorded.  With `opt.error_estimate` the run
/// is repeated with twice the steps.
inline PropagationTrace integrate(const Setup& s, double length, int steps,
                                  const CoefficientCache* cache = nullptr,
                                  const PropagationOptions& opt = {}) {
  s.validate();
  if (!(length > 0.0)) throw ConfigError("propagation length must be positive");
  if (steps < 100) throw ConfigError("at least 100 integration steps are required");
  const int n = std::max(steps, kMinSamples);
  PropagationTrace tr;
  tr.steps = n;
  std::vector<double> points(n + 1);
  for (int k = 0; k <= n; ++k) points[k] = length * k / n;
  tr.samples = detail::integrate_points(s, points, length / n, cache, opt, &tr.coefficients,
                                        &tr.cache_fallbacks);
  if (opt.error_estimate) {
    const auto fine = detail::integrate_points(s, points, length / (2 * n), cache, opt, nullptr,
                                               &tr.cache_fallbacks);
    double worst = 0.0;
    for (std::size_t k = 0; k < points.size(); ++k) {
      const double ref = std::abs(fine[k].e4);
      if (ref > 0.0) worst = std::max(worst, std::abs(std::abs(tr.samples[k].e4) - ref) / ref);
    }
    tr.error_estimate = worst;
  }
  return tr;
}

struct GainMap {
  std::vector<double> omega4;
  std::vector<double> lengths;
  std::vector<double> ratio;  ///< I4(L)/I40, row-major [omega4][length]
  std::vector<char> valid;    ///< per omega4 row
  std::vector<std::string> errors;
  std::size_t cache_fallbacks = 0;
  double cache_validation_error = 0.0;

  double at(std::size_t i, std::size_t j) const { return ratio[i * lengths.size() + j]; }
};

struct GainMapOptions {
  QuadratureSpec quad{};
  unsigned threads = 1;
  bool use_cache = true;
  CoefficientCache::Options cache{};
};

/// I4(L)/I40 over (Omega4, L); one integration per Omega4 to max(L) with the
/// state read off at every L.  A failing row is marked invalid and the scan
/// goes on.
inline GainMap gain_map(const Setup& base, const std::vector<double>& omega4,
                        const std::vector<double>& lengths, int steps,
                        const GainMapOptions& opt = {}) {
  if (omega4.empty() || lengths.empty()) throw ConfigError("gain map grids must be non-empty");
  if (!std::is_sorted(omega4.begin(), omega4.end()) ||
      !std::is_sorted(lengths.begin(), lengths.end()) || lengths.front() < 0.0)
    throw ConfigError("gain map grids must be ascending with L >= 0");
  if (std::abs(base.fields.e40) == 0.0) throw ConfigError("gain map needs E40 != 0");
  if (steps < 100) throw ConfigError("at least 100 integration steps are required");
  base.validate();
  GainMap map;
  map.omega4 = omega4;
  map.lengths = lengths;
  map.ratio.assign(omega4.size() * lengths.size(), std::nan(""));
  map.valid.assign(omega4.size(), 0);
  map.errors.assign(omega4.size(), "");
  std::vector<std::size_t> fallbacks(omega4.size(), 0);
  std::vector<double> cache_err(omega4.size(), 0.0);
  const double lmax = lengths.back();
  const int n = std::max(steps, kMinSamples);
  const bool drives_on = std::abs(base.fields.g10) > 0.0 && std::abs(base.fields.g30) > 0.0;

  parallel_for(omega4.size(), opt.threads, [&](std::size_t i) {
    Setup s = base;
    s.fields.omega4 = omega4[i];
    try {
      PropagationOptions po;
      po.quad = detail::resolve_quadrature(s, opt.quad);
      po.error_estimate = false;
      std::unique_ptr<CoefficientCache> cache;
      if (opt.use_cache && drives_on) {
        CoefficientCache::Options co = opt.cache;
        co.threads = 1;
        cache = std::make_unique<CoefficientCache>(s, po.quad, co);
        cache_err[i] = cache->validation_error();
      }
      std::vector<double> pts;
      for (double l : lengths) pts.push_back(l);
      const auto states = lmax > 0.0 ? detail::integrate_points(s, pts, lmax / n, cache.get(), po,
                                                                nullptr, &fallbacks[i])
                                     : std::vector<FieldStateZ>(pts.size(),
                                                                FieldStateZ{0.0, s.fields.g10,
                                                                            s.fields.g30,
                                                                            s.fields.e40,
                                                                            s.fields.e20});
      const double i40 = std::norm(s.fields.e40);
      for (std::size_t j = 0; j < lengths.size(); ++j)
        map.ratio[i * lengths.size() + j] = std::norm(states[j].e4) / i40;
      map.valid[i] = 1;
    } catch (const BlowUpError& e) {
      std::ostringstream os;
      os << "Omega4 = " << omega4[i] << ": " << e.what() << " at z = " << e.z();
      map.errors[i] = os.str();
    } catch (const NumericalError& e) {
      map.errors[i] = "Omega4 = " + std::to_string(omega4[i]) + ": " + e.what();
    }
  });
  for (std::size_t i = 0; i < omega4.size(); ++i) {
    map.cache_fallbacks += fallbacks[i];
    map.cache_validation_error = std::max(map.cache_validation_error, cache_err[i]);
  }
  return map;
}

}  // namespace dlambda
