#pragma once

// Steady-state density matrix of one velocity class.
//
// The four-photon condition w4 + w2 = w1 + w3 allows a single rotating frame
// in which all four couplings are time independent:
//
//   H = diag(0, -W1 + W2, -W1, -W4)                       (order l, n, g, m)
//       - (G1 |g><l| + G2 |g><n| + G3 |m><n| + G4 |m><l| + h.c.)
//
// with W_j the velocity-shifted detunings.  The drives G1, G3 are kept to all
// orders; the probes G4, G2 to first order.  Elements are grouped by their
// optical phase: the drive sector {populations, rho_gl, rho_mn} carries the
// zeroth-order solution, the probe sector {rho_ml, rho_nl, rho_mg, rho_ng}
// carries everything at the phase of E4 (equivalently E1 E3 E2*).  The
// conjugate partners follow by Hermiticity.
//
// Relaxation: coherences decay at Gamma_ij.  Upper levels decay at Gamma_m,
// Gamma_g; the listed spontaneous channels feed l and n directly, the rest
// returns through a thermal reservoir split (1 - p_n) : p_n.  Level n relaxes
// toward its Boltzmann share of the lower-level population at rate Gamma_n.

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>

#include <Eigen/Dense>

#include "dlambda/errors.hpp"
#include "dlambda/scheme.hpp"

namespace dlambda {

using DensityMatrix = Eigen::Matrix4cd;

/// Detunings W_j = Omega_j - k_j v seen by one velocity class (MHz units).
struct VelocityDetunings {
  std::array<double, 4> omega{};
};

inline VelocityDetunings detune_for_velocity(const FieldConfig& f, const LevelScheme& s,
                                             double v) {
  const std::array<double, 4> base = {f.omega1, f.omega2(), f.omega3, f.omega4};
  VelocityDetunings d;
  for (std::size_t j = 0; j < 4; ++j)
    d.omega[j] = base[j] - s.doppler_per_velocity(static_cast<Wave>(j)) * v;
  return d;
}

/// Drive-only steady state.  rho_nl and rho_gm are kept for completeness; with
/// the probes off they vanish identically.
struct ZerothOrderState {
  DensityMatrix rho = DensityMatrix::Zero();

  double population(Level lv) const { return rho(index(lv), index(lv)).real(); }
  cplx coherence(Level row, Level col) const { return rho(index(row), index(col)); }
  cplx trace() const { return rho.trace(); }
  double hermiticity_error() const { return (rho - rho.adjoint()).cwiseAbs().maxCoeff(); }
};

/// First-order probe coefficients of one velocity class.
///   rho_ml = a4 G4 + b4 G2*,   rho_gn = a2 G2 + b2 G4*
/// b4 and b2 already contain the drive product G1 G3.
struct ProbeResponse {
  cplx a4{}, a2{}, b4{}, b2{};
};

namespace detail {

using Mat4 = Eigen::Matrix4cd;

struct Element {
  Level row, col;
};

inline constexpr std::array<Element, 8> kDriveSector = {{
    {Level::l, Level::l}, {Level::n, Level::n}, {Level::g, Level::g}, {Level::m, Level::m},
    {Level::g, Level::l}, {Level::l, Level::g}, {Level::m, Level::n}, {Level::n, Level::m},
}};

inline constexpr std::array<Element, 4> kProbeSector = {{
    {Level::m, Level::l}, {Level::n, Level::l}, {Level::m, Level::g}, {Level::n, Level::g},
}};

inline Mat4 hamiltonian(const VelocityDetunings& d, cplx g1, cplx g2, cplx g3, cplx g4) {
  constexpr auto l = index(Level::l), n = index(Level::n), g = index(Level::g),
                 m = index(Level::m);
  Mat4 h = Mat4::Zero();
  h(n, n) = -d.omega[E1] + d.omega[E2];
  h(g, g) = -d.omega[E1];
  h(m, m) = -d.omega[E4];
  auto couple = [&h](std::size_t up, std::size_t lo, cplx rabi) {
    h(up, lo) -= rabi;
    h(lo, up) -= std::conj(rabi);
  };
  couple(g, l, g1);
  couple(g, n, g2);
  couple(m, n, g3);
  couple(m, l, g4);
  return h;
}

inline Mat4 relaxation(const RelaxationSet& r, double p_n, const Mat4& rho) {
  constexpr auto l = index(Level::l), n = index(Level::n), g = index(Level::g),
                 m = index(Level::m);
  Mat4 out = Mat4::Zero();
  const cplx to_reservoir = (r.pop_m - r.spont_ml - r.spont_mn) * rho(m, m) +
                            (r.pop_g - r.spont_gl - r.spont_gn) * rho(g, g);
  const cplx thermal = r.pop_n * (rho(n, n) - p_n * (rho(l, l) + rho(n, n)));
  out(m, m) = -r.pop_m * rho(m, m);
  out(g, g) = -r.pop_g * rho(g, g);
  out(l, l) = r.spont_ml * rho(m, m) + r.spont_gl * rho(g, g) + (1.0 - p_n) * to_reservoir +
              thermal;
  out(n, n) = r.spont_mn * rho(m, m) + r.spont_gn * rho(g, g) + p_n * to_reservoir - thermal;

  auto dephase = [&](std::size_t i, std::size_t j, double rate) {
    out(i, j) -= rate * rho(i, j);
    out(j, i) -= rate * rho(j, i);
  };
  dephase(m, l, r.coh_ml);
  dephase(g, l, r.coh_gl);
  dephase(m, n, r.coh_mn);
  dephase(g, n, r.coh_gn);
  dephase(n, l, r.coh_nl);
  dephase(g, m, r.coh_gm);
  return out;
}

inline Mat4 liouvillian(const Mat4& h, const RelaxationSet& r, double p_n, const Mat4& rho) {
  const cplx i{0.0, 1.0};
  return -i * (h * rho - rho * h) + relaxation(r, p_n, rho);
}

/// Restriction of the Liouvillian to a set of density-matrix elements.
template <std::size_t N>
Eigen::Matrix<cplx, int(N), int(N)> sector_matrix(const Mat4& h, const RelaxationSet& r,
                                                  double p_n,
                                                  const std::array<Element, N>& sector) {
  Eigen::Matrix<cplx, int(N), int(N)> a;
  for (std::size_t t = 0; t < N; ++t) {
    Mat4 basis = Mat4::Zero();
    basis(index(sector[t].row), index(sector[t].col)) = 1.0;
    const Mat4 col = liouvillian(h, r, p_n, basis);
    for (std::size_t s = 0; s < N; ++s)
      a(Eigen::Index(s), Eigen::Index(t)) = col(index(sector[s].row), index(sector[s].col));
  }
  return a;
}

/// Pivots smaller than this fraction of the largest matrix entry flag a
/// rank-deficient system.
inline constexpr double kSingularPivot = 1e-13;

/// Plain complex product (no inf/nan recovery).
inline cplx mul(cplx a, cplx b) {
  return {a.real() * b.real() - a.imag() * b.imag(), a.real() * b.imag() + a.imag() * b.real()};
}

/// Gaussian elimination with partial pivoting on |a|^2, in place; b is
/// overwritten by the solution.  Returns false for a (numerically) singular a.
template <int N, int K>
bool solve_in_place(Eigen::Matrix<cplx, N, N>& a, Eigen::Matrix<cplx, N, K>& b) {
  double scale = 0.0;
  for (int c = 0; c < N; ++c)
    for (int r = 0; r < N; ++r) scale = std::max(scale, std::norm(a(r, c)));
  const double tiny = kSingularPivot * kSingularPivot * scale;
  for (int k = 0; k < N; ++k) {
    int piv = k;
    double best = std::norm(a(k, k));
    for (int r = k + 1; r < N; ++r)
      if (const double q = std::norm(a(r, k)); q > best) {
        best = q;
        piv = r;
      }
    if (!(best > tiny)) return false;
    if (piv != k) {
      a.row(k).swap(a.row(piv));
      b.row(k).swap(b.row(piv));
    }
    const cplx inv = std::conj(a(k, k)) / best;
    for (int r = k + 1; r < N; ++r) {
      const cplx f = mul(a(r, k), inv);
      if (f == cplx{}) continue;
      for (int c = k + 1; c < N; ++c) a(r, c) -= mul(f, a(k, c));
      for (int c = 0; c < K; ++c) b(r, c) -= mul(f, b(k, c));
    }
  }
  for (int k = N - 1; k >= 0; --k) {
    const cplx inv = std::conj(a(k, k)) / std::norm(a(k, k));
    for (int c = 0; c < K; ++c) {
      cplx acc = b(k, c);
      for (int j = k + 1; j < N; ++j) acc -= mul(a(k, j), b(j, c));
      b(k, c) = mul(acc, inv);
    }
  }
  return true;
}

using DriveMatrix = Eigen::Matrix<cplx, 8, 8>;
using ProbeMatrix = Eigen::Matrix<cplx, 4, 4>;

/// Steady state of the drive sector with the trace condition in row 0.
inline ZerothOrderState solve_drive_sector(DriveMatrix a) {
  for (int c = 0; c < 8; ++c) a(0, c) = c < 4 ? 1.0 : 0.0;
  Eigen::Matrix<cplx, 8, 1> x = Eigen::Matrix<cplx, 8, 1>::Zero();
  x(0) = 1.0;
  if (!solve_in_place(a, x))
    throw SingularSystemError("drive-sector steady state is singular (check relaxation rates)");
  ZerothOrderState st;
  for (std::size_t t = 0; t < 8; ++t)
    st.rho(index(kDriveSector[t].row), index(kDriveSector[t].col)) = x(Eigen::Index(t));
  // populations are real by construction; drop round-off imaginary parts
  for (int k = 0; k < 4; ++k) st.rho(k, k) = st.rho(k, k).real();
  return st;
}

/// Source i[V, rho0] restricted to the probe sector for a unit coupling
/// V = -(|up><lo| + h.c.).
inline Eigen::Matrix<cplx, 4, 1> probe_source(const Mat4& rho0, Level up, Level lo) {
  const std::size_t u = index(up), w = index(lo);
  const cplx i{0.0, 1.0};
  Eigen::Matrix<cplx, 4, 1> out;
  for (std::size_t s = 0; s < 4; ++s) {
    const std::size_t r = index(kProbeSector[s].row), c = index(kProbeSector[s].col);
    cplx vr{}, rv{};  // (V rho)_rc and (rho V)_rc
    if (r == u) vr -= rho0(w, c);
    if (r == w) vr -= rho0(u, c);
    if (c == w) rv -= rho0(r, u);
    if (c == u) rv -= rho0(r, w);
    out(Eigen::Index(s)) = i * (vr - rv);
  }
  return out;
}

inline ProbeResponse solve_probe_sector(ProbeMatrix a, const Mat4& rho0) {
  Eigen::Matrix<cplx, 4, 2> x;
  x.col(0) = probe_source(rho0, Level::m, Level::l);  // unit G4
  x.col(1) = probe_source(rho0, Level::g, Level::n);  // unit G2 (sources via G2*)
  if (!solve_in_place(a, x)) throw SingularSystemError("probe-sector linear response is singular");
  // sector order: ml, nl, mg, ng
  ProbeResponse p;
  p.a4 = x(0, 0);
  p.b4 = x(0, 1);
  p.a2 = std::conj(x(3, 1));
  p.b2 = std::conj(x(3, 0));
  return p;
}

/// Sector matrices of one velocity class as affine functions of velocity:
/// A(v) = A0 + v * dA.  Only the diagonal detuning terms depend on v.
class VelocityClassSolver {
 public:
  VelocityClassSolver(const LevelScheme& s, const RelaxationSet& r, const MediumParams& med,
                      const FieldConfig& f, cplx g1, cplx g3) {
    const VelocityDetunings d0 = detune_for_velocity(f, s, 0.0);
    const VelocityDetunings d1 = detune_for_velocity(f, s, 1.0);
    init(r, med.p_n, d0, d1, g1, g3);
  }

  VelocityClassSolver(const RelaxationSet& r, double p_n, const VelocityDetunings& d,
                      cplx g1, cplx g3) {
    init(r, p_n, d, d, g1, g3);
  }

  ZerothOrderState zeroth(double v) const {
    DriveMatrix a = drive0_;
    a.diagonal() += v * drive_slope_;
    return solve_drive_sector(a);
  }

  ProbeResponse probe(double v, const ZerothOrderState& st) const {
    ProbeMatrix a = probe0_;
    a.diagonal() += v * probe_slope_;
    return solve_probe_sector(a, st.rho);
  }

 private:
  void init(const RelaxationSet& r, double p_n, const VelocityDetunings& d0,
            const VelocityDetunings& d1, cplx g1, cplx g3) {
    const Mat4 h0 = hamiltonian(d0, g1, 0.0, g3, 0.0);
    const Mat4 h1 = hamiltonian(d1, g1, 0.0, g3, 0.0);
    drive0_ = sector_matrix(h0, r, p_n, kDriveSector);
    probe0_ = sector_matrix(h0, r, p_n, kProbeSector);
    drive_slope_ = (sector_matrix(h1, r, p_n, kDriveSector) - drive0_).diagonal();
    probe_slope_ = (sector_matrix(h1, r, p_n, kProbeSector) - probe0_).diagonal();
  }

  DriveMatrix drive0_;
  ProbeMatrix probe0_;
  Eigen::Matrix<cplx, 8, 1> drive_slope_;
  Eigen::Matrix<cplx, 4, 1> probe_slope_;
};

}  // namespace detail

/// Drive-only steady state for one velocity class.  Throws SingularSystemError
/// when the rates do not admit a unique steady state.
inline ZerothOrderState solve_zeroth_order(const LevelScheme& /*scheme*/,
                                           const RelaxationSet& relax,
                                           const MediumParams& medium,
                                           const VelocityDetunings& det, cplx g1, cplx g3) {
  return detail::VelocityClassSolver(relax, medium.p_n, det, g1, g3).zeroth(0.0);
}

/// First-order probe response around a drive-only steady state.
inline ProbeResponse solve_probe_response(const ZerothOrderState& state,
                                          const LevelScheme& /*scheme*/,
                                          const RelaxationSet& relax,
                                          const MediumParams& medium,
                                          const VelocityDetunings& det, cplx g1, cplx g3) {
  return detail::VelocityClassSolver(relax, medium.p_n, det, g1, g3).probe(0.0, state);
}

}  // namespace dlambda
