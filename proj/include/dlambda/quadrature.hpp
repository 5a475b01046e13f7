#pragma once

// Velocity quadrature for the Maxwell weight exp(-x^2)/sqrt(pi), x = v/u.

#include <cmath>
#include <numbers>
#include <string>
#include <vector>

#include <Eigen/Eigenvalues>

#include "dlambda/errors.hpp"
#include "dlambda/scheme.hpp"

namespace dlambda {

enum class QuadratureRule { gauss_hermite, trapezoid };

inline const char* to_string(QuadratureRule r) {
  return r == QuadratureRule::gauss_hermite ? "gauss_hermite" : "trapezoid";
}

struct QuadratureSpec {
  QuadratureRule rule = QuadratureRule::trapezoid;
  int nodes = 4001;
  double span = 4.5;           ///< trapezoid half-range in units of u
  double thermal_speed = 0.0;  ///< u = sqrt(2 kB T / M), m/s

  void validate() const {
    if (nodes < 8) throw ConfigError("quadrature needs at least 8 nodes");
    if (!(thermal_speed >= 0.0)) throw ConfigError("thermal speed must be >= 0");
    if (rule == QuadratureRule::trapezoid && !(span > 0.0))
      throw ConfigError("trapezoid span must be positive");
  }

  /// Next refinement: halve the trapezoid spacing, or double the Gauss-Hermite order.
  QuadratureSpec refined() const {
    QuadratureSpec q = *this;
    q.nodes = rule == QuadratureRule::trapezoid ? 2 * nodes - 1 : 2 * nodes;
    return q;
  }
};

inline QuadratureSpec default_quadrature(const LevelScheme& s, const MediumParams& m) {
  QuadratureSpec q;
  q.thermal_speed = m.thermal_speed(s.mass_kg);
  return q;
}

/// Abscissae x_i (units of u) and weights that already include the Maxwell
/// density, so sum_i w_i f(x_i) ~ int exp(-x^2)/sqrt(pi) f(x) dx.
struct QuadratureNodes {
  std::vector<double> x;
  std::vector<double> w;
};

inline QuadratureNodes gauss_hermite_nodes(int n) {
  // Golub-Welsch on the Jacobi matrix of the physicists' Hermite weight
  Eigen::VectorXd diag = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd sub(n - 1);
  for (int k = 1; k < n; ++k) sub(k - 1) = std::sqrt(0.5 * k);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es;
  es.computeFromTridiagonal(diag, sub, Eigen::ComputeEigenvectors);
  if (es.info() != Eigen::Success) throw NumericalError("Gauss-Hermite eigensolve failed");
  QuadratureNodes q;
  q.x.resize(n);
  q.w.resize(n);
  for (int i = 0; i < n; ++i) {
    q.x[i] = es.eigenvalues()(i);
    const double v0 = es.eigenvectors()(0, i);
    q.w[i] = v0 * v0;
  }
  return q;
}

inline QuadratureNodes trapezoid_nodes(int n, double span) {
  QuadratureNodes q;
  q.x.resize(n);
  q.w.resize(n);
  const double h = 2.0 * span / (n - 1);
  for (int i = 0; i < n; ++i) {
    const double x = -span + h * i;
    q.x[i] = x;
    // end weights are ~exp(-span^2); the half factor is kept for the rule's sake
    const double end = (i == 0 || i == n - 1) ? 0.5 : 1.0;
    q.w[i] = end * h * std::exp(-x * x) / std::sqrt(std::numbers::pi);
  }
  return q;
}

inline QuadratureNodes make_nodes(const QuadratureSpec& spec) {
  spec.validate();
  return spec.rule == QuadratureRule::gauss_hermite ? gauss_hermite_nodes(spec.nodes)
                                                    : trapezoid_nodes(spec.nodes, spec.span);
}

}  // namespace dlambda
