// Hyperspherical coordinate chart on R^d, d >= 2.
//
// A point x with ||x|| = w is represented by d-1 angles (psi_1..psi_{d-1}):
//
//   x_1 = w cos(psi_1)
//   x_k = w sin(psi_1) ... sin(psi_{k-1}) cos(psi_k)     1 < k < d
//   x_d = w sin(psi_1) ... sin(psi_{d-1})
//
// Canonical angle ranges: psi_1..psi_{d-2} in [0, pi], psi_{d-1} in [0, 2*pi).
// to_cartesian accepts arbitrary finite angles (the map is total); to_polar
// always returns canonical angles.  Both directions come with vector-Jacobian
// products for gradient chains, O(d^2) without divisions by sines so axis
// neighbourhoods stay stable.
#pragma once

#include <cmath>

#include "dualgeo/core.hpp"

namespace dualgeo {

struct Angular {
  Vec angles;     // d-1 entries
  double radius;  // > 0
};

inline Vec to_cartesian(const Angular& a) {
  const std::size_t d = a.angles.size() + 1;
  if (d < 2) throw DimensionMismatch("to_cartesian: need at least one angle");
  if (!(a.radius > 0.0) || !std::isfinite(a.radius))
    throw DegeneratePoint("to_cartesian: radius must be positive and finite");
  for (double v : a.angles)
    if (!std::isfinite(v)) throw InvalidAngle("to_cartesian: non-finite angle");

  Vec x(d);
  double pre = a.radius;  // radius times product of sines consumed so far
  for (std::size_t k = 0; k + 1 < d; ++k) {
    x[k] = pre * std::cos(a.angles[k]);
    pre *= std::sin(a.angles[k]);
  }
  x[d - 1] = pre;
  return x;
}

inline Angular to_polar(const Vec& p) {
  const std::size_t d = p.size();
  if (d < 2) throw DimensionMismatch("to_polar: need dimension >= 2");
  const double n = norm(p);
  if (n < kAxisTol) throw DegeneratePoint("to_polar: point at origin");

  // Suffix norms s[k] = ||(p_k, ..., p_d)||.
  Vec s(d + 1, 0.0);
  for (std::size_t k = d; k-- > 0;) s[k] = std::hypot(p[k], s[k + 1]);

  Angular a;
  a.radius = s[0];
  a.angles.resize(d - 1);
  for (std::size_t k = 0; k + 2 < d; ++k) {
    if (s[k + 1] < kAxisTol) {
      // All trailing coordinates vanish: the angle is only defined up to the
      // sign of p_k; pick 0 (or pi for the negative axis).
      a.angles[k] = (p[k] < -kAxisTol) ? kPi : 0.0;
    } else {
      a.angles[k] = std::atan2(s[k + 1], p[k]);  // in [0, pi]
    }
  }
  if (std::fabs(p[d - 1]) < kAxisTol && std::fabs(p[d - 2]) < kAxisTol) {
    a.angles[d - 2] = 0.0;
  } else {
    a.angles[d - 2] = wrap_angle(std::atan2(p[d - 1], p[d - 2]));
  }
  return a;
}

// u^T (d x / d angles): cotangent u over the Cartesian output pulled back to
// the d-1 angles, radius held fixed.
inline Vec to_cartesian_angle_vjp(const Angular& a, const Vec& u) {
  const std::size_t d = a.angles.size() + 1;
  if (u.size() != d) throw DimensionMismatch("to_cartesian_angle_vjp: cotangent size");

  // pre[k] = radius * prod_{i<k} sin(psi_i), as in the forward pass.
  Vec pre(d);
  pre[0] = a.radius;
  for (std::size_t k = 1; k < d; ++k) pre[k] = pre[k - 1] * std::sin(a.angles[k - 1]);

  Vec g(d - 1, 0.0);
  for (std::size_t j = 0; j + 1 < d; ++j) {
    // d x_j / d psi_j = -pre[j] sin(psi_j); for k > j the factor sin(psi_j)
    // inside pre[k] differentiates to cos(psi_j), giving a running product.
    double acc = u[j] * (-pre[j] * std::sin(a.angles[j]));
    double run = pre[j] * std::cos(a.angles[j]);
    for (std::size_t k = j + 1; k + 1 < d; ++k) {
      acc += u[k] * run * std::cos(a.angles[k]);
      run *= std::sin(a.angles[k]);
    }
    acc += u[d - 1] * run;
    g[j] = acc;
  }
  return g;
}

// u^T (d angles / d x): cotangent u over the d-1 angles pulled back to the
// Cartesian point.  Terms whose chart direction is singular (vanishing
// suffix norm) contribute zero.
inline Vec to_polar_angle_vjp(const Vec& p, const Vec& u) {
  const std::size_t d = p.size();
  if (u.size() != d - 1) throw DimensionMismatch("to_polar_angle_vjp: cotangent size");

  Vec s2(d + 1, 0.0);  // suffix squared norms
  for (std::size_t k = d; k-- > 0;) s2[k] = p[k] * p[k] + s2[k + 1];

  Vec g(d, 0.0);
  for (std::size_t k = 0; k + 2 < d; ++k) {
    const double tail = std::sqrt(s2[k + 1]);
    if (tail < kAxisTol || s2[k] < kAxisTol * kAxisTol) continue;
    // psi_k = atan2(tail, p_k):
    //   d psi_k / d p_k = -tail / s2[k]
    //   d psi_k / d p_i =  p_k p_i / (s2[k] * tail)   for i > k
    g[k] += u[k] * (-tail / s2[k]);
    const double c = u[k] * p[k] / (s2[k] * tail);
    for (std::size_t i = k + 1; i < d; ++i) g[i] += c * p[i];
  }
  const double r2 = p[d - 2] * p[d - 2] + p[d - 1] * p[d - 1];
  if (r2 >= kAxisTol * kAxisTol) {
    g[d - 2] += u[d - 2] * (-p[d - 1] / r2);
    g[d - 1] += u[d - 2] * (p[d - 2] / r2);
  }
  return g;
}

}  // namespace dualgeo
