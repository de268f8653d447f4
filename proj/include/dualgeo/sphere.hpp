// Spherical shell geometry: geodesic distance, rotation of points by angle
// offsets in the polar chart, shell projection, and Riemannian SGD steps.
#pragma once

#include <algorithm>
#include <cmath>

#include "dualgeo/coords.hpp"
#include "dualgeo/core.hpp"

namespace dualgeo::sphere {

// Angle between x and y after normalizing both to unit length, in [0, pi].
// The shell radius therefore never changes the induced ranking.
inline double distance(const Vec& x, const Vec& y) {
  check_same_dim(x, y, "sphere::distance");
  const double nx = norm(x), ny = norm(y);
  if (nx < kAxisTol || ny < kAxisTol)
    throw DegeneratePoint("sphere::distance: zero-norm argument");
  const double c = std::clamp(dot(x, y) / (nx * ny), -1.0, 1.0);
  return std::acos(c);
}

// Accumulates weight * d distance / d {x, y} into gx, gy.  The arccos input
// is clamped away from +-1 so the derivative stays finite near (anti)parallel
// pairs.
inline void distance_grad(const Vec& x, const Vec& y, double weight, Vec& gx,
                          Vec& gy) {
  check_same_dim(x, y, "sphere::distance_grad");
  const double nx = norm(x), ny = norm(y);
  if (nx < kAxisTol || ny < kAxisTol)
    throw DegeneratePoint("sphere::distance_grad: zero-norm argument");
  double c = dot(x, y) / (nx * ny);
  c = std::clamp(c, -1.0 + kAcosClamp, 1.0 - kAcosClamp);
  const double denom = std::sqrt(1.0 - c * c);
  // d acos(c)/dc = -1/sqrt(1-c^2); c = <x,y>/(|x||y|).
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dcdx = y[i] / (nx * ny) - c * x[i] / (nx * nx);
    const double dcdy = x[i] / (nx * ny) - c * y[i] / (ny * ny);
    gx[i] += weight * (-dcdx / denom);
    gy[i] += weight * (-dcdy / denom);
  }
}

// Rescales z onto the shell of radius w.  A point already exactly on the
// shell is returned unchanged.
inline Vec project(const Vec& z, double w) {
  const double n = norm(z);
  if (n < kAxisTol) throw DegeneratePoint("sphere::project: zero vector");
  if (n == w) return z;
  return scaled(z, w / n);
}

// Rotation in the polar chart: convert to angles, add the offsets mod 2*pi,
// convert back at the same radius.  Norm preservation is exact by
// construction regardless of the offsets.
inline Vec rotate(const Vec& h, const Vec& angles) {
  if (angles.size() + 1 != h.size())
    throw DimensionMismatch("sphere::rotate: need d-1 angles");
  Angular a = to_polar(h);
  for (std::size_t i = 0; i < angles.size(); ++i)
    a.angles[i] = wrap_angle(a.angles[i] + angles[i]);
  return to_cartesian(a);
}

// Shares the polar conversion of h across many angle vectors; each element
// matches rotate(h, rs[k]) exactly.
inline std::vector<Vec> rotate_batch(const Vec& h, const std::vector<Vec>& rs) {
  const Angular base = to_polar(h);
  std::vector<Vec> out;
  out.reserve(rs.size());
  for (const Vec& r : rs) {
    if (r.size() + 1 != h.size())
      throw DimensionMismatch("sphere::rotate_batch: need d-1 angles");
    Angular a = base;
    for (std::size_t i = 0; i < r.size(); ++i)
      a.angles[i] = wrap_angle(a.angles[i] + r[i]);
    out.push_back(to_cartesian(a));
  }
  return out;
}

// Forward pass of rotate with enough retained state to run both pullbacks.
struct RotateTrace {
  Vec input;       // h
  Angular summed;  // rotated angles at radius ||h||
  Vec output;
};

inline RotateTrace rotate_traced(const Vec& h, const Vec& angles) {
  if (angles.size() + 1 != h.size())
    throw DimensionMismatch("sphere::rotate_traced: need d-1 angles");
  RotateTrace t;
  t.input = h;
  t.summed = to_polar(h);
  for (std::size_t i = 0; i < angles.size(); ++i)
    t.summed.angles[i] = wrap_angle(t.summed.angles[i] + angles[i]);
  t.output = to_cartesian(t.summed);
  return t;
}

// Pullback of a cotangent on rotate's output to the angle offsets.
inline Vec rotate_pullback_angles(const RotateTrace& t, const Vec& u) {
  return to_cartesian_angle_vjp(t.summed, u);
}

// Pullback of a cotangent on rotate's output to the input point.  The output
// depends on h through the chart angles and through the radius ||h||.
inline Vec rotate_pullback_point(const RotateTrace& t, const Vec& u) {
  Vec g = to_polar_angle_vjp(t.input, to_cartesian_angle_vjp(t.summed, u));
  const double w = t.summed.radius;
  // out = radius * direction(angles), so d out / d radius = out / radius and
  // d radius / d h = h / radius.
  axpy(dot(u, t.output) / (w * w), t.input, g);
  return g;
}

// Riemannian direction (1 + <h, g>/||g||) (I - h h^T) g.  Zero gradient maps
// to the zero direction.
inline Vec riemannian_direction(const Vec& h, const Vec& g) {
  check_same_dim(h, g, "sphere::riemannian_direction");
  const double gn = norm(g);
  if (gn < 1e-15) return Vec(h.size(), 0.0);
  const double hg = dot(h, g);
  Vec dir = g;
  axpy(-hg, h, dir);                    // (I - h h^T) g
  return scaled(dir, 1.0 + hg / gn);
}

// One descent step for a shell point: move against the Riemannian direction,
// then re-project onto the shell of radius w.
inline Vec point_step(const Vec& h, const Vec& g, double lr, double w) {
  Vec step = riemannian_direction(h, g);
  Vec moved = h;
  axpy(-lr, step, moved);
  return project(moved, w);
}

// One descent step for a rotation-angle vector; result wrapped into [0,2*pi).
inline Vec angle_step(const Vec& theta, const Vec& g, double lr) {
  Vec step = riemannian_direction(theta, g);
  Vec moved = theta;
  axpy(-lr, step, moved);
  return wrap_angles(std::move(moved));
}

}  // namespace dualgeo::sphere
