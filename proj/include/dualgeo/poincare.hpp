// Poincare unit-ball geometry (curvature -1): exponential/logarithmic maps at
// the origin, Mobius addition and matrix-vector action, geodesic distance,
// the diagonal-stretch bilinear score, and the Riemannian SGD step.  Every
// differentiable map comes with a vector-Jacobian product.
#pragma once

#include <algorithm>
#include <cmath>

#include "dualgeo/core.hpp"

namespace dualgeo::ball {

// Pulls a vector strictly inside the ball, leaving a fixed margin.
inline Vec clipped(Vec x, double margin = kBallMargin) {
  const double n = norm(x);
  const double cap = 1.0 - margin;
  if (n > cap) {
    const double s = cap / n;
    for (double& v : x) v *= s;
  }
  return x;
}

inline void check_inside(const Vec& x, const char* where) {
  if (norm(x) >= 1.0) throw OutsideBall(std::string(where) + ": point outside the open unit ball");
}

namespace detail {

// artanh(n)/n and its derivative divided by n, series-expanded near zero.
inline void atanh_ratio(double n, double& a, double& da_over_n) {
  if (n < 1e-4) {
    const double n2 = n * n;
    a = 1.0 + n2 / 3.0 + n2 * n2 / 5.0;
    da_over_n = 2.0 / 3.0 + 4.0 * n2 / 5.0;
    return;
  }
  const double at = std::atanh(n);
  a = at / n;
  da_over_n = (n / (1.0 - n * n) - at) / (n * n * n);
}

// tanh(n)/n and its derivative divided by n.
inline void tanh_ratio(double n, double& b, double& db_over_n) {
  if (n < 1e-4) {
    const double n2 = n * n;
    b = 1.0 - n2 / 3.0 + 2.0 * n2 * n2 / 15.0;
    db_over_n = -2.0 / 3.0 + 8.0 * n2 / 15.0;
    return;
  }
  const double th = std::tanh(n);
  const double sech2 = 1.0 - th * th;
  b = th / n;
  db_over_n = (n * sech2 - th) / (n * n * n);
}

}  // namespace detail

// log_0(y) = artanh(||y||) y / ||y||; log_0(0) = 0.
inline Vec log_map0(const Vec& y) {
  check_inside(y, "ball::log_map0");
  const double n = norm(y);
  double a, da;
  detail::atanh_ratio(n, a, da);
  return scaled(y, a);
}

// Accumulates weight * u^T (d log_0 / d y) into g.
inline void log_map0_vjp(const Vec& y, const Vec& u, double weight, Vec& g) {
  const double n = norm(y);
  double a, da_over_n;
  detail::atanh_ratio(n, a, da_over_n);
  const double yu = dot(y, u);
  for (std::size_t i = 0; i < y.size(); ++i)
    g[i] += weight * (a * u[i] + da_over_n * yu * y[i]);
}

// exp_0(v) = tanh(||v||) v / ||v||; exp_0(0) = 0.  Result clipped to the ball.
inline Vec exp_map0(const Vec& v) {
  const double n = norm(v);
  double b, db;
  detail::tanh_ratio(n, b, db);
  return clipped(scaled(v, b));
}

inline void exp_map0_vjp(const Vec& v, const Vec& u, double weight, Vec& g) {
  const double n = norm(v);
  const double cap = 1.0 - kBallMargin;
  if (std::tanh(n) > cap) {
    // The forward map rescaled the output onto the clip cap; only the
    // direction of v survives there.
    const double vu = dot(v, u);
    const double s = weight * cap / n;
    for (std::size_t i = 0; i < v.size(); ++i)
      g[i] += s * (u[i] - vu / (n * n) * v[i]);
    return;
  }
  double b, db_over_n;
  detail::tanh_ratio(n, b, db_over_n);
  const double vu = dot(v, u);
  for (std::size_t i = 0; i < v.size(); ++i)
    g[i] += weight * (b * u[i] + db_over_n * vu * v[i]);
}

// Mobius addition
//
//   x (+) y = ((1 + 2<x,y> + ||y||^2) x + (1 - ||x||^2) y)
//             / (1 + 2<x,y> + ||x||^2 ||y||^2)

struct MobiusTrace {
  double p, q, s, denom;  // <x,y>, ||y||^2, ||x||^2, denominator
  Vec raw;                // unclipped quotient, used by the pullbacks
};

inline MobiusTrace mobius_add_traced(const Vec& x, const Vec& y) {
  check_same_dim(x, y, "ball::mobius_add");
  check_inside(x, "ball::mobius_add");
  check_inside(y, "ball::mobius_add");
  MobiusTrace t;
  t.p = dot(x, y);
  t.q = sqnorm(y);
  t.s = sqnorm(x);
  t.denom = 1.0 + 2.0 * t.p + t.s * t.q;
  if (std::fabs(t.denom) < 1e-15)
    throw NumericalDegeneracy("ball::mobius_add: vanishing denominator");
  const double alpha = 1.0 + 2.0 * t.p + t.q;
  const double beta = 1.0 - t.s;
  t.raw.resize(x.size());
  for (std::size_t i = 0; i < x.size(); ++i)
    t.raw[i] = (alpha * x[i] + beta * y[i]) / t.denom;
  return t;
}

inline Vec mobius_add(const Vec& x, const Vec& y) {
  return clipped(mobius_add_traced(x, y).raw);
}

// Accumulates weight * u^T (d (x (+) y) / d x) into g.
inline void mobius_add_vjp_x(const MobiusTrace& t, const Vec& x, const Vec& y,
                             const Vec& u, double weight, Vec& g) {
  const double alpha = 1.0 + 2.0 * t.p + t.q;
  const double xu = dot(x, u), yu = dot(y, u), mu = dot(t.raw, u);
  const double w = weight / t.denom;
  for (std::size_t i = 0; i < x.size(); ++i)
    g[i] += w * (alpha * u[i] + 2.0 * xu * y[i] - 2.0 * yu * x[i] -
                 mu * (2.0 * y[i] + 2.0 * t.q * x[i]));
}

// Accumulates weight * u^T (d (x (+) y) / d y) into g.
inline void mobius_add_vjp_y(const MobiusTrace& t, const Vec& x, const Vec& y,
                             const Vec& u, double weight, Vec& g) {
  const double beta = 1.0 - t.s;
  const double xu = dot(x, u), mu = dot(t.raw, u);
  const double w = weight / t.denom;
  for (std::size_t i = 0; i < x.size(); ++i)
    g[i] += w * (beta * u[i] + 2.0 * xu * (x[i] + y[i]) -
                 mu * (2.0 * x[i] + 2.0 * t.s * y[i]));
}

// Mobius matrix-vector action M (x)_H x = exp_0(M log_0(x)), plus a diagonal
// specialization used by relation stretches.

inline Vec mobius_matvec(const Mat& m, const Vec& x) {
  if (m.size() != x.size())
    throw DimensionMismatch("ball::mobius_matvec: matrix rows");
  const Vec l = log_map0(x);
  Vec v(x.size(), 0.0);
  for (std::size_t i = 0; i < m.size(); ++i) {
    if (m[i].size() != x.size())
      throw DimensionMismatch("ball::mobius_matvec: matrix cols");
    v[i] = dot(m[i], l);
  }
  return exp_map0(v);
}

inline Vec mobius_matvec_diag(const Vec& diag, const Vec& x) {
  check_same_dim(diag, x, "ball::mobius_matvec_diag");
  Vec v = log_map0(x);
  for (std::size_t i = 0; i < v.size(); ++i) v[i] *= diag[i];
  return exp_map0(v);
}

// Geodesic distance
//
//   d(x,y) = arccosh(1 + 2 ||x-y||^2 / ((1-||x||^2)(1-||y||^2)))

inline double distance(const Vec& x, const Vec& y) {
  check_same_dim(x, y, "ball::distance");
  check_inside(x, "ball::distance");
  check_inside(y, "ball::distance");
  const double a = 1.0 - sqnorm(x);
  const double b = 1.0 - sqnorm(y);
  const double q = sqnorm(sub(x, y));
  const double gamma = std::max(1.0, 1.0 + 2.0 * q / (a * b));
  return std::acosh(gamma);
}

// Accumulates weight * d distance / d {x,y} into gx, gy.
inline void distance_grad(const Vec& x, const Vec& y, double weight, Vec& gx,
                          Vec& gy) {
  check_same_dim(x, y, "ball::distance_grad");
  const double a = 1.0 - sqnorm(x);
  const double b = 1.0 - sqnorm(y);
  const double q = sqnorm(sub(x, y));
  const double gamma = std::max(1.0 + kAcoshFloor, 1.0 + 2.0 * q / (a * b));
  const double dd = weight / std::sqrt(gamma * gamma - 1.0);
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double diff = x[i] - y[i];
    gx[i] += dd * (4.0 * diff / (a * b) + 4.0 * q * x[i] / (a * a * b));
    gy[i] += dd * (-4.0 * diff / (a * b) + 4.0 * q * y[i] / (a * b * b));
  }
}

// Diagonal-stretch bilinear score
//
//   phi(h, r, t) = -d(exp_0(R log_0(h)), t (+) r)^2 + b_h + b_t
//
// Higher is better.  R is the per-relation diagonal stretch, r the
// per-relation translation, b_* additive biases.

struct ScoreTrace {
  Vec log_h;     // log_0(h)
  Vec stretched; // R log_0(h)
  Vec u;         // exp_0 of the above
  MobiusTrace vt;
  Vec v;         // t (+) r, clipped
  double dist = 0.0;
  double score = 0.0;
};

inline ScoreTrace score_forward(const Vec& h, const Vec& stretch,
                                const Vec& translation, const Vec& t,
                                double bias_h, double bias_t) {
  check_same_dim(h, stretch, "ball::score_forward");
  check_same_dim(h, t, "ball::score_forward");
  ScoreTrace tr;
  tr.log_h = log_map0(h);
  tr.stretched.resize(h.size());
  for (std::size_t i = 0; i < h.size(); ++i)
    tr.stretched[i] = stretch[i] * tr.log_h[i];
  tr.u = exp_map0(tr.stretched);
  tr.vt = mobius_add_traced(t, translation);
  tr.v = clipped(tr.vt.raw);
  tr.dist = distance(tr.u, tr.v);
  tr.score = -tr.dist * tr.dist + bias_h + bias_t;
  return tr;
}

inline double score(const Vec& h, const Vec& stretch, const Vec& translation,
                    const Vec& t, double bias_h, double bias_t) {
  return score_forward(h, stretch, translation, t, bias_h, bias_t).score;
}

// Accumulates weight * d score / d {h, stretch, translation, t} into the
// given buffers (bias gradients are just `weight` and are left to callers).
inline void score_backward(const ScoreTrace& tr, const Vec& h,
                           const Vec& stretch, const Vec& translation,
                           const Vec& t, double weight, Vec& gh, Vec& gstretch,
                           Vec& gtranslation, Vec& gt) {
  const std::size_t d = h.size();
  // d score / d dist = -2 dist; push through the distance first.
  Vec du(d, 0.0), dv(d, 0.0);
  distance_grad(tr.u, tr.v, weight * (-2.0 * tr.dist), du, dv);

  // u-chain: exp_0 <- diagonal stretch <- log_0.
  Vec dstretched(d, 0.0);
  exp_map0_vjp(tr.stretched, du, 1.0, dstretched);
  Vec dlog(d);
  for (std::size_t i = 0; i < d; ++i) {
    gstretch[i] += dstretched[i] * tr.log_h[i];
    dlog[i] = dstretched[i] * stretch[i];
  }
  log_map0_vjp(h, dlog, 1.0, gh);

  // v-chain: Mobius addition of tail and translation.
  mobius_add_vjp_x(tr.vt, t, translation, dv, 1.0, gt);
  mobius_add_vjp_y(tr.vt, t, translation, dv, 1.0, gtranslation);
}

// One descent step for a ball point: conformal factor ((1-||x||^2)/2)^2 on
// the Euclidean gradient, then a margin clip.  pin_last zeroes the final
// coordinate so disk-constrained points stay on their hyperplane.
inline Vec point_step(const Vec& x, const Vec& g, double lr,
                      bool pin_last = false) {
  const double f = (1.0 - sqnorm(x)) / 2.0;
  Vec moved = x;
  axpy(-lr * f * f, g, moved);
  if (pin_last) moved[moved.size() - 1] = 0.0;
  return clipped(std::move(moved));
}

// Same conformal rule applied to a relation stretch vector (kept as printed
// even though the stretch is not itself a ball point; no clip).
inline Vec stretch_step(const Vec& r, const Vec& g, double lr) {
  const double f = (1.0 - sqnorm(r)) / 2.0;
  Vec moved = r;
  axpy(-lr * f * f, g, moved);
  return moved;
}

}  // namespace dualgeo::ball
