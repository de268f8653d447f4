// Parameter store and scoring model over a two-view KG.
//
// Each view lives in one of three geometries:
//   sphere - points on a shell of radius w, relations are rotation-angle
//            offsets, score = geodesic distance (lower is better)
//   ball   - Poincare points, relations are (stretch, translation), score =
//            the bilinear stretch score with biases (higher is better)
//   flat   - free vectors, relations are translations, score = residual norm
//            (lower is better)
//
// Cross-view triples (entity, r, concept) are scored in the ontology view's
// geometry after mapping the entity through the per-relation transform
// g(e) = ring_project(tanh(W (x)_H e (+)_H b)).  Entity typing uses the
// relation-averaged image of g.  Analytic gradients for every parameter
// class accumulate into a GradSink.
#pragma once

#include <cmath>
#include <map>

#include "dualgeo/kg.hpp"
#include "dualgeo/poincare.hpp"
#include "dualgeo/sphere.hpp"

namespace dualgeo {

enum class Space { Sphere, Ball, Flat };

// Lower-is-better orderings; the ball family scores higher-is-better.
inline bool score_ascending(Space s) { return s != Space::Ball; }

inline const char* space_name(Space s) {
  switch (s) {
    case Space::Sphere: return "sphere";
    case Space::Ball: return "ball";
    default: return "flat";
  }
}

// Geometry parameters of one relation; which members are meaningful depends
// on the owning view's space.
struct RelationGeo {
  Vec angles;       // sphere: d-1 rotation offsets in [0, 2pi)
  Vec stretch;      // ball: diagonal stretch
  Vec translation;  // ball: Mobius translation; flat: additive translation
};

struct CrossRelation {
  RelationGeo geo;  // scoring parameters in the ontology geometry
  Mat weight;       // d x d transform weight
  Vec bias;         // transform bias, a ball point
};

struct ParamStore {
  std::size_t dim = 0;
  Space instance_space = Space::Sphere;
  Space ontology_space = Space::Ball;
  double shell_norm = 0.5;   // w: radius of the instance sphere
  double center = 0.0;       // omega: last-axis offset of the sphere center
  double margin_instance = 1.0;
  double margin_ontology = 1.0;

  std::vector<Vec> entity_points;
  Vec entity_biases;  // used when the instance view is the ball family
  std::vector<Vec> concept_points;
  Vec concept_biases;
  std::vector<RelationGeo> instance_relations;
  std::vector<RelationGeo> ontology_relations;
  std::vector<CrossRelation> cross_relations;

  // Radius of the sphere-disk intersection ring.
  double ring_radius() const {
    return std::sqrt(shell_norm * shell_norm - center * center);
  }

  void check_entity(int id) const {
    if (id < 0 || static_cast<std::size_t>(id) >= entity_points.size())
      throw InvalidQuery("entity id out of range: " + std::to_string(id));
  }
  void check_concept(int id) const {
    if (id < 0 || static_cast<std::size_t>(id) >= concept_points.size())
      throw InvalidQuery("concept id out of range: " + std::to_string(id));
  }
  void check_relation(int id, const std::vector<RelationGeo>& rels) const {
    if (id < 0 || static_cast<std::size_t>(id) >= rels.size())
      throw UnknownRelation("relation id out of range: " + std::to_string(id));
  }
  void check_cross_relation(int id) const {
    if (id < 0 || static_cast<std::size_t>(id) >= cross_relations.size())
      throw UnknownRelation("cross relation id out of range: " +
                            std::to_string(id));
  }
};

// ---------------------------------------------------------------------------
// Gradient accumulation

struct GeoGrad {
  Vec angles, stretch, translation;
  explicit GeoGrad(std::size_t d = 0)
      : angles(d > 0 ? d - 1 : 0, 0.0), stretch(d, 0.0), translation(d, 0.0) {}
};

struct CrossGrad {
  GeoGrad geo;
  Mat weight;
  Vec bias;
  explicit CrossGrad(std::size_t d = 0)
      : geo(d), weight(d, Vec(d, 0.0)), bias(d, 0.0) {}
};

// Ordered maps keep the apply phase deterministic.
struct GradSink {
  std::map<int, Vec> entity_points, concept_points;
  std::map<int, double> entity_biases, concept_biases;
  std::map<int, GeoGrad> instance_relations, ontology_relations;
  std::map<int, CrossGrad> cross_relations;
  double center = 0.0;

  Vec& entity_point(int id, std::size_t d) { return vec_at(entity_points, id, d); }
  Vec& concept_point(int id, std::size_t d) { return vec_at(concept_points, id, d); }
  GeoGrad& instance_relation(int id, std::size_t d) {
    return geo_at(instance_relations, id, d);
  }
  GeoGrad& ontology_relation(int id, std::size_t d) {
    return geo_at(ontology_relations, id, d);
  }
  CrossGrad& cross_relation(int id, std::size_t d) {
    auto it = cross_relations.find(id);
    if (it == cross_relations.end())
      it = cross_relations.emplace(id, CrossGrad(d)).first;
    return it->second;
  }

 private:
  static Vec& vec_at(std::map<int, Vec>& m, int id, std::size_t d) {
    auto it = m.find(id);
    if (it == m.end()) it = m.emplace(id, Vec(d, 0.0)).first;
    return it->second;
  }
  static GeoGrad& geo_at(std::map<int, GeoGrad>& m, int id, std::size_t d) {
    auto it = m.find(id);
    if (it == m.end()) it = m.emplace(id, GeoGrad(d)).first;
    return it->second;
  }
};

// ---------------------------------------------------------------------------
// Family scoring over explicit points (shared by all three views)

namespace detail {

struct FamilyTrace {
  double value = 0.0;
  sphere::RotateTrace rot;  // sphere
  ball::ScoreTrace murp;    // ball
  Vec flat_diff;            // flat: head + translation - tail
  double flat_norm = 0.0;
};

inline FamilyTrace family_score(Space family, const Vec& head,
                                const RelationGeo& geo, const Vec& tail,
                                double bias_h, double bias_t) {
  FamilyTrace t;
  switch (family) {
    case Space::Sphere:
      t.rot = sphere::rotate_traced(head, geo.angles);
      t.value = sphere::distance(t.rot.output, tail);
      break;
    case Space::Ball:
      t.murp = ball::score_forward(head, geo.stretch, geo.translation, tail,
                                   bias_h, bias_t);
      t.value = t.murp.score;
      break;
    case Space::Flat:
      t.flat_diff = add(head, geo.translation);
      for (std::size_t i = 0; i < tail.size(); ++i) t.flat_diff[i] -= tail[i];
      t.flat_norm = norm(t.flat_diff);
      t.value = t.flat_norm;
      break;
  }
  return t;
}

// Accumulates weight * d value / d {head, geo, tail, biases}.
inline void family_score_grad(Space family, const FamilyTrace& t,
                              const Vec& head, const RelationGeo& geo,
                              const Vec& tail, double weight, Vec& g_head,
                              GeoGrad& g_geo, Vec& g_tail, double& g_bias_h,
                              double& g_bias_t) {
  const std::size_t d = head.size();
  switch (family) {
    case Space::Sphere: {
      Vec du(d, 0.0);
      sphere::distance_grad(t.rot.output, tail, weight, du, g_tail);
      axpy(1.0, sphere::rotate_pullback_point(t.rot, du), g_head);
      axpy(1.0, sphere::rotate_pullback_angles(t.rot, du), g_geo.angles);
      break;
    }
    case Space::Ball:
      ball::score_backward(t.murp, head, geo.stretch, geo.translation, tail,
                           weight, g_head, g_geo.stretch, g_geo.translation,
                           g_tail);
      g_bias_h += weight;
      g_bias_t += weight;
      break;
    case Space::Flat: {
      const double s = weight / std::max(t.flat_norm, 1e-12);
      axpy(s, t.flat_diff, g_head);
      axpy(s, t.flat_diff, g_geo.translation);
      axpy(-s, t.flat_diff, g_tail);
      break;
    }
  }
}

// Entity point as seen by ball-domain machinery (cross transform): sphere
// points are taken relative to the center offset, flat points are clipped
// into the ball, ball points pass through.
inline Vec ball_domain_point(const ParamStore& p, const Vec& e) {
  switch (p.instance_space) {
    case Space::Sphere: {
      Vec c = e;
      c[c.size() - 1] -= p.center;
      return c;
    }
    case Space::Flat:
      return ball::clipped(e);
    default:
      return e;
  }
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Instance-view scoring

inline double score_instance(const ParamStore& p, int h, int r, int t) {
  p.check_entity(h);
  p.check_entity(t);
  p.check_relation(r, p.instance_relations);
  const bool biased = p.instance_space == Space::Ball;
  Vec head = p.entity_points[h], tail = p.entity_points[t];
  if (p.instance_space == Space::Sphere) {
    head[head.size() - 1] -= p.center;
    tail[tail.size() - 1] -= p.center;
  }
  return detail::family_score(p.instance_space, head, p.instance_relations[r],
                              tail, biased ? p.entity_biases[h] : 0.0,
                              biased ? p.entity_biases[t] : 0.0)
      .value;
}

inline void score_instance_grad(const ParamStore& p, int h, int r, int t,
                                double weight, GradSink& sink) {
  p.check_entity(h);
  p.check_entity(t);
  p.check_relation(r, p.instance_relations);
  const std::size_t d = p.dim;
  const bool sph = p.instance_space == Space::Sphere;
  const bool biased = p.instance_space == Space::Ball;
  Vec head = p.entity_points[h], tail = p.entity_points[t];
  if (sph) {
    head[d - 1] -= p.center;
    tail[d - 1] -= p.center;
  }
  const RelationGeo& geo = p.instance_relations[r];
  const auto trace = detail::family_score(
      p.instance_space, head, geo, tail, biased ? p.entity_biases[h] : 0.0,
      biased ? p.entity_biases[t] : 0.0);

  Vec gh(d, 0.0), gt(d, 0.0);
  double gbh = 0.0, gbt = 0.0;
  detail::family_score_grad(p.instance_space, trace, head, geo, tail, weight,
                            gh, sink.instance_relation(r, d), gt, gbh, gbt);
  axpy(1.0, gh, sink.entity_point(h, d));
  axpy(1.0, gt, sink.entity_point(t, d));
  if (biased) {
    sink.entity_biases[h] += gbh;
    sink.entity_biases[t] += gbt;
  }
  // Centered coordinates depend on omega through the last axis of both
  // endpoints.
  if (sph) sink.center -= gh[d - 1] + gt[d - 1];
}

// ---------------------------------------------------------------------------
// Ontology-view scoring

inline double score_ontology(const ParamStore& p, int h, int r, int t) {
  p.check_concept(h);
  p.check_concept(t);
  p.check_relation(r, p.ontology_relations);
  const bool biased = p.ontology_space == Space::Ball;
  return detail::family_score(p.ontology_space, p.concept_points[h],
                              p.ontology_relations[r], p.concept_points[t],
                              biased ? p.concept_biases[h] : 0.0,
                              biased ? p.concept_biases[t] : 0.0)
      .value;
}

inline void score_ontology_grad(const ParamStore& p, int h, int r, int t,
                                double weight, GradSink& sink) {
  p.check_concept(h);
  p.check_concept(t);
  p.check_relation(r, p.ontology_relations);
  const std::size_t d = p.dim;
  const bool biased = p.ontology_space == Space::Ball;
  const Vec& head = p.concept_points[h];
  const Vec& tail = p.concept_points[t];
  const RelationGeo& geo = p.ontology_relations[r];
  const auto trace = detail::family_score(
      p.ontology_space, head, geo, tail, biased ? p.concept_biases[h] : 0.0,
      biased ? p.concept_biases[t] : 0.0);
  double gbh = 0.0, gbt = 0.0;
  detail::family_score_grad(p.ontology_space, trace, head, geo, tail, weight,
                            sink.concept_point(h, d), sink.ontology_relation(r, d),
                            sink.concept_point(t, d), gbh, gbt);
  if (biased) {
    sink.concept_biases[h] += gbh;
    sink.concept_biases[t] += gbt;
  }
}

// ---------------------------------------------------------------------------
// Cross-view transform g and scoring

struct TransformTrace {
  Vec input;    // entity point in the ball domain
  Vec log_in;   // log_0(input)
  Vec lin;      // W log_0(input)
  Vec mapped;   // exp_0(lin)
  ball::MobiusTrace addt;
  Vec added;    // mapped (+) bias, clipped
  Vec squashed; // tanh(added), componentwise
  Vec pinned;   // squashed with last coordinate dropped to 0
  double prefix_norm = 0.0;
  Vec out;      // on the intersection ring
};

inline TransformTrace g_transform_traced(const ParamStore& p, const Vec& e,
                                         int rel) {
  p.check_cross_relation(rel);
  const CrossRelation& cr = p.cross_relations[rel];
  const std::size_t d = p.dim;
  TransformTrace t;
  t.input = detail::ball_domain_point(p, e);
  t.log_in = ball::log_map0(t.input);
  t.lin.assign(d, 0.0);
  for (std::size_t i = 0; i < d; ++i) t.lin[i] = dot(cr.weight[i], t.log_in);
  t.mapped = ball::exp_map0(t.lin);
  t.addt = ball::mobius_add_traced(t.mapped, cr.bias);
  t.added = ball::clipped(t.addt.raw);
  t.squashed.resize(d);
  for (std::size_t i = 0; i < d; ++i) t.squashed[i] = std::tanh(t.added[i]);
  t.pinned = t.squashed;
  t.pinned[d - 1] = 0.0;
  t.prefix_norm = norm(t.pinned);
  if (t.prefix_norm < 1e-12) {
    // Direction undefined (tanh output vanished on the disk): nudge the
    // first coordinate deterministically before projecting.
    t.pinned[0] += 1e-12;
    t.prefix_norm = norm(t.pinned);
  }
  t.out = scaled(t.pinned, p.ring_radius() / t.prefix_norm);
  t.out[d - 1] = 0.0;
  return t;
}

inline Vec g_transform(const ParamStore& p, int entity, int rel) {
  p.check_entity(entity);
  return g_transform_traced(p, p.entity_points[entity], rel).out;
}

// Pulls a cotangent on g's output back to the entity point, W, b, and omega.
inline void g_transform_backward(const ParamStore& p, const TransformTrace& t,
                                 int entity, int rel, const Vec& u,
                                 GradSink& sink) {
  const CrossRelation& cr = p.cross_relations[rel];
  const std::size_t d = p.dim;
  const double rho = p.ring_radius();
  const double n = t.prefix_norm;

  // Ring projection: out = rho * pinned / ||pinned|| on the first d-1
  // coordinates, exactly 0 on the last.
  double pu = 0.0;  // <unit prefix, u>
  for (std::size_t i = 0; i + 1 < d; ++i) pu += t.pinned[i] / n * u[i];
  Vec dsq(d, 0.0);
  for (std::size_t i = 0; i + 1 < d; ++i)
    dsq[i] = rho / n * (u[i] - t.pinned[i] / n * pu);
  // rho depends on omega: d rho / d omega = -omega / rho.
  if (rho > 0.0) sink.center += pu * (-p.center / rho);

  // tanh componentwise.
  Vec dadd(d, 0.0);
  for (std::size_t i = 0; i < d; ++i)
    dadd[i] = dsq[i] * (1.0 - t.squashed[i] * t.squashed[i]);

  // The Mobius sum was rescaled onto the clip cap if it crept too close to
  // the boundary; push the cotangent through that rescale.
  {
    const double rn = norm(t.addt.raw);
    const double cap = 1.0 - kBallMargin;
    if (rn > cap) {
      const double ru = dot(t.addt.raw, dadd) / (rn * rn);
      for (std::size_t i = 0; i < d; ++i)
        dadd[i] = cap / rn * (dadd[i] - ru * t.addt.raw[i]);
    }
  }

  // Mobius addition (mapped (+) bias).
  Vec dmapped(d, 0.0);
  CrossGrad& cg = sink.cross_relation(rel, d);
  ball::mobius_add_vjp_x(t.addt, t.mapped, cr.bias, dadd, 1.0, dmapped);
  ball::mobius_add_vjp_y(t.addt, t.mapped, cr.bias, dadd, 1.0, cg.bias);

  // exp_0, the linear map, log_0.
  Vec dlin(d, 0.0);
  ball::exp_map0_vjp(t.lin, dmapped, 1.0, dlin);
  Vec dlog(d, 0.0);
  for (std::size_t i = 0; i < d; ++i) {
    axpy(dlin[i], t.log_in, cg.weight[i]);
    axpy(dlin[i], cr.weight[i], dlog);
  }
  Vec dinput(d, 0.0);
  ball::log_map0_vjp(t.input, dlog, 1.0, dinput);

  // Flat entities outside the ball were rescaled on the way in; chain
  // through that rescale so the pullback lands on the raw point.
  if (p.instance_space == Space::Flat) {
    const Vec& raw = p.entity_points[entity];
    const double n = norm(raw);
    if (n > 1.0 - kBallMargin) {
      const double c = (1.0 - kBallMargin) / n;
      const double radial = dot(raw, dinput) / (n * n);
      Vec chained(d);
      for (std::size_t i = 0; i < d; ++i)
        chained[i] = c * (dinput[i] - radial * raw[i]);
      dinput = std::move(chained);
    }
  }

  axpy(1.0, dinput, sink.entity_point(entity, d));
  if (p.instance_space == Space::Sphere) sink.center -= dinput[d - 1];
}

inline double score_cross(const ParamStore& p, int e, int r, int c) {
  p.check_entity(e);
  p.check_concept(c);
  p.check_cross_relation(r);
  const auto gt = g_transform_traced(p, p.entity_points[e], r);
  const bool biased = p.ontology_space == Space::Ball;
  // No trained bias exists for the entity side; the concept keeps its own.
  return detail::family_score(p.ontology_space, gt.out,
                              p.cross_relations[r].geo, p.concept_points[c],
                              0.0, biased ? p.concept_biases[c] : 0.0)
      .value;
}

inline void score_cross_grad(const ParamStore& p, int e, int r, int c,
                             double weight, GradSink& sink) {
  p.check_entity(e);
  p.check_concept(c);
  p.check_cross_relation(r);
  const std::size_t d = p.dim;
  const bool biased = p.ontology_space == Space::Ball;
  const auto gt = g_transform_traced(p, p.entity_points[e], r);
  const RelationGeo& geo = p.cross_relations[r].geo;
  const Vec& tail = p.concept_points[c];
  const auto trace =
      detail::family_score(p.ontology_space, gt.out, geo, tail, 0.0,
                           biased ? p.concept_biases[c] : 0.0);

  Vec ghead(d, 0.0);
  double gb_head = 0.0, gb_tail = 0.0;
  detail::family_score_grad(p.ontology_space, trace, gt.out, geo, tail, weight,
                            ghead, sink.cross_relation(r, d).geo,
                            sink.concept_point(c, d), gb_head, gb_tail);
  if (biased) sink.concept_biases[c] += gb_tail;
  g_transform_backward(p, gt, e, r, ghead, sink);
}

// Relation-averaged concept-space image of an entity, used by entity typing.
inline Vec g_mean(const ParamStore& p, int entity) {
  p.check_entity(entity);
  if (p.cross_relations.empty())
    throw UnknownRelation("g_mean: no cross relations");
  Vec acc(p.dim, 0.0);
  for (std::size_t k = 0; k < p.cross_relations.size(); ++k)
    axpy(1.0, g_transform_traced(p, p.entity_points[entity],
                                 static_cast<int>(k))
                  .out,
         acc);
  return scaled(acc, 1.0 / static_cast<double>(p.cross_relations.size()));
}

// ---------------------------------------------------------------------------
// Hinge losses
//
// Ascending families (sphere, flat): max(0, margin + obs - corr).
// Descending family (ball):          max(0, margin + corr - obs).

struct TriplePair {
  Triple pos, neg;
};

struct BridgePair {
  TripleKind kind = TripleKind::Instance;  // Instance or Cross
  Triple pos, neg;
};

namespace detail {

inline double hinge(double margin, double obs, double corr, bool ascending) {
  const double v = ascending ? margin + obs - corr : margin + corr - obs;
  return v > 0.0 ? v : 0.0;
}

}  // namespace detail

inline double loss_instance(const ParamStore& p,
                            const std::vector<TriplePair>& batch) {
  if (batch.empty()) return 0.0;
  const bool asc = score_ascending(p.instance_space);
  double total = 0.0;
  for (const TriplePair& pr : batch)
    total += detail::hinge(
        p.margin_instance,
        score_instance(p, pr.pos.head, pr.pos.rel, pr.pos.tail),
        score_instance(p, pr.neg.head, pr.neg.rel, pr.neg.tail), asc);
  return total / static_cast<double>(batch.size());
}

inline double loss_instance_grad(const ParamStore& p,
                                 const std::vector<TriplePair>& batch,
                                 GradSink& sink) {
  if (batch.empty()) return 0.0;
  const bool asc = score_ascending(p.instance_space);
  const double inv = 1.0 / static_cast<double>(batch.size());
  double total = 0.0;
  for (const TriplePair& pr : batch) {
    const double obs = score_instance(p, pr.pos.head, pr.pos.rel, pr.pos.tail);
    const double corr =
        score_instance(p, pr.neg.head, pr.neg.rel, pr.neg.tail);
    const double term = detail::hinge(p.margin_instance, obs, corr, asc);
    total += term;
    if (term > 0.0) {
      const double sign = asc ? 1.0 : -1.0;
      score_instance_grad(p, pr.pos.head, pr.pos.rel, pr.pos.tail, sign * inv,
                          sink);
      score_instance_grad(p, pr.neg.head, pr.neg.rel, pr.neg.tail, -sign * inv,
                          sink);
    }
  }
  return total * inv;
}

inline double loss_ontology(const ParamStore& p,
                            const std::vector<TriplePair>& batch) {
  if (batch.empty()) return 0.0;
  const bool asc = score_ascending(p.ontology_space);
  double total = 0.0;
  for (const TriplePair& pr : batch)
    total += detail::hinge(
        p.margin_ontology,
        score_ontology(p, pr.pos.head, pr.pos.rel, pr.pos.tail),
        score_ontology(p, pr.neg.head, pr.neg.rel, pr.neg.tail), asc);
  return total / static_cast<double>(batch.size());
}

inline double loss_ontology_grad(const ParamStore& p,
                                 const std::vector<TriplePair>& batch,
                                 GradSink& sink) {
  if (batch.empty()) return 0.0;
  const bool asc = score_ascending(p.ontology_space);
  const double inv = 1.0 / static_cast<double>(batch.size());
  double total = 0.0;
  for (const TriplePair& pr : batch) {
    const double obs = score_ontology(p, pr.pos.head, pr.pos.rel, pr.pos.tail);
    const double corr =
        score_ontology(p, pr.neg.head, pr.neg.rel, pr.neg.tail);
    const double term = detail::hinge(p.margin_ontology, obs, corr, asc);
    total += term;
    if (term > 0.0) {
      const double sign = asc ? 1.0 : -1.0;
      score_ontology_grad(p, pr.pos.head, pr.pos.rel, pr.pos.tail, sign * inv,
                          sink);
      score_ontology_grad(p, pr.neg.head, pr.neg.rel, pr.neg.tail, -sign * inv,
                          sink);
    }
  }
  return total * inv;
}

// Bridge batch: cross-view pairs use the ontology hinge on the transformed
// score, bridge-incident instance pairs use the instance hinge; one mean
// over the whole batch.
inline double loss_bridge_impl(const ParamStore& p,
                               const std::vector<BridgePair>& batch,
                               GradSink* sink) {
  if (batch.empty()) return 0.0;
  const double inv = 1.0 / static_cast<double>(batch.size());
  double total = 0.0;
  for (const BridgePair& pr : batch) {
    if (pr.kind == TripleKind::Cross) {
      const bool asc = score_ascending(p.ontology_space);
      const double obs = score_cross(p, pr.pos.head, pr.pos.rel, pr.pos.tail);
      const double corr = score_cross(p, pr.neg.head, pr.neg.rel, pr.neg.tail);
      const double term = detail::hinge(p.margin_ontology, obs, corr, asc);
      total += term;
      if (sink && term > 0.0) {
        const double sign = asc ? 1.0 : -1.0;
        score_cross_grad(p, pr.pos.head, pr.pos.rel, pr.pos.tail, sign * inv,
                         *sink);
        score_cross_grad(p, pr.neg.head, pr.neg.rel, pr.neg.tail, -sign * inv,
                         *sink);
      }
    } else {
      const bool asc = score_ascending(p.instance_space);
      const double obs =
          score_instance(p, pr.pos.head, pr.pos.rel, pr.pos.tail);
      const double corr =
          score_instance(p, pr.neg.head, pr.neg.rel, pr.neg.tail);
      const double term = detail::hinge(p.margin_instance, obs, corr, asc);
      total += term;
      if (sink && term > 0.0) {
        const double sign = asc ? 1.0 : -1.0;
        score_instance_grad(p, pr.pos.head, pr.pos.rel, pr.pos.tail,
                            sign * inv, *sink);
        score_instance_grad(p, pr.neg.head, pr.neg.rel, pr.neg.tail,
                            -sign * inv, *sink);
      }
    }
  }
  return total * inv;
}

inline double loss_bridge(const ParamStore& p,
                          const std::vector<BridgePair>& batch) {
  return loss_bridge_impl(p, batch, nullptr);
}

inline double loss_bridge_grad(const ParamStore& p,
                               const std::vector<BridgePair>& batch,
                               GradSink& sink) {
  return loss_bridge_impl(p, batch, &sink);
}

// ---------------------------------------------------------------------------
// Negative sampling: corrupt head or tail (fair coin) with a uniform draw
// from the same node category, rejecting anything present in the KG.

inline Triple sample_negative(const TwoViewKG& kg, TripleKind kind,
                              const Triple& triple, Rng& rng) {
  const std::size_t entities = kg.entities.size();
  const std::size_t concepts = kg.concepts.size();
  for (int attempt = 0; attempt < 100; ++attempt) {
    const bool corrupt_head = rng.coin();
    Triple cand = triple;
    std::size_t pool;
    if (kind == TripleKind::Instance) {
      pool = entities;
    } else if (kind == TripleKind::Ontology) {
      pool = concepts;
    } else {
      pool = corrupt_head ? entities : concepts;
    }
    if (pool == 0) break;
    const int pick = static_cast<int>(rng.uniform_index(pool));
    (corrupt_head ? cand.head : cand.tail) = pick;
    if (cand == triple) continue;
    if (!kg.contains(kind, cand.head, cand.rel, cand.tail)) return cand;
  }
  throw SamplingExhausted("no negative found in 100 attempts");
}

}  // namespace dualgeo
