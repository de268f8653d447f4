// Initialization, the three-step epoch loop, constraint re-enforcement, the
// learnable-center variant, and the fit driver with checkpoint hooks.
//
// Epoch structure (steps run in a configurable order):
//   step 1: instance triples with no bridge endpoint; updates non-bridge
//           entity points and instance relations
//   step 2: ontology triples; updates concept points, biases and ontology
//           relations
//   step 3: cross triples and bridge-incident instance triples, alternating
//           one batch of each; updates bridge points (hyperbolic rule on
//           cross batches, spherical rule on instance batches), cross
//           relation parameters, and instance relations
// The center offset (learnable-center variant only) takes a plain gradient
// step wherever sphere geometry is touched (steps 1 and 3).
#pragma once

#include <array>
#include <functional>
#include <string>

#include "dualgeo/eval.hpp"
#include "dualgeo/model.hpp"

namespace dualgeo {

enum class Variant { FixedCenter, LearnableCenter };

struct TrainConfig {
  std::size_t dim = 10;
  double lr = 1e-2;
  double margin_instance = 1.0;
  double margin_ontology = 1.0;
  int epochs = 100;
  std::size_t batch = 32;
  int negative_ratio = 1;
  std::uint64_t seed = 42;
  Variant variant = Variant::FixedCenter;
  Space instance_space = Space::Sphere;
  Space ontology_space = Space::Ball;
  int checkpoint_every = 0;          // 0: only the final checkpoint
  double shell_norm = 0.0;           // <= 0: sampled uniformly at init
  std::array<int, 3> step_order{0, 1, 2};

  void validate() const {
    if (dim < 3) throw UsageError("dim must be >= 3");
    if (!(lr > 0.0)) throw UsageError("learning rate must be positive");
    if (!(margin_instance > 0.0) || !(margin_ontology > 0.0))
      throw UsageError("margins must be positive");
    if (epochs < 0) throw UsageError("epochs must be non-negative");
    if (batch < 1) throw UsageError("batch size must be >= 1");
    if (negative_ratio < 1) throw UsageError("negative ratio must be >= 1");
    if (shell_norm != 0.0 && !(shell_norm > 0.0 && shell_norm < 1.0))
      throw UsageError("shell norm must lie in (0, 1)");
    if (variant == Variant::LearnableCenter &&
        instance_space != Space::Sphere)
      throw UsageError("the learnable-center variant needs a sphere instance view");
    std::array<bool, 3> seen{false, false, false};
    for (int s : step_order) {
      if (s < 0 || s > 2 || seen[s])
        throw UsageError("step order must be a permutation of 0,1,2");
      seen[s] = true;
    }
  }
};

// ---------------------------------------------------------------------------
// Initialization

namespace detail {

// Random point with norm uniform in [0.05, 0.9), direction drawn in the
// polar chart; optionally confined to the last-coordinate-zero disk.
inline Vec random_interior_point(std::size_t dim, bool pin_last, Rng& rng) {
  const std::size_t sub = pin_last ? dim - 1 : dim;
  const double r = rng.uniform(0.05, 0.9);
  Vec v;
  if (sub == 1) {
    v = {rng.coin() ? r : -r};
  } else {
    Angular a;
    a.radius = r;
    a.angles.resize(sub - 1);
    for (double& x : a.angles) x = rng.uniform(0.0, kTwoPi);
    v = to_cartesian(a);
  }
  if (pin_last) v.push_back(0.0);
  return v;
}

inline Vec random_shell_point(std::size_t dim, double w, Rng& rng) {
  Angular a;
  a.radius = w;
  a.angles.resize(dim - 1);
  for (double& x : a.angles) x = rng.uniform(0.0, kTwoPi);
  return to_cartesian(a);
}

inline RelationGeo init_relation(Space family, std::size_t dim, Rng& rng) {
  RelationGeo geo;
  switch (family) {
    case Space::Sphere:
      geo.angles.resize(dim - 1);
      for (double& x : geo.angles) x = rng.uniform(0.0, kTwoPi);
      break;
    case Space::Ball:
      // The stretch update rescales by ((1 - ||R||^2)/2)^2, which amplifies
      // once ||R||^2 exceeds 3; starting near zero keeps the factor ~1/4.
      geo.stretch.resize(dim);
      for (double& x : geo.stretch) x = rng.uniform(-0.1, 0.1);
      geo.translation = random_interior_point(dim, false, rng);
      break;
    case Space::Flat:
      geo.translation = random_interior_point(dim, false, rng);
      break;
  }
  return geo;
}

}  // namespace detail

inline ParamStore init_params(const TwoViewKG& kg, const TrainConfig& cfg,
                              Rng& rng) {
  ParamStore p;
  p.dim = cfg.dim;
  p.instance_space = cfg.instance_space;
  p.ontology_space = cfg.ontology_space;
  p.margin_instance = cfg.margin_instance;
  p.margin_ontology = cfg.margin_ontology;
  p.shell_norm = cfg.shell_norm > 0.0 ? cfg.shell_norm : rng.uniform(0.1, 0.9);
  p.center = 0.0;

  p.entity_points.reserve(kg.entities.size());
  for (std::size_t i = 0; i < kg.entities.size(); ++i) {
    if (cfg.instance_space == Space::Sphere)
      p.entity_points.push_back(
          detail::random_shell_point(cfg.dim, p.shell_norm, rng));
    else
      p.entity_points.push_back(
          detail::random_interior_point(cfg.dim, false, rng));
  }
  p.entity_biases.assign(kg.entities.size(), 0.0);

  p.concept_points.reserve(kg.concepts.size());
  for (std::size_t i = 0; i < kg.concepts.size(); ++i) {
    switch (cfg.ontology_space) {
      case Space::Ball:
        p.concept_points.push_back(
            detail::random_interior_point(cfg.dim, true, rng));
        break;
      case Space::Sphere:
        p.concept_points.push_back(
            detail::random_shell_point(cfg.dim, p.shell_norm, rng));
        break;
      case Space::Flat:
        p.concept_points.push_back(
            detail::random_interior_point(cfg.dim, false, rng));
        break;
    }
  }
  p.concept_biases.assign(kg.concepts.size(), 0.0);

  for (std::size_t i = 0; i < kg.instance_relations.size(); ++i)
    p.instance_relations.push_back(
        detail::init_relation(cfg.instance_space, cfg.dim, rng));
  for (std::size_t i = 0; i < kg.ontology_relations.size(); ++i)
    p.ontology_relations.push_back(
        detail::init_relation(cfg.ontology_space, cfg.dim, rng));

  for (std::size_t i = 0; i < kg.cross_relations.size(); ++i) {
    CrossRelation cr;
    cr.geo = detail::init_relation(cfg.ontology_space, cfg.dim, rng);
    cr.weight.assign(cfg.dim, Vec(cfg.dim, 0.0));
    for (std::size_t k = 0; k < cfg.dim; ++k) cr.weight[k][k] = 1.0;
    cr.bias.assign(cfg.dim, 0.0);
    p.cross_relations.push_back(std::move(cr));
  }
  return p;
}

// ---------------------------------------------------------------------------
// Constraint enforcement

namespace detail {

inline void ring_project(Vec& v, const ParamStore& p) {
  const std::size_t d = v.size();
  v[d - 1] = 0.0;
  double n = norm(v);
  if (n < 1e-12) {
    v[0] += 1e-12;
    n = norm(v);
  }
  const double s = p.ring_radius() / n;
  for (std::size_t i = 0; i + 1 < d; ++i) v[i] *= s;
  v[d - 1] = 0.0;
}

inline void shell_project_centered(Vec& v, const ParamStore& p) {
  const std::size_t d = v.size();
  v[d - 1] -= p.center;
  v = sphere::project(v, p.shell_norm);
  v[d - 1] += p.center;
}

inline void enforce_relation(RelationGeo& geo, Space family) {
  switch (family) {
    case Space::Sphere:
      geo.angles = wrap_angles(std::move(geo.angles));
      break;
    case Space::Ball:
      geo.translation = ball::clipped(std::move(geo.translation));
      break;
    case Space::Flat:
      break;
  }
}

}  // namespace detail

inline void enforce_constraints(ParamStore& p, const TwoViewKG& kg) {
  switch (p.instance_space) {
    case Space::Sphere:
      for (std::size_t i = 0; i < p.entity_points.size(); ++i) {
        if (kg.bridge[i])
          detail::ring_project(p.entity_points[i], p);
        else
          detail::shell_project_centered(p.entity_points[i], p);
      }
      break;
    case Space::Ball:
      for (Vec& v : p.entity_points) v = ball::clipped(std::move(v));
      break;
    case Space::Flat:
      break;
  }
  switch (p.ontology_space) {
    case Space::Ball:
      for (Vec& v : p.concept_points) {
        v[v.size() - 1] = 0.0;
        v = ball::clipped(std::move(v));
      }
      break;
    case Space::Sphere:
      for (Vec& v : p.concept_points) v = sphere::project(v, p.shell_norm);
      break;
    case Space::Flat:
      break;
  }
  for (RelationGeo& geo : p.instance_relations)
    detail::enforce_relation(geo, p.instance_space);
  for (RelationGeo& geo : p.ontology_relations)
    detail::enforce_relation(geo, p.ontology_space);
  for (CrossRelation& cr : p.cross_relations) {
    detail::enforce_relation(cr.geo, p.ontology_space);
    cr.bias = ball::clipped(std::move(cr.bias));
  }
}

// ---------------------------------------------------------------------------
// Update application

namespace detail {

enum class BridgeRule { SphereStyle, BallStyle };

struct UpdateMask {
  bool nonbridge_entities = false;
  bool bridge_entities = false;
  BridgeRule bridge_rule = BridgeRule::SphereStyle;
  bool concepts = false;
  bool instance_relations = false;
  bool ontology_relations = false;
  bool cross_relations = false;
  bool center = false;
};

inline void apply_geo(RelationGeo& geo, const GeoGrad& g, Space family,
                      double lr) {
  switch (family) {
    case Space::Sphere:
      geo.angles = sphere::angle_step(geo.angles, g.angles, lr);
      break;
    case Space::Ball:
      geo.stretch = ball::stretch_step(geo.stretch, g.stretch, lr);
      geo.translation = ball::point_step(geo.translation, g.translation, lr);
      break;
    case Space::Flat:
      axpy(-lr, g.translation, geo.translation);
      break;
  }
}

// Re-projects every sphere point after the center moved.
inline void reproject_spheres(ParamStore& p, const TwoViewKG& kg) {
  for (std::size_t i = 0; i < p.entity_points.size(); ++i) {
    if (kg.bridge[i])
      ring_project(p.entity_points[i], p);
    else
      shell_project_centered(p.entity_points[i], p);
  }
}

inline void center_step(ParamStore& p, const TwoViewKG& kg, double grad,
                        double lr) {
  p.center -= lr * grad;
  const double cap = p.shell_norm - 1e-3;
  if (p.center > cap) p.center = cap;
  if (p.center < -cap) p.center = -cap;
  reproject_spheres(p, kg);
}

inline void apply_updates(ParamStore& p, const TwoViewKG& kg,
                          const GradSink& sink, const UpdateMask& mask,
                          const TrainConfig& cfg) {
  const double lr = cfg.lr;

  for (const auto& [id, g] : sink.entity_points) {
    const bool is_bridge = kg.bridge[id] != 0;
    if (is_bridge ? !mask.bridge_entities : !mask.nonbridge_entities) continue;
    Vec& pt = p.entity_points[id];
    switch (p.instance_space) {
      case Space::Sphere:
        if (is_bridge && mask.bridge_rule == BridgeRule::BallStyle) {
          pt = ball::point_step(pt, g, lr);
          ring_project(pt, p);
        } else {
          Vec centered = pt;
          centered[p.dim - 1] -= p.center;
          centered = sphere::point_step(centered, g, lr, p.shell_norm);
          centered[p.dim - 1] += p.center;
          pt = std::move(centered);
          if (is_bridge) ring_project(pt, p);
        }
        break;
      case Space::Ball:
        pt = ball::point_step(pt, g, lr);
        break;
      case Space::Flat:
        axpy(-lr, g, pt);
        break;
    }
  }
  if (p.instance_space == Space::Ball) {
    for (const auto& [id, g] : sink.entity_biases) {
      const bool is_bridge = kg.bridge[id] != 0;
      if (is_bridge ? !mask.bridge_entities : !mask.nonbridge_entities)
        continue;
      p.entity_biases[id] -= lr * g;
    }
  }

  if (mask.concepts) {
    for (const auto& [id, g] : sink.concept_points) {
      Vec& pt = p.concept_points[id];
      switch (p.ontology_space) {
        case Space::Ball:
          pt = ball::point_step(pt, g, lr, /*pin_last=*/true);
          break;
        case Space::Sphere:
          pt = sphere::point_step(pt, g, lr, p.shell_norm);
          break;
        case Space::Flat:
          axpy(-lr, g, pt);
          break;
      }
    }
    if (p.ontology_space == Space::Ball)
      for (const auto& [id, g] : sink.concept_biases)
        p.concept_biases[id] -= lr * g;
  }

  if (mask.instance_relations)
    for (const auto& [id, g] : sink.instance_relations)
      apply_geo(p.instance_relations[id], g, p.instance_space, lr);
  if (mask.ontology_relations)
    for (const auto& [id, g] : sink.ontology_relations)
      apply_geo(p.ontology_relations[id], g, p.ontology_space, lr);
  if (mask.cross_relations) {
    for (const auto& [id, g] : sink.cross_relations) {
      CrossRelation& cr = p.cross_relations[id];
      apply_geo(cr.geo, g.geo, p.ontology_space, lr);
      for (std::size_t i = 0; i < p.dim; ++i)
        axpy(-lr, g.weight[i], cr.weight[i]);
      cr.bias = ball::point_step(cr.bias, g.bias, lr);
    }
  }

  if (mask.center && cfg.variant == Variant::LearnableCenter)
    center_step(p, kg, sink.center, lr);
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Epoch loop

struct EpochLosses {
  double instance = 0.0;
  double ontology = 0.0;
  double bridge = 0.0;
  double total() const { return instance + ontology + bridge; }
};

namespace detail {

inline void guard(double loss, int epoch_step) {
  if (!std::isfinite(loss) || loss > kLossCeiling)
    throw DivergenceDetected("loss " + std::to_string(loss) + " in step " +
                             std::to_string(epoch_step));
}

}  // namespace detail

inline EpochLosses train_epoch(const TwoViewKG& kg, ParamStore& p,
                               const TrainConfig& cfg, Rng& rng) {
  std::vector<Triple> step1_pool, step3_inst_pool;
  for (const Triple& t : kg.instance_triples) {
    if (kg.bridge[t.head] || kg.bridge[t.tail])
      step3_inst_pool.push_back(t);
    else
      step1_pool.push_back(t);
  }
  std::vector<Triple> step2_pool = kg.ontology_triples;
  std::vector<Triple> step3_cross_pool = kg.cross_triples;

  EpochLosses losses;

  auto run_step1 = [&] {
    rng.shuffle(step1_pool);
    detail::UpdateMask mask;
    mask.nonbridge_entities = true;
    mask.instance_relations = true;
    mask.center = true;
    double total = 0.0;
    int batches = 0;
    for (std::size_t start = 0; start < step1_pool.size();
         start += cfg.batch) {
      std::vector<TriplePair> pairs;
      const std::size_t stop = std::min(step1_pool.size(), start + cfg.batch);
      for (std::size_t i = start; i < stop; ++i)
        for (int k = 0; k < cfg.negative_ratio; ++k)
          pairs.push_back({step1_pool[i],
                           sample_negative(kg, TripleKind::Instance,
                                           step1_pool[i], rng)});
      GradSink sink;
      const double loss = loss_instance_grad(p, pairs, sink);
      detail::guard(loss, 1);
      detail::apply_updates(p, kg, sink, mask, cfg);
      total += loss;
      ++batches;
    }
    losses.instance = batches ? total / batches : 0.0;
  };

  auto run_step2 = [&] {
    rng.shuffle(step2_pool);
    detail::UpdateMask mask;
    mask.concepts = true;
    mask.ontology_relations = true;
    double total = 0.0;
    int batches = 0;
    for (std::size_t start = 0; start < step2_pool.size();
         start += cfg.batch) {
      std::vector<TriplePair> pairs;
      const std::size_t stop = std::min(step2_pool.size(), start + cfg.batch);
      for (std::size_t i = start; i < stop; ++i)
        for (int k = 0; k < cfg.negative_ratio; ++k)
          pairs.push_back({step2_pool[i],
                           sample_negative(kg, TripleKind::Ontology,
                                           step2_pool[i], rng)});
      GradSink sink;
      const double loss = loss_ontology_grad(p, pairs, sink);
      detail::guard(loss, 2);
      detail::apply_updates(p, kg, sink, mask, cfg);
      total += loss;
      ++batches;
    }
    losses.ontology = batches ? total / batches : 0.0;
  };

  auto run_step3 = [&] {
    rng.shuffle(step3_cross_pool);
    rng.shuffle(step3_inst_pool);
    double total = 0.0;
    int batches = 0;
    std::size_t ci = 0, ii = 0;
    bool cross_turn = true;
    while (ci < step3_cross_pool.size() || ii < step3_inst_pool.size()) {
      const bool take_cross =
          (cross_turn && ci < step3_cross_pool.size()) ||
          ii >= step3_inst_pool.size();
      std::vector<BridgePair> pairs;
      detail::UpdateMask mask;
      mask.bridge_entities = true;
      mask.cross_relations = true;
      mask.center = true;
      if (take_cross) {
        mask.bridge_rule = detail::BridgeRule::BallStyle;
        // Concept tails of cross links are ordinary ontology points and keep
        // their usual update rule here; only the bridge heads need the
        // alternating treatment.
        mask.concepts = true;
        const std::size_t stop =
            std::min(step3_cross_pool.size(), ci + cfg.batch);
        for (; ci < stop; ++ci)
          for (int k = 0; k < cfg.negative_ratio; ++k)
            pairs.push_back({TripleKind::Cross, step3_cross_pool[ci],
                             sample_negative(kg, TripleKind::Cross,
                                             step3_cross_pool[ci], rng)});
      } else {
        mask.bridge_rule = detail::BridgeRule::SphereStyle;
        mask.instance_relations = true;
        // Likewise, non-bridge endpoints of these instance links take the
        // plain spherical step.
        mask.nonbridge_entities = true;
        const std::size_t stop =
            std::min(step3_inst_pool.size(), ii + cfg.batch);
        for (; ii < stop; ++ii)
          for (int k = 0; k < cfg.negative_ratio; ++k)
            pairs.push_back({TripleKind::Instance, step3_inst_pool[ii],
                             sample_negative(kg, TripleKind::Instance,
                                             step3_inst_pool[ii], rng)});
      }
      GradSink sink;
      const double loss = loss_bridge_grad(p, pairs, sink);
      detail::guard(loss, 3);
      detail::apply_updates(p, kg, sink, mask, cfg);
      total += loss;
      ++batches;
      cross_turn = !cross_turn;
    }
    losses.bridge = batches ? total / batches : 0.0;
  };

  for (int step : cfg.step_order) {
    switch (step) {
      case 0: run_step1(); break;
      case 1: run_step2(); break;
      case 2: run_step3(); break;
    }
    enforce_constraints(p, kg);
  }
  return losses;
}

// ---------------------------------------------------------------------------
// Fit driver

struct FitResult {
  ParamStore params;
  std::vector<EpochLosses> trace;
  Rng rng;  // generator state after the last epoch, for exact resumption
};

// Called after finishing `epoch` whenever a checkpoint is due.
using CheckpointHook =
    std::function<void(int epoch, const ParamStore&, const Rng&)>;

inline FitResult fit_from(const TwoViewKG& kg, const TrainConfig& cfg,
                          ParamStore params, Rng rng, int start_epoch,
                          const CheckpointHook& hook = {}) {
  FitResult result{std::move(params), {}, Rng()};
  for (int epoch = start_epoch + 1; epoch <= cfg.epochs; ++epoch) {
    result.trace.push_back(train_epoch(kg, result.params, cfg, rng));
    if (hook && cfg.checkpoint_every > 0 && epoch % cfg.checkpoint_every == 0)
      hook(epoch, result.params, rng);
  }
  result.rng = std::move(rng);
  return result;
}

inline FitResult fit(const TwoViewKG& kg, const TrainConfig& cfg,
                     const CheckpointHook& hook = {}) {
  cfg.validate();
  Rng rng(cfg.seed);
  ParamStore params = init_params(kg, cfg, rng);
  enforce_constraints(params, kg);
  return fit_from(kg, cfg, std::move(params), std::move(rng), 0, hook);
}

}  // namespace dualgeo
