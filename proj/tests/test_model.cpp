#include <catch2/catch_amalgamated.hpp>

#include "dualgeo/model.hpp"
#include "testutil.hpp"

using namespace dualgeo;

namespace {

// Random parameter store with every field populated for the given spaces.
// Sphere entities sit on the shell around the (possibly offset) center.
ParamStore make_params(Space inst, Space onto, std::size_t d, std::size_t ne,
                       std::size_t nc, std::size_t nri, std::size_t nro,
                       std::size_t nrx, double omega, testutil::Rng& rng) {
  ParamStore p;
  p.dim = d;
  p.instance_space = inst;
  p.ontology_space = onto;
  p.shell_norm = 0.6;
  p.center = omega;
  p.margin_instance = 50.0;
  p.margin_ontology = 50.0;

  for (std::size_t i = 0; i < ne; ++i) {
    switch (inst) {
      case Space::Sphere: {
        Vec v = testutil::random_shell_point(rng, d, p.shell_norm);
        v[d - 1] += omega;
        p.entity_points.push_back(std::move(v));
        break;
      }
      case Space::Ball:
        p.entity_points.push_back(testutil::random_ball_point(rng, d, 0.7));
        break;
      case Space::Flat:
        p.entity_points.push_back(testutil::random_vec(rng, d, -0.7, 0.7));
        break;
    }
  }
  p.entity_biases.resize(ne);
  for (double& b : p.entity_biases) b = rng.uniform(-0.5, 0.5);

  for (std::size_t i = 0; i < nc; ++i) {
    switch (onto) {
      case Space::Ball:
        p.concept_points.push_back(
            testutil::random_ball_point(rng, d, 0.7, /*pin_last=*/true));
        break;
      case Space::Sphere:
        p.concept_points.push_back(
            testutil::random_shell_point(rng, d, p.shell_norm));
        break;
      case Space::Flat:
        p.concept_points.push_back(testutil::random_vec(rng, d, -0.7, 0.7));
        break;
    }
  }
  p.concept_biases.resize(nc);
  for (double& b : p.concept_biases) b = rng.uniform(-0.5, 0.5);

  auto make_geo = [&](Space family) {
    RelationGeo g;
    switch (family) {
      case Space::Sphere:
        g.angles = testutil::random_angles(rng, d - 1, 0.3, kTwoPi - 0.3);
        break;
      case Space::Ball:
        g.stretch.resize(d);
        for (double& s : g.stretch) s = rng.uniform(0.5, 1.5);
        g.translation = testutil::random_ball_point(rng, d, 0.4);
        break;
      case Space::Flat:
        g.translation = testutil::random_vec(rng, d, -0.5, 0.5);
        break;
    }
    return g;
  };
  for (std::size_t i = 0; i < nri; ++i)
    p.instance_relations.push_back(make_geo(inst));
  for (std::size_t i = 0; i < nro; ++i)
    p.ontology_relations.push_back(make_geo(onto));
  for (std::size_t i = 0; i < nrx; ++i) {
    CrossRelation cr;
    cr.geo = make_geo(onto);
    cr.weight.assign(d, Vec(d, 0.0));
    for (std::size_t r = 0; r < d; ++r) {
      cr.weight[r][r] = 1.0;
      for (std::size_t c = 0; c < d; ++c)
        cr.weight[r][c] += rng.uniform(-0.3, 0.3);
    }
    cr.bias = testutil::random_ball_point(rng, d, 0.3);
    p.cross_relations.push_back(std::move(cr));
  }
  return p;
}

// Central difference of `loss` under a parameter bump of +/-h.  The step is
// chosen large enough that roundoff stays below truncation even for poorly
// conditioned boundary configurations.
template <typename Loss, typename Bump>
double fd_param(const ParamStore& p, Loss loss, Bump bump, double h = 1e-5) {
  ParamStore hi = p, lo = p;
  bump(hi, +h);
  bump(lo, -h);
  return (loss(hi) - loss(lo)) / (2.0 * h);
}

Vec sink_vec(const std::map<int, Vec>& m, int id, std::size_t d) {
  auto it = m.find(id);
  return it == m.end() ? Vec(d, 0.0) : it->second;
}

GeoGrad sink_geo(const std::map<int, GeoGrad>& m, int id, std::size_t d) {
  auto it = m.find(id);
  return it == m.end() ? GeoGrad(d) : it->second;
}

// Checks analytic gradients of the instance and ontology losses against
// finite differences for one space assignment.
void check_view_grads(Space inst, Space onto, double omega,
                      std::uint64_t seed) {
  testutil::Rng rng(seed);
  const std::size_t d = 5, ne = 4, nc = 4;
  ParamStore p = make_params(inst, onto, d, ne, nc, 2, 2, 0, omega, rng);

  const std::vector<TriplePair> ibatch = {{{0, 0, 1}, {0, 0, 2}},
                                          {{2, 1, 3}, {1, 1, 3}}};
  const std::vector<TriplePair> obatch = {{{0, 0, 1}, {0, 0, 2}},
                                          {{2, 1, 3}, {1, 1, 3}}};

  auto iloss = [&](const ParamStore& q) { return loss_instance(q, ibatch); };
  auto oloss = [&](const ParamStore& q) { return loss_ontology(q, obatch); };

  GradSink isink, osink;
  REQUIRE(loss_instance_grad(p, ibatch, isink) ==
          Catch::Approx(loss_instance(p, ibatch)));
  REQUIRE(loss_ontology_grad(p, obatch, osink) ==
          Catch::Approx(loss_ontology(p, obatch)));

  for (std::size_t e = 0; e < ne; ++e) {
    Vec fd(d);
    for (std::size_t k = 0; k < d; ++k)
      fd[k] = fd_param(p, iloss, [&](ParamStore& q, double h) {
        q.entity_points[e][k] += h;
      });
    REQUIRE(testutil::grad_rel_err(fd, sink_vec(isink.entity_points,
                                                static_cast<int>(e), d)) <
            1e-4);
  }
  if (inst == Space::Ball) {
    for (std::size_t e = 0; e < ne; ++e) {
      const double fd = fd_param(p, iloss, [&](ParamStore& q, double h) {
        q.entity_biases[e] += h;
      });
      auto it = isink.entity_biases.find(static_cast<int>(e));
      const double an = it == isink.entity_biases.end() ? 0.0 : it->second;
      REQUIRE(std::abs(fd - an) < 1e-6);
    }
  }
  for (int r = 0; r < 2; ++r) {
    const GeoGrad an = sink_geo(isink.instance_relations, r, d);
    if (inst == Space::Sphere) {
      Vec fd(d - 1);
      for (std::size_t k = 0; k + 1 < d; ++k)
        fd[k] = fd_param(p, iloss, [&](ParamStore& q, double h) {
          q.instance_relations[r].angles[k] += h;
        });
      REQUIRE(testutil::grad_rel_err(fd, an.angles) < 1e-4);
    } else if (inst == Space::Ball) {
      Vec fds(d), fdt(d);
      for (std::size_t k = 0; k < d; ++k) {
        fds[k] = fd_param(p, iloss, [&](ParamStore& q, double h) {
          q.instance_relations[r].stretch[k] += h;
        });
        fdt[k] = fd_param(p, iloss, [&](ParamStore& q, double h) {
          q.instance_relations[r].translation[k] += h;
        });
      }
      REQUIRE(testutil::grad_rel_err(fds, an.stretch) < 1e-4);
      REQUIRE(testutil::grad_rel_err(fdt, an.translation) < 1e-4);
    } else {
      Vec fd(d);
      for (std::size_t k = 0; k < d; ++k)
        fd[k] = fd_param(p, iloss, [&](ParamStore& q, double h) {
          q.instance_relations[r].translation[k] += h;
        });
      REQUIRE(testutil::grad_rel_err(fd, an.translation) < 1e-4);
    }
  }
  if (inst == Space::Sphere) {
    const double fd = fd_param(
        p, iloss, [](ParamStore& q, double h) { q.center += h; });
    REQUIRE(std::abs(fd - isink.center) <
            1e-4 * (std::abs(fd) + std::abs(isink.center) + 1e-10));
  }

  for (std::size_t c = 0; c < nc; ++c) {
    Vec fd(d);
    for (std::size_t k = 0; k < d; ++k)
      fd[k] = fd_param(p, oloss, [&](ParamStore& q, double h) {
        q.concept_points[c][k] += h;
      });
    REQUIRE(testutil::grad_rel_err(fd, sink_vec(osink.concept_points,
                                                static_cast<int>(c), d)) <
            1e-4);
  }
  if (onto == Space::Ball) {
    for (std::size_t c = 0; c < nc; ++c) {
      const double fd = fd_param(p, oloss, [&](ParamStore& q, double h) {
        q.concept_biases[c] += h;
      });
      auto it = osink.concept_biases.find(static_cast<int>(c));
      const double an = it == osink.concept_biases.end() ? 0.0 : it->second;
      REQUIRE(std::abs(fd - an) < 1e-6);
    }
  }
  for (int r = 0; r < 2; ++r) {
    const GeoGrad an = sink_geo(osink.ontology_relations, r, d);
    if (onto == Space::Sphere) {
      Vec fd(d - 1);
      for (std::size_t k = 0; k + 1 < d; ++k)
        fd[k] = fd_param(p, oloss, [&](ParamStore& q, double h) {
          q.ontology_relations[r].angles[k] += h;
        });
      REQUIRE(testutil::grad_rel_err(fd, an.angles) < 1e-4);
    } else if (onto == Space::Ball) {
      Vec fds(d), fdt(d);
      for (std::size_t k = 0; k < d; ++k) {
        fds[k] = fd_param(p, oloss, [&](ParamStore& q, double h) {
          q.ontology_relations[r].stretch[k] += h;
        });
        fdt[k] = fd_param(p, oloss, [&](ParamStore& q, double h) {
          q.ontology_relations[r].translation[k] += h;
        });
      }
      REQUIRE(testutil::grad_rel_err(fds, an.stretch) < 1e-4);
      REQUIRE(testutil::grad_rel_err(fdt, an.translation) < 1e-4);
    } else {
      Vec fd(d);
      for (std::size_t k = 0; k < d; ++k)
        fd[k] = fd_param(p, oloss, [&](ParamStore& q, double h) {
          q.ontology_relations[r].translation[k] += h;
        });
      REQUIRE(testutil::grad_rel_err(fd, an.translation) < 1e-4);
    }
  }
}

// Finite-difference check of the bridge loss (cross + instance pairs) over
// entity points, concept points, cross relation parameters and the center.
void check_bridge_grads(Space inst, Space onto, double omega,
                        std::uint64_t seed) {
  testutil::Rng rng(seed);
  const std::size_t d = 5, ne = 4, nc = 4;
  ParamStore p = make_params(inst, onto, d, ne, nc, 1, 1, 2, omega, rng);

  std::vector<BridgePair> batch = {
      {TripleKind::Cross, {0, 0, 1}, {0, 0, 2}},
      {TripleKind::Cross, {1, 1, 2}, {3, 1, 2}},
      {TripleKind::Instance, {0, 0, 1}, {0, 0, 3}},
  };
  auto loss = [&](const ParamStore& q) { return loss_bridge(q, batch); };

  GradSink sink;
  REQUIRE(loss_bridge_grad(p, batch, sink) ==
          Catch::Approx(loss_bridge(p, batch)));

  for (std::size_t e = 0; e < ne; ++e) {
    Vec fd(d);
    for (std::size_t k = 0; k < d; ++k)
      fd[k] = fd_param(p, loss, [&](ParamStore& q, double h) {
        q.entity_points[e][k] += h;
      });
    REQUIRE(testutil::grad_rel_err(fd, sink_vec(sink.entity_points,
                                                static_cast<int>(e), d)) <
            1e-4);
  }
  for (std::size_t c = 0; c < nc; ++c) {
    Vec fd(d);
    for (std::size_t k = 0; k < d; ++k)
      fd[k] = fd_param(p, loss, [&](ParamStore& q, double h) {
        q.concept_points[c][k] += h;
      });
    REQUIRE(testutil::grad_rel_err(fd, sink_vec(sink.concept_points,
                                                static_cast<int>(c), d)) <
            1e-4);
  }
  for (int r = 0; r < 2; ++r) {
    auto it = sink.cross_relations.find(r);
    const CrossGrad an = it == sink.cross_relations.end() ? CrossGrad(d)
                                                          : it->second;
    for (std::size_t row = 0; row < d; ++row) {
      Vec fd(d);
      for (std::size_t col = 0; col < d; ++col)
        fd[col] = fd_param(p, loss, [&](ParamStore& q, double h) {
          q.cross_relations[r].weight[row][col] += h;
        });
      REQUIRE(testutil::grad_rel_err(fd, an.weight[row]) < 1e-4);
    }
    Vec fdb(d);
    for (std::size_t k = 0; k < d; ++k)
      fdb[k] = fd_param(p, loss, [&](ParamStore& q, double h) {
        q.cross_relations[r].bias[k] += h;
      });
    REQUIRE(testutil::grad_rel_err(fdb, an.bias) < 1e-4);

    if (onto == Space::Ball) {
      Vec fds(d), fdt(d);
      for (std::size_t k = 0; k < d; ++k) {
        fds[k] = fd_param(p, loss, [&](ParamStore& q, double h) {
          q.cross_relations[r].geo.stretch[k] += h;
        });
        fdt[k] = fd_param(p, loss, [&](ParamStore& q, double h) {
          q.cross_relations[r].geo.translation[k] += h;
        });
      }
      REQUIRE(testutil::grad_rel_err(fds, an.geo.stretch) < 1e-4);
      REQUIRE(testutil::grad_rel_err(fdt, an.geo.translation) < 1e-4);
    } else if (onto == Space::Sphere) {
      Vec fd(d - 1);
      for (std::size_t k = 0; k + 1 < d; ++k)
        fd[k] = fd_param(p, loss, [&](ParamStore& q, double h) {
          q.cross_relations[r].geo.angles[k] += h;
        });
      REQUIRE(testutil::grad_rel_err(fd, an.geo.angles) < 1e-4);
    } else {
      Vec fd(d);
      for (std::size_t k = 0; k < d; ++k)
        fd[k] = fd_param(p, loss, [&](ParamStore& q, double h) {
          q.cross_relations[r].geo.translation[k] += h;
        });
      REQUIRE(testutil::grad_rel_err(fd, an.geo.translation) < 1e-4);
    }
  }
  if (inst == Space::Sphere) {
    const double fd = fd_param(
        p, loss, [](ParamStore& q, double h) { q.center += h; });
    REQUIRE(std::abs(fd - sink.center) <
            1e-4 * (std::abs(fd) + std::abs(sink.center) + 1e-10));
  }
}

}  // namespace

TEST_CASE("spherical instance score is the rotated geodesic distance") {
  testutil::Rng rng(11);
  const std::size_t d = 6;
  ParamStore p = make_params(Space::Sphere, Space::Ball, d, 3, 2, 1, 1, 1,
                             0.0, rng);
  const Vec& h = p.entity_points[0];
  const Vec& t = p.entity_points[1];
  const double expected =
      sphere::distance(sphere::rotate(h, p.instance_relations[0].angles), t);
  REQUIRE(score_instance(p, 0, 0, 1) == Catch::Approx(expected).margin(1e-12));

  // A tail placed exactly at the rotated head scores zero.
  p.entity_points[2] = sphere::rotate(h, p.instance_relations[0].angles);
  REQUIRE(score_instance(p, 0, 0, 2) < 1e-7);
}

TEST_CASE("spherical score respects the center offset") {
  testutil::Rng rng(12);
  const std::size_t d = 5;
  const double omega = 0.25;
  ParamStore p = make_params(Space::Sphere, Space::Ball, d, 3, 2, 1, 1, 1,
                             omega, rng);
  Vec h = p.entity_points[0], t = p.entity_points[1];
  h[d - 1] -= omega;
  t[d - 1] -= omega;
  const double expected =
      sphere::distance(sphere::rotate(h, p.instance_relations[0].angles), t);
  REQUIRE(score_instance(p, 0, 0, 1) == Catch::Approx(expected).margin(1e-12));
}

TEST_CASE("ball instance score matches the stretch score") {
  testutil::Rng rng(13);
  const std::size_t d = 5;
  ParamStore p = make_params(Space::Ball, Space::Ball, d, 3, 2, 1, 1, 1, 0.0,
                             rng);
  const RelationGeo& g = p.instance_relations[0];
  const double expected =
      ball::score(p.entity_points[0], g.stretch, g.translation,
                  p.entity_points[1], p.entity_biases[0], p.entity_biases[1]);
  REQUIRE(score_instance(p, 0, 0, 1) == Catch::Approx(expected).margin(1e-12));
}

TEST_CASE("flat instance score is the residual norm") {
  testutil::Rng rng(14);
  const std::size_t d = 5;
  ParamStore p = make_params(Space::Flat, Space::Ball, d, 3, 2, 1, 1, 1, 0.0,
                             rng);
  const Vec diff = sub(add(p.entity_points[0],
                           p.instance_relations[0].translation),
                       p.entity_points[1]);
  REQUIRE(score_instance(p, 0, 0, 1) ==
          Catch::Approx(norm(diff)).margin(1e-12));
}

TEST_CASE("scoring rejects out-of-range identifiers") {
  testutil::Rng rng(15);
  ParamStore p = make_params(Space::Sphere, Space::Ball, 4, 2, 2, 1, 1, 1,
                             0.0, rng);
  REQUIRE_THROWS_AS(score_instance(p, -1, 0, 1), InvalidQuery);
  REQUIRE_THROWS_AS(score_instance(p, 0, 0, 2), InvalidQuery);
  REQUIRE_THROWS_AS(score_instance(p, 0, 3, 1), UnknownRelation);
  REQUIRE_THROWS_AS(score_ontology(p, 0, 0, 5), InvalidQuery);
  REQUIRE_THROWS_AS(score_cross(p, 0, 2, 1), UnknownRelation);
}

TEST_CASE("cross transform composes the documented pipeline") {
  for (Space inst : {Space::Sphere, Space::Ball, Space::Flat}) {
    testutil::Rng rng(16);
    const std::size_t d = 5;
    const double omega = inst == Space::Sphere ? 0.2 : 0.0;
    ParamStore p = make_params(inst, Space::Ball, d, 3, 2, 1, 1, 1, omega,
                               rng);
    const CrossRelation& cr = p.cross_relations[0];

    Vec input = p.entity_points[0];
    if (inst == Space::Sphere) input[d - 1] -= p.center;
    if (inst == Space::Flat) input = ball::clipped(input);
    const Vec lg = ball::log_map0(input);
    Vec lin(d, 0.0);
    for (std::size_t i = 0; i < d; ++i) lin[i] = dot(cr.weight[i], lg);
    Vec step = ball::mobius_add(ball::exp_map0(lin), cr.bias);
    for (double& x : step) x = std::tanh(x);
    step[d - 1] = 0.0;
    const Vec expected = scaled(step, p.ring_radius() / norm(step));

    const Vec out = g_transform(p, 0, 0);
    REQUIRE(out.size() == d);
    REQUIRE(out[d - 1] == 0.0);
    REQUIRE(norm(out) == Catch::Approx(p.ring_radius()).margin(1e-12));
    for (std::size_t i = 0; i + 1 < d; ++i)
      REQUIRE(out[i] == Catch::Approx(expected[i]).margin(1e-12));
  }
}

TEST_CASE("cross transform survives a vanishing squashed vector") {
  testutil::Rng rng(17);
  const std::size_t d = 4;
  ParamStore p = make_params(Space::Sphere, Space::Ball, d, 2, 2, 1, 1, 1,
                             0.0, rng);
  for (Vec& row : p.cross_relations[0].weight) row.assign(d, 0.0);
  p.cross_relations[0].bias.assign(d, 0.0);
  const Vec out = g_transform(p, 0, 0);
  REQUIRE(out[0] == Catch::Approx(p.ring_radius()).margin(1e-15));
  for (std::size_t i = 1; i < d; ++i) REQUIRE(out[i] == 0.0);
}

TEST_CASE("cross score applies the ontology family to the transformed head") {
  testutil::Rng rng(18);
  const std::size_t d = 5;

  ParamStore pb = make_params(Space::Sphere, Space::Ball, d, 3, 3, 1, 1, 2,
                              0.1, rng);
  const Vec image_b = g_transform(pb, 1, 1);
  const RelationGeo& gb = pb.cross_relations[1].geo;
  REQUIRE(score_cross(pb, 1, 1, 2) ==
          Catch::Approx(ball::score(image_b, gb.stretch, gb.translation,
                                    pb.concept_points[2], 0.0,
                                    pb.concept_biases[2]))
              .margin(1e-12));

  ParamStore ps = make_params(Space::Sphere, Space::Sphere, d, 3, 3, 1, 1, 2,
                              0.0, rng);
  const Vec image_s = g_transform(ps, 1, 0);
  REQUIRE(score_cross(ps, 1, 0, 2) ==
          Catch::Approx(sphere::distance(
                            sphere::rotate(image_s,
                                           ps.cross_relations[0].geo.angles),
                            ps.concept_points[2]))
              .margin(1e-12));

  ParamStore pf = make_params(Space::Sphere, Space::Flat, d, 3, 3, 1, 1, 2,
                              0.0, rng);
  const Vec image_f = g_transform(pf, 1, 0);
  REQUIRE(score_cross(pf, 1, 0, 2) ==
          Catch::Approx(norm(sub(add(image_f,
                                     pf.cross_relations[0].geo.translation),
                                 pf.concept_points[2])))
              .margin(1e-12));
}

TEST_CASE("relation-averaged image is the mean over cross relations") {
  testutil::Rng rng(19);
  ParamStore p = make_params(Space::Sphere, Space::Ball, 5, 2, 2, 1, 1, 3,
                             0.0, rng);
  Vec expected(5, 0.0);
  for (int r = 0; r < 3; ++r) axpy(1.0 / 3.0, g_transform(p, 0, r), expected);
  const Vec got = g_mean(p, 0);
  for (std::size_t i = 0; i < 5; ++i)
    REQUIRE(got[i] == Catch::Approx(expected[i]).margin(1e-12));

  p.cross_relations.clear();
  REQUIRE_THROWS_AS(g_mean(p, 0), UnknownRelation);
}

TEST_CASE("hinge losses hit the margin when scores coincide") {
  testutil::Rng rng(20);
  ParamStore p = make_params(Space::Sphere, Space::Ball, 4, 3, 3, 1, 1, 1,
                             0.0, rng);
  p.margin_instance = 2.5;
  p.margin_ontology = 1.25;

  const std::vector<TriplePair> same = {{{0, 0, 1}, {0, 0, 1}}};
  REQUIRE(loss_instance(p, same) == Catch::Approx(2.5).margin(1e-12));
  REQUIRE(loss_ontology(p, same) == Catch::Approx(1.25).margin(1e-12));

  // Mixed bridge batch: one mean across both hinge kinds.
  const std::vector<BridgePair> mixed = {
      {TripleKind::Cross, {0, 0, 1}, {0, 0, 1}},
      {TripleKind::Cross, {1, 0, 2}, {1, 0, 2}},
      {TripleKind::Instance, {0, 0, 1}, {0, 0, 1}},
      {TripleKind::Instance, {1, 0, 2}, {1, 0, 2}},
  };
  REQUIRE(loss_bridge(p, mixed) ==
          Catch::Approx((1.25 + 1.25 + 2.5 + 2.5) / 4.0).margin(1e-12));

  REQUIRE(loss_instance(p, {}) == 0.0);
  REQUIRE(loss_ontology(p, {}) == 0.0);
  REQUIRE(loss_bridge(p, {}) == 0.0);
}

TEST_CASE("well-separated pairs give zero loss and no gradients") {
  ParamStore p;
  p.dim = 3;
  p.instance_space = Space::Sphere;
  p.ontology_space = Space::Ball;
  p.shell_norm = 0.5;
  p.margin_instance = 0.5;
  p.entity_points = {{0.5, 0.0, 0.0}, {-0.5, 0.0, 0.0}};
  p.entity_biases = {0.0, 0.0};
  RelationGeo identity;
  identity.angles = {0.0, 0.0};
  p.instance_relations = {identity};

  // Observed (0 -> 0) distance 0; corrupted (0 -> 1) distance pi.
  const std::vector<TriplePair> batch = {{{0, 0, 0}, {0, 0, 1}}};
  GradSink sink;
  REQUIRE(loss_instance_grad(p, batch, sink) == 0.0);
  REQUIRE(sink.entity_points.empty());
  REQUIRE(sink.instance_relations.empty());
  REQUIRE(sink.center == 0.0);
}

TEST_CASE("view losses match finite differences in every geometry") {
  check_view_grads(Space::Sphere, Space::Ball, 0.0, 101);
  check_view_grads(Space::Sphere, Space::Ball, 0.2, 102);
  check_view_grads(Space::Sphere, Space::Sphere, 0.0, 103);
  check_view_grads(Space::Sphere, Space::Flat, 0.0, 104);
  check_view_grads(Space::Ball, Space::Ball, 0.0, 105);
  check_view_grads(Space::Flat, Space::Ball, 0.0, 106);
}

TEST_CASE("bridge loss matches finite differences in every geometry") {
  check_bridge_grads(Space::Sphere, Space::Ball, 0.0, 201);
  check_bridge_grads(Space::Sphere, Space::Ball, 0.2, 202);
  check_bridge_grads(Space::Sphere, Space::Sphere, 0.0, 203);
  check_bridge_grads(Space::Sphere, Space::Flat, 0.0, 204);
  check_bridge_grads(Space::Ball, Space::Ball, 0.0, 205);
  check_bridge_grads(Space::Flat, Space::Ball, 0.0, 206);
}

TEST_CASE("negative sampling corrupts one side fairly and avoids the graph") {
  std::vector<RawTriple> inst, onto, cross;
  for (int i = 0; i < 12; ++i)
    inst.push_back({"e" + std::to_string(i), "r0",
                    "e" + std::to_string((i + 1) % 12)});
  for (int i = 0; i < 6; ++i)
    onto.push_back({"c" + std::to_string(i), "is_a",
                    "c" + std::to_string((i + 1) % 6)});
  for (int i = 0; i < 6; ++i)
    cross.push_back({"e" + std::to_string(i), "type_of",
                     "c" + std::to_string(i % 6)});
  const TwoViewKG kg = TwoViewKG::build(inst, onto, cross);

  Rng rng(7);
  int head_corruptions = 0;
  const int draws = 10000;
  for (int i = 0; i < draws; ++i) {
    const Triple& t = kg.instance_triples[i % kg.instance_triples.size()];
    const Triple neg = sample_negative(kg, TripleKind::Instance, t, rng);
    REQUIRE(!(neg == t));
    REQUIRE(!kg.contains(TripleKind::Instance, neg.head, neg.rel, neg.tail));
    REQUIRE((neg.head == t.head || neg.tail == t.tail));
    if (neg.head != t.head) ++head_corruptions;
  }
  const double ratio = static_cast<double>(head_corruptions) / draws;
  REQUIRE(std::abs(ratio - 0.5) < 0.03);

  for (int i = 0; i < 1000; ++i) {
    const Triple& t = kg.cross_triples[i % kg.cross_triples.size()];
    const Triple neg = sample_negative(kg, TripleKind::Cross, t, rng);
    REQUIRE(neg.head < static_cast<int>(kg.entities.size()));
    REQUIRE(neg.tail < static_cast<int>(kg.concepts.size()));
    REQUIRE(!kg.contains(TripleKind::Cross, neg.head, neg.rel, neg.tail));
  }
}

TEST_CASE("negative sampling reports exhaustion on a saturated graph") {
  const std::vector<RawTriple> inst = {
      {"a", "r", "a"}, {"a", "r", "b"}, {"b", "r", "a"}, {"b", "r", "b"}};
  const TwoViewKG kg = TwoViewKG::build(inst, {}, {});
  Rng rng(3);
  REQUIRE_THROWS_AS(
      sample_negative(kg, TripleKind::Instance, kg.instance_triples[0], rng),
      SamplingExhausted);
}
