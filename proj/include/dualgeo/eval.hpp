// Ranking evaluation: triple completion over either view and entity typing.
// Ranks use mean-of-tie-group positions; filtered mode removes other
// known-true answers from the candidate pool before ranking.
#pragma once

#include <map>
#include <unordered_map>
#include <unordered_set>

#include "dualgeo/model.hpp"

namespace dualgeo {

struct RankResult {
  int query = -1;      // index into the test list
  double rank = 1.0;   // mean-of-tie-group rank of the gold answer
  int pool = 0;        // candidates after filtering
};

// Extra known-true triples (usually the test split) merged into the filter.
class TripleSet {
 public:
  void add(const Triple& t) { keys_.insert(TwoViewKG::key(t.head, t.rel, t.tail)); }
  bool contains(int h, int r, int t) const {
    return keys_.count(TwoViewKG::key(h, r, t)) != 0;
  }

 private:
  std::unordered_set<std::uint64_t> keys_;
};

// Rank of `gold` within `scores`, skipping excluded candidates.  Ties place
// gold at the mean rank of its tie group.
inline RankResult rank_of(const std::vector<double>& scores, std::size_t gold,
                          bool ascending,
                          const std::vector<char>* excluded = nullptr) {
  if (gold >= scores.size())
    throw InvalidQuery("gold candidate outside the pool");
  const double gs = scores[gold];
  int better = 0, ties = 0, pool = 0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (excluded && (*excluded)[i] && i != gold) continue;
    ++pool;
    if (i == gold) continue;
    if (scores[i] == gs)
      ++ties;
    else if (ascending ? (scores[i] < gs) : (scores[i] > gs))
      ++better;
  }
  RankResult r;
  r.rank = better + 1.0 + ties / 2.0;
  r.pool = pool;
  return r;
}

inline double mrr(const std::vector<RankResult>& results) {
  if (results.empty()) throw EmptyEvaluation("mrr over zero queries");
  double s = 0.0;
  for (const RankResult& r : results) s += 1.0 / r.rank;
  return s / static_cast<double>(results.size());
}

inline double hits_at_k(const std::vector<RankResult>& results, double k) {
  if (results.empty()) throw EmptyEvaluation("hits@k over zero queries");
  double s = 0.0;
  for (const RankResult& r : results) s += (r.rank <= k) ? 1.0 : 0.0;
  return s / static_cast<double>(results.size());
}

// Scores every candidate tail for a (head, rel, ?) query in the given view.
inline std::vector<double> tail_scores(const ParamStore& p,
                                       const TwoViewKG& kg, TripleKind kind,
                                       int head, int rel) {
  std::vector<double> scores;
  switch (kind) {
    case TripleKind::Instance: {
      scores.resize(kg.entities.size());
      for (std::size_t t = 0; t < scores.size(); ++t)
        scores[t] = score_instance(p, head, rel, static_cast<int>(t));
      break;
    }
    case TripleKind::Ontology: {
      scores.resize(kg.concepts.size());
      for (std::size_t t = 0; t < scores.size(); ++t)
        scores[t] = score_ontology(p, head, rel, static_cast<int>(t));
      break;
    }
    case TripleKind::Cross: {
      scores.resize(kg.concepts.size());
      for (std::size_t t = 0; t < scores.size(); ++t)
        scores[t] = score_cross(p, head, rel, static_cast<int>(t));
      break;
    }
  }
  return scores;
}

inline bool view_ascending(const ParamStore& p, TripleKind kind) {
  return kind == TripleKind::Instance ? score_ascending(p.instance_space)
                                      : score_ascending(p.ontology_space);
}

// Rank of the gold tail for one query.  `extra` adds known-true triples
// beyond the training KG (e.g. the test split) to the filter.
inline RankResult rank_query(const TwoViewKG& kg, const ParamStore& p,
                             TripleKind kind, const Triple& query,
                             bool filtered, const TripleSet* extra = nullptr) {
  const std::vector<double> scores =
      tail_scores(p, kg, kind, query.head, query.rel);
  if (query.tail < 0 || static_cast<std::size_t>(query.tail) >= scores.size())
    throw InvalidQuery("gold tail outside the candidate pool");
  std::vector<char> excluded;
  if (filtered) {
    excluded.assign(scores.size(), 0);
    for (std::size_t t = 0; t < scores.size(); ++t) {
      const int ti = static_cast<int>(t);
      if (ti == query.tail) continue;
      if (kg.contains(kind, query.head, query.rel, ti) ||
          (extra && extra->contains(query.head, query.rel, ti)))
        excluded[t] = 1;
    }
  }
  RankResult r = rank_of(scores, static_cast<std::size_t>(query.tail),
                         view_ascending(p, kind), filtered ? &excluded : nullptr);
  return r;
}

struct CompletionMetrics {
  double mrr = 0.0;
  std::map<int, double> hits;  // k -> fraction
  int queries = 0;
};

inline CompletionMetrics evaluate_completion(const TwoViewKG& kg,
                                             const ParamStore& p,
                                             const std::vector<Triple>& test,
                                             TripleKind kind, bool filtered,
                                             const std::vector<int>& ks = {1, 3,
                                                                           10}) {
  TripleSet extra;
  for (const Triple& t : test) extra.add(t);
  std::vector<RankResult> results;
  results.reserve(test.size());
  for (std::size_t i = 0; i < test.size(); ++i) {
    RankResult r = rank_query(kg, p, kind, test[i], filtered, &extra);
    r.query = static_cast<int>(i);
    results.push_back(r);
  }
  CompletionMetrics m;
  m.queries = static_cast<int>(results.size());
  m.mrr = mrr(results);
  for (int k : ks) m.hits[k] = hits_at_k(results, k);
  return m;
}

// Distance between a concept-space image and a concept in the ontology
// geometry; typing ranks ascending on this.
inline double typing_distance(const ParamStore& p, const Vec& image, int c) {
  p.check_concept(c);
  switch (p.ontology_space) {
    case Space::Ball: return ball::distance(image, p.concept_points[c]);
    case Space::Sphere: return sphere::distance(image, p.concept_points[c]);
    default: return norm(sub(image, p.concept_points[c]));
  }
}

struct TypingMetrics {
  double mrr = 0.0;
  double accuracy = 0.0;  // = hits@1
  std::map<int, double> hits;
  int queries = 0;
  int skipped = 0;
};

// Ranks each test pair's gold concept by distance to the relation-averaged
// transform image.  Entities without usable transform parameters (no cross
// relations trained) are skipped and counted.
inline TypingMetrics evaluate_typing(const TwoViewKG& kg, const ParamStore& p,
                                     const std::vector<Triple>& test,
                                     bool filtered,
                                     const std::vector<int>& ks = {1, 3, 10}) {
  TypingMetrics m;
  if (test.empty()) throw EmptyEvaluation("typing over zero queries");

  // Filter: every concept known true for the entity under any cross relation.
  std::unordered_map<int, std::unordered_set<int>> known;
  if (filtered) {
    for (const Triple& t : kg.cross_triples) known[t.head].insert(t.tail);
    for (const Triple& t : test) known[t.head].insert(t.tail);
  }

  std::unordered_map<int, Vec> images;
  std::vector<RankResult> results;
  for (std::size_t i = 0; i < test.size(); ++i) {
    const Triple& q = test[i];
    if (q.head < 0 ||
        static_cast<std::size_t>(q.head) >= p.entity_points.size() ||
        p.cross_relations.empty()) {
      ++m.skipped;
      continue;
    }
    auto it = images.find(q.head);
    if (it == images.end()) it = images.emplace(q.head, g_mean(p, q.head)).first;

    std::vector<double> scores(kg.concepts.size());
    for (std::size_t c = 0; c < scores.size(); ++c)
      scores[c] = typing_distance(p, it->second, static_cast<int>(c));

    std::vector<char> excluded;
    if (filtered) {
      excluded.assign(scores.size(), 0);
      const auto ks_it = known.find(q.head);
      if (ks_it != known.end())
        for (int c : ks_it->second)
          if (c != q.tail) excluded[c] = 1;
    }
    RankResult r = rank_of(scores, static_cast<std::size_t>(q.tail),
                           /*ascending=*/true, filtered ? &excluded : nullptr);
    r.query = static_cast<int>(i);
    results.push_back(r);
  }

  if (results.empty())
    throw EmptyEvaluation("typing: all " + std::to_string(m.skipped) +
                          " queries skipped");
  m.queries = static_cast<int>(results.size());
  m.mrr = mrr(results);
  for (int k : ks) m.hits[k] = hits_at_k(results, k);
  m.accuracy = hits_at_k(results, 1);
  return m;
}

}  // namespace dualgeo
