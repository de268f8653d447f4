// Two-view knowledge graph: instance view (entity-entity triples), ontology
// view (concept-concept), and the cross view linking entities to concepts.
// Vocabularies are interned in first-appearance order so construction is
// deterministic.
#pragma once

#include <cstdint>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "dualgeo/core.hpp"

namespace dualgeo {

enum class TripleKind { Instance, Ontology, Cross };

struct Triple {
  int head = -1;
  int rel = -1;
  int tail = -1;
  friend bool operator==(const Triple&, const Triple&) = default;
};

struct RawTriple {
  std::string head, rel, tail;
};

class TwoViewKG {
 public:
  std::vector<std::string> entities, concepts;
  std::vector<std::string> instance_relations, ontology_relations,
      cross_relations;
  std::unordered_map<std::string, int> entity_id, concept_id;
  std::unordered_map<std::string, int> instance_relation_id,
      ontology_relation_id, cross_relation_id;
  std::vector<Triple> instance_triples, ontology_triples, cross_triples;
  std::vector<char> bridge;  // per entity: head of at least one cross triple
  int duplicates_dropped = 0;

  static TwoViewKG build(const std::vector<RawTriple>& instance,
                         const std::vector<RawTriple>& ontology,
                         const std::vector<RawTriple>& cross) {
    TwoViewKG kg;
    auto intern = [](const std::string& name, std::vector<std::string>& names,
                     std::unordered_map<std::string, int>& ids) {
      if (name.empty()) throw SchemaViolation("empty identifier");
      auto it = ids.find(name);
      if (it != ids.end()) return it->second;
      const int id = static_cast<int>(names.size());
      names.push_back(name);
      ids.emplace(name, id);
      return id;
    };

    auto insert = [&kg](std::vector<Triple>& list,
                        std::unordered_set<std::uint64_t>& index, int h, int r,
                        int t) {
      const std::uint64_t k = key(h, r, t);
      if (!index.insert(k).second) {
        ++kg.duplicates_dropped;
        return;
      }
      list.push_back({h, r, t});
    };

    for (const RawTriple& raw : instance) {
      const int h = intern(raw.head, kg.entities, kg.entity_id);
      const int r =
          intern(raw.rel, kg.instance_relations, kg.instance_relation_id);
      const int t = intern(raw.tail, kg.entities, kg.entity_id);
      insert(kg.instance_triples, kg.instance_index_, h, r, t);
    }
    for (const RawTriple& raw : ontology) {
      const int h = intern(raw.head, kg.concepts, kg.concept_id);
      const int r =
          intern(raw.rel, kg.ontology_relations, kg.ontology_relation_id);
      const int t = intern(raw.tail, kg.concepts, kg.concept_id);
      insert(kg.ontology_triples, kg.ontology_index_, h, r, t);
    }
    for (const RawTriple& raw : cross) {
      const int h = intern(raw.head, kg.entities, kg.entity_id);
      const int r = intern(raw.rel, kg.cross_relations, kg.cross_relation_id);
      const int t = intern(raw.tail, kg.concepts, kg.concept_id);
      insert(kg.cross_triples, kg.cross_index_, h, r, t);
    }

    // The two node vocabularies must not overlap.
    for (const std::string& name : kg.entities)
      if (kg.concept_id.count(name))
        throw SchemaViolation("identifier used as both entity and concept: " +
                              name);
    // Relation families are pairwise disjoint as well.
    for (const std::string& name : kg.instance_relations)
      if (kg.ontology_relation_id.count(name) ||
          kg.cross_relation_id.count(name))
        throw SchemaViolation("relation in more than one family: " + name);
    for (const std::string& name : kg.ontology_relations)
      if (kg.cross_relation_id.count(name))
        throw SchemaViolation("relation in more than one family: " + name);

    if (kg.entities.size() >= kMaxId || kg.concepts.size() >= kMaxId)
      throw SchemaViolation("vocabulary too large");

    kg.bridge.assign(kg.entities.size(), 0);
    for (const Triple& t : kg.cross_triples) kg.bridge[t.head] = 1;
    return kg;
  }

  bool contains(TripleKind kind, int h, int r, int t) const {
    return index(kind).count(key(h, r, t)) != 0;
  }

  const std::vector<Triple>& triples(TripleKind kind) const {
    switch (kind) {
      case TripleKind::Instance: return instance_triples;
      case TripleKind::Ontology: return ontology_triples;
      default: return cross_triples;
    }
  }

  std::size_t bridge_count() const {
    std::size_t n = 0;
    for (char b : bridge) n += (b != 0);
    return n;
  }

  static std::uint64_t key(int h, int r, int t) {
    return (static_cast<std::uint64_t>(h) << 42) |
           (static_cast<std::uint64_t>(r) << 21) |
           static_cast<std::uint64_t>(t);
  }

 private:
  static constexpr std::size_t kMaxId = 1u << 21;

  const std::unordered_set<std::uint64_t>& index(TripleKind kind) const {
    switch (kind) {
      case TripleKind::Instance: return instance_index_;
      case TripleKind::Ontology: return ontology_index_;
      default: return cross_index_;
    }
  }

  std::unordered_set<std::uint64_t> instance_index_, ontology_index_,
      cross_index_;
};

}  // namespace dualgeo
