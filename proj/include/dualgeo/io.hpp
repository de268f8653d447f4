// File formats: tab-separated triple files, the binary checkpoint container,
// and the plain-text embedding export.
#pragma once

#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "dualgeo/kg.hpp"
#include "dualgeo/train.hpp"

namespace dualgeo {

// ---------------------------------------------------------------------------
// Triple files: one triple per line, head <TAB> relation <TAB> tail.

inline std::vector<RawTriple> read_triple_file(const std::string& path) {
  std::ifstream in(path);
  if (!in)
    throw ParseError(path + ": cannot open");
  std::vector<RawTriple> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    RawTriple t;
    std::size_t first = line.find('\t');
    std::size_t second =
        first == std::string::npos ? first : line.find('\t', first + 1);
    if (first == std::string::npos || second == std::string::npos ||
        line.find('\t', second + 1) != std::string::npos)
      throw ParseError(path + ":" + std::to_string(lineno) +
                       ": expected exactly three tab-separated fields");
    t.head = line.substr(0, first);
    t.rel = line.substr(first + 1, second - first - 1);
    t.tail = line.substr(second + 1);
    if (t.head.empty() || t.rel.empty() || t.tail.empty())
      throw ParseError(path + ":" + std::to_string(lineno) +
                       ": empty field");
    out.push_back(std::move(t));
  }
  return out;
}

// Empty paths stand for absent files (e.g. a graph with no cross view).
inline TwoViewKG load_kg(const std::string& instance_path,
                         const std::string& ontology_path,
                         const std::string& cross_path) {
  auto read = [](const std::string& path) {
    return path.empty() ? std::vector<RawTriple>{} : read_triple_file(path);
  };
  return TwoViewKG::build(read(instance_path), read(ontology_path),
                          read(cross_path));
}

// Deterministic shuffle-split into train/valid/test by per-mille weights.
inline void split_triples(const std::vector<RawTriple>& all, int train_pm,
                          int valid_pm, std::uint64_t seed,
                          std::vector<RawTriple>& train,
                          std::vector<RawTriple>& valid,
                          std::vector<RawTriple>& test) {
  std::vector<std::size_t> order(all.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  Rng rng(seed);
  rng.shuffle(order);
  const std::size_t n_train = all.size() * train_pm / 1000;
  const std::size_t n_valid = all.size() * valid_pm / 1000;
  train.clear();
  valid.clear();
  test.clear();
  for (std::size_t i = 0; i < order.size(); ++i) {
    const RawTriple& t = all[order[i]];
    if (i < n_train)
      train.push_back(t);
    else if (i < n_train + n_valid)
      valid.push_back(t);
    else
      test.push_back(t);
  }
}

inline void write_triple_file(const std::string& path,
                              const std::vector<RawTriple>& triples) {
  std::ofstream out(path, std::ios::trunc);
  if (!out)
    throw ParseError(path + ": cannot open for writing");
  for (const RawTriple& t : triples)
    out << t.head << '\t' << t.rel << '\t' << t.tail << '\n';
  if (!out)
    throw ParseError(path + ": write failed");
}

// ---------------------------------------------------------------------------
// Checkpoints. Layout: magic, format version, payload size, FNV-1a 64 digest
// of the payload, payload bytes. Doubles travel as their exact bit patterns.

struct Checkpoint {
  TrainConfig config;
  std::string instance_path, ontology_path, cross_path;
  int epoch = 0;
  std::string rng_state;
  std::vector<std::string> entity_names, concept_names;
  std::vector<std::string> instance_relation_names, ontology_relation_names,
      cross_relation_names;
  ParamStore params;
};

namespace detail {

inline constexpr char kCkptMagic[8] = {'D', 'G', 'E', 'O',
                                       'C', 'K', 'P', 'T'};
inline constexpr std::uint32_t kCkptVersion = 1;

inline std::uint64_t fnv1a(const std::string& bytes) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

struct ByteWriter {
  std::string bytes;

  void u8(std::uint8_t v) { bytes.push_back(static_cast<char>(v)); }
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) u8(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void u64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) u8(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void i32(std::int32_t v) { u32(static_cast<std::uint32_t>(v)); }
  void f64(double v) {
    std::uint64_t bits;
    std::memcpy(&bits, &v, sizeof bits);
    u64(bits);
  }
  void str(const std::string& s) {
    u64(s.size());
    bytes.append(s);
  }
  void vec(const Vec& v) {
    u64(v.size());
    for (double x : v) f64(x);
  }
  void mat(const Mat& m) {
    u64(m.size());
    for (const Vec& row : m) vec(row);
  }
  void names(const std::vector<std::string>& list) {
    u64(list.size());
    for (const std::string& s : list) str(s);
  }
};

struct ByteReader {
  const std::string& bytes;
  std::size_t pos = 0;

  void need(std::size_t n) const {
    if (pos + n > bytes.size())
      throw ChecksumMismatch("checkpoint payload truncated");
  }
  std::uint8_t u8() {
    need(1);
    return static_cast<std::uint8_t>(bytes[pos++]);
  }
  std::uint32_t u32() {
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= std::uint32_t{u8()} << (8 * i);
    return v;
  }
  std::uint64_t u64() {
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= std::uint64_t{u8()} << (8 * i);
    return v;
  }
  std::int32_t i32() { return static_cast<std::int32_t>(u32()); }
  double f64() {
    const std::uint64_t bits = u64();
    double v;
    std::memcpy(&v, &bits, sizeof v);
    return v;
  }
  std::string str() {
    const std::uint64_t n = u64();
    need(n);
    std::string s = bytes.substr(pos, n);
    pos += n;
    return s;
  }
  Vec vec() {
    const std::uint64_t n = u64();
    need(n * 8);
    Vec v(n);
    for (double& x : v) x = f64();
    return v;
  }
  Mat mat() {
    const std::uint64_t n = u64();
    Mat m(n);
    for (Vec& row : m) row = vec();
    return m;
  }
  std::vector<std::string> names() {
    const std::uint64_t n = u64();
    std::vector<std::string> list(n);
    for (std::string& s : list) s = str();
    return list;
  }
};

inline void write_geo(ByteWriter& w, const RelationGeo& g) {
  w.vec(g.angles);
  w.vec(g.stretch);
  w.vec(g.translation);
}

inline RelationGeo read_geo(ByteReader& r) {
  RelationGeo g;
  g.angles = r.vec();
  g.stretch = r.vec();
  g.translation = r.vec();
  return g;
}

inline std::string encode_checkpoint(const Checkpoint& c) {
  ByteWriter w;
  const TrainConfig& cfg = c.config;
  w.u64(cfg.dim);
  w.f64(cfg.lr);
  w.f64(cfg.margin_instance);
  w.f64(cfg.margin_ontology);
  w.i32(cfg.epochs);
  w.u64(cfg.batch);
  w.i32(cfg.negative_ratio);
  w.u64(cfg.seed);
  w.u8(cfg.variant == Variant::LearnableCenter ? 1 : 0);
  w.u8(static_cast<std::uint8_t>(cfg.instance_space));
  w.u8(static_cast<std::uint8_t>(cfg.ontology_space));
  w.i32(cfg.checkpoint_every);
  w.f64(cfg.shell_norm);
  for (int s : cfg.step_order) w.u8(static_cast<std::uint8_t>(s));

  w.str(c.instance_path);
  w.str(c.ontology_path);
  w.str(c.cross_path);
  w.i32(c.epoch);
  w.str(c.rng_state);
  w.names(c.entity_names);
  w.names(c.concept_names);
  w.names(c.instance_relation_names);
  w.names(c.ontology_relation_names);
  w.names(c.cross_relation_names);

  const ParamStore& p = c.params;
  w.u64(p.dim);
  w.u8(static_cast<std::uint8_t>(p.instance_space));
  w.u8(static_cast<std::uint8_t>(p.ontology_space));
  w.f64(p.shell_norm);
  w.f64(p.center);
  w.f64(p.margin_instance);
  w.f64(p.margin_ontology);
  w.mat(p.entity_points);
  w.vec(p.entity_biases);
  w.mat(p.concept_points);
  w.vec(p.concept_biases);
  w.u64(p.instance_relations.size());
  for (const RelationGeo& g : p.instance_relations) write_geo(w, g);
  w.u64(p.ontology_relations.size());
  for (const RelationGeo& g : p.ontology_relations) write_geo(w, g);
  w.u64(p.cross_relations.size());
  for (const CrossRelation& cr : p.cross_relations) {
    write_geo(w, cr.geo);
    w.mat(cr.weight);
    w.vec(cr.bias);
  }
  return std::move(w.bytes);
}

inline Checkpoint decode_checkpoint(const std::string& payload) {
  ByteReader r{payload};
  Checkpoint c;
  TrainConfig& cfg = c.config;
  cfg.dim = r.u64();
  cfg.lr = r.f64();
  cfg.margin_instance = r.f64();
  cfg.margin_ontology = r.f64();
  cfg.epochs = r.i32();
  cfg.batch = r.u64();
  cfg.negative_ratio = r.i32();
  cfg.seed = r.u64();
  cfg.variant = r.u8() ? Variant::LearnableCenter : Variant::FixedCenter;
  cfg.instance_space = static_cast<Space>(r.u8());
  cfg.ontology_space = static_cast<Space>(r.u8());
  cfg.checkpoint_every = r.i32();
  cfg.shell_norm = r.f64();
  for (int& s : cfg.step_order) s = r.u8();

  c.instance_path = r.str();
  c.ontology_path = r.str();
  c.cross_path = r.str();
  c.epoch = r.i32();
  c.rng_state = r.str();
  c.entity_names = r.names();
  c.concept_names = r.names();
  c.instance_relation_names = r.names();
  c.ontology_relation_names = r.names();
  c.cross_relation_names = r.names();

  ParamStore& p = c.params;
  p.dim = r.u64();
  p.instance_space = static_cast<Space>(r.u8());
  p.ontology_space = static_cast<Space>(r.u8());
  p.shell_norm = r.f64();
  p.center = r.f64();
  p.margin_instance = r.f64();
  p.margin_ontology = r.f64();
  p.entity_points = r.mat();
  p.entity_biases = r.vec();
  p.concept_points = r.mat();
  p.concept_biases = r.vec();
  p.instance_relations.resize(r.u64());
  for (RelationGeo& g : p.instance_relations) g = read_geo(r);
  p.ontology_relations.resize(r.u64());
  for (RelationGeo& g : p.ontology_relations) g = read_geo(r);
  p.cross_relations.resize(r.u64());
  for (CrossRelation& cr : p.cross_relations) {
    cr.geo = read_geo(r);
    cr.weight = r.mat();
    cr.bias = r.vec();
  }
  if (r.pos != payload.size())
    throw ChecksumMismatch("checkpoint payload has trailing bytes");
  return c;
}

}  // namespace detail

inline void save_checkpoint(const std::string& path, const Checkpoint& c) {
  const std::string payload = detail::encode_checkpoint(c);
  detail::ByteWriter header;
  header.bytes.append(detail::kCkptMagic, sizeof detail::kCkptMagic);
  header.u32(detail::kCkptVersion);
  header.u64(payload.size());
  header.u64(detail::fnv1a(payload));
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out)
    throw ParseError(path + ": cannot open for writing");
  out.write(header.bytes.data(),
            static_cast<std::streamsize>(header.bytes.size()));
  out.write(payload.data(), static_cast<std::streamsize>(payload.size()));
  if (!out)
    throw ParseError(path + ": write failed");
}

inline Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw ParseError(path + ": cannot open");
  std::ostringstream buf;
  buf << in.rdbuf();
  const std::string bytes = buf.str();

  constexpr std::size_t header_size = 8 + 4 + 8 + 8;
  if (bytes.size() < header_size)
    throw ChecksumMismatch(path + ": file shorter than checkpoint header");
  if (std::memcmp(bytes.data(), detail::kCkptMagic,
                  sizeof detail::kCkptMagic) != 0)
    throw ChecksumMismatch(path + ": bad magic bytes");

  detail::ByteReader r{bytes};
  r.pos = 8;
  const std::uint32_t version = r.u32();
  if (version != detail::kCkptVersion)
    throw UnsupportedVersion(path + ": checkpoint format version " +
                             std::to_string(version));
  const std::uint64_t length = r.u64();
  const std::uint64_t digest = r.u64();
  if (bytes.size() != header_size + length)
    throw ChecksumMismatch(path + ": payload length mismatch");
  const std::string payload = bytes.substr(header_size);
  if (detail::fnv1a(payload) != digest)
    throw ChecksumMismatch(path + ": payload digest mismatch");
  return detail::decode_checkpoint(payload);
}

// ---------------------------------------------------------------------------
// Embedding export: one row per entity and concept. Entity rows carry
// id, kind, space, norm and the coordinates; concept rows append the bias.

inline void export_embeddings(const std::string& path, const Checkpoint& c) {
  std::ofstream out(path, std::ios::trunc);
  if (!out)
    throw ParseError(path + ": cannot open for writing");
  char num[64];
  auto put = [&](double v) {
    std::snprintf(num, sizeof num, "%.17g", v);
    out << '\t' << num;
  };
  const ParamStore& p = c.params;
  for (std::size_t i = 0; i < c.entity_names.size(); ++i) {
    const Vec& v = p.entity_points[i];
    out << c.entity_names[i] << "\tentity\t" << space_name(p.instance_space);
    put(norm(v));
    for (double x : v) put(x);
    out << '\n';
  }
  for (std::size_t i = 0; i < c.concept_names.size(); ++i) {
    const Vec& v = p.concept_points[i];
    out << c.concept_names[i] << "\tconcept\t" << space_name(p.ontology_space);
    put(norm(v));
    for (double x : v) put(x);
    put(p.concept_biases[i]);
    out << '\n';
  }
  if (!out)
    throw ParseError(path + ": write failed");
}

}  // namespace dualgeo
