// Command line front end: train / eval / export subcommands.
//
// Exit codes: 0 success, 1 usage error, 2 data error, 3 numerical divergence.

#include <cstdio>
#include <cstring>
#include <fstream>
#include <functional>
#include <map>
#include <string>
#include <type_traits>
#include <unordered_map>
#include <vector>

#include <CLI11.hpp>

#include "dualgeo/dualgeo.hpp"

namespace {

using namespace dualgeo;

// ---------------------------------------------------------------------------
// shared option plumbing

struct TrainOptions {
  std::string inst, onto, cross;
  std::string out = "model.ckpt";
  std::string resume;
  std::string split;  // "a/b/c" in parts per thousand
  std::string config;
  TrainConfig cfg;
  std::string variant = "so-fc";
  std::string space_inst = "sphere";
  std::string space_onto = "ball";
  bool quiet = false;
};

struct EvalOptions {
  std::string checkpoint;
  std::string task = "completion-inst";
  std::string test;
  std::string out = "metrics.tsv";
  std::string ks = "1,3,10";
  std::string config;
  bool filtered = true;
};

struct ExportOptions {
  std::string checkpoint;
  std::string out;
  std::string config;
};

// --- config files -----------------------------------------------------------
//
// Plain `key = value` lines mirroring the long flags of the subcommand the
// file is passed to; '#' starts a comment.  Flags given on the command line
// win over the file.

std::string trim(const std::string& s) {
  const char* ws = " \t\r";
  const std::size_t a = s.find_first_not_of(ws);
  if (a == std::string::npos) return "";
  const std::size_t b = s.find_last_not_of(ws);
  return s.substr(a, b - a + 1);
}

using ConfigSetter = std::function<void(const std::string&)>;
using ConfigTable = std::map<std::string, ConfigSetter>;

ConfigSetter bind_string(std::string& slot) {
  return [&slot](const std::string& v) { slot = v; };
}

template <typename T>
ConfigSetter bind_number(T& slot, const std::string& key) {
  return [&slot, key](const std::string& v) {
    try {
      std::size_t used = 0;
      if constexpr (std::is_floating_point_v<T>) {
        slot = static_cast<T>(std::stod(v, &used));
      } else {
        slot = static_cast<T>(std::stoll(v, &used));
      }
      if (used != v.size()) throw std::invalid_argument(v);
    } catch (const std::exception&) {
      throw UsageError("config key '" + key + "': bad number '" + v + "'");
    }
  };
}

ConfigSetter bind_bool(bool& slot, const std::string& key, bool value = true) {
  return [&slot, key, value](const std::string& v) {
    if (v == "true" || v == "1" || v == "yes" || v == "on")
      slot = value;
    else if (v == "false" || v == "0" || v == "no" || v == "off")
      slot = !value;
    else
      throw UsageError("config key '" + key + "': bad boolean '" + v + "'");
  };
}

// Applies `path` to options the command line left untouched.
void apply_config(const CLI::App& sub, const std::string& path,
                  const ConfigTable& table) {
  std::ifstream in(path);
  if (!in) throw ParseError(path + ": cannot open");
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::size_t hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    if (trim(line).empty()) continue;
    const std::size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw ParseError(path + ":" + std::to_string(lineno) +
                       ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    const auto it = table.find(key);
    if (it == table.end())
      throw UsageError(path + ":" + std::to_string(lineno) +
                       ": unknown config key '" + key + "'");
    if (sub.count("--" + key) > 0) continue;  // explicit flag wins
    it->second(value);
  }
}

ConfigTable train_config_table(TrainOptions& t) {
  ConfigTable m;
  m["inst"] = bind_string(t.inst);
  m["onto"] = bind_string(t.onto);
  m["cross"] = bind_string(t.cross);
  m["dim"] = bind_number(t.cfg.dim, "dim");
  m["lr"] = bind_number(t.cfg.lr, "lr");
  m["margin-inst"] = bind_number(t.cfg.margin_instance, "margin-inst");
  m["margin-onto"] = bind_number(t.cfg.margin_ontology, "margin-onto");
  m["epochs"] = bind_number(t.cfg.epochs, "epochs");
  m["batch"] = bind_number(t.cfg.batch, "batch");
  m["neg-ratio"] = bind_number(t.cfg.negative_ratio, "neg-ratio");
  m["seed"] = bind_number(t.cfg.seed, "seed");
  m["variant"] = bind_string(t.variant);
  m["space-inst"] = bind_string(t.space_inst);
  m["space-onto"] = bind_string(t.space_onto);
  m["out"] = bind_string(t.out);
  m["checkpoint-every"] = bind_number(t.cfg.checkpoint_every,
                                      "checkpoint-every");
  m["shell-norm"] = bind_number(t.cfg.shell_norm, "shell-norm");
  m["split"] = bind_string(t.split);
  m["resume"] = bind_string(t.resume);
  m["quiet"] = bind_bool(t.quiet, "quiet");
  return m;
}

ConfigTable eval_config_table(EvalOptions& e) {
  ConfigTable m;
  m["checkpoint"] = bind_string(e.checkpoint);
  m["task"] = bind_string(e.task);
  m["test"] = bind_string(e.test);
  m["filtered"] = bind_bool(e.filtered, "filtered");
  m["raw"] = bind_bool(e.filtered, "raw", false);
  m["k"] = bind_string(e.ks);
  m["out"] = bind_string(e.out);
  return m;
}

ConfigTable export_config_table(ExportOptions& x) {
  ConfigTable m;
  m["checkpoint"] = bind_string(x.checkpoint);
  m["out"] = bind_string(x.out);
  return m;
}

Space parse_space(const std::string& s) {
  if (s == "sphere") return Space::Sphere;
  if (s == "ball") return Space::Ball;
  if (s == "flat") return Space::Flat;
  throw UsageError("unknown space '" + s + "' (expected sphere, ball or flat)");
}

Variant parse_variant(const std::string& s) {
  if (s == "so-fc") return Variant::FixedCenter;
  if (s == "so-lc") return Variant::LearnableCenter;
  throw UsageError("unknown variant '" + s + "' (expected so-fc or so-lc)");
}

std::vector<int> parse_ks(const std::string& s) {
  std::vector<int> ks;
  std::size_t pos = 0;
  while (pos <= s.size()) {
    std::size_t comma = s.find(',', pos);
    if (comma == std::string::npos) comma = s.size();
    const std::string tok = s.substr(pos, comma - pos);
    try {
      std::size_t used = 0;
      const int k = std::stoi(tok, &used);
      if (used != tok.size() || k < 1) throw std::invalid_argument(tok);
      ks.push_back(k);
    } catch (const std::exception&) {
      throw UsageError("bad -k value '" + tok + "'");
    }
    pos = comma + 1;
  }
  if (ks.empty()) throw UsageError("-k needs at least one cutoff");
  return ks;
}

// "800/100/100": thousandths for train/valid/test, summing to 1000.
void parse_split(const std::string& s, int& train, int& valid, int& test) {
  int parts[3];
  char extra;
  if (std::sscanf(s.c_str(), "%d/%d/%d%c", &parts[0], &parts[1], &parts[2],
                  &extra) != 3 ||
      parts[0] < 0 || parts[1] < 0 || parts[2] < 0 ||
      parts[0] + parts[1] + parts[2] != 1000)
    throw UsageError("--split wants a/b/c with a+b+c = 1000, got '" + s + "'");
  train = parts[0];
  valid = parts[1];
  test = parts[2];
}

// Splits one triple file into <path>.train/.valid/.test and returns the
// training-part path.  Empty input path stays empty.
std::string split_file(const std::string& path, int train_pm, int valid_pm,
                       std::uint64_t seed) {
  if (path.empty()) return path;
  const auto all = read_triple_file(path);
  std::vector<RawTriple> train, valid, test;
  split_triples(all, train_pm, valid_pm, seed, train, valid, test);
  write_triple_file(path + ".train", train);
  write_triple_file(path + ".valid", valid);
  write_triple_file(path + ".test", test);
  std::fprintf(stderr, "split %s: %zu train / %zu valid / %zu test\n",
               path.c_str(), train.size(), valid.size(), test.size());
  return path + ".train";
}

void write_metric(FILE* f, const char* name, double value) {
  std::fprintf(f, "%s\t%.17g\n", name, value);
}

// ---------------------------------------------------------------------------
// train

int run_train(TrainOptions& o) {
  o.cfg.variant = parse_variant(o.variant);
  o.cfg.instance_space = parse_space(o.space_inst);
  o.cfg.ontology_space = parse_space(o.space_onto);
  if (o.resume.empty() && o.inst.empty() && o.onto.empty() && o.cross.empty())
    throw UsageError("train needs at least one of --inst/--onto/--cross");

  std::string inst = o.inst, onto = o.onto, cross = o.cross;
  if (!o.split.empty()) {
    int tr = 0, va = 0, te = 0;
    parse_split(o.split, tr, va, te);
    inst = split_file(inst, tr, va, o.cfg.seed);
    onto = split_file(onto, tr, va, o.cfg.seed);
    cross = split_file(cross, tr, va, o.cfg.seed);
  }

  Checkpoint ckpt;
  FitResult fitted;
  if (!o.resume.empty()) {
    ckpt = load_checkpoint(o.resume);
    const int target_epochs = o.cfg.epochs;
    o.cfg = ckpt.config;
    o.cfg.epochs = target_epochs;
    if (inst.empty() && onto.empty() && cross.empty()) {
      inst = ckpt.instance_path;
      onto = ckpt.ontology_path;
      cross = ckpt.cross_path;
    }
    const TwoViewKG kg = load_kg(inst, onto, cross);
    if (kg.duplicates_dropped > 0)
      std::fprintf(stderr, "dropped %d duplicate triples\n",
                   kg.duplicates_dropped);
    Rng rng;
    rng.load_state(ckpt.rng_state);
    auto hook = [&](int epoch, const ParamStore& p, const Rng& r) {
      Checkpoint c{o.cfg, inst, onto, cross, epoch, r.save_state(),
                   kg.entities, kg.concepts, kg.instance_relations,
                   kg.ontology_relations, kg.cross_relations, p};
      save_checkpoint(o.out, c);
    };
    fitted = fit_from(kg, o.cfg, ckpt.params, rng, ckpt.epoch, hook);
    ckpt = Checkpoint{o.cfg, inst, onto, cross, o.cfg.epochs,
                      fitted.rng.save_state(), kg.entities, kg.concepts,
                      kg.instance_relations, kg.ontology_relations,
                      kg.cross_relations, fitted.params};
  } else {
    o.cfg.validate();
    const TwoViewKG kg = load_kg(inst, onto, cross);
    if (kg.duplicates_dropped > 0)
      std::fprintf(stderr, "dropped %d duplicate triples\n",
                   kg.duplicates_dropped);
    auto hook = [&](int epoch, const ParamStore& p, const Rng& r) {
      Checkpoint c{o.cfg, inst, onto, cross, epoch, r.save_state(),
                   kg.entities, kg.concepts, kg.instance_relations,
                   kg.ontology_relations, kg.cross_relations, p};
      save_checkpoint(o.out, c);
    };
    fitted = fit(kg, o.cfg, hook);
    ckpt = Checkpoint{o.cfg, inst, onto, cross, o.cfg.epochs,
                      fitted.rng.save_state(), kg.entities, kg.concepts,
                      kg.instance_relations, kg.ontology_relations,
                      kg.cross_relations, fitted.params};
  }

  if (!o.quiet) {
    for (std::size_t i = 0; i < fitted.trace.size(); ++i) {
      const EpochLosses& l = fitted.trace[i];
      std::fprintf(stderr, "epoch %zu  inst %.6f  onto %.6f  bridge %.6f\n",
                   i + 1, l.instance, l.ontology, l.bridge);
    }
  }
  save_checkpoint(o.out, ckpt);

  if (!fitted.trace.empty()) {
    const EpochLosses& last = fitted.trace.back();
    write_metric(stdout, "final_loss_instance", last.instance);
    write_metric(stdout, "final_loss_ontology", last.ontology);
    write_metric(stdout, "final_loss_bridge", last.bridge);
  }
  std::printf("checkpoint\t%s\n", o.out.c_str());
  return 0;
}

// ---------------------------------------------------------------------------
// eval

std::unordered_map<std::string, int> index_names(
    const std::vector<std::string>& names) {
  std::unordered_map<std::string, int> m;
  m.reserve(names.size());
  for (std::size_t i = 0; i < names.size(); ++i)
    m.emplace(names[i], static_cast<int>(i));
  return m;
}

// Resolves raw name triples against the checkpoint vocabulary; unresolvable
// rows are dropped and counted.
std::vector<Triple> resolve(const std::vector<RawTriple>& raw,
                            const std::unordered_map<std::string, int>& heads,
                            const std::unordered_map<std::string, int>& rels,
                            const std::unordered_map<std::string, int>& tails,
                            int& unknown) {
  std::vector<Triple> out;
  out.reserve(raw.size());
  for (const RawTriple& t : raw) {
    const auto h = heads.find(t.head);
    const auto r = rels.find(t.rel);
    const auto l = tails.find(t.tail);
    if (h == heads.end() || r == rels.end() || l == tails.end()) {
      ++unknown;
      continue;
    }
    out.push_back(Triple{h->second, r->second, l->second});
  }
  return out;
}

// Flattened result table shared by the completion and typing tasks.
struct EvalReport {
  double mrr = 0.0;
  std::map<int, double> hits;
  double accuracy = 0.0;
  bool has_accuracy = false;
  int queries = 0;
  int skipped = 0;
};

void emit_report(const EvalOptions& o, const std::vector<int>& ks,
                 const EvalReport& r) {
  std::printf("task\t%s\n", o.task.c_str());
  std::printf("filtered\t%s\n", o.filtered ? "true" : "false");
  write_metric(stdout, "mrr", r.mrr);
  for (int k : ks) {
    char name[32];
    std::snprintf(name, sizeof name, "hits@%d", k);
    write_metric(stdout, name, r.hits.at(k));
  }
  if (r.has_accuracy) write_metric(stdout, "accuracy", r.accuracy);
  std::printf("queries\t%d\n", r.queries);
  std::printf("skipped\t%d\n", r.skipped);

  if (o.out.empty()) return;
  FILE* f = std::fopen(o.out.c_str(), "wb");
  if (!f) throw ParseError(o.out + ": cannot open for writing");
  std::fprintf(f, "task\tfiltered\tmrr");
  for (int k : ks) std::fprintf(f, "\thits@%d", k);
  if (r.has_accuracy) std::fprintf(f, "\taccuracy");
  std::fprintf(f, "\tqueries\tskipped\n");
  std::fprintf(f, "%s\t%s\t%.17g", o.task.c_str(),
               o.filtered ? "true" : "false", r.mrr);
  for (int k : ks) std::fprintf(f, "\t%.17g", r.hits.at(k));
  if (r.has_accuracy) std::fprintf(f, "\t%.17g", r.accuracy);
  std::fprintf(f, "\t%d\t%d\n", r.queries, r.skipped);
  std::fclose(f);
}

int run_eval(EvalOptions& o) {
  const std::vector<int> ks = parse_ks(o.ks);
  const Checkpoint ckpt = load_checkpoint(o.checkpoint);
  const TwoViewKG kg =
      load_kg(ckpt.instance_path, ckpt.ontology_path, ckpt.cross_path);
  if (kg.entities != ckpt.entity_names || kg.concepts != ckpt.concept_names ||
      kg.instance_relations != ckpt.instance_relation_names ||
      kg.ontology_relations != ckpt.ontology_relation_names ||
      kg.cross_relations != ckpt.cross_relation_names)
    throw SchemaViolation(
        "checkpoint vocabulary does not match its data files; "
        "were they modified after training?");

  const auto raw = read_triple_file(o.test);
  const auto entities = index_names(kg.entities);
  const auto concepts = index_names(kg.concepts);

  int unknown = 0;
  EvalReport r;
  if (o.task == "completion-inst") {
    const auto test = resolve(raw, entities, index_names(kg.instance_relations),
                              entities, unknown);
    const CompletionMetrics m = evaluate_completion(
        kg, ckpt.params, test, TripleKind::Instance, o.filtered, ks);
    r = EvalReport{m.mrr, m.hits, 0.0, false, m.queries, unknown};
  } else if (o.task == "completion-onto") {
    const auto test = resolve(raw, concepts, index_names(kg.ontology_relations),
                              concepts, unknown);
    const CompletionMetrics m = evaluate_completion(
        kg, ckpt.params, test, TripleKind::Ontology, o.filtered, ks);
    r = EvalReport{m.mrr, m.hits, 0.0, false, m.queries, unknown};
  } else if (o.task == "typing") {
    const auto test = resolve(raw, entities, index_names(kg.cross_relations),
                              concepts, unknown);
    const TypingMetrics m = evaluate_typing(kg, ckpt.params, test, o.filtered,
                                            ks);
    r = EvalReport{m.mrr, m.hits, m.accuracy, true, m.queries,
                   m.skipped + unknown};
  } else {
    throw UsageError("unknown task '" + o.task +
                     "' (expected completion-inst, completion-onto or typing)");
  }
  emit_report(o, ks, r);
  return 0;
}

// ---------------------------------------------------------------------------
// export

int run_export(ExportOptions& o) {
  const Checkpoint ckpt = load_checkpoint(o.checkpoint);
  export_embeddings(o.out, ckpt);
  std::printf("embeddings\t%s\n", o.out.c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"dual-space knowledge graph embeddings"};
  app.require_subcommand(1);

  TrainOptions t;
  CLI::App* train = app.add_subcommand("train", "fit embeddings on a graph");
  train->add_option("--config", t.config, "key = value defaults file");
  train->add_option("--inst", t.inst, "instance-view triple file");
  train->add_option("--onto", t.onto, "ontology-view triple file");
  train->add_option("--cross", t.cross, "cross-view triple file");
  train->add_option("--dim", t.cfg.dim, "embedding dimension");
  train->add_option("--lr", t.cfg.lr, "learning rate");
  train->add_option("--margin-inst", t.cfg.margin_instance,
                    "instance-view hinge margin");
  train->add_option("--margin-onto", t.cfg.margin_ontology,
                    "ontology-view hinge margin");
  train->add_option("--epochs", t.cfg.epochs, "training epochs");
  train->add_option("--batch", t.cfg.batch, "batch size");
  train->add_option("--neg-ratio", t.cfg.negative_ratio,
                    "negatives per positive");
  train->add_option("--seed", t.cfg.seed, "random seed");
  train->add_option("--variant", t.variant, "so-fc or so-lc");
  train->add_option("--space-inst", t.space_inst,
                    "instance geometry: sphere, ball or flat");
  train->add_option("--space-onto", t.space_onto,
                    "ontology geometry: sphere, ball or flat");
  train->add_option("--out", t.out, "checkpoint output path");
  train->add_option("--checkpoint-every", t.cfg.checkpoint_every,
                    "checkpoint cadence in epochs (0 = only at the end)");
  train->add_option("--shell-norm", t.cfg.shell_norm,
                    "instance sphere radius (unset: sampled from the seed)");
  train->add_option("--split", t.split,
                    "split inputs a/b/c per mille before training");
  train->add_option("--resume", t.resume, "checkpoint to continue from");
  train->add_flag("--quiet", t.quiet, "suppress per-epoch loss lines");

  EvalOptions e;
  CLI::App* eval = app.add_subcommand("eval", "rank held-out triples");
  eval->add_option("--config", e.config, "key = value defaults file");
  eval->add_option("--checkpoint", e.checkpoint, "trained checkpoint");
  eval->add_option("--task", e.task,
                   "completion-inst, completion-onto or typing");
  eval->add_option("--test", e.test, "held-out triple file");
  eval->add_flag("--filtered,!--raw", e.filtered,
                 "filter known-true corruptions (default on)");
  eval->add_option("--k", e.ks, "hits@k cutoffs, comma separated");
  eval->add_option("--out", e.out, "tabular metrics file ('' to skip)");

  ExportOptions x;
  CLI::App* exp = app.add_subcommand("export", "dump embeddings as text");
  exp->add_option("--config", x.config, "key = value defaults file");
  exp->add_option("--checkpoint", x.checkpoint, "trained checkpoint");
  exp->add_option("--out", x.out, "output path");

  try {
    app.parse(argc, argv);
    if (train->parsed()) {
      if (!t.config.empty()) {
        const ConfigTable table = train_config_table(t);
        apply_config(*train, t.config, table);
      }
      return run_train(t);
    }
    if (eval->parsed()) {
      if (!e.config.empty()) {
        const ConfigTable table = eval_config_table(e);
        apply_config(*eval, e.config, table);
      }
      if (e.checkpoint.empty()) throw UsageError("eval needs --checkpoint");
      if (e.test.empty()) throw UsageError("eval needs --test");
      return run_eval(e);
    }
    if (exp->parsed()) {
      if (!x.config.empty()) {
        const ConfigTable table = export_config_table(x);
        apply_config(*exp, x.config, table);
      }
      if (x.checkpoint.empty()) throw UsageError("export needs --checkpoint");
      if (x.out.empty()) throw UsageError("export needs --out");
      return run_export(x);
    }
    return 1;
  } catch (const CLI::ParseError& err) {
    return app.exit(err) == 0 ? 0 : 1;
  } catch (const UsageError& err) {
    std::fprintf(stderr, "error: %s\n", err.what());
    return 1;
  } catch (const DivergenceDetected& err) {
    std::fprintf(stderr, "error: %s\n", err.what());
    return 3;
  } catch (const NumericalDegeneracy& err) {
    std::fprintf(stderr, "error: %s\n", err.what());
    return 3;
  } catch (const Error& err) {
    std::fprintf(stderr, "error: %s\n", err.what());
    return 2;
  } catch (const std::exception& err) {
    std::fprintf(stderr, "error: %s\n", err.what());
    return 2;
  }
}
