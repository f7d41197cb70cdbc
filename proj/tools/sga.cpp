#include <unistd.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "sga/sga.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace sga;

namespace {

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// Run directories: everything is written into a sibling staging directory
// that is renamed into place only when the command succeeds.

class RunDir {
 public:
  RunDir(fs::path target, bool force) : target_(std::move(target)), force_(force) {
    if (target_.empty()) throw UsageError("--out is required");
    if (fs::exists(target_) && !force_)
      throw std::runtime_error("run directory " + target_.string() + " already exists (use --force to replace it)");
    staging_ = target_;
    staging_ += ".partial-" + std::to_string(::getpid());
    if (!target_.parent_path().empty()) fs::create_directories(target_.parent_path());
    fs::remove_all(staging_);
    fs::create_directories(staging_);
  }
  RunDir(const RunDir&) = delete;
  RunDir& operator=(const RunDir&) = delete;
  ~RunDir() {
    std::error_code ec;
    if (!committed_) fs::remove_all(staging_, ec);
  }

  fs::path file(const std::string& name) const { return staging_ / name; }

  void write(const std::string& name, const std::string& bytes) const {
    std::ofstream out(file(name), std::ios::binary | std::ios::trunc);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw std::runtime_error("cannot write " + file(name).string());
  }

  void commit() {
    if (fs::exists(target_)) {
      if (!force_) throw std::runtime_error("run directory " + target_.string() + " appeared while running");
      fs::remove_all(target_);
    }
    fs::rename(staging_, target_);
    committed_ = true;
  }

  const fs::path& target() const { return target_; }

 private:
  fs::path target_, staging_;
  bool force_;
  bool committed_ = false;
};

// ---------------------------------------------------------------------------
// Config flags. Each flag maps onto one key of the key = value config format;
// values given on the command line override the --config file.

struct FlagSpec {
  const char* flag;
  const char* key;
  const char* help;
  bool boolean = false;
};

enum FlagGroup : unsigned { kFilter = 1, kGraph = 2, kModel = 4, kOptim = 8 };

const std::vector<std::pair<unsigned, FlagSpec>>& flag_table() {
  static const std::vector<std::pair<unsigned, FlagSpec>> table = {
      {kFilter, {"--min-voters", "min_voters", "minimum number of voters (5)"}},
      {kFilter, {"--margin", "margin", "minimum winning vote margin (2)"}},
      {kFilter, {"--min-rounds", "min_rounds", "minimum rounds, also the truncation length (3)"}},
      {kFilter, {"--min-sentences", "min_sentences", "minimum sentences per analysed turn (5)"}},
      {kGraph, {"--d", "d", "intra-turn distance threshold (3)"}},
      {kGraph, {"--cross-mode", "cross_mode", "cross edges: threshold or topk"}},
      {kGraph, {"--threshold", "threshold", "cosine threshold for cross edges (0.85); implies threshold mode"}},
      {kGraph, {"--k", "k", "per-target cross edge cap (3); implies topk mode"}},
      {kGraph, {"--topk-combined", "topk_combined", "apply k across counter and support edges together", true}},
      {kModel, {"--embed-dim", "embed_dim", "sentence embedding width (384, or the embedding file's width)"}},
      {kModel, {"--turn-dim", "turn_dim", "turn embedding width (30)"}},
      {kModel, {"--max-turns", "max_turns", "turn embedding rows (6)"}},
      {kModel, {"--state-dim", "state_dim", "node state width (32)"}},
      {kModel, {"--r", "r", "readout nodes per debater and edge type (3)"}},
      {kModel, {"--dropout", "dropout", "dropout rate (0.2)"}},
      {kModel, {"--readout-role", "readout_role", "accumulate attention as source or target"}},
      {kModel, {"--disable-gati", "disable_gati", "drop the intra-turn attention layer", true}},
      {kModel, {"--disable-gatc", "disable_gatc", "drop the counter-argument attention layer", true}},
      {kModel, {"--disable-gats", "disable_gats", "drop the support attention layer", true}},
      {kOptim, {"--lr", "lr", "Adam learning rate (1e-4)"}},
      {kOptim, {"--beta1", "beta1", "Adam beta1 (0.9)"}},
      {kOptim, {"--beta2", "beta2", "Adam beta2 (0.999)"}},
      {kOptim, {"--adam-eps", "adam_eps", "Adam epsilon (1e-8)"}},
      {kOptim, {"--batch-size", "batch_size", "debates per batch (32)"}},
      {kOptim, {"--max-epochs", "max_epochs", "maximum epochs (50)"}},
      {kOptim, {"--patience", "patience", "early-stopping patience in epochs (5)"}},
  };
  return table;
}

struct ConfigFlags {
  std::string config_file;
  std::map<std::string, std::string> values;
  std::map<std::string, bool> switches;
  std::map<std::string, CLI::Option*> options;
};

void add_config_flags(CLI::App& app, ConfigFlags& cf, unsigned groups) {
  app.add_option("--config", cf.config_file, "key = value config file; flags override it")->check(CLI::ExistingFile);
  for (const auto& [group, spec] : flag_table()) {
    if (!(group & groups)) continue;
    if (spec.boolean)
      cf.options[spec.key] = app.add_flag(spec.flag, cf.switches[spec.key], spec.help);
    else
      cf.options[spec.key] = app.add_option(spec.flag, cf.values[spec.key], spec.help);
  }
}

TrainConfig resolve_config(const ConfigFlags& cf, const std::string& seed) {
  TrainConfig cfg;
  try {
    if (!cf.config_file.empty()) apply_key_values(KeyValues::parse(read_file(cf.config_file)), cfg);
    KeyValues over;
    for (const auto& [key, opt] : cf.options) {
      if (opt->count() == 0) continue;
      if (cf.switches.count(key))
        over.set(key, "true");
      else
        over.set(key, cf.values.at(key));
    }
    const auto given = [&](const char* k) { return cf.options.count(k) && cf.options.at(k)->count() > 0; };
    if (!given("cross_mode")) {
      if (given("k") && !given("threshold")) over.set("cross_mode", "topk");
      if (given("threshold") && !given("k")) over.set("cross_mode", "threshold");
    }
    if (!seed.empty()) over.set("seed", seed);
    apply_key_values(over, cfg);
    cfg.validate();
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  return cfg;
}

void log_config(const KeyValues& kv) {
  std::cerr << "# resolved config\n";
  std::istringstream in(kv.str());
  for (std::string line; std::getline(in, line);) std::cerr << "#   " << line << "\n";
}

// ---------------------------------------------------------------------------
// Corpus directories hold corpus.jsonl and optionally embeddings.sgae. Without
// an embedding file the hash embedder supplies vectors.

struct LoadedCorpus {
  std::vector<Debate> debates;
  std::vector<Tensor<float>> embeddings;
  std::string embedder;
  std::size_t dim = 0;
};

LoadedCorpus load_corpus_dir(const fs::path& path, const std::string& embeddings_override, std::size_t hash_dim) {
  fs::path corpus_file = path, emb_file;
  if (fs::is_directory(path)) {
    corpus_file = path / "corpus.jsonl";
    emb_file = path / "embeddings.sgae";
  }
  if (!embeddings_override.empty()) emb_file = embeddings_override;
  const std::string bytes = read_file(corpus_file);
  LoadedCorpus lc;
  lc.debates = parse_corpus(bytes);
  if (lc.debates.empty()) throw CorpusError("corpus " + corpus_file.string() + " is empty");
  EmbeddingFile ef;
  if (!emb_file.empty() && fs::exists(emb_file)) {
    ef = load_embeddings(emb_file);
    if (ef.corpus_digest != sha256(bytes))
      throw EmbeddingError("embedding file " + emb_file.string() + " was built from a different corpus (digest " +
                           to_hex(ef.corpus_digest) + ", corpus " + to_hex(sha256(bytes)) + ")");
  } else if (!embeddings_override.empty()) {
    throw EmbeddingError("cannot open " + emb_file.string());
  } else {
    std::cerr << "# no embedding file next to " << corpus_file.string() << "; using the " << kHashModelName
              << " hash embedder (dim " << hash_dim << ")\n";
    ef = hash_embed_corpus(lc.debates, hash_dim, sha256(bytes));
  }
  lc.embeddings = split_embeddings(ef, lc.debates);
  lc.embedder = ef.model_name;
  lc.dim = ef.dim;
  return lc;
}

std::vector<DebateGraph> build_graphs(const LoadedCorpus& lc, const GraphConfig& g) {
  std::vector<DebateGraph> out;
  out.reserve(lc.debates.size());
  for (std::size_t i = 0; i < lc.debates.size(); ++i) out.push_back(build_debate_graph(lc.debates[i], lc.embeddings[i], g));
  return out;
}

json split_json(const CorpusSplit& s) {
  return {{"seed", s.seed}, {"train", s.train}, {"val", s.val}, {"test", s.test}};
}

struct CorpusArgs {
  std::string corpus;
  std::string embeddings;
};

void add_corpus_args(CLI::App& app, CorpusArgs& ca) {
  app.add_option("--corpus", ca.corpus, "corpus directory (corpus.jsonl + embeddings.sgae) or corpus file")->required();
  app.add_option("--embeddings", ca.embeddings, "embedding file overriding the corpus directory's");
}

/// Resolve config and corpus together; the embedding width follows the file
/// unless given explicitly.
LoadedCorpus load_for(const CorpusArgs& ca, const ConfigFlags& cf, TrainConfig& cfg) {
  auto lc = load_corpus_dir(ca.corpus, ca.embeddings, cfg.model.embed_dim);
  const bool explicit_dim = cf.options.count("embed_dim") && cf.options.at("embed_dim")->count() > 0;
  if (explicit_dim && cfg.model.embed_dim != lc.dim)
    throw EmbeddingError("--embed-dim " + std::to_string(cfg.model.embed_dim) + " but embeddings have dim " +
                         std::to_string(lc.dim));
  cfg.model.embed_dim = lc.dim;
  return lc;
}

// ---------------------------------------------------------------------------
// Subcommands

int cmd_synth(const SynthConfig& sc, std::uint64_t seed, const std::string& out, bool force) {
  RunDir run(out, force);
  const auto corpus = generate_synthetic(sc, seed);
  run.write("corpus.jsonl", serialize_corpus(corpus.debates));
  run.write("embeddings.sgae", serialize_embeddings(corpus.embeddings));
  json planted = json::array();
  for (std::size_t i = 0; i < corpus.debates.size(); ++i) {
    json edges = json::array();
    for (const auto& e : corpus.planted[i]) edges.push_back({e.src, e.dst});
    planted.push_back({{"id", corpus.debates[i].id}, {"winner", side_name(corpus.debates[i].winner)}, {"counter", edges}});
  }
  run.write("planted.json", planted.dump(1) + "\n");
  KeyValues kv;
  kv.set("seed", std::to_string(seed));
  kv.set("debates", std::to_string(sc.debates));
  kv.set("turns", std::to_string(sc.turns));
  kv.set("min_sentences", std::to_string(sc.min_sentences));
  kv.set("max_sentences", std::to_string(sc.max_sentences));
  kv.set("dim", std::to_string(sc.dim));
  kv.set("signal", config_detail::fmt_double(sc.signal));
  run.write("config.txt", kv.str());
  log_config(kv);
  run.commit();
  std::cout << "wrote " << corpus.debates.size() << " debates (" << corpus.embeddings.count << " sentences, dim "
            << corpus.embeddings.dim << ") to " << run.target().string() << "\n";
  return 0;
}

int cmd_preprocess(const std::string& input, bool presegmented, bool augment, const TrainConfig& cfg,
                   const std::string& out, bool force) {
  RunDir run(out, force);
  LoadOptions lo;
  lo.presegmented = presegmented;
  const auto raw = load_corpus(input, lo);
  FilterRules first = cfg.filter;
  first.truncate = false;
  const auto pass1 = filter_corpus(raw, first);
  const auto widened = augment ? augment_corpus(pass1.kept, cfg.filter.min_rounds) : pass1.kept;
  const auto pass2 = filter_corpus(widened, cfg.filter);
  const auto split = split_corpus(pass2.kept, cfg.seed);
  run.write("corpus.jsonl", serialize_corpus(pass2.kept));
  json report = {{"input", raw.size()},
                 {"rejected",
                  {{"side_order", pass1.rejected_side_order},
                   {"voters", pass1.rejected_voters},
                   {"margin", pass1.rejected_margin},
                   {"rounds", pass1.rejected_rounds},
                   {"sentences", pass1.rejected_sentences + pass2.rejected_sentences}}},
                 {"augmented", widened.size() - pass1.kept.size()},
                 {"kept", pass2.kept.size()}};
  run.write("filter_report.json", report.dump(2) + "\n");
  run.write("split.json", split_json(split).dump(1) + "\n");
  const auto kv = to_key_values(cfg);
  run.write("config.txt", kv.str());
  log_config(kv);
  run.commit();
  std::cout << report.dump(2) << "\n";
  return 0;
}

int cmd_build_graphs(const CorpusArgs& ca, const ConfigFlags& cf, TrainConfig cfg, const std::string& out, bool force) {
  RunDir run(out, force);
  const auto lc = load_for(ca, cf, cfg);
  const auto graphs = build_graphs(lc, cfg.graph);
  std::string dump;
  json summary = json::array();
  for (const auto& g : graphs) {
    dump += dump_graph(g);
    summary.push_back({{"id", g.debate_id},
                       {"nodes", g.node_count()},
                       {"intra", g.intra.size()},
                       {"counter", g.counter.size()},
                       {"support", g.support.size()}});
  }
  run.write("graphs.txt", dump);
  run.write("graphs.json", summary.dump(1) + "\n");
  const auto kv = to_key_values(cfg);
  run.write("config.txt", kv.str());
  log_config(kv);
  run.commit();
  std::cout << "built " << graphs.size() << " graphs into " << run.target().string() << "\n";
  return 0;
}

int cmd_train(const CorpusArgs& ca, const ConfigFlags& cf, TrainConfig cfg, const std::string& out, bool force) {
  RunDir run(out, force);
  const auto lc = load_for(ca, cf, cfg);
  const auto kv = to_key_values(cfg);
  log_config(kv);
  const auto graphs = build_graphs(lc, cfg.graph);
  const auto split = split_corpus(lc.debates, cfg.seed);
  SgaModel<float> model(cfg.model, cfg.seed);
  std::string log;
  const auto res = train_model(model, select_graphs(graphs, split.train), select_graphs(graphs, split.val), cfg,
                               [&](const EpochRecord& r) {
                                 log += r.to_json().dump() + "\n";
                                 std::fprintf(stderr, "epoch %3zu  train %.4f  val %.4f  acc %.3f  f1 %.3f  %.1fs\n",
                                              r.epoch, r.train_loss, r.val_loss, r.val_accuracy, r.val_f1, r.seconds);
                               });
  const auto test = evaluate_model(model, select_graphs(graphs, split.test));
  const auto val = evaluate_model(model, select_graphs(graphs, split.val));
  run.write("model.sgaw", serialize_checkpoint(model.params()));
  run.write("model.sgaw.config", kv.str());
  run.write("config.txt", kv.str());
  run.write("log.jsonl", log);
  run.write("split.json", split_json(split).dump(1) + "\n");
  json report = {{"embedder", lc.embedder},
                 {"best_epoch", res.best_epoch},
                 {"epochs_run", res.log.size()},
                 {"stopped_early", res.stopped_early},
                 {"best_val_loss", res.best_val_loss},
                 {"val", val.to_json()},
                 {"test", test.to_json()}};
  run.write("report.json", report.dump(2) + "\n");
  run.commit();
  std::printf("best epoch %zu  val acc %.4f  test acc %.4f  test f1 %.4f\n", res.best_epoch, val.accuracy,
              test.accuracy, test.macro_f1);
  return 0;
}

struct LoadedModel {
  TrainConfig cfg;
  std::unique_ptr<SgaModel<float>> model;
};

LoadedModel load_model(const fs::path& checkpoint) {
  if (!fs::exists(checkpoint)) throw CheckpointError("checkpoint " + checkpoint.string() + " not found");
  const auto sidecar = config_sidecar(checkpoint);
  if (!fs::exists(sidecar)) throw CheckpointError("config sidecar " + sidecar.string() + " not found");
  LoadedModel lm;
  try {
    lm.cfg = parse_train_config(read_file(sidecar));
  } catch (const std::invalid_argument& e) {
    throw CheckpointError(sidecar.string() + ": " + e.what());
  }
  lm.model = std::make_unique<SgaModel<float>>(lm.cfg.model, lm.cfg.seed);
  load_checkpoint(checkpoint, lm.model->params());
  return lm;
}

int cmd_eval(const CorpusArgs& ca, const std::string& checkpoint, const std::string& fold, bool as_json,
             const std::string& out, bool force) {
  auto lm = load_model(checkpoint);
  const auto lc = load_corpus_dir(ca.corpus, ca.embeddings, lm.cfg.model.embed_dim);
  const auto graphs = build_graphs(lc, lm.cfg.graph);
  for (const auto& g : graphs) check_compatible(lm.cfg, g);
  std::vector<const DebateGraph*> chosen;
  if (fold == "all") {
    for (const auto& g : graphs) chosen.push_back(&g);
  } else {
    const auto split = split_corpus(lc.debates, lm.cfg.seed);
    chosen = select_graphs(graphs, fold == "train" ? split.train : fold == "val" ? split.val : split.test);
  }
  const auto rep = evaluate_model(*lm.model, chosen);
  json j = rep.to_json();
  j["fold"] = fold;
  if (!out.empty()) {
    RunDir run(out, force);
    run.write("eval.json", j.dump(2) + "\n");
    run.write("config.txt", to_key_values(lm.cfg).str());
    run.commit();
  }
  if (as_json) {
    std::cout << j.dump(2) << "\n";
  } else {
    std::printf("fold %s  n %zu  accuracy %.4f  macro-F1 %.4f  majority %.4f\n", fold.c_str(), rep.total,
                rep.accuracy, rep.macro_f1, rep.majority_share);
    std::printf("confusion (actual x predicted): pros [%zu %zu]  cons [%zu %zu]\n", rep.confusion[0][0],
                rep.confusion[0][1], rep.confusion[1][0], rep.confusion[1][1]);
  }
  return 0;
}

int cmd_gradcheck(std::uint64_t seed, const std::vector<std::size_t>& turns, std::size_t probes, double tol) {
  bool ok = true;
  for (std::size_t t : turns) {
    const auto r = full_model_grad_check(t, seed, probes);
    const bool pass = r.max_rel_error < tol;
    ok = ok && pass;
    std::printf("turns %zu  probes %zu  max relative error %.3e  (worst %s[%zu])  %s\n", t, r.probes, r.max_rel_error,
                r.worst_param.c_str(), r.worst_index, pass ? "ok" : "FAILED");
  }
  return ok ? 0 : 1;
}

int cmd_stats(const CorpusArgs& ca, const ConfigFlags& cf, TrainConfig cfg, bool as_json, const std::string& out,
              bool force) {
  const auto lc = load_for(ca, cf, cfg);
  const auto graphs = build_graphs(lc, cfg.graph);
  const auto rep = compute_stats(lc.debates, graphs);
  if (!out.empty()) {
    RunDir run(out, force);
    run.write("stats.json", rep.to_json().dump(2) + "\n");
    run.write("stats.txt", rep.to_table());
    run.write("config.txt", to_key_values(cfg).str());
    run.commit();
  }
  std::cout << (as_json ? rep.to_json().dump(2) + "\n" : rep.to_table());
  return 0;
}

void write_table_run(RunDir& run, const std::string& stem, const std::vector<ExperimentRow>& rows,
                     const TrainConfig& cfg) {
  json j = json::array();
  for (const auto& r : rows) j.push_back(r.to_json());
  run.write(stem + ".json", j.dump(2) + "\n");
  run.write(stem + ".txt", format_table(rows));
  run.write("config.txt", to_key_values(cfg).str());
}

int cmd_sweep(const CorpusArgs& ca, const ConfigFlags& cf, TrainConfig cfg, const std::string& mode,
              const std::vector<double>& values, const std::string& out, bool force) {
  RunDir run(out, force);
  const auto lc = load_for(ca, cf, cfg);
  log_config(to_key_values(cfg));
  const auto split = split_corpus(lc.debates, cfg.seed);
  const auto rows = run_sweep(lc.debates, lc.embeddings, split, cfg,
                              mode == "topk" ? CrossMode::TopK : CrossMode::Threshold, values, worker_threads());
  write_table_run(run, "sweep", rows, cfg);
  run.commit();
  std::cout << format_table(rows);
  return 0;
}

int cmd_ablate(const CorpusArgs& ca, const ConfigFlags& cf, TrainConfig cfg, const std::string& out, bool force) {
  RunDir run(out, force);
  const auto lc = load_for(ca, cf, cfg);
  log_config(to_key_values(cfg));
  const auto graphs = build_graphs(lc, cfg.graph);
  const auto split = split_corpus(lc.debates, cfg.seed);
  const auto rows = run_ablation_suite(graphs, split, cfg, worker_threads());
  write_table_run(run, "ablation", rows, cfg);
  run.commit();
  std::cout << format_table(rows);
  return 0;
}

int cmd_inspect(const CorpusArgs& ca, const ConfigFlags& cf, TrainConfig cfg, const std::string& checkpoint,
                const std::string& debate_id, bool as_json) {
  std::optional<LoadedModel> lm;
  if (!checkpoint.empty()) {
    lm = load_model(checkpoint);
    cfg = lm->cfg;
  }
  const auto lc = lm ? load_corpus_dir(ca.corpus, ca.embeddings, cfg.model.embed_dim) : load_for(ca, cf, cfg);
  std::size_t idx = lc.debates.size();
  for (std::size_t i = 0; i < lc.debates.size(); ++i)
    if (lc.debates[i].id == debate_id) idx = i;
  if (idx == lc.debates.size()) throw CorpusError("no debate with id " + debate_id);
  const auto& d = lc.debates[idx];
  const auto g = build_debate_graph(d, lc.embeddings[idx], cfg.graph);
  if (!lm) {
    std::cout << dump_graph(g);
    return 0;
  }
  check_compatible(cfg, g);
  Rng unused(0);
  const auto f = forward_debate(*lm->model, g, false, unused);
  std::vector<const Sentence*> by_index(g.node_count());
  for (const auto& t : d.turns)
    for (const auto& s : t.sentences) by_index[s.global_index] = &s;
  json j = {{"id", d.id},
            {"winner", side_name(d.winner)},
            {"c_pros", f.c_pros->value[0]},
            {"c_cons", f.c_cons->value[0]},
            {"predicted", side_name(decide(f.c_pros->value[0], f.c_cons->value[0]))}};
  std::ostringstream text;
  text << "debate " << d.id << "  winner " << side_name(d.winner) << "  predicted "
       << side_name(decide(f.c_pros->value[0], f.c_cons->value[0])) << "  c_pros " << f.c_pros->value[0]
       << "  c_cons " << f.c_cons->value[0] << "\n";
  for (Side side : {Side::Pros, Side::Cons}) {
    const int si = side == Side::Pros ? 0 : 1;
    json sel = json::array();
    text << side_name(side) << ":\n";
    for (auto type : {EdgeType::Intra, EdgeType::Counter, EdgeType::Support}) {
      const int ti = static_cast<int>(type);
      for (std::size_t k = 0; k < f.readout.selected[si][ti].size(); ++k) {
        const std::size_t node = f.readout.selected[si][ti][k];
        const double alpha = f.readout.scores[si][ti][k];
        const auto* s = by_index[node];
        sel.push_back({{"type", edge_type_name(type)},
                       {"node", node},
                       {"turn", s->turn_index},
                       {"alpha", alpha},
                       {"sentence", s->raw_text}});
        char buf[64];
        std::snprintf(buf, sizeof buf, "  %s  node %3zu  turn %zu  alpha %.4f  ", edge_type_name(type), node,
                      s->turn_index, alpha);
        text << buf << s->raw_text << "\n";
      }
    }
    j[side_name(side)] = sel;
  }
  std::cout << (as_json ? j.dump(2) + "\n" : text.str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Sequence graph attention for debate winner prediction"};
  app.require_subcommand(1);
  std::string seed;
  std::string out;
  bool force = false;
  bool as_json = false;
  auto add_common = [&](CLI::App* sub, bool with_out, bool out_required = false, bool with_seed = true) {
    if (with_seed) sub->add_option("--seed", seed, "random seed (1)");
    if (with_out) {
      auto* o = sub->add_option("--out", out, "run directory to create");
      if (out_required) o->required();
      sub->add_flag("--force", force, "replace an existing run directory");
    }
  };

  std::map<const CLI::App*, ConfigFlags> flags;
  CorpusArgs ca;

  SynthConfig sc;
  auto* synth = app.add_subcommand("synth", "generate a planted-signal synthetic corpus");
  add_common(synth, true, true);
  synth->add_option("--debates", sc.debates, "number of debates (200)");
  synth->add_option("--signal", sc.signal, "planted signal strength in [0, 1] (1)")->check(CLI::Range(0.0, 1.0));
  synth->add_option("--dim", sc.dim, "embedding width (384)");
  synth->add_option("--turns", sc.turns, "turns per debate (6)");
  synth->add_option("--min-sentences", sc.min_sentences, "minimum sentences per turn (5)");
  synth->add_option("--max-sentences", sc.max_sentences, "maximum sentences per turn (8)");

  std::string input;
  bool presegmented = false, no_augment = false;
  auto* prep = app.add_subcommand("preprocess", "normalize, filter, augment and split a raw corpus");
  add_common(prep, true, true);
  add_config_flags(*prep, flags[prep], kFilter);
  prep->add_option("--input", input, "raw corpus (native JSONL or debate.org export)")->required();
  prep->add_flag("--presegmented", presegmented, "turn texts are already one sentence per line");
  prep->add_flag("--no-augment", no_augment, "skip last-rounds augmentation of Pros wins");

  auto* bg = app.add_subcommand("build-graphs", "build and dump debate graphs");
  add_common(bg, true, true);
  add_corpus_args(*bg, ca);
  add_config_flags(*bg, flags[bg], kGraph | kModel);

  auto* train = app.add_subcommand("train", "train a model and evaluate it on the test fold");
  add_common(train, true, true);
  add_corpus_args(*train, ca);
  add_config_flags(*train, flags[train], kGraph | kModel | kOptim);

  std::string checkpoint, fold = "test";
  auto* eval = app.add_subcommand("eval", "evaluate a checkpoint");
  add_common(eval, true, false, false);
  add_corpus_args(*eval, ca);
  eval->add_option("--checkpoint", checkpoint, "model checkpoint (.sgaw with .config sidecar)")->required();
  eval->add_option("--fold", fold, "test, val, train or all")->check(CLI::IsMember({"test", "val", "train", "all"}));
  eval->add_flag("--json", as_json, "print a JSON record");

  std::vector<std::size_t> gc_turns{2, 6};
  std::size_t probes = 400;
  double tol = 1e-3;
  auto* gc = app.add_subcommand("gradcheck", "finite-difference check of the full model on toy debates");
  add_common(gc, false);
  gc->add_option("--turns", gc_turns, "toy debate lengths (2 6)");
  gc->add_option("--probes", probes, "probed parameter entries per toy (400)");
  gc->add_option("--tol", tol, "maximum accepted relative error (1e-3)");

  auto* stats = app.add_subcommand("stats", "per-side sentence and cross-edge statistics");
  add_common(stats, true);
  add_corpus_args(*stats, ca);
  add_config_flags(*stats, flags[stats], kGraph | kModel);
  stats->add_flag("--json", as_json, "print a JSON record");

  std::string mode = "threshold";
  std::vector<double> values;
  auto* sweep = app.add_subcommand("sweep", "retrain across cross-edge thresholds or k values");
  add_common(sweep, true, true);
  add_corpus_args(*sweep, ca);
  add_config_flags(*sweep, flags[sweep], kGraph | kModel | kOptim);
  sweep->add_option("--mode", mode, "threshold or topk")->check(CLI::IsMember({"threshold", "topk"}));
  sweep->add_option("--values", values, "values to sweep")->required()->delimiter(',');

  auto* ablate = app.add_subcommand("ablate", "train the full model and each single-layer ablation");
  add_common(ablate, true, true);
  add_corpus_args(*ablate, ca);
  add_config_flags(*ablate, flags[ablate], kGraph | kModel | kOptim);

  std::string debate_id;
  auto* inspect = app.add_subcommand("inspect", "dump one debate's graph or its readout selections");
  add_common(inspect, false, false, false);
  add_corpus_args(*inspect, ca);
  add_config_flags(*inspect, flags[inspect], kGraph | kModel);
  inspect->add_option("--debate", debate_id, "debate id")->required();
  inspect->add_option("--checkpoint", checkpoint, "show readout selections of this checkpoint");
  inspect->add_flag("--json", as_json, "print a JSON record");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*synth) {
      std::uint64_t s = 1;
      if (!seed.empty()) s = config_detail::parse_number<std::uint64_t>("seed", seed);
      return cmd_synth(sc, s, out, force);
    }
    if (*gc) {
      std::uint64_t s = 1;
      if (!seed.empty()) s = config_detail::parse_number<std::uint64_t>("seed", seed);
      return cmd_gradcheck(s, gc_turns, probes, tol);
    }
    const CLI::App* active = app.get_subcommands().front();
    const ConfigFlags& cf = flags[active];
    const auto cfg = resolve_config(cf, seed);
    if (*prep) return cmd_preprocess(input, presegmented, !no_augment, cfg, out, force);
    if (*bg) return cmd_build_graphs(ca, cf, cfg, out, force);
    if (*train) return cmd_train(ca, cf, cfg, out, force);
    if (*eval) return cmd_eval(ca, checkpoint, fold, as_json, out, force);
    if (*stats) return cmd_stats(ca, cf, cfg, as_json, out, force);
    if (*sweep) return cmd_sweep(ca, cf, cfg, mode, values, out, force);
    if (*ablate) return cmd_ablate(ca, cf, cfg, out, force);
    if (*inspect) return cmd_inspect(ca, cf, cfg, checkpoint, debate_id, as_json);
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 2;
  } catch (const ConfigError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}
