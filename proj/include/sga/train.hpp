#pragma once

#include <algorithm>
#include <array>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <limits>
#include <map>
#include <mutex>
#include <numeric>
#include <span>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "json.hpp"
#include "sga/config.hpp"
#include "sga/corpus.hpp"
#include "sga/graph.hpp"
#include "sga/model.hpp"
#include "sga/optim.hpp"

namespace sga {

class TrainingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// Metrics

struct EvalReport {
  std::size_t total = 0;
  /// confusion[actual][predicted], index 0 = Pros, 1 = Cons.
  std::array<std::array<std::size_t, 2>, 2> confusion{};
  double accuracy = 0.0;
  double macro_f1 = 0.0;
  double majority_share = 0.0;
  double mean_loss = 0.0;

  nlohmann::json to_json() const {
    return {{"total", total},
            {"accuracy", accuracy},
            {"macro_f1", macro_f1},
            {"majority_share", majority_share},
            {"mean_loss", mean_loss},
            {"confusion", {{"pros_as_pros", confusion[0][0]},
                           {"pros_as_cons", confusion[0][1]},
                           {"cons_as_pros", confusion[1][0]},
                           {"cons_as_cons", confusion[1][1]}}}};
  }
};

inline std::size_t side_index(Side s) { return s == Side::Pros ? 0 : 1; }

/// F1 of one class; a class that is neither present nor predicted scores 1.
inline double class_f1(std::size_t tp, std::size_t fp, std::size_t fn) {
  if (tp + fp + fn == 0) return 1.0;
  return 2.0 * static_cast<double>(tp) / static_cast<double>(2 * tp + fp + fn);
}

inline EvalReport make_report(const std::vector<Side>& actual, const std::vector<Side>& predicted) {
  if (actual.size() != predicted.size()) throw std::invalid_argument("make_report: size mismatch");
  EvalReport r;
  r.total = actual.size();
  for (std::size_t i = 0; i < actual.size(); ++i) ++r.confusion[side_index(actual[i])][side_index(predicted[i])];
  if (r.total == 0) return r;
  const auto& c = r.confusion;
  r.accuracy = static_cast<double>(c[0][0] + c[1][1]) / static_cast<double>(r.total);
  const double f1_pros = class_f1(c[0][0], c[1][0], c[0][1]);
  const double f1_cons = class_f1(c[1][1], c[0][1], c[1][0]);
  r.macro_f1 = 0.5 * (f1_pros + f1_cons);
  const std::size_t pros = c[0][0] + c[0][1];
  r.majority_share = static_cast<double>(std::max(pros, r.total - pros)) / static_cast<double>(r.total);
  return r;
}

// ---------------------------------------------------------------------------
// Prediction

struct Prediction {
  Side side = Side::Cons;
  double c_pros = 0.0;
  double c_cons = 0.0;
};

/// Higher score wins; an exact tie goes to Cons.
inline Side decide(double c_pros, double c_cons) { return c_pros > c_cons ? Side::Pros : Side::Cons; }

/// The graph must have been built with the graph settings the model was trained with.
inline void check_compatible(const TrainConfig& cfg, const DebateGraph& g) {
  if (!(g.config == cfg.graph))
    throw ModelError("graph " + g.debate_id + " was built with a different graph config than the checkpoint");
  if (g.raw_embeddings.cols() != cfg.model.embed_dim)
    throw ModelError("graph " + g.debate_id + " has embedding dim " + std::to_string(g.raw_embeddings.cols()) +
                     ", checkpoint expects " + std::to_string(cfg.model.embed_dim));
}

template <class T>
Prediction predict(const SgaModel<T>& model, const DebateGraph& g) {
  Rng unused(0);
  const auto f = forward_debate(model, g, false, unused);
  Prediction p;
  p.c_pros = f.c_pros->value[0];
  p.c_cons = f.c_cons->value[0];
  p.side = decide(p.c_pros, p.c_cons);
  return p;
}

/// Eval-mode accuracy, macro-F1 and mean ranking loss over `graphs`.
template <class T>
EvalReport evaluate_model(const SgaModel<T>& model, const std::vector<const DebateGraph*>& graphs) {
  std::vector<Side> actual, predicted;
  double loss = 0.0;
  Rng unused(0);
  for (const auto* g : graphs) {
    const auto f = forward_debate(model, *g, false, unused);
    const double cp = f.c_pros->value[0], cc = f.c_cons->value[0];
    actual.push_back(g->winner);
    predicted.push_back(decide(cp, cc));
    const double cw = g->winner == Side::Pros ? cp : cc, cl = g->winner == Side::Pros ? cc : cp;
    loss += ad::softplus(cl - cw);
  }
  auto r = make_report(actual, predicted);
  if (!graphs.empty()) r.mean_loss = loss / static_cast<double>(graphs.size());
  return r;
}

// ---------------------------------------------------------------------------
// Training

struct EpochRecord {
  std::size_t epoch = 0;
  double train_loss = 0.0;
  double val_loss = 0.0;
  double val_accuracy = 0.0;
  double val_f1 = 0.0;
  double seconds = 0.0;

  /// Reproducible fields only (no wall-clock time).
  nlohmann::json deterministic_json() const {
    return {{"epoch", epoch}, {"train_loss", train_loss}, {"val_loss", val_loss}, {"val_accuracy", val_accuracy},
            {"val_f1", val_f1}};
  }
  nlohmann::json to_json() const {
    auto j = deterministic_json();
    j["seconds"] = seconds;
    return j;
  }
};

struct TrainResult {
  std::vector<EpochRecord> log;
  std::size_t best_epoch = 0;
  double best_val_loss = 0.0;
  bool stopped_early = false;
};

/// Shuffled mini-batches of mean ranking loss with Adam; after each epoch the
/// validation loss decides early stopping. On return `model` holds the
/// best-validation weights.
inline TrainResult train_model(SgaModel<float>& model, const std::vector<const DebateGraph*>& train,
                               const std::vector<const DebateGraph*>& val, const TrainConfig& cfg,
                               const std::function<void(const EpochRecord&)>& on_epoch = {}) {
  cfg.validate();
  if (train.empty() || val.empty()) throw TrainingError("train_model: train and validation folds must be non-empty");
  ad::Adam<float> opt(cfg.adam);
  auto& params = model.params();
  params.zero_grad();

  TrainResult res;
  std::vector<Tensor<float>> best = params.snapshot();
  res.best_val_loss = std::numeric_limits<double>::infinity();
  std::size_t stale = 0;
  std::vector<std::size_t> order(train.size());

  for (std::size_t epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    const auto t0 = std::chrono::steady_clock::now();
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng::derive(cfg.seed, 0x5eed, epoch).shuffle(std::span(order));

    double epoch_loss = 0.0;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::size_t end = std::min(order.size(), start + cfg.batch_size);
      std::vector<ad::Var<float>> losses;
      for (std::size_t i = start; i < end; ++i) {
        const auto& g = *train[order[i]];
        Rng drop = Rng::derive(cfg.seed, 0xd409, epoch, i);
        auto f = forward_debate(model, g, true, drop);
        auto l = debate_loss(f, g.winner);
        if (!std::isfinite(l->value[0]))
          throw TrainingError("non-finite loss at epoch " + std::to_string(epoch) + " on debate " + g.debate_id +
                              " (c_pros=" + std::to_string(f.c_pros->value[0]) +
                              ", c_cons=" + std::to_string(f.c_cons->value[0]) + ")");
        epoch_loss += l->value[0];
        losses.push_back(std::move(l));
      }
      ad::backward(ad::mean(losses));
      opt.step(params);
    }

    const auto report = evaluate_model(model, val);
    EpochRecord rec;
    rec.epoch = epoch;
    rec.train_loss = epoch_loss / static_cast<double>(train.size());
    rec.val_loss = report.mean_loss;
    rec.val_accuracy = report.accuracy;
    rec.val_f1 = report.macro_f1;
    rec.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    res.log.push_back(rec);
    if (on_epoch) on_epoch(rec);

    if (rec.val_loss < res.best_val_loss) {
      res.best_val_loss = rec.val_loss;
      res.best_epoch = epoch;
      best = params.snapshot();
      stale = 0;
    } else if (++stale >= cfg.patience) {
      res.stopped_early = true;
      break;
    }
  }
  params.restore(best);
  return res;
}

// ---------------------------------------------------------------------------
// Experiment harness

/// Graphs of one fold, in fold order.
inline std::vector<const DebateGraph*> select_graphs(const std::vector<DebateGraph>& graphs,
                                                     const std::vector<std::string>& ids) {
  std::map<std::string, const DebateGraph*> by_id;
  for (const auto& g : graphs) by_id[g.debate_id] = &g;
  std::vector<const DebateGraph*> out;
  for (const auto& id : ids) {
    auto it = by_id.find(id);
    if (it == by_id.end()) throw TrainingError("no graph for debate " + id);
    out.push_back(it->second);
  }
  return out;
}

struct ExperimentRow {
  std::string name;
  TrainConfig config;
  std::optional<EvalReport> test;
  std::optional<TrainResult> training;
  std::string error;

  nlohmann::json to_json() const {
    nlohmann::json j = {{"name", name}};
    if (test) j["test"] = test->to_json();
    if (training) {
      j["best_epoch"] = training->best_epoch;
      j["epochs_run"] = training->log.size();
      j["best_val_loss"] = training->best_val_loss;
    }
    if (!error.empty()) j["error"] = error;
    return j;
  }
};

/// Train on the split's train fold with `cfg`, report the test fold.
inline ExperimentRow run_experiment(const std::string& name, const std::vector<DebateGraph>& graphs,
                                    const CorpusSplit& split, const TrainConfig& cfg) {
  ExperimentRow row;
  row.name = name;
  row.config = cfg;
  try {
    SgaModel<float> model(cfg.model, cfg.seed);
    row.training = train_model(model, select_graphs(graphs, split.train), select_graphs(graphs, split.val), cfg);
    row.test = evaluate_model(model, select_graphs(graphs, split.test));
  } catch (const std::exception& e) {
    row.error = e.what();
  }
  return row;
}

/// Worker count from SGA_THREADS, else hardware concurrency.
inline std::size_t worker_threads() {
  if (const char* env = std::getenv("SGA_THREADS")) {
    const long v = std::strtol(env, nullptr, 10);
    if (v >= 1) return static_cast<std::size_t>(v);
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

/// Run independent jobs on up to `threads` workers; results keep job order.
template <class R>
std::vector<R> run_parallel(const std::vector<std::function<R()>>& jobs, std::size_t threads) {
  std::vector<R> out(jobs.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&]() {
    for (std::size_t i; (i = next.fetch_add(1)) < jobs.size();) out[i] = jobs[i]();
  };
  const std::size_t n = std::min(threads, jobs.size());
  std::vector<std::thread> pool;
  for (std::size_t t = 1; t < n; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  return out;
}

/// FULL and the three single-layer ablations under identical seeds and split.
inline std::vector<ExperimentRow> run_ablation_suite(const std::vector<DebateGraph>& graphs, const CorpusSplit& split,
                                                     const TrainConfig& base, std::size_t threads = 1) {
  std::vector<std::pair<std::string, TrainConfig>> cells;
  cells.emplace_back("FULL", base);
  for (auto [name, type] : {std::pair{"w/o GATI", EdgeType::Intra}, std::pair{"w/o GATC", EdgeType::Counter},
                            std::pair{"w/o GATS", EdgeType::Support}}) {
    TrainConfig c = base;
    (type == EdgeType::Intra ? c.model.disable_gati : type == EdgeType::Counter ? c.model.disable_gatc
                                                                                : c.model.disable_gats) = true;
    cells.emplace_back(name, c);
  }
  std::vector<std::function<ExperimentRow()>> jobs;
  for (const auto& [name, c] : cells) jobs.push_back([&, name, c]() { return run_experiment(name, graphs, split, c); });
  return run_parallel(jobs, threads);
}

/// Rebuild graphs for each cross-edge setting and retrain.
inline std::vector<ExperimentRow> run_sweep(const std::vector<Debate>& debates,
                                            const std::vector<Tensor<float>>& embeddings, const CorpusSplit& split,
                                            const TrainConfig& base, CrossMode mode, const std::vector<double>& values,
                                            std::size_t threads = 1) {
  if (values.empty()) throw std::invalid_argument("run_sweep: no values");
  std::vector<std::function<ExperimentRow()>> jobs;
  for (double v : values) {
    jobs.push_back([&, v]() {
      TrainConfig c = base;
      c.graph.cross_mode = mode;
      std::ostringstream name;
      if (mode == CrossMode::Threshold) {
        c.graph.threshold = v;
        name << "threshold=" << v;
      } else {
        c.graph.k = static_cast<std::size_t>(std::llround(v));
        name << "k=" << c.graph.k;
      }
      try {
        std::vector<DebateGraph> graphs;
        for (std::size_t i = 0; i < debates.size(); ++i) graphs.push_back(build_debate_graph(debates[i], embeddings[i], c.graph));
        return run_experiment(name.str(), graphs, split, c);
      } catch (const std::exception& e) {
        ExperimentRow row;
        row.name = name.str();
        row.config = c;
        row.error = e.what();
        return row;
      }
    });
  }
  return run_parallel(jobs, threads);
}

inline std::string format_table(const std::vector<ExperimentRow>& rows) {
  std::ostringstream os;
  char buf[160];
  std::snprintf(buf, sizeof buf, "%-16s %8s %8s %8s %6s\n", "setting", "Acc.", "F1", "loss", "epoch");
  os << buf;
  for (const auto& r : rows) {
    if (r.test) {
      std::snprintf(buf, sizeof buf, "%-16s %8.3f %8.3f %8.4f %6zu\n", r.name.c_str(), r.test->accuracy,
                    r.test->macro_f1, r.test->mean_loss, r.training ? r.training->best_epoch : 0);
    } else {
      std::snprintf(buf, sizeof buf, "%-16s  failed: %s\n", r.name.c_str(), r.error.c_str());
    }
    os << buf;
  }
  return os.str();
}

}  // namespace sga
