#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "sga/autodiff.hpp"
#include "sga/graph.hpp"
#include "sga/optim.hpp"
#include "sga/rng.hpp"

namespace sga {

enum class ReadoutRole {
  /// A node's score is the attention it received as the source of edges.
  Source,
  /// A node's score is the attention mass over its own in-edges.
  Target,
};

struct ModelConfig {
  std::size_t embed_dim = 384;  // B
  std::size_t turn_dim = 30;
  std::size_t max_turns = 6;
  std::size_t state_dim = 32;  // D'
  std::size_t top_r = 3;
  double dropout = 0.2;
  bool disable_gati = false;
  bool disable_gatc = false;
  bool disable_gats = false;
  ReadoutRole readout_role = ReadoutRole::Source;

  std::size_t input_dim() const { return embed_dim + turn_dim; }
  std::size_t interaction_dim() const { return 3 * state_dim; }
  std::size_t readout_dim() const { return 3 * top_r * state_dim; }
  std::array<std::size_t, 4> classifier_widths() const {
    const std::size_t w = readout_dim();
    return {w, w / 2, w / 4, 1};
  }
  bool disabled(EdgeType t) const {
    return t == EdgeType::Intra ? disable_gati : t == EdgeType::Counter ? disable_gatc : disable_gats;
  }

  friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

class ModelError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

template <class T>
using Param = ad::Parameter<T>;

template <class T>
struct GatLayerParams {
  Param<T>* w = nullptr;  // D'×D'
  Param<T>* a = nullptr;  // 2D': [dst half ‖ src half]
};

/// GRU gates: z (update), r (reset), n (candidate).
template <class T>
struct GruParams {
  Param<T>*w_xz = nullptr, *w_xr = nullptr, *w_xn = nullptr;
  Param<T>*w_hz = nullptr, *w_hr = nullptr, *w_hn = nullptr;
  Param<T>*b_xz = nullptr, *b_xr = nullptr, *b_xn = nullptr;
  Param<T>*b_hz = nullptr, *b_hr = nullptr, *b_hn = nullptr;
};

template <class T>
struct MlpParams {
  Param<T>*l1_w = nullptr, *l1_b = nullptr, *ln1_g = nullptr, *ln1_b = nullptr;
  Param<T>*l2_w = nullptr, *l2_b = nullptr, *ln2_g = nullptr, *ln2_b = nullptr;
  Param<T>*l3_w = nullptr, *l3_b = nullptr;
};

/// All trainable weights. Registration order fixes checkpoint order and the
/// initialization stream.
template <class T>
class SgaModel {
 public:
  SgaModel(const ModelConfig& cfg, std::uint64_t seed) : cfg_(cfg) {
    if (cfg.embed_dim == 0 || cfg.state_dim == 0 || cfg.top_r == 0 || cfg.max_turns == 0)
      throw ModelError("model config: dimensions must be positive");
    Rng rng(seed);
    const std::size_t m = cfg.state_dim, x = cfg.interaction_dim();
    auto mat = [&](const std::string& name, std::size_t in, std::size_t out) {
      return &params_.add(name, ad::glorot_uniform<T>({in, out}, in, out, rng));
    };
    auto vec = [&](const std::string& name, std::size_t n, T fill) { return &params_.add(name, Tensor<T>(Shape{n}, fill)); };

    turn_table = mat("turn_embedding", cfg.max_turns, cfg.turn_dim);
    proj_w = mat("input_proj.w", cfg.input_dim(), m);
    proj_b = vec("input_proj.b", m, T{0});
    for (auto [layer, name] : {std::pair{&gati, "gati"}, std::pair{&gatc, "gatc"}, std::pair{&gats, "gats"}}) {
      layer->w = mat(std::string(name) + ".w", m, m);
      layer->a = &params_.add(std::string(name) + ".a", ad::glorot_uniform<T>({2 * m}, 2 * m, 1, rng));
    }
    gru.w_xz = mat("gru.w_xz", x, m);
    gru.w_xr = mat("gru.w_xr", x, m);
    gru.w_xn = mat("gru.w_xn", x, m);
    gru.w_hz = mat("gru.w_hz", m, m);
    gru.w_hr = mat("gru.w_hr", m, m);
    gru.w_hn = mat("gru.w_hn", m, m);
    gru.b_xz = vec("gru.b_xz", m, T{0});
    gru.b_xr = vec("gru.b_xr", m, T{0});
    gru.b_xn = vec("gru.b_xn", m, T{0});
    gru.b_hz = vec("gru.b_hz", m, T{0});
    gru.b_hr = vec("gru.b_hr", m, T{0});
    gru.b_hn = vec("gru.b_hn", m, T{0});
    const auto w = cfg.classifier_widths();
    for (auto [mlp, name] : {std::pair{&mlp_pros, "mlp_pros"}, std::pair{&mlp_cons, "mlp_cons"}}) {
      const std::string p(name);
      mlp->l1_w = mat(p + ".l1.w", w[0], w[1]);
      mlp->l1_b = vec(p + ".l1.b", w[1], T{0});
      mlp->ln1_g = vec(p + ".ln1.gain", w[1], T{1});
      mlp->ln1_b = vec(p + ".ln1.bias", w[1], T{0});
      mlp->l2_w = mat(p + ".l2.w", w[1], w[2]);
      mlp->l2_b = vec(p + ".l2.b", w[2], T{0});
      mlp->ln2_g = vec(p + ".ln2.gain", w[2], T{1});
      mlp->ln2_b = vec(p + ".ln2.bias", w[2], T{0});
      mlp->l3_w = mat(p + ".l3.w", w[2], w[3]);
      mlp->l3_b = vec(p + ".l3.b", w[3], T{0});
    }
  }

  SgaModel(const SgaModel&) = delete;
  SgaModel& operator=(const SgaModel&) = delete;

  const ModelConfig& config() const { return cfg_; }
  /// Ablation switches may change between runs without touching weights.
  ModelConfig& mutable_config() { return cfg_; }
  ad::ParamSet<T>& params() { return params_; }
  const ad::ParamSet<T>& params() const { return params_; }

  Param<T>* turn_table = nullptr;  // max_turns × turn_dim
  Param<T>* proj_w = nullptr;      // (B + turn_dim) × D'
  Param<T>* proj_b = nullptr;
  GatLayerParams<T> gati, gatc, gats;
  GruParams<T> gru;
  MlpParams<T> mlp_pros, mlp_cons;

  const GatLayerParams<T>& gat(EdgeType t) const { return t == EdgeType::Intra ? gati : t == EdgeType::Counter ? gatc : gats; }
  const MlpParams<T>& mlp(Side s) const { return s == Side::Pros ? mlp_pros : mlp_cons; }

 private:
  ModelConfig cfg_;
  ad::ParamSet<T> params_;
};

// ---------------------------------------------------------------------------
// Forward pieces

template <class T>
ad::Var<T> P(Param<T>* p) {
  return ad::leaf(*p);
}

struct AttentionEntry {
  std::size_t src = 0;
  std::size_t dst = 0;
  EdgeType type = EdgeType::Intra;
  double alpha = 0.0;
};

/// Attention coefficients of every edge evaluated in a forward pass (before
/// dropout), with global node indices.
struct AttentionRecord {
  std::vector<AttentionEntry> entries;

  /// Per-node accumulated attention of one edge type.
  std::vector<double> accumulate(EdgeType type, std::size_t nodes, ReadoutRole role) const {
    std::vector<double> acc(nodes, 0.0);
    for (const auto& e : entries)
      if (e.type == type) acc[role == ReadoutRole::Source ? e.src : e.dst] += e.alpha;
    return acc;
  }
};

/// Initial node states: [sentence embedding ‖ turn embedding] projected to D'.
template <class T>
ad::Var<T> encode_nodes(const SgaModel<T>& model, const DebateGraph& g) {
  const auto& cfg = model.config();
  if (g.raw_embeddings.cols() != cfg.embed_dim)
    throw ModelError("graph " + g.debate_id + ": embedding dim " + std::to_string(g.raw_embeddings.cols()) +
                     " but model expects " + std::to_string(cfg.embed_dim));
  std::vector<std::size_t> turns(g.node_count());
  for (std::size_t i = 0; i < g.node_count(); ++i) {
    turns[i] = g.nodes[i].turn_index;
    if (turns[i] >= cfg.max_turns)
      throw ModelError("graph " + g.debate_id + ": turn index " + std::to_string(turns[i]) + " exceeds model limit " +
                       std::to_string(cfg.max_turns));
  }
  auto h = ad::constant(g.raw_embeddings.template cast<T>());
  auto turn_rows = ad::gather_rows(P(model.turn_table), std::move(turns));
  return ad::affine(ad::concat_cols<T>({h, turn_rows}), P(model.proj_w), P(model.proj_b));
}

template <class T>
struct GatOutput {
  ad::Var<T> features;   // n_dst × D'
  std::vector<T> alpha;  // per edge, before dropout
};

/// One attention layer over local edges (src indexes src_states rows, dst
/// indexes dst_states rows). Targets without edges output zero.
template <class T>
GatOutput<T> gat_forward(const GatLayerParams<T>& layer, const ad::Var<T>& src_states, const ad::Var<T>& dst_states,
                         const EdgeList& edges, bool train, double dropout, Rng& rng) {
  const std::size_t n_dst = dst_states->value.rows();
  const std::size_t width = layer.w->value.cols();
  if (edges.empty()) return {ad::constant(Tensor<T>(n_dst, width)), {}};
  std::vector<std::size_t> src(edges.size()), dst(edges.size());
  for (std::size_t k = 0; k < edges.size(); ++k) {
    src[k] = edges[k].src;
    dst[k] = edges[k].dst;
  }
  auto w = P(layer.w);
  auto wh_src = ad::affine(src_states, w);
  auto wh_dst = src_states == dst_states ? wh_src : ad::affine(dst_states, w);
  auto logits = ad::leaky_relu(ad::edge_scores(wh_dst, wh_src, P(layer.a), dst, src));
  auto alpha = ad::segmented_softmax(logits, dst, n_dst);
  GatOutput<T> out;
  out.alpha = alpha->value.values();
  auto weights = ad::dropout(alpha, dropout, train, rng);
  out.features = ad::scatter_weighted_sum(weights, wh_src, std::move(src), std::move(dst), n_dst);
  return out;
}

/// new = (1 - z) ⊙ h + z ⊙ n with z = σ(x W_xz + h W_hz + b), r likewise,
/// n = tanh(x W_xn + b_xn + r ⊙ (h W_hn + b_hn)). z = 0 carries h unchanged.
template <class T>
ad::Var<T> gru_cell(const GruParams<T>& p, const ad::Var<T>& x, const ad::Var<T>& h) {
  auto z = ad::sigmoid(ad::add(ad::affine(x, P(p.w_xz), P(p.b_xz)), ad::affine(h, P(p.w_hz), P(p.b_hz))));
  auto r = ad::sigmoid(ad::add(ad::affine(x, P(p.w_xr), P(p.b_xr)), ad::affine(h, P(p.w_hr), P(p.b_hr))));
  auto n = ad::tanh(ad::add(ad::affine(x, P(p.w_xn), P(p.b_xn)), ad::mul(r, ad::affine(h, P(p.w_hn), P(p.b_hn)))));
  return ad::add(ad::mul(ad::one_minus(z), h), ad::mul(z, n));
}

/// Per-turn interaction components, kept for inspection and tests.
template <class T>
struct InteractionTrace {
  std::size_t turn = 0;
  Tensor<T> intra, counter, support;
};

/// Turn-by-turn state update over one debate graph. Each node's state is
/// written once, at its own turn; turns must be stepped in order.
template <class T>
class SgaRecurrence {
 public:
  SgaRecurrence(const SgaModel<T>& model, const DebateGraph& g, ad::Var<T> initial, bool train, Rng& rng)
      : model_(model), g_(g), initial_(std::move(initial)), train_(train), rng_(rng) {
    const std::size_t turns = g.turn_count();
    for (auto type : {EdgeType::Intra, EdgeType::Counter, EdgeType::Support}) {
      auto& buckets = local_[static_cast<int>(type)];
      buckets.assign(turns, {});
      for (const auto& e : g.edges(type)) {
        const std::size_t td = g.nodes[e.dst].turn_index, ts = g.nodes[e.src].turn_index;
        buckets[td].push_back({e.src - g.turn_offsets[ts], e.dst - g.turn_offsets[td]});
      }
    }
  }

  std::size_t next_turn() const { return final_.size(); }
  bool done() const { return final_.size() == g_.turn_count(); }

  void step(std::size_t t) {
    if (t != final_.size())
      throw ModelError("sga_step: turn " + std::to_string(t) + " requested but next turn is " +
                       std::to_string(final_.size()));
    if (t >= g_.turn_count()) throw ModelError("sga_step: turn " + std::to_string(t) + " beyond last turn");
    const auto& cfg = model_.config();
    const std::size_t n = g_.turn_size(t), off = g_.turn_offsets[t];
    auto pre = ad::slice_rows(initial_, off, n);

    InteractionTrace<T> trace;
    trace.turn = t;
    std::vector<ad::Var<T>> parts;
    for (auto type : {EdgeType::Intra, EdgeType::Counter, EdgeType::Support}) {
      const std::size_t lag = type == EdgeType::Intra ? 0 : type == EdgeType::Counter ? 1 : 2;
      ad::Var<T> h;
      if (cfg.disabled(type) || t < lag) {
        h = ad::constant(Tensor<T>(n, cfg.state_dim));
      } else {
        const auto& src = lag == 0 ? pre : final_[t - lag];
        const auto& local = local_[static_cast<int>(type)][t];
        auto out = gat_forward(model_.gat(type), src, pre, local, train_, cfg.dropout, rng_);
        const std::size_t src_off = g_.turn_offsets[t - lag];
        for (std::size_t k = 0; k < local.size(); ++k)
          record_.entries.push_back({local[k].src + src_off, local[k].dst + off, type, static_cast<double>(out.alpha[k])});
        h = out.features;
      }
      (type == EdgeType::Intra ? trace.intra : type == EdgeType::Counter ? trace.counter : trace.support) = h->value;
      parts.push_back(h);
    }
    final_.push_back(gru_cell(model_.gru, ad::concat_cols(parts), pre));
    traces_.push_back(std::move(trace));
  }

  /// N×D' final states in global node order.
  ad::Var<T> final_states() const {
    if (!done()) throw ModelError("sga: not all turns processed");
    return ad::concat_rows(final_);
  }
  const std::vector<ad::Var<T>>& turn_states() const { return final_; }
  const AttentionRecord& attention() const { return record_; }
  const std::vector<InteractionTrace<T>>& traces() const { return traces_; }

 private:
  const SgaModel<T>& model_;
  const DebateGraph& g_;
  ad::Var<T> initial_;
  bool train_;
  Rng& rng_;
  std::array<std::vector<EdgeList>, 3> local_;
  std::vector<ad::Var<T>> final_;
  AttentionRecord record_;
  std::vector<InteractionTrace<T>> traces_;
};

template <class T>
struct ReadoutVectors {
  ad::Var<T> q_pros, q_cons;
  /// [side][type] -> selected node indices, descending score.
  std::array<std::array<std::vector<std::size_t>, 3>, 2> selected;
  std::array<std::array<std::vector<double>, 3>, 2> scores;

  const ad::Var<T>& q(Side s) const { return s == Side::Pros ? q_pros : q_cons; }
};

/// Top-r nodes per debater and edge type by accumulated attention (ties to
/// the lower index); their final states concatenated in type order I, C, S.
template <class T>
ReadoutVectors<T> readout_topr(const ad::Var<T>& final_states, const AttentionRecord& attention, const DebateGraph& g,
                               std::size_t r, ReadoutRole role) {
  ReadoutVectors<T> out;
  const std::size_t n = g.node_count();
  for (Side side : {Side::Pros, Side::Cons}) {
    std::vector<std::size_t> mine;
    for (std::size_t i = 0; i < n; ++i)
      if (g.nodes[i].side == side) mine.push_back(i);
    if (mine.size() < r)
      throw ModelError("readout: debater " + std::string(side_name(side)) + " has " + std::to_string(mine.size()) +
                       " sentences, fewer than r = " + std::to_string(r));
    std::vector<std::size_t> picked;
    const int si = side == Side::Pros ? 0 : 1;
    for (auto type : {EdgeType::Intra, EdgeType::Counter, EdgeType::Support}) {
      const auto acc = attention.accumulate(type, n, role);
      auto order = mine;
      std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return acc[a] > acc[b]; });
      order.resize(r);
      const int ti = static_cast<int>(type);
      for (std::size_t i : order) out.scores[si][ti].push_back(acc[i]);
      out.selected[si][ti] = order;
      picked.insert(picked.end(), order.begin(), order.end());
    }
    auto q = ad::flatten(ad::gather_rows(final_states, std::move(picked)));
    (side == Side::Pros ? out.q_pros : out.q_cons) = q;
  }
  return out;
}

/// FC+ReLU+LN+Dropout twice, then FC and tanh.
template <class T>
ad::Var<T> classifier_forward(const SgaModel<T>& model, const ad::Var<T>& q, Side which, bool train, Rng& rng) {
  const auto& m = model.mlp(which);
  const auto& cfg = model.config();
  if (q->value.size() != cfg.readout_dim())
    throw ModelError("classifier: input width " + std::to_string(q->value.size()) + " but expected " +
                     std::to_string(cfg.readout_dim()));
  auto h = ad::affine(q, P(m.l1_w), P(m.l1_b));
  h = ad::dropout(ad::layer_norm(ad::relu(h), P(m.ln1_g), P(m.ln1_b)), cfg.dropout, train, rng);
  h = ad::affine(h, P(m.l2_w), P(m.l2_b));
  h = ad::dropout(ad::layer_norm(ad::relu(h), P(m.ln2_g), P(m.ln2_b)), cfg.dropout, train, rng);
  return ad::tanh(ad::affine(h, P(m.l3_w), P(m.l3_b)));
}

template <class T>
struct ForwardResult {
  ad::Var<T> c_pros, c_cons;
  ad::Var<T> final_states;
  ReadoutVectors<T> readout;
  AttentionRecord attention;
  std::vector<InteractionTrace<T>> traces;

  const ad::Var<T>& score(Side s) const { return s == Side::Pros ? c_pros : c_cons; }
};

template <class T>
ForwardResult<T> forward_debate(const SgaModel<T>& model, const DebateGraph& g, bool train, Rng& rng) {
  if (g.turn_count() == 0) throw ModelError("graph " + g.debate_id + " has no turns");
  SgaRecurrence<T> rec(model, g, encode_nodes(model, g), train, rng);
  for (std::size_t t = 0; t < g.turn_count(); ++t) rec.step(t);
  ForwardResult<T> out;
  out.final_states = rec.final_states();
  out.attention = rec.attention();
  out.traces = rec.traces();
  out.readout = readout_topr(out.final_states, out.attention, g, model.config().top_r, model.config().readout_role);
  out.c_pros = classifier_forward(model, out.readout.q_pros, Side::Pros, train, rng);
  out.c_cons = classifier_forward(model, out.readout.q_cons, Side::Cons, train, rng);
  return out;
}

/// Ranking loss of one debate: winner's score should exceed the loser's.
template <class T>
ad::Var<T> debate_loss(const ForwardResult<T>& f, Side winner) {
  return ad::pce_loss(f.score(winner), f.score(opponent(winner)));
}

}  // namespace sga
