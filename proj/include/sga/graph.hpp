#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "sga/corpus.hpp"
#include "sga/tensor.hpp"

namespace sga {

enum class CrossMode { Threshold, TopK };

struct GraphConfig {
  /// Intra-turn positional distance limit.
  std::size_t d = 3;
  CrossMode cross_mode = CrossMode::Threshold;
  /// Cosine threshold S_th for Threshold mode (edge iff similarity >= threshold).
  double threshold = 0.85;
  /// Per-target cap for TopK mode.
  std::size_t k = 3;
  /// TopK over counter and support candidates together instead of per type.
  bool topk_combined = false;

  void validate() const {
    if (d < 1) throw std::invalid_argument("graph config: d must be >= 1");
    if (!(threshold > -1.0 && threshold <= 1.0)) throw std::invalid_argument("graph config: threshold must lie in (-1, 1]");
    if (k < 1) throw std::invalid_argument("graph config: k must be >= 1");
  }

  friend bool operator==(const GraphConfig&, const GraphConfig&) = default;
};

struct Edge {
  std::size_t src = 0;
  std::size_t dst = 0;

  friend auto operator<=>(const Edge&, const Edge&) = default;
};

using EdgeList = std::vector<Edge>;

struct NodeInfo {
  std::size_t turn_index = 0;
  Side side = Side::Pros;
  std::size_t position_in_turn = 0;
  std::size_t global_index = 0;
};

enum class EdgeType { Intra, Counter, Support };

inline const char* edge_type_name(EdgeType t) {
  switch (t) {
    case EdgeType::Intra: return "I";
    case EdgeType::Counter: return "C";
    case EdgeType::Support: return "S";
  }
  return "?";
}

/// Typed directed sentence graph of one debate. Immutable once built.
struct DebateGraph {
  std::string debate_id;
  Side winner = Side::Cons;
  std::vector<NodeInfo> nodes;
  /// First node of each turn, plus a final entry equal to nodes.size().
  std::vector<std::size_t> turn_offsets;
  Tensor<float> raw_embeddings;
  EdgeList intra, counter, support;
  GraphConfig config;

  std::size_t node_count() const { return nodes.size(); }
  std::size_t turn_count() const { return turn_offsets.empty() ? 0 : turn_offsets.size() - 1; }
  std::size_t turn_size(std::size_t t) const { return turn_offsets[t + 1] - turn_offsets[t]; }

  const EdgeList& edges(EdgeType type) const {
    return type == EdgeType::Intra ? intra : type == EdgeType::Counter ? counter : support;
  }
  EdgeList& edges(EdgeType type) { return type == EdgeType::Intra ? intra : type == EdgeType::Counter ? counter : support; }

  std::span<const float> embedding(std::size_t node) const {
    return {raw_embeddings.row(node), raw_embeddings.cols()};
  }
};

class GraphError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// u·v / (|u| |v|), accumulated in double.
inline double cosine_similarity(std::span<const float> u, std::span<const float> v) {
  if (u.size() != v.size())
    throw GraphError("cosine_similarity: dimension mismatch " + std::to_string(u.size()) + " vs " + std::to_string(v.size()));
  double dot = 0.0, uu = 0.0, vv = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    dot += static_cast<double>(u[i]) * v[i];
    uu += static_cast<double>(u[i]) * u[i];
    vv += static_cast<double>(v[i]) * v[i];
  }
  if (uu == 0.0 || vv == 0.0) throw GraphError("cosine_similarity: zero vector has no direction");
  return dot / (std::sqrt(uu) * std::sqrt(vv));
}

/// Edges j -> i for every ordered pair of sentences in one turn with
/// 1 <= |i - j| <= d, using the sentences' global indices.
inline EdgeList build_intra_edges(const Turn& turn, std::size_t d) {
  EdgeList out;
  const auto& s = turn.sentences;
  for (std::size_t i = 0; i < s.size(); ++i)
    for (std::size_t j = 0; j < s.size(); ++j) {
      const std::size_t dist = i > j ? i - j : j - i;
      if (dist >= 1 && dist <= d) out.push_back({s[j].global_index, s[i].global_index});
    }
  return out;
}

/// Cross edges from every node of `sources` into every node of `targets`
/// (global indices into `embeddings` rows). Threshold: similarity >= S_th.
/// TopK: each target keeps its k most similar sources, ties to the lower index.
inline EdgeList build_cross_edges(std::span<const std::size_t> sources, std::span<const std::size_t> targets,
                                  const Tensor<float>& embeddings, const GraphConfig& cfg) {
  EdgeList out;
  const std::size_t dim = embeddings.cols();
  auto row = [&](std::size_t n) { return std::span<const float>(embeddings.row(n), dim); };
  for (std::size_t dst : targets) {
    if (cfg.cross_mode == CrossMode::Threshold) {
      for (std::size_t src : sources)
        if (cosine_similarity(row(src), row(dst)) >= cfg.threshold) out.push_back({src, dst});
    } else {
      std::vector<std::pair<double, std::size_t>> scored;
      for (std::size_t src : sources) scored.emplace_back(cosine_similarity(row(src), row(dst)), src);
      std::sort(scored.begin(), scored.end(),
                [](const auto& a, const auto& b) { return a.first != b.first ? a.first > b.first : a.second < b.second; });
      if (scored.size() > cfg.k) scored.resize(cfg.k);
      std::vector<std::size_t> keep;
      for (const auto& [s, src] : scored) keep.push_back(src);
      std::sort(keep.begin(), keep.end());
      for (std::size_t src : keep) out.push_back({src, dst});
    }
  }
  return out;
}

namespace graph_detail {
inline std::vector<std::size_t> turn_nodes(const DebateGraph& g, std::size_t t) {
  std::vector<std::size_t> v(g.turn_size(t));
  std::iota(v.begin(), v.end(), g.turn_offsets[t]);
  return v;
}
}  // namespace graph_detail

/// Every violated structural rule, empty when the graph is valid.
inline std::vector<std::string> validate_graph(const DebateGraph& g) {
  std::vector<std::string> issues;
  const std::size_t n = g.nodes.size();
  auto check_list = [&](const EdgeList& edges, EdgeType type) {
    std::set<Edge> seen;
    const std::string tag = std::string(edge_type_name(type)) + " edge ";
    for (const auto& e : edges) {
      const std::string where = tag + std::to_string(e.src) + "->" + std::to_string(e.dst);
      if (e.src >= n || e.dst >= n) {
        issues.push_back(where + ": node index out of range");
        continue;
      }
      if (!seen.insert(e).second) issues.push_back(where + ": duplicate edge");
      if (e.src == e.dst) issues.push_back(where + ": self loop");
      const auto& s = g.nodes[e.src];
      const auto& d = g.nodes[e.dst];
      if (type == EdgeType::Intra) {
        const std::size_t dist = s.position_in_turn > d.position_in_turn ? s.position_in_turn - d.position_in_turn
                                                                         : d.position_in_turn - s.position_in_turn;
        if (s.turn_index != d.turn_index) issues.push_back(where + ": intra edge crosses turns");
        if (dist < 1 || dist > g.config.d) issues.push_back(where + ": intra edge exceeds distance threshold");
        continue;
      }
      if (s.turn_index >= d.turn_index) issues.push_back(where + ": cross edge not forward");
      const std::size_t delta = type == EdgeType::Counter ? 1 : 2;
      if (s.turn_index + delta != d.turn_index) issues.push_back(where + ": wrong turn gap");
      if (type == EdgeType::Counter && s.side == d.side) issues.push_back(where + ": counter edge between same side");
      if (type == EdgeType::Support && s.side != d.side) issues.push_back(where + ": support edge between opposing sides");
    }
  };
  check_list(g.intra, EdgeType::Intra);
  check_list(g.counter, EdgeType::Counter);
  check_list(g.support, EdgeType::Support);
  if (g.raw_embeddings.rows() != n) issues.push_back("embedding rows do not match node count");
  for (std::size_t i = 0; i < n; ++i)
    if (g.nodes[i].global_index != i) {
      issues.push_back("node " + std::to_string(i) + ": global index out of order");
      break;
    }
  return issues;
}

/// Nodes in global order, intra edges per turn, counter edges from turn t-1
/// into t (t >= 1) and support edges from t-2 into t (t >= 2).
inline DebateGraph build_debate_graph(const Debate& debate, const Tensor<float>& embeddings, const GraphConfig& cfg) {
  cfg.validate();
  if (embeddings.rank() != 2 || embeddings.rows() != debate.sentence_count())
    throw GraphError("debate " + debate.id + ": " + std::to_string(embeddings.rows()) + " embedding rows for " +
                     std::to_string(debate.sentence_count()) + " sentences");
  DebateGraph g;
  g.debate_id = debate.id;
  g.winner = debate.winner;
  g.config = cfg;
  g.raw_embeddings = embeddings;
  for (const auto& t : debate.turns) {
    g.turn_offsets.push_back(g.nodes.size());
    for (const auto& s : t.sentences) {
      if (s.global_index != g.nodes.size()) throw GraphError("debate " + debate.id + ": sentence indices not contiguous");
      g.nodes.push_back({t.turn_index, t.side, s.position_in_turn, s.global_index});
    }
  }
  g.turn_offsets.push_back(g.nodes.size());

  for (const auto& t : debate.turns) {
    auto e = build_intra_edges(t, cfg.d);
    g.intra.insert(g.intra.end(), e.begin(), e.end());
  }
  for (std::size_t t = 1; t < g.turn_count(); ++t) {
    const auto targets = graph_detail::turn_nodes(g, t);
    const auto prev = graph_detail::turn_nodes(g, t - 1);
    if (cfg.cross_mode == CrossMode::TopK && cfg.topk_combined && t >= 2) {
      auto candidates = prev;
      const auto prev2 = graph_detail::turn_nodes(g, t - 2);
      candidates.insert(candidates.end(), prev2.begin(), prev2.end());
      for (const auto& e : build_cross_edges(candidates, targets, embeddings, cfg))
        (g.nodes[e.src].turn_index + 1 == t ? g.counter : g.support).push_back(e);
      continue;
    }
    auto c = build_cross_edges(prev, targets, embeddings, cfg);
    g.counter.insert(g.counter.end(), c.begin(), c.end());
    if (t >= 2) {
      auto s = build_cross_edges(graph_detail::turn_nodes(g, t - 2), targets, embeddings, cfg);
      g.support.insert(g.support.end(), s.begin(), s.end());
    }
  }
  auto by_dst = [](const Edge& a, const Edge& b) { return a.dst != b.dst ? a.dst < b.dst : a.src < b.src; };
  std::sort(g.intra.begin(), g.intra.end(), by_dst);
  std::sort(g.counter.begin(), g.counter.end(), by_dst);
  std::sort(g.support.begin(), g.support.end(), by_dst);

  if (auto issues = validate_graph(g); !issues.empty())
    throw GraphError("debate " + debate.id + ": invalid graph: " + issues.front());
  return g;
}

/// Text dump: NODES / INTRA / COUNTER / SUPPORT sections, one tuple per line.
inline std::string dump_graph(const DebateGraph& g) {
  std::ostringstream os;
  os << "GRAPH " << g.debate_id << " nodes=" << g.node_count() << " turns=" << g.turn_count() << '\n';
  os << "NODES\n";
  for (const auto& n : g.nodes)
    os << n.global_index << ' ' << n.turn_index << ' ' << side_name(n.side) << ' ' << n.position_in_turn << '\n';
  for (EdgeType type : {EdgeType::Intra, EdgeType::Counter, EdgeType::Support}) {
    os << (type == EdgeType::Intra ? "INTRA" : type == EdgeType::Counter ? "COUNTER" : "SUPPORT") << '\n';
    for (const auto& e : g.edges(type)) os << e.src << ' ' << e.dst << '\n';
  }
  return os.str();
}

}  // namespace sga
