#pragma once

#include <cstdio>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"
#include "sga/corpus.hpp"
#include "sga/graph.hpp"

namespace sga {

/// Totals for one role (winner or loser) across a corpus. Cross edges are
/// credited to the side that owns the target sentence.
struct SideStats {
  std::size_t debates = 0;
  std::size_t turns = 0;
  std::size_t sentences = 0;
  std::size_t counter_edges = 0;
  std::size_t support_edges = 0;

  double per_turn(std::size_t v) const { return turns ? static_cast<double>(v) / static_cast<double>(turns) : 0.0; }
  double per_debate(std::size_t v) const {
    return debates ? static_cast<double>(v) / static_cast<double>(debates) : 0.0;
  }
};

struct StatsReport {
  GraphConfig graph;
  SideStats winner, loser;

  nlohmann::json to_json() const {
    auto side = [](const SideStats& s) {
      return nlohmann::json{{"debates", s.debates},
                            {"turns", s.turns},
                            {"sentences", s.sentences},
                            {"counter_edges", s.counter_edges},
                            {"support_edges", s.support_edges},
                            {"sentences_per_turn", s.per_turn(s.sentences)},
                            {"countering_per_turn", s.per_turn(s.counter_edges)},
                            {"supporting_per_turn", s.per_turn(s.support_edges)},
                            {"sentences_per_debate", s.per_debate(s.sentences)},
                            {"countering_per_debate", s.per_debate(s.counter_edges)},
                            {"supporting_per_debate", s.per_debate(s.support_edges)}};
    };
    return {{"cross_mode", graph.cross_mode == CrossMode::Threshold ? "threshold" : "topk"},
            {"threshold", graph.threshold},
            {"k", graph.k},
            {"winner", side(winner)},
            {"loser", side(loser)}};
  }

  std::string to_table() const {
    std::ostringstream os;
    char buf[160];
    if (graph.cross_mode == CrossMode::Threshold)
      std::snprintf(buf, sizeof buf, "cross edges: threshold %g\n", graph.threshold);
    else
      std::snprintf(buf, sizeof buf, "cross edges: top-%zu\n", graph.k);
    os << buf;
    std::snprintf(buf, sizeof buf, "%-8s %12s %12s %12s   (per turn)\n", "", "#Sentences", "#Countering", "#Supporting");
    os << buf;
    for (const auto* s : {&winner, &loser}) {
      std::snprintf(buf, sizeof buf, "%-8s %12.2f %12.2f %12.2f\n", s == &winner ? "Winner" : "Loser",
                    s->per_turn(s->sentences), s->per_turn(s->counter_edges), s->per_turn(s->support_edges));
      os << buf;
    }
    std::snprintf(buf, sizeof buf, "%-8s %12s %12s %12s   (per debate)\n", "", "#Sentences", "#Countering", "#Supporting");
    os << buf;
    for (const auto* s : {&winner, &loser}) {
      std::snprintf(buf, sizeof buf, "%-8s %12.2f %12.2f %12.2f\n", s == &winner ? "Winner" : "Loser",
                    s->per_debate(s->sentences), s->per_debate(s->counter_edges), s->per_debate(s->support_edges));
      os << buf;
    }
    return os.str();
  }
};

inline StatsReport compute_stats(const std::vector<Debate>& debates, const std::vector<DebateGraph>& graphs) {
  if (debates.empty()) throw std::invalid_argument("compute_stats: empty corpus");
  if (debates.size() != graphs.size()) throw std::invalid_argument("compute_stats: one graph per debate required");
  StatsReport rep;
  rep.graph = graphs.front().config;
  for (std::size_t i = 0; i < debates.size(); ++i) {
    const auto& d = debates[i];
    const auto& g = graphs[i];
    if (g.debate_id != d.id) throw std::invalid_argument("compute_stats: graph order does not match corpus");
    auto& w = rep.winner;
    auto& l = rep.loser;
    ++w.debates;
    ++l.debates;
    for (const auto& t : d.turns) {
      auto& s = t.side == d.winner ? w : l;
      ++s.turns;
      s.sentences += t.sentences.size();
    }
    for (const auto& e : g.counter) ++(g.nodes[e.dst].side == d.winner ? w : l).counter_edges;
    for (const auto& e : g.support) ++(g.nodes[e.dst].side == d.winner ? w : l).support_edges;
  }
  return rep;
}

}  // namespace sga
