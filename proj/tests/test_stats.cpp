#include <gtest/gtest.h>

#include "helpers.hpp"
#include "sga/stats.hpp"
#include "sga/synth.hpp"

using namespace sga;

TEST(Stats, HandBuiltCounts) {
  // Turns: pros 2, cons 1, pros 2. Winner is cons.
  auto d = sga::testing::shaped_debate("h", {2, 1, 2}, Side::Cons, 2, 7);
  Tensor<float> emb(5, 2);
  for (std::size_t i = 0; i < 5; ++i) emb(i, 0) = 1.0f;  // all parallel: every cross pair qualifies
  const auto g = build_debate_graph(d, emb, GraphConfig{});
  const auto r = compute_stats({d}, {g});
  EXPECT_EQ(r.winner.turns, 1u);
  EXPECT_EQ(r.winner.sentences, 1u);
  EXPECT_EQ(r.winner.counter_edges, 2u);  // turn 0 -> turn 1
  EXPECT_EQ(r.winner.support_edges, 0u);
  EXPECT_EQ(r.loser.turns, 2u);
  EXPECT_EQ(r.loser.sentences, 4u);
  EXPECT_EQ(r.loser.counter_edges, 2u);   // turn 1 -> turn 2
  EXPECT_EQ(r.loser.support_edges, 4u);   // turn 0 -> turn 2
  EXPECT_DOUBLE_EQ(r.loser.per_turn(r.loser.sentences), 2.0);
  EXPECT_DOUBLE_EQ(r.loser.per_debate(r.loser.support_edges), 4.0);
}

TEST(Stats, SyntheticMatchesPlantedEdges) {
  SynthConfig sc;
  sc.debates = 12;
  sc.dim = 64;
  const auto corpus = generate_synthetic(sc, 8);
  const auto emb = split_embeddings(corpus.embeddings, corpus.debates);
  std::vector<DebateGraph> graphs;
  std::size_t planted = 0;
  for (std::size_t i = 0; i < corpus.debates.size(); ++i) {
    graphs.push_back(build_debate_graph(corpus.debates[i], emb[i], GraphConfig{}));
    planted += corpus.planted[i].size();
    std::set<Edge> built(graphs.back().counter.begin(), graphs.back().counter.end());
    for (const auto& p : corpus.planted[i]) EXPECT_TRUE(built.count({p.src, p.dst}));
  }
  const auto r = compute_stats(corpus.debates, graphs);
  EXPECT_EQ(r.winner.counter_edges, planted);
  EXPECT_EQ(r.loser.counter_edges, 0u);
  EXPECT_EQ(r.winner.support_edges + r.loser.support_edges, 0u);
}

TEST(Stats, OutputsAreDeterministic) {
  auto d = sga::testing::shaped_debate("j", {2, 2}, Side::Pros);
  Tensor<float> emb(4, 2, 1.0f);
  const auto g = build_debate_graph(d, emb, GraphConfig{});
  const auto r = compute_stats({d}, {g});
  EXPECT_EQ(r.to_json().dump(), compute_stats({d}, {g}).to_json().dump());
  EXPECT_EQ(r.to_json()["winner"]["counter_edges"], 0);
  EXPECT_EQ(r.to_json()["loser"]["counter_edges"], 4);
  const auto table = r.to_table();
  EXPECT_NE(table.find("threshold 0.85"), std::string::npos);
  EXPECT_NE(table.find("Winner"), std::string::npos);
}

TEST(Stats, Errors) {
  auto d = sga::testing::shaped_debate("e", {1, 1});
  EXPECT_THROW(compute_stats({}, {}), std::invalid_argument);
  EXPECT_THROW(compute_stats({d}, {}), std::invalid_argument);
  auto other = sga::testing::shaped_debate("other", {1, 1});
  const auto g = build_debate_graph(other, Tensor<float>(2, 2, 1.0f), GraphConfig{});
  EXPECT_THROW(compute_stats({d}, {g}), std::invalid_argument);
}
