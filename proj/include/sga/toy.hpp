#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "sga/corpus.hpp"
#include "sga/gradcheck.hpp"
#include "sga/graph.hpp"
#include "sga/model.hpp"
#include "sga/rng.hpp"
#include "sga/tensor.hpp"

namespace sga {

/// Small random debate with Gaussian sentence embeddings.
struct ToyDebate {
  Debate debate;
  Tensor<float> embeddings;
};

inline ToyDebate make_toy_debate(std::size_t turns, std::size_t min_sentences, std::size_t max_sentences,
                                 std::size_t dim, std::uint64_t seed, Side winner = Side::Pros) {
  Rng rng(seed);
  std::vector<std::vector<std::string>> texts(turns);
  std::size_t n = 0;
  for (std::size_t t = 0; t < turns; ++t) {
    const std::size_t m = min_sentences + rng.below(max_sentences - min_sentences + 1);
    for (std::size_t j = 0; j < m; ++j) texts[t].push_back("toy " + std::to_string(t) + " " + std::to_string(j));
    n += m;
  }
  ToyDebate toy;
  toy.debate = make_debate("toy-" + std::to_string(seed), "toy", texts, winner, winner == Side::Pros ? 7 : 2,
                           winner == Side::Pros ? 2 : 7);
  toy.embeddings = Tensor<float>(n, dim);
  for (auto& v : toy.embeddings.values()) v = static_cast<float>(rng.normal());
  return toy;
}

/// Graph settings under which every cross edge type is populated.
inline GraphConfig toy_graph_config() {
  GraphConfig g;
  g.cross_mode = CrossMode::TopK;
  g.k = 2;
  return g;
}

/// Finite-difference check of the whole forward pass (encoding, recurrence,
/// readout, both classifiers, ranking loss) in double precision, dropout off.
inline ad::GradCheckResult full_model_grad_check(std::size_t turns, std::uint64_t seed, std::size_t probes,
                                                 std::size_t min_sentences = 3, std::size_t max_sentences = 6) {
  const std::size_t dim = 8;
  auto toy = make_toy_debate(turns, min_sentences, max_sentences, dim, seed);
  const auto g = build_debate_graph(toy.debate, toy.embeddings, toy_graph_config());
  ModelConfig cfg;
  cfg.embed_dim = dim;
  cfg.dropout = 0.0;
  SgaModel<double> model(cfg, seed);
  auto loss = [&]() {
    Rng unused(0);
    return debate_loss(forward_debate(model, g, false, unused), g.winner);
  };
  return ad::grad_check(loss, model.params(), probes, 1e-4, seed);
}

}  // namespace sga
