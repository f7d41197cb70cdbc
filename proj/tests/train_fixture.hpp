#pragma once

#include <vector>

#include "sga/config.hpp"
#include "sga/embeddings.hpp"
#include "sga/synth.hpp"

namespace sga::testing {

/// Small planted-signal corpus with graphs and a split, for fast training tests.
struct TrainFixture {
  SyntheticCorpus corpus;
  std::vector<Tensor<float>> embeddings;
  std::vector<DebateGraph> graphs;
  CorpusSplit split;
  TrainConfig config;
};

inline TrainFixture make_train_fixture(std::size_t debates = 30, double signal = 1.0, std::uint64_t seed = 3) {
  TrainFixture f;
  SynthConfig sc;
  sc.debates = debates;
  sc.turns = 4;
  sc.min_sentences = 3;
  sc.max_sentences = 4;
  sc.dim = 16;
  sc.signal = signal;
  f.corpus = generate_synthetic(sc, seed);
  f.embeddings = split_embeddings(f.corpus.embeddings, f.corpus.debates);
  f.config.model.embed_dim = sc.dim;
  f.config.model.state_dim = 8;
  f.config.max_epochs = 3;
  f.config.patience = 2;
  f.config.batch_size = 8;
  f.config.adam.lr = 1e-3;
  f.config.seed = seed;
  for (std::size_t i = 0; i < debates; ++i)
    f.graphs.push_back(build_debate_graph(f.corpus.debates[i], f.embeddings[i], f.config.graph));
  f.split = split_corpus(f.corpus.debates, seed);
  return f;
}

}  // namespace sga::testing
