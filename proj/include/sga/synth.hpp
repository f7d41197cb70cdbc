#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "sga/corpus.hpp"
#include "sga/corpus_io.hpp"
#include "sga/embeddings.hpp"
#include "sga/graph.hpp"
#include "sga/rng.hpp"

namespace sga {

struct SynthConfig {
  std::size_t debates = 200;
  std::size_t turns = 6;
  std::size_t min_sentences = 5;
  std::size_t max_sentences = 8;
  std::size_t dim = 384;
  /// Planted signal strength s in [0, 1]; 0 makes both sides pure noise.
  double signal = 1.0;
  /// Weight of the winning side's shared direction in each winner sentence.
  double centroid_weight = 0.4;
  /// Weight of the private noise added to a winner sentence.
  double noise_weight = 0.2;
};

/// A winner sentence built from a specific opponent sentence of the previous turn.
struct PlantedEdge {
  std::size_t src = 0;
  std::size_t dst = 0;
};

struct SyntheticCorpus {
  std::vector<Debate> debates;
  EmbeddingFile embeddings;
  /// Per debate, the counter edges the generator planted (global node indices).
  std::vector<std::vector<PlantedEdge>> planted;
};

namespace synth_detail {

inline std::vector<double> gaussian(Rng& rng, std::size_t dim) {
  std::vector<double> v(dim);
  for (auto& x : v) x = rng.normal();
  return v;
}

inline double dot(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

inline void normalize(std::vector<double>& v) {
  const double n = std::sqrt(dot(v, v));
  for (auto& x : v) x /= n;
}

/// Unit vector of v with its component along unit u removed.
inline std::vector<double> orthogonal_unit(std::vector<double> v, const std::vector<double>& u) {
  const double p = dot(v, u);
  for (std::size_t i = 0; i < v.size(); ++i) v[i] -= p * u[i];
  normalize(v);
  return v;
}

}  // namespace synth_detail

/// Planted-signal corpus. Winners alternate Pros/Cons. Loser sentences are
/// isotropic unit noise. A winner sentence at turn t >= 1 is
///   normalize(s * (u + w * c_perp + e * g_perp) + (1 - s) * noise)
/// where u is a random opponent sentence of turn t-1, c the winning side's
/// corpus-wide direction and g private noise, both made orthogonal to u. With
/// s = 1 its cosine to u is at least 1 / sqrt(1 + (w + e)^2).
inline SyntheticCorpus generate_synthetic(const SynthConfig& cfg, std::uint64_t seed) {
  using namespace synth_detail;
  if (!(cfg.signal >= 0.0 && cfg.signal <= 1.0)) throw std::invalid_argument("synth: signal must lie in [0, 1]");
  if (cfg.turns < 1 || cfg.dim < 2 || cfg.min_sentences < 1 || cfg.max_sentences < cfg.min_sentences)
    throw std::invalid_argument("synth: invalid shape parameters");

  Rng rng(seed);
  const double s = cfg.signal;
  std::vector<double> centroid[2] = {gaussian(rng, cfg.dim), gaussian(rng, cfg.dim)};
  normalize(centroid[0]);
  normalize(centroid[1]);

  SyntheticCorpus out;
  std::vector<float> all_vectors;
  for (std::size_t di = 0; di < cfg.debates; ++di) {
    const Side winner = di % 2 == 0 ? Side::Pros : Side::Cons;
    const auto& c = centroid[winner == Side::Pros ? 0 : 1];
    std::vector<std::vector<std::string>> texts(cfg.turns);
    std::vector<std::vector<std::vector<double>>> vecs(cfg.turns);
    std::vector<PlantedEdge> planted;
    std::size_t offset = 0, prev_offset = 0;
    for (std::size_t t = 0; t < cfg.turns; ++t) {
      const std::size_t m = cfg.min_sentences + rng.below(cfg.max_sentences - cfg.min_sentences + 1);
      const bool winner_turn = side_of_turn(t) == winner;
      for (std::size_t j = 0; j < m; ++j) {
        texts[t].push_back("synthetic sentence " + std::to_string(t) + " " + std::to_string(j) + " of debate " +
                           std::to_string(di));
        std::vector<double> v = gaussian(rng, cfg.dim);
        normalize(v);
        if (winner_turn && s > 0.0) {
          std::vector<double> planted_part;
          if (t >= 1) {
            const std::size_t pick = rng.below(vecs[t - 1].size());
            const auto& u = vecs[t - 1][pick];
            const auto cp = orthogonal_unit(c, u);
            const auto gp = orthogonal_unit(gaussian(rng, cfg.dim), u);
            planted_part = u;
            for (std::size_t i = 0; i < cfg.dim; ++i)
              planted_part[i] += cfg.centroid_weight * cp[i] + cfg.noise_weight * gp[i];
            planted.push_back({prev_offset + pick, offset + j});
          } else {
            planted_part = gaussian(rng, cfg.dim);
            normalize(planted_part);
            for (std::size_t i = 0; i < cfg.dim; ++i) planted_part[i] += cfg.centroid_weight * c[i];
          }
          for (std::size_t i = 0; i < cfg.dim; ++i) v[i] = s * planted_part[i] + (1.0 - s) * v[i];
          normalize(v);
        }
        vecs[t].push_back(std::move(v));
      }
      prev_offset = offset;
      offset += m;
    }
    const int wv = 7, lv = 2;
    out.debates.push_back(make_debate("synth-" + std::to_string(di), "synthetic topic " + std::to_string(di), texts,
                                      winner, winner == Side::Pros ? wv : lv, winner == Side::Pros ? lv : wv));
    for (const auto& turn : vecs)
      for (const auto& v : turn)
        for (double x : v) all_vectors.push_back(static_cast<float>(x));
    out.planted.push_back(std::move(planted));
  }

  out.embeddings.dim = static_cast<std::uint32_t>(cfg.dim);
  out.embeddings.count = all_vectors.size() / cfg.dim;
  out.embeddings.model_name = "synthetic-planted-v1";
  out.embeddings.corpus_digest = sha256(serialize_corpus(out.debates));
  out.embeddings.vectors = std::move(all_vectors);
  return out;
}

}  // namespace sga
