#pragma once

#include <string>
#include <vector>

#include "sga/corpus.hpp"

namespace sga::testing {

/// Debate with `turns` turns of `per_turn` sentences each.
inline Debate uniform_debate(const std::string& id, std::size_t turns, std::size_t per_turn, Side winner, int votes_pros,
                             int votes_cons) {
  std::vector<std::vector<std::string>> texts(turns);
  for (std::size_t t = 0; t < turns; ++t)
    for (std::size_t j = 0; j < per_turn; ++j)
      texts[t].push_back("Turn " + std::to_string(t) + " sentence " + std::to_string(j) + ".");
  return make_debate(id, "topic " + id, texts, winner, votes_pros, votes_cons);
}

/// Debate whose turns have the given sentence counts.
inline Debate shaped_debate(const std::string& id, const std::vector<std::size_t>& sizes, Side winner = Side::Pros,
                            int votes_pros = 7, int votes_cons = 2) {
  std::vector<std::vector<std::string>> texts(sizes.size());
  for (std::size_t t = 0; t < sizes.size(); ++t)
    for (std::size_t j = 0; j < sizes[t]; ++j) texts[t].push_back("s" + std::to_string(t) + "_" + std::to_string(j));
  return make_debate(id, "topic", texts, winner, votes_pros, votes_cons);
}

}  // namespace sga::testing
