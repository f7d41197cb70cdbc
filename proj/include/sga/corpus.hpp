#pragma once

#include <algorithm>
#include <cstdint>
#include <cstdlib>
#include <map>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "sga/rng.hpp"
#include "sga/text.hpp"

namespace sga {

enum class Side { Pros, Cons };

inline const char* side_name(Side s) { return s == Side::Pros ? "pros" : "cons"; }
inline Side opponent(Side s) { return s == Side::Pros ? Side::Cons : Side::Pros; }
/// Even turns belong to the first speaker (Pros).
inline Side side_of_turn(std::size_t turn_index) { return turn_index % 2 == 0 ? Side::Pros : Side::Cons; }

struct Sentence {
  std::size_t global_index = 0;
  std::size_t turn_index = 0;
  std::size_t position_in_turn = 0;
  std::string raw_text;
  std::string normalized_text;

  friend bool operator==(const Sentence&, const Sentence&) = default;
};

struct Turn {
  std::size_t turn_index = 0;
  Side side = Side::Pros;
  std::vector<Sentence> sentences;

  friend bool operator==(const Turn&, const Turn&) = default;
};

struct Debate {
  std::string id;
  std::string topic;
  std::vector<Turn> turns;
  Side winner = Side::Cons;
  int votes_pros = 0;
  int votes_cons = 0;
  int total_voters = 0;

  std::size_t rounds() const { return turns.size() / 2; }
  std::size_t sentence_count() const {
    std::size_t n = 0;
    for (const auto& t : turns) n += t.sentences.size();
    return n;
  }
  Side loser() const { return opponent(winner); }

  friend bool operator==(const Debate&, const Debate&) = default;
};

class CorpusError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Rebuild turn/sentence indices so turns are 0..T-1 and global indices run
/// in (turn, position) order.
inline void reindex(Debate& d) {
  std::size_t g = 0;
  for (std::size_t t = 0; t < d.turns.size(); ++t) {
    d.turns[t].turn_index = t;
    for (std::size_t j = 0; j < d.turns[t].sentences.size(); ++j) {
      auto& s = d.turns[t].sentences[j];
      s.turn_index = t;
      s.position_in_turn = j;
      s.global_index = g++;
    }
  }
}

/// Build a debate from per-turn sentence strings. Turn sides alternate
/// starting with Pros.
inline Debate make_debate(std::string id, std::string topic, const std::vector<std::vector<std::string>>& turns,
                          Side winner, int votes_pros, int votes_cons) {
  Debate d;
  d.id = std::move(id);
  d.topic = std::move(topic);
  d.winner = winner;
  d.votes_pros = votes_pros;
  d.votes_cons = votes_cons;
  d.total_voters = votes_pros + votes_cons;
  for (std::size_t t = 0; t < turns.size(); ++t) {
    Turn turn;
    turn.side = side_of_turn(t);
    for (const auto& s : turns[t]) {
      Sentence sent;
      sent.raw_text = s;
      sent.normalized_text = text::normalize_text(s);
      turn.sentences.push_back(std::move(sent));
    }
    d.turns.push_back(std::move(turn));
  }
  reindex(d);
  return d;
}

// ---------------------------------------------------------------------------
// Filtering

struct FilterRules {
  int min_voters = 5;
  int margin = 2;
  std::size_t min_rounds = 3;
  std::size_t min_sentences = 5;
  /// Truncate kept debates to their first `min_rounds` rounds.
  bool truncate = true;
};

struct FilterReport {
  std::vector<Debate> kept;
  std::size_t rejected_side_order = 0;
  std::size_t rejected_voters = 0;
  std::size_t rejected_margin = 0;
  std::size_t rejected_rounds = 0;
  std::size_t rejected_sentences = 0;

  std::size_t rejected_total() const {
    return rejected_side_order + rejected_voters + rejected_margin + rejected_rounds + rejected_sentences;
  }
};

inline bool sides_alternate(const Debate& d) {
  for (std::size_t t = 0; t < d.turns.size(); ++t)
    if (d.turns[t].side != side_of_turn(t)) return false;
  return true;
}

/// Keep debates with enough voters, a clear winner, enough rounds and enough
/// sentences in every analysed turn. Rule order: voters, margin, rounds,
/// sentence count, then truncation.
inline FilterReport filter_corpus(const std::vector<Debate>& debates, const FilterRules& rules = {}) {
  FilterReport rep;
  const std::size_t analysed_turns = 2 * rules.min_rounds;
  for (const auto& d : debates) {
    if (!sides_alternate(d)) {
      ++rep.rejected_side_order;
      continue;
    }
    if (d.total_voters < rules.min_voters) {
      ++rep.rejected_voters;
      continue;
    }
    if (std::abs(d.votes_pros - d.votes_cons) < rules.margin) {
      ++rep.rejected_margin;
      continue;
    }
    if (d.rounds() < rules.min_rounds) {
      ++rep.rejected_rounds;
      continue;
    }
    bool short_turn = false;
    for (std::size_t t = 0; t < analysed_turns; ++t)
      short_turn = short_turn || d.turns[t].sentences.size() < rules.min_sentences;
    if (short_turn) {
      ++rep.rejected_sentences;
      continue;
    }
    Debate kept = d;
    if (rules.truncate && kept.turns.size() > analysed_turns) {
      kept.turns.resize(analysed_turns);
      reindex(kept);
    }
    rep.kept.push_back(std::move(kept));
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Augmentation

inline constexpr std::string_view kAugmentSuffix = "-aug";

inline bool is_augmented(std::string_view id) {
  return id.size() >= kAugmentSuffix.size() && id.substr(id.size() - kAugmentSuffix.size()) == kAugmentSuffix;
}

inline std::string base_id(std::string_view id) {
  return std::string(is_augmented(id) ? id.substr(0, id.size() - kAugmentSuffix.size()) : id);
}

/// Every input debate truncated to its first `rounds` rounds, plus, for each
/// Pros-won debate with more than `rounds` rounds, a copy built from its last
/// `rounds` rounds (id suffixed "-aug", turns re-based to 0).
inline std::vector<Debate> augment_corpus(const std::vector<Debate>& debates, std::size_t rounds = 3) {
  std::vector<Debate> out;
  const std::size_t turns = 2 * rounds;
  for (const auto& d : debates) {
    Debate first = d;
    if (first.turns.size() > turns) {
      first.turns.resize(turns);
      reindex(first);
    }
    out.push_back(std::move(first));
    if (d.winner == Side::Pros && d.rounds() > rounds) {
      Debate aug = d;
      aug.id += kAugmentSuffix;
      const std::size_t last_round_end = 2 * d.rounds();
      aug.turns.assign(d.turns.begin() + static_cast<std::ptrdiff_t>(last_round_end - turns),
                       d.turns.begin() + static_cast<std::ptrdiff_t>(last_round_end));
      reindex(aug);
      out.push_back(std::move(aug));
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Splitting

struct CorpusSplit {
  std::vector<std::string> train, val, test;
  std::uint64_t seed = 0;
};

/// Seeded 60/20/20 split. A debate and its augmented copy always land in the
/// same fold. Depends only on the set of ids and the seed.
inline CorpusSplit split_corpus(const std::vector<Debate>& debates, std::uint64_t seed) {
  if (debates.size() < 5)
    throw CorpusError("split_corpus: need at least 5 debates, got " + std::to_string(debates.size()));
  std::map<std::string, std::vector<std::string>> groups;
  for (const auto& d : debates) groups[base_id(d.id)].push_back(d.id);
  std::vector<std::vector<std::string>> order;
  for (auto& [key, ids] : groups) {
    std::sort(ids.begin(), ids.end());
    order.push_back(ids);
  }
  Rng rng(seed);
  rng.shuffle(std::span(order));

  const std::size_t n = debates.size();
  const std::size_t n_test = (n + 2) / 5;  // round(0.2 n)
  const std::size_t n_val = n_test;
  CorpusSplit split;
  split.seed = seed;
  for (const auto& g : order) {
    auto& fold = split.test.size() + g.size() <= n_test ? split.test
                 : split.val.size() + g.size() <= n_val ? split.val
                                                        : split.train;
    fold.insert(fold.end(), g.begin(), g.end());
  }
  return split;
}

}  // namespace sga
