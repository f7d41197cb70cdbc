#pragma once

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "sga/corpus.hpp"
#include "sga/text.hpp"

namespace sga {

// Corpus file: UTF-8, one JSON record per line:
//   {"id", "topic", "winner": "pros"|"cons", "votes_pros", "votes_cons",
//    "turns": [{"side": "pros"|"cons", "sentences": [string, ...]}, ...]}
// "total_voters" is optional and defaults to votes_pros + votes_cons.
//
// The loader also accepts the debate.org export (a JSON object keyed by debate
// id, or one {"id": ..., <export fields>} per line) with "rounds" of
// {"side": "Pro"|"Con", "text"} entries and per-voter "votes" maps.

namespace io_detail {

using nlohmann::json;

[[noreturn]] inline void fail(std::size_t line, const std::string& msg) {
  throw CorpusError("corpus line " + std::to_string(line) + ": " + msg);
}

inline const json& field(const json& rec, const char* name, std::size_t line) {
  auto it = rec.find(name);
  if (it == rec.end()) fail(line, std::string("missing field \"") + name + "\"");
  return *it;
}

inline Side parse_side(const json& v, const char* what, std::size_t line) {
  if (!v.is_string()) fail(line, std::string(what) + " must be a string");
  const std::string s = text::normalize_text(v.get<std::string>());
  if (s == "pros" || s == "pro") return Side::Pros;
  if (s == "cons" || s == "con") return Side::Cons;
  fail(line, std::string("unknown ") + what + " value \"" + v.get<std::string>() + "\"");
}

inline int parse_count(const json& v, const char* name, std::size_t line) {
  if (!v.is_number_integer() || v.get<long long>() < 0) fail(line, std::string(name) + " must be a non-negative integer");
  return v.get<int>();
}

inline Debate from_native(const json& rec, std::size_t line) {
  Debate d;
  const auto& id = field(rec, "id", line);
  if (!id.is_string()) fail(line, "id must be a string");
  d.id = id.get<std::string>();
  if (auto it = rec.find("topic"); it != rec.end() && it->is_string()) d.topic = it->get<std::string>();
  d.winner = parse_side(field(rec, "winner", line), "winner", line);
  d.votes_pros = parse_count(field(rec, "votes_pros", line), "votes_pros", line);
  d.votes_cons = parse_count(field(rec, "votes_cons", line), "votes_cons", line);
  d.total_voters = d.votes_pros + d.votes_cons;
  if (auto it = rec.find("total_voters"); it != rec.end()) d.total_voters = parse_count(*it, "total_voters", line);
  const auto& turns = field(rec, "turns", line);
  if (!turns.is_array()) fail(line, "turns must be an array");
  for (const auto& t : turns) {
    Turn turn;
    turn.side = parse_side(field(t, "side", line), "side", line);
    const auto& sents = field(t, "sentences", line);
    if (!sents.is_array()) fail(line, "sentences must be an array");
    for (const auto& s : sents) {
      if (!s.is_string()) fail(line, "sentence must be a string");
      Sentence sent;
      sent.raw_text = s.get<std::string>();
      sent.normalized_text = text::normalize_text(sent.raw_text);
      turn.sentences.push_back(std::move(sent));
    }
    d.turns.push_back(std::move(turn));
  }
  reindex(d);
  return d;
}

/// One debate.org export entry. Sentences are split from each turn's raw
/// text; winner is decided by "Made more convincing arguments" votes.
inline Debate from_debate_org(const std::string& id, const json& rec, std::size_t line, bool presegmented) {
  Debate d;
  d.id = id;
  if (auto it = rec.find("title"); it != rec.end() && it->is_string()) d.topic = it->get<std::string>();
  const auto& rounds = field(rec, "rounds", line);
  if (!rounds.is_array()) fail(line, "rounds must be an array");
  for (const auto& round : rounds) {
    if (!round.is_array()) fail(line, "each round must be an array of turns");
    for (const auto& t : round) {
      Turn turn;
      turn.side = parse_side(field(t, "side", line), "side", line);
      const auto& txt = field(t, "text", line);
      std::vector<std::string> pieces;
      if (txt.is_array()) {
        for (const auto& s : txt) pieces.push_back(s.get<std::string>());
      } else if (presegmented) {
        std::istringstream ss(txt.get<std::string>());
        for (std::string l; std::getline(ss, l);)
          if (!l.empty()) pieces.push_back(l);
      } else {
        pieces = text::segment_sentences(txt.get<std::string>());
      }
      for (auto& p : pieces) {
        Sentence sent;
        sent.normalized_text = text::normalize_text(p);
        if (sent.normalized_text.empty()) continue;
        sent.raw_text = std::move(p);
        turn.sentences.push_back(std::move(sent));
      }
      d.turns.push_back(std::move(turn));
    }
  }
  reindex(d);

  std::string pro_name, con_name;
  for (int k = 1; k <= 2; ++k) {
    const std::string pfx = "participant_" + std::to_string(k);
    auto name = rec.find(pfx + "_name");
    auto pos = rec.find(pfx + "_position");
    if (name == rec.end() || pos == rec.end() || !name->is_string()) continue;
    (parse_side(*pos, "participant position", line) == Side::Pros ? pro_name : con_name) = name->get<std::string>();
  }
  if (auto votes = rec.find("votes"); votes != rec.end() && votes->is_array()) {
    for (const auto& v : *votes) {
      ++d.total_voters;
      auto map = v.find("votes_map");
      if (map == v.end() || !map->is_object()) continue;
      auto convincing = [&](const std::string& who) {
        auto p = map->find(who);
        if (p == map->end() || !p->is_object()) return false;
        auto c = p->find("Made more convincing arguments");
        return c != p->end() && c->is_boolean() && c->get<bool>();
      };
      d.votes_pros += convincing(pro_name) ? 1 : 0;
      d.votes_cons += convincing(con_name) ? 1 : 0;
    }
  }
  // Ties carry no winner; the margin filter removes them.
  d.winner = d.votes_pros > d.votes_cons ? Side::Pros : Side::Cons;
  return d;
}

}  // namespace io_detail

inline nlohmann::json debate_to_json(const Debate& d) {
  nlohmann::json turns = nlohmann::json::array();
  for (const auto& t : d.turns) {
    nlohmann::json sents = nlohmann::json::array();
    for (const auto& s : t.sentences) sents.push_back(s.raw_text);
    turns.push_back({{"side", side_name(t.side)}, {"sentences", std::move(sents)}});
  }
  nlohmann::json rec = {{"id", d.id},
                        {"topic", d.topic},
                        {"winner", side_name(d.winner)},
                        {"votes_pros", d.votes_pros},
                        {"votes_cons", d.votes_cons},
                        {"turns", std::move(turns)}};
  if (d.total_voters != d.votes_pros + d.votes_cons) rec["total_voters"] = d.total_voters;
  return rec;
}

inline std::string serialize_corpus(const std::vector<Debate>& debates) {
  std::string out;
  for (const auto& d : debates) {
    out += debate_to_json(d).dump();
    out += '\n';
  }
  return out;
}

struct LoadOptions {
  /// Debate.org export text is already one sentence per line.
  bool presegmented = false;
};

inline std::vector<Debate> parse_corpus(const std::string& content, const LoadOptions& opts = {}) {
  using nlohmann::json;
  std::vector<Debate> out;

  // A whole-file JSON object is the debate.org export keyed by id.
  const auto first = content.find_first_not_of(" \t\r\n");
  if (first != std::string::npos && content[first] == '{') {
    const auto nl = content.find('\n', first);
    const bool multi_line_object = nl != std::string::npos && !json::accept(content.substr(first, nl - first));
    if (multi_line_object) {
      json all;
      try {
        all = json::parse(content);
      } catch (const json::parse_error& e) {
        throw CorpusError(std::string("corpus: malformed JSON document: ") + e.what());
      }
      for (const auto& [id, rec] : all.items()) out.push_back(io_detail::from_debate_org(id, rec, 1, opts.presegmented));
      return out;
    }
  }

  std::istringstream in(content);
  std::size_t line_no = 0;
  for (std::string line; std::getline(in, line);) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    json rec;
    try {
      rec = json::parse(line);
    } catch (const json::parse_error& e) {
      io_detail::fail(line_no, std::string("malformed record: ") + e.what());
    }
    if (!rec.is_object()) io_detail::fail(line_no, "record must be a JSON object");
    if (rec.contains("rounds") && !rec.contains("turns")) {
      const auto& id = io_detail::field(rec, "id", line_no);
      out.push_back(io_detail::from_debate_org(id.is_string() ? id.get<std::string>() : id.dump(), rec, line_no,
                                               opts.presegmented));
    } else {
      out.push_back(io_detail::from_native(rec, line_no));
    }
  }
  return out;
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CorpusError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

/// Write to a sibling temp file, then rename over the target.
inline void write_file_atomic(const std::filesystem::path& path, std::string_view bytes) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw CorpusError("cannot write " + tmp.string());
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw CorpusError("write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

inline std::vector<Debate> load_corpus(const std::filesystem::path& path, const LoadOptions& opts = {}) {
  return parse_corpus(read_file(path), opts);
}

inline void save_corpus(const std::filesystem::path& path, const std::vector<Debate>& debates) {
  write_file_atomic(path, serialize_corpus(debates));
}

}  // namespace sga
