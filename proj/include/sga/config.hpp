#pragma once

#include <charconv>
#include <cstdint>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "sga/corpus.hpp"
#include "sga/graph.hpp"
#include "sga/model.hpp"
#include "sga/optim.hpp"

namespace sga {

struct TrainConfig {
  ModelConfig model;
  GraphConfig graph;
  FilterRules filter;
  ad::AdamConfig adam;
  std::size_t batch_size = 32;
  std::size_t max_epochs = 50;
  /// Epochs without validation-loss improvement before stopping.
  std::size_t patience = 5;
  std::uint64_t seed = 1;

  void validate() const {
    if (batch_size == 0 || max_epochs == 0 || patience == 0)
      throw std::invalid_argument("train config: batch_size, max_epochs and patience must be positive");
    if (patience > max_epochs) throw std::invalid_argument("train config: patience exceeds max_epochs");
    if (!(adam.lr > 0.0)) throw std::invalid_argument("train config: lr must be positive");
    if (model.dropout < 0.0 || model.dropout >= 1.0) throw std::invalid_argument("train config: dropout must be in [0, 1)");
    graph.validate();
  }
};

class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Ordered `key = value` lines; '#' starts a comment.
class KeyValues {
 public:
  static KeyValues parse(const std::string& textual) {
    KeyValues kv;
    std::istringstream in(textual);
    std::size_t line_no = 0;
    for (std::string line; std::getline(in, line);) {
      ++line_no;
      if (auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
      const auto eq = line.find('=');
      auto trim = [](std::string s) {
        const auto b = s.find_first_not_of(" \t\r");
        const auto e = s.find_last_not_of(" \t\r");
        return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
      };
      if (trim(line).empty()) continue;
      if (eq == std::string::npos) throw ConfigError("config line " + std::to_string(line_no) + ": expected key = value");
      kv.set(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    }
    return kv;
  }

  void set(const std::string& key, const std::string& value) {
    if (!values_.count(key)) order_.push_back(key);
    values_[key] = value;
  }
  const std::map<std::string, std::string>& values() const { return values_; }

  std::string str() const {
    std::string out;
    for (const auto& k : order_) out += k + " = " + values_.at(k) + "\n";
    return out;
  }

 private:
  std::vector<std::string> order_;
  std::map<std::string, std::string> values_;
};

namespace config_detail {

inline std::string fmt_double(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

template <class U>
U parse_number(const std::string& key, const std::string& v) {
  U out{};
  const char* end = v.data() + v.size();
  auto [ptr, ec] = std::from_chars(v.data(), end, out);
  if (ec != std::errc() || ptr != end) throw ConfigError("config: bad value for " + key + ": '" + v + "'");
  return out;
}

inline double parse_double(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    const double d = std::stod(v, &used);
    if (used != v.size()) throw ConfigError("");
    return d;
  } catch (...) {
    throw ConfigError("config: bad value for " + key + ": '" + v + "'");
  }
}

inline bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw ConfigError("config: bad boolean for " + key + ": '" + v + "'");
}

}  // namespace config_detail

inline KeyValues to_key_values(const TrainConfig& c) {
  using config_detail::fmt_double;
  KeyValues kv;
  auto b = [](bool v) { return std::string(v ? "true" : "false"); };
  kv.set("seed", std::to_string(c.seed));
  kv.set("lr", fmt_double(c.adam.lr));
  kv.set("beta1", fmt_double(c.adam.beta1));
  kv.set("beta2", fmt_double(c.adam.beta2));
  kv.set("adam_eps", fmt_double(c.adam.eps));
  kv.set("batch_size", std::to_string(c.batch_size));
  kv.set("max_epochs", std::to_string(c.max_epochs));
  kv.set("patience", std::to_string(c.patience));
  kv.set("dropout", fmt_double(c.model.dropout));
  kv.set("embed_dim", std::to_string(c.model.embed_dim));
  kv.set("turn_dim", std::to_string(c.model.turn_dim));
  kv.set("max_turns", std::to_string(c.model.max_turns));
  kv.set("state_dim", std::to_string(c.model.state_dim));
  kv.set("r", std::to_string(c.model.top_r));
  kv.set("disable_gati", b(c.model.disable_gati));
  kv.set("disable_gatc", b(c.model.disable_gatc));
  kv.set("disable_gats", b(c.model.disable_gats));
  kv.set("readout_role", c.model.readout_role == ReadoutRole::Source ? "source" : "target");
  kv.set("d", std::to_string(c.graph.d));
  kv.set("cross_mode", c.graph.cross_mode == CrossMode::Threshold ? "threshold" : "topk");
  kv.set("threshold", fmt_double(c.graph.threshold));
  kv.set("k", std::to_string(c.graph.k));
  kv.set("topk_combined", b(c.graph.topk_combined));
  kv.set("min_voters", std::to_string(c.filter.min_voters));
  kv.set("margin", std::to_string(c.filter.margin));
  kv.set("min_rounds", std::to_string(c.filter.min_rounds));
  kv.set("min_sentences", std::to_string(c.filter.min_sentences));
  return kv;
}

/// Apply every key in `kv` onto `c`. Unknown keys are an error.
inline void apply_key_values(const KeyValues& kv, TrainConfig& c) {
  using namespace config_detail;
  for (const auto& [k, v] : kv.values()) {
    if (k == "seed") c.seed = parse_number<std::uint64_t>(k, v);
    else if (k == "lr") c.adam.lr = parse_double(k, v);
    else if (k == "beta1") c.adam.beta1 = parse_double(k, v);
    else if (k == "beta2") c.adam.beta2 = parse_double(k, v);
    else if (k == "adam_eps") c.adam.eps = parse_double(k, v);
    else if (k == "batch_size") c.batch_size = parse_number<std::size_t>(k, v);
    else if (k == "max_epochs") c.max_epochs = parse_number<std::size_t>(k, v);
    else if (k == "patience") c.patience = parse_number<std::size_t>(k, v);
    else if (k == "dropout") c.model.dropout = parse_double(k, v);
    else if (k == "embed_dim") c.model.embed_dim = parse_number<std::size_t>(k, v);
    else if (k == "turn_dim") c.model.turn_dim = parse_number<std::size_t>(k, v);
    else if (k == "max_turns") c.model.max_turns = parse_number<std::size_t>(k, v);
    else if (k == "state_dim") c.model.state_dim = parse_number<std::size_t>(k, v);
    else if (k == "r") c.model.top_r = parse_number<std::size_t>(k, v);
    else if (k == "disable_gati") c.model.disable_gati = parse_bool(k, v);
    else if (k == "disable_gatc") c.model.disable_gatc = parse_bool(k, v);
    else if (k == "disable_gats") c.model.disable_gats = parse_bool(k, v);
    else if (k == "readout_role") {
      if (v == "source") c.model.readout_role = ReadoutRole::Source;
      else if (v == "target") c.model.readout_role = ReadoutRole::Target;
      else throw ConfigError("config: readout_role must be source or target");
    } else if (k == "d") c.graph.d = parse_number<std::size_t>(k, v);
    else if (k == "cross_mode") {
      if (v == "threshold") c.graph.cross_mode = CrossMode::Threshold;
      else if (v == "topk") c.graph.cross_mode = CrossMode::TopK;
      else throw ConfigError("config: cross_mode must be threshold or topk");
    } else if (k == "threshold") c.graph.threshold = parse_double(k, v);
    else if (k == "k") c.graph.k = parse_number<std::size_t>(k, v);
    else if (k == "topk_combined") c.graph.topk_combined = parse_bool(k, v);
    else if (k == "min_voters") c.filter.min_voters = parse_number<int>(k, v);
    else if (k == "margin") c.filter.margin = parse_number<int>(k, v);
    else if (k == "min_rounds") c.filter.min_rounds = parse_number<std::size_t>(k, v);
    else if (k == "min_sentences") c.filter.min_sentences = parse_number<std::size_t>(k, v);
    else throw ConfigError("config: unknown key '" + k + "'");
  }
}

inline TrainConfig parse_train_config(const std::string& textual) {
  TrainConfig c;
  apply_key_values(KeyValues::parse(textual), c);
  return c;
}

}  // namespace sga
