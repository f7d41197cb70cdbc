#pragma once

#include <algorithm>
#include <array>
#include <cctype>
#include <string>
#include <string_view>
#include <vector>

namespace sga::text {

namespace detail {

inline bool is_space(char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v'; }
inline bool is_digit(char c) { return c >= '0' && c <= '9'; }
inline char lower(char c) { return (c >= 'A' && c <= 'Z') ? static_cast<char>(c - 'A' + 'a') : c; }

inline bool starts_with_ci(std::string_view s, std::size_t pos, std::string_view prefix) {
  if (pos + prefix.size() > s.size()) return false;
  for (std::size_t i = 0; i < prefix.size(); ++i)
    if (lower(s[pos + i]) != prefix[i]) return false;
  return true;
}

// Trailing characters that usually close a sentence or bracket rather than
// belong to the URL.
inline bool url_trailer(char c) {
  return c == '.' || c == ',' || c == '!' || c == '?' || c == ';' || c == ':' || c == ')' || c == ']' ||
         c == '"' || c == '\'';
}

}  // namespace detail

/// Replace URLs (http://, https://, www.) by "website" in place of the whole
/// whitespace-delimited run, keeping trailing sentence punctuation.
inline std::string replace_urls(std::string_view in) {
  std::string out;
  out.reserve(in.size());
  std::size_t i = 0;
  while (i < in.size()) {
    const bool at_token_start = i == 0 || detail::is_space(in[i - 1]) || in[i - 1] == '(' || in[i - 1] == '"';
    if (at_token_start && (detail::starts_with_ci(in, i, "http://") || detail::starts_with_ci(in, i, "https://") ||
                           detail::starts_with_ci(in, i, "www."))) {
      std::size_t j = i;
      while (j < in.size() && !detail::is_space(in[j])) ++j;
      std::size_t end = j;
      while (end > i && detail::url_trailer(in[end - 1])) --end;
      out += "website";
      out.append(in.substr(end, j - end));
      i = j;
    } else {
      out += in[i++];
    }
  }
  return out;
}

/// Replace every maximal number (digits, optionally grouped/decimal with
/// ',' or '.' between digits) by "number".
inline std::string replace_numbers(std::string_view in) {
  std::string out;
  out.reserve(in.size());
  std::size_t i = 0;
  while (i < in.size()) {
    if (!detail::is_digit(in[i])) {
      out += in[i++];
      continue;
    }
    std::size_t j = i;
    while (j < in.size()) {
      if (detail::is_digit(in[j])) {
        ++j;
      } else if ((in[j] == '.' || in[j] == ',') && j + 1 < in.size() && detail::is_digit(in[j + 1])) {
        ++j;
      } else {
        break;
      }
    }
    out += "number";
    i = j;
  }
  return out;
}

/// URLs -> "website", numbers -> "number", ASCII lowercase, whitespace
/// collapsed and trimmed. Idempotent.
inline std::string normalize_text(std::string_view raw) {
  const std::string replaced = replace_numbers(replace_urls(raw));
  std::string out;
  out.reserve(replaced.size());
  bool pending_space = false;
  for (char c : replaced) {
    if (detail::is_space(c)) {
      pending_space = !out.empty();
      continue;
    }
    if (pending_space) out += ' ';
    pending_space = false;
    out += detail::lower(c);
  }
  return out;
}

/// Tokens that end in '.' without ending a sentence.
inline constexpr std::array<std::string_view, 24> kAbbreviations = {
    "dr", "mr", "mrs", "ms", "prof", "sr", "jr", "st", "vs", "etc", "e.g", "i.e",
    "inc", "ltd", "co", "corp", "no", "fig", "gen", "gov", "sen", "rep", "u.s", "approx"};

inline bool is_abbreviation(std::string_view token) {
  std::string t;
  for (char c : token) t += detail::lower(c);
  while (!t.empty() && (t.front() == '(' || t.front() == '"' || t.front() == '\'')) t.erase(t.begin());
  return std::find(kAbbreviations.begin(), kAbbreviations.end(), t) != kAbbreviations.end();
}

/// Rule-based split after runs of '.', '!' or '?' (plus closing quotes or
/// brackets) that are followed by whitespace or end of text. A '.' closing a
/// known abbreviation does not split. Text without terminators is one sentence.
inline std::vector<std::string> segment_sentences(std::string_view s) {
  std::vector<std::string> out;
  auto flush = [&](std::size_t begin, std::size_t end) {
    while (begin < end && detail::is_space(s[begin])) ++begin;
    while (end > begin && detail::is_space(s[end - 1])) --end;
    if (end > begin) out.emplace_back(s.substr(begin, end - begin));
  };

  std::size_t start = 0, i = 0;
  while (i < s.size()) {
    const char c = s[i];
    if (c != '.' && c != '!' && c != '?') {
      ++i;
      continue;
    }
    std::size_t j = i;
    while (j < s.size() && (s[j] == '.' || s[j] == '!' || s[j] == '?')) ++j;
    while (j < s.size() && (s[j] == '"' || s[j] == '\'' || s[j] == ')' || s[j] == ']')) ++j;
    const bool boundary = j == s.size() || detail::is_space(s[j]);
    if (boundary && c == '.' && j == i + 1) {
      std::size_t w = i;
      while (w > start && !detail::is_space(s[w - 1])) --w;
      if (is_abbreviation(s.substr(w, i - w))) {
        i = j;
        continue;
      }
    }
    if (boundary) {
      flush(start, j);
      start = j;
    }
    i = j;
  }
  flush(start, s.size());
  return out;
}

}  // namespace sga::text
