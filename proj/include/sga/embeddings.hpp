#pragma once

#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <openssl/evp.h>

#include "sga/corpus.hpp"
#include "sga/corpus_io.hpp"
#include "sga/tensor.hpp"

namespace sga {

static_assert(std::endian::native == std::endian::little, "embedding files are little-endian f32");

using Digest = std::array<std::uint8_t, 32>;

inline Digest sha256(std::string_view bytes) {
  Digest out{};
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), out.data(), &len, EVP_sha256(), nullptr) != 1 || len != out.size())
    throw std::runtime_error("sha256 failed");
  return out;
}

inline std::string to_hex(const Digest& d) {
  static constexpr char kHex[] = "0123456789abcdef";
  std::string s;
  for (auto b : d) {
    s += kHex[b >> 4];
    s += kHex[b & 15];
  }
  return s;
}

class EmbeddingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Row-major count×dim sentence vectors in corpus order (debate order, then
/// global sentence index).
struct EmbeddingFile {
  static constexpr std::uint32_t kVersion = 1;
  static constexpr std::size_t kFixedHeader = 4 + 4 + 4 + 8 + 32 + 2;

  std::uint32_t dim = 0;
  std::uint64_t count = 0;
  Digest corpus_digest{};
  std::string model_name;
  std::vector<float> vectors;

  std::size_t header_bytes() const { return kFixedHeader + model_name.size(); }
  const float* row(std::size_t i) const { return vectors.data() + i * dim; }
};

namespace emb_detail {
template <class U>
void put(std::string& out, U v) {
  char buf[sizeof(U)];
  std::memcpy(buf, &v, sizeof(U));
  out.append(buf, sizeof(U));
}
template <class U>
U get(std::string_view in, std::size_t& pos) {
  if (pos + sizeof(U) > in.size()) throw EmbeddingError("embedding file: truncated header");
  U v;
  std::memcpy(&v, in.data() + pos, sizeof(U));
  pos += sizeof(U);
  return v;
}
}  // namespace emb_detail

// Layout: "SGAE", u32 version, u32 dim, u64 count, u8[32] corpus digest,
// u16 model-name length, name bytes, count*dim little-endian f32.
inline std::string serialize_embeddings(const EmbeddingFile& f) {
  if (f.vectors.size() != f.count * f.dim) throw EmbeddingError("embedding file: vector payload does not match count*dim");
  if (f.model_name.size() > 0xffff) throw EmbeddingError("embedding file: model name too long");
  std::string out = "SGAE";
  emb_detail::put(out, EmbeddingFile::kVersion);
  emb_detail::put(out, f.dim);
  emb_detail::put(out, f.count);
  out.append(reinterpret_cast<const char*>(f.corpus_digest.data()), f.corpus_digest.size());
  emb_detail::put(out, static_cast<std::uint16_t>(f.model_name.size()));
  out += f.model_name;
  out.append(reinterpret_cast<const char*>(f.vectors.data()), f.vectors.size() * sizeof(float));
  return out;
}

inline EmbeddingFile parse_embeddings(std::string_view bytes) {
  if (bytes.size() < 4 || bytes.substr(0, 4) != "SGAE") throw EmbeddingError("embedding file: bad magic");
  std::size_t pos = 4;
  EmbeddingFile f;
  const auto version = emb_detail::get<std::uint32_t>(bytes, pos);
  if (version != EmbeddingFile::kVersion)
    throw EmbeddingError("embedding file: unsupported version " + std::to_string(version));
  f.dim = emb_detail::get<std::uint32_t>(bytes, pos);
  f.count = emb_detail::get<std::uint64_t>(bytes, pos);
  if (pos + 32 > bytes.size()) throw EmbeddingError("embedding file: truncated header");
  std::memcpy(f.corpus_digest.data(), bytes.data() + pos, 32);
  pos += 32;
  const auto name_len = emb_detail::get<std::uint16_t>(bytes, pos);
  if (pos + name_len > bytes.size()) throw EmbeddingError("embedding file: truncated model name");
  f.model_name.assign(bytes.substr(pos, name_len));
  pos += name_len;
  if (f.dim == 0) throw EmbeddingError("embedding file: dim must be positive");
  const std::uint64_t expected = static_cast<std::uint64_t>(f.count) * f.dim * sizeof(float);
  if (bytes.size() - pos != expected)
    throw EmbeddingError("embedding file: count mismatch, header says " + std::to_string(f.count) + " x " +
                         std::to_string(f.dim) + " floats (" + std::to_string(expected) + " bytes) but payload has " +
                         std::to_string(bytes.size() - pos) + " bytes");
  f.vectors.resize(f.count * f.dim);
  std::memcpy(f.vectors.data(), bytes.data() + pos, expected);
  for (std::size_t i = 0; i < f.vectors.size(); ++i)
    if (!std::isfinite(f.vectors[i]))
      throw EmbeddingError("embedding file: non-finite value in vector " + std::to_string(i / f.dim));
  return f;
}

inline EmbeddingFile load_embeddings(const std::filesystem::path& path) {
  try {
    return parse_embeddings(read_file(path));
  } catch (const CorpusError& e) {
    throw EmbeddingError(e.what());
  }
}

inline void save_embeddings(const std::filesystem::path& path, const EmbeddingFile& f) {
  write_file_atomic(path, serialize_embeddings(f));
}

/// Per-debate N×B matrices sliced from `f` in corpus order.
inline std::vector<Tensor<float>> split_embeddings(const EmbeddingFile& f, const std::vector<Debate>& debates) {
  std::uint64_t total = 0;
  for (const auto& d : debates) total += d.sentence_count();
  if (total != f.count)
    throw EmbeddingError("embedding file has " + std::to_string(f.count) + " vectors but corpus has " +
                         std::to_string(total) + " sentences");
  std::vector<Tensor<float>> out;
  std::size_t off = 0;
  for (const auto& d : debates) {
    const std::size_t n = d.sentence_count();
    std::vector<float> vals(f.vectors.begin() + static_cast<std::ptrdiff_t>(off * f.dim),
                            f.vectors.begin() + static_cast<std::ptrdiff_t>((off + n) * f.dim));
    out.push_back(Tensor<float>::matrix(n, f.dim, std::move(vals)));
    off += n;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Hash embedder: signed feature hashing of unigrams and bigrams. Used when no
// pretrained-encoder file is available.

inline constexpr std::string_view kHashModelName = "hash-bow-v1";

inline std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

inline std::vector<float> hash_embed(std::string_view sentence, std::size_t dim) {
  std::vector<float> v(dim, 0.0f);
  std::vector<std::string> tokens;
  std::string cur;
  for (char c : sentence) {
    const bool word = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') ||
                      static_cast<unsigned char>(c) >= 0x80 || c == '\'';
    if (word) {
      cur += c;
    } else if (!cur.empty()) {
      tokens.push_back(std::move(cur));
      cur.clear();
    }
  }
  if (!cur.empty()) tokens.push_back(std::move(cur));
  if (tokens.empty()) tokens.push_back("<empty>");
  auto bump = [&](std::string_view feat, float w) {
    const std::uint64_t h = fnv1a(feat);
    v[h % dim] += (h >> 63) ? -w : w;
  };
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    bump(tokens[i], 1.0f);
    if (i + 1 < tokens.size()) bump(tokens[i] + "\x1f" + tokens[i + 1], 0.5f);
  }
  bool nonzero = false;
  for (float x : v) nonzero = nonzero || x != 0.0f;
  if (!nonzero) v[fnv1a("<bias>") % dim] = 1.0f;
  return v;
}

inline EmbeddingFile hash_embed_corpus(const std::vector<Debate>& debates, std::size_t dim, const Digest& digest) {
  EmbeddingFile f;
  f.dim = static_cast<std::uint32_t>(dim);
  f.corpus_digest = digest;
  f.model_name = std::string(kHashModelName);
  for (const auto& d : debates)
    for (const auto& t : d.turns)
      for (const auto& s : t.sentences) {
        auto v = hash_embed(s.normalized_text, dim);
        f.vectors.insert(f.vectors.end(), v.begin(), v.end());
        ++f.count;
      }
  return f;
}

}  // namespace sga
