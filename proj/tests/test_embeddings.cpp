#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <limits>

#include "helpers.hpp"
#include "sga/embeddings.hpp"
#include "sga/graph.hpp"

using namespace sga;

namespace {
EmbeddingFile sample_file(std::uint32_t dim, std::uint64_t count) {
  EmbeddingFile f;
  f.dim = dim;
  f.count = count;
  f.model_name = "unit-test-model";
  f.corpus_digest = sha256("corpus");
  for (std::size_t i = 0; i < dim * count; ++i) f.vectors.push_back(static_cast<float>(i) * 0.5f - 3.0f);
  return f;
}
}  // namespace

TEST(Sha256, KnownVector) {
  EXPECT_EQ(to_hex(sha256("abc")), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST(EmbeddingFile, RoundTrip) {
  const auto f = sample_file(4, 3);
  const auto bytes = serialize_embeddings(f);
  const auto g = parse_embeddings(bytes);
  EXPECT_EQ(g.dim, 4u);
  EXPECT_EQ(g.count, 3u);
  EXPECT_EQ(g.model_name, f.model_name);
  EXPECT_EQ(g.corpus_digest, f.corpus_digest);
  EXPECT_EQ(g.vectors, f.vectors);
}

TEST(EmbeddingFile, ByteLengthIsHeaderPlusPayload) {
  for (std::uint32_t dim : {1u, 7u, 384u})
    for (std::uint64_t count : {0u, 1u, 30u}) {
      const auto f = sample_file(dim, count);
      EXPECT_EQ(serialize_embeddings(f).size(), 4 + 4 + 4 + 8 + 32 + 2 + f.model_name.size() + count * dim * 4);
    }
}

TEST(EmbeddingFile, HeaderLayout) {
  const auto bytes = serialize_embeddings(sample_file(2, 1));
  EXPECT_EQ(bytes.substr(0, 4), "SGAE");
  EXPECT_EQ(static_cast<unsigned char>(bytes[4]), 1u);  // version, little-endian
  EXPECT_EQ(static_cast<unsigned char>(bytes[8]), 2u);  // dim
  EXPECT_EQ(static_cast<unsigned char>(bytes[12]), 1u);  // count
}

TEST(EmbeddingFile, TruncatedPayloadReportsCountMismatch) {
  auto bytes = serialize_embeddings(sample_file(4, 3));
  bytes.resize(bytes.size() - 4);
  try {
    parse_embeddings(bytes);
    FAIL();
  } catch (const EmbeddingError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("count mismatch"), std::string::npos) << msg;
    EXPECT_NE(msg.find("48 bytes"), std::string::npos) << msg;
    EXPECT_NE(msg.find("44 bytes"), std::string::npos) << msg;
  }
}

TEST(EmbeddingFile, RejectsBadMagicVersionAndNonFinite) {
  auto bytes = serialize_embeddings(sample_file(2, 2));
  auto bad = bytes;
  bad[0] = 'X';
  EXPECT_THROW(parse_embeddings(bad), EmbeddingError);
  bad = bytes;
  bad[4] = 2;
  EXPECT_THROW(parse_embeddings(bad), EmbeddingError);
  auto f = sample_file(2, 2);
  f.vectors[3] = std::numeric_limits<float>::quiet_NaN();
  EXPECT_THROW(parse_embeddings(serialize_embeddings(f)), EmbeddingError);
  EXPECT_THROW(parse_embeddings("SG"), EmbeddingError);
}

TEST(EmbeddingFile, SplitPerDebateInCorpusOrder) {
  const std::vector<Debate> ds = {sga::testing::shaped_debate("a", {1, 2}), sga::testing::shaped_debate("b", {2})};
  const auto f = sample_file(3, 5);
  const auto parts = split_embeddings(f, ds);
  ASSERT_EQ(parts.size(), 2u);
  EXPECT_EQ(parts[0].shape(), (Shape{3, 3}));
  EXPECT_EQ(parts[1].shape(), (Shape{2, 3}));
  EXPECT_EQ(parts[1](0, 0), f.vectors[9]);
  EXPECT_THROW(split_embeddings(sample_file(3, 4), ds), EmbeddingError);
}

TEST(EmbeddingFile, SaveLoadFile) {
  const auto path = std::filesystem::temp_directory_path() / "sga_test_embeddings.sgae";
  save_embeddings(path, sample_file(5, 2));
  EXPECT_EQ(load_embeddings(path).vectors, sample_file(5, 2).vectors);
  std::filesystem::remove(path);
  EXPECT_THROW(load_embeddings(path), EmbeddingError);
}

TEST(HashEmbedder, DeterministicAndDuplicateSentencesMatch) {
  const auto a = hash_embed("the economy is growing", 64);
  const auto b = hash_embed("the economy is growing", 64);
  EXPECT_EQ(a, b);
  EXPECT_NEAR(cosine_similarity(a, b), 1.0, 1e-6);
  const auto c = hash_embed("cats prefer warm windows", 64);
  EXPECT_LT(cosine_similarity(a, c), 0.9);
}

TEST(HashEmbedder, NeverAllZero) {
  for (const char* s : {"", "...", "a"}) {
    const auto v = hash_embed(s, 16);
    bool nonzero = false;
    for (float x : v) nonzero = nonzero || x != 0.0f;
    EXPECT_TRUE(nonzero) << '"' << s << '"';
  }
}

TEST(HashEmbedder, CorpusFileCoversEverySentence) {
  const std::vector<Debate> ds = {sga::testing::shaped_debate("a", {2, 3}), sga::testing::shaped_debate("b", {4})};
  const auto f = hash_embed_corpus(ds, 32, sha256("x"));
  EXPECT_EQ(f.count, 9u);
  EXPECT_EQ(f.dim, 32u);
  EXPECT_EQ(f.model_name, std::string(kHashModelName));
  EXPECT_NO_THROW(split_embeddings(f, ds));
}
