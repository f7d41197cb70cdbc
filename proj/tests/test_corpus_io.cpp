#include <gtest/gtest.h>

#include <filesystem>

#include "helpers.hpp"
#include "sga/corpus_io.hpp"

using namespace sga;

TEST(CorpusIo, RoundTripPreservesStructure) {
  const std::vector<Debate> ds = {sga::testing::uniform_debate("a", 6, 5, Side::Pros, 7, 2),
                                  sga::testing::shaped_debate("b", {1, 2, 3}, Side::Cons, 1, 9)};
  const auto back = parse_corpus(serialize_corpus(ds));
  EXPECT_EQ(back, ds);
}

TEST(CorpusIo, SaveLoadFile) {
  const auto path = std::filesystem::temp_directory_path() / "sga_test_corpus.jsonl";
  const std::vector<Debate> ds = {sga::testing::uniform_debate("one", 2, 2, Side::Pros, 5, 0)};
  save_corpus(path, ds);
  EXPECT_EQ(load_corpus(path), ds);
  std::filesystem::remove(path);
  EXPECT_THROW(load_corpus(path), CorpusError);
}

TEST(CorpusIo, MissingWinnerNamesFieldAndLine) {
  const std::string text =
      R"({"id":"a","topic":"t","winner":"pros","votes_pros":3,"votes_cons":1,"turns":[]})"
      "\n"
      R"({"id":"b","topic":"t","votes_pros":3,"votes_cons":1,"turns":[]})"
      "\n";
  try {
    parse_corpus(text);
    FAIL();
  } catch (const CorpusError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("line 2"), std::string::npos) << msg;
    EXPECT_NE(msg.find("\"winner\""), std::string::npos) << msg;
  }
}

TEST(CorpusIo, UnknownWinnerValue) {
  const std::string text = R"({"id":"a","winner":"draw","votes_pros":3,"votes_cons":1,"turns":[]})";
  try {
    parse_corpus(text);
    FAIL();
  } catch (const CorpusError& e) {
    EXPECT_NE(std::string(e.what()).find("draw"), std::string::npos);
  }
}

TEST(CorpusIo, MalformedJsonHasLineNumber) {
  try {
    parse_corpus("\n{not json}\n");
    FAIL();
  } catch (const CorpusError& e) {
    EXPECT_NE(std::string(e.what()).find("line 2"), std::string::npos) << e.what();
  }
}

TEST(CorpusIo, RecordCountMatchesLineCount) {
  std::vector<Debate> ds;
  for (int i = 0; i < 2445; ++i) ds.push_back(sga::testing::uniform_debate("d" + std::to_string(i), 2, 1, Side::Pros, 5, 1));
  const auto text = serialize_corpus(ds);
  const auto lines = static_cast<std::size_t>(std::count(text.begin(), text.end(), '\n'));
  EXPECT_EQ(lines, 2445u);
  EXPECT_EQ(parse_corpus(text).size(), lines);
}

TEST(CorpusIo, NormalizesOnLoad) {
  const std::string text =
      R"({"id":"a","winner":"CONS","votes_pros":0,"votes_cons":5,"turns":[{"side":"pros","sentences":["See http://x.org 4 MORE"]}]})";
  const auto d = parse_corpus(text).at(0);
  EXPECT_EQ(d.winner, Side::Cons);
  EXPECT_EQ(d.turns[0].sentences[0].raw_text, "See http://x.org 4 MORE");
  EXPECT_EQ(d.turns[0].sentences[0].normalized_text, "see website number more");
}

TEST(CorpusIo, DebateOrgExport) {
  const std::string text = R"({
  "Abortion-is-bad/1/": {
    "title": "Abortion is bad",
    "participant_1_name": "alice", "participant_1_position": "Pro",
    "participant_2_name": "bob", "participant_2_position": "Con",
    "rounds": [
      [{"side": "Pro", "text": "Dr. Who says 12 things. Visit www.x.com now!"},
       {"side": "Con", "text": "I disagree."}]
    ],
    "votes": [
      {"votes_map": {"alice": {"Made more convincing arguments": true}, "bob": {"Made more convincing arguments": false}}},
      {"votes_map": {"alice": {"Made more convincing arguments": true}, "bob": {"Made more convincing arguments": false}}},
      {"votes_map": {"alice": {"Made more convincing arguments": false}, "bob": {"Made more convincing arguments": true}}},
      {"votes_map": {"alice": {"Made more convincing arguments": false}, "bob": {"Made more convincing arguments": false}}}
    ]
  }
})";
  const auto ds = parse_corpus(text);
  ASSERT_EQ(ds.size(), 1u);
  const auto& d = ds[0];
  EXPECT_EQ(d.id, "Abortion-is-bad/1/");
  EXPECT_EQ(d.topic, "Abortion is bad");
  EXPECT_EQ(d.votes_pros, 2);
  EXPECT_EQ(d.votes_cons, 1);
  EXPECT_EQ(d.total_voters, 4);
  EXPECT_EQ(d.winner, Side::Pros);
  ASSERT_EQ(d.turns.size(), 2u);
  ASSERT_EQ(d.turns[0].sentences.size(), 2u);
  EXPECT_EQ(d.turns[0].sentences[0].normalized_text, "dr. who says number things.");
  EXPECT_EQ(d.turns[0].sentences[1].normalized_text, "visit website now!");
  EXPECT_EQ(d.turns[1].side, Side::Cons);
}

TEST(CorpusIo, DebateOrgPerLineRecordsAndPresegmented) {
  const std::string text =
      R"({"id":"x1","rounds":[[{"side":"Pro","text":"first line\nsecond line"},{"side":"Con","text":"reply"}]],"votes":[]})";
  LoadOptions lo;
  lo.presegmented = true;
  const auto d = parse_corpus(text, lo).at(0);
  EXPECT_EQ(d.id, "x1");
  EXPECT_EQ(d.turns[0].sentences.size(), 2u);
  EXPECT_EQ(d.total_voters, 0);
}

TEST(CorpusIo, AtomicWriteLeavesNoTempFile) {
  const auto path = std::filesystem::temp_directory_path() / "sga_atomic.bin";
  write_file_atomic(path, "hello");
  EXPECT_EQ(read_file(path), "hello");
  auto tmp = path;
  tmp += ".tmp";
  EXPECT_FALSE(std::filesystem::exists(tmp));
  std::filesystem::remove(path);
}
