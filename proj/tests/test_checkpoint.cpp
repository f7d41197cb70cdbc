#include <gtest/gtest.h>

#include <filesystem>

#include "sga/checkpoint.hpp"
#include "sga/model.hpp"

using namespace sga;

namespace {
ModelConfig tiny() {
  ModelConfig c;
  c.embed_dim = 6;
  c.state_dim = 4;
  c.top_r = 1;
  return c;
}
}  // namespace

TEST(Checkpoint, RoundTripRestoresEveryValue) {
  SgaModel<float> a(tiny(), 1), b(tiny(), 2);
  const auto bytes = serialize_checkpoint(a.params());
  deserialize_checkpoint(bytes, b.params());
  for (std::size_t i = 0; i < a.params().size(); ++i)
    EXPECT_EQ(a.params()[i].value.values(), b.params()[i].value.values()) << a.params()[i].name;
  EXPECT_EQ(serialize_checkpoint(b.params()), bytes);
}

TEST(Checkpoint, LayoutSize) {
  SgaModel<float> a(tiny(), 1);
  std::size_t expected = 4 + 4 + 4;
  for (std::size_t i = 0; i < a.params().size(); ++i) {
    const auto& p = a.params()[i];
    expected += 2 + p.name.size() + 4 + 8 * p.value.rank() + 4 * p.value.size();
  }
  const auto bytes = serialize_checkpoint(a.params());
  EXPECT_EQ(bytes.size(), expected);
  EXPECT_EQ(bytes.substr(0, 4), "SGAW");
}

TEST(Checkpoint, FileRoundTripAndSidecarPath) {
  const auto path = std::filesystem::temp_directory_path() / "sga_test_model.sgaw";
  SgaModel<float> a(tiny(), 3), b(tiny(), 4);
  save_checkpoint(path, a.params());
  load_checkpoint(path, b.params());
  EXPECT_EQ(serialize_checkpoint(a.params()), serialize_checkpoint(b.params()));
  std::filesystem::remove(path);
  EXPECT_THROW(load_checkpoint(path, b.params()), CheckpointError);
  EXPECT_EQ(config_sidecar("run/model.sgaw").string(), "run/model.sgaw.config");
}

TEST(Checkpoint, RejectsMismatches) {
  SgaModel<float> a(tiny(), 1);
  const auto bytes = serialize_checkpoint(a.params());
  auto other = tiny();
  other.state_dim = 5;
  SgaModel<float> wider(other, 1);
  try {
    deserialize_checkpoint(bytes, wider.params());
    FAIL();
  } catch (const CheckpointError& e) {
    EXPECT_NE(std::string(e.what()).find("shape"), std::string::npos) << e.what();
  }
  EXPECT_THROW(deserialize_checkpoint(bytes + "x", a.params()), CheckpointError);
  EXPECT_THROW(deserialize_checkpoint(bytes.substr(0, bytes.size() - 1), a.params()), CheckpointError);
  EXPECT_THROW(deserialize_checkpoint("SGAX" + bytes.substr(4), a.params()), CheckpointError);
  auto renamed = bytes;
  renamed[14] = 'X';  // first character of the first parameter name
  EXPECT_THROW(deserialize_checkpoint(renamed, a.params()), CheckpointError);
  ad::ParamSet<float> empty;
  EXPECT_THROW(deserialize_checkpoint(bytes, empty), CheckpointError);
}

TEST(Checkpoint, FailedLoadLeavesModelUntouched) {
  SgaModel<float> a(tiny(), 1), b(tiny(), 2);
  const auto before = serialize_checkpoint(b.params());
  auto bytes = serialize_checkpoint(a.params());
  bytes.resize(bytes.size() - 8);
  EXPECT_THROW(deserialize_checkpoint(bytes, b.params()), CheckpointError);
  EXPECT_EQ(serialize_checkpoint(b.params()), before);
}
