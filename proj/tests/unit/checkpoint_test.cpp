#include "edl/checkpoint.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <random>

namespace edl {
namespace {

TEST(Checkpoint, LosslessRoundTrip) {
  NetworkSpec spec;
  spec.input_dim = 3;
  spec.hidden_layers = {7, 4};
  spec.dropout_rate = 0.25;
  spec.evidence_activation = EvidenceActivation::kSoftplus;
  spec.dropout_placement = DropoutPlacement::kLastHidden;
  auto p = init_params(spec, 0xfeedfacecafebeefULL);
  // Values that stress shortest round-trip formatting.
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(-1e3, 1e3);
  auto flat = p.flatten();
  for (auto& v : flat) v = u(rng) * 1e-7;
  flat[0] = 0.1;
  flat[1] = 1.0 / 3.0;
  flat[2] = -5e-324;
  p.assign_flat(flat);

  const auto restored = checkpoint_from_string(checkpoint_to_string(p));
  EXPECT_TRUE(restored == p);
  EXPECT_EQ(checkpoint_to_string(restored), checkpoint_to_string(p));
}

TEST(Checkpoint, FileRoundTrip) {
  const auto dir = std::filesystem::temp_directory_path() / "edl_checkpoint_test";
  std::filesystem::create_directories(dir);
  NetworkSpec spec;
  spec.input_dim = 2;
  spec.head = HeadKind::kSigmoid;
  const auto p = init_params(spec, 5);
  save_checkpoint(p, dir / "m.json");
  EXPECT_TRUE(load_checkpoint(dir / "m.json") == p);
  std::filesystem::remove_all(dir);
}

TEST(Checkpoint, RejectsMalformedInput) {
  EXPECT_THROW(checkpoint_from_string("not json"), std::runtime_error);
  EXPECT_THROW(checkpoint_from_string(R"({"format":"other","version":1})"), std::runtime_error);

  NetworkSpec spec;
  spec.input_dim = 2;
  std::string text = checkpoint_to_string(init_params(spec, 1));
  auto version = text.find("\"version\": 1");
  ASSERT_NE(version, std::string::npos);
  text.replace(version, 12, "\"version\": 9");
  EXPECT_THROW(checkpoint_from_string(text), std::runtime_error);

  std::string shape = checkpoint_to_string(init_params(spec, 1));
  auto rows = shape.find("\"rows\": 2");
  ASSERT_NE(rows, std::string::npos);
  shape.replace(rows, 9, "\"rows\": 3");
  EXPECT_THROW(checkpoint_from_string(shape), std::runtime_error);
  EXPECT_THROW(load_checkpoint("/nonexistent/edl.json"), std::runtime_error);
}

}  // namespace
}  // namespace edl
