#include "lift3d/category_gate.h"

#include <filesystem>
#include <fstream>
#include <random>

#include <gtest/gtest.h>
#include <json.hpp>

#include "lift3d/error.h"

namespace lift3d {
namespace {

EmbeddingTable reference_table() {
  EmbeddingTable t(3);
  t.add("chair", Eigen::Vector3d(1, 0, 0));
  t.add("table", Eigen::Vector3d(0, 1, 0));
  t.add("lamp", Eigen::Vector3d(0, 0, 1));
  return t;
}

TEST(EmbeddingTable, RejectsBadRows) {
  EmbeddingTable t(2);
  t.add("a", Eigen::Vector2d(1, 0));
  EXPECT_THROW(t.add("a", Eigen::Vector2d(0, 1)), ValidationError);
  EXPECT_THROW(t.add("b", Eigen::Vector3d(0, 1, 0)), ValidationError);
  EXPECT_THROW(t.add("c", Eigen::Vector2d(0, 0)), ValidationError);
  EXPECT_THROW(t.vector("zzz"), ValidationError);
  EXPECT_EQ(t.size(), 1u);
}

TEST(NearestClass, ExactAndScaledQuery) {
  const EmbeddingTable t = reference_table();
  NearestClass n = nearest_class_by_embedding(Eigen::Vector3d(0, 3.5, 0), t);
  EXPECT_EQ(n.name, "table");
  EXPECT_NEAR(n.similarity, 1.0, 1e-15);
  n = nearest_class_by_embedding(Eigen::Vector3d(0.2, 0.1, 0.9), t);
  EXPECT_EQ(n.name, "lamp");
}

TEST(NearestClass, TiesGoToSmallestName) {
  EmbeddingTable t(2);
  t.add("zebra", Eigen::Vector2d(1, 0));
  t.add("apple", Eigen::Vector2d(0, 1));
  EXPECT_EQ(nearest_class_by_embedding(Eigen::Vector2d(1, 1), t).name, "apple");
}

TEST(NearestClass, InvariantToPositiveRescaling) {
  std::mt19937_64 rng(6);
  std::normal_distribution<double> g(0.0, 1.0);
  std::uniform_real_distribution<double> scale(0.01, 100.0);
  for (int trial = 0; trial < 100; ++trial) {
    EmbeddingTable t(5), scaled(5);
    for (int i = 0; i < 8; ++i) {
      Eigen::VectorXd v(5);
      for (int d = 0; d < 5; ++d) v[d] = g(rng);
      t.add("c" + std::to_string(i), v);
      scaled.add("c" + std::to_string(i), scale(rng) * v);
    }
    Eigen::VectorXd q(5);
    for (int d = 0; d < 5; ++d) q[d] = g(rng);
    const NearestClass a = nearest_class_by_embedding(q, t);
    const NearestClass b = nearest_class_by_embedding(scale(rng) * q, scaled);
    EXPECT_EQ(a.name, b.name);
    // Exhaustive scan agrees.
    double best = -2.0;
    for (size_t r = 0; r < t.size(); ++r) best = std::max(best, cosine_similarity(q, t.vector(r)));
    EXPECT_NEAR(a.similarity, best, 1e-15);
  }
}

TEST(NearestClass, Errors) {
  const EmbeddingTable t = reference_table();
  EXPECT_THROW(nearest_class_by_embedding(Eigen::Vector3d::Zero(), t), ValidationError);
  EXPECT_THROW(nearest_class_by_embedding(Eigen::Vector2d(1, 0), t), ValidationError);
  EXPECT_THROW(nearest_class_by_embedding(Eigen::Vector3d(1, 0, 0), EmbeddingTable(3)),
               ValidationError);
}

TEST(ThresholdTable, DirectMappedAndClamped) {
  const EmbeddingTable ref = reference_table();
  EmbeddingTable target(3);
  target.add("chair", Eigen::Vector3d(1, 0, 0));
  target.add("stool", Eigen::Vector3d(0.9, 0.1, 0.0));
  target.add("lamp", Eigen::Vector3d(0, 0, 1));
  const std::map<std::string, double> counts = {{"chair", 80.0}, {"table", 57.4}, {"lamp", 0.3}};
  const ThresholdTable table = build_threshold_table(
      counts, {{1, "chair"}, {2, "stool"}, {3, "lamp"}}, ref, target);
  ASSERT_EQ(table.entries.size(), 3u);
  EXPECT_EQ(table.entries.at(1).threshold, 80);
  EXPECT_EQ(table.entries.at(1).provenance, "direct");
  EXPECT_EQ(table.entries.at(2).threshold, 80);
  EXPECT_EQ(table.entries.at(2).provenance, "chair");
  EXPECT_EQ(table.entries.at(3).threshold, 1);

  const ThresholdTable rounded = build_threshold_table(counts, {{9, "table"}}, ref, ref);
  EXPECT_EQ(rounded.entries.at(9).threshold, 57);
  EXPECT_EQ(rounded.entries.at(9).provenance, "direct");
}

TEST(ThresholdTable, DirectEntriesNeverOverridden) {
  // "table" has its own count even though its vector is closest to "chair".
  EmbeddingTable ref(2);
  ref.add("chair", Eigen::Vector2d(1, 0));
  ref.add("table", Eigen::Vector2d(0, 1));
  EmbeddingTable target(2);
  target.add("table", Eigen::Vector2d(1, 0.01));
  const ThresholdTable t =
      build_threshold_table({{"chair", 10.0}, {"table", 99.0}}, {{4, "table"}}, ref, target);
  EXPECT_EQ(t.entries.at(4).threshold, 99);
  EXPECT_EQ(t.entries.at(4).provenance, "direct");
}

TEST(ThresholdTable, Errors) {
  const EmbeddingTable ref = reference_table();
  EXPECT_THROW(build_threshold_table({}, {{1, "chair"}}, ref, ref), ValidationError);
  EXPECT_THROW(build_threshold_table({{"chair", 5.0}}, {{1, "sofa"}}, ref, ref),
               ValidationError);
  EXPECT_THROW(build_threshold_table({{"chair", 5.0}}, {{1, "chair"}, {1, "lamp"}}, ref, ref),
               ValidationError);
}

TEST(AcceptInstance, InclusiveComparison) {
  ThresholdTable t;
  t.entries[5] = {"chair", 40, "direct"};
  EXPECT_TRUE(accept_instance(5, 40, t));
  EXPECT_FALSE(accept_instance(5, 39, t));
  EXPECT_FALSE(accept_instance(5, 0, t));
  EXPECT_TRUE(accept_instance(5, 4000, t));
  EXPECT_THROW(accept_instance(6, 10, t), ValidationError);
}

TEST(GateFiles, RoundTripAndSchema) {
  namespace fs = std::filesystem;
  const fs::path dir = fs::temp_directory_path() / "lift3d_gate_test";
  fs::create_directories(dir);
  const std::string emb_path = (dir / "emb.json").string();
  write_embeddings(emb_path, reference_table());
  const EmbeddingTable back = read_embeddings(emb_path);
  EXPECT_EQ(back.names(), reference_table().names());
  EXPECT_EQ(back.vector("table"), Eigen::VectorXd(Eigen::Vector3d(0, 1, 0)));

  std::ofstream(dir / "counts.json") << R"({"chair": 12.5, "desk": 3})";
  const auto counts = read_reference_counts((dir / "counts.json").string());
  EXPECT_EQ(counts.at("chair"), 12.5);
  std::ofstream(dir / "bad_counts.json") << R"({"chair": "many"})";
  EXPECT_THROW(read_reference_counts((dir / "bad_counts.json").string()), ValidationError);
  std::ofstream(dir / "classes.json") << R"([{"id": 3, "name": "chair"}])";
  EXPECT_EQ(read_class_list((dir / "classes.json").string()).at(0).name, "chair");
  std::ofstream(dir / "broken.json") << "{";
  EXPECT_THROW(read_embeddings((dir / "broken.json").string()), ValidationError);
  EXPECT_THROW(read_embeddings((dir / "absent.json").string()), IoError);

  ThresholdTable t;
  t.entries[2] = {"stool", 80, "chair"};
  const auto j = nlohmann::json::parse(thresholds_to_json(t));
  EXPECT_EQ(j["thresholds"][0]["class_id"], 2);
  EXPECT_EQ(j["thresholds"][0]["provenance"], "chair");
}

}  // namespace
}  // namespace lift3d
