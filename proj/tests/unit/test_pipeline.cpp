#include <cmath>

#include <gtest/gtest.h>

#include "geodrift/errors.hpp"
#include "geodrift/metrics.hpp"
#include "geodrift/pipeline.hpp"
#include "geodrift/regression.hpp"
#include "geodrift/sim.hpp"

namespace geodrift {
namespace {

Scenario short_scenario(const char* name, std::uint64_t seed, int keyframes = 60) {
  ScenarioSpec spec = canned_scenario(name, seed);
  spec.keyframes = keyframes;
  return generate(spec);
}

TEST(PipelineConfigTest, DefaultsAreValid) {
  const PipelineConfig c;
  EXPECT_NO_THROW(c.validate());
  EXPECT_EQ(c.init_index, 4);
  EXPECT_EQ(c.window.window_size, 3);
  EXPECT_EQ(c.window.covisibility_threshold, 15);
  EXPECT_EQ(c.weights.keyframe_edge, 1e5);
  EXPECT_EQ(c.weights.geo_edge, 1e5);
  EXPECT_EQ(c.weights.anchor, 1.0);
  EXPECT_EQ(c.ba.anchor_weight, 1e3);
  EXPECT_EQ(c.ba.huber_delta, 2.45);
  EXPECT_EQ(c.ransac.iterations, 1000);
  EXPECT_EQ(c.ransac.threshold, 5.0);
}

TEST(PipelineConfigTest, InvalidValuesAreRejected) {
  PipelineConfig c;
  c.init_index = 1;
  EXPECT_THROW(c.validate(), DataError);
  c = PipelineConfig{};
  c.window.window_size = 1;
  EXPECT_THROW(c.validate(), DataError);
  c = PipelineConfig{};
  c.weights.keyframe_edge = -1.0;
  EXPECT_THROW(c.validate(), DataError);
  c = PipelineConfig{};
  c.ba.huber_delta = 0.0;
  EXPECT_THROW(c.validate(), DataError);
}

TEST(PipelineTest, EventSequence) {
  const Scenario s = short_scenario("demo", 1);
  Pipeline p(s.header, PipelineConfig{});
  const std::vector<CorrectionEvent> events = run_pipeline(p, s.stream);
  ASSERT_EQ(events.size(), s.stream.size());
  std::size_t localized = 0;
  std::optional<std::size_t> init_at;
  std::size_t corrected = 0;
  for (std::size_t k = 0; k < events.size(); ++k) {
    const CorrectionEvent& e = events[k];
    EXPECT_EQ(e.keyframe, s.stream[k].id);
    if (!s.stream[k].geo) {
      EXPECT_EQ(e.type, EventType::kNone);
      continue;
    }
    if (e.geo_rejected) continue;
    ++localized;
    if (e.type == EventType::kInitialized) {
      EXPECT_FALSE(init_at.has_value());
      init_at = k;
      EXPECT_EQ(e.correspondences, 4u);
      ASSERT_TRUE(e.init.has_value());
    }
    if (e.type == EventType::kCorrected) {
      ASSERT_TRUE(init_at.has_value());
      ++corrected;
      EXPECT_TRUE(e.pgo.has_value());
      EXPECT_TRUE(e.ba.has_value());
      EXPECT_LE(e.window_geo_images.size(), 3u);
      EXPECT_LE(e.pgo->cost_after, e.pgo->cost_before);
    }
  }
  ASSERT_TRUE(init_at.has_value());
  EXPECT_GE(localized, 5u);
  EXPECT_EQ(corrected + 4, localized);
  EXPECT_TRUE(p.scene().initialized);
  EXPECT_EQ(p.scene().keyframes.size(), s.stream.size());
  EXPECT_EQ(p.raw_poses().size(), s.stream.size());
}

TEST(PipelineTest, ZeroDriftStaysNearTruth) {
  const Scenario s = short_scenario("zero-drift", 2);
  Pipeline p(s.header, PipelineConfig{});
  run_pipeline(p, s.stream);
  const Ate2d ate = evaluate_ate2d(p.scene().keyframes, ground_truth_poses(s));
  EXPECT_LT(ate.average, 0.05);
}

TEST(PipelineTest, CorrectionBeatsInitialization) {
  const Scenario s = short_scenario("demo", 3, 80);
  const AblationRun init = run_ablation(s, Ablation::kInitOnly);
  const AblationRun ours = run_ablation(s, Ablation::kOurs);
  ASSERT_TRUE(init.initialized);
  ASSERT_TRUE(ours.initialized);
  EXPECT_LT(ours.ate.average, init.ate.average);
  EXPECT_LT(ours.ate.average, 3.0);
  EXPECT_EQ(init.corrections, 0u);
  EXPECT_GT(ours.corrections, 0u);
}

TEST(PipelineTest, DeterministicAcrossRuns) {
  const Scenario s = short_scenario("demo", 4);
  Pipeline a(s.header, PipelineConfig{});
  Pipeline b(s.header, PipelineConfig{});
  run_pipeline(a, s.stream);
  run_pipeline(b, s.stream);
  for (const auto& [id, pose] : a.scene().keyframes) {
    const SE3& other = b.scene().keyframes.at(id);
    EXPECT_EQ(pose.translation(), other.translation());
    EXPECT_EQ(pose.rotation().quaternion().coeffs(), other.rotation().quaternion().coeffs());
  }
}

TEST(PipelineTest, RejectsOutOfOrderKeyframes) {
  const Scenario s = short_scenario("demo", 5, 10);
  Pipeline p(s.header, PipelineConfig{});
  p.ingest_keyframe(s.stream[0]);
  p.ingest_keyframe(s.stream[1]);
  EXPECT_THROW(p.ingest_keyframe(s.stream[1]), DataError);
  KeyframeRecord bad = s.stream[2];
  bad.observations.emplace_back(PointId(99999999), Vector2(1.0, 1.0));
  EXPECT_THROW(p.ingest_keyframe(bad), DataError);
}

TEST(PipelineTest, RejectsBadCamera) {
  StreamHeader header;
  header.camera.fx = -1.0;
  EXPECT_THROW(Pipeline(header, PipelineConfig{}), DataError);
}

TEST(PipelineTest, TooFewCorrespondencesLeavesSceneUninitialized) {
  const Scenario s = short_scenario("demo", 6, 25);
  Pipeline p(s.header, PipelineConfig{});
  run_pipeline(p, s.stream);
  EXPECT_FALSE(p.scene().initialized);
}

TEST(AblationTest, ConfigSwitches) {
  EXPECT_FALSE(ablation_config(Ablation::kInitOnly).enable_pgo);
  EXPECT_FALSE(ablation_config(Ablation::kInitOnly).enable_ba);
  EXPECT_TRUE(ablation_config(Ablation::kInitPgo).enable_pgo);
  EXPECT_FALSE(ablation_config(Ablation::kInitPgo).enable_ba);
  EXPECT_FALSE(ablation_config(Ablation::kInitBa).enable_pgo);
  EXPECT_TRUE(ablation_config(Ablation::kInitBa).enable_ba);
  EXPECT_TRUE(ablation_config(Ablation::kOurs).enable_pgo);
  EXPECT_TRUE(ablation_config(Ablation::kOurs).enable_ba);
  for (Ablation a : {Ablation::kInitOnly, Ablation::kInitPgo, Ablation::kInitBa, Ablation::kOurs}) {
    EXPECT_EQ(parse_ablation(to_string(a)), a);
  }
  EXPECT_THROW(parse_ablation("pgo-only"), DataError);
}

}  // namespace
}  // namespace geodrift
