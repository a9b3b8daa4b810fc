#include <cmath>

#include <gtest/gtest.h>

#include "geodrift/errors.hpp"
#include "geodrift/pnp.hpp"
#include "geodrift/sim.hpp"
#include "random_poses.hpp"

namespace geodrift {
namespace {

struct GeoCase {
  Scenario scenario;
  const KeyframeRecord* record = nullptr;
};

GeoCase geo_case(std::uint64_t seed, double outliers, double pixel_noise) {
  ScenarioSpec spec = canned_scenario("demo", seed);
  spec.keyframes = 30;
  spec.geo_outlier_ratio = outliers;
  spec.pixel_noise = pixel_noise;
  GeoCase c{generate(spec), nullptr};
  for (const KeyframeRecord& r : c.scenario.stream) {
    if (r.geo && r.id.value > 0) {
      c.record = &r;
      break;
    }
  }
  return c;
}

TEST(PnpTest, NoiseFreeRecoversExactPose) {
  const GeoCase c = geo_case(1, 0.0, 0.0);
  ASSERT_NE(c.record, nullptr);
  const SE3 truth = c.scenario.true_geo_poses.at(c.record->geo->matches.geo_image);
  const SE3 guess = SE3::exp((Vector6() << 0.05, -0.03, 0.02, 0.5, -0.3, 0.4).finished()) * truth;
  const PnpResult r = localize_geo_image(c.scenario.ground_truth, c.record->geo->matches, guess);
  ASSERT_TRUE(r.success);
  EXPECT_EQ(r.inlier_count, c.record->geo->matches.matches.size());
  EXPECT_LT((r.pose.translation() - truth.translation()).norm(), 1e-6);
  EXPECT_LT((r.pose.rotation().inverse() * truth.rotation()).angle(), 1e-8);
}

TEST(PnpTest, RejectsOutliersUnderNoise) {
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const GeoCase c = geo_case(seed, 0.2, 1.0);
    ASSERT_NE(c.record, nullptr);
    const GeoImageId gid = c.record->geo->matches.geo_image;
    const SE3 truth = c.scenario.true_geo_poses.at(gid);
    const SE3 guess = SE3::exp((Vector6() << 0.03, 0.03, -0.03, 0.5, 0.2, -0.5).finished()) * truth;
    const PnpResult r = localize_geo_image(c.scenario.ground_truth, c.record->geo->matches, guess);
    ASSERT_TRUE(r.success) << "seed " << seed;
    EXPECT_LT((r.pose.translation() - truth.translation()).norm(), 0.5) << "seed " << seed;
    const std::vector<bool>& outlier = c.scenario.geo_outliers.at(gid);
    std::size_t flagged_outliers = 0;
    for (std::size_t i = 0; i < outlier.size(); ++i) {
      if (outlier[i] && r.inliers[i]) ++flagged_outliers;
    }
    EXPECT_LE(flagged_outliers, 1u) << "seed " << seed;
    EXPECT_LE(r.final_cost, r.initial_cost);
  }
}

TEST(PnpTest, LowInlierRatioIsReportedNotThrown) {
  GeoCase c = geo_case(3, 0.0, 0.0);
  ASSERT_NE(c.record, nullptr);
  MapGeoMatches m = c.record->geo->matches;
  for (std::size_t i = 0; i < m.matches.size(); i += 1) {
    if (i % 4 != 0) m.matches[i].second = Vector2(5.0 + 7.0 * static_cast<double>(i % 80), 470.0 - static_cast<double>(i));
  }
  const SE3 truth = c.scenario.true_geo_poses.at(m.geo_image);
  PnpResult r;
  ASSERT_NO_THROW(r = localize_geo_image(c.scenario.ground_truth, m, truth));
  EXPECT_FALSE(r.success);
  EXPECT_LT(r.inlier_ratio, 0.5);
}

TEST(PnpTest, InputErrors) {
  const GeoCase c = geo_case(4, 0.0, 0.0);
  ASSERT_NE(c.record, nullptr);
  MapGeoMatches few = c.record->geo->matches;
  few.matches.resize(3);
  EXPECT_THROW(localize_geo_image(c.scenario.ground_truth, few, SE3()), GeometryError);

  MapGeoMatches unknown = c.record->geo->matches;
  unknown.matches[0].first = PointId(987654321);
  EXPECT_THROW(localize_geo_image(c.scenario.ground_truth, unknown, SE3()), DataError);

  // Four matches to one point are degenerate.
  MapGeoMatches same = c.record->geo->matches;
  same.matches.resize(4);
  for (auto& m : same.matches) m.first = same.matches[0].first;
  EXPECT_THROW(localize_geo_image(c.scenario.ground_truth, same, SE3()), GeometryError);
}

TEST(GeoCorrespondenceTest, CarriesBothPoses) {
  const SE3 map_pose(Rot3::exp(Vector3(0.0, 0.3, 0.0)), Vector3(1.0, 2.0, 3.0));
  const SE3 world_pose(Rot3::exp(Vector3(0.0, -0.2, 0.0)), Vector3(10.0, 0.0, -4.0));
  const GeoCorrespondence c =
      make_geo_correspondence(GeoImageId(2), KeyframeId(7), map_pose, world_pose);
  EXPECT_EQ(c.geo_image, GeoImageId(2));
  EXPECT_EQ(c.keyframe, KeyframeId(7));
  EXPECT_EQ(c.map_pose.scale(), 1.0);
  EXPECT_EQ(c.map_point(), map_pose.translation());
  EXPECT_EQ(c.world_point(), world_pose.translation());

  WorldOrigin origin;
  origin.utm = UtmCoordinate{400000.0, 4000000.0, 30, true};
  GeoAnchor anchor;
  anchor.id = GeoImageId(2);
  anchor.utm = UtmCoordinate{400010.0, 4000000.0, 30, true};
  const GeoCorrespondence g =
      make_geo_correspondence(GeoImageId(2), KeyframeId(7), map_pose, anchor, origin);
  EXPECT_LT((g.world_point() - Vector3(10.0, 0.0, 0.0)).norm(), 1e-9);
}

}  // namespace
}  // namespace geodrift
