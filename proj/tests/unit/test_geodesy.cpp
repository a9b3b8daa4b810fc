#include <cmath>
#include <numbers>

#include <gtest/gtest.h>

#include "geodrift/errors.hpp"
#include "geodrift/geodesy.hpp"
#include "random_poses.hpp"

namespace geodrift {
namespace {

constexpr double kDeg = std::numbers::pi / 180.0;

struct Reference {
  double latitude;
  double longitude;
  int zone;
  bool north;
  double easting;
  double northing;
};

// Values from PROJ (EPSG:326xx / 327xx).
const Reference kReferences[] = {
    {36.7213, -4.4214, 30, true, 373065.5860, 4064897.5424},
    {48.8584, 2.2945, 31, true, 448252.0014, 5411954.9099},
    {-33.8568, 151.2153, 56, false, 334900.5697, 6252288.7529},
    {64.1466, -21.9426, 27, true, 454138.3765, 7113689.8690},
    {0.0, 3.0, 31, true, 500000.0000, 0.0000},
    {83.5, 10.0, 33, true, 436885.5577, 9275013.8380},
    {60.0, 5.5, 32, true, 304838.8273, 6656575.8591},
};

TEST(UtmTest, MatchesReferenceProjection) {
  for (const Reference& r : kReferences) {
    const UtmCoordinate u = latlon_to_utm(r.latitude, r.longitude);
    EXPECT_EQ(u.zone, r.zone) << r.latitude << ", " << r.longitude;
    EXPECT_EQ(u.north, r.north);
    EXPECT_NEAR(u.easting, r.easting, 1e-3);
    EXPECT_NEAR(u.northing, r.northing, 1e-3);
  }
}

TEST(UtmTest, ForcedZoneOutsideItsBand) {
  // Longitude -77 lies in zone 18; projected into zone 17 as PROJ does.
  EXPECT_EQ(utm_zone(-0.5, -77.0), 18);
  const UtmCoordinate u = latlon_to_utm(-0.5, -77.0, 17);
  EXPECT_EQ(u.zone, 17);
  EXPECT_FALSE(u.north);
  EXPECT_NEAR(u.easting, 945447.3947, 1e-3);
  EXPECT_NEAR(u.northing, 9944599.1053, 1e-3);
}

TEST(UtmTest, ZoneExceptions) {
  EXPECT_EQ(utm_zone(60.0, 5.5), 32);   // Norway
  EXPECT_EQ(utm_zone(60.0, 2.5), 31);
  EXPECT_EQ(utm_zone(78.0, 8.0), 31);   // Svalbard
  EXPECT_EQ(utm_zone(78.0, 10.0), 33);
  EXPECT_EQ(utm_zone(78.0, 25.0), 35);
  EXPECT_EQ(utm_zone(78.0, 35.0), 37);
  EXPECT_EQ(utm_zone(0.0, -180.0), 1);
  EXPECT_EQ(utm_zone(0.0, 179.9), 60);
}

TEST(UtmTest, RoundTripIsSubMillimetre) {
  testing::RandomPoses rng(41);
  for (int k = 0; k < 1000; ++k) {
    const double lat = rng.uniform(-83.0, 83.0);
    const double lon = rng.uniform(-180.0, 180.0);
    const LatLon back = utm_to_latlon(latlon_to_utm(lat, lon));
    // 1e-8 degrees is about a millimetre.
    EXPECT_NEAR(back.latitude, lat, 1e-8);
    EXPECT_NEAR(back.longitude, lon, 1e-8);
  }
}

TEST(UtmTest, EquatorSouthernHemisphere) {
  const UtmCoordinate south = latlon_to_utm(-1e-9, 3.0);
  EXPECT_FALSE(south.north);
  EXPECT_NEAR(south.northing, 10000000.0, 1e-3);
  const LatLon back = utm_to_latlon(south);
  EXPECT_NEAR(back.latitude, 0.0, 1e-9);
  const UtmCoordinate north = latlon_to_utm(0.0, 3.0);
  EXPECT_TRUE(north.north);
  EXPECT_NEAR(north.northing, 0.0, 1e-6);
}

TEST(UtmTest, InvalidInputThrows) {
  EXPECT_THROW(latlon_to_utm(84.0, 0.0), GeometryError);
  EXPECT_THROW(latlon_to_utm(-85.0, 0.0), GeometryError);
  EXPECT_THROW(latlon_to_utm(std::nan(""), 0.0), GeometryError);
  EXPECT_THROW(utm_to_latlon(UtmCoordinate{500000.0, 0.0, 0, true}), GeometryError);
  EXPECT_THROW(utm_to_latlon(UtmCoordinate{500000.0, 0.0, 61, true}), GeometryError);
}

TEST(WorldFrameTest, AxesFollowEastUpSouth) {
  WorldOrigin origin;
  origin.utm = UtmCoordinate{400000.0, 4000000.0, 30, true};
  origin.height = 10.0;
  const Vector3 w = utm_to_world(UtmCoordinate{400003.0, 4000005.0, 30, true}, 12.0, origin);
  EXPECT_LT((w - Vector3(3.0, 2.0, -5.0)).norm(), 1e-12);
  double height = 0.0;
  const UtmCoordinate u = world_to_utm(w, origin, &height);
  EXPECT_NEAR(u.easting, 400003.0, 1e-9);
  EXPECT_NEAR(u.northing, 4000005.0, 1e-9);
  EXPECT_NEAR(height, 12.0, 1e-12);
  EXPECT_EQ(u.zone, 30);
}

TEST(CameraRotationTest, HeadingPointsTheOpticalAxis) {
  const Vector3 forward(0.0, 0.0, 1.0);
  const Vector3 down(0.0, 1.0, 0.0);
  EXPECT_LT((camera_rotation(0.0, 0.0, 0.0).act(forward) - Vector3(0.0, 0.0, -1.0)).norm(), 1e-12);
  EXPECT_LT((camera_rotation(90.0 * kDeg, 0.0, 0.0).act(forward) - Vector3(1.0, 0.0, 0.0)).norm(), 1e-12);
  EXPECT_LT((camera_rotation(0.0, 0.0, 0.0).act(down) - Vector3(0.0, -1.0, 0.0)).norm(), 1e-12);
  // Positive pitch looks up.
  EXPECT_GT(camera_rotation(0.0, 10.0 * kDeg, 0.0).act(forward).y(), 0.0);
}

TEST(CameraRotationTest, AnglesRoundTrip) {
  testing::RandomPoses rng(43);
  for (int k = 0; k < 200; ++k) {
    const double h = rng.uniform(-3.1, 3.1);
    const double p = rng.uniform(-1.4, 1.4);
    const double r = rng.uniform(-3.1, 3.1);
    const CameraAngles a = camera_angles(camera_rotation(h, p, r));
    EXPECT_LT((camera_rotation(a.heading, a.pitch, a.roll).matrix() - camera_rotation(h, p, r).matrix())
                  .norm(),
              1e-9);
    EXPECT_NEAR(a.pitch, p, 1e-9);
  }
  EXPECT_THROW(camera_angles(camera_rotation(0.0, 90.0 * kDeg, 0.0)), GeometryError);
}

TEST(GeoAnchorTest, NormalizeFillsTheMissingForm) {
  GeoAnchor a;
  a.latlon = LatLon{36.7213, -4.4214};
  a.normalize();
  ASSERT_TRUE(a.utm.has_value());
  EXPECT_NEAR(a.utm->easting, 373065.5860, 1e-3);

  GeoAnchor b;
  b.utm = a.utm;
  b.normalize();
  ASSERT_TRUE(b.latlon.has_value());
  EXPECT_NEAR(b.latlon->latitude, 36.7213, 1e-9);

  GeoAnchor none;
  EXPECT_THROW(none.normalize(), DataError);
  GeoAnchor both = a;
  EXPECT_NO_THROW(both.normalize());
  both.utm->easting += 5.0;
  EXPECT_THROW(both.normalize(), DataError);
}

TEST(GeoAnchorTest, WorldPoseUsesOriginAndAngles) {
  WorldOrigin origin;
  origin.utm = UtmCoordinate{400000.0, 4000000.0, 30, true};
  GeoAnchor a;
  a.utm = UtmCoordinate{400010.0, 3999990.0, 30, true};
  a.height = 1.5;
  a.heading = 90.0 * kDeg;
  const SE3 pose = a.world_pose(origin);
  EXPECT_LT((pose.translation() - Vector3(10.0, 1.5, 10.0)).norm(), 1e-12);
  EXPECT_LT((pose.rotation().act(Vector3(0.0, 0.0, 1.0)) - Vector3(1.0, 0.0, 0.0)).norm(), 1e-12);
}

}  // namespace
}  // namespace geodrift
