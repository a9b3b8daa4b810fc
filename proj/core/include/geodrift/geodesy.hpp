#pragma once

// WGS84 <-> UTM (Krueger series to sixth order in n) and geo-tag poses.
//
// The world frame is right-handed with y up: x = easting - E0,
// y = height - h0, z = -(northing - N0), relative to a local origin so that
// coordinates stay small enough for double-precision optimization.

#include <optional>

#include "geodrift/ids.hpp"
#include "geodrift/manifold.hpp"

namespace geodrift {

struct UtmCoordinate {
  double easting = 0.0;   // m
  double northing = 0.0;  // m
  int zone = 0;           // 1..60
  bool north = true;
};

struct LatLon {
  double latitude = 0.0;   // degrees
  double longitude = 0.0;  // degrees
};

// Standard zone including the Norway and Svalbard exceptions.
int utm_zone(double latitude, double longitude);

// Throws GeometryError for |latitude| >= 84 or non-finite input. A forced
// zone projects into that zone regardless of the longitude.
UtmCoordinate latlon_to_utm(double latitude, double longitude,
                            std::optional<int> forced_zone = std::nullopt);
// Throws GeometryError for an invalid zone or a result outside |lat| < 84.
LatLon utm_to_latlon(const UtmCoordinate& utm);

struct WorldOrigin {
  UtmCoordinate utm;  // zone and hemisphere of the world frame
  double height = 0.0;
};

struct GeoAnchor {
  GeoImageId id;
  std::optional<LatLon> latlon;
  std::optional<UtmCoordinate> utm;
  double height = 0.0;           // m
  std::optional<double> heading;  // rad, clockwise from north
  std::optional<double> pitch;    // rad, positive up
  std::optional<double> roll;     // rad, about the viewing direction

  // Fills the missing one of latlon/utm. Throws DataError when neither is
  // given, or when both are given and disagree by more than 1 m.
  void normalize();

  // World-from-camera pose of the geo-tag camera (x right, y down, z
  // forward). Missing angles default to 0 (level, facing north).
  SE3 world_pose(const WorldOrigin& origin) const;
};

Vector3 utm_to_world(const UtmCoordinate& utm, double height, const WorldOrigin& origin);
UtmCoordinate world_to_utm(const Vector3& world, const WorldOrigin& origin, double* height);

// Camera rotation for the given heading, pitch and roll.
Rot3 camera_rotation(double heading, double pitch, double roll);

struct CameraAngles {
  double heading = 0.0;
  double pitch = 0.0;
  double roll = 0.0;
};

// Inverse of camera_rotation. Throws GeometryError at pitch +-90 degrees.
CameraAngles camera_angles(const Rot3& rotation);

}  // namespace geodrift
