#pragma once

// Per-keyframe input records consumed by the incremental pipeline.

#include <optional>
#include <utility>
#include <vector>

#include "geodrift/camera.hpp"
#include "geodrift/geodesy.hpp"
#include "geodrift/ids.hpp"
#include "geodrift/pnp.hpp"

namespace geodrift {

struct StreamHeader {
  Camera camera;
  WorldOrigin origin;
};

// A geo-tagged image matched to the keyframe it arrives with.
struct GeoObservation {
  MapGeoMatches matches;
  GeoAnchor anchor;
};

struct KeyframeRecord {
  KeyframeId id;
  SE3 pose;  // world-from-camera as reported by the tracker
  std::vector<std::pair<PointId, Vector3>> new_points;  // reference = id
  std::vector<std::pair<PointId, Vector2>> observations;
  std::optional<GeoObservation> geo;
};

}  // namespace geodrift
