#pragma once

#include <map>
#include <set>
#include <vector>

#include "geodrift/camera.hpp"
#include "geodrift/ids.hpp"
#include "geodrift/manifold.hpp"

namespace geodrift {

struct MapPoint {
  Vector3 position = Vector3::Zero();
  KeyframeId reference;
};

// A 2D keypoint of a map point in a keyframe.
struct Observation {
  KeyframeId keyframe;
  PointId point;
  Vector2 pixel = Vector2::Zero();
};

// Pairs the map-frame pose of a localized geo-tagged image with the
// world-frame pose of its geo-tag.
struct GeoCorrespondence {
  GeoImageId geo_image;
  KeyframeId keyframe;
  Sim3 map_pose;   // world-from-camera in the map frame
  SE3 world_pose;  // world-from-camera of the geo-tag

  Vector3 map_point() const { return map_pose.translation(); }
  Vector3 world_point() const { return world_pose.translation(); }
};

struct Scene {
  Camera camera;
  std::map<KeyframeId, SE3> keyframes;  // world-from-camera
  std::map<PointId, MapPoint> map_points;
  std::vector<Observation> observations;
  std::vector<GeoCorrespondence> geo_correspondences;  // by keyframe id
  bool initialized = false;

  // Throws DataError naming the first broken invariant.
  void validate() const;

  std::vector<Vector3> keyframe_positions() const;
};

// Observation lookups built once per query batch.
class ObservationIndex {
 public:
  explicit ObservationIndex(const Scene& scene);

  const std::vector<std::size_t>& by_keyframe(KeyframeId id) const;
  const std::vector<std::size_t>& by_point(PointId id) const;
  std::set<PointId> points_seen_by(KeyframeId id) const;

 private:
  std::map<KeyframeId, std::vector<std::size_t>> by_keyframe_;
  std::map<PointId, std::vector<std::size_t>> by_point_;
  std::vector<std::size_t> empty_;
  const Scene* scene_;
};

// Number of map points observed by both keyframes.
std::size_t shared_points(const ObservationIndex& index, KeyframeId a,
                          KeyframeId b);

// R (sR X + t) with the scale dropped: applies a similarity of the world
// frame to a camera pose.
SE3 transform_pose(const Sim3& transform, const SE3& world_from_camera);

}  // namespace geodrift
