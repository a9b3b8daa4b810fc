#include "geodrift/scene.hpp"

#include <algorithm>
#include <string>

#include "geodrift/errors.hpp"

namespace geodrift {

void Scene::validate() const {
  camera.validate();
  for (const auto& [id, point] : map_points) {
    if (!keyframes.contains(point.reference)) {
      throw DataError("map point " + std::to_string(id.value) +
                      " references missing keyframe " +
                      std::to_string(point.reference.value));
    }
  }
  for (const Observation& obs : observations) {
    if (!keyframes.contains(obs.keyframe) || !map_points.contains(obs.point)) {
      throw DataError("observation (keyframe " +
                      std::to_string(obs.keyframe.value) + ", point " +
                      std::to_string(obs.point.value) +
                      ") references a missing id");
    }
  }
  for (std::size_t i = 0; i < geo_correspondences.size(); ++i) {
    const GeoCorrespondence& c = geo_correspondences[i];
    if (!keyframes.contains(c.keyframe)) {
      throw DataError("geo correspondence " + std::to_string(c.geo_image.value) +
                      " references missing keyframe " +
                      std::to_string(c.keyframe.value));
    }
    if (i > 0 && c.keyframe < geo_correspondences[i - 1].keyframe) {
      throw DataError("geo correspondences are not sorted by keyframe id");
    }
  }
}

std::vector<Vector3> Scene::keyframe_positions() const {
  std::vector<Vector3> out;
  out.reserve(keyframes.size());
  for (const auto& [id, pose] : keyframes) out.push_back(pose.translation());
  return out;
}

ObservationIndex::ObservationIndex(const Scene& scene) : scene_(&scene) {
  for (std::size_t i = 0; i < scene.observations.size(); ++i) {
    const Observation& obs = scene.observations[i];
    by_keyframe_[obs.keyframe].push_back(i);
    by_point_[obs.point].push_back(i);
  }
}

const std::vector<std::size_t>& ObservationIndex::by_keyframe(KeyframeId id) const {
  const auto it = by_keyframe_.find(id);
  return it == by_keyframe_.end() ? empty_ : it->second;
}

const std::vector<std::size_t>& ObservationIndex::by_point(PointId id) const {
  const auto it = by_point_.find(id);
  return it == by_point_.end() ? empty_ : it->second;
}

std::set<PointId> ObservationIndex::points_seen_by(KeyframeId id) const {
  std::set<PointId> out;
  for (std::size_t i : by_keyframe(id)) out.insert(scene_->observations[i].point);
  return out;
}

std::size_t shared_points(const ObservationIndex& index, KeyframeId a,
                          KeyframeId b) {
  const std::set<PointId> pa = index.points_seen_by(a);
  const std::set<PointId> pb = index.points_seen_by(b);
  std::size_t count = 0;
  auto ia = pa.begin();
  auto ib = pb.begin();
  while (ia != pa.end() && ib != pb.end()) {
    if (*ia < *ib) {
      ++ia;
    } else if (*ib < *ia) {
      ++ib;
    } else {
      ++count;
      ++ia;
      ++ib;
    }
  }
  return count;
}

SE3 transform_pose(const Sim3& transform, const SE3& world_from_camera) {
  return SE3(transform.rotation() * world_from_camera.rotation(),
             act(transform, world_from_camera.translation()));
}

}  // namespace geodrift
