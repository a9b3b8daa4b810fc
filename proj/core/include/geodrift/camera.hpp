#pragma once

#include "geodrift/manifold.hpp"

namespace geodrift {

// Pinhole intrinsics in pixels.
struct Camera {
  double fx = 500.0;
  double fy = 500.0;
  double cx = 320.0;
  double cy = 240.0;

  // Throws DataError unless fx, fy > 0 and all values are finite.
  void validate() const;

  // Projection of a point already in camera coordinates. Throws
  // GeometryError when p.z() <= 1e-9.
  Vector2 project(const Vector3& p_camera) const;
};

// pi(R X + t) with camera_from_world = (R, t).
Vector2 project(const Camera& camera, const SE3& camera_from_world,
                const Vector3& point);

// Same projection for a stored world-from-camera pose.
Vector2 project_world(const Camera& camera, const SE3& world_from_camera,
                      const Vector3& point);

constexpr double kMinDepth = 1e-9;

}  // namespace geodrift
