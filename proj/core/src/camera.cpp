#include "geodrift/camera.hpp"

#include <cmath>

#include "geodrift/errors.hpp"

namespace geodrift {

void Camera::validate() const {
  if (!(std::isfinite(fx) && std::isfinite(fy) && std::isfinite(cx) &&
        std::isfinite(cy))) {
    throw DataError("camera intrinsics must be finite");
  }
  if (fx <= 0.0 || fy <= 0.0) {
    throw DataError("camera focal lengths must be positive");
  }
}

Vector2 Camera::project(const Vector3& p) const {
  if (!(p.z() > kMinDepth)) {
    throw GeometryError("project: point is behind the camera");
  }
  return {fx * p.x() / p.z() + cx, fy * p.y() / p.z() + cy};
}

Vector2 project(const Camera& camera, const SE3& camera_from_world,
                const Vector3& point) {
  return camera.project(camera_from_world.act(point));
}

Vector2 project_world(const Camera& camera, const SE3& world_from_camera,
                      const Vector3& point) {
  const Rot3& r = world_from_camera.rotation();
  return camera.project(r.inverse().act(point - world_from_camera.translation()));
}

}  // namespace geodrift
