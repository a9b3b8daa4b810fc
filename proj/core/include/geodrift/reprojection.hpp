#pragma once

// Reprojection residuals r = x - pi(R X + t) over camera-from-world SE3
// blocks (SE3Manifold storage, left update) and Euclidean 3D points. A point
// at depth <= kMinDepth is outside the residual's domain.

#include "geodrift/camera.hpp"
#include "geodrift/solver.hpp"

namespace geodrift {

// Blocks: [pose, point].
class ReprojectionResidual final : public ResidualFunction {
 public:
  ReprojectionResidual(const Camera& camera, const Vector2& pixel)
      : camera_(camera), pixel_(pixel) {}
  int residual_size() const override { return 2; }
  bool evaluate(std::span<const double* const> p, double* r) const override;
  bool analytic_jacobians(std::span<const double* const> p,
                          std::span<Eigen::MatrixXd> jac) const override;

 private:
  Camera camera_;
  Vector2 pixel_;
};

// Blocks: [pose]; the point is fixed.
class PoseOnlyReprojection final : public ResidualFunction {
 public:
  PoseOnlyReprojection(const Camera& camera, const Vector2& pixel, const Vector3& point)
      : camera_(camera), pixel_(pixel), point_(point) {}
  int residual_size() const override { return 2; }
  bool evaluate(std::span<const double* const> p, double* r) const override;
  bool analytic_jacobians(std::span<const double* const> p,
                          std::span<Eigen::MatrixXd> jac) const override;

 private:
  Camera camera_;
  Vector2 pixel_;
  Vector3 point_;
};

// Blocks: [point]; the camera-from-world pose is fixed.
class PointOnlyReprojection final : public ResidualFunction {
 public:
  PointOnlyReprojection(const Camera& camera, const Vector2& pixel, const SE3& camera_from_world)
      : camera_(camera), pixel_(pixel), pose_(camera_from_world) {}
  int residual_size() const override { return 2; }
  bool evaluate(std::span<const double* const> p, double* r) const override;
  bool analytic_jacobians(std::span<const double* const> p,
                          std::span<Eigen::MatrixXd> jac) const override;

 private:
  Camera camera_;
  Vector2 pixel_;
  SE3 pose_;
};

// Center of a camera with pose P_k o offset, P_k = T_k^-1 for the
// camera-from-world keyframe block T_k, minus a world target.
// Blocks: [keyframe pose].
class OffsetCenterResidual final : public ResidualFunction {
 public:
  OffsetCenterResidual(const Vector3& offset, const Vector3& target)
      : offset_(offset), target_(target) {}
  int residual_size() const override { return 3; }
  bool evaluate(std::span<const double* const> p, double* r) const override;
  bool analytic_jacobians(std::span<const double* const> p,
                          std::span<Eigen::MatrixXd> jac) const override;

 private:
  Vector3 offset_;
  Vector3 target_;
};

// d pi / d p for a camera-frame point.
Eigen::Matrix<double, 2, 3> projection_jacobian(const Camera& camera, const Vector3& p_camera);

}  // namespace geodrift
