#include "geodrift/reprojection.hpp"

namespace geodrift {

namespace {

SE3 pose_of(const double* x) { return SE3Manifold::unpack(x); }

bool residual_at(const Camera& camera, const Vector2& pixel, const Vector3& pc, double* r) {
  if (!(pc.z() > kMinDepth)) return false;
  Eigen::Map<Vector2> out(r);
  out = pixel - Vector2(camera.fx * pc.x() / pc.z() + camera.cx,
                        camera.fy * pc.y() / pc.z() + camera.cy);
  return true;
}

// d r / d(omega, nu) for the left update exp(d) T: p -> p + omega x p + nu.
Eigen::Matrix<double, 2, 6> pose_jacobian(const Eigen::Matrix<double, 2, 3>& dpi,
                                          const Vector3& pc) {
  Eigen::Matrix<double, 2, 6> j;
  j.leftCols<3>() = dpi * skew(pc);
  j.rightCols<3>() = -dpi;
  return j;
}

}  // namespace

Eigen::Matrix<double, 2, 3> projection_jacobian(const Camera& camera, const Vector3& p) {
  const double iz = 1.0 / p.z();
  Eigen::Matrix<double, 2, 3> j;
  j << camera.fx * iz, 0.0, -camera.fx * p.x() * iz * iz,
       0.0, camera.fy * iz, -camera.fy * p.y() * iz * iz;
  return j;
}

bool ReprojectionResidual::evaluate(std::span<const double* const> p, double* r) const {
  const Vector3 x(p[1][0], p[1][1], p[1][2]);
  return residual_at(camera_, pixel_, pose_of(p[0]).act(x), r);
}

bool ReprojectionResidual::analytic_jacobians(std::span<const double* const> p,
                                              std::span<Eigen::MatrixXd> jac) const {
  const SE3 t = pose_of(p[0]);
  const Vector3 pc = t.act(Vector3(p[1][0], p[1][1], p[1][2]));
  if (!(pc.z() > kMinDepth)) return false;
  const Eigen::Matrix<double, 2, 3> dpi = projection_jacobian(camera_, pc);
  jac[0] = pose_jacobian(dpi, pc);
  jac[1] = -dpi * t.rotation().matrix();
  return true;
}

bool PoseOnlyReprojection::evaluate(std::span<const double* const> p, double* r) const {
  return residual_at(camera_, pixel_, pose_of(p[0]).act(point_), r);
}

bool PoseOnlyReprojection::analytic_jacobians(std::span<const double* const> p,
                                              std::span<Eigen::MatrixXd> jac) const {
  const Vector3 pc = pose_of(p[0]).act(point_);
  if (!(pc.z() > kMinDepth)) return false;
  jac[0] = pose_jacobian(projection_jacobian(camera_, pc), pc);
  return true;
}

bool PointOnlyReprojection::evaluate(std::span<const double* const> p, double* r) const {
  return residual_at(camera_, pixel_, pose_.act(Vector3(p[0][0], p[0][1], p[0][2])), r);
}

bool PointOnlyReprojection::analytic_jacobians(std::span<const double* const> p,
                                               std::span<Eigen::MatrixXd> jac) const {
  const Vector3 pc = pose_.act(Vector3(p[0][0], p[0][1], p[0][2]));
  if (!(pc.z() > kMinDepth)) return false;
  jac[0] = -projection_jacobian(camera_, pc) * pose_.rotation().matrix();
  return true;
}

bool OffsetCenterResidual::evaluate(std::span<const double* const> p, double* r) const {
  Eigen::Map<Vector3> out(r);
  out = pose_of(p[0]).inverse().act(offset_) - target_;
  return true;
}

bool OffsetCenterResidual::analytic_jacobians(std::span<const double* const> p,
                                              std::span<Eigen::MatrixXd> jac) const {
  // (exp(d) T)^-1 c = T^-1 exp(-d) c ~ T^-1 (c - omega x c - nu).
  const Matrix3 rt = pose_of(p[0]).rotation().matrix().transpose();
  jac[0].leftCols<3>() = rt * skew(offset_);
  jac[0].rightCols<3>() = -rt;
  return true;
}

}  // namespace geodrift
