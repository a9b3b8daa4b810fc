#pragma once

// Rotation, rigid and similarity transforms with their exponential and
// logarithm maps. Every pose stored by the library is world-from-camera, so
// the translation of a pose is the camera center.

#include <Eigen/Core>
#include <Eigen/Geometry>

namespace geodrift {

using Vector2 = Eigen::Vector2d;
using Vector3 = Eigen::Vector3d;
using Vector6 = Eigen::Matrix<double, 6, 1>;
using Vector7 = Eigen::Matrix<double, 7, 1>;
using Matrix3 = Eigen::Matrix3d;
using Matrix4 = Eigen::Matrix4d;
using Matrix6 = Eigen::Matrix<double, 6, 6>;
using Matrix7 = Eigen::Matrix<double, 7, 7>;

Matrix3 skew(const Vector3& v);

class Rot3 {
 public:
  Rot3() = default;
  // Normalizes q unless it is already unit to within 4 ulp; throws
  // GeometryError on a zero or non-finite quaternion.
  explicit Rot3(const Eigen::Quaterniond& q);

  static Rot3 identity() { return Rot3(); }
  static Rot3 from_matrix(const Matrix3& r);
  static Rot3 exp(const Vector3& omega);

  // Rotation vector on the principal branch, angle in [0, pi].
  Vector3 log() const;
  double angle() const;

  const Eigen::Quaterniond& quaternion() const { return q_; }
  Matrix3 matrix() const { return q_.toRotationMatrix(); }
  Rot3 inverse() const;
  Vector3 act(const Vector3& v) const { return q_ * v; }

  friend Rot3 operator*(const Rot3& a, const Rot3& b);

 private:
  Eigen::Quaterniond q_ = Eigen::Quaterniond::Identity();
};

class SE3 {
 public:
  SE3() = default;
  SE3(const Rot3& rotation, const Vector3& translation)
      : rotation_(rotation), translation_(translation) {}

  static SE3 identity() { return SE3(); }
  // Tangent ordering (omega, nu).
  static SE3 exp(const Vector6& xi);
  Vector6 log() const;

  const Rot3& rotation() const { return rotation_; }
  const Vector3& translation() const { return translation_; }
  Matrix4 matrix() const;

  SE3 inverse() const;
  Vector3 act(const Vector3& p) const { return rotation_.act(p) + translation_; }

  friend SE3 operator*(const SE3& a, const SE3& b);

 private:
  Rot3 rotation_;
  Vector3 translation_ = Vector3::Zero();
};

// Coefficients of sim(3): rotation omega, log-scale sigma, translation nu.
struct Sim3Tangent {
  Vector3 omega = Vector3::Zero();
  double sigma = 0.0;
  Vector3 nu = Vector3::Zero();

  static Sim3Tangent from_vector(const Vector7& v);
  Vector7 vector() const;
};

// [s R, t; 0, 1] with s > 0.
class Sim3 {
 public:
  Sim3() = default;
  // Throws GeometryError unless scale is finite and positive.
  Sim3(const Rot3& rotation, const Vector3& translation, double scale);

  static Sim3 identity() { return Sim3(); }

  const Rot3& rotation() const { return rotation_; }
  const Vector3& translation() const { return translation_; }
  double scale() const { return scale_; }
  Matrix4 matrix() const;

  // Drops the scale; translation and rotation are kept as-is.
  SE3 to_se3() const { return SE3(rotation_, translation_); }

 private:
  Rot3 rotation_;
  Vector3 translation_ = Vector3::Zero();
  double scale_ = 1.0;
};

Sim3 exp_sim3(const Sim3Tangent& xi);
// Throws GeometryError when the rotation angle is pi (branch ambiguity).
Sim3Tangent log_sim3(const Sim3& s);

Sim3 compose(const Sim3& a, const Sim3& b);
Sim3 inverse(const Sim3& a);
Vector3 act(const Sim3& a, const Vector3& p);
Sim3 se3_to_sim3(const SE3& g);

inline Sim3 operator*(const Sim3& a, const Sim3& b) { return compose(a, b); }

// W in exp([w^ + sigma I, nu; 0 0]) = [e^sigma R, W nu; 0 1].
Matrix3 sim3_w_matrix(const Vector3& omega, double sigma);

// 4x4 hat operator of sim(3).
Matrix4 sim3_hat(const Sim3Tangent& xi);

// ad_xi with (omega, sigma, nu) ordering: ad_a(b) = vee([hat(a), hat(b)]).
Matrix7 sim3_ad(const Vector7& xi);

// Adjoint: S exp(xi) S^-1 = exp(Ad_S xi).
Matrix7 sim3_adjoint(const Sim3& s);

// Left Jacobian: exp(xi + d) ~ exp(J_l(xi) d) exp(xi).
Matrix7 sim3_left_jacobian(const Vector7& xi);
Matrix7 sim3_left_jacobian_inverse(const Vector7& xi);

// Left Jacobian of SO(3).
Matrix3 so3_left_jacobian(const Vector3& omega);

}  // namespace geodrift
