#include "geodrift/manifold.hpp"

#include <cmath>
#include <limits>
#include <numbers>

#include <Eigen/LU>

#include "geodrift/errors.hpp"

namespace geodrift {

namespace {

constexpr double kSmallAngle = 1e-6;
constexpr double kSmallSigma = 1e-6;

// I_n(sigma) = int_0^1 t^n e^(sigma t) dt
double exp_moment(int n, double sigma) {
  if (std::abs(sigma) < 1.0) {
    double sum = 0.0;
    double term = 1.0;  // sigma^k / k!
    for (int k = 0; k < 40; ++k) {
      const double add = term / static_cast<double>(n + k + 1);
      sum += add;
      if (std::abs(add) < 1e-18 * std::abs(sum)) break;
      term *= sigma / static_cast<double>(k + 1);
    }
    return sum;
  }
  const double es = std::exp(sigma);
  double value = std::expm1(sigma) / sigma;
  for (int k = 1; k <= n; ++k) value = (es - k * value) / sigma;
  return value;
}

// int_0^1 t^k sin(t theta)/theta dt and int_0^1 t^k (1 - cos(t theta))/theta^2 dt
struct TrigMoments {
  double sine;
  double cosine;
};

TrigMoments trig_moments(int k, double theta) {
  if (theta < 0.5) {
    const double t2 = theta * theta;
    double sine = 0.0;
    double cosine = 0.0;
    double power = 1.0;  // (-1)^m theta^2m
    double fact_odd = 1.0;   // (2m+1)!
    double fact_even = 2.0;  // (2m+2)!
    for (int m = 0; m < 12; ++m) {
      sine += power / (fact_odd * (k + 2 * m + 2));
      cosine += power / (fact_even * (k + 2 * m + 3));
      power *= -t2;
      fact_odd *= (2 * m + 2) * (2 * m + 3);
      fact_even *= (2 * m + 3) * (2 * m + 4);
    }
    return {sine, cosine};
  }
  const double s = std::sin(theta);
  const double c = std::cos(theta);
  const double t2 = theta * theta;
  switch (k) {
    case 0:
      return {2.0 * std::pow(std::sin(0.5 * theta), 2) / t2,
              (theta - s) / (t2 * theta)};
    case 1:
      return {(s - theta * c) / (t2 * theta),
              (0.5 - (c + theta * s - 1.0) / t2) / t2};
    default:
      return {(2.0 * theta * s - (t2 - 2.0) * c - 2.0) / (t2 * t2),
              (1.0 / 3.0 - ((t2 - 2.0) * s + 2.0 * theta * c) / (t2 * theta)) /
                  t2};
  }
}

struct WCoefficients {
  double a;  // multiplies Omega
  double b;  // multiplies Omega^2
  double c;  // multiplies I
};

WCoefficients w_coefficients(double theta, double sigma) {
  const bool small_theta = theta < kSmallAngle;
  const bool small_sigma = std::abs(sigma) < kSmallSigma;
  const double t2 = theta * theta;
  const double s2 = sigma * sigma;
  if (small_theta && small_sigma) {
    return {0.5 + sigma / 3.0 + s2 / 8.0 - t2 / 24.0,
            1.0 / 6.0 + sigma / 8.0 + s2 / 20.0 - t2 / 120.0,
            1.0 + 0.5 * sigma + s2 / 6.0};
  }
  if (small_theta) {
    return {exp_moment(1, sigma) - t2 / 6.0 * exp_moment(3, sigma),
            0.5 * exp_moment(2, sigma) - t2 / 24.0 * exp_moment(4, sigma),
            exp_moment(0, sigma)};
  }
  if (small_sigma) {
    const TrigMoments m0 = trig_moments(0, theta);
    const TrigMoments m1 = trig_moments(1, theta);
    const TrigMoments m2 = trig_moments(2, theta);
    return {m0.sine + sigma * m1.sine + 0.5 * s2 * m2.sine,
            m0.cosine + sigma * m1.cosine + 0.5 * s2 * m2.cosine,
            1.0 + 0.5 * sigma + s2 / 6.0};
  }
  const double scale = std::exp(sigma);
  const double c = std::expm1(sigma) / sigma;
  const double sa = scale * std::sin(theta);
  const double sb = scale * std::cos(theta);
  const double denom = t2 + s2;
  const double a = (sa * sigma + (1.0 - sb) * theta) / (theta * denom);
  const double b = (c - ((sb - 1.0) * sigma + sa * theta) / denom) / t2;
  return {a, b, c};
}

}  // namespace

Matrix3 skew(const Vector3& v) {
  Matrix3 m;
  // clang-format off
  m <<  0.0,  -v.z(),  v.y(),
        v.z(),  0.0,  -v.x(),
       -v.y(),  v.x(),  0.0;
  // clang-format on
  return m;
}

// ---------------------------------------------------------------------------
// Rot3

Rot3::Rot3(const Eigen::Quaterniond& q) {
  const double n = q.norm();
  if (!std::isfinite(n) || n < 1e-12) {
    throw GeometryError("Rot3: quaternion is zero or non-finite");
  }
  // Unit to machine precision: keep the coefficients bit for bit so that
  // serialized rotations round-trip exactly.
  q_ = std::abs(n - 1.0) <= 4.0 * std::numeric_limits<double>::epsilon()
           ? q
           : Eigen::Quaterniond(q.coeffs() / n);
}

Rot3 Rot3::from_matrix(const Matrix3& r) {
  return Rot3(Eigen::Quaterniond(r));
}

Rot3 Rot3::exp(const Vector3& omega) {
  const double theta = omega.norm();
  const double half = 0.5 * theta;
  double k;  // sin(theta/2) / theta
  if (theta < kSmallAngle) {
    k = 0.5 - theta * theta / 48.0;
  } else {
    k = std::sin(half) / theta;
  }
  return Rot3(Eigen::Quaterniond(std::cos(half), k * omega.x(), k * omega.y(),
                                 k * omega.z()));
}

Vector3 Rot3::log() const {
  double w = q_.w();
  Vector3 v = q_.vec();
  if (w < 0.0) {
    w = -w;
    v = -v;
  }
  const double vn = v.norm();
  if (vn < 1e-10) {
    // 2 atan(vn / w) / vn ~ 2/w (1 - vn^2 / (3 w^2))
    return (2.0 / w) * (1.0 - vn * vn / (3.0 * w * w)) * v;
  }
  const double theta = 2.0 * std::atan2(vn, w);
  return (theta / vn) * v;
}

double Rot3::angle() const {
  return 2.0 * std::atan2(q_.vec().norm(), std::abs(q_.w()));
}

Rot3 Rot3::inverse() const { return Rot3(q_.conjugate()); }

Rot3 operator*(const Rot3& a, const Rot3& b) {
  return Rot3(a.q_ * b.q_);
}

// ---------------------------------------------------------------------------
// SE3

SE3 SE3::exp(const Vector6& xi) {
  const Vector3 omega = xi.head<3>();
  return SE3(Rot3::exp(omega), so3_left_jacobian(omega) * xi.tail<3>());
}

Vector6 SE3::log() const {
  Vector6 xi;
  const Vector3 omega = rotation_.log();
  xi.head<3>() = omega;
  xi.tail<3>() = so3_left_jacobian(omega).lu().solve(translation_);
  return xi;
}

Matrix4 SE3::matrix() const {
  Matrix4 m = Matrix4::Identity();
  m.topLeftCorner<3, 3>() = rotation_.matrix();
  m.topRightCorner<3, 1>() = translation_;
  return m;
}

SE3 SE3::inverse() const {
  const Rot3 rinv = rotation_.inverse();
  return SE3(rinv, -rinv.act(translation_));
}

SE3 operator*(const SE3& a, const SE3& b) {
  return SE3(a.rotation_ * b.rotation_, a.act(b.translation_));
}

// ---------------------------------------------------------------------------
// Sim3

Sim3Tangent Sim3Tangent::from_vector(const Vector7& v) {
  return {v.head<3>(), v(3), v.tail<3>()};
}

Vector7 Sim3Tangent::vector() const {
  Vector7 v;
  v << omega, sigma, nu;
  return v;
}

Sim3::Sim3(const Rot3& rotation, const Vector3& translation, double scale)
    : rotation_(rotation), translation_(translation), scale_(scale) {
  if (!std::isfinite(scale) || scale <= 0.0) {
    throw GeometryError("Sim3: scale must be positive and finite");
  }
}

Matrix4 Sim3::matrix() const {
  Matrix4 m = Matrix4::Identity();
  m.topLeftCorner<3, 3>() = scale_ * rotation_.matrix();
  m.topRightCorner<3, 1>() = translation_;
  return m;
}

Matrix3 sim3_w_matrix(const Vector3& omega, double sigma) {
  const WCoefficients w = w_coefficients(omega.norm(), sigma);
  const Matrix3 om = skew(omega);
  return w.a * om + w.b * om * om + w.c * Matrix3::Identity();
}

Matrix3 so3_left_jacobian(const Vector3& omega) {
  return sim3_w_matrix(omega, 0.0);
}

Sim3 exp_sim3(const Sim3Tangent& xi) {
  return Sim3(Rot3::exp(xi.omega), sim3_w_matrix(xi.omega, xi.sigma) * xi.nu,
              std::exp(xi.sigma));
}

Sim3Tangent log_sim3(const Sim3& s) {
  const Eigen::Quaterniond& q = s.rotation().quaternion();
  if (std::abs(q.w()) < 1e-14) {
    throw GeometryError(
        "log_sim3: rotation angle is pi, logarithm branch is ambiguous");
  }
  Sim3Tangent xi;
  xi.omega = s.rotation().log();
  xi.sigma = std::log(s.scale());
  xi.nu = sim3_w_matrix(xi.omega, xi.sigma).lu().solve(s.translation());
  return xi;
}

Sim3 compose(const Sim3& a, const Sim3& b) {
  return Sim3(a.rotation() * b.rotation(),
              a.scale() * a.rotation().act(b.translation()) + a.translation(),
              a.scale() * b.scale());
}

Sim3 inverse(const Sim3& a) {
  const Rot3 rinv = a.rotation().inverse();
  const double sinv = 1.0 / a.scale();
  return Sim3(rinv, -sinv * rinv.act(a.translation()), sinv);
}

Vector3 act(const Sim3& a, const Vector3& p) {
  return a.scale() * a.rotation().act(p) + a.translation();
}

Sim3 se3_to_sim3(const SE3& g) {
  return Sim3(g.rotation(), g.translation(), 1.0);
}

Matrix4 sim3_hat(const Sim3Tangent& xi) {
  Matrix4 m = Matrix4::Zero();
  m.topLeftCorner<3, 3>() = skew(xi.omega) + xi.sigma * Matrix3::Identity();
  m.topRightCorner<3, 1>() = xi.nu;
  return m;
}

Matrix7 sim3_ad(const Vector7& xi) {
  const Vector3 omega = xi.head<3>();
  const double sigma = xi(3);
  const Vector3 nu = xi.tail<3>();
  Matrix7 ad = Matrix7::Zero();
  ad.block<3, 3>(0, 0) = skew(omega);
  ad.block<3, 3>(4, 0) = skew(nu);
  ad.block<3, 1>(4, 3) = -nu;
  ad.block<3, 3>(4, 4) = skew(omega) + sigma * Matrix3::Identity();
  return ad;
}

Matrix7 sim3_adjoint(const Sim3& s) {
  const Matrix3 r = s.rotation().matrix();
  Matrix7 adj = Matrix7::Zero();
  adj.block<3, 3>(0, 0) = r;
  adj(3, 3) = 1.0;
  adj.block<3, 3>(4, 0) = skew(s.translation()) * r;
  adj.block<3, 1>(4, 3) = -s.translation();
  adj.block<3, 3>(4, 4) = s.scale() * r;
  return adj;
}

Matrix7 sim3_left_jacobian(const Vector7& xi) {
  // sum_k ad^k / (k+1)!, entire in xi.
  const Matrix7 ad = sim3_ad(xi);
  Matrix7 sum = Matrix7::Identity();
  Matrix7 term = Matrix7::Identity();
  for (int k = 1; k < 80; ++k) {
    term = term * ad / static_cast<double>(k + 1);
    sum += term;
    if (term.lpNorm<Eigen::Infinity>() <
        1e-18 * sum.lpNorm<Eigen::Infinity>()) {
      break;
    }
  }
  return sum;
}

Matrix7 sim3_left_jacobian_inverse(const Vector7& xi) {
  return sim3_left_jacobian(xi).lu().inverse();
}

}  // namespace geodrift
