#pragma once

#include <random>

#include "geodrift/manifold.hpp"

namespace geodrift::testing {

class RandomPoses {
 public:
  explicit RandomPoses(unsigned seed) : rng_(seed) {}

  double uniform(double lo, double hi) {
    return std::uniform_real_distribution<double>(lo, hi)(rng_);
  }

  Vector3 vec3(double half_width) {
    return Vector3(uniform(-half_width, half_width), uniform(-half_width, half_width),
                   uniform(-half_width, half_width));
  }

  Vector3 unit_vector() {
    Vector3 v;
    do {
      v = vec3(1.0);
    } while (v.norm() < 1e-3 || v.norm() > 1.0);
    return v.normalized();
  }

  Vector3 rotation_vector(double min_angle, double max_angle) {
    return unit_vector() * uniform(min_angle, max_angle);
  }

  Rot3 rot3(double max_angle = 3.0) { return Rot3::exp(rotation_vector(0.0, max_angle)); }

  SE3 se3(double max_angle = 3.0, double half_width = 10.0) {
    return SE3(rot3(max_angle), vec3(half_width));
  }

  Sim3 sim3(double max_angle = 3.0, double half_width = 10.0, double max_log_scale = 1.0) {
    return Sim3(rot3(max_angle), vec3(half_width),
                std::exp(uniform(-max_log_scale, max_log_scale)));
  }

  Sim3Tangent tangent(double min_angle, double max_angle, double half_width = 5.0,
                      double max_sigma = 1.0) {
    Sim3Tangent xi;
    xi.omega = rotation_vector(min_angle, max_angle);
    xi.sigma = uniform(-max_sigma, max_sigma);
    xi.nu = vec3(half_width);
    return xi;
  }

  std::mt19937& engine() { return rng_; }

 private:
  std::mt19937 rng_;
};

}  // namespace geodrift::testing
