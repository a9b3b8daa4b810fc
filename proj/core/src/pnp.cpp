#include "geodrift/pnp.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <memory>
#include <string>

#include <Eigen/Eigenvalues>
#include <spdlog/spdlog.h>

#include "geodrift/errors.hpp"
#include "geodrift/reprojection.hpp"

namespace geodrift {

namespace {

double squared_error(const Camera& camera, const SE3& camera_from_world, const Vector3& x,
                     const Vector2& pixel) {
  const Vector3 pc = camera_from_world.act(x);
  if (!(pc.z() > kMinDepth)) return std::numeric_limits<double>::infinity();
  const Vector2 proj(camera.fx * pc.x() / pc.z() + camera.cx,
                     camera.fy * pc.y() / pc.z() + camera.cy);
  return (pixel - proj).squaredNorm();
}

double truncated_cost(const Camera& camera, const SE3& cfw, const std::vector<Vector3>& points,
                      const MapGeoMatches& m, double threshold) {
  double sum = 0.0;
  for (std::size_t i = 0; i < points.size(); ++i) {
    sum += std::min(squared_error(camera, cfw, points[i], m.matches[i].second), threshold);
  }
  return sum;
}

void check_geometry(const std::vector<Vector3>& points) {
  Vector3 mean = Vector3::Zero();
  for (const Vector3& p : points) mean += p;
  mean /= static_cast<double>(points.size());
  Matrix3 cov = Matrix3::Zero();
  for (const Vector3& p : points) cov += (p - mean) * (p - mean).transpose();
  const Eigen::SelfAdjointEigenSolver<Matrix3> eig(cov);
  const Vector3 ev = eig.eigenvalues();  // ascending
  if (!(ev(2) > 0.0) || ev(1) <= 1e-12 * ev(2)) {
    throw GeometryError("PnP: matched map points are collinear or coincident");
  }
}

}  // namespace

PnpResult localize_geo_image(const Scene& scene, const MapGeoMatches& m, const SE3& initial_guess,
                             const PnpOptions& options) {
  m.camera.validate();
  if (m.matches.size() < 4) {
    throw GeometryError("PnP for geo image " + std::to_string(m.geo_image.value) + " needs >= 4 matches, got " +
                        std::to_string(m.matches.size()));
  }
  std::vector<Vector3> points;
  points.reserve(m.matches.size());
  for (const auto& [id, pixel] : m.matches) {
    const auto it = scene.map_points.find(id);
    if (it == scene.map_points.end()) {
      throw DataError("PnP match references unknown map point " + std::to_string(id.value));
    }
    if (!pixel.allFinite()) throw DataError("PnP match has a non-finite pixel");
    points.push_back(it->second.position);
  }
  check_geometry(points);

  const std::size_t n = points.size();
  const SE3 guess_cfw = initial_guess.inverse();
  std::vector<bool> inliers(n);
  for (std::size_t i = 0; i < n; ++i) {
    inliers[i] = guess_cfw.act(points[i]).z() > kMinDepth;
  }

  PnpResult result;
  result.initial_cost = truncated_cost(m.camera, guess_cfw, points, m, options.inlier_threshold);

  std::array<double, SE3Manifold::kAmbient> storage{};
  SE3Manifold::pack(guess_cfw, storage.data());
  const auto manifold = std::make_shared<SE3Manifold>();
  const double delta = std::sqrt(options.inlier_threshold);

  auto run = [&](bool robust) {
    Problem problem;
    const VariableId v = problem.add_variable(storage.data(), manifold);
    std::size_t used = 0;
    for (std::size_t i = 0; i < n; ++i) {
      if (!inliers[i]) continue;
      problem.add_residual(
          std::make_unique<PoseOnlyReprojection>(m.camera, m.matches[i].second, points[i]), {v},
          1.0, robust ? std::optional<HuberKernel>(HuberKernel{delta}) : std::nullopt,
          "pnp(pt " + std::to_string(m.matches[i].first.value) + ")");
      ++used;
    }
    if (used < 4) return false;
    result.report = solve(problem, options.solver);
    return true;
  };

  // Robust rounds with reclassification, then a plain solve on the inliers.
  bool ok = true;
  for (int round = 0; round < options.robust_rounds && ok; ++round) {
    ok = run(true);
    if (!ok) break;
    const SE3 cfw = SE3Manifold::unpack(storage.data());
    std::vector<bool> next(n);
    for (std::size_t i = 0; i < n; ++i) {
      next[i] = squared_error(m.camera, cfw, points[i], m.matches[i].second) <
                options.inlier_threshold;
    }
    const bool stable = next == inliers;
    inliers = std::move(next);
    if (stable) break;
  }
  if (ok) ok = run(false);

  SE3 cfw = SE3Manifold::unpack(storage.data());
  result.final_cost = truncated_cost(m.camera, cfw, points, m, options.inlier_threshold);
  if (!ok || !(result.final_cost <= result.initial_cost)) {
    cfw = guess_cfw;
    result.final_cost = result.initial_cost;
  }
  result.pose = cfw.inverse();
  for (std::size_t i = 0; i < n; ++i) {
    inliers[i] = squared_error(m.camera, cfw, points[i], m.matches[i].second) <
                 options.inlier_threshold;
  }
  result.inlier_count = static_cast<std::size_t>(std::count(inliers.begin(), inliers.end(), true));
  result.inliers = std::move(inliers);
  result.inlier_ratio = static_cast<double>(result.inlier_count) / static_cast<double>(n);
  result.success = result.inlier_count >= 4 && result.inlier_ratio >= options.min_inlier_ratio;
  spdlog::debug("pnp: geo image {}, {}/{} inliers, cost {:.6g} -> {:.6g}{}", m.geo_image.value,
                result.inlier_count, n, result.initial_cost, result.final_cost,
                result.success ? "" : " (rejected)");
  return result;
}

GeoCorrespondence make_geo_correspondence(GeoImageId geo_image, KeyframeId keyframe,
                                          const SE3& pose_map, const SE3& geotag_world_pose) {
  return GeoCorrespondence{geo_image, keyframe, se3_to_sim3(pose_map), geotag_world_pose};
}

GeoCorrespondence make_geo_correspondence(GeoImageId geo_image, KeyframeId keyframe,
                                          const SE3& pose_map, const GeoAnchor& geotag,
                                          const WorldOrigin& origin) {
  return make_geo_correspondence(geo_image, keyframe, pose_map, geotag.world_pose(origin));
}

}  // namespace geodrift
