#pragma once

// One-shot geo-registration of a raw map: rotate the best-fit plane of the
// keyframe positions onto the world xz-plane, then fit the four-parameter
// planar similarity
//
//       [ s cos t   0   -s sin t   a ]
//   A = [    0      s      0       h ]
//       [ s sin t   0    s cos t   b ]
//       [    0      0      0       1 ]
//
// to the geo correspondences with RANSAC followed by Levenberg-Marquardt.
// h is a fixed configurable height offset (0 by default).

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "geodrift/manifold.hpp"
#include "geodrift/scene.hpp"
#include "geodrift/solver.hpp"

namespace geodrift {

struct PlanarSimilarity {
  double a = 0.0;      // x translation, m
  double b = 0.0;      // z translation, m
  double s = 1.0;      // uniform scale
  double theta = 0.0;  // yaw about y, radians, in (-pi, pi]
  double height_offset = 0.0;

  Matrix4 matrix() const;
  Sim3 to_sim3() const;
  Vector3 apply(const Vector3& p) const;
};

// Wraps to (-pi, pi].
double normalize_angle(double angle);

enum class PlaneNormalRule {
  // Of the two normal signs, use the one needing the smaller rotation.
  kSmallestRotation,
  // Use the sign opposite the mean camera y axis (camera y points down).
  kCameraUp,
};

// Rotation taking the smallest-variance direction of the points to +y.
// Throws GeometryError for fewer than 3 points or collinear input.
Rot3 fit_ground_plane(std::span<const Vector3> points);

// Same, with the sign of the normal chosen by the rule. kCameraUp needs the
// keyframe poses.
Rot3 fit_ground_plane(const Scene& scene, PlaneNormalRule rule);

// Plane of the keyframe positions with the camera-up sign when they span a
// plane (middle eigenvalue >= min_planarity times the largest); otherwise
// the mean camera up direction (camera -y) is taken as the normal. Throws
// GeometryError for an empty scene.
Rot3 ground_plane_rotation(const Scene& scene, double min_planarity = 1e-3);

struct RansacOptions {
  int iterations = 1000;
  double threshold = 5.0;  // m, on the 3D residual norm
  std::uint64_t seed = 42;
};

struct PlanarFit {
  PlanarSimilarity params;
  std::vector<bool> inliers;
  double cost = 0.0;          // over inliers, at params
  double minimal_cost = 0.0;  // over the same inliers, at the best sample
  PlanarSimilarity minimal_params;
  SolveReport refinement;
};

// Residual world - A(params) map over params (a, b, s, theta).
class PlanarResidual final : public ResidualFunction {
 public:
  PlanarResidual(Vector3 map, Vector3 world, double height_offset)
      : map_(std::move(map)), world_(std::move(world)), h_(height_offset) {}
  int residual_size() const override { return 3; }
  bool evaluate(std::span<const double* const> params, double* residual) const override;
  bool analytic_jacobians(std::span<const double* const> params,
                          std::span<Eigen::MatrixXd> jac) const override;

 private:
  Vector3 map_;
  Vector3 world_;
  double h_;
};

// sum over masked k of |world_k - A map_k|^2. An empty mask means all.
double planar_cost(const PlanarSimilarity& params,
                   std::span<const Vector3> map_points,
                   std::span<const Vector3> world_points,
                   const std::vector<bool>& mask = {});

// Exact solution from two correspondences using their xz projections.
// Throws GeometryError when the projections coincide.
PlanarSimilarity solve_planar_minimal(const Vector3& map0, const Vector3& map1,
                                      const Vector3& world0,
                                      const Vector3& world1,
                                      double height_offset = 0.0);

// Throws GeometryError on fewer than 2 correspondences, when every sample is
// degenerate, or when no consensus of at least 2 is found.
PlanarFit fit_planar_similarity(std::span<const Vector3> map_points,
                                std::span<const Vector3> world_points,
                                const RansacOptions& ransac = {},
                                double height_offset = 0.0,
                                const SolverOptions& solver = {});

// Fits against the geo-image positions after applying plane_rotation.
PlanarFit fit_planar_similarity(std::span<const GeoCorrespondence> corrs,
                                const Rot3& plane_rotation,
                                const RansacOptions& ransac = {},
                                double height_offset = 0.0,
                                const SolverOptions& solver = {});

// A o R_plane as one similarity.
Sim3 initialization_transform(const Rot3& plane_rotation,
                              const PlanarSimilarity& sim);

// Applies A o R_plane to keyframes, geo-image map poses and map points.
// Throws DataError if the scene is already initialized.
Scene apply_initialization(Scene scene, const Rot3& plane_rotation,
                           const PlanarSimilarity& sim);

// Applies a world-frame similarity to every pose and point of the scene.
void transform_scene(Scene& scene, const Sim3& transform);

// Least-squares similarity dst ~ T(src) (Umeyama). Throws GeometryError for
// fewer than 3 pairs or a degenerate source set.
Sim3 align_similarity(std::span<const Vector3> src, std::span<const Vector3> dst);

}  // namespace geodrift
