#pragma once

// Localization of a geo-tagged image in the map frame from 3D map point to
// 2D keypoint matches by reprojection-error minimization.

#include <utility>
#include <vector>

#include "geodrift/camera.hpp"
#include "geodrift/geodesy.hpp"
#include "geodrift/ids.hpp"
#include "geodrift/scene.hpp"
#include "geodrift/solver.hpp"

namespace geodrift {

struct MapGeoMatches {
  GeoImageId geo_image;
  Camera camera;
  std::vector<std::pair<PointId, Vector2>> matches;
};

struct PnpOptions {
  double inlier_threshold = 5.99;  // px^2, chi-square 95% with 2 DoF
  double min_inlier_ratio = 0.5;
  int robust_rounds = 4;
  SolverOptions solver;
};

struct PnpResult {
  SE3 pose;                   // world-from-camera in the map frame
  std::vector<bool> inliers;  // per match, in input order
  std::size_t inlier_count = 0;
  double inlier_ratio = 0.0;
  bool success = false;
  // Truncated reprojection cost sum min(|r|^2, threshold) over all matches.
  double initial_cost = 0.0;
  double final_cost = 0.0;
  SolveReport report;  // last solver run
};

// Throws GeometryError for fewer than 4 matches, matched map points that are
// collinear (or coincident), or an unknown point id (DataError). A low inlier
// ratio is reported through success = false.
PnpResult localize_geo_image(const Scene& scene, const MapGeoMatches& matches,
                             const SE3& initial_guess, const PnpOptions& options = {});

GeoCorrespondence make_geo_correspondence(GeoImageId geo_image, KeyframeId keyframe,
                                          const SE3& pose_map, const SE3& geotag_world_pose);
GeoCorrespondence make_geo_correspondence(GeoImageId geo_image, KeyframeId keyframe,
                                          const SE3& pose_map, const GeoAnchor& geotag,
                                          const WorldOrigin& origin);

}  // namespace geodrift
