#pragma once

// Geo-constrained bundle adjustment:
//
//   E = sum rho(|x_ij - pi(R_j X_i + t_j)|^2) + lambda sum_m |c_m - y_m|^2
//
// over the points C5 (seen by the window keyframes C1) and the C1 poses. c_m
// is the center of geo image m predicted from its keyframe's pose and the
// fixed keyframe-to-geo-image relative pose taken before optimization.

#include <vector>

#include "geodrift/pgo.hpp"
#include "geodrift/scene.hpp"
#include "geodrift/solver.hpp"

namespace geodrift {

struct BaOptions {
  double anchor_weight = 1e3;  // lambda
  double huber_delta = 2.45;   // px
  bool full_history_anchors = false;
  // Also include observations of C5 points by keyframes outside C1, with
  // those keyframes held fixed.
  bool fixed_observers = false;
};

struct BaAnchor {
  GeoImageId geo_image;
  KeyframeId keyframe;
  SE3 relative;    // keyframe-from-geo-image, P_m = P_k * relative
  Vector3 target;  // y_m
};

struct BaProblemSpec {
  std::vector<KeyframeId> poses;      // C1
  std::vector<PointId> points;        // C5
  std::vector<std::size_t> observations;  // indices into scene.observations
  std::vector<BaAnchor> anchors;
  double anchor_weight = 1e3;
  double huber_delta = 2.45;
};

// Observations are those of C5 points by C1 keyframes, plus, with
// fixed_observers, by other keyframes whose poses then stay fixed.
// Observations behind their camera at construction time are left out.
// Throws DataError when C5 is empty.
BaProblemSpec make_ba_spec(const Scene& scene, const ObservationIndex& index,
                           const GraphWindow& window, const BaOptions& options);
BaProblemSpec make_ba_spec(const Scene& scene, const GraphWindow& window,
                           const BaOptions& options);

struct BaOutcome {
  SolveReport report;
  double cost_before = 0.0;
  double cost_after = 0.0;
  std::size_t residuals = 0;
};

// Optimizes and writes back C1 poses, C5 points and the anchored geo images'
// map poses.
BaOutcome optimize_ba(Scene& scene, const BaProblemSpec& spec,
                      const SolverOptions& options = {});

// E at the scene's current state, as evaluated by the solver. Throws
// SolverError when an observation of the spec is now behind its camera.
double ba_cost(const Scene& scene, const BaProblemSpec& spec);

}  // namespace geodrift
