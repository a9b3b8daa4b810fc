#pragma once

// Synthetic street scenarios with injected monocular scale drift, and
// brute-force cost evaluators that share no code with the optimizers.

#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "geodrift/ba.hpp"
#include "geodrift/camera.hpp"
#include "geodrift/pgo.hpp"
#include "geodrift/scene.hpp"
#include "geodrift/stream.hpp"

namespace geodrift {

enum class TrajectoryShape { kStraight, kArc, kCityGrid };

const char* to_string(TrajectoryShape shape);
// Throws DataError for an unknown name.
TrajectoryShape parse_trajectory_shape(std::string_view name);

struct ScenarioSpec {
  TrajectoryShape shape = TrajectoryShape::kCityGrid;
  int keyframes = 200;
  double spacing = 2.0;  // m between consecutive keyframes
  // Exponential ramp: the per-step multiplier is drift_factor^(1/(n-1)), so
  // the last step is drift_factor times longer than in the ground truth.
  double drift_factor = 2.0;
  // Explicit per-step multipliers (size keyframes - 1); overrides the ramp.
  std::vector<double> drift_multipliers;
  int points_per_keyframe = 20;
  double pixel_noise = 1.0;       // px, per axis
  int anchor_interval = 10;       // keyframes between geo-tagged images
  int anchor_offset = 0;          // keyframe of the first geo-tagged image
  double anchor_noise = 1.0;      // m, per horizontal axis of the geo-tag
  double anchor_height_noise = 0.0;  // m, on the geo-tag height
  double rotation_noise = 0.0;    // rad per step, odometry noise
  double translation_noise = 0.0; // m per step, odometry noise
  double geo_outlier_ratio = 0.1; // fraction of wrong geo matches
  int max_geo_matches = 60;
  double geo_lateral_offset = 2.0;  // m, geo camera offset bound
  double geo_heading_jitter = 0.15; // rad, geo camera heading bound
  double map_scale = 0.5;           // scale of the map frame at the start
  Camera camera;
  int image_width = 640;
  int image_height = 480;
  double camera_height = 1.5;  // m above the ground
  double max_depth = 60.0;     // m, visibility bound
  int max_track_length = 20;   // keyframes observing one point
  WorldOrigin origin;          // defaults to a point in UTM zone 30N
  std::uint64_t seed = 1;

  ScenarioSpec();

  // Throws DataError naming the first invalid field.
  void validate() const;
  // m_k for k = 0..keyframes-1, m_0 = 1: cumulative products of the
  // per-step multipliers.
  std::vector<double> cumulative_scale() const;
};

struct Scenario {
  ScenarioSpec spec;
  StreamHeader header;
  Scene ground_truth;  // world frame, noise-free geometry, noisy pixels
  Scene drifted;       // tracker output in the map frame, uninitialized
  std::vector<KeyframeRecord> stream;
  std::map<GeoImageId, SE3> true_geo_poses;  // world-from-camera
  std::map<GeoImageId, std::vector<bool>> geo_outliers;
};

// Seed-deterministic. Throws DataError on an invalid spec.
Scenario generate(const ScenarioSpec& spec);

// Ground-truth keyframe poses keyed by id.
std::map<KeyframeId, SE3> ground_truth_poses(const Scenario& scenario);

// Named scenarios: "city-grid" (200 keyframes, 2 m, ramp to 2x, anchors
// every 10), "demo" (small, fast), "straight", "arc", "zero-drift". Throws
// DataError for an unknown name.
ScenarioSpec canned_scenario(std::string_view name, std::uint64_t seed = 1);
std::vector<std::string> canned_scenario_names();

// Weighted pose-graph cost from 4x4 matrices and a dense matrix logarithm.
double oracle_cost_pgo(const DensePoseGraph& graph);

// Robustified reprojection plus anchor cost by straight-line evaluation.
// Returns +inf when an observation of the spec lies behind its camera.
double oracle_cost_ba(const Scene& scene, const BaProblemSpec& spec);

}  // namespace geodrift
