#pragma once

// Random problem instances shared by the unit tests and the acceptance run.

#include <random>

#include "geodrift/ba.hpp"
#include "geodrift/pgo.hpp"
#include "geodrift/sim.hpp"
#include "random_poses.hpp"

namespace geodrift::testing {

inline Sim3 perturb(RandomPoses& rng, const Sim3& s, double size) {
  return exp_sim3(rng.tangent(0.0, size, size, size)) * s;
}

// Pose graph of at most 10 nodes: a keyframe chain plus a closing edge, geo
// nodes tied to random keyframes, one anchor per geo node. Edge snapshots
// come from one state; every node is then perturbed away from it.
inline PoseGraph random_pose_graph(unsigned seed, PgoWeights weights = {},
                                   double perturbation = 0.2) {
  RandomPoses rng(seed);
  std::mt19937 pick(seed);
  const int keyframes = 2 + static_cast<int>(pick() % 6);
  const int geo = 1 + static_cast<int>(pick() % 3);
  PoseGraph g(weights);
  for (int i = 0; i < keyframes; ++i) g.add_keyframe(KeyframeId(i), rng.sim3(3.0, 20.0, 0.5));
  for (int l = 0; l < geo; ++l) g.add_geo_image(GeoImageId(l), rng.sim3(3.0, 20.0, 0.5));
  for (int i = 0; i + 1 < keyframes; ++i) g.add_keyframe_edge(KeyframeId(i), KeyframeId(i + 1));
  if (keyframes > 2) g.add_keyframe_edge(KeyframeId(0), KeyframeId(keyframes - 1));
  for (int l = 0; l < geo; ++l) {
    g.add_geo_edge(KeyframeId(static_cast<int>(pick() % keyframes)), GeoImageId(l));
    g.add_anchor(GeoImageId(l), rng.vec3(20.0));
  }
  for (int i = 0; i < keyframes; ++i) {
    g.set_keyframe_pose(KeyframeId(i), perturb(rng, g.keyframe_pose(KeyframeId(i)), perturbation));
  }
  for (int l = 0; l < geo; ++l) {
    g.set_geo_pose(GeoImageId(l), perturb(rng, g.geo_pose(GeoImageId(l)), perturbation));
  }
  return g;
}

// Ground-truth scene of at most 10 keyframes and 50 points with its PGO/BA
// window, moved off the optimum so that some residuals exceed the Huber
// threshold.
struct BaInstance {
  Scenario scenario;
  Scene scene;
  GraphWindow window;
};

inline BaInstance random_ba_instance(std::uint64_t seed, double pose_noise, double point_noise) {
  ScenarioSpec spec = canned_scenario("demo", seed);
  spec.keyframes = 10;
  spec.points_per_keyframe = 5;
  spec.anchor_interval = 3;
  BaInstance inst{generate(spec), {}, {}};
  inst.scene = inst.scenario.ground_truth;
  inst.window = build_window(inst.scene, WindowOptions{});
  RandomPoses rng(static_cast<unsigned>(seed));
  for (auto& [id, pose] : inst.scene.keyframes) {
    pose = SE3::exp((Vector6() << rng.vec3(pose_noise * 0.01), rng.vec3(pose_noise)).finished()) * pose;
  }
  for (auto& [id, p] : inst.scene.map_points) p.position += rng.vec3(point_noise);
  return inst;
}

inline double relative_gap(double a, double b) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1.0});
}

}  // namespace geodrift::testing
