#include "geodrift/ba.hpp"

#include <algorithm>
#include <array>
#include <map>
#include <set>
#include <string>

#include <spdlog/spdlog.h>

#include "geodrift/errors.hpp"
#include "geodrift/reprojection.hpp"

namespace geodrift {

namespace {

std::map<GeoImageId, std::size_t> correspondence_index(const Scene& scene) {
  std::map<GeoImageId, std::size_t> out;
  for (std::size_t k = 0; k < scene.geo_correspondences.size(); ++k) {
    out[scene.geo_correspondences[k].geo_image] = k;
  }
  return out;
}

}  // namespace

BaProblemSpec make_ba_spec(const Scene& scene, const ObservationIndex& index,
                           const GraphWindow& window, const BaOptions& options) {
  if (!(options.anchor_weight >= 0.0)) throw DataError("BA anchor weight must be >= 0");
  if (!(options.huber_delta > 0.0)) throw DataError("BA Huber threshold must be > 0");
  BaProblemSpec spec;
  spec.anchor_weight = options.anchor_weight;
  spec.huber_delta = options.huber_delta;
  spec.poses = window.c1;

  std::set<PointId> c5;
  for (KeyframeId k : window.c1) {
    if (!scene.keyframes.contains(k)) {
      throw DataError("BA window keyframe " + std::to_string(k.value) + " is not in the scene");
    }
    for (std::size_t i : index.by_keyframe(k)) c5.insert(scene.observations[i].point);
  }
  if (c5.empty()) throw DataError("BA window observes no map points");
  spec.points.assign(c5.begin(), c5.end());

  const std::set<KeyframeId> in_window(window.c1.begin(), window.c1.end());
  for (PointId p : spec.points) {
    const Vector3& x = scene.map_points.at(p).position;
    for (std::size_t i : index.by_point(p)) {
      const Observation& obs = scene.observations[i];
      if (!options.fixed_observers && !in_window.contains(obs.keyframe)) continue;
      const Vector3 pc = scene.keyframes.at(obs.keyframe).inverse().act(x);
      if (pc.z() > kMinDepth) spec.observations.push_back(i);
    }
  }
  std::sort(spec.observations.begin(), spec.observations.end());

  const auto corr_index = correspondence_index(scene);
  std::vector<GeoImageId> anchored = window.c2;
  if (options.full_history_anchors) {
    anchored.clear();
    for (const GeoCorrespondence& c : scene.geo_correspondences) anchored.push_back(c.geo_image);
  }
  for (GeoImageId m : anchored) {
    const auto it = corr_index.find(m);
    if (it == corr_index.end()) {
      throw DataError("BA anchor geo image " + std::to_string(m.value) + " has no correspondence");
    }
    const GeoCorrespondence& c = scene.geo_correspondences[it->second];
    if (!in_window.contains(c.keyframe)) continue;
    const SE3 pk = scene.keyframes.at(c.keyframe);
    spec.anchors.push_back({m, c.keyframe, pk.inverse() * c.map_pose.to_se3(), c.world_point()});
  }
  return spec;
}

BaProblemSpec make_ba_spec(const Scene& scene, const GraphWindow& window,
                           const BaOptions& options) {
  const ObservationIndex index(scene);
  return make_ba_spec(scene, index, window, options);
}

namespace {

struct BaState {
  std::map<KeyframeId, std::array<double, SE3Manifold::kAmbient>> poses;
  std::map<PointId, std::array<double, 3>> points;
};

// Residual blocks of E over the spec; fixed keyframes enter as constants.
void build(const Scene& scene, const BaProblemSpec& spec, BaState& state, Problem& problem) {
  const auto se3 = std::make_shared<SE3Manifold>();
  const auto r3 = std::make_shared<EuclideanManifold>(3);
  std::map<KeyframeId, VariableId> pose_vars;
  std::map<PointId, VariableId> point_vars;
  for (KeyframeId k : spec.poses) {
    auto& storage = state.poses[k];
    SE3Manifold::pack(scene.keyframes.at(k).inverse(), storage.data());
    pose_vars[k] = problem.add_variable(storage.data(), se3);
  }
  for (PointId p : spec.points) {
    auto& storage = state.points[p];
    const Vector3& x = scene.map_points.at(p).position;
    storage = {x.x(), x.y(), x.z()};
    point_vars[p] = problem.add_variable(storage.data(), r3);
  }
  const HuberKernel huber{spec.huber_delta};
  for (std::size_t i : spec.observations) {
    const Observation& obs = scene.observations[i];
    const std::string label =
        "reproj(kf " + std::to_string(obs.keyframe.value) + ", pt " +
        std::to_string(obs.point.value) + ")";
    const auto pv = point_vars.find(obs.point);
    if (pv == point_vars.end()) continue;
    const auto kv = pose_vars.find(obs.keyframe);
    if (kv != pose_vars.end()) {
      problem.add_residual(std::make_unique<ReprojectionResidual>(scene.camera, obs.pixel),
                           {kv->second, pv->second}, 1.0, huber, label);
    } else {
      problem.add_residual(
          std::make_unique<PointOnlyReprojection>(scene.camera, obs.pixel,
                                                  scene.keyframes.at(obs.keyframe).inverse()),
          {pv->second}, 1.0, huber, label);
    }
  }
  for (const BaAnchor& a : spec.anchors) {
    const auto kv = pose_vars.find(a.keyframe);
    if (kv == pose_vars.end()) continue;
    problem.add_residual(
        std::make_unique<OffsetCenterResidual>(a.relative.translation(), a.target), {kv->second},
        spec.anchor_weight, std::nullopt, "anchor(g" + std::to_string(a.geo_image.value) + ")");
  }
}

}  // namespace

BaOutcome optimize_ba(Scene& scene, const BaProblemSpec& spec, const SolverOptions& options) {
  if (spec.points.empty()) throw DataError("BA with an empty point set");
  BaState state;
  Problem problem;
  build(scene, spec, state, problem);

  BaOutcome out;
  out.residuals = problem.num_residuals();
  out.report = solve(problem, options);
  out.cost_before = out.report.initial_cost;
  out.cost_after = out.report.final_cost;

  for (const auto& [k, storage] : state.poses) {
    scene.keyframes[k] = SE3Manifold::unpack(storage.data()).inverse();
  }
  for (const auto& [p, storage] : state.points) {
    scene.map_points[p].position = Vector3(storage[0], storage[1], storage[2]);
  }
  const auto corr_index = correspondence_index(scene);
  for (const BaAnchor& a : spec.anchors) {
    GeoCorrespondence& c = scene.geo_correspondences[corr_index.at(a.geo_image)];
    c.map_pose = se3_to_sim3(scene.keyframes.at(a.keyframe) * a.relative);
  }
  spdlog::debug("ba: {} poses, {} points, {} residuals, cost {:.6g} -> {:.6g} ({} iterations, {})",
                spec.poses.size(), spec.points.size(), out.residuals, out.cost_before,
                out.cost_after, out.report.iterations, to_string(out.report.termination_reason));
  return out;
}

double ba_cost(const Scene& scene, const BaProblemSpec& spec) {
  BaState state;
  Problem problem;
  build(scene, spec, state, problem);
  return problem.cost();
}

}  // namespace geodrift
