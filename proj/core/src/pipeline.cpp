#include "geodrift/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include <spdlog/spdlog.h>

#include "geodrift/errors.hpp"

namespace geodrift {

namespace {

StageReport stage(const SolveReport& r, double before, double after) {
  return StageReport{before, after, r.iterations, to_string(r.termination_reason)};
}

}  // namespace

void PipelineConfig::validate() const {
  auto fail = [](const std::string& what) { throw DataError("config: " + what); };
  if (init_index < 2) fail("init_index must be >= 2");
  if (window.window_size < 2) fail("window_size must be >= 2");
  if (window.covisibility_threshold < 1) fail("covisibility_threshold must be >= 1");
  if (!(weights.keyframe_edge >= 0.0) || !(weights.geo_edge >= 0.0) || !(weights.anchor >= 0.0)) {
    fail("pose graph weights must be >= 0");
  }
  if (!(ba.anchor_weight >= 0.0)) fail("ba_anchor_weight must be >= 0");
  if (!(ba.huber_delta > 0.0)) fail("ba_huber_delta must be > 0");
  if (ransac.iterations < 1) fail("ransac_iterations must be >= 1");
  if (!(ransac.threshold > 0.0)) fail("ransac_threshold must be > 0");
  if (!(pnp.inlier_threshold > 0.0)) fail("pnp_inlier_threshold must be > 0");
  if (!(pnp.min_inlier_ratio >= 0.0 && pnp.min_inlier_ratio <= 1.0)) {
    fail("pnp_min_inlier_ratio must be in [0, 1]");
  }
  if (pnp.robust_rounds < 0) fail("pnp_robust_rounds must be >= 0");
  if (solver.max_iterations < 0) fail("solver_max_iterations must be >= 0");
  if (tail_keyframes < 1) fail("tail_keyframes must be >= 1");
}

const char* to_string(EventType type) {
  switch (type) {
    case EventType::kNone:
      return "none";
    case EventType::kLocalized:
      return "localized";
    case EventType::kInitialized:
      return "initialized";
    case EventType::kCorrected:
      return "corrected";
  }
  return "unknown";
}

Pipeline::Pipeline(const StreamHeader& header, const PipelineConfig& config)
    : Pipeline(header, config, Scene{}) {}

Pipeline::Pipeline(const StreamHeader& header, const PipelineConfig& config, Scene initial)
    : header_(header), config_(config), scene_(std::move(initial)) {
  config_.validate();
  header_.camera.validate();
  scene_.camera = header_.camera;
  scene_.validate();
  raw_poses_ = scene_.keyframes;
}

CorrectionEvent Pipeline::ingest_keyframe(const KeyframeRecord& record) {
  if (!scene_.keyframes.empty() && !(scene_.keyframes.rbegin()->first < record.id)) {
    throw DataError("keyframe " + std::to_string(record.id.value) +
                    " is not newer than keyframe " +
                    std::to_string(scene_.keyframes.rbegin()->first.value));
  }
  for (const auto& [pid, x] : record.new_points) {
    if (scene_.map_points.contains(pid)) {
      throw DataError("keyframe " + std::to_string(record.id.value) + " re-creates map point " +
                      std::to_string(pid.value));
    }
    if (!x.allFinite()) throw DataError("map point " + std::to_string(pid.value) + " is not finite");
  }
  if (!record.pose.translation().allFinite()) {
    throw DataError("keyframe " + std::to_string(record.id.value) + " pose is not finite");
  }

  raw_poses_[record.id] = record.pose;
  scene_.keyframes[record.id] = transform_pose(tail_, record.pose);
  for (const auto& [pid, x] : record.new_points) {
    scene_.map_points[pid] = MapPoint{act(tail_, x), record.id};
  }
  for (const auto& [pid, pixel] : record.observations) {
    if (!scene_.map_points.contains(pid)) {
      throw DataError("keyframe " + std::to_string(record.id.value) +
                      " observes unknown map point " + std::to_string(pid.value));
    }
    scene_.observations.push_back(Observation{record.id, pid, pixel});
  }

  CorrectionEvent event;
  event.keyframe = record.id;
  event.correspondences = scene_.geo_correspondences.size();
  if (!record.geo) return event;

  const GeoObservation& geo = *record.geo;
  event.geo_image = geo.matches.geo_image;
  event.pnp_matches = geo.matches.matches.size();
  PnpResult pnp;
  try {
    pnp = localize_geo_image(scene_, geo.matches, scene_.keyframes.at(record.id), config_.pnp);
  } catch (const GeometryError& e) {
    event.geo_rejected = true;
    event.message = e.what();
    spdlog::info("keyframe {}: geo image {} rejected: {}", record.id.value,
                 geo.matches.geo_image.value, e.what());
    return event;
  }
  event.pnp_inliers = pnp.inlier_count;
  if (!pnp.success) {
    event.geo_rejected = true;
    event.message = "inlier ratio " + std::to_string(pnp.inlier_ratio) + " below threshold";
    spdlog::info("keyframe {}: geo image {} rejected ({} of {} inliers)", record.id.value,
                 geo.matches.geo_image.value, pnp.inlier_count, geo.matches.matches.size());
    return event;
  }

  scene_.geo_correspondences.push_back(make_geo_correspondence(
      geo.matches.geo_image, record.id, pnp.pose, geo.anchor, header_.origin));
  event.correspondences = scene_.geo_correspondences.size();
  event.type = EventType::kLocalized;

  const auto count = static_cast<int>(scene_.geo_correspondences.size());
  if (!scene_.initialized) {
    if (count >= config_.init_index) initialize(event);
    return event;
  }
  if (config_.enable_pgo || config_.enable_ba) correct(event);
  return event;
}

void Pipeline::initialize(CorrectionEvent& event) {
  try {
    const Rot3 plane = ground_plane_rotation(scene_);
    const PlanarFit fit = fit_planar_similarity(scene_.geo_correspondences, plane, config_.ransac,
                                                config_.init_height_offset, config_.solver);
    const Sim3 transform = initialization_transform(plane, fit.params);
    scene_ = apply_initialization(std::move(scene_), plane, fit.params);
    tail_ = transform * tail_;
    event.type = EventType::kInitialized;
    event.init = stage(fit.refinement, fit.minimal_cost, fit.cost);
    event.init_inliers =
        static_cast<std::size_t>(std::count(fit.inliers.begin(), fit.inliers.end(), true));
    spdlog::info("keyframe {}: initialized from {} correspondences (s = {:.4f})",
                 event.keyframe.value, scene_.geo_correspondences.size(), fit.params.s);
  } catch (const GeometryError& e) {
    event.message = std::string("initialization deferred: ") + e.what();
    spdlog::warn("keyframe {}: {}", event.keyframe.value, event.message);
  }
}

void Pipeline::correct(CorrectionEvent& event) {
  const ObservationIndex index(scene_);
  const GraphWindow window = build_window(scene_, index, config_.window);
  event.window_keyframes = window.c1;
  event.window_geo_images = window.c2;
  event.type = EventType::kCorrected;
  if (config_.enable_pgo) {
    const PgoOutcome pgo = optimize_window(scene_, window, config_.weights, config_.solver);
    event.pgo = stage(pgo.report, pgo.cost_before, pgo.cost_after);
  }
  if (config_.enable_ba) {
    try {
      const ObservationIndex moved(scene_);
      const BaProblemSpec spec = make_ba_spec(scene_, moved, window, config_.ba);
      const BaOutcome ba = optimize_ba(scene_, spec, config_.solver);
      event.ba = stage(ba.report, ba.cost_before, ba.cost_after);
    } catch (const SolverError& e) {
      event.message = std::string("bundle adjustment skipped: ") + e.what();
      spdlog::warn("keyframe {}: {}", event.keyframe.value, event.message);
    }
  }
  refit_tail();
}

void Pipeline::refit_tail() {
  // Rotation and position from the newest keyframe, scale from the path
  // length over the newest steps.
  const auto newest = scene_.keyframes.rbegin();
  const SE3& corrected = newest->second;
  const SE3& raw = raw_poses_.at(newest->first);
  double len_corrected = 0.0;
  double len_raw = 0.0;
  auto it = scene_.keyframes.rbegin();
  for (int k = 0; k < config_.tail_keyframes; ++k) {
    auto prev = std::next(it);
    if (prev == scene_.keyframes.rend()) break;
    len_corrected += (it->second.translation() - prev->second.translation()).norm();
    len_raw += (raw_poses_.at(it->first).translation() - raw_poses_.at(prev->first).translation())
                   .norm();
    it = prev;
  }
  const double s = len_raw > 0.0 && len_corrected > 0.0 ? len_corrected / len_raw : tail_.scale();
  const Rot3 r = corrected.rotation() * raw.rotation().inverse();
  const Vector3 t = corrected.translation() - s * r.act(raw.translation());
  tail_ = Sim3(r, t, s);
}

std::vector<CorrectionEvent> run_pipeline(Pipeline& pipeline,
                                          const std::vector<KeyframeRecord>& stream) {
  std::vector<CorrectionEvent> events;
  events.reserve(stream.size());
  for (const KeyframeRecord& rec : stream) events.push_back(pipeline.ingest_keyframe(rec));
  return events;
}

}  // namespace geodrift
