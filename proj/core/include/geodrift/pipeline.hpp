#pragma once

// Incremental driver: per keyframe, localize an attached geo-tagged image;
// initialize once the init_index-th correspondence exists; afterwards run
// PGO then BA on the window of the newest correspondences for every new
// correspondence.
//
// Keyframes arrive as the tracker reports them, in the tracker's own map
// frame. A real tracker keeps following the corrected map; this is emulated
// by mapping each incoming pose and new map point through a tail
// correction, the similarity between the tracker frame and the corrected
// frame at the newest keyframes, refitted after every correction.

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "geodrift/ba.hpp"
#include "geodrift/init.hpp"
#include "geodrift/pgo.hpp"
#include "geodrift/pnp.hpp"
#include "geodrift/scene.hpp"
#include "geodrift/stream.hpp"

namespace geodrift {

struct PipelineConfig {
  int init_index = 4;  // correspondences before initialization
  WindowOptions window;
  PgoWeights weights;
  SolverOptions solver;
  RansacOptions ransac;
  BaOptions ba;
  PnpOptions pnp;
  double init_height_offset = 0.0;
  bool enable_pgo = true;
  bool enable_ba = true;
  // Keyframes used to refit the tail correction.
  int tail_keyframes = 5;

  // Throws DataError naming the first invalid field.
  void validate() const;
};

enum class EventType { kNone, kLocalized, kInitialized, kCorrected };

const char* to_string(EventType type);

struct StageReport {
  double cost_before = 0.0;
  double cost_after = 0.0;
  int iterations = 0;
  std::string termination;
};

struct CorrectionEvent {
  EventType type = EventType::kNone;
  KeyframeId keyframe;
  std::optional<GeoImageId> geo_image;
  // Geo localization, when a geo-tagged image arrived.
  std::optional<std::size_t> pnp_inliers;
  std::optional<std::size_t> pnp_matches;
  bool geo_rejected = false;
  std::size_t correspondences = 0;
  // Initialization.
  std::optional<StageReport> init;
  std::optional<std::size_t> init_inliers;
  // Correction round.
  std::vector<KeyframeId> window_keyframes;
  std::vector<GeoImageId> window_geo_images;
  std::optional<StageReport> pgo;
  std::optional<StageReport> ba;
  std::string message;
};

class Pipeline {
 public:
  // Throws DataError on an invalid config or camera.
  Pipeline(const StreamHeader& header, const PipelineConfig& config);
  // Continues from an existing scene; the tail correction starts at the
  // identity.
  Pipeline(const StreamHeader& header, const PipelineConfig& config, Scene initial);

  // Throws DataError for a keyframe id not above every existing id, an
  // observation of an unknown point, or a duplicate point id. PnP failure is
  // reported in the event, not thrown.
  CorrectionEvent ingest_keyframe(const KeyframeRecord& record);

  const Scene& scene() const { return scene_; }
  const StreamHeader& header() const { return header_; }
  const PipelineConfig& config() const { return config_; }
  const Sim3& tail_correction() const { return tail_; }
  // Tracker-frame poses as received, keyed by keyframe id.
  const std::map<KeyframeId, SE3>& raw_poses() const { return raw_poses_; }

 private:
  void initialize(CorrectionEvent& event);
  void correct(CorrectionEvent& event);
  void refit_tail();

  StreamHeader header_;
  PipelineConfig config_;
  Scene scene_;
  Sim3 tail_;
  std::map<KeyframeId, SE3> raw_poses_;
};

// Runs the whole stream and returns the events in order.
std::vector<CorrectionEvent> run_pipeline(Pipeline& pipeline,
                                          const std::vector<KeyframeRecord>& stream);

}  // namespace geodrift
