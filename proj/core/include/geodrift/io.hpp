#pragma once

// File formats: scene JSON, keyframe streams as JSON lines, KITTI and TUM
// trajectories, schema-tagged CSV, and the per-event log. Every write goes
// to a temporary file in the target directory and is renamed into place.

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "geodrift/metrics.hpp"
#include "geodrift/pipeline.hpp"
#include "geodrift/scene.hpp"
#include "geodrift/stream.hpp"

namespace geodrift {

inline constexpr int kSceneFormatVersion = 1;
inline constexpr int kStreamFormatVersion = 1;
inline constexpr std::string_view kCsvHeader = "# geodrift-csv v1";

// Throws DataError when the file cannot be written or renamed.
void write_file_atomic(const std::filesystem::path& path, std::string_view content);
// Throws DataError when the file cannot be read.
std::string read_file(const std::filesystem::path& path);

// Scene files. Doubles are written with round-trip precision, so a save and
// load reproduces the scene bit for bit. Malformed input throws ParseError
// (syntax, with line and column) or DataError (structure, naming the field).
std::string scene_to_json(const Scene& scene);
Scene scene_from_json(std::string_view text, const std::string& source);
void save_scene(const std::filesystem::path& path, const Scene& scene);
Scene load_scene(const std::filesystem::path& path);

// Keyframe streams: a header line followed by one line per keyframe.
struct KeyframeStream {
  StreamHeader header;
  std::vector<KeyframeRecord> records;
};

std::string stream_header_to_json(const StreamHeader& header);
std::string keyframe_record_to_json(const KeyframeRecord& record);
std::string stream_to_jsonl(const KeyframeStream& stream);
// Errors name the offending line.
KeyframeStream stream_from_jsonl(std::string_view text, const std::string& source);
void save_stream(const std::filesystem::path& path, const KeyframeStream& stream);
KeyframeStream load_stream(const std::filesystem::path& path);

// Trajectories. Records are keyed by line index; TUM timestamps are kept.
enum class TrajectoryFormat { kKitti, kTum };

struct TrajectoryRecord {
  std::int64_t id = 0;
  std::optional<double> timestamp;
  SE3 pose;  // world-from-camera
};

using Trajectory = std::vector<TrajectoryRecord>;

// From a file name: ".tum" selects TUM, anything else KITTI.
TrajectoryFormat trajectory_format_for(const std::filesystem::path& path);
std::string trajectory_to_text(const Trajectory& trajectory, TrajectoryFormat format);
Trajectory trajectory_from_text(std::string_view text, TrajectoryFormat format,
                                const std::string& source);
void save_trajectory(const std::filesystem::path& path, const Trajectory& trajectory,
                     TrajectoryFormat format);
Trajectory load_trajectory(const std::filesystem::path& path, TrajectoryFormat format);

// Keyframe poses in id order; the TUM timestamp carries the keyframe id.
Trajectory trajectory_from_poses(const std::map<KeyframeId, SE3>& poses);
// Keyed by record id.
std::map<KeyframeId, SE3> poses_from_trajectory(const Trajectory& trajectory);

// Keyframe poses from a scene file (".json") or a trajectory file.
std::map<KeyframeId, SE3> load_poses(const std::filesystem::path& path);

// Schema-tagged CSV tables.
std::string ate_csv(const Ate2d& ate);
std::string scale_trace_csv(const std::vector<ScaleSample>& trace);

// One JSON object per correction event.
std::string event_to_json(const CorrectionEvent& event);

// Sets the spdlog level from GEODRIFT_LOG (trace, debug, info, warn, error,
// critical, off); defaults to warn. Throws DataError for an unknown level.
void configure_logging();

}  // namespace geodrift
