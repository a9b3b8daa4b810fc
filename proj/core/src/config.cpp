#include "geodrift/config.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <system_error>

#include "geodrift/errors.hpp"

namespace geodrift {

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

double parse_double(const std::string& s) {
  double v = 0.0;
  const char* end = s.data() + s.size();
  const auto [ptr, ec] = std::from_chars(s.data(), end, v);
  if (ec != std::errc() || ptr != end) throw std::invalid_argument("expected a number, got '" + s + "'");
  return v;
}

template <class Int>
Int parse_int(const std::string& s) {
  Int v = 0;
  const char* end = s.data() + s.size();
  const auto [ptr, ec] = std::from_chars(s.data(), end, v);
  if (ec != std::errc() || ptr != end) throw std::invalid_argument("expected an integer, got '" + s + "'");
  return v;
}

bool parse_bool(const std::string& s) {
  if (s == "true" || s == "1" || s == "yes" || s == "on") return true;
  if (s == "false" || s == "0" || s == "no" || s == "off") return false;
  throw std::invalid_argument("expected true or false, got '" + s + "'");
}

std::string format_bool(bool b) { return b ? "true" : "false"; }

template <class Config, class Getter>
ConfigKey<Config> real_at(std::string name, std::string description, Getter field) {
  return {std::move(name), std::move(description),
          [field](const Config& c) { return format_double(field(c)); },
          [field](Config& c, const std::string& v) { field(c) = parse_double(v); }};
}

template <class Config, class Int, class Getter>
ConfigKey<Config> integer_at(std::string name, std::string description, Getter field) {
  return {std::move(name), std::move(description),
          [field](const Config& c) { return std::to_string(field(c)); },
          [field](Config& c, const std::string& v) { field(c) = parse_int<Int>(v); }};
}

template <class Config, class Getter>
ConfigKey<Config> boolean_at(std::string name, std::string description, Getter field) {
  return {std::move(name), std::move(description),
          [field](const Config& c) { return format_bool(field(c)); },
          [field](Config& c, const std::string& v) { field(c) = parse_bool(v); }};
}

template <class Config>
Config apply(const KeyValueFile& file, Config config, const std::vector<ConfigKey<Config>>& keys) {
  for (const auto& [name, entry] : file.entries) {
    const auto it = std::find_if(keys.begin(), keys.end(),
                                 [&](const ConfigKey<Config>& k) { return k.name == name; });
    if (it == keys.end()) {
      throw ParseError(file.source, entry.line, 1, "unknown key '" + name + "'");
    }
    try {
      it->set(config, entry.value);
    } catch (const std::invalid_argument& e) {
      throw ParseError(file.source, entry.line, entry.column, name + ": " + e.what());
    }
  }
  config.validate();
  return config;
}

template <class Config>
std::string to_text(const Config& config, const std::vector<ConfigKey<Config>>& keys) {
  std::ostringstream out;
  for (const auto& k : keys) {
    out << "# " << k.description << "\n" << k.name << " = " << k.get(config) << "\n";
  }
  return out.str();
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

std::string format_double(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

KeyValueFile parse_key_values(std::string_view text, const std::string& source) {
  KeyValueFile file;
  file.source = source;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const std::size_t eol = std::min(text.find('\n', pos), text.size());
    const std::string_view raw = text.substr(pos, eol - pos);
    ++line_no;
    pos = eol + 1;
    std::string_view line = raw.substr(0, raw.find('#'));
    if (trim(line).empty()) {
      if (eol == text.size()) break;
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      const auto col = raw.find_first_not_of(" \t") + 1;
      throw ParseError(source, line_no, col, "expected 'key = value'");
    }
    const std::string key(trim(line.substr(0, eq)));
    const std::string_view value_part = line.substr(eq + 1);
    const std::string value(trim(value_part));
    if (key.empty()) throw ParseError(source, line_no, 1, "missing key before '='");
    if (value.empty()) throw ParseError(source, line_no, eq + 2, "missing value for '" + key + "'");
    const std::size_t column = eq + 2 + value_part.find_first_not_of(" \t");
    if (file.entries.contains(key)) {
      throw ParseError(source, line_no, 1,
                       "duplicate key '" + key + "' (first on line " +
                           std::to_string(file.entries.at(key).line) + ")");
    }
    file.entries[key] = ConfigEntry{value, line_no, column};
    if (eol == text.size()) break;
  }
  return file;
}

KeyValueFile read_key_values(const std::filesystem::path& path) {
  return parse_key_values(read_text(path), path.string());
}

const std::vector<ConfigKey<PipelineConfig>>& pipeline_config_keys() {
  using C = PipelineConfig;
  static const std::vector<ConfigKey<C>> keys = {
      integer_at<C, int>("init_index",
                         "Correspondences collected before the one-time initialization (i).",
                         [](auto& c) -> auto& { return c.init_index; }),
      integer_at<C, int>("window_size", "Newest correspondences forming the optimization window.",
                         [](auto& c) -> auto& { return c.window.window_size; }),
      integer_at<C, int>("covisibility_threshold",
                         "Shared map points for a keyframe pair to get a relative-pose edge.",
                         [](auto& c) -> auto& { return c.window.covisibility_threshold; }),
      boolean_at<C>("full_history_window", "Use every correspondence instead of the newest window.",
                    [](auto& c) -> auto& { return c.window.full_history; }),
      real_at<C>("pgo_keyframe_weight", "Pose-graph weight of keyframe-keyframe edges (lambda1).",
                 [](auto& c) -> auto& { return c.weights.keyframe_edge; }),
      real_at<C>("pgo_geo_weight", "Pose-graph weight of keyframe-geo-image edges (lambda2).",
                 [](auto& c) -> auto& { return c.weights.geo_edge; }),
      real_at<C>("pgo_anchor_weight", "Pose-graph weight of geo-tag position anchors (lambda3).",
                 [](auto& c) -> auto& { return c.weights.anchor; }),
      real_at<C>("ba_anchor_weight",
                 "Bundle-adjustment weight of geo-tag position penalties (lambda).",
                 [](auto& c) -> auto& { return c.ba.anchor_weight; }),
      real_at<C>("ba_huber_delta", "Huber threshold on the reprojection error norm, px.",
                 [](auto& c) -> auto& { return c.ba.huber_delta; }),
      boolean_at<C>("ba_full_history_anchors",
                    "Penalize every correspondence whose keyframe is in the window.",
                    [](auto& c) -> auto& { return c.ba.full_history_anchors; }),
      boolean_at<C>("ba_fixed_observers",
                    "Also use observations by keyframes outside the window, held fixed.",
                    [](auto& c) -> auto& { return c.ba.fixed_observers; }),
      integer_at<C, int>("ransac_iterations", "Initialization RANSAC iterations.",
                         [](auto& c) -> auto& { return c.ransac.iterations; }),
      real_at<C>("ransac_threshold", "Initialization RANSAC inlier threshold, m.",
                 [](auto& c) -> auto& { return c.ransac.threshold; }),
      integer_at<C, std::uint64_t>("ransac_seed", "Initialization RANSAC random seed.",
                                   [](auto& c) -> auto& { return c.ransac.seed; }),
      real_at<C>("init_height_offset",
                 "Constant vertical offset of the initialization transform, m.",
                 [](auto& c) -> auto& { return c.init_height_offset; }),
      real_at<C>("pnp_inlier_threshold", "Geo-image localization inlier threshold, px^2.",
                 [](auto& c) -> auto& { return c.pnp.inlier_threshold; }),
      real_at<C>("pnp_min_inlier_ratio",
                 "Minimum inlier ratio for a geo-image localization to be accepted.",
                 [](auto& c) -> auto& { return c.pnp.min_inlier_ratio; }),
      integer_at<C, int>("pnp_robust_rounds",
                         "Huber rounds with inlier reclassification before the final solve.",
                         [](auto& c) -> auto& { return c.pnp.robust_rounds; }),
      boolean_at<C>("enable_pgo", "Run pose-graph optimization in each correction round.",
                    [](auto& c) -> auto& { return c.enable_pgo; }),
      boolean_at<C>("enable_ba", "Run bundle adjustment in each correction round.",
                    [](auto& c) -> auto& { return c.enable_ba; }),
      integer_at<C, int>("tail_keyframes",
                         "Newest steps used to refit the tracker-to-map correction.",
                         [](auto& c) -> auto& { return c.tail_keyframes; }),
      real_at<C>("solver_initial_damping", "Levenberg-Marquardt initial damping.",
                 [](auto& c) -> auto& { return c.solver.initial_damping; }),
      real_at<C>("solver_damping_decrease", "Damping divisor after an accepted step.",
                 [](auto& c) -> auto& { return c.solver.damping_decrease; }),
      real_at<C>("solver_damping_increase", "Damping multiplier after a rejected step.",
                 [](auto& c) -> auto& { return c.solver.damping_increase; }),
      real_at<C>("solver_min_damping", "Lower damping bound.",
                 [](auto& c) -> auto& { return c.solver.min_damping; }),
      real_at<C>("solver_max_damping", "Upper damping bound; exceeding it stops the solve.",
                 [](auto& c) -> auto& { return c.solver.max_damping; }),
      real_at<C>("solver_gradient_tolerance", "Stop when the gradient inf-norm falls below this.",
                 [](auto& c) -> auto& { return c.solver.gradient_tolerance; }),
      real_at<C>("solver_cost_tolerance", "Stop when the relative cost decrease falls below this.",
                 [](auto& c) -> auto& { return c.solver.cost_tolerance; }),
      integer_at<C, int>("solver_max_iterations", "Maximum Levenberg-Marquardt iterations.",
                         [](auto& c) -> auto& { return c.solver.max_iterations; }),
      integer_at<C, int>("solver_dense_threshold",
                         "Tangent dimension below which normal equations are solved densely.",
                         [](auto& c) -> auto& { return c.solver.dense_threshold; }),
      boolean_at<C>("solver_analytic_jacobians",
                    "Use analytic Jacobians instead of central differences.",
                    [](auto& c) -> auto& { return c.solver.use_analytic_jacobians; }),
      real_at<C>("solver_numeric_step", "Central-difference step in tangent coordinates.",
                 [](auto& c) -> auto& { return c.solver.numeric_step; }),
  };
  return keys;
}

const std::vector<ConfigKey<ScenarioSpec>>& scenario_config_keys() {
  using S = ScenarioSpec;
  static const std::vector<ConfigKey<S>> keys = [] {
    std::vector<ConfigKey<S>> k;
    k.push_back({"shape", "Trajectory shape: straight, arc or city-grid.",
                 [](const S& s) { return std::string(to_string(s.shape)); },
                 [](S& s, const std::string& v) {
                   try {
                     s.shape = parse_trajectory_shape(v);
                   } catch (const DataError& e) {
                     throw std::invalid_argument(e.what());
                   }
                 }});
    k.push_back(integer_at<S, int>("keyframes", "Number of keyframes.",
                                   [](auto& s) -> auto& { return s.keyframes; }));
    k.push_back(real_at<S>("spacing", "Distance between consecutive keyframes, m.",
                           [](auto& s) -> auto& { return s.spacing; }));
    k.push_back(real_at<S>("drift_factor",
                           "Scale of the last step relative to the first (exponential ramp).",
                           [](auto& s) -> auto& { return s.drift_factor; }));
    k.push_back({"drift_multipliers",
                 "Explicit comma-separated per-step multipliers overriding the ramp; 'none' for "
                 "the ramp.",
                 [](const S& s) {
                   if (s.drift_multipliers.empty()) return std::string("none");
                   std::string out;
                   for (std::size_t i = 0; i < s.drift_multipliers.size(); ++i) {
                     if (i > 0) out += ",";
                     out += format_double(s.drift_multipliers[i]);
                   }
                   return out;
                 },
                 [](S& s, const std::string& v) {
                   s.drift_multipliers.clear();
                   if (v == "none") return;
                   std::size_t start = 0;
                   while (start <= v.size()) {
                     const std::size_t comma = std::min(v.find(',', start), v.size());
                     s.drift_multipliers.push_back(
                         parse_double(std::string(trim(std::string_view(v).substr(start, comma - start)))));
                     start = comma + 1;
                   }
                 }});
    k.push_back(integer_at<S, int>("points_per_keyframe", "New map points per keyframe.",
                                   [](auto& s) -> auto& { return s.points_per_keyframe; }));
    k.push_back(real_at<S>("pixel_noise", "Keypoint noise per axis, px.",
                           [](auto& s) -> auto& { return s.pixel_noise; }));
    k.push_back(integer_at<S, int>("anchor_interval", "Keyframes between geo-tagged images.",
                                   [](auto& s) -> auto& { return s.anchor_interval; }));
    k.push_back(integer_at<S, int>("anchor_offset", "Keyframe of the first geo-tagged image.",
                                   [](auto& s) -> auto& { return s.anchor_offset; }));
    k.push_back(real_at<S>("anchor_noise", "Geo-tag position noise per horizontal axis, m.",
                           [](auto& s) -> auto& { return s.anchor_noise; }));
    k.push_back(real_at<S>("anchor_height_noise", "Geo-tag height noise, m.",
                           [](auto& s) -> auto& { return s.anchor_height_noise; }));
    k.push_back(real_at<S>("rotation_noise", "Odometry rotation noise per step, rad.",
                           [](auto& s) -> auto& { return s.rotation_noise; }));
    k.push_back(real_at<S>("translation_noise", "Odometry translation noise per step, m.",
                           [](auto& s) -> auto& { return s.translation_noise; }));
    k.push_back(real_at<S>("geo_outlier_ratio", "Fraction of wrong geo-image matches.",
                           [](auto& s) -> auto& { return s.geo_outlier_ratio; }));
    k.push_back(integer_at<S, int>("max_geo_matches", "Matches per geo-tagged image.",
                                   [](auto& s) -> auto& { return s.max_geo_matches; }));
    k.push_back(real_at<S>("geo_lateral_offset", "Bound of the geo camera's lateral offset, m.",
                           [](auto& s) -> auto& { return s.geo_lateral_offset; }));
    k.push_back(real_at<S>("geo_heading_jitter", "Bound of the geo camera's heading jitter, rad.",
                           [](auto& s) -> auto& { return s.geo_heading_jitter; }));
    k.push_back(real_at<S>("map_scale", "Scale of the tracker map at the start.",
                           [](auto& s) -> auto& { return s.map_scale; }));
    k.push_back(real_at<S>("camera_fx", "Focal length x, px.",
                           [](auto& s) -> auto& { return s.camera.fx; }));
    k.push_back(real_at<S>("camera_fy", "Focal length y, px.",
                           [](auto& s) -> auto& { return s.camera.fy; }));
    k.push_back(real_at<S>("camera_cx", "Principal point x, px.",
                           [](auto& s) -> auto& { return s.camera.cx; }));
    k.push_back(real_at<S>("camera_cy", "Principal point y, px.",
                           [](auto& s) -> auto& { return s.camera.cy; }));
    k.push_back(integer_at<S, int>("image_width", "Image width, px.",
                                   [](auto& s) -> auto& { return s.image_width; }));
    k.push_back(integer_at<S, int>("image_height", "Image height, px.",
                                   [](auto& s) -> auto& { return s.image_height; }));
    k.push_back(real_at<S>("camera_height", "Camera height above the ground, m.",
                           [](auto& s) -> auto& { return s.camera_height; }));
    k.push_back(real_at<S>("max_depth", "Visibility depth bound, m.",
                           [](auto& s) -> auto& { return s.max_depth; }));
    k.push_back(integer_at<S, int>("max_track_length", "Keyframes observing one map point.",
                                   [](auto& s) -> auto& { return s.max_track_length; }));
    k.push_back(integer_at<S, int>("origin_zone", "UTM zone of the world origin.",
                                   [](auto& s) -> auto& { return s.origin.utm.zone; }));
    k.push_back(boolean_at<S>("origin_north", "World origin in the northern hemisphere.",
                              [](auto& s) -> auto& { return s.origin.utm.north; }));
    k.push_back(real_at<S>("origin_easting", "UTM easting of the world origin, m.",
                           [](auto& s) -> auto& { return s.origin.utm.easting; }));
    k.push_back(real_at<S>("origin_northing", "UTM northing of the world origin, m.",
                           [](auto& s) -> auto& { return s.origin.utm.northing; }));
    k.push_back(real_at<S>("origin_height", "Height of the world origin, m.",
                           [](auto& s) -> auto& { return s.origin.height; }));
    k.push_back(integer_at<S, std::uint64_t>("seed", "Random seed.",
                                             [](auto& s) -> auto& { return s.seed; }));
    return k;
  }();
  return keys;
}

PipelineConfig pipeline_config_from(const KeyValueFile& file, PipelineConfig base) {
  return apply(file, std::move(base), pipeline_config_keys());
}

ScenarioSpec scenario_spec_from(const KeyValueFile& file, ScenarioSpec base) {
  return apply(file, std::move(base), scenario_config_keys());
}

PipelineConfig load_pipeline_config(const std::filesystem::path& path) {
  return pipeline_config_from(read_key_values(path));
}

ScenarioSpec load_scenario_spec(const std::filesystem::path& path) {
  return scenario_spec_from(read_key_values(path));
}

std::string to_config_text(const PipelineConfig& config) {
  return to_text(config, pipeline_config_keys());
}

std::string to_config_text(const ScenarioSpec& spec) {
  return to_text(spec, scenario_config_keys());
}

}  // namespace geodrift
