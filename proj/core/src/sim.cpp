#include "geodrift/sim.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <set>

#include <unsupported/Eigen/MatrixFunctions>

#include "geodrift/errors.hpp"

namespace geodrift {

namespace {

constexpr double kPi = std::numbers::pi;

// Planar path made of straight and circular pieces, parameterized by arc
// length. Heading is clockwise from north; north is world -z.
class Path {
 public:
  Path(const Vector2& start, double heading) : start_(start), heading0_(heading) {}

  void straight(double length) { pieces_.push_back({length, 0.0}); }
  // Positive turn is clockwise (to the right).
  void arc(double radius, double turn) { pieces_.push_back({radius * std::abs(turn), turn / (radius * std::abs(turn))}); }

  double length() const {
    double l = 0.0;
    for (const Piece& p : pieces_) l += p.length;
    return l;
  }

  // (x, z) and heading at arc length s; clamps beyond the end.
  void sample(double s, Vector2& position, double& heading) const {
    Vector2 pos = start_;
    double h = heading0_;
    for (const Piece& p : pieces_) {
      const double ds = std::min(s, p.length);
      advance(pos, h, p.curvature, ds);
      s -= ds;
      if (s <= 0.0) break;
    }
    if (s > 0.0) advance(pos, h, 0.0, s);
    position = pos;
    heading = h;
  }

 private:
  struct Piece {
    double length;
    double curvature;  // dheading/ds
  };

  static Vector2 direction(double h) { return Vector2(std::sin(h), -std::cos(h)); }

  static void advance(Vector2& pos, double& h, double k, double ds) {
    if (std::abs(k) < 1e-12) {
      pos += ds * direction(h);
      return;
    }
    // Integral of direction(h + k s) over [0, ds].
    const double h1 = h + k * ds;
    pos += Vector2(-(std::cos(h1) - std::cos(h)) / k, -(std::sin(h1) - std::sin(h)) / k);
    h = h1;
  }

  Vector2 start_;
  double heading0_;
  std::vector<Piece> pieces_;
};

Path make_path(const ScenarioSpec& spec, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double total = spec.spacing * (spec.keyframes - 1);
  const double heading0 = 2.0 * kPi * unit(rng);
  Path path(Vector2::Zero(), heading0);
  switch (spec.shape) {
    case TrajectoryShape::kStraight:
      path.straight(total);
      break;
    case TrajectoryShape::kArc:
      path.arc(std::max(total, 1.0) / (kPi / 2.0), kPi / 2.0);
      break;
    case TrajectoryShape::kCityGrid: {
      constexpr double kCornerRadius = 10.0;
      while (path.length() < total) {
        path.straight(40.0 + 60.0 * unit(rng));
        path.arc(kCornerRadius, unit(rng) < 0.5 ? kPi / 2.0 : -kPi / 2.0);
      }
      break;
    }
  }
  return path;
}

SE3 camera_pose(const Vector2& xz, double heading) {
  return SE3(camera_rotation(heading, 0.0, 0.0), Vector3(xz.x(), 0.0, xz.y()));
}

bool visible(const ScenarioSpec& spec, const SE3& world_from_camera, const Vector3& x,
             Vector2* pixel) {
  const Vector3 pc = world_from_camera.inverse().act(x);
  if (pc.z() < 0.5 || pc.z() > spec.max_depth) return false;
  const Vector2 uv = spec.camera.project(pc);
  if (uv.x() < 0.0 || uv.y() < 0.0 || uv.x() >= spec.image_width || uv.y() >= spec.image_height) {
    return false;
  }
  if (pixel != nullptr) *pixel = uv;
  return true;
}

}  // namespace

const char* to_string(TrajectoryShape shape) {
  switch (shape) {
    case TrajectoryShape::kStraight:
      return "straight";
    case TrajectoryShape::kArc:
      return "arc";
    case TrajectoryShape::kCityGrid:
      return "city-grid";
  }
  return "unknown";
}

TrajectoryShape parse_trajectory_shape(std::string_view name) {
  if (name == "straight") return TrajectoryShape::kStraight;
  if (name == "arc") return TrajectoryShape::kArc;
  if (name == "city-grid") return TrajectoryShape::kCityGrid;
  throw DataError("unknown trajectory shape '" + std::string(name) + "'");
}

ScenarioSpec::ScenarioSpec() {
  // Latitude 36.72, longitude -4.42 (UTM 30N).
  origin.utm = UtmCoordinate{373188.4791476595, 4064751.4691444286, 30, true};
  origin.height = 51.5;
}

void ScenarioSpec::validate() const {
  auto fail = [](const std::string& what) { throw DataError("scenario: " + what); };
  if (keyframes < 2) fail("keyframes must be >= 2");
  if (!(spacing > 0.0) || !std::isfinite(spacing)) fail("spacing must be > 0");
  if (!(drift_factor > 0.0) || !std::isfinite(drift_factor)) fail("drift_factor must be > 0");
  if (!drift_multipliers.empty()) {
    if (drift_multipliers.size() != static_cast<std::size_t>(keyframes - 1)) {
      fail("drift_multipliers must have keyframes - 1 entries");
    }
    for (double m : drift_multipliers) {
      if (!(m > 0.0) || !std::isfinite(m)) fail("drift multipliers must be > 0");
    }
  }
  if (points_per_keyframe < 1) fail("points_per_keyframe must be >= 1");
  if (!(pixel_noise >= 0.0)) fail("pixel_noise must be >= 0");
  if (anchor_interval < 1) fail("anchor_interval must be >= 1");
  if (anchor_offset < 0) fail("anchor_offset must be >= 0");
  if (!(anchor_noise >= 0.0)) fail("anchor_noise must be >= 0");
  if (!(anchor_height_noise >= 0.0)) fail("anchor_height_noise must be >= 0");
  if (!(rotation_noise >= 0.0)) fail("rotation_noise must be >= 0");
  if (!(translation_noise >= 0.0)) fail("translation_noise must be >= 0");
  if (!(geo_outlier_ratio >= 0.0 && geo_outlier_ratio < 1.0)) {
    fail("geo_outlier_ratio must be in [0, 1)");
  }
  if (max_geo_matches < 4) fail("max_geo_matches must be >= 4");
  if (!(geo_lateral_offset >= 0.0)) fail("geo_lateral_offset must be >= 0");
  if (!(geo_heading_jitter >= 0.0)) fail("geo_heading_jitter must be >= 0");
  if (!(map_scale > 0.0) || !std::isfinite(map_scale)) fail("map_scale must be > 0");
  if (image_width < 1 || image_height < 1) fail("image size must be positive");
  if (!(camera_height >= 0.0)) fail("camera_height must be >= 0");
  if (!(max_depth > 10.0)) fail("max_depth must be > 10");
  if (max_track_length < 2) fail("max_track_length must be >= 2");
  camera.validate();
}

std::vector<double> ScenarioSpec::cumulative_scale() const {
  std::vector<double> m(static_cast<std::size_t>(keyframes), 1.0);
  const double step = std::pow(drift_factor, 1.0 / (keyframes - 1));
  for (int k = 1; k < keyframes; ++k) {
    const double mu = drift_multipliers.empty() ? step
                                                : drift_multipliers[static_cast<std::size_t>(k - 1)];
    m[static_cast<std::size_t>(k)] = m[static_cast<std::size_t>(k - 1)] * mu;
  }
  return m;
}

Scenario generate(const ScenarioSpec& spec) {
  spec.validate();
  std::mt19937_64 rng(spec.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> gauss(0.0, 1.0);

  Scenario out;
  out.spec = spec;
  out.header = StreamHeader{spec.camera, spec.origin};
  out.ground_truth.camera = spec.camera;
  out.drifted.camera = spec.camera;
  out.ground_truth.initialized = true;

  const std::size_t n = static_cast<std::size_t>(spec.keyframes);
  const Path path = make_path(spec, rng);
  std::vector<SE3> truth(n);
  std::vector<double> headings(n);
  for (std::size_t k = 0; k < n; ++k) {
    Vector2 xz;
    path.sample(spec.spacing * static_cast<double>(k), xz, headings[k]);
    truth[k] = camera_pose(xz, headings[k]);
  }

  // Tracker output: ground-truth relative motions with drifting scale.
  const std::vector<double> m = spec.cumulative_scale();
  std::vector<SE3> drifted(n);
  drifted[0] = SE3::identity();
  for (std::size_t k = 1; k < n; ++k) {
    const SE3 rel = truth[k - 1].inverse() * truth[k];
    Rot3 r = rel.rotation();
    Vector3 t = spec.map_scale * m[k] * rel.translation();
    if (spec.rotation_noise > 0.0) {
      r = Rot3::exp(spec.rotation_noise * Vector3(gauss(rng), gauss(rng), gauss(rng))) * r;
    }
    if (spec.translation_noise > 0.0) {
      t += spec.map_scale * spec.translation_noise * Vector3(gauss(rng), gauss(rng), gauss(rng));
    }
    drifted[k] = drifted[k - 1] * SE3(r, t);
  }
  for (std::size_t k = 0; k < n; ++k) {
    const KeyframeId id(static_cast<std::int64_t>(k));
    out.ground_truth.keyframes[id] = truth[k];
    out.drifted.keyframes[id] = drifted[k];
  }

  // Map points in a street corridor ahead of each keyframe.
  std::vector<std::vector<PointId>> created(n);
  std::int64_t next_point = 0;
  for (std::size_t r = 0; r < n; ++r) {
    const Matrix3 rot = truth[r].rotation().matrix();
    const Vector3 right = rot.col(0);
    const Vector3 forward = rot.col(2);
    int placed = 0;
    for (int attempt = 0; placed < spec.points_per_keyframe && attempt < 200 * spec.points_per_keyframe;
         ++attempt) {
      const double ahead = 8.0 + (spec.max_depth - 8.0) * unit(rng);
      const double side = (unit(rng) < 0.5 ? -1.0 : 1.0) * (5.0 + 25.0 * unit(rng));
      const double height = 10.0 * unit(rng) - spec.camera_height;
      Vector3 x = truth[r].translation() + ahead * forward + side * right;
      x.y() = height;
      if (!visible(spec, truth[r], x, nullptr)) continue;
      const PointId id(next_point++);
      out.ground_truth.map_points[id] = MapPoint{x, KeyframeId(static_cast<std::int64_t>(r))};
      created[r].push_back(id);
      ++placed;
    }
    if (placed == 0) throw DataError("scenario: no visible map point for keyframe " + std::to_string(r));
  }

  // Each point is tracked from its reference keyframe until it leaves the
  // view or the track reaches max_track_length keyframes.
  const auto reach = static_cast<std::size_t>(spec.max_track_length - 1);
  // The drifted point is placed consistently with the middle keyframe of
  // its observation span, as a tracker's local refinement would leave it.
  std::vector<std::vector<std::pair<PointId, Vector2>>> seen(n);
  for (std::size_t r = 0; r < n; ++r) {
    for (PointId p : created[r]) {
      const Vector3& x = out.ground_truth.map_points.at(p).position;
      std::vector<std::size_t> observers;
      for (std::size_t k = r; k < n && k <= r + reach; ++k) {
        Vector2 uv;
        if (!visible(spec, truth[k], x, &uv)) break;
        uv += spec.pixel_noise * Vector2(gauss(rng), gauss(rng));
        seen[k].emplace_back(p, uv);
        observers.push_back(k);
      }
      const std::size_t c = observers[observers.size() / 2];
      const Vector3 local = truth[c].inverse().act(x);
      out.drifted.map_points[p] = MapPoint{drifted[c].act(spec.map_scale * m[c] * local),
                                           KeyframeId(static_cast<std::int64_t>(r))};
    }
  }
  for (std::size_t k = 0; k < n; ++k) {
    std::sort(seen[k].begin(), seen[k].end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });
    for (const auto& [p, uv] : seen[k]) {
      const Observation obs{KeyframeId(static_cast<std::int64_t>(k)), p, uv};
      out.ground_truth.observations.push_back(obs);
      out.drifted.observations.push_back(obs);
    }
  }

  out.stream.resize(n);
  std::int64_t next_geo = 0;
  for (std::size_t k = 0; k < n; ++k) {
    KeyframeRecord& rec = out.stream[k];
    rec.id = KeyframeId(static_cast<std::int64_t>(k));
    rec.pose = drifted[k];
    for (PointId p : created[k]) rec.new_points.emplace_back(p, out.drifted.map_points.at(p).position);
    rec.observations = seen[k];

    const int ki = static_cast<int>(k);
    if (ki < spec.anchor_offset || (ki - spec.anchor_offset) % spec.anchor_interval != 0) continue;

    // Geo-tagged camera near the keyframe.
    const Matrix3 rot = truth[k].rotation().matrix();
    const double heading = headings[k] + spec.geo_heading_jitter * (2.0 * unit(rng) - 1.0);
    const Vector3 offset = spec.geo_lateral_offset *
                           ((2.0 * unit(rng) - 1.0) * Vector3(rot.col(0)) +
                            (2.0 * unit(rng) - 1.0) * Vector3(rot.col(2)));
    const SE3 geo_pose(camera_rotation(heading, 0.0, 0.0), truth[k].translation() + offset);

    std::vector<std::pair<PointId, Vector2>> candidates;
    for (const auto& [p, uv_kf] : seen[k]) {
      Vector2 uv;
      if (visible(spec, geo_pose, out.ground_truth.map_points.at(p).position, &uv)) {
        candidates.emplace_back(p, uv);
      }
    }
    std::shuffle(candidates.begin(), candidates.end(), rng);
    if (candidates.size() > static_cast<std::size_t>(spec.max_geo_matches)) {
      candidates.resize(static_cast<std::size_t>(spec.max_geo_matches));
    }
    std::sort(candidates.begin(), candidates.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });
    if (candidates.size() < 4) continue;

    const GeoImageId gid(next_geo++);
    GeoObservation geo;
    geo.matches.geo_image = gid;
    geo.matches.camera = spec.camera;
    std::vector<bool> outlier(candidates.size(), false);
    for (std::size_t i = 0; i < candidates.size(); ++i) {
      Vector2 uv = candidates[i].second + spec.pixel_noise * Vector2(gauss(rng), gauss(rng));
      if (unit(rng) < spec.geo_outlier_ratio) {
        uv = Vector2(spec.image_width * unit(rng), spec.image_height * unit(rng));
        outlier[i] = true;
      }
      geo.matches.matches.emplace_back(candidates[i].first, uv);
    }

    const Vector3 tagged =
        geo_pose.translation() + Vector3(spec.anchor_noise * gauss(rng), spec.anchor_height_noise * gauss(rng),
                                         spec.anchor_noise * gauss(rng));
    double height = 0.0;
    geo.anchor.id = gid;
    geo.anchor.utm = world_to_utm(tagged, spec.origin, &height);
    geo.anchor.height = height;
    const CameraAngles angles = camera_angles(geo_pose.rotation());
    geo.anchor.heading = angles.heading;
    geo.anchor.pitch = angles.pitch;
    geo.anchor.roll = angles.roll;
    rec.geo = geo;

    out.true_geo_poses[gid] = geo_pose;
    out.geo_outliers[gid] = outlier;
    out.ground_truth.geo_correspondences.push_back(
        GeoCorrespondence{gid, rec.id, se3_to_sim3(geo_pose), geo_pose});
  }
  return out;
}

std::map<KeyframeId, SE3> ground_truth_poses(const Scenario& scenario) {
  return scenario.ground_truth.keyframes;
}

ScenarioSpec canned_scenario(std::string_view name, std::uint64_t seed) {
  ScenarioSpec spec;
  spec.seed = seed;
  if (name == "city-grid") return spec;
  if (name == "demo") {
    spec.keyframes = 80;
    spec.drift_factor = 1.6;
    return spec;
  }
  if (name == "straight") {
    spec.shape = TrajectoryShape::kStraight;
    spec.keyframes = 100;
    spec.drift_factor = 1.5;
    return spec;
  }
  if (name == "arc") {
    spec.shape = TrajectoryShape::kArc;
    spec.keyframes = 100;
    spec.drift_factor = 1.5;
    return spec;
  }
  if (name == "zero-drift") {
    spec.keyframes = 100;
    spec.drift_factor = 1.0;
    spec.pixel_noise = 0.0;
    spec.anchor_noise = 0.0;
    spec.anchor_height_noise = 0.0;
    spec.geo_outlier_ratio = 0.0;
    return spec;
  }
  throw DataError("unknown scenario '" + std::string(name) + "'");
}

std::vector<std::string> canned_scenario_names() {
  return {"city-grid", "demo", "straight", "arc", "zero-drift"};
}

double oracle_cost_pgo(const DensePoseGraph& graph) {
  double total = 0.0;
  for (const DensePoseGraph::Edge& e : graph.edges) {
    const Matrix4 err = e.delta * graph.nodes.at(e.from).inverse() * graph.nodes.at(e.to);
    const Matrix4 l = err.log();
    const double sigma = l.topLeftCorner<3, 3>().trace() / 3.0;
    const Vector3 omega(0.5 * (l(2, 1) - l(1, 2)), 0.5 * (l(0, 2) - l(2, 0)),
                        0.5 * (l(1, 0) - l(0, 1)));
    const Vector3 nu = l.block<3, 1>(0, 3);
    total += e.weight * (omega.squaredNorm() + sigma * sigma + nu.squaredNorm());
  }
  for (const DensePoseGraph::Anchor& a : graph.anchors) {
    const Vector3 c = graph.nodes.at(a.node).block<3, 1>(0, 3);
    total += a.weight * (c - a.target).squaredNorm();
  }
  return total;
}

double oracle_cost_ba(const Scene& scene, const BaProblemSpec& spec) {
  const std::set<KeyframeId> variable_poses(spec.poses.begin(), spec.poses.end());
  const std::set<PointId> variable_points(spec.points.begin(), spec.points.end());
  const double d = spec.huber_delta;
  double total = 0.0;
  for (std::size_t i : spec.observations) {
    const Observation& obs = scene.observations.at(i);
    if (!variable_points.contains(obs.point)) continue;
    const Matrix4 camera_from_world = scene.keyframes.at(obs.keyframe).matrix().inverse();
    const Eigen::Vector4d xh = scene.map_points.at(obs.point).position.homogeneous();
    const Eigen::Vector4d pc = camera_from_world * xh;
    if (!(pc(2) > 1e-9)) return std::numeric_limits<double>::infinity();
    const double u = scene.camera.fx * pc(0) / pc(2) + scene.camera.cx;
    const double v = scene.camera.fy * pc(1) / pc(2) + scene.camera.cy;
    const double s = (obs.pixel.x() - u) * (obs.pixel.x() - u) + (obs.pixel.y() - v) * (obs.pixel.y() - v);
    total += s <= d * d ? s : 2.0 * d * std::sqrt(s) - d * d;
  }
  for (const BaAnchor& a : spec.anchors) {
    if (!variable_poses.contains(a.keyframe)) continue;
    const Matrix4 geo = scene.keyframes.at(a.keyframe).matrix() * a.relative.matrix();
    total += spec.anchor_weight * (geo.block<3, 1>(0, 3) - a.target).squaredNorm();
  }
  return total;
}

}  // namespace geodrift
