#include "geodrift/io.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <random>
#include <sstream>
#include <system_error>

#include <Eigen/SVD>
#include <json.hpp>
#include <spdlog/spdlog.h>

#include "geodrift/config.hpp"
#include "geodrift/errors.hpp"

namespace geodrift {

using nlohmann::json;

namespace {

// ---------------------------------------------------------------- reading

// Field access with error messages naming the location.
class Reader {
 public:
  Reader(const json& j, std::string where) : j_(j), where_(std::move(where)) {}

  const json& at(const char* key) const {
    if (!j_.is_object()) fail("expected an object");
    const auto it = j_.find(key);
    if (it == j_.end()) fail(std::string("missing field '") + key + "'");
    return *it;
  }
  bool has(const char* key) const { return j_.is_object() && j_.contains(key); }
  Reader child(const char* key) const { return Reader(at(key), where_ + "." + key); }
  Reader element(const json& e, std::size_t i) const {
    return Reader(e, where_ + "[" + std::to_string(i) + "]");
  }

  double real(const char* key) const { return as_real(at(key), std::string(key)); }
  std::int64_t integer(const char* key) const { return as_integer(at(key), std::string(key)); }
  bool boolean(const char* key) const {
    const json& v = at(key);
    if (!v.is_boolean()) fail(std::string("field '") + key + "' must be true or false");
    return v.get<bool>();
  }
  std::string string(const char* key) const {
    const json& v = at(key);
    if (!v.is_string()) fail(std::string("field '") + key + "' must be a string");
    return v.get<std::string>();
  }
  const json& array(const char* key) const {
    const json& v = at(key);
    if (!v.is_array()) fail(std::string("field '") + key + "' must be an array");
    return v;
  }

  double as_real(const json& v, const std::string& what) const {
    if (!v.is_number()) fail(what + " must be a number");
    const double d = v.get<double>();
    if (!std::isfinite(d)) fail(what + " must be finite");
    return d;
  }
  std::int64_t as_integer(const json& v, const std::string& what) const {
    if (!v.is_number_integer()) fail(what + " must be an integer");
    return v.get<std::int64_t>();
  }
  // Fixed-size numeric array.
  template <int N>
  Eigen::Matrix<double, N, 1> vec(const char* key) const {
    const json& v = at(key);
    if (!v.is_array() || v.size() != static_cast<std::size_t>(N)) {
      fail(std::string("field '") + key + "' must be an array of " + std::to_string(N) +
           " numbers");
    }
    Eigen::Matrix<double, N, 1> out;
    for (int i = 0; i < N; ++i) out[i] = as_real(v[static_cast<std::size_t>(i)], key);
    return out;
  }
  // Row of an array-of-arrays table.
  const json& row(const json& v, std::size_t i, std::size_t size) const {
    if (!v.is_array() || v.size() != size) {
      fail("entry " + std::to_string(i) + " must be an array of " + std::to_string(size) +
           " values");
    }
    return v;
  }

  [[noreturn]] void fail(const std::string& what) const { throw DataError(where_ + ": " + what); }
  const json& value() const { return j_; }

 private:
  const json& j_;
  std::string where_;
};

// Converts a parser failure to line and column within text.
[[noreturn]] void rethrow_parse(const json::parse_error& e, std::string_view text,
                                const std::string& source, std::size_t line_base) {
  const std::size_t byte = std::min<std::size_t>(e.byte == 0 ? 0 : e.byte - 1, text.size());
  std::size_t line = 1;
  std::size_t col = 1;
  for (std::size_t i = 0; i < byte; ++i) {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  std::string what = e.what();
  // Drop nlohmann's "[json.exception.parse_error.101] parse error at ..." prefix.
  if (const auto p = what.find(": syntax error"); p != std::string::npos) what = what.substr(p + 2);
  throw ParseError(source, line_base + line - 1, col, what);
}

json parse_json(std::string_view text, const std::string& source, std::size_t line_base = 1) {
  try {
    return json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    rethrow_parse(e, text, source, line_base);
  }
}

Rot3 read_rotation(const Reader& r, const char* key) {
  const Eigen::Matrix<double, 4, 1> q = r.vec<4>(key);
  try {
    return Rot3(Eigen::Quaterniond(q[0], q[1], q[2], q[3]));
  } catch (const GeometryError&) {
    r.fail(std::string("field '") + key + "' is not a valid quaternion");
  }
}

SE3 read_se3(const Reader& r) { return SE3(read_rotation(r, "q"), r.vec<3>("t")); }

Camera read_camera(const Reader& r) {
  Camera c;
  c.fx = r.real("fx");
  c.fy = r.real("fy");
  c.cx = r.real("cx");
  c.cy = r.real("cy");
  try {
    c.validate();
  } catch (const DataError& e) {
    r.fail(e.what());
  }
  return c;
}

WorldOrigin read_origin(const Reader& r) {
  WorldOrigin o;
  o.utm.zone = static_cast<int>(r.integer("zone"));
  o.utm.north = r.boolean("north");
  o.utm.easting = r.real("easting");
  o.utm.northing = r.real("northing");
  o.height = r.real("height");
  if (o.utm.zone < 1 || o.utm.zone > 60) r.fail("zone must be in 1..60");
  return o;
}

GeoAnchor read_anchor(const Reader& r, GeoImageId id) {
  GeoAnchor a;
  a.id = id;
  if (r.has("utm")) {
    const Reader u = r.child("utm");
    UtmCoordinate utm;
    utm.zone = static_cast<int>(u.integer("zone"));
    utm.north = u.boolean("north");
    utm.easting = u.real("easting");
    utm.northing = u.real("northing");
    if (utm.zone < 1 || utm.zone > 60) u.fail("zone must be in 1..60");
    a.utm = utm;
  }
  if (r.has("latlon")) {
    const Reader l = r.child("latlon");
    a.latlon = LatLon{l.real("latitude"), l.real("longitude")};
  }
  a.height = r.real("height");
  if (r.has("heading")) a.heading = r.real("heading");
  if (r.has("pitch")) a.pitch = r.real("pitch");
  if (r.has("roll")) a.roll = r.real("roll");
  try {
    a.normalize();
  } catch (const Error& e) {
    r.fail(e.what());
  }
  return a;
}

void check_version(const Reader& r, const char* format, int version) {
  if (r.string("format") != format) r.fail(std::string("format must be '") + format + "'");
  const std::int64_t v = r.integer("version");
  if (v != version) {
    r.fail("unsupported version " + std::to_string(v) + " (expected " + std::to_string(version) +
           ")");
  }
}

// ---------------------------------------------------------------- writing

json rotation_json(const Rot3& r) {
  const Eigen::Quaterniond& q = r.quaternion();
  return json::array({q.w(), q.x(), q.y(), q.z()});
}

json vec_json(const Vector3& v) { return json::array({v.x(), v.y(), v.z()}); }

json se3_json(const SE3& g) {
  json j = json::object();
  j["q"] = rotation_json(g.rotation());
  j["t"] = vec_json(g.translation());
  return j;
}

json camera_json(const Camera& c) {
  json j = json::object();
  j["fx"] = c.fx;
  j["fy"] = c.fy;
  j["cx"] = c.cx;
  j["cy"] = c.cy;
  return j;
}

json origin_json(const WorldOrigin& o) {
  json j = json::object();
  j["zone"] = o.utm.zone;
  j["north"] = o.utm.north;
  j["easting"] = o.utm.easting;
  j["northing"] = o.utm.northing;
  j["height"] = o.height;
  return j;
}

json anchor_json(const GeoAnchor& a) {
  json j = json::object();
  if (a.utm) {
    json u = json::object();
    u["zone"] = a.utm->zone;
    u["north"] = a.utm->north;
    u["easting"] = a.utm->easting;
    u["northing"] = a.utm->northing;
    j["utm"] = u;
  }
  if (a.latlon) {
    json l = json::object();
    l["latitude"] = a.latlon->latitude;
    l["longitude"] = a.latlon->longitude;
    j["latlon"] = l;
  }
  j["height"] = a.height;
  if (a.heading) j["heading"] = *a.heading;
  if (a.pitch) j["pitch"] = *a.pitch;
  if (a.roll) j["roll"] = *a.roll;
  return j;
}

// Top-level object with one array element per line, so that files diff well
// and parse errors point at a single record.
std::string dump_document(const std::vector<std::pair<std::string, json>>& fields) {
  std::string out = "{\n";
  for (std::size_t i = 0; i < fields.size(); ++i) {
    const auto& [key, value] = fields[i];
    out += "  " + json(key).dump() + ": ";
    if (value.is_array() && !value.empty()) {
      out += "[\n";
      for (std::size_t k = 0; k < value.size(); ++k) {
        out += "    " + value[k].dump();
        out += k + 1 < value.size() ? ",\n" : "\n";
      }
      out += "  ]";
    } else {
      out += value.dump();
    }
    out += i + 1 < fields.size() ? ",\n" : "\n";
  }
  out += "}\n";
  return out;
}

std::string csv_number(double v) { return format_double(v); }

}  // namespace

// ------------------------------------------------------------------ files

void write_file_atomic(const std::filesystem::path& path, std::string_view content) {
  namespace fs = std::filesystem;
  const fs::path dir = path.has_parent_path() ? path.parent_path() : fs::path(".");
  std::error_code ec;
  if (!dir.empty()) fs::create_directories(dir, ec);
  std::random_device rd;
  const fs::path tmp =
      dir / (path.filename().string() + ".tmp" + std::to_string(rd() % 1000000u));
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot write " + tmp.string());
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    out.flush();
    if (!out) {
      fs::remove(tmp, ec);
      throw DataError("cannot write " + tmp.string());
    }
  }
  fs::rename(tmp, path, ec);
  if (ec) {
    fs::remove(tmp, ec);
    throw DataError("cannot rename into " + path.string());
  }
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// ------------------------------------------------------------------ scene

std::string scene_to_json(const Scene& scene) {
  json keyframes = json::array();
  for (const auto& [id, pose] : scene.keyframes) {
    json k = se3_json(pose);
    k["id"] = id.value;
    keyframes.push_back(k);
  }
  json points = json::array();
  for (const auto& [id, p] : scene.map_points) {
    json j = json::object();
    j["id"] = id.value;
    j["p"] = vec_json(p.position);
    j["ref"] = p.reference.value;
    points.push_back(j);
  }
  json observations = json::array();
  for (const Observation& o : scene.observations) {
    observations.push_back(
        json::array({o.keyframe.value, o.point.value, o.pixel.x(), o.pixel.y()}));
  }
  json corr = json::array();
  for (const GeoCorrespondence& c : scene.geo_correspondences) {
    json j = json::object();
    j["geo_image"] = c.geo_image.value;
    j["keyframe"] = c.keyframe.value;
    json m = json::object();
    m["q"] = rotation_json(c.map_pose.rotation());
    m["t"] = vec_json(c.map_pose.translation());
    m["s"] = c.map_pose.scale();
    j["map_pose"] = m;
    j["world_pose"] = se3_json(c.world_pose);
    corr.push_back(j);
  }
  return dump_document({{"format", "geodrift-scene"},
                        {"version", kSceneFormatVersion},
                        {"camera", camera_json(scene.camera)},
                        {"initialized", scene.initialized},
                        {"keyframes", keyframes},
                        {"map_points", points},
                        {"observations", observations},
                        {"geo_correspondences", corr}});
}

Scene scene_from_json(std::string_view text, const std::string& source) {
  const json doc = parse_json(text, source);
  const Reader r(doc, source);
  check_version(r, "geodrift-scene", kSceneFormatVersion);
  Scene scene;
  scene.camera = read_camera(r.child("camera"));
  scene.initialized = r.boolean("initialized");

  const json& kfs = r.array("keyframes");
  for (std::size_t i = 0; i < kfs.size(); ++i) {
    const Reader k = Reader(kfs, source + ".keyframes").element(kfs[i], i);
    const KeyframeId id(k.integer("id"));
    if (!scene.keyframes.emplace(id, read_se3(k)).second) k.fail("duplicate keyframe id");
  }
  const json& pts = r.array("map_points");
  for (std::size_t i = 0; i < pts.size(); ++i) {
    const Reader p = Reader(pts, source + ".map_points").element(pts[i], i);
    const PointId id(p.integer("id"));
    MapPoint mp{p.vec<3>("p"), KeyframeId(p.integer("ref"))};
    if (!scene.map_points.emplace(id, mp).second) p.fail("duplicate map point id");
  }
  const json& obs = r.array("observations");
  scene.observations.reserve(obs.size());
  const Reader obs_reader(obs, source + ".observations");
  for (std::size_t i = 0; i < obs.size(); ++i) {
    const json& o = obs_reader.row(obs[i], i, 4);
    const Reader e = obs_reader.element(o, i);
    scene.observations.push_back(Observation{KeyframeId(e.as_integer(o[0], "keyframe")),
                                             PointId(e.as_integer(o[1], "point")),
                                             Vector2(e.as_real(o[2], "u"), e.as_real(o[3], "v"))});
  }
  const json& corr = r.array("geo_correspondences");
  for (std::size_t i = 0; i < corr.size(); ++i) {
    const Reader c = Reader(corr, source + ".geo_correspondences").element(corr[i], i);
    GeoCorrespondence gc;
    gc.geo_image = GeoImageId(c.integer("geo_image"));
    gc.keyframe = KeyframeId(c.integer("keyframe"));
    const Reader m = c.child("map_pose");
    const double s = m.real("s");
    if (!(s > 0.0)) m.fail("scale must be positive");
    gc.map_pose = Sim3(read_rotation(m, "q"), m.vec<3>("t"), s);
    gc.world_pose = read_se3(c.child("world_pose"));
    scene.geo_correspondences.push_back(gc);
  }
  try {
    scene.validate();
  } catch (const DataError& e) {
    throw DataError(source + ": " + e.what());
  }
  return scene;
}

void save_scene(const std::filesystem::path& path, const Scene& scene) {
  write_file_atomic(path, scene_to_json(scene));
}

Scene load_scene(const std::filesystem::path& path) {
  return scene_from_json(read_file(path), path.string());
}

// ----------------------------------------------------------------- stream

std::string stream_header_to_json(const StreamHeader& header) {
  json j = json::object();
  j["format"] = "geodrift-stream";
  j["version"] = kStreamFormatVersion;
  j["camera"] = camera_json(header.camera);
  j["origin"] = origin_json(header.origin);
  return j.dump();
}

std::string keyframe_record_to_json(const KeyframeRecord& record) {
  json j = json::object();
  j["keyframe"] = record.id.value;
  j["q"] = rotation_json(record.pose.rotation());
  j["t"] = vec_json(record.pose.translation());
  json pts = json::array();
  for (const auto& [id, x] : record.new_points) {
    pts.push_back(json::array({id.value, x.x(), x.y(), x.z()}));
  }
  j["new_points"] = pts;
  json obs = json::array();
  for (const auto& [id, px] : record.observations) {
    obs.push_back(json::array({id.value, px.x(), px.y()}));
  }
  j["observations"] = obs;
  if (record.geo) {
    const GeoObservation& g = *record.geo;
    json geo = json::object();
    geo["geo_image"] = g.matches.geo_image.value;
    geo["camera"] = camera_json(g.matches.camera);
    json m = json::array();
    for (const auto& [id, px] : g.matches.matches) {
      m.push_back(json::array({id.value, px.x(), px.y()}));
    }
    geo["matches"] = m;
    geo["anchor"] = anchor_json(g.anchor);
    j["geo"] = geo;
  }
  return j.dump();
}

std::string stream_to_jsonl(const KeyframeStream& stream) {
  std::string out = stream_header_to_json(stream.header) + "\n";
  for (const KeyframeRecord& r : stream.records) out += keyframe_record_to_json(r) + "\n";
  return out;
}

namespace {

KeyframeRecord read_record(const Reader& r) {
  KeyframeRecord rec;
  rec.id = KeyframeId(r.integer("keyframe"));
  rec.pose = SE3(read_rotation(r, "q"), r.vec<3>("t"));
  const json& pts = r.array("new_points");
  for (std::size_t i = 0; i < pts.size(); ++i) {
    const json& p = r.row(pts[i], i, 4);
    rec.new_points.emplace_back(
        PointId(r.as_integer(p[0], "point id")),
        Vector3(r.as_real(p[1], "x"), r.as_real(p[2], "y"), r.as_real(p[3], "z")));
  }
  const json& obs = r.array("observations");
  for (std::size_t i = 0; i < obs.size(); ++i) {
    const json& o = r.row(obs[i], i, 3);
    rec.observations.emplace_back(PointId(r.as_integer(o[0], "point id")),
                                  Vector2(r.as_real(o[1], "u"), r.as_real(o[2], "v")));
  }
  if (r.has("geo") && !r.at("geo").is_null()) {
    const Reader g = r.child("geo");
    GeoObservation geo;
    geo.matches.geo_image = GeoImageId(g.integer("geo_image"));
    geo.matches.camera = read_camera(g.child("camera"));
    const json& m = g.array("matches");
    for (std::size_t i = 0; i < m.size(); ++i) {
      const json& e = g.row(m[i], i, 3);
      geo.matches.matches.emplace_back(PointId(g.as_integer(e[0], "point id")),
                                       Vector2(g.as_real(e[1], "u"), g.as_real(e[2], "v")));
    }
    geo.anchor = read_anchor(g.child("anchor"), geo.matches.geo_image);
    rec.geo = std::move(geo);
  }
  return rec;
}

}  // namespace

KeyframeStream stream_from_jsonl(std::string_view text, const std::string& source) {
  KeyframeStream stream;
  bool have_header = false;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    const std::size_t eol = std::min(text.find('\n', pos), text.size());
    const std::string_view line = text.substr(pos, eol - pos);
    ++line_no;
    pos = eol + 1;
    if (line.find_first_not_of(" \t\r") == std::string_view::npos) continue;
    const json j = parse_json(line, source, line_no);
    const std::string where = source + ":" + std::to_string(line_no);
    const Reader r(j, where);
    if (!have_header) {
      check_version(r, "geodrift-stream", kStreamFormatVersion);
      stream.header.camera = read_camera(r.child("camera"));
      stream.header.origin = read_origin(r.child("origin"));
      have_header = true;
      continue;
    }
    stream.records.push_back(read_record(r));
  }
  if (!have_header) throw ParseError(source, std::max<std::size_t>(line_no, 1), 1, "missing stream header");
  return stream;
}

void save_stream(const std::filesystem::path& path, const KeyframeStream& stream) {
  write_file_atomic(path, stream_to_jsonl(stream));
}

KeyframeStream load_stream(const std::filesystem::path& path) {
  return stream_from_jsonl(read_file(path), path.string());
}

// ----------------------------------------------------------- trajectories

TrajectoryFormat trajectory_format_for(const std::filesystem::path& path) {
  return path.extension() == ".tum" ? TrajectoryFormat::kTum : TrajectoryFormat::kKitti;
}

std::string trajectory_to_text(const Trajectory& trajectory, TrajectoryFormat format) {
  std::string out;
  char buf[64];
  auto num = [&](double v) {
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return std::string(buf);
  };
  for (const TrajectoryRecord& r : trajectory) {
    const Vector3& t = r.pose.translation();
    if (format == TrajectoryFormat::kKitti) {
      const Matrix3 m = r.pose.rotation().matrix();
      for (int row = 0; row < 3; ++row) {
        for (int col = 0; col < 3; ++col) out += num(m(row, col)) + " ";
        out += num(t[row]);
        out += row < 2 ? " " : "\n";
      }
    } else {
      const Eigen::Quaterniond& q = r.pose.rotation().quaternion();
      out += num(r.timestamp.value_or(static_cast<double>(r.id))) + " " + num(t.x()) + " " +
             num(t.y()) + " " + num(t.z()) + " " + num(q.x()) + " " + num(q.y()) + " " +
             num(q.z()) + " " + num(q.w()) + "\n";
    }
  }
  return out;
}

Trajectory trajectory_from_text(std::string_view text, TrajectoryFormat format,
                                const std::string& source) {
  Trajectory out;
  const std::size_t expected = format == TrajectoryFormat::kKitti ? 12 : 8;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    const std::size_t eol = std::min(text.find('\n', pos), text.size());
    const std::string line(text.substr(pos, eol - pos));
    ++line_no;
    pos = eol + 1;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    std::vector<double> v;
    std::size_t col = 0;
    while (true) {
      col = line.find_first_not_of(" \t\r,", col);
      if (col == std::string::npos) break;
      const char* begin = line.c_str() + col;
      char* end = nullptr;
      const double d = std::strtod(begin, &end);
      if (end == begin || !std::isfinite(d)) {
        throw ParseError(source, line_no, col + 1, "expected a finite number");
      }
      v.push_back(d);
      col += static_cast<std::size_t>(end - begin);
    }
    if (v.size() != expected) {
      throw ParseError(source, line_no, 1,
                       "expected " + std::to_string(expected) + " values, got " +
                           std::to_string(v.size()));
    }
    TrajectoryRecord rec;
    rec.id = static_cast<std::int64_t>(out.size());
    try {
      if (format == TrajectoryFormat::kKitti) {
        Matrix3 m;
        m << v[0], v[1], v[2], v[4], v[5], v[6], v[8], v[9], v[10];
        // Project onto SO(3) so slightly non-orthonormal input is accepted.
        const Eigen::JacobiSVD<Matrix3> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
        Matrix3 r = svd.matrixU() * svd.matrixV().transpose();
        if (r.determinant() < 0.0) {
          throw ParseError(source, line_no, 1, "rotation block has negative determinant");
        }
        if ((r - m).norm() > 1e-3) {
          throw ParseError(source, line_no, 1, "rotation block is not orthonormal");
        }
        rec.pose = SE3(Rot3::from_matrix(r), Vector3(v[3], v[7], v[11]));
      } else {
        rec.timestamp = v[0];
        rec.pose = SE3(Rot3(Eigen::Quaterniond(v[7], v[4], v[5], v[6])),
                       Vector3(v[1], v[2], v[3]));
      }
    } catch (const GeometryError& e) {
      throw ParseError(source, line_no, 1, e.what());
    }
    out.push_back(rec);
  }
  return out;
}

void save_trajectory(const std::filesystem::path& path, const Trajectory& trajectory,
                     TrajectoryFormat format) {
  write_file_atomic(path, trajectory_to_text(trajectory, format));
}

Trajectory load_trajectory(const std::filesystem::path& path, TrajectoryFormat format) {
  return trajectory_from_text(read_file(path), format, path.string());
}

Trajectory trajectory_from_poses(const std::map<KeyframeId, SE3>& poses) {
  Trajectory out;
  out.reserve(poses.size());
  for (const auto& [id, pose] : poses) {
    out.push_back(TrajectoryRecord{static_cast<std::int64_t>(out.size()),
                                   static_cast<double>(id.value), pose});
  }
  return out;
}

std::map<KeyframeId, SE3> poses_from_trajectory(const Trajectory& trajectory) {
  std::map<KeyframeId, SE3> out;
  for (const TrajectoryRecord& r : trajectory) out[KeyframeId(r.id)] = r.pose;
  return out;
}

std::map<KeyframeId, SE3> load_poses(const std::filesystem::path& path) {
  if (path.extension() == ".json") return load_scene(path).keyframes;
  return poses_from_trajectory(load_trajectory(path, trajectory_format_for(path)));
}

// -------------------------------------------------------------------- csv

std::string ate_csv(const Ate2d& ate) {
  std::string out = std::string(kCsvHeader) + " ate2d\nkeyframe,error_m\n";
  for (const KeyframeError& e : ate.per_keyframe) {
    out += std::to_string(e.id.value) + "," + csv_number(e.error) + "\n";
  }
  return out;
}

std::string scale_trace_csv(const std::vector<ScaleSample>& trace) {
  std::string out = std::string(kCsvHeader) + " scale-factor\nkeyframe,raw,factor\n";
  for (const ScaleSample& s : trace) {
    out += std::to_string(s.id.value) + "," + csv_number(s.raw) + "," + csv_number(s.factor) + "\n";
  }
  return out;
}

// ----------------------------------------------------------------- events

std::string event_to_json(const CorrectionEvent& e) {
  auto stage_json = [](const StageReport& s) {
    json j = json::object();
    j["cost_before"] = s.cost_before;
    j["cost_after"] = s.cost_after;
    j["iterations"] = s.iterations;
    j["termination"] = s.termination;
    return j;
  };
  json j = json::object();
  j["event"] = to_string(e.type);
  j["keyframe"] = e.keyframe.value;
  if (e.geo_image) j["geo_image"] = e.geo_image->value;
  if (e.pnp_matches) j["pnp_matches"] = *e.pnp_matches;
  if (e.pnp_inliers) j["pnp_inliers"] = *e.pnp_inliers;
  if (e.geo_rejected) j["geo_rejected"] = true;
  j["correspondences"] = e.correspondences;
  if (e.init) j["init"] = stage_json(*e.init);
  if (e.init_inliers) j["init_inliers"] = *e.init_inliers;
  if (!e.window_keyframes.empty()) {
    json w = json::array();
    for (KeyframeId k : e.window_keyframes) w.push_back(k.value);
    j["window_keyframes"] = w;
  }
  if (!e.window_geo_images.empty()) {
    json w = json::array();
    for (GeoImageId g : e.window_geo_images) w.push_back(g.value);
    j["window_geo_images"] = w;
  }
  if (e.pgo) j["pgo"] = stage_json(*e.pgo);
  if (e.ba) j["ba"] = stage_json(*e.ba);
  if (!e.message.empty()) j["message"] = e.message;
  return j.dump();
}

// ---------------------------------------------------------------- logging

void configure_logging() {
  const char* env = std::getenv("GEODRIFT_LOG");
  if (env == nullptr || *env == '\0') {
    spdlog::set_level(spdlog::level::warn);
    return;
  }
  const auto level = spdlog::level::from_str(env);
  if (level == spdlog::level::off && std::string(env) != "off") {
    throw DataError(std::string("GEODRIFT_LOG: unknown level '") + env + "'");
  }
  spdlog::set_level(level);
}

}  // namespace geodrift
