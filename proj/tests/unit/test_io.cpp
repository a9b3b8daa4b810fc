#include <filesystem>
#include <fstream>

#include <gtest/gtest.h>

#include "geodrift/config.hpp"
#include "geodrift/errors.hpp"
#include "geodrift/io.hpp"
#include "geodrift/sim.hpp"

namespace geodrift {
namespace {

namespace fs = std::filesystem;

class TempDir {
 public:
  TempDir() {
    path_ = fs::temp_directory_path() /
            ("geodrift_io_" + std::to_string(::testing::UnitTest::GetInstance()->random_seed()) + "_" +
             ::testing::UnitTest::GetInstance()->current_test_info()->name());
    fs::remove_all(path_);
    fs::create_directories(path_);
  }
  ~TempDir() { fs::remove_all(path_); }
  const fs::path& path() const { return path_; }

 private:
  fs::path path_;
};

void expect_same_pose(const SE3& a, const SE3& b) {
  EXPECT_EQ(a.translation(), b.translation());
  EXPECT_EQ(a.rotation().quaternion().coeffs(), b.rotation().quaternion().coeffs());
}

// An initialized scene with scaled geo-image map poses and awkward doubles.
Scene sample_scene() {
  ScenarioSpec spec = canned_scenario("demo", 3);
  spec.keyframes = 25;
  Scene scene = generate(spec).ground_truth;
  scene.geo_correspondences.front().map_pose =
      Sim3(Rot3::exp(Vector3(0.1, 0.2, 0.3)), Vector3(1.0 / 3.0, -2e-17, 1e12), 0.7);
  scene.map_points.begin()->second.position.x() = 0.1 + 0.2;
  return scene;
}

TEST(SceneIoTest, RoundTripIsBitExact) {
  const Scene scene = sample_scene();
  const Scene back = scene_from_json(scene_to_json(scene), "memory");
  EXPECT_EQ(back.initialized, scene.initialized);
  EXPECT_EQ(back.camera.fx, scene.camera.fx);
  ASSERT_EQ(back.keyframes.size(), scene.keyframes.size());
  for (const auto& [id, pose] : scene.keyframes) expect_same_pose(back.keyframes.at(id), pose);
  ASSERT_EQ(back.map_points.size(), scene.map_points.size());
  for (const auto& [id, p] : scene.map_points) {
    EXPECT_EQ(back.map_points.at(id).position, p.position);
    EXPECT_EQ(back.map_points.at(id).reference, p.reference);
  }
  ASSERT_EQ(back.observations.size(), scene.observations.size());
  for (std::size_t i = 0; i < scene.observations.size(); ++i) {
    EXPECT_EQ(back.observations[i].pixel, scene.observations[i].pixel);
    EXPECT_EQ(back.observations[i].point, scene.observations[i].point);
  }
  ASSERT_EQ(back.geo_correspondences.size(), scene.geo_correspondences.size());
  const GeoCorrespondence& g = back.geo_correspondences.front();
  EXPECT_EQ(g.map_pose.scale(), 0.7);
  EXPECT_EQ(g.map_pose.translation(), scene.geo_correspondences.front().map_pose.translation());
  EXPECT_EQ(scene_to_json(back), scene_to_json(scene));
}

TEST(SceneIoTest, SaveAndLoadThroughFile) {
  TempDir dir;
  const Scene scene = sample_scene();
  save_scene(dir.path() / "scene.json", scene);
  EXPECT_EQ(scene_to_json(load_scene(dir.path() / "scene.json")), scene_to_json(scene));
  // No temporary file is left behind.
  std::size_t files = 0;
  for (const auto& e : fs::directory_iterator(dir.path())) {
    (void)e;
    ++files;
  }
  EXPECT_EQ(files, 1u);
}

TEST(SceneIoTest, TruncatedFileReportsLine) {
  const std::string text = scene_to_json(sample_scene());
  const std::string truncated = text.substr(0, text.size() / 2);
  const std::size_t lines = static_cast<std::size_t>(std::count(truncated.begin(), truncated.end(), '\n'));
  try {
    scene_from_json(truncated, "scene.json");
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_GE(e.line(), lines);
    EXPECT_NE(std::string(e.what()).find("scene.json:"), std::string::npos);
  }
}

TEST(SceneIoTest, StructuralErrorsNameTheField) {
  EXPECT_THROW(scene_from_json("{}", "s"), DataError);
  EXPECT_THROW(scene_from_json(R"({"format":"other","version":1})", "s"), DataError);
  std::string text = scene_to_json(sample_scene());
  const std::size_t at = text.find("\"version\": 1");
  ASSERT_NE(at, std::string::npos);
  text.replace(at, 12, "\"version\": 99");
  try {
    scene_from_json(text, "s");
    FAIL() << "expected DataError";
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find("version"), std::string::npos);
  }
  EXPECT_THROW(load_scene("/nonexistent/scene.json"), DataError);
}

TEST(StreamIoTest, RoundTrip) {
  ScenarioSpec spec = canned_scenario("demo", 4);
  spec.keyframes = 25;
  const Scenario s = generate(spec);
  const KeyframeStream stream{s.header, s.stream};
  const std::string text = stream_to_jsonl(stream);
  const KeyframeStream back = stream_from_jsonl(text, "stream.jsonl");
  ASSERT_EQ(back.records.size(), stream.records.size());
  EXPECT_EQ(back.header.origin.utm.zone, s.header.origin.utm.zone);
  EXPECT_EQ(back.header.origin.utm.easting, s.header.origin.utm.easting);
  for (std::size_t k = 0; k < stream.records.size(); ++k) {
    const KeyframeRecord& a = stream.records[k];
    const KeyframeRecord& b = back.records[k];
    EXPECT_EQ(a.id, b.id);
    expect_same_pose(a.pose, b.pose);
    EXPECT_EQ(a.new_points, b.new_points);
    EXPECT_EQ(a.observations, b.observations);
    ASSERT_EQ(a.geo.has_value(), b.geo.has_value());
    if (a.geo) {
      EXPECT_EQ(a.geo->matches.matches, b.geo->matches.matches);
      EXPECT_EQ(a.geo->anchor.utm->easting, b.geo->anchor.utm->easting);
      EXPECT_EQ(a.geo->anchor.heading, b.geo->anchor.heading);
    }
  }
  // Loading fills in the lat/lon of UTM anchors; from then on text is stable.
  const std::string normalized = stream_to_jsonl(back);
  EXPECT_EQ(stream_to_jsonl(stream_from_jsonl(normalized, "again")), normalized);
}

TEST(StreamIoTest, BadLineIsNamed) {
  ScenarioSpec spec = canned_scenario("demo", 4);
  spec.keyframes = 5;
  const Scenario s = generate(spec);
  std::string text = stream_to_jsonl(KeyframeStream{s.header, s.stream});
  // Cut the last record in half: line 6 (header is line 1).
  text.resize(text.size() - 40);
  try {
    stream_from_jsonl(text, "stream.jsonl");
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 6u);
  }
  EXPECT_THROW(stream_from_jsonl("", "empty"), DataError);
}

TEST(StreamIoTest, LatLonAnchorsAreAccepted) {
  const std::string text =
      R"({"format":"geodrift-stream","version":1,"camera":{"fx":500,"fy":500,"cx":320,"cy":240},)"
      R"("origin":{"zone":30,"north":true,"easting":373000,"northing":4064000,"height":0}})"
      "\n"
      R"({"keyframe":0,"q":[1,0,0,0],"t":[0,0,0],"new_points":[],"observations":[],)"
      R"("geo":{"geo_image":0,"camera":{"fx":500,"fy":500,"cx":320,"cy":240},"matches":[],)"
      R"("anchor":{"latlon":{"latitude":36.7213,"longitude":-4.4214},"height":2,"heading":0.5}}})"
      "\n";
  const KeyframeStream s = stream_from_jsonl(text, "x");
  ASSERT_TRUE(s.records[0].geo.has_value());
  const GeoAnchor& a = s.records[0].geo->anchor;
  ASSERT_TRUE(a.utm.has_value());
  EXPECT_NEAR(a.utm->easting, 373065.586, 1e-3);
}

TEST(TrajectoryIoTest, KittiAndTumRoundTrip) {
  std::map<KeyframeId, SE3> poses;
  for (int k = 0; k < 10; ++k) {
    poses[KeyframeId(3 * k)] = SE3(Rot3::exp(Vector3(0.1 * k, -0.05 * k, 0.3)), Vector3(k / 3.0, 1e-9 * k, -7.0 * k));
  }
  const Trajectory t = trajectory_from_poses(poses);
  const Trajectory tum = trajectory_from_text(trajectory_to_text(t, TrajectoryFormat::kTum),
                                              TrajectoryFormat::kTum, "t.tum");
  ASSERT_EQ(tum.size(), t.size());
  for (std::size_t i = 0; i < t.size(); ++i) {
    EXPECT_EQ(*tum[i].timestamp, *t[i].timestamp);
    EXPECT_EQ(tum[i].pose.translation(), t[i].pose.translation());
    EXPECT_LT((tum[i].pose.rotation().matrix() - t[i].pose.rotation().matrix()).norm(), 1e-15);
  }
  const Trajectory kitti = trajectory_from_text(trajectory_to_text(t, TrajectoryFormat::kKitti),
                                                TrajectoryFormat::kKitti, "t.txt");
  ASSERT_EQ(kitti.size(), t.size());
  for (std::size_t i = 0; i < t.size(); ++i) {
    EXPECT_EQ(kitti[i].id, static_cast<std::int64_t>(i));
    EXPECT_EQ(kitti[i].pose.translation(), t[i].pose.translation());
    EXPECT_LT((kitti[i].pose.rotation().matrix() - t[i].pose.rotation().matrix()).norm(), 1e-14);
  }
  EXPECT_EQ(trajectory_format_for("a/b.tum"), TrajectoryFormat::kTum);
  EXPECT_EQ(trajectory_format_for("a/b.txt"), TrajectoryFormat::kKitti);
}

TEST(TrajectoryIoTest, MalformedLinesAreRejected) {
  EXPECT_THROW(trajectory_from_text("1 0 0 0 0 1 0 0 0 0 1\n", TrajectoryFormat::kKitti, "k"), ParseError);
  EXPECT_THROW(trajectory_from_text("2 0 0 0 0 2 0 0 0 0 2 0\n", TrajectoryFormat::kKitti, "k"), DataError);
  try {
    trajectory_from_text("1 0 0 0 0 1 0 0 0 0 1 0\n1 0 0 x 0 1 0 0 0 0 1 0\n", TrajectoryFormat::kKitti, "k");
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 2u);
  }
  EXPECT_THROW(trajectory_from_text("0 1 2 3 0 0 0\n", TrajectoryFormat::kTum, "t"), ParseError);
}

TEST(TrajectoryIoTest, LoadPosesFromSceneOrTrajectory) {
  TempDir dir;
  const Scene scene = sample_scene();
  save_scene(dir.path() / "scene.json", scene);
  const auto from_scene = load_poses(dir.path() / "scene.json");
  EXPECT_EQ(from_scene.size(), scene.keyframes.size());
  save_trajectory(dir.path() / "t.txt", trajectory_from_poses(scene.keyframes), TrajectoryFormat::kKitti);
  const auto from_kitti = load_poses(dir.path() / "t.txt");
  ASSERT_EQ(from_kitti.size(), scene.keyframes.size());
  EXPECT_EQ(from_kitti.begin()->second.translation(), scene.keyframes.begin()->second.translation());
}

TEST(CsvTest, SchemaTaggedTables) {
  Ate2d ate;
  ate.per_keyframe = {{KeyframeId(0), 1.5}, {KeyframeId(1), 0.25}};
  const std::string csv = ate_csv(ate);
  EXPECT_EQ(csv.rfind(std::string(kCsvHeader), 0), 0u);
  EXPECT_NE(csv.find("0,1.5"), std::string::npos);
  const std::string trace = scale_trace_csv({{KeyframeId(4), 1.25, 1.0}});
  EXPECT_EQ(trace.rfind(std::string(kCsvHeader), 0), 0u);
  EXPECT_NE(trace.find("4,1.25,1"), std::string::npos);
}

TEST(KeyValueTest, ParsesCommentsAndPositions) {
  const KeyValueFile f = parse_key_values("# comment\n\n  window_size = 5  # trailing\nenable_ba=false\n", "c.cfg");
  ASSERT_EQ(f.entries.size(), 2u);
  EXPECT_EQ(f.entries.at("window_size").value, "5");
  EXPECT_EQ(f.entries.at("window_size").line, 3u);
  EXPECT_EQ(f.entries.at("enable_ba").value, "false");
}

TEST(KeyValueTest, ErrorsCarryLineAndColumn) {
  try {
    parse_key_values("a = 1\nno equals sign\n", "c.cfg");
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 2u);
  }
  EXPECT_THROW(parse_key_values("a = 1\na = 2\n", "c.cfg"), ParseError);
  try {
    pipeline_config_from(parse_key_values("window_size = 3\nwindow_sise = 4\n", "c.cfg"));
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 2u);
    EXPECT_NE(std::string(e.what()).find("window_sise"), std::string::npos);
  }
  try {
    pipeline_config_from(parse_key_values("window_size = three\n", "c.cfg"));
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 1u);
    EXPECT_EQ(e.column(), 15u);
  }
  // Parses, but fails validation.
  EXPECT_THROW(pipeline_config_from(parse_key_values("window_size = 1\n", "c.cfg")), DataError);
}

TEST(ConfigTest, PipelineConfigRoundTrip) {
  PipelineConfig c;
  c.window.window_size = 5;
  c.weights.keyframe_edge = 1.0 / 3.0;
  c.ba.fixed_observers = true;
  c.solver.max_iterations = 7;
  c.ransac.seed = 12345678901234ULL;
  const PipelineConfig back = pipeline_config_from(parse_key_values(to_config_text(c), "x"));
  EXPECT_EQ(to_config_text(back), to_config_text(c));
  EXPECT_EQ(back.weights.keyframe_edge, 1.0 / 3.0);
  EXPECT_EQ(back.ransac.seed, 12345678901234ULL);
  EXPECT_TRUE(back.ba.fixed_observers);
  // Every key appears in the text.
  const std::string text = to_config_text(PipelineConfig{});
  for (const auto& key : pipeline_config_keys()) {
    EXPECT_NE(text.find(key.name + " = "), std::string::npos) << key.name;
    EXPECT_FALSE(key.description.empty()) << key.name;
  }
}

TEST(ConfigTest, ScenarioSpecRoundTrip) {
  ScenarioSpec s = canned_scenario("arc", 9);
  s.drift_multipliers.assign(static_cast<std::size_t>(s.keyframes - 1), 1.01);
  s.drift_multipliers[3] = 0.1 + 0.2;
  const ScenarioSpec back = scenario_spec_from(parse_key_values(to_config_text(s), "x"));
  EXPECT_EQ(to_config_text(back), to_config_text(s));
  EXPECT_EQ(back.shape, TrajectoryShape::kArc);
  EXPECT_EQ(back.drift_multipliers, s.drift_multipliers);
  EXPECT_EQ(back.seed, 9u);
}

TEST(ConfigTest, FormatDoubleIsShortestRoundTrip) {
  EXPECT_EQ(format_double(0.5), "0.5");
  EXPECT_EQ(format_double(1e5), "1e+05");
  EXPECT_EQ(std::stod(format_double(0.1 + 0.2)), 0.1 + 0.2);
}

}  // namespace
}  // namespace geodrift
