#pragma once

// 7-DoF pose graph over keyframes and geo-tagged images with
//
//   E = l1 sum_C3 |e1|^2 + l2 sum_C4 |e2|^2 + l3 sum_C2 |e3|^2
//   e1 = log(dS_ij S_i S_j^-1),  dS_ij = S_j0 S_i0^-1  (fixed snapshot)
//   e2 = log(dS_kl S_k S_l^-1)   between keyframe k and geo image l
//   e3 = c(S_m) - y_m            camera center against the geo-tag position
//
// Relative edges act on the camera-from-world form S = P^-1 of the stored
// world-from-camera poses P, which makes E invariant under any similarity of
// the world frame when l3 = 0. The public API takes and returns P.

#include <array>
#include <cstdint>
#include <map>
#include <utility>
#include <vector>

#include "geodrift/manifold.hpp"
#include "geodrift/scene.hpp"
#include "geodrift/solver.hpp"

namespace geodrift {

struct PgoWeights {
  double keyframe_edge = 1e5;  // lambda_1
  double geo_edge = 1e5;       // lambda_2
  double anchor = 1.0;         // lambda_3
};

struct WindowOptions {
  int window_size = 3;             // correspondences in C2
  int covisibility_threshold = 15; // shared map points for a C3 pair
  bool full_history = false;       // C2 = every correspondence
};

struct GraphWindow {
  std::vector<KeyframeId> c1;                            // ascending
  std::vector<GeoImageId> c2;                            // by keyframe
  std::vector<std::pair<KeyframeId, KeyframeId>> c3;     // first < second
  std::vector<std::pair<KeyframeId, GeoImageId>> c4;
};

// C1 spans the keyframes from the oldest to the newest correspondence of C2,
// inclusive. Throws DataError with fewer than 2 correspondences (fewer than
// window_size is allowed only in full-history mode or before the window
// fills).
GraphWindow build_window(const Scene& scene, const ObservationIndex& index,
                         const WindowOptions& options);
GraphWindow build_window(const Scene& scene, const WindowOptions& options);

// Plain 4x4 form of a graph for independent evaluation. Node poses are
// world-from-camera matrices; edge snapshots relate camera-from-world forms.
struct DensePoseGraph {
  struct Edge {
    std::size_t from = 0;
    std::size_t to = 0;
    Matrix4 delta = Matrix4::Identity();
    double weight = 0.0;
  };
  struct Anchor {
    std::size_t node = 0;
    Vector3 target = Vector3::Zero();
    double weight = 0.0;
  };
  std::vector<Matrix4> nodes;
  std::vector<Edge> edges;
  std::vector<Anchor> anchors;
};

class PoseGraph {
 public:
  explicit PoseGraph(PgoWeights weights = {});

  // Poses are world-from-camera. Throws DataError on duplicate ids.
  void add_keyframe(KeyframeId id, const Sim3& pose);
  void add_geo_image(GeoImageId id, const Sim3& pose);

  // Edges snapshot dS from the current node values. Throws DataError when an
  // endpoint is missing.
  void add_keyframe_edge(KeyframeId i, KeyframeId j);
  void add_geo_edge(KeyframeId k, GeoImageId l);
  void add_anchor(GeoImageId m, const Vector3& world_position);

  // Holds a node constant during optimize.
  void set_fixed(KeyframeId id, bool fixed = true);

  Vector7 residual_e1(KeyframeId i, KeyframeId j) const;
  Vector7 residual_e2(KeyframeId k, GeoImageId l) const;
  Vector3 residual_e3(GeoImageId m) const;

  double cost() const;
  SolveReport optimize(const SolverOptions& options = {});

  Sim3 keyframe_pose(KeyframeId id) const;
  Sim3 geo_pose(GeoImageId id) const;
  void set_keyframe_pose(KeyframeId id, const Sim3& pose);
  void set_geo_pose(GeoImageId id, const Sim3& pose);

  std::vector<KeyframeId> keyframe_ids() const;
  std::vector<GeoImageId> geo_ids() const;
  const PgoWeights& weights() const { return weights_; }
  std::size_t num_keyframe_edges() const { return kf_edges_.size(); }
  std::size_t num_geo_edges() const { return geo_edges_.size(); }
  std::size_t num_anchors() const { return anchors_.size(); }

  DensePoseGraph to_dense() const;

  // Adds every edge and anchor as residual blocks over the node storage.
  // The graph must outlive the problem.
  void build_problem(Problem& problem);

 private:
  using Storage = std::array<double, Sim3Manifold::kAmbient>;

  struct Node {
    Storage camera_from_world;
    bool fixed = false;
  };
  struct Edge {
    // Keys into keyframes_ (and geo_ for geo edges).
    KeyframeId from;
    std::int64_t to;
    bool to_geo;
    Sim3 delta;
  };
  struct Anchor {
    GeoImageId node;
    Vector3 target;
  };

  const Node& keyframe_node(KeyframeId id) const;
  const Node& geo_node(GeoImageId id) const;
  Node& keyframe_node(KeyframeId id);
  Node& geo_node(GeoImageId id);
  const Node& edge_target(const Edge& e) const;
  Vector7 edge_residual(const Edge& e) const;

  PgoWeights weights_;
  std::map<KeyframeId, Node> keyframes_;
  std::map<GeoImageId, Node> geo_;
  std::vector<Edge> kf_edges_;
  std::vector<Edge> geo_edges_;
  std::vector<Anchor> anchors_;
};

struct PgoOutcome {
  SolveReport report;
  double cost_before = 0.0;
  double cost_after = 0.0;
  std::map<KeyframeId, Sim3> old_poses;  // world-from-camera, scale 1
  std::map<KeyframeId, Sim3> new_poses;  // world-from-camera, with scale
  std::size_t keyframe_edges = 0;
  std::size_t geo_edges = 0;
};

// Builds the graph for the window, optimizes, writes the corrected poses
// (scale dropped) back to the keyframes and geo-image map poses, and
// propagates the correction to map points. Throws DataError on an empty
// window or when the scene is not initialized.
PgoOutcome optimize_window(Scene& scene, const GraphWindow& window,
                           const PgoWeights& weights,
                           const SolverOptions& options = {});

// Moves each map point whose reference keyframe appears in both maps by
// new o old^-1. Throws DataError when a listed reference keyframe is missing
// from new_poses.
void propagate_to_map_points(Scene& scene,
                             const std::map<KeyframeId, Sim3>& old_poses,
                             const std::map<KeyframeId, Sim3>& new_poses);

}  // namespace geodrift
