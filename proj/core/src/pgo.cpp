#include "geodrift/pgo.hpp"

#include <algorithm>
#include <string>

#include <spdlog/spdlog.h>

#include "geodrift/errors.hpp"

namespace geodrift {

namespace {

// e = log(delta S_a S_b^-1) on camera-from-world nodes.
class RelativeEdge final : public ResidualFunction {
 public:
  explicit RelativeEdge(const Sim3& delta) : delta_(delta) {}

  int residual_size() const override { return 7; }

  bool evaluate(std::span<const double* const> p, double* r) const override {
    const Sim3 e = delta_ * Sim3Manifold::unpack(p[0]) * inverse(Sim3Manifold::unpack(p[1]));
    try {
      Eigen::Map<Vector7> out(r);
      out = log_sim3(e).vector();
    } catch (const GeometryError&) {
      return false;
    }
    return true;
  }

  bool analytic_jacobians(std::span<const double* const> p,
                          std::span<Eigen::MatrixXd> jac) const override {
    const Sim3 e = delta_ * Sim3Manifold::unpack(p[0]) * inverse(Sim3Manifold::unpack(p[1]));
    Vector7 xi;
    try {
      xi = log_sim3(e).vector();
    } catch (const GeometryError&) {
      return false;
    }
    const Matrix7 jinv = sim3_left_jacobian_inverse(xi);
    // delta exp(d) S_a S_b^-1 = exp(Ad_delta d) E and
    // delta S_a (exp(d) S_b)^-1 = E exp(-d) = exp(-Ad_E d) E.
    jac[0] = jinv * sim3_adjoint(delta_);
    jac[1] = -jinv * sim3_adjoint(e);
    return true;
  }

 private:
  Sim3 delta_;
};

// Camera center of a camera-from-world node minus the geo-tag position.
class AnchorEdge final : public ResidualFunction {
 public:
  explicit AnchorEdge(const Vector3& target) : target_(target) {}

  int residual_size() const override { return 3; }

  bool evaluate(std::span<const double* const> p, double* r) const override {
    Eigen::Map<Vector3> out(r);
    out = inverse(Sim3Manifold::unpack(p[0])).translation() - target_;
    return true;
  }

  bool analytic_jacobians(std::span<const double* const> p,
                          std::span<Eigen::MatrixXd> jac) const override {
    const Sim3 s = Sim3Manifold::unpack(p[0]);
    // c(exp(d) S) = S^-1 exp(-d) 0 ~ c - (1/s) R' nu.
    jac[0].setZero();
    jac[0].block<3, 3>(0, 4) = -s.rotation().matrix().transpose() / s.scale();
    return true;
  }

 private:
  Vector3 target_;
};

Sim3 node_pose(const std::array<double, Sim3Manifold::kAmbient>& storage) {
  return inverse(Sim3Manifold::unpack(storage.data()));
}

Sim3 node_cfw(const std::array<double, Sim3Manifold::kAmbient>& storage) {
  return Sim3Manifold::unpack(storage.data());
}

}  // namespace

PoseGraph::PoseGraph(PgoWeights weights) : weights_(weights) {
  if (!(weights.keyframe_edge >= 0.0) || !(weights.geo_edge >= 0.0) ||
      !(weights.anchor >= 0.0)) {
    throw DataError("pose graph weights must be non-negative");
  }
}

void PoseGraph::add_keyframe(KeyframeId id, const Sim3& pose) {
  Node node{};
  Sim3Manifold::pack(inverse(pose), node.camera_from_world.data());
  if (!keyframes_.emplace(id, node).second) {
    throw DataError("pose graph: duplicate keyframe " + std::to_string(id.value));
  }
}

void PoseGraph::add_geo_image(GeoImageId id, const Sim3& pose) {
  Node node{};
  Sim3Manifold::pack(inverse(pose), node.camera_from_world.data());
  if (!geo_.emplace(id, node).second) {
    throw DataError("pose graph: duplicate geo image " + std::to_string(id.value));
  }
}

const PoseGraph::Node& PoseGraph::keyframe_node(KeyframeId id) const {
  const auto it = keyframes_.find(id);
  if (it == keyframes_.end()) {
    throw DataError("pose graph: unknown keyframe " + std::to_string(id.value));
  }
  return it->second;
}

const PoseGraph::Node& PoseGraph::geo_node(GeoImageId id) const {
  const auto it = geo_.find(id);
  if (it == geo_.end()) {
    throw DataError("pose graph: unknown geo image " + std::to_string(id.value));
  }
  return it->second;
}

PoseGraph::Node& PoseGraph::keyframe_node(KeyframeId id) {
  return const_cast<Node&>(std::as_const(*this).keyframe_node(id));
}

PoseGraph::Node& PoseGraph::geo_node(GeoImageId id) {
  return const_cast<Node&>(std::as_const(*this).geo_node(id));
}

const PoseGraph::Node& PoseGraph::edge_target(const Edge& e) const {
  return e.to_geo ? geo_node(GeoImageId(e.to)) : keyframe_node(KeyframeId(e.to));
}

void PoseGraph::add_keyframe_edge(KeyframeId i, KeyframeId j) {
  const Sim3 si = node_cfw(keyframe_node(i).camera_from_world);
  const Sim3 sj = node_cfw(keyframe_node(j).camera_from_world);
  kf_edges_.push_back({i, j.value, false, sj * inverse(si)});
}

void PoseGraph::add_geo_edge(KeyframeId k, GeoImageId l) {
  const Sim3 sk = node_cfw(keyframe_node(k).camera_from_world);
  const Sim3 sl = node_cfw(geo_node(l).camera_from_world);
  geo_edges_.push_back({k, l.value, true, sl * inverse(sk)});
}

void PoseGraph::add_anchor(GeoImageId m, const Vector3& world_position) {
  geo_node(m);
  if (!world_position.allFinite()) throw DataError("pose graph: non-finite anchor");
  anchors_.push_back({m, world_position});
}

void PoseGraph::set_fixed(KeyframeId id, bool fixed) { keyframe_node(id).fixed = fixed; }

Vector7 PoseGraph::residual_e1(KeyframeId i, KeyframeId j) const {
  for (const Edge& e : kf_edges_) {
    if (e.from == i && e.to == j.value) return edge_residual(e);
  }
  throw DataError("pose graph: no keyframe edge " + std::to_string(i.value) + "-" +
                  std::to_string(j.value));
}

Vector7 PoseGraph::residual_e2(KeyframeId k, GeoImageId l) const {
  for (const Edge& e : geo_edges_) {
    if (e.from == k && e.to == l.value) return edge_residual(e);
  }
  throw DataError("pose graph: no geo edge " + std::to_string(k.value) + "-" +
                  std::to_string(l.value));
}

Vector3 PoseGraph::residual_e3(GeoImageId m) const {
  for (const Anchor& a : anchors_) {
    if (a.node == m) return node_pose(geo_node(m).camera_from_world).translation() - a.target;
  }
  throw DataError("pose graph: no anchor on geo image " + std::to_string(m.value));
}

Vector7 PoseGraph::edge_residual(const Edge& e) const {
  return log_sim3(e.delta * node_cfw(keyframe_node(e.from).camera_from_world) *
                  inverse(node_cfw(edge_target(e).camera_from_world)))
      .vector();
}

double PoseGraph::cost() const {
  double total = 0.0;
  for (const Edge& e : kf_edges_) total += weights_.keyframe_edge * edge_residual(e).squaredNorm();
  for (const Edge& e : geo_edges_) total += weights_.geo_edge * edge_residual(e).squaredNorm();
  for (const Anchor& a : anchors_) {
    total += weights_.anchor *
             (node_pose(geo_node(a.node).camera_from_world).translation() - a.target)
                 .squaredNorm();
  }
  return total;
}

void PoseGraph::build_problem(Problem& problem) {
  const auto manifold = std::make_shared<Sim3Manifold>();
  std::map<KeyframeId, VariableId> kf_vars;
  std::map<GeoImageId, VariableId> geo_vars;
  for (auto& [id, node] : keyframes_) {
    kf_vars[id] = problem.add_variable(node.camera_from_world.data(), manifold);
    if (node.fixed) problem.set_constant(kf_vars[id]);
  }
  for (auto& [id, node] : geo_) {
    geo_vars[id] = problem.add_variable(node.camera_from_world.data(), manifold);
  }
  for (const Edge& e : kf_edges_) {
    problem.add_residual(std::make_unique<RelativeEdge>(e.delta),
                         {kf_vars.at(e.from), kf_vars.at(KeyframeId(e.to))},
                         weights_.keyframe_edge, std::nullopt,
                         "e1(" + std::to_string(e.from.value) + "," + std::to_string(e.to) + ")");
  }
  for (const Edge& e : geo_edges_) {
    problem.add_residual(std::make_unique<RelativeEdge>(e.delta),
                         {kf_vars.at(e.from), geo_vars.at(GeoImageId(e.to))},
                         weights_.geo_edge, std::nullopt,
                         "e2(" + std::to_string(e.from.value) + ",g" + std::to_string(e.to) + ")");
  }
  for (const Anchor& a : anchors_) {
    problem.add_residual(std::make_unique<AnchorEdge>(a.target), {geo_vars.at(a.node)},
                         weights_.anchor, std::nullopt,
                         "e3(g" + std::to_string(a.node.value) + ")");
  }
}

SolveReport PoseGraph::optimize(const SolverOptions& options) {
  Problem problem;
  build_problem(problem);
  return solve(problem, options);
}

Sim3 PoseGraph::keyframe_pose(KeyframeId id) const {
  return node_pose(keyframe_node(id).camera_from_world);
}

Sim3 PoseGraph::geo_pose(GeoImageId id) const { return node_pose(geo_node(id).camera_from_world); }

void PoseGraph::set_keyframe_pose(KeyframeId id, const Sim3& pose) {
  Sim3Manifold::pack(inverse(pose), keyframe_node(id).camera_from_world.data());
}

void PoseGraph::set_geo_pose(GeoImageId id, const Sim3& pose) {
  Sim3Manifold::pack(inverse(pose), geo_node(id).camera_from_world.data());
}

std::vector<KeyframeId> PoseGraph::keyframe_ids() const {
  std::vector<KeyframeId> out;
  for (const auto& [id, node] : keyframes_) out.push_back(id);
  return out;
}

std::vector<GeoImageId> PoseGraph::geo_ids() const {
  std::vector<GeoImageId> out;
  for (const auto& [id, node] : geo_) out.push_back(id);
  return out;
}

DensePoseGraph PoseGraph::to_dense() const {
  DensePoseGraph g;
  std::map<KeyframeId, std::size_t> kf_index;
  std::map<GeoImageId, std::size_t> geo_index;
  for (const auto& [id, node] : keyframes_) {
    kf_index[id] = g.nodes.size();
    g.nodes.push_back(node_pose(node.camera_from_world).matrix());
  }
  for (const auto& [id, node] : geo_) {
    geo_index[id] = g.nodes.size();
    g.nodes.push_back(node_pose(node.camera_from_world).matrix());
  }
  for (const Edge& e : kf_edges_) {
    g.edges.push_back({kf_index.at(e.from), kf_index.at(KeyframeId(e.to)), e.delta.matrix(),
                       weights_.keyframe_edge});
  }
  for (const Edge& e : geo_edges_) {
    g.edges.push_back({kf_index.at(e.from), geo_index.at(GeoImageId(e.to)), e.delta.matrix(),
                       weights_.geo_edge});
  }
  for (const Anchor& a : anchors_) {
    g.anchors.push_back({geo_index.at(a.node), a.target, weights_.anchor});
  }
  return g;
}

GraphWindow build_window(const Scene& scene, const ObservationIndex& index,
                         const WindowOptions& options) {
  if (options.window_size < 2) throw DataError("window size must be at least 2");
  const auto& corrs = scene.geo_correspondences;
  if (corrs.size() < 2) {
    throw DataError("graph window needs at least 2 geo correspondences, have " +
                    std::to_string(corrs.size()));
  }
  GraphWindow w;
  const std::size_t count =
      options.full_history ? corrs.size()
                           : std::min(corrs.size(), static_cast<std::size_t>(options.window_size));
  const std::size_t first = corrs.size() - count;
  for (std::size_t k = first; k < corrs.size(); ++k) {
    w.c2.push_back(corrs[k].geo_image);
    w.c4.emplace_back(corrs[k].keyframe, corrs[k].geo_image);
  }
  const KeyframeId lo = corrs[first].keyframe;
  const KeyframeId hi = corrs.back().keyframe;
  for (auto it = scene.keyframes.lower_bound(lo);
       it != scene.keyframes.end() && it->first <= hi; ++it) {
    w.c1.push_back(it->first);
  }
  std::vector<std::set<PointId>> seen;
  seen.reserve(w.c1.size());
  for (KeyframeId id : w.c1) seen.push_back(index.points_seen_by(id));
  const auto threshold = static_cast<std::size_t>(std::max(0, options.covisibility_threshold));
  for (std::size_t a = 0; a < w.c1.size(); ++a) {
    for (std::size_t b = a + 1; b < w.c1.size(); ++b) {
      std::size_t shared = 0;
      auto ia = seen[a].begin();
      auto ib = seen[b].begin();
      while (ia != seen[a].end() && ib != seen[b].end() && shared < threshold) {
        if (*ia < *ib) {
          ++ia;
        } else if (*ib < *ia) {
          ++ib;
        } else {
          ++shared;
          ++ia;
          ++ib;
        }
      }
      if (shared >= threshold && threshold > 0) w.c3.emplace_back(w.c1[a], w.c1[b]);
    }
  }
  return w;
}

GraphWindow build_window(const Scene& scene, const WindowOptions& options) {
  const ObservationIndex index(scene);
  return build_window(scene, index, options);
}

PgoOutcome optimize_window(Scene& scene, const GraphWindow& window, const PgoWeights& weights,
                           const SolverOptions& options) {
  if (!scene.initialized) throw DataError("pose graph optimization before initialization");
  if (window.c1.empty() || window.c2.empty()) throw DataError("empty pose graph window");

  std::map<GeoImageId, std::size_t> corr_index;
  for (std::size_t k = 0; k < scene.geo_correspondences.size(); ++k) {
    corr_index[scene.geo_correspondences[k].geo_image] = k;
  }

  PoseGraph graph(weights);
  PgoOutcome out;
  for (KeyframeId id : window.c1) {
    const auto it = scene.keyframes.find(id);
    if (it == scene.keyframes.end()) {
      throw DataError("window keyframe " + std::to_string(id.value) + " is not in the scene");
    }
    const Sim3 pose = se3_to_sim3(it->second);
    out.old_poses[id] = pose;
    graph.add_keyframe(id, pose);
  }
  for (GeoImageId m : window.c2) {
    const auto it = corr_index.find(m);
    if (it == corr_index.end()) {
      throw DataError("window geo image " + std::to_string(m.value) + " has no correspondence");
    }
    const GeoCorrespondence& c = scene.geo_correspondences[it->second];
    graph.add_geo_image(m, c.map_pose);
    graph.add_anchor(m, c.world_point());
  }
  for (const auto& [i, j] : window.c3) graph.add_keyframe_edge(i, j);
  for (const auto& [k, l] : window.c4) graph.add_geo_edge(k, l);

  out.keyframe_edges = graph.num_keyframe_edges();
  out.geo_edges = graph.num_geo_edges();
  out.cost_before = graph.cost();
  out.report = graph.optimize(options);
  out.cost_after = graph.cost();

  for (KeyframeId id : window.c1) {
    const Sim3 pose = graph.keyframe_pose(id);
    out.new_poses[id] = pose;
    scene.keyframes[id] = pose.to_se3();
  }
  for (GeoImageId m : window.c2) {
    GeoCorrespondence& c = scene.geo_correspondences[corr_index.at(m)];
    c.map_pose = se3_to_sim3(graph.geo_pose(m).to_se3());
  }
  propagate_to_map_points(scene, out.old_poses, out.new_poses);
  spdlog::debug("pgo: {} keyframes, {} + {} edges, cost {:.6g} -> {:.6g} ({} iterations, {})",
                window.c1.size(), out.keyframe_edges, out.geo_edges, out.cost_before,
                out.cost_after, out.report.iterations, to_string(out.report.termination_reason));
  return out;
}

void propagate_to_map_points(Scene& scene, const std::map<KeyframeId, Sim3>& old_poses,
                             const std::map<KeyframeId, Sim3>& new_poses) {
  std::map<KeyframeId, Sim3> correction;
  for (const auto& [id, old_pose] : old_poses) {
    const auto it = new_poses.find(id);
    if (it == new_poses.end()) {
      throw DataError("propagate_to_map_points: no corrected pose for keyframe " +
                      std::to_string(id.value));
    }
    correction.emplace(id, it->second * inverse(old_pose));
  }
  for (auto& [pid, point] : scene.map_points) {
    if (!scene.keyframes.contains(point.reference)) {
      throw DataError("map point " + std::to_string(pid.value) +
                      " references missing keyframe " + std::to_string(point.reference.value));
    }
    const auto it = correction.find(point.reference);
    if (it != correction.end()) point.position = act(it->second, point.position);
  }
}

}  // namespace geodrift
