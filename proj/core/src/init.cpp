#include "geodrift/init.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <numbers>
#include <random>

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include "geodrift/errors.hpp"

namespace geodrift {

namespace {

Matrix3 yaw_matrix(double theta) {
  const double c = std::cos(theta);
  const double s = std::sin(theta);
  Matrix3 r;
  // clang-format off
  r << c,   0.0, -s,
       0.0, 1.0, 0.0,
       s,   0.0, c;
  // clang-format on
  return r;
}

Rot3 rotation_to_up(const Vector3& normal) {
  return Rot3(Eigen::Quaterniond::FromTwoVectors(normal, Vector3::UnitY()));
}

Vector3 plane_normal(std::span<const Vector3> points) {
  if (points.size() < 3) {
    throw GeometryError("fit_ground_plane: need at least 3 points");
  }
  Vector3 mean = Vector3::Zero();
  for (const Vector3& p : points) mean += p;
  mean /= static_cast<double>(points.size());
  Matrix3 cov = Matrix3::Zero();
  for (const Vector3& p : points) cov += (p - mean) * (p - mean).transpose();
  cov /= static_cast<double>(points.size());
  Eigen::SelfAdjointEigenSolver<Matrix3> eig(cov);
  const Vector3 ev = eig.eigenvalues();  // ascending
  if (!(ev(2) > 0.0) || ev(1) <= 1e-12 * ev(2)) {
    throw GeometryError(
        "fit_ground_plane: positions are collinear or coincident");
  }
  return eig.eigenvectors().col(0).normalized();
}

}  // namespace

bool PlanarResidual::evaluate(std::span<const double* const> params,
                              double* residual) const {
  const double* x = params[0];
  const PlanarSimilarity p{x[0], x[1], x[2], x[3], h_};
  Eigen::Map<Vector3> r(residual);
  r = world_ - p.apply(map_);
  return true;
}

bool PlanarResidual::analytic_jacobians(std::span<const double* const> params,
                                        std::span<Eigen::MatrixXd> jac) const {
  const double* x = params[0];
  const double s = x[2];
  const double c = std::cos(x[3]);
  const double sn = std::sin(x[3]);
  const double mx = map_.x();
  const double my = map_.y();
  const double mz = map_.z();
  Eigen::MatrixXd& j = jac[0];
  j.setZero();
  // x' = s(c mx - sn mz) + a ; y' = s my + h ; z' = s(sn mx + c mz) + b
  j(0, 0) = -1.0;
  j(2, 1) = -1.0;
  j(0, 2) = -(c * mx - sn * mz);
  j(1, 2) = -my;
  j(2, 2) = -(sn * mx + c * mz);
  j(0, 3) = -s * (-sn * mx - c * mz);
  j(2, 3) = -s * (c * mx - sn * mz);
  return true;
}

double normalize_angle(double angle) {
  constexpr double kPi = std::numbers::pi;
  double a = std::fmod(angle, 2.0 * kPi);
  if (a <= -kPi) a += 2.0 * kPi;
  if (a > kPi) a -= 2.0 * kPi;
  return a;
}

Matrix4 PlanarSimilarity::matrix() const {
  Matrix4 m = Matrix4::Identity();
  m.topLeftCorner<3, 3>() = s * yaw_matrix(theta);
  m.topRightCorner<3, 1>() = Vector3(a, height_offset, b);
  return m;
}

Sim3 PlanarSimilarity::to_sim3() const {
  return Sim3(Rot3::from_matrix(yaw_matrix(theta)), Vector3(a, height_offset, b), s);
}

Vector3 PlanarSimilarity::apply(const Vector3& p) const {
  return s * yaw_matrix(theta) * p + Vector3(a, height_offset, b);
}

Rot3 fit_ground_plane(std::span<const Vector3> points) {
  Vector3 n = plane_normal(points);
  // The two signs need rotations of angle acos(n.y) and pi - acos(n.y).
  if (n.y() < 0.0) n = -n;
  if (n.y() == 0.0) {
    // Tie: prefer the sign with a positive leading component.
    for (int k = 0; k < 3; ++k) {
      if (n(k) != 0.0) {
        if (n(k) < 0.0) n = -n;
        break;
      }
    }
  }
  return rotation_to_up(n);
}

Rot3 fit_ground_plane(const Scene& scene, PlaneNormalRule rule) {
  const std::vector<Vector3> positions = scene.keyframe_positions();
  if (rule == PlaneNormalRule::kSmallestRotation) return fit_ground_plane(positions);
  Vector3 n = plane_normal(positions);
  Vector3 down = Vector3::Zero();
  for (const auto& [id, pose] : scene.keyframes) {
    down += pose.rotation().act(Vector3::UnitY());
  }
  if (n.dot(down) > 0.0) n = -n;
  return rotation_to_up(n);
}

Rot3 ground_plane_rotation(const Scene& scene, double min_planarity) {
  if (scene.keyframes.empty()) throw GeometryError("ground_plane_rotation: empty scene");
  Vector3 down = Vector3::Zero();
  for (const auto& [id, pose] : scene.keyframes) down += pose.rotation().act(Vector3::UnitY());
  const std::vector<Vector3> positions = scene.keyframe_positions();
  if (positions.size() >= 3) {
    Vector3 mean = Vector3::Zero();
    for (const Vector3& p : positions) mean += p;
    mean /= static_cast<double>(positions.size());
    Matrix3 cov = Matrix3::Zero();
    for (const Vector3& p : positions) cov += (p - mean) * (p - mean).transpose();
    const Eigen::SelfAdjointEigenSolver<Matrix3> eig(cov);
    const Vector3 ev = eig.eigenvalues();
    if (ev(2) > 0.0 && ev(1) >= min_planarity * ev(2)) {
      Vector3 n = eig.eigenvectors().col(0).normalized();
      if (n.dot(down) > 0.0) n = -n;
      return rotation_to_up(n);
    }
  }
  if (!(down.norm() > 0.0)) throw GeometryError("ground_plane_rotation: no up direction");
  return rotation_to_up(-down.normalized());
}

double planar_cost(const PlanarSimilarity& params,
                   std::span<const Vector3> map_points,
                   std::span<const Vector3> world_points,
                   const std::vector<bool>& mask) {
  double total = 0.0;
  for (std::size_t k = 0; k < map_points.size(); ++k) {
    if (!mask.empty() && !mask[k]) continue;
    total += (world_points[k] - params.apply(map_points[k])).squaredNorm();
  }
  return total;
}

PlanarSimilarity solve_planar_minimal(const Vector3& map0, const Vector3& map1,
                                      const Vector3& world0,
                                      const Vector3& world1,
                                      double height_offset) {
  // In complex form w' = s e^{i theta} w + (a + i b) with w = x + i z.
  using C = std::complex<double>;
  const C m0(map0.x(), map0.z());
  const C m1(map1.x(), map1.z());
  const C w0(world0.x(), world0.z());
  const C w1(world1.x(), world1.z());
  const C dm = m1 - m0;
  const double span = std::max({std::abs(m0), std::abs(m1), 1.0});
  if (std::abs(dm) <= 1e-12 * span) {
    throw GeometryError("planar similarity: coincident xz projections");
  }
  const C q = (w1 - w0) / dm;
  const C offset = w0 - q * m0;
  PlanarSimilarity p;
  p.s = std::abs(q);
  if (!(p.s > 0.0)) {
    throw GeometryError("planar similarity: coincident world positions");
  }
  p.theta = normalize_angle(std::arg(q));
  p.a = offset.real();
  p.b = offset.imag();
  p.height_offset = height_offset;
  return p;
}

PlanarFit fit_planar_similarity(std::span<const Vector3> map_points,
                                std::span<const Vector3> world_points,
                                const RansacOptions& ransac,
                                double height_offset,
                                const SolverOptions& solver) {
  const std::size_t n = map_points.size();
  if (n != world_points.size()) {
    throw DataError("fit_planar_similarity: mismatched correspondence lists");
  }
  if (n < 2) {
    throw GeometryError("fit_planar_similarity: need at least 2 correspondences");
  }
  const double thr2 = ransac.threshold * ransac.threshold;
  std::mt19937_64 rng(ransac.seed);
  std::uniform_int_distribution<std::size_t> pick(0, n - 1);

  bool any_valid = false;
  std::size_t best_count = 0;
  double best_cost = std::numeric_limits<double>::infinity();
  PlanarSimilarity best;
  std::vector<bool> best_mask;
  std::vector<bool> mask(n);
  for (int it = 0; it < ransac.iterations; ++it) {
    const std::size_t i = pick(rng);
    std::size_t j = pick(rng);
    if (n == 2) j = 1 - i;
    if (i == j) continue;
    PlanarSimilarity candidate;
    try {
      candidate = solve_planar_minimal(map_points[i], map_points[j],
                                       world_points[i], world_points[j],
                                       height_offset);
    } catch (const GeometryError&) {
      continue;
    }
    any_valid = true;
    std::size_t count = 0;
    double cost = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
      const double e2 = (world_points[k] - candidate.apply(map_points[k])).squaredNorm();
      mask[k] = e2 < thr2;
      if (mask[k]) {
        ++count;
        cost += e2;
      }
    }
    if (count > best_count || (count == best_count && cost < best_cost)) {
      best_count = count;
      best_cost = cost;
      best = candidate;
      best_mask = mask;
    }
  }
  if (!any_valid) {
    throw GeometryError("fit_planar_similarity: every sample is degenerate");
  }
  if (best_count < 2) {
    throw GeometryError("fit_planar_similarity: no consensus set of size 2");
  }

  PlanarFit fit;
  fit.minimal_params = best;
  fit.inliers = best_mask;
  fit.minimal_cost = planar_cost(best, map_points, world_points, best_mask);

  double x[4] = {best.a, best.b, best.s, best.theta};
  Problem problem;
  const VariableId var =
      problem.add_variable(x, std::make_shared<EuclideanManifold>(4));
  for (std::size_t k = 0; k < n; ++k) {
    if (!best_mask[k]) continue;
    problem.add_residual(
        std::make_unique<PlanarResidual>(map_points[k], world_points[k], height_offset),
        {var}, 1.0, std::nullopt, "planar#" + std::to_string(k));
  }
  fit.refinement = solve(problem, solver);
  if (!(x[2] > 0.0)) {
    throw GeometryError("fit_planar_similarity: refinement produced a non-positive scale");
  }
  fit.params = PlanarSimilarity{x[0], x[1], x[2], normalize_angle(x[3]), height_offset};
  fit.cost = planar_cost(fit.params, map_points, world_points, best_mask);
  return fit;
}

PlanarFit fit_planar_similarity(std::span<const GeoCorrespondence> corrs,
                                const Rot3& plane_rotation,
                                const RansacOptions& ransac,
                                double height_offset,
                                const SolverOptions& solver) {
  std::vector<Vector3> map;
  std::vector<Vector3> world;
  for (const GeoCorrespondence& c : corrs) {
    map.push_back(plane_rotation.act(c.map_point()));
    world.push_back(c.world_point());
  }
  return fit_planar_similarity(map, world, ransac, height_offset, solver);
}

Sim3 initialization_transform(const Rot3& plane_rotation,
                              const PlanarSimilarity& sim) {
  return sim.to_sim3() * Sim3(plane_rotation, Vector3::Zero(), 1.0);
}

void transform_scene(Scene& scene, const Sim3& transform) {
  for (auto& [id, pose] : scene.keyframes) pose = transform_pose(transform, pose);
  for (auto& [id, point] : scene.map_points) point.position = act(transform, point.position);
  for (GeoCorrespondence& c : scene.geo_correspondences) {
    c.map_pose = se3_to_sim3(transform_pose(transform, c.map_pose.to_se3()));
  }
}

Scene apply_initialization(Scene scene, const Rot3& plane_rotation,
                           const PlanarSimilarity& sim) {
  if (scene.initialized) {
    throw DataError("apply_initialization: scene is already initialized");
  }
  transform_scene(scene, initialization_transform(plane_rotation, sim));
  scene.initialized = true;
  return scene;
}

Sim3 align_similarity(std::span<const Vector3> src, std::span<const Vector3> dst) {
  const std::size_t n = src.size();
  if (n != dst.size() || n < 3) {
    throw GeometryError("align_similarity: need at least 3 point pairs");
  }
  Vector3 ms = Vector3::Zero();
  Vector3 md = Vector3::Zero();
  for (std::size_t i = 0; i < n; ++i) {
    ms += src[i];
    md += dst[i];
  }
  ms /= static_cast<double>(n);
  md /= static_cast<double>(n);
  Matrix3 cov = Matrix3::Zero();
  double var_src = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    cov += (dst[i] - md) * (src[i] - ms).transpose();
    var_src += (src[i] - ms).squaredNorm();
  }
  cov /= static_cast<double>(n);
  var_src /= static_cast<double>(n);
  if (!(var_src > 0.0)) throw GeometryError("align_similarity: coincident source points");
  Eigen::JacobiSVD<Matrix3> svd(cov, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Vector3 sv = svd.singularValues();
  if (sv(1) <= 1e-12 * sv(0)) {
    throw GeometryError("align_similarity: source points are collinear");
  }
  Matrix3 d = Matrix3::Identity();
  if ((svd.matrixU() * svd.matrixV().transpose()).determinant() < 0.0) d(2, 2) = -1.0;
  const Matrix3 r = svd.matrixU() * d * svd.matrixV().transpose();
  const double scale = (sv.asDiagonal() * d).trace() / var_src;
  const Vector3 t = md - scale * r * ms;
  return Sim3(Rot3::from_matrix(r), t, scale);
}

}  // namespace geodrift
