#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

#include <gtest/gtest.h>

#include "geodrift/errors.hpp"
#include "geodrift/solver.hpp"
#include "random_poses.hpp"

namespace geodrift {
namespace {

// r(x) = x - target, with an analytic Jacobian.
class Offset final : public ResidualFunction {
 public:
  explicit Offset(Eigen::VectorXd target) : target_(std::move(target)) {}
  int residual_size() const override { return static_cast<int>(target_.size()); }
  bool evaluate(std::span<const double* const> p, double* r) const override {
    for (long i = 0; i < target_.size(); ++i) r[i] = p[0][i] - target_(i);
    return true;
  }
  bool analytic_jacobians(std::span<const double* const>,
                          std::span<Eigen::MatrixXd> j) const override {
    j[0].setIdentity();
    return true;
  }

 private:
  Eigen::VectorXd target_;
};

// Rosenbrock as residuals (1 - x, 10 (y - x^2)).
class Rosenbrock final : public ResidualFunction {
 public:
  int residual_size() const override { return 2; }
  bool evaluate(std::span<const double* const> p, double* r) const override {
    r[0] = 1.0 - p[0][0];
    r[1] = 10.0 * (p[0][1] - p[0][0] * p[0][0]);
    return true;
  }
};

// r(x) = A x - b.
class Linear final : public ResidualFunction {
 public:
  Linear(Eigen::MatrixXd a, Eigen::VectorXd b) : a_(std::move(a)), b_(std::move(b)) {}
  int residual_size() const override { return static_cast<int>(b_.size()); }
  bool evaluate(std::span<const double* const> p, double* r) const override {
    const Eigen::Map<const Eigen::VectorXd> x(p[0], a_.cols());
    Eigen::Map<Eigen::VectorXd>(r, b_.size()) = a_ * x - b_;
    return true;
  }

 private:
  Eigen::MatrixXd a_;
  Eigen::VectorXd b_;
};

// Relative edge log(D S_i S_j^-1) between two Sim3 blocks, numeric Jacobians.
class Sim3Between final : public ResidualFunction {
 public:
  explicit Sim3Between(Sim3 d) : d_(std::move(d)) {}
  int residual_size() const override { return 7; }
  bool evaluate(std::span<const double* const> p, double* r) const override {
    const Sim3 e = d_ * Sim3Manifold::unpack(p[0]) * inverse(Sim3Manifold::unpack(p[1]));
    Eigen::Map<Vector7> out(r);
    out = log_sim3(e).vector();
    return true;
  }

 private:
  Sim3 d_;
};

class Returns final : public ResidualFunction {
 public:
  Returns(double value, bool defined) : value_(value), defined_(defined) {}
  int residual_size() const override { return 1; }
  bool evaluate(std::span<const double* const> p, double* r) const override {
    r[0] = p[0][0] - value_;
    return defined_;
  }

 private:
  double value_;
  bool defined_;
};

// Defined only for x >= 1; minimum of (x - 0)^2 on that domain is at 1.
class Barrier final : public ResidualFunction {
 public:
  int residual_size() const override { return 1; }
  bool evaluate(std::span<const double* const> p, double* r) const override {
    r[0] = p[0][0];
    return p[0][0] >= 1.0;
  }
  bool analytic_jacobians(std::span<const double* const>,
                          std::span<Eigen::MatrixXd> j) const override {
    j[0](0, 0) = 1.0;
    return true;
  }
};

std::shared_ptr<const Manifold> euclid(int n) { return std::make_shared<EuclideanManifold>(n); }

TEST(Solve, LinearScalarConvergesToTarget) {
  double x = 0.0;
  Problem problem;
  const VariableId v = problem.add_variable(&x, euclid(1));
  problem.add_residual(std::make_unique<Offset>(Eigen::VectorXd::Constant(1, 3.0)), {v});
  const SolveReport report = solve(problem);
  EXPECT_TRUE(report.converged);
  EXPECT_NEAR(x, 3.0, 1e-10);
  EXPECT_NEAR(report.final_cost, 0.0, 1e-20);
  EXPECT_NEAR(report.initial_cost, 9.0, 1e-15);
}

TEST(Solve, RosenbrockReachesMinimum) {
  double x[2] = {-1.2, 1.0};
  Problem problem;
  const VariableId v = problem.add_variable(x, euclid(2));
  problem.add_residual(std::make_unique<Rosenbrock>(), {v});
  const SolveReport report = solve(problem);
  EXPECT_TRUE(report.converged) << to_string(report.termination_reason);
  EXPECT_NEAR(x[0], 1.0, 1e-6);
  EXPECT_NEAR(x[1], 1.0, 1e-6);
}

TEST(Solve, ConsistentSim3ChainHasZeroCost) {
  testing::RandomPoses rnd(3);
  std::vector<Sim3> poses = {rnd.sim3(), rnd.sim3(), rnd.sim3()};
  std::vector<std::array<double, 8>> storage(3);
  Problem problem;
  std::vector<VariableId> ids;
  for (int i = 0; i < 3; ++i) {
    Sim3Manifold::pack(poses[i], storage[i].data());
    ids.push_back(problem.add_variable(storage[i].data(), std::make_shared<Sim3Manifold>()));
  }
  problem.set_constant(ids[0]);
  for (int i = 0; i < 2; ++i) {
    problem.add_residual(std::make_unique<Sim3Between>(poses[i + 1] * inverse(poses[i])),
                         {ids[i], ids[i + 1]});
  }
  const SolveReport report = solve(problem);
  EXPECT_LT(report.final_cost, 1e-12);
  EXPECT_LE(report.final_cost, report.initial_cost + 1e-12);
}

TEST(Solve, PerturbedSim3ChainRecoversSnapshot) {
  testing::RandomPoses rnd(4);
  std::vector<Sim3> poses = {rnd.sim3(1.0), rnd.sim3(1.0), rnd.sim3(1.0), rnd.sim3(1.0)};
  std::vector<std::array<double, 8>> storage(4);
  Problem problem;
  std::vector<VariableId> ids;
  for (int i = 0; i < 4; ++i) {
    const Sim3 start = i == 0 ? poses[i] : exp_sim3(rnd.tangent(0.0, 0.2, 0.5, 0.2)) * poses[i];
    Sim3Manifold::pack(start, storage[i].data());
    ids.push_back(problem.add_variable(storage[i].data(), std::make_shared<Sim3Manifold>()));
  }
  problem.set_constant(ids[0]);
  for (int i = 0; i < 3; ++i) {
    problem.add_residual(std::make_unique<Sim3Between>(poses[i + 1] * inverse(poses[i])),
                         {ids[i], ids[i + 1]});
  }
  const SolveReport report = solve(problem);
  EXPECT_LT(report.final_cost, 1e-16);
  for (int i = 1; i < 4; ++i) {
    const Matrix4 got = Sim3Manifold::unpack(storage[i].data()).matrix();
    EXPECT_LT((got - poses[i].matrix()).cwiseAbs().maxCoeff(), 1e-7);
  }
}

TEST(Solve, AcceptedCostsAreMonotone) {
  double x[2] = {-1.2, 1.0};
  Problem problem;
  const VariableId v = problem.add_variable(x, euclid(2));
  problem.add_residual(std::make_unique<Rosenbrock>(), {v});
  const SolveReport report = solve(problem);
  ASSERT_GE(report.cost_history.size(), 2u);
  for (std::size_t k = 1; k < report.cost_history.size(); ++k) {
    EXPECT_LE(report.cost_history[k], report.cost_history[k - 1]);
  }
  EXPECT_LE(report.final_cost, report.initial_cost + 1e-12);
}

TEST(Solve, SparsePathMatchesDensePath) {
  std::mt19937 rng(5);
  std::normal_distribution<double> n01;
  const int dim = 240;
  Eigen::MatrixXd a(dim + 30, dim);
  for (long i = 0; i < a.size(); ++i) a.data()[i] = (rng() % 9 == 0) ? n01(rng) : 0.0;
  a.topRows(dim) += Eigen::MatrixXd::Identity(dim, dim);
  Eigen::VectorXd b(a.rows());
  for (long i = 0; i < b.size(); ++i) b(i) = n01(rng);
  const Eigen::VectorXd expected = a.colPivHouseholderQr().solve(b);

  for (int threshold : {1000, 10}) {
    std::vector<double> x(dim, 0.0);
    Problem problem;
    const VariableId v = problem.add_variable(x.data(), euclid(dim));
    problem.add_residual(std::make_unique<Linear>(a, b), {v});
    SolverOptions options;
    options.dense_threshold = threshold;
    solve(problem, options);
    const Eigen::Map<const Eigen::VectorXd> got(x.data(), dim);
    EXPECT_LT((got - expected).cwiseAbs().maxCoeff(), 1e-7) << threshold;
  }
}

TEST(Solve, InvariantToResidualOrder) {
  std::mt19937 rng(6);
  std::normal_distribution<double> n01;
  std::vector<Eigen::VectorXd> targets;
  for (int k = 0; k < 12; ++k) targets.push_back(Eigen::Vector2d(n01(rng), n01(rng)));
  auto run = [&](bool reversed) {
    double x[2] = {-1.2, 1.0};
    Problem problem;
    const VariableId v = problem.add_variable(x, euclid(2));
    std::vector<int> order(targets.size());
    std::iota(order.begin(), order.end(), 0);
    if (reversed) std::reverse(order.begin(), order.end());
    for (int k : order) {
      problem.add_residual(std::make_unique<Offset>(targets[k]), {v}, 1.0, HuberKernel{0.5});
      problem.add_residual(std::make_unique<Rosenbrock>(), {v}, 0.01);
    }
    return solve(problem).final_cost;
  };
  EXPECT_NEAR(run(false), run(true), 1e-8);
}

TEST(Solve, ConstantVariablesAreUntouched) {
  double x = 1.0;
  double y = 5.0;
  Problem problem;
  const VariableId vx = problem.add_variable(&x, euclid(1));
  const VariableId vy = problem.add_variable(&y, euclid(1));
  problem.set_constant(vy);
  problem.add_residual(std::make_unique<Offset>(Eigen::VectorXd::Constant(1, 2.0)), {vx});
  problem.add_residual(std::make_unique<Offset>(Eigen::VectorXd::Constant(1, 0.0)), {vy});
  solve(problem);
  EXPECT_EQ(y, 5.0);
  EXPECT_NEAR(x, 2.0, 1e-8);
}

TEST(Solve, NoFreeVariables) {
  double x = 1.0;
  Problem problem;
  const VariableId v = problem.add_variable(&x, euclid(1));
  problem.set_constant(v);
  problem.add_residual(std::make_unique<Offset>(Eigen::VectorXd::Constant(1, 2.0)), {v});
  const SolveReport report = solve(problem);
  EXPECT_EQ(report.termination_reason, TerminationReason::kNoFreeVariables);
  EXPECT_EQ(report.iterations, 0);
}

TEST(Solve, NonFiniteResidualNamesTheBlock) {
  double x = 1.0;
  Problem problem;
  const VariableId v = problem.add_variable(&x, euclid(1));
  problem.add_residual(std::make_unique<Returns>(std::numeric_limits<double>::quiet_NaN(), true),
                       {v}, 1.0, std::nullopt, "broken-edge");
  try {
    solve(problem);
    FAIL() << "expected SolverError";
  } catch (const SolverError& e) {
    EXPECT_NE(std::string(e.what()).find("broken-edge"), std::string::npos) << e.what();
  }
}

TEST(Solve, UndefinedAtStartIsAnError) {
  double x = 1.0;
  Problem problem;
  const VariableId v = problem.add_variable(&x, euclid(1));
  problem.add_residual(std::make_unique<Returns>(0.0, false), {v}, 1.0, std::nullopt, "domain");
  EXPECT_THROW(solve(problem), SolverError);
}

TEST(Solve, UndefinedTrialStepsAreRejected) {
  double x = 3.0;
  Problem problem;
  const VariableId v = problem.add_variable(&x, euclid(1));
  problem.add_residual(std::make_unique<Barrier>(), {v});
  const SolveReport report = solve(problem);
  EXPECT_GE(x, 1.0);
  EXPECT_LT(report.final_cost, report.initial_cost);
}

TEST(Solve, DampingLimitStopsWithMessage) {
  // At the domain edge every descent step leaves the domain and is rejected.
  double x = 1.0;
  Problem problem;
  const VariableId v = problem.add_variable(&x, euclid(1));
  problem.add_residual(std::make_unique<Barrier>(), {v});
  SolverOptions options;
  options.initial_damping = 1e11;
  options.cost_tolerance = 0.0;
  options.max_iterations = 1000;
  const SolveReport report = solve(problem, options);
  EXPECT_EQ(report.termination_reason, TerminationReason::kDampingLimit);
  EXPECT_FALSE(report.message.empty());
  EXPECT_GE(x, 1.0);
}

TEST(Solve, RejectsUnknownVariable) {
  Problem problem;
  EXPECT_THROW(problem.add_residual(std::make_unique<Rosenbrock>(), {VariableId{3}}),
               SolverError);
}

TEST(Solve, RejectsNegativeWeight) {
  double x = 0.0;
  Problem problem;
  problem.add_variable(&x, euclid(1));
  EXPECT_THROW(problem.add_residual(std::make_unique<Offset>(Eigen::VectorXd::Zero(1)),
                                    {VariableId{0}}, -1.0),
               SolverError);
}

TEST(NumericJacobian, LinearResidualIsExact) {
  Eigen::MatrixXd a(3, 2);
  a << 1, 2, -3, 4, 0.5, -6;
  double x[2] = {0.3, -0.7};
  Problem problem;
  const VariableId v = problem.add_variable(x, euclid(2));
  const ResidualId r = problem.add_residual(std::make_unique<Linear>(a, Eigen::Vector3d::Ones()), {v});
  const Eigen::MatrixXd j = problem.numeric_jacobian(r, 0);
  EXPECT_LT((j - a).cwiseAbs().maxCoeff(), 1e-8);
}

TEST(NumericJacobian, MatchesAnalyticOffset) {
  double x[3] = {1, 2, 3};
  Problem problem;
  const VariableId v = problem.add_variable(x, euclid(3));
  const ResidualId r = problem.add_residual(std::make_unique<Offset>(Eigen::Vector3d(0, 1, 2)), {v});
  const auto analytic = problem.analytic_jacobian(r, 0);
  ASSERT_TRUE(analytic.has_value());
  EXPECT_LT((problem.numeric_jacobian(r, 0) - *analytic).cwiseAbs().maxCoeff(), 1e-9);
}

TEST(NumericJacobian, StepUnderflowIsReported) {
  double x = 0.0;
  Problem problem;
  const VariableId v = problem.add_variable(&x, euclid(1));
  const ResidualId r = problem.add_residual(std::make_unique<Offset>(Eigen::VectorXd::Zero(1)), {v});
  EXPECT_THROW(problem.numeric_jacobian(r, 0, 1e-300), SolverError);
}

TEST(Huber, QuadraticBelowThresholdLinearAbove) {
  const HuberKernel k{2.0};
  for (double norm : {0.0, 0.5, 1.0, 1.999, 2.0}) {
    EXPECT_EQ(k.rho(norm * norm), norm * norm);
    EXPECT_EQ(k.derivative(norm * norm), 1.0);
  }
  for (double norm : {2.5, 4.0, 10.0, 100.0}) {
    EXPECT_NEAR(k.rho(norm * norm), 2.0 * 2.0 * norm - 4.0, 1e-12);
  }
  // Linear in the norm above the threshold: equal increments in norm give
  // equal increments in cost.
  const double d1 = k.rho(6.0 * 6.0) - k.rho(5.0 * 5.0);
  const double d2 = k.rho(7.0 * 7.0) - k.rho(6.0 * 6.0);
  EXPECT_NEAR(d1, d2, 1e-12);
}

TEST(Huber, RobustFitIgnoresOutlier) {
  double x = 0.0;
  Problem problem;
  const VariableId v = problem.add_variable(&x, euclid(1));
  for (double t : {1.0, 1.1, 0.9, 1.05, 0.95}) {
    problem.add_residual(std::make_unique<Offset>(Eigen::VectorXd::Constant(1, t)), {v}, 1.0,
                         HuberKernel{0.5});
  }
  problem.add_residual(std::make_unique<Offset>(Eigen::VectorXd::Constant(1, 100.0)), {v}, 1.0,
                       HuberKernel{0.5});
  solve(problem);
  EXPECT_NEAR(x, 1.0, 0.15);
}

TEST(SE3ManifoldTest, PlusIsLeftMultiplication) {
  testing::RandomPoses rnd(7);
  const SE3 g = rnd.se3();
  Vector6 d;
  d << rnd.vec3(0.3), rnd.vec3(1.0);
  double x[7];
  double out[7];
  SE3Manifold::pack(g, x);
  SE3Manifold().plus(x, d.data(), out);
  const Matrix4 expected = SE3::exp(d).matrix() * g.matrix();
  EXPECT_LT((SE3Manifold::unpack(out).matrix() - expected).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Sim3ManifoldTest, PlusIsLeftMultiplication) {
  testing::RandomPoses rnd(8);
  const Sim3 s = rnd.sim3();
  const Sim3Tangent d = rnd.tangent(0.0, 0.3, 1.0, 0.2);
  double x[8];
  double out[8];
  Sim3Manifold::pack(s, x);
  Sim3Manifold().plus(x, d.vector().data(), out);
  const Matrix4 expected = exp_sim3(d).matrix() * s.matrix();
  EXPECT_LT((Sim3Manifold::unpack(out).matrix() - expected).cwiseAbs().maxCoeff(), 1e-12);
}

}  // namespace
}  // namespace geodrift
