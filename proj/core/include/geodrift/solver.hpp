#pragma once

// Damped Levenberg-Marquardt over a product of manifold-valued variable
// blocks. Variables live in caller-owned storage and are updated in place
// through their retraction. The cost minimized is
//
//   sum_k rho_k(w_k * |r_k|^2)
//
// with rho the identity for plain blocks and the Huber function otherwise.

#include <cstddef>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "geodrift/manifold.hpp"

namespace geodrift {

class Manifold {
 public:
  virtual ~Manifold() = default;
  virtual int ambient_size() const = 0;
  virtual int tangent_size() const = 0;
  // out = x [+] delta. out never aliases x.
  virtual void plus(const double* x, const double* delta, double* out) const = 0;
};

class EuclideanManifold final : public Manifold {
 public:
  explicit EuclideanManifold(int size) : size_(size) {}
  int ambient_size() const override { return size_; }
  int tangent_size() const override { return size_; }
  void plus(const double* x, const double* delta, double* out) const override;

 private:
  int size_;
};

// Storage (qw, qx, qy, qz, tx, ty, tz); update T <- exp(delta) * T with
// delta = (omega, nu).
class SE3Manifold final : public Manifold {
 public:
  static constexpr int kAmbient = 7;
  int ambient_size() const override { return kAmbient; }
  int tangent_size() const override { return 6; }
  void plus(const double* x, const double* delta, double* out) const override;

  static void pack(const SE3& g, double* out);
  static SE3 unpack(const double* x);
};

// Storage (qw, qx, qy, qz, tx, ty, tz, s); update S <- exp(delta) * S with
// delta = (omega, sigma, nu).
class Sim3Manifold final : public Manifold {
 public:
  static constexpr int kAmbient = 8;
  int ambient_size() const override { return kAmbient; }
  int tangent_size() const override { return 7; }
  void plus(const double* x, const double* delta, double* out) const override;

  static void pack(const Sim3& s, double* out);
  static Sim3 unpack(const double* x);
};

class ResidualFunction {
 public:
  virtual ~ResidualFunction() = default;
  virtual int residual_size() const = 0;
  // Returns false when the parameters fall outside the residual's domain
  // (for example a point behind the camera).
  virtual bool evaluate(std::span<const double* const> params,
                        double* residual) const = 0;
  // Jacobians with respect to each block's tangent increment. Implementations
  // that return false fall back to central differences.
  virtual bool analytic_jacobians(std::span<const double* const> params,
                                  std::span<Eigen::MatrixXd> jacobians) const {
    (void)params;
    (void)jacobians;
    return false;
  }
};

// rho(s) on the squared norm s with threshold delta on the norm.
struct HuberKernel {
  double delta = 1.0;
  double rho(double s) const;
  double derivative(double s) const;
};

struct VariableId {
  std::size_t index = 0;
};
struct ResidualId {
  std::size_t index = 0;
};

class Problem {
 public:
  VariableId add_variable(double* data, std::shared_ptr<const Manifold> manifold);
  void set_constant(VariableId id, bool constant = true);
  bool is_constant(VariableId id) const;

  // Throws SolverError if any variable id is unknown or sizes disagree.
  ResidualId add_residual(std::unique_ptr<ResidualFunction> function,
                          std::vector<VariableId> variables,
                          double weight = 1.0,
                          std::optional<HuberKernel> kernel = std::nullopt,
                          std::string label = {});

  std::size_t num_variables() const { return variables_.size(); }
  std::size_t num_residuals() const { return residuals_.size(); }
  // Sum of tangent sizes over non-constant variables.
  int free_tangent_dimension() const;

  // Total robustified cost. Throws SolverError naming the block on
  // non-finite or undefined residuals.
  double cost() const;
  double residual_cost(ResidualId id) const;
  Eigen::VectorXd residual(ResidualId id) const;

  // Unweighted Jacobian of one residual block with respect to the tangent of
  // its slot-th variable, by central differences.
  Eigen::MatrixXd numeric_jacobian(ResidualId id, std::size_t slot,
                                   double step = 1e-6) const;
  std::optional<Eigen::MatrixXd> analytic_jacobian(ResidualId id,
                                                   std::size_t slot) const;

 private:
  friend class LevenbergMarquardt;

  struct Variable {
    double* data;
    std::shared_ptr<const Manifold> manifold;
    bool constant = false;
  };
  struct Residual {
    std::unique_ptr<ResidualFunction> function;
    std::vector<std::size_t> variables;
    double weight;
    std::optional<HuberKernel> kernel;
    std::string label;
  };

  std::vector<const double*> parameter_pointers(const Residual& r) const;
  // Returns false when the residual is undefined at the current values.
  bool evaluate_block(const Residual& r, Eigen::VectorXd& out) const;
  std::vector<Eigen::MatrixXd> block_jacobians(const Residual& r,
                                               bool allow_analytic,
                                               double step) const;
  std::string describe(std::size_t index) const;

  std::vector<Variable> variables_;
  std::vector<Residual> residuals_;
};

enum class TerminationReason {
  kGradientTolerance,
  kCostTolerance,
  kMaxIterations,
  kDampingLimit,
  kNoFreeVariables,
};

const char* to_string(TerminationReason reason);

struct SolverOptions {
  double initial_damping = 1e-4;
  double damping_decrease = 3.0;
  double damping_increase = 2.0;
  double min_damping = 1e-12;
  double max_damping = 1e12;
  double gradient_tolerance = 1e-8;
  double cost_tolerance = 1e-10;
  int max_iterations = 100;
  // Free tangent dimension below which the normal equations are solved
  // densely.
  int dense_threshold = 200;
  bool use_analytic_jacobians = true;
  double numeric_step = 1e-6;
};

struct SolveReport {
  int iterations = 0;
  double initial_cost = 0.0;
  double final_cost = 0.0;
  bool converged = false;
  TerminationReason termination_reason = TerminationReason::kMaxIterations;
  std::string message;
  // Cost after every accepted step, starting with initial_cost.
  std::vector<double> cost_history;
};

SolveReport solve(Problem& problem, const SolverOptions& options = {});

}  // namespace geodrift
