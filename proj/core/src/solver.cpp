#include "geodrift/solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include <Eigen/Cholesky>
#include <Eigen/SparseCholesky>
#include <Eigen/SparseCore>
#include <spdlog/spdlog.h>

#include "geodrift/errors.hpp"

namespace geodrift {

// ---------------------------------------------------------------------------
// Manifolds

void EuclideanManifold::plus(const double* x, const double* delta,
                             double* out) const {
  for (int i = 0; i < size_; ++i) out[i] = x[i] + delta[i];
}

void SE3Manifold::pack(const SE3& g, double* out) {
  const Eigen::Quaterniond& q = g.rotation().quaternion();
  out[0] = q.w();
  out[1] = q.x();
  out[2] = q.y();
  out[3] = q.z();
  out[4] = g.translation().x();
  out[5] = g.translation().y();
  out[6] = g.translation().z();
}

SE3 SE3Manifold::unpack(const double* x) {
  return SE3(Rot3(Eigen::Quaterniond(x[0], x[1], x[2], x[3])),
             Vector3(x[4], x[5], x[6]));
}

void SE3Manifold::plus(const double* x, const double* delta,
                       double* out) const {
  const Vector6 d = Eigen::Map<const Vector6>(delta);
  pack(SE3::exp(d) * unpack(x), out);
}

void Sim3Manifold::pack(const Sim3& s, double* out) {
  const Eigen::Quaterniond& q = s.rotation().quaternion();
  out[0] = q.w();
  out[1] = q.x();
  out[2] = q.y();
  out[3] = q.z();
  out[4] = s.translation().x();
  out[5] = s.translation().y();
  out[6] = s.translation().z();
  out[7] = s.scale();
}

Sim3 Sim3Manifold::unpack(const double* x) {
  return Sim3(Rot3(Eigen::Quaterniond(x[0], x[1], x[2], x[3])),
              Vector3(x[4], x[5], x[6]), x[7]);
}

void Sim3Manifold::plus(const double* x, const double* delta,
                        double* out) const {
  const Vector7 d = Eigen::Map<const Vector7>(delta);
  pack(exp_sim3(Sim3Tangent::from_vector(d)) * unpack(x), out);
}

// ---------------------------------------------------------------------------
// Huber

double HuberKernel::rho(double s) const {
  const double d2 = delta * delta;
  if (s <= d2) return s;
  return 2.0 * delta * std::sqrt(s) - d2;
}

double HuberKernel::derivative(double s) const {
  if (s <= delta * delta) return 1.0;
  return delta / std::sqrt(s);
}

// ---------------------------------------------------------------------------
// Problem

VariableId Problem::add_variable(double* data,
                                 std::shared_ptr<const Manifold> manifold) {
  if (data == nullptr || !manifold) {
    throw SolverError("add_variable: null storage or manifold");
  }
  variables_.push_back({data, std::move(manifold), false});
  return VariableId{variables_.size() - 1};
}

void Problem::set_constant(VariableId id, bool constant) {
  if (id.index >= variables_.size()) {
    throw SolverError("set_constant: unknown variable");
  }
  variables_[id.index].constant = constant;
}

bool Problem::is_constant(VariableId id) const {
  return variables_.at(id.index).constant;
}

ResidualId Problem::add_residual(std::unique_ptr<ResidualFunction> function,
                                 std::vector<VariableId> variables,
                                 double weight,
                                 std::optional<HuberKernel> kernel,
                                 std::string label) {
  if (!function) throw SolverError("add_residual: null residual function");
  if (!(weight >= 0.0) || !std::isfinite(weight)) {
    throw SolverError("add_residual: weight must be finite and non-negative");
  }
  Residual r;
  r.function = std::move(function);
  r.weight = weight;
  r.kernel = kernel;
  r.label = label.empty() ? "residual#" + std::to_string(residuals_.size())
                          : std::move(label);
  for (const VariableId& v : variables) {
    if (v.index >= variables_.size()) {
      throw SolverError("add_residual: block '" + r.label +
                        "' references unknown variable " +
                        std::to_string(v.index));
    }
    r.variables.push_back(v.index);
  }
  residuals_.push_back(std::move(r));
  return ResidualId{residuals_.size() - 1};
}

int Problem::free_tangent_dimension() const {
  int dim = 0;
  for (const Variable& v : variables_) {
    if (!v.constant) dim += v.manifold->tangent_size();
  }
  return dim;
}

std::vector<const double*> Problem::parameter_pointers(const Residual& r) const {
  std::vector<const double*> ptrs;
  ptrs.reserve(r.variables.size());
  for (std::size_t v : r.variables) ptrs.push_back(variables_[v].data);
  return ptrs;
}

std::string Problem::describe(std::size_t index) const {
  return "'" + residuals_[index].label + "'";
}

bool Problem::evaluate_block(const Residual& r, Eigen::VectorXd& out) const {
  out.resize(r.function->residual_size());
  const auto ptrs = parameter_pointers(r);
  return r.function->evaluate(ptrs, out.data());
}

double Problem::residual_cost(ResidualId id) const {
  const Residual& r = residuals_.at(id.index);
  Eigen::VectorXd res;
  if (!evaluate_block(r, res)) {
    throw SolverError("residual block " + describe(id.index) +
                      " is undefined at the current parameters");
  }
  if (!res.allFinite()) {
    throw SolverError("residual block " + describe(id.index) +
                      " produced a non-finite value");
  }
  const double s = r.weight * res.squaredNorm();
  return r.kernel ? r.kernel->rho(s) : s;
}

double Problem::cost() const {
  double total = 0.0;
  for (std::size_t i = 0; i < residuals_.size(); ++i) {
    total += residual_cost(ResidualId{i});
  }
  return total;
}

Eigen::VectorXd Problem::residual(ResidualId id) const {
  Eigen::VectorXd res;
  if (!evaluate_block(residuals_.at(id.index), res)) {
    throw SolverError("residual block " + describe(id.index) +
                      " is undefined at the current parameters");
  }
  return res;
}

std::vector<Eigen::MatrixXd> Problem::block_jacobians(const Residual& r,
                                                      bool allow_analytic,
                                                      double step) const {
  const int m = r.function->residual_size();
  std::vector<Eigen::MatrixXd> jac(r.variables.size());
  for (std::size_t k = 0; k < r.variables.size(); ++k) {
    jac[k].resize(m, variables_[r.variables[k]].manifold->tangent_size());
  }
  auto ptrs = parameter_pointers(r);
  if (allow_analytic && r.function->analytic_jacobians(ptrs, jac)) return jac;

  if (!(step > std::numeric_limits<double>::epsilon())) {
    throw SolverError("numeric Jacobian step underflow for block '" + r.label +
                      "'");
  }
  Eigen::VectorXd plus_res(m);
  Eigen::VectorXd minus_res(m);
  for (std::size_t k = 0; k < r.variables.size(); ++k) {
    const Variable& var = variables_[r.variables[k]];
    if (var.constant) continue;
    const int dim = var.manifold->tangent_size();
    std::vector<double> delta(static_cast<std::size_t>(dim), 0.0);
    std::vector<double> xp(static_cast<std::size_t>(var.manifold->ambient_size()));
    std::vector<double> xm(xp.size());
    for (int d = 0; d < dim; ++d) {
      delta[static_cast<std::size_t>(d)] = step;
      var.manifold->plus(var.data, delta.data(), xp.data());
      delta[static_cast<std::size_t>(d)] = -step;
      var.manifold->plus(var.data, delta.data(), xm.data());
      delta[static_cast<std::size_t>(d)] = 0.0;
      ptrs[k] = xp.data();
      const bool ok_p = r.function->evaluate(ptrs, plus_res.data());
      ptrs[k] = xm.data();
      const bool ok_m = r.function->evaluate(ptrs, minus_res.data());
      ptrs[k] = var.data;
      if (!ok_p || !ok_m) {
        throw SolverError("residual block '" + r.label +
                          "' is undefined near the linearization point");
      }
      jac[k].col(d) = (plus_res - minus_res) / (2.0 * step);
    }
  }
  return jac;
}

Eigen::MatrixXd Problem::numeric_jacobian(ResidualId id, std::size_t slot,
                                          double step) const {
  const Residual& r = residuals_.at(id.index);
  if (slot >= r.variables.size()) {
    throw SolverError("numeric_jacobian: slot out of range");
  }
  // Constant variables are skipped by block_jacobians; differentiate anyway.
  Problem& self = const_cast<Problem&>(*this);
  Variable& var = self.variables_[r.variables[slot]];
  const bool was_constant = var.constant;
  var.constant = false;
  std::vector<Eigen::MatrixXd> jac;
  try {
    jac = block_jacobians(r, false, step);
  } catch (...) {
    var.constant = was_constant;
    throw;
  }
  var.constant = was_constant;
  return jac[slot];
}

std::optional<Eigen::MatrixXd> Problem::analytic_jacobian(ResidualId id,
                                                          std::size_t slot) const {
  const Residual& r = residuals_.at(id.index);
  if (slot >= r.variables.size()) {
    throw SolverError("analytic_jacobian: slot out of range");
  }
  const int m = r.function->residual_size();
  std::vector<Eigen::MatrixXd> jac(r.variables.size());
  for (std::size_t k = 0; k < r.variables.size(); ++k) {
    jac[k].resize(m, variables_[r.variables[k]].manifold->tangent_size());
  }
  const auto ptrs = parameter_pointers(r);
  if (!r.function->analytic_jacobians(ptrs, jac)) return std::nullopt;
  return jac[slot];
}

// ---------------------------------------------------------------------------
// Levenberg-Marquardt

const char* to_string(TerminationReason reason) {
  switch (reason) {
    case TerminationReason::kGradientTolerance:
      return "gradient_tolerance";
    case TerminationReason::kCostTolerance:
      return "cost_tolerance";
    case TerminationReason::kMaxIterations:
      return "max_iterations";
    case TerminationReason::kDampingLimit:
      return "damping_limit";
    case TerminationReason::kNoFreeVariables:
      return "no_free_variables";
  }
  return "unknown";
}

class LevenbergMarquardt {
 public:
  LevenbergMarquardt(Problem& problem, const SolverOptions& options)
      : p_(problem), opt_(options) {
    std::size_t offset = 0;
    offsets_.assign(p_.variables_.size(), -1);
    for (std::size_t v = 0; v < p_.variables_.size(); ++v) {
      if (p_.variables_[v].constant) continue;
      offsets_[v] = static_cast<long>(offset);
      offset += static_cast<std::size_t>(p_.variables_[v].manifold->tangent_size());
    }
    dim_ = static_cast<long>(offset);
  }

  SolveReport run();

 private:
  // Weighted, robustified linearization at the current parameters.
  void linearize();
  bool solve_damped(double damping, Eigen::VectorXd& step);
  double trial_cost(const Eigen::VectorXd& step);
  void store_backup();
  void restore_backup();

  Problem& p_;
  SolverOptions opt_;
  std::vector<long> offsets_;
  long dim_ = 0;

  Eigen::VectorXd gradient_;
  Eigen::MatrixXd dense_h_;
  Eigen::SparseMatrix<double> sparse_h_;
  Eigen::SimplicialLLT<Eigen::SparseMatrix<double>> sparse_llt_;
  bool pattern_analyzed_ = false;
  std::vector<std::vector<double>> backup_;
};

void LevenbergMarquardt::linearize() {
  const bool dense = dim_ < opt_.dense_threshold;
  gradient_ = Eigen::VectorXd::Zero(dim_);
  if (dense) {
    dense_h_ = Eigen::MatrixXd::Zero(dim_, dim_);
  }
  std::vector<Eigen::Triplet<double>> triplets;

  Eigen::VectorXd res;
  for (std::size_t i = 0; i < p_.residuals_.size(); ++i) {
    const Problem::Residual& r = p_.residuals_[i];
    bool any_free = false;
    for (std::size_t v : r.variables) any_free |= offsets_[v] >= 0;
    if (!any_free) continue;
    if (!p_.evaluate_block(r, res)) {
      throw SolverError("residual block " + p_.describe(i) +
                        " is undefined at the linearization point");
    }
    if (!res.allFinite()) {
      throw SolverError("residual block " + p_.describe(i) +
                        " produced a non-finite value");
    }
    std::vector<Eigen::MatrixXd> jac =
        p_.block_jacobians(r, opt_.use_analytic_jacobians, opt_.numeric_step);
    double w = r.weight;
    if (r.kernel) w *= r.kernel->derivative(r.weight * res.squaredNorm());
    const double sw = std::sqrt(w);
    res *= sw;
    for (std::size_t a = 0; a < r.variables.size(); ++a) {
      if (offsets_[r.variables[a]] < 0) continue;
      if (!jac[a].allFinite()) {
        throw SolverError("Jacobian of residual block " + p_.describe(i) +
                          " contains a non-finite entry");
      }
      jac[a] *= sw;
    }
    for (std::size_t a = 0; a < r.variables.size(); ++a) {
      const long oa = offsets_[r.variables[a]];
      if (oa < 0) continue;
      gradient_.segment(oa, jac[a].cols()) += jac[a].transpose() * res;
      for (std::size_t b = 0; b < r.variables.size(); ++b) {
        const long ob = offsets_[r.variables[b]];
        if (ob < 0) continue;
        const Eigen::MatrixXd block = jac[a].transpose() * jac[b];
        if (dense) {
          dense_h_.block(oa, ob, block.rows(), block.cols()) += block;
        } else {
          for (long rr = 0; rr < block.rows(); ++rr) {
            for (long cc = 0; cc < block.cols(); ++cc) {
              if (ob + cc > oa + rr) continue;  // lower triangle only
              triplets.emplace_back(oa + rr, ob + cc, block(rr, cc));
            }
          }
        }
      }
    }
  }
  if (!dense) {
    for (long d = 0; d < dim_; ++d) triplets.emplace_back(d, d, 0.0);
    sparse_h_.resize(dim_, dim_);
    sparse_h_.setFromTriplets(triplets.begin(), triplets.end());
  }
}

bool LevenbergMarquardt::solve_damped(double damping, Eigen::VectorXd& step) {
  if (dim_ < opt_.dense_threshold) {
    const Eigen::VectorXd diag = dense_h_.diagonal();
    const double floor = std::max(1e-12, 1e-9 * diag.maxCoeff());
    Eigen::MatrixXd a = dense_h_;
    for (long d = 0; d < dim_; ++d) a(d, d) += damping * std::max(diag(d), floor);
    Eigen::LLT<Eigen::MatrixXd> llt(a);
    if (llt.info() != Eigen::Success) return false;
    step = llt.solve(-gradient_);
    return step.allFinite();
  }
  Eigen::SparseMatrix<double> a = sparse_h_;
  const Eigen::VectorXd diag = Eigen::VectorXd(a.diagonal());
  const double floor = std::max(1e-12, 1e-9 * diag.maxCoeff());
  for (long d = 0; d < dim_; ++d) {
    a.coeffRef(d, d) += damping * std::max(diag(d), floor);
  }
  if (!pattern_analyzed_) {
    sparse_llt_.analyzePattern(a);
    pattern_analyzed_ = true;
  }
  sparse_llt_.factorize(a);
  if (sparse_llt_.info() != Eigen::Success) return false;
  step = sparse_llt_.solve(-gradient_);
  return step.allFinite();
}

void LevenbergMarquardt::store_backup() {
  backup_.resize(p_.variables_.size());
  for (std::size_t v = 0; v < p_.variables_.size(); ++v) {
    if (offsets_[v] < 0) continue;
    const auto& var = p_.variables_[v];
    backup_[v].assign(var.data, var.data + var.manifold->ambient_size());
  }
}

void LevenbergMarquardt::restore_backup() {
  for (std::size_t v = 0; v < p_.variables_.size(); ++v) {
    if (offsets_[v] < 0) continue;
    std::copy(backup_[v].begin(), backup_[v].end(), p_.variables_[v].data);
  }
}

double LevenbergMarquardt::trial_cost(const Eigen::VectorXd& step) {
  for (std::size_t v = 0; v < p_.variables_.size(); ++v) {
    if (offsets_[v] < 0) continue;
    const auto& var = p_.variables_[v];
    var.manifold->plus(backup_[v].data(), step.data() + offsets_[v], var.data);
  }
  double total = 0.0;
  Eigen::VectorXd res;
  for (const Problem::Residual& r : p_.residuals_) {
    if (!p_.evaluate_block(r, res) || !res.allFinite()) {
      return std::numeric_limits<double>::infinity();
    }
    const double s = r.weight * res.squaredNorm();
    total += r.kernel ? r.kernel->rho(s) : s;
  }
  return total;
}

SolveReport LevenbergMarquardt::run() {
  SolveReport report;
  double cost = p_.cost();
  report.initial_cost = cost;
  report.final_cost = cost;
  report.cost_history.push_back(cost);
  if (dim_ == 0) {
    report.converged = true;
    report.termination_reason = TerminationReason::kNoFreeVariables;
    report.message = "no free variables";
    return report;
  }

  double damping = std::clamp(opt_.initial_damping, opt_.min_damping, opt_.max_damping);
  bool relinearize = true;
  Eigen::VectorXd step;
  while (report.iterations < opt_.max_iterations) {
    if (relinearize) {
      linearize();
      relinearize = false;
      // gradient_ holds J'r; the cost carries no 1/2, so its gradient is 2 J'r.
      if (2.0 * gradient_.lpNorm<Eigen::Infinity>() < opt_.gradient_tolerance) {
        report.converged = true;
        report.termination_reason = TerminationReason::kGradientTolerance;
        break;
      }
    }
    ++report.iterations;
    store_backup();
    double new_cost = std::numeric_limits<double>::infinity();
    const bool solved = solve_damped(damping, step);
    if (solved) new_cost = trial_cost(step);

    if (solved && new_cost <= cost) {
      const double decrease = cost - new_cost;
      cost = new_cost;
      report.cost_history.push_back(cost);
      damping = std::max(damping / opt_.damping_decrease, opt_.min_damping);
      relinearize = true;
      if (cost == 0.0 || decrease <= opt_.cost_tolerance * report.final_cost) {
        report.final_cost = cost;
        report.converged = true;
        report.termination_reason = TerminationReason::kCostTolerance;
        break;
      }
      report.final_cost = cost;
      continue;
    }

    restore_backup();
    if (solved) {
      // Model decrease L(0) - L(step) = -(2 g.step + step' H step).
      double quad;
      if (dim_ < opt_.dense_threshold) {
        quad = step.dot(dense_h_ * step);
      } else {
        quad = step.dot(sparse_h_.selfadjointView<Eigen::Lower>() * step);
      }
      const double predicted = -(2.0 * gradient_.dot(step) + quad);
      if (predicted <= opt_.cost_tolerance * cost) {
        report.converged = true;
        report.termination_reason = TerminationReason::kCostTolerance;
        break;
      }
    }
    damping *= opt_.damping_increase;
    if (damping > opt_.max_damping) {
      report.termination_reason = TerminationReason::kDampingLimit;
      std::ostringstream os;
      os << "damping exceeded " << opt_.max_damping << " after "
         << report.iterations << " iterations at cost " << cost;
      report.message = os.str();
      spdlog::debug("lm: {}", report.message);
      break;
    }
  }
  if (report.iterations >= opt_.max_iterations && !report.converged &&
      report.termination_reason != TerminationReason::kDampingLimit) {
    report.termination_reason = TerminationReason::kMaxIterations;
  }
  report.final_cost = cost;
  return report;
}

SolveReport solve(Problem& problem, const SolverOptions& options) {
  if (options.max_iterations < 0) {
    throw SolverError("solve: max_iterations must be non-negative");
  }
  LevenbergMarquardt lm(problem, options);
  return lm.run();
}

}  // namespace geodrift
