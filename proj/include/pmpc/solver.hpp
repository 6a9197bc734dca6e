/**
 * @file solver.hpp
 * @brief Smooth inequality-constrained NLP solver: a Powell-Hestenes-
 * Rockafellar augmented Lagrangian outer loop around a limited-memory BFGS
 * inner minimizer with Armijo backtracking.
 *
 * Problems are expressed as min f(z) s.t. g(z) >= 0 and must model
 * NlpProblem. The solver is deterministic: identical inputs give bitwise
 * identical outputs.
 */
#pragma once

#include "pmpc/core.hpp"

#include <Eigen/Dense>

#include <chrono>
#include <cmath>
#include <concepts>
#include <deque>
#include <limits>
#include <string>
#include <vector>

namespace pmpc {

/**
 * min f(z) s.t. g(z) >= 0.
 *
 * - objective(z, grad) returns f(z) and writes its gradient into grad;
 * - constraints(z) returns g(z) (size num_constraints());
 * - constraint_vjp(z, mu) returns J_g(z)^T mu.
 */
template <typename P>
concept NlpProblem = requires(const P& p, const Eigen::VectorXd& z, Eigen::VectorXd& grad) {
  { p.num_variables() } -> std::convertible_to<Eigen::Index>;
  { p.num_constraints() } -> std::convertible_to<Eigen::Index>;
  { p.objective(z, grad) } -> std::convertible_to<double>;
  { p.constraints(z) } -> std::convertible_to<Eigen::VectorXd>;
  { p.constraint_vjp(z, z) } -> std::convertible_to<Eigen::VectorXd>;
};

/**
 * Optional: a positive semidefinite approximation B of the Hessian of
 * f(z) + 1/2 sum_r w_r g_r(z)^2 (typically Gauss-Newton), given z and the
 * row weights w. Its inverse serves as the initial inverse Hessian of the
 * quasi-Newton inner loop (preconditioned L-BFGS).
 */
template <typename P>
concept ProvidesCurvature = requires(const P& p, const Eigen::VectorXd& z) {
  { p.curvature(z, z) } -> std::convertible_to<Eigen::MatrixXd>;
};

class SolverInputError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

struct SolverOptions {
  int max_iterations = 200;        ///< total inner quasi-Newton iterations
  double kkt_tolerance = 1e-6;     ///< on |grad L|_inf / max(1, |f|)
  double constraint_tolerance = 1e-8;
  double penalty_init = 10.0;
  double penalty_growth = 10.0;
  double penalty_max = 1e12;
  int max_outer_iterations = 40;
  /// Inner iterations allowed per outer iteration on constrained problems.
  int max_inner_iterations = 20;
  int memory = 10;
  double armijo = 1e-4;
  double backtrack = 0.5;
  int max_line_search_steps = 50;
  /// Inner tolerance of the first outer iteration; divided by 10 per outer iteration down to kkt_tolerance.
  double initial_inner_tolerance = 1e-3;
  /// Precondition with the problem's curvature() when it provides one.
  bool use_curvature = true;

  void validate() const {
    if (max_iterations < 1) {
      throw ConfigurationError("solver: max_iterations must be >= 1");
    }
    if (!(kkt_tolerance > 0.0) || !(constraint_tolerance > 0.0)) {
      throw ConfigurationError("solver: tolerances must be > 0");
    }
    if (!(penalty_init > 0.0) || !(penalty_growth > 1.0)) {
      throw ConfigurationError("solver: penalty_init must be > 0 and penalty_growth > 1");
    }
    if (memory < 1 || max_outer_iterations < 1 || max_inner_iterations < 1) {
      throw ConfigurationError("solver: memory, max_outer_iterations and max_inner_iterations must be >= 1");
    }
    if (!(initial_inner_tolerance > 0.0)) {
      throw ConfigurationError("solver: initial_inner_tolerance must be > 0");
    }
    if (!(armijo > 0.0 && armijo < 1.0) || !(backtrack > 0.0 && backtrack < 1.0)) {
      throw ConfigurationError("solver: line-search parameters must lie in (0, 1)");
    }
  }
};

enum class SolverStatus { Converged, MaxIterations, LineSearchFailure };

[[nodiscard]] inline const char* to_string(SolverStatus s) {
  switch (s) {
  case SolverStatus::Converged:
    return "converged";
  case SolverStatus::MaxIterations:
    return "max-iterations";
  case SolverStatus::LineSearchFailure:
    return "line-search-failure";
  }
  return "unknown";
}

struct SolverResult {
  Eigen::VectorXd x;
  Eigen::VectorXd multipliers;
  double objective = std::numeric_limits<double>::quiet_NaN();
  SolverStatus status = SolverStatus::MaxIterations;
  int iterations = 0;
  int outer_iterations = 0;
  double wall_time = 0.0; ///< [s]
  double constraint_violation = 0.0; ///< max(0, -g)_inf
  double kkt_residual = 0.0;         ///< |grad L|_inf / max(1, |f|)
  /// Violation after each accepted outer iteration; non-increasing once
  /// values at or below constraint_tolerance count as one feasible level.
  std::vector<double> violation_history;

  [[nodiscard]] bool converged() const { return status == SolverStatus::Converged; }
};

/// Central differences with per-coordinate step `step * max(1, |z_i|)`.
template <typename F>
  requires std::invocable<const F&, const Eigen::VectorXd&>
[[nodiscard]] Eigen::VectorXd finite_difference_gradient(const F& f, const Eigen::VectorXd& z,
                                                         double step = 1e-6) {
  Eigen::VectorXd grad(z.size());
  Eigen::VectorXd probe = z;
  for (Eigen::Index i = 0; i < z.size(); ++i) {
    const double h = step * std::max(1.0, std::abs(z(i)));
    probe(i) = z(i) + h;
    const double fp = f(probe);
    probe(i) = z(i) - h;
    const double fm = f(probe);
    probe(i) = z(i);
    grad(i) = (fp - fm) / (2.0 * h);
  }
  return grad;
}

/// Finite-difference gradient of an NlpProblem's objective.
template <NlpProblem P>
[[nodiscard]] Eigen::VectorXd finite_difference_gradient(const P& problem, const Eigen::VectorXd& z,
                                                         double step = 1e-6) {
  Eigen::VectorXd scratch(z.size());
  return finite_difference_gradient(
      [&](const Eigen::VectorXd& v) { return problem.objective(v, scratch); }, z, step);
}

namespace detail {

/// Limited-memory inverse-Hessian approximation (two-loop recursion).
class LbfgsMemory {
public:
  explicit LbfgsMemory(int capacity, const Eigen::LLT<Eigen::MatrixXd>* preconditioner = nullptr)
      : capacity_(capacity), precond_(preconditioner) {}

  void clear() {
    s_.clear();
    y_.clear();
    rho_.clear();
  }
  [[nodiscard]] bool empty() const { return s_.empty(); }

  void push(const Eigen::VectorXd& s, const Eigen::VectorXd& y) {
    const double sy = s.dot(y);
    if (!(sy > 1e-12 * s.norm() * y.norm())) {
      return; // curvature condition fails; skip the pair
    }
    if (static_cast<int>(s_.size()) == capacity_) {
      s_.pop_front();
      y_.pop_front();
      rho_.pop_front();
    }
    s_.push_back(s);
    y_.push_back(y);
    rho_.push_back(1.0 / sy);
  }

  /// -H0 grad when the memory is empty.
  [[nodiscard]] Eigen::VectorXd initial_direction(const Eigen::VectorXd& grad) const {
    return precond_ ? Eigen::VectorXd(-precond_->solve(grad)) : Eigen::VectorXd(-grad);
  }
  [[nodiscard]] bool scaled() const { return precond_ != nullptr; }

  [[nodiscard]] Eigen::VectorXd apply(const Eigen::VectorXd& grad) const {
    Eigen::VectorXd q = grad;
    const std::size_t m = s_.size();
    std::vector<double> alpha(m);
    for (std::size_t k = m; k-- > 0;) {
      alpha[k] = rho_[k] * s_[k].dot(q);
      q -= alpha[k] * y_[k];
    }
    if (precond_) {
      q = precond_->solve(q);
    } else if (m > 0) {
      q *= s_.back().dot(y_.back()) / y_.back().squaredNorm();
    }
    for (std::size_t k = 0; k < m; ++k) {
      const double beta = rho_[k] * y_[k].dot(q);
      q += (alpha[k] - beta) * s_[k];
    }
    return -q;
  }

private:
  int capacity_;
  std::deque<Eigen::VectorXd> s_;
  std::deque<Eigen::VectorXd> y_;
  std::deque<double> rho_;
  const Eigen::LLT<Eigen::MatrixXd>* precond_;
};

struct InnerOutcome {
  SolverStatus status = SolverStatus::MaxIterations;
  int iterations = 0;
};

inline constexpr double kRoundoffSlack = 1e-12;
inline constexpr double kWolfeCurvature = 0.9;

/// Minimize `fun` (value + gradient) from z in place.
template <typename F>
InnerOutcome lbfgs_minimize(const F& fun, Eigen::VectorXd& z, double tol, int budget,
                            const SolverOptions& opt,
                            const Eigen::LLT<Eigen::MatrixXd>* preconditioner = nullptr) {
  InnerOutcome out;
  Eigen::VectorXd g(z.size());
  Eigen::VectorXd g_new(z.size());
  double f = fun(z, g);
  LbfgsMemory memory(opt.memory, preconditioner);
  bool first = true;

  while (true) {
    if (g.lpNorm<Eigen::Infinity>() <= tol * std::max(1.0, std::abs(f))) {
      out.status = SolverStatus::Converged;
      return out;
    }
    if (out.iterations >= budget) {
      out.status = SolverStatus::MaxIterations;
      return out;
    }

    bool stepped = false;
    for (int attempt = 0; attempt < 2 && !stepped; ++attempt) {
      Eigen::VectorXd d = memory.empty() ? memory.initial_direction(g) : memory.apply(g);
      double slope = g.dot(d);
      if (!(slope < 0.0)) {
        memory.clear();
        d = memory.initial_direction(g);
        slope = g.dot(d);
      }
      double alpha = 1.0;
      if (memory.empty() && first && !memory.scaled()) {
        alpha = std::min(1.0, 1.0 / g.lpNorm<Eigen::Infinity>());
      }
      for (int ls = 0; ls < opt.max_line_search_steps; ++ls) {
        const Eigen::VectorXd candidate = z + alpha * d;
        const double f_new = fun(candidate, g_new);
        // Armijo, or the approximate Wolfe test once f differences reach roundoff
        const bool armijo = f_new <= f + opt.armijo * alpha * slope;
        bool approx_wolfe = false;
        if (std::isfinite(f_new) && !armijo && f_new <= f + kRoundoffSlack * std::max(1.0, std::abs(f))) {
          const double slope_new = g_new.dot(d);
          approx_wolfe = slope_new <= (1.0 - 2.0 * opt.armijo) * -slope && slope_new >= kWolfeCurvature * slope;
        }
        if (std::isfinite(f_new) && (armijo || approx_wolfe)) {
          memory.push(candidate - z, g_new - g);
          z = candidate;
          f = f_new;
          g.swap(g_new);
          stepped = true;
          break;
        }
        alpha *= opt.backtrack;
      }
      if (!stepped) {
        if (memory.empty()) {
          break;
        }
        memory.clear(); // retry once along steepest descent
      }
    }
    if (!stepped) {
      out.status = SolverStatus::LineSearchFailure;
      return out;
    }
    first = false;
    ++out.iterations;
  }
}

inline double violation_of(const Eigen::VectorXd& g) {
  return g.size() == 0 ? 0.0 : std::max(0.0, -g.minCoeff());
}

} // namespace detail

/**
 * @brief Solve min f(z) s.t. g(z) >= 0 from `initial`.
 *
 * `initial_multipliers` (size num_constraints(), entries >= 0) warm-starts
 * the augmented Lagrangian; an empty vector means zeros.
 */
template <NlpProblem P>
[[nodiscard]] SolverResult solve(const P& problem, const Eigen::VectorXd& initial,
                                 const SolverOptions& options = {},
                                 const Eigen::VectorXd& initial_multipliers = {}) {
  using Clock = std::chrono::steady_clock;
  const auto start = Clock::now();
  options.validate();

  const Eigen::Index n = problem.num_variables();
  const Eigen::Index m = problem.num_constraints();
  if (initial.size() != n) {
    throw SolverInputError("initial point has " + std::to_string(initial.size()) +
                           " entries, problem has " + std::to_string(n));
  }
  if (!initial.allFinite()) {
    throw SolverInputError("initial point is not finite");
  }

  SolverResult result;
  Eigen::VectorXd z = initial;
  Eigen::VectorXd lambda = Eigen::VectorXd::Zero(m);
  if (initial_multipliers.size() == m) {
    lambda = initial_multipliers.cwiseMax(0.0);
  }
  double rho = options.penalty_init;

  Eigen::VectorXd scratch(n);
  if (!std::isfinite(problem.objective(z, scratch))) {
    throw SolverInputError("objective is not finite at the initial point");
  }

  // L(z) = f + (|max(0, lambda - rho g)|^2 - |lambda|^2) / (2 rho)
  auto lagrangian = [&](const Eigen::VectorXd& v, Eigen::VectorXd& grad) -> double {
    double value = problem.objective(v, grad);
    if (!std::isfinite(value)) {
      return value;
    }
    if (m > 0) {
      const Eigen::VectorXd g = problem.constraints(v);
      const Eigen::VectorXd mu = (lambda - rho * g).cwiseMax(0.0);
      value += (mu.squaredNorm() - lambda.squaredNorm()) / (2.0 * rho);
      grad -= problem.constraint_vjp(v, mu);
    }
    return value;
  };
  auto kkt_residual = [&](const Eigen::VectorXd& v) {
    Eigen::VectorXd grad(n);
    const double value = lagrangian(v, grad);
    return grad.lpNorm<Eigen::Infinity>() / std::max(1.0, std::abs(value));
  };
  auto finish = [&](SolverStatus status) {
    result.x = z;
    result.multipliers = lambda;
    result.objective = problem.objective(z, scratch);
    result.status = status;
    result.constraint_violation = m > 0 ? detail::violation_of(problem.constraints(z)) : 0.0;
    result.kkt_residual = kkt_residual(z);
    result.wall_time = std::chrono::duration<double>(Clock::now() - start).count();
    return result;
  };

  if ((m == 0 || detail::violation_of(problem.constraints(z)) <= options.constraint_tolerance) &&
      kkt_residual(z) <= options.kkt_tolerance) {
    return finish(SolverStatus::Converged);
  }

  double previous_violation = std::numeric_limits<double>::infinity();
  double previous_progress = std::numeric_limits<double>::infinity();
  for (int outer = 0; outer < options.max_outer_iterations; ++outer) {
    ++result.outer_iterations;
    const Eigen::VectorXd z_before = z;
    Eigen::LLT<Eigen::MatrixXd> llt;
    bool preconditioned = false;
    if constexpr (ProvidesCurvature<P>) {
      if (options.use_curvature) {
        Eigen::VectorXd weights = Eigen::VectorXd::Zero(m);
        if (m > 0) {
          const Eigen::VectorXd g0 = problem.constraints(z);
          for (Eigen::Index r = 0; r < m; ++r) {
            weights(r) = lambda(r) - rho * g0(r) > 0.0 ? rho : 0.0;
          }
        }
        Eigen::MatrixXd b = problem.curvature(z, weights);
        const double ridge = std::max(1e-12, 1e-10 * b.diagonal().cwiseAbs().maxCoeff());
        b.diagonal().array() += ridge;
        llt.compute(b);
        preconditioned = llt.info() == Eigen::Success && b.allFinite();
      }
    }
    const double inner_tol =
        m == 0 ? options.kkt_tolerance
               : std::max(options.kkt_tolerance, options.initial_inner_tolerance * std::pow(0.1, outer));
    const int remaining = options.max_iterations - result.iterations;
    const auto inner = detail::lbfgs_minimize(lagrangian, z, inner_tol,
                                              m == 0 ? remaining : std::min(remaining, options.max_inner_iterations),
                                              options,
                                              preconditioned ? &llt : nullptr);
    result.iterations += inner.iterations;

    if (m == 0) {
      return finish(inner.status);
    }

    const Eigen::VectorXd g = problem.constraints(z);
    const double violation = detail::violation_of(g);
    if (violation > std::max(previous_violation, options.constraint_tolerance) && rho < options.penalty_max) {
      // keep outer progress monotone: retry from the last accepted point, but
      // keep the multiplier estimate the rejected trial provides
      lambda = (lambda - rho * g).cwiseMax(0.0);
      z = z_before;
      rho = std::min(rho * options.penalty_growth, options.penalty_max);
      if (result.iterations >= options.max_iterations) {
        return finish(SolverStatus::MaxIterations);
      }
      continue;
    }
    // infeasibility and complementarity of the multipliers just used
    const double progress = g.cwiseMin(lambda / rho).lpNorm<Eigen::Infinity>();
    lambda = (lambda - rho * g).cwiseMax(0.0);
    result.violation_history.push_back(violation);

    if (violation <= options.constraint_tolerance && inner.status == SolverStatus::Converged &&
        inner_tol <= options.kkt_tolerance && kkt_residual(z) <= options.kkt_tolerance) {
      return finish(SolverStatus::Converged);
    }
    if (inner.status == SolverStatus::LineSearchFailure && violation <= options.constraint_tolerance) {
      return finish(SolverStatus::LineSearchFailure);
    }
    if (result.iterations >= options.max_iterations) {
      return finish(SolverStatus::MaxIterations);
    }
    // a truncated inner solve says little about the penalty, so only grow it after convergence
    if (progress > 0.25 * previous_progress && inner.status == SolverStatus::Converged) {
      rho = std::min(rho * options.penalty_growth, options.penalty_max);
    }
    previous_violation = violation;
    previous_progress = progress;
  }
  return finish(SolverStatus::MaxIterations);
}

} // namespace pmpc
