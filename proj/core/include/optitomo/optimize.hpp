#pragma once

#include <Eigen/Core>

#include <functional>
#include <string>
#include <vector>

namespace optitomo {

/// Objective value and gradient at one point. data_fit and penalty are
/// carried through to the iteration log and do not affect the algorithm.
struct Evaluation {
  double value = 0.0;
  Eigen::VectorXd gradient;
  double data_fit = 0.0;
  double penalty = 0.0;
};

using Objective = std::function<Evaluation(const Eigen::VectorXd&)>;

struct BoxBounds {
  Eigen::VectorXd lower;
  Eigen::VectorXd upper;

  Eigen::VectorXd project(const Eigen::VectorXd& x) const { return x.cwiseMax(lower).cwiseMin(upper); }
  bool contains(const Eigen::VectorXd& x) const;
};

struct BfgsOptions {
  int max_iter = 500;
  /// Stop when ||x - P(x - grad)||_2 <= gradient_tolerance, or when it has
  /// dropped by relative_tolerance from its initial value.
  double gradient_tolerance = 1e-12;
  double relative_tolerance = 1e-10;
  double armijo_c1 = 1e-4;
  double backtrack = 0.5;
  int max_backtracks = 30;
  /// Dense inverse Hessian up to this dimension, limited memory above.
  int dense_limit = 5000;
  int memory = 20;
  /// Diagonal of the initial inverse Hessian; empty means identity.
  Eigen::VectorXd initial_inverse_hessian;
  /// Scale the initial inverse Hessian by s'y / y'H0y before the first update.
  bool rescale_initial = true;
};

struct IterationRecord {
  int iter = 0;
  double value = 0.0;
  double data_fit = 0.0;
  double penalty = 0.0;
  double grad_norm = 0.0;  // projected gradient
  double step = 0.0;       // ||x_{n+1} - x_n||_2
  int backtracks = 0;
};

enum class StopReason { gradient, max_iter, line_search_failure, stalled };

std::string to_string(StopReason reason);

struct BfgsResult {
  Eigen::VectorXd x;
  Evaluation final;
  std::vector<IterationRecord> log;
  StopReason reason = StopReason::max_iter;
  int evaluations = 0;
  int skipped_updates = 0;

  bool line_search_failed() const { return reason == StopReason::line_search_failure; }
};

/// Projected BFGS on a box: x_{n+1} = P(x_n + alpha d_n), d_n = -H_n g_n on
/// the free variables, Armijo backtracking along the projected path, update
/// skipped when s'y <= 1e-12 |s| |y|. Accepted steps never increase the
/// objective. On line-search failure the best iterate is returned.
BfgsResult minimize_bfgs(const Objective& objective, const BoxBounds& bounds, Eigen::VectorXd x0,
                         const BfgsOptions& options);

}  // namespace optitomo
