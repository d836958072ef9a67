#include "optitomo/optimize.hpp"

#include <cmath>
#include <deque>
#include <limits>

#include "optitomo/errors.hpp"

namespace optitomo {

bool BoxBounds::contains(const Eigen::VectorXd& x) const {
  return x.size() == lower.size() && (x.array() >= lower.array()).all() && (x.array() <= upper.array()).all();
}

std::string to_string(StopReason reason) {
  switch (reason) {
    case StopReason::gradient: return "gradient";
    case StopReason::max_iter: return "max_iter";
    case StopReason::line_search_failure: return "line_search_failure";
    case StopReason::stalled: return "stalled";
  }
  return "unknown";
}

namespace {

Eigen::VectorXd projected_gradient(const BoxBounds& bounds, const Eigen::VectorXd& x, const Eigen::VectorXd& g) {
  return x - bounds.project(x - g);
}

// Variables held at a bound by a gradient pointing out of the box.
Eigen::Array<bool, Eigen::Dynamic, 1> active_set(const BoxBounds& bounds, const Eigen::VectorXd& x,
                                                 const Eigen::VectorXd& g) {
  return ((x.array() <= bounds.lower.array()) && (g.array() > 0.0)) ||
         ((x.array() >= bounds.upper.array()) && (g.array() < 0.0));
}

class InverseHessian {
 public:
  InverseHessian(Eigen::VectorXd diag, bool dense, int memory, bool rescale)
      : diag_(std::move(diag)), dense_(dense), memory_(memory), rescale_(rescale) {
    reset();
  }

  void reset() {
    pairs_.clear();
    if (dense_) h_ = (gamma_ * diag_).asDiagonal();
  }

  Eigen::VectorXd apply(const Eigen::VectorXd& v) const {
    if (dense_) return h_ * v;
    // Two-loop recursion.
    Eigen::VectorXd q = v;
    std::vector<double> alpha(pairs_.size());
    for (std::size_t i = pairs_.size(); i-- > 0;) {
      alpha[i] = pairs_[i].rho * pairs_[i].s.dot(q);
      q -= alpha[i] * pairs_[i].y;
    }
    Eigen::VectorXd r = gamma_ * diag_.cwiseProduct(q);
    for (std::size_t i = 0; i < pairs_.size(); ++i) {
      const double beta = pairs_[i].rho * pairs_[i].y.dot(r);
      r += (alpha[i] - beta) * pairs_[i].s;
    }
    return r;
  }

  void update(const Eigen::VectorXd& s, const Eigen::VectorXd& y) {
    const double sy = s.dot(y);
    if (rescale_ && (!dense_ || !updated_)) {
      gamma_ = sy / y.dot(diag_.cwiseProduct(y));
      if (dense_) h_ = (gamma_ * diag_).asDiagonal();
    }
    updated_ = true;
    if (dense_) {
      const Eigen::VectorXd hy = h_ * y;
      const double yhy = y.dot(hy);
      // Two in-place rank-one updates; avoids an n x n temporary per step.
      const Eigen::VectorXd left = ((sy + yhy) / (sy * sy)) * s - hy / sy;
      h_.noalias() += left * s.transpose();
      h_.noalias() -= (s / sy) * hy.transpose();
      return;
    }
    pairs_.push_back({s, y, 1.0 / sy});
    if (static_cast<int>(pairs_.size()) > memory_) pairs_.pop_front();
  }

  Eigen::VectorXd apply_diagonal(const Eigen::VectorXd& v) const { return gamma_ * diag_.cwiseProduct(v); }

 private:
  struct Pair {
    Eigen::VectorXd s, y;
    double rho;
  };
  Eigen::VectorXd diag_;
  bool dense_;
  int memory_;
  bool rescale_;
  bool updated_ = false;
  double gamma_ = 1.0;
  Eigen::MatrixXd h_;
  std::deque<Pair> pairs_;
};

}  // namespace

BfgsResult minimize_bfgs(const Objective& objective, const BoxBounds& bounds, Eigen::VectorXd x0,
                         const BfgsOptions& options) {
  const Eigen::Index n = x0.size();
  if (bounds.lower.size() != n || bounds.upper.size() != n) throw InvalidInput("bounds do not match the dimension");
  if ((bounds.lower.array() > bounds.upper.array()).any()) throw InvalidInput("lower bound exceeds upper bound");
  if (options.max_iter < 0 || options.max_backtracks < 1) throw InvalidInput("invalid BFGS iteration limits");
  if (!(options.armijo_c1 > 0.0 && options.armijo_c1 < 1.0)) throw InvalidInput("Armijo constant must lie in (0, 1)");
  if (!(options.backtrack > 0.0 && options.backtrack < 1.0)) throw InvalidInput("backtracking factor must lie in (0, 1)");

  Eigen::VectorXd diag = options.initial_inverse_hessian.size() == 0 ? Eigen::VectorXd::Ones(n)
                                                                     : options.initial_inverse_hessian;
  if (diag.size() != n || (diag.array() <= 0.0).any()) throw InvalidInput("initial inverse Hessian must be positive");
  InverseHessian h(std::move(diag), n <= options.dense_limit, options.memory, options.rescale_initial);

  BfgsResult result;
  result.x = bounds.project(x0);
  result.final = objective(result.x);
  result.evaluations = 1;
  Eigen::VectorXd pg = projected_gradient(bounds, result.x, result.final.gradient);
  const double pg0 = pg.norm();
  result.log.push_back({0, result.final.value, result.final.data_fit, result.final.penalty, pg0, 0.0, 0});

  auto converged = [&](double norm) {
    return norm <= options.gradient_tolerance || norm <= options.relative_tolerance * pg0;
  };
  if (converged(pg0)) {
    result.reason = StopReason::gradient;
    return result;
  }

  for (int iter = 1; iter <= options.max_iter; ++iter) {
    const Eigen::VectorXd& x = result.x;
    const Eigen::VectorXd& g = result.final.gradient;
    const auto active = active_set(bounds, x, g);
    const Eigen::VectorXd g_free = active.select(Eigen::VectorXd::Zero(n), g);

    Eigen::VectorXd d = -h.apply(g_free);
    d = active.select(Eigen::VectorXd::Zero(n), d);
    if (!(g.dot(d) < 0.0)) {
      h.reset();
      d = -h.apply_diagonal(g_free);
    }

    double alpha = 1.0;
    int backtracks = 0;
    Eigen::VectorXd x_trial;
    Evaluation trial;
    bool accepted = false;
    for (; backtracks <= options.max_backtracks; ++backtracks) {
      x_trial = bounds.project(x + alpha * d);
      trial = objective(x_trial);
      ++result.evaluations;
      const double slope = std::min(0.0, g.dot(x_trial - x));
      if (std::isfinite(trial.value) && trial.value <= result.final.value + options.armijo_c1 * slope &&
          trial.value <= result.final.value) {
        accepted = true;
        break;
      }
      alpha *= options.backtrack;
    }
    if (!accepted) {
      result.reason = StopReason::line_search_failure;
      return result;
    }

    const Eigen::VectorXd s = x_trial - x;
    const Eigen::VectorXd y = trial.gradient - g;
    const double step = s.norm();
    if (step == 0.0) {
      result.reason = StopReason::stalled;
      return result;
    }
    if (s.dot(y) > 1e-12 * step * y.norm()) {
      h.update(s, y);
    } else {
      ++result.skipped_updates;
    }

    result.x = std::move(x_trial);
    result.final = std::move(trial);
    pg = projected_gradient(bounds, result.x, result.final.gradient);
    result.log.push_back({iter, result.final.value, result.final.data_fit, result.final.penalty, pg.norm(), step,
                          backtracks});
    if (converged(pg.norm())) {
      result.reason = StopReason::gradient;
      return result;
    }
  }
  result.reason = StopReason::max_iter;
  return result;
}

}  // namespace optitomo
