#include "optitomo/inversion.hpp"

#include <cmath>
#include <iomanip>
#include <ostream>

#include "optitomo/errors.hpp"
#include "optitomo/fem.hpp"
#include "optitomo/parallel.hpp"

namespace optitomo {

void MeasurementSet::validate() const {
  if (!mesh) throw InvalidInput("measurement set has no mesh");
  if (pairs.empty()) throw InvalidInput("measurement set is empty");
  for (const auto& p : pairs) {
    require_same_mesh(p.g.mesh, mesh, "measurement current");
    require_same_mesh(p.f.mesh, mesh, "measurement voltage");
  }
}

void write_measurements_csv(std::ostream& out, const MeasurementSet& meas) {
  out << "k,boundary_index,node_index,g,f\n" << std::setprecision(17);
  const auto& boundary = meas.mesh->boundary_nodes();
  for (std::size_t k = 0; k < meas.pairs.size(); ++k) {
    for (std::size_t i = 0; i < boundary.size(); ++i) {
      const auto idx = static_cast<Eigen::Index>(i);
      out << k + 1 << ',' << i << ',' << boundary[i] << ',' << meas.pairs[k].g.values[idx] << ','
          << meas.pairs[k].f.values[idx] << '\n';
    }
  }
}

InversionMode parse_mode(const std::string& name) {
  if (name == "q_only" || name == "q-only") return InversionMode::q_only;
  if (name == "joint") return InversionMode::joint;
  throw InvalidInput("unknown inversion mode '" + name + "' (expected q_only or joint)");
}

std::string to_string(InversionMode mode) { return mode == InversionMode::q_only ? "q_only" : "joint"; }

void InversionConfig::validate() const {
  if (!(q_lower > 0.0 && q_upper >= q_lower)) throw InvalidInput("q bounds must satisfy 0 < lower <= upper");
  if (mode == InversionMode::joint && !(sigma_lower > 0.0 && sigma_upper >= sigma_lower)) {
    throw InvalidInput("sigma bounds must satisfy 0 < lower <= upper");
  }
  if (!(rho >= 0.0)) throw InvalidInput("rho must be nonnegative");
  if (!(beta_balance > 1.0)) throw InvalidInput("beta_balance must exceed 1");
  if (!sigma_init.mesh || !q_init.mesh) throw InvalidInput("initial guesses are missing");
  require_same_mesh(sigma_init.mesh, q_init.mesh, "initial guesses");
  require_positive(sigma_init, "sigma");
  require_positive(q_init, "q");
  if (!(balance_tolerance > 0.0) || balance_max_outer < 1) throw InvalidInput("invalid balancing controls");
}

namespace {

struct PairSolution {
  Eigen::VectorXd ug;
  Eigen::VectorXd uf;
};

std::vector<PairSolution> solve_pairs(const AssembledSystem& sys, const MeasurementSet& meas, int threads) {
  std::vector<PairSolution> out(meas.pairs.size());
  parallel_for(out.size(), threads, [&](std::size_t k) {
    out[k].ug = solve_neumann(sys, meas.pairs[k].g).values;
    out[k].uf = solve_dirichlet(sys, meas.pairs[k].f).values;
  });
  return out;
}

KvTerms terms_from(const AssembledSystem& sys, const std::vector<PairSolution>& sols,
                   const PiecewiseConstantField& sigma, const PiecewiseConstantField& q, double rho,
                   InversionMode mode) {
  KvTerms t;
  for (const auto& s : sols) t.data_fit += energy(sys, s.ug - s.uf);
  const TriMesh& mesh = *sigma.mesh;
  for (std::size_t e = 0; e < mesh.num_elements(); ++e) {
    const auto idx = static_cast<Eigen::Index>(e);
    double sq = q.values[idx] * q.values[idx];
    if (mode == InversionMode::joint) sq += sigma.values[idx] * sigma.values[idx];
    t.penalty_integral += mesh.area(e) * sq;
  }
  t.penalty = 0.5 * rho * t.penalty_integral;
  t.value = t.data_fit + t.penalty;
  return t;
}

void check_inputs(const MeasurementSet& meas, const PiecewiseConstantField& sigma, const PiecewiseConstantField& q,
                  double rho) {
  meas.validate();
  require_same_mesh(sigma.mesh, meas.mesh, "kv sigma");
  require_same_mesh(q.mesh, meas.mesh, "kv q");
  if (!(rho >= 0.0)) throw InvalidInput("rho must be nonnegative");
}

}  // namespace

KvTerms kv_terms(const MeasurementSet& meas, const PiecewiseConstantField& sigma, const PiecewiseConstantField& q,
                 double rho, InversionMode mode, int threads) {
  check_inputs(meas, sigma, q, rho);
  const AssembledSystem sys = assemble(meas.mesh, sigma, q);
  return terms_from(sys, solve_pairs(sys, meas, threads), sigma, q, rho, mode);
}

double kv_value(const MeasurementSet& meas, const PiecewiseConstantField& sigma, const PiecewiseConstantField& q,
                double rho, InversionMode mode, int threads) {
  return kv_terms(meas, sigma, q, rho, mode, threads).value;
}

KvGradient kv_gradient(const MeasurementSet& meas, const PiecewiseConstantField& sigma, const PiecewiseConstantField& q,
                       double rho, InversionMode mode, int threads) {
  check_inputs(meas, sigma, q, rho);
  const AssembledSystem sys = assemble(meas.mesh, sigma, q);
  const auto sols = solve_pairs(sys, meas, threads);
  const TriMesh& mesh = *meas.mesh;
  const auto ne = static_cast<Eigen::Index>(mesh.num_elements());

  Eigen::VectorXd gs = Eigen::VectorXd::Zero(ne);
  Eigen::VectorXd gq = Eigen::VectorXd::Zero(ne);
  for (const auto& s : sols) {
    gq += element_mass_squares(mesh, s.uf) - element_mass_squares(mesh, s.ug);
    if (mode == InversionMode::joint) {
      gs += element_gradient_squares(mesh, s.uf) - element_gradient_squares(mesh, s.ug);
    }
  }
  const Eigen::Map<const Eigen::VectorXd> areas(mesh.areas().data(), ne);
  gq += rho * areas.cwiseProduct(q.values);
  if (mode == InversionMode::joint) gs += rho * areas.cwiseProduct(sigma.values);

  return {PiecewiseConstantField(meas.mesh, std::move(gs)), PiecewiseConstantField(meas.mesh, std::move(gq)),
          terms_from(sys, sols, sigma, q, rho, mode)};
}

Reconstruction bfgs_minimize(const MeasurementSet& meas, const InversionConfig& config) {
  meas.validate();
  config.validate();
  require_same_mesh(config.q_init.mesh, meas.mesh, "initial guess");
  const MeshPtr& mesh = meas.mesh;
  const auto ne = static_cast<Eigen::Index>(mesh->num_elements());
  const bool joint = config.mode == InversionMode::joint;
  const Eigen::Index n = joint ? 2 * ne : ne;

  BoxBounds bounds{Eigen::VectorXd(n), Eigen::VectorXd(n)};
  Eigen::VectorXd x0(n);
  if (joint) {
    bounds.lower << Eigen::VectorXd::Constant(ne, config.sigma_lower), Eigen::VectorXd::Constant(ne, config.q_lower);
    bounds.upper << Eigen::VectorXd::Constant(ne, config.sigma_upper), Eigen::VectorXd::Constant(ne, config.q_upper);
    x0 << config.sigma_init.values, config.q_init.values;
  } else {
    bounds.lower.setConstant(config.q_lower);
    bounds.upper.setConstant(config.q_upper);
    x0 = config.q_init.values;
  }
  if (!bounds.contains(x0)) throw InvalidInput("initial guess lies outside the admissible box");

  auto unpack = [&](const Eigen::VectorXd& x) {
    if (joint) {
      return std::pair{PiecewiseConstantField(mesh, x.head(ne)), PiecewiseConstantField(mesh, x.tail(ne))};
    }
    return std::pair{config.sigma_init, PiecewiseConstantField(mesh, x)};
  };

  const Objective objective = [&](const Eigen::VectorXd& x) {
    const auto [sigma, q] = unpack(x);
    KvGradient grad = kv_gradient(meas, sigma, q, config.rho, config.mode, config.threads);
    Evaluation ev;
    ev.value = grad.terms.value;
    ev.data_fit = grad.terms.data_fit;
    ev.penalty = grad.terms.penalty;
    ev.gradient.resize(n);
    if (joint) {
      ev.gradient << grad.sigma.values, grad.q.values;
    } else {
      ev.gradient = grad.q.values;
    }
    return ev;
  };

  BfgsOptions options = config.bfgs;
  if (config.area_scaling && options.initial_inverse_hessian.size() == 0) {
    const Eigen::Map<const Eigen::VectorXd> areas(mesh->areas().data(), ne);
    const Eigen::VectorXd inv = areas.cwiseInverse();
    options.initial_inverse_hessian.resize(n);
    if (joint) {
      options.initial_inverse_hessian << inv, inv;
    } else {
      options.initial_inverse_hessian = inv;
    }
  }

  Reconstruction rec;
  rec.optimizer = minimize_bfgs(objective, bounds, std::move(x0), options);
  auto [sigma, q] = unpack(rec.optimizer.x);
  rec.sigma = std::move(sigma);
  rec.q = std::move(q);
  rec.terms.data_fit = rec.optimizer.final.data_fit;
  rec.terms.penalty = rec.optimizer.final.penalty;
  rec.terms.value = rec.optimizer.final.value;
  const auto& areas = mesh->areas();
  for (Eigen::Index e = 0; e < ne; ++e) {
    double sq = rec.q.values[e] * rec.q.values[e];
    if (joint) sq += rec.sigma.values[e] * rec.sigma.values[e];
    rec.terms.penalty_integral += areas[static_cast<std::size_t>(e)] * sq;
  }
  return rec;
}

BalanceResult balancing_rho(const MeasurementSet& meas, const InversionConfig& config) {
  config.validate();
  if (!(config.rho_init > 0.0)) throw InvalidInput("rho_init must be positive for balancing");
  const double weight = config.beta_balance - 1.0;

  BalanceResult out;
  InversionConfig step = config;
  step.rho = config.rho_init;
  for (int outer = 0; outer < config.balance_max_outer; ++outer) {
    Reconstruction rec = bfgs_minimize(meas, step);
    const double f = rec.terms.data_fit;
    const double p = rec.terms.penalty_integral;
    BalanceStep entry{step.rho, f, p, 0.0, static_cast<int>(rec.optimizer.log.size()) - 1};

    if (!(f > 0.0)) {
      entry.next_rho = 0.0;
      out.history.push_back(entry);
      out.rho = 0.0;
      out.degenerate = true;
      out.relative_residual = 0.0;
      out.reconstruction = std::move(rec);
      return out;
    }
    entry.next_rho = 2.0 * weight * f / p;
    out.history.push_back(entry);
    out.rho = step.rho;
    out.relative_residual = std::abs(weight * f - 0.5 * step.rho * p) / (weight * f);
    out.reconstruction = std::move(rec);

    if (std::abs(entry.next_rho - step.rho) <= config.balance_tolerance * std::min(step.rho, entry.next_rho)) {
      out.converged = true;
      return out;
    }
    step.rho = entry.next_rho;
    step.sigma_init = out.reconstruction.sigma;
    step.q_init = out.reconstruction.q;
  }
  return out;
}

void write_iteration_log(std::ostream& out, const std::vector<IterationRecord>& log) {
  out << "iter,J,F,penalty,grad_norm,step\n" << std::setprecision(17);
  for (const auto& r : log) {
    out << r.iter << ',' << r.value << ',' << r.data_fit << ',' << r.penalty << ',' << r.grad_norm << ',' << r.step
        << '\n';
  }
}

bool monotone_descent(const std::vector<IterationRecord>& log) {
  for (std::size_t i = 1; i < log.size(); ++i) {
    if (log[i].value > log[i - 1].value) return false;
  }
  return true;
}

}  // namespace optitomo
