#include "optitomo/locpot.hpp"

#include <cmath>
#include <iomanip>
#include <limits>
#include <ostream>
#include <random>
#include <sstream>

#include "optitomo/errors.hpp"
#include "optitomo/ntd.hpp"
#include "optitomo/parallel.hpp"

namespace optitomo {

int compute_K(double a, double b) {
  if (!(a > 0.0) || !(b >= a)) throw InvalidInput("coefficient bounds must satisfy b >= a > 0");
  return static_cast<int>(std::floor(3.0 * (b / a - 1.0))) + 3;
}

ProbingSetup make_probing_setup(MeshPtr mesh, Partition partition, double a, double b, double sigma_out,
                                double sigma_in) {
  validate_partition(*mesh, partition);
  if (!(b > a)) throw InvalidInput("probing setup requires b > a");
  ProbingSetup setup;
  setup.K = compute_K(a, b);
  setup.a = a;
  setup.b = b;
  Eigen::VectorXd sigma(static_cast<Eigen::Index>(mesh->num_elements()));
  for (std::size_t e = 0; e < mesh->num_elements(); ++e) {
    sigma[static_cast<Eigen::Index>(e)] = partition.in_omega(e) ? sigma_in : sigma_out;
  }
  setup.sigma = PiecewiseConstantField(mesh, std::move(sigma));
  require_positive(setup.sigma, "sigma");
  setup.mesh = std::move(mesh);
  setup.partition = std::move(partition);
  return setup;
}

PiecewiseConstantField eta_field(const ProbingSetup& setup, int j, int k) {
  if (j < 1 || j > setup.partition.num_cells) throw InvalidInput("cell index j out of range");
  if (k < 1 || k > setup.K) throw InvalidInput("level index k out of range");
  const auto& labels = setup.partition.labels;
  Eigen::VectorXd values(static_cast<Eigen::Index>(labels.size()));
  for (std::size_t e = 0; e < labels.size(); ++e) {
    const int label = labels[e];
    values[static_cast<Eigen::Index>(e)] = label == 0 ? 0.0 : label == j ? (k + 4) * setup.a / 3.0 : setup.a / 3.0;
  }
  return {setup.mesh, std::move(values)};
}

int bracket_index(const ProbingSetup& setup, double value) {
  if (value < setup.a || value > setup.b) throw InvalidInput("coefficient value outside [a, b]");
  const int k = static_cast<int>(std::floor(3.0 * value / setup.a)) - 2;
  if (k < 1 || k > setup.K) throw InvalidInput("no probing level brackets the coefficient value");
  return k;
}

ProbeOperators::ProbeOperators(const ProbingSetup& setup, const PiecewiseConstantField& q)
    : sys_(assemble(setup.mesh, setup.sigma, q)), mass_(boundary_mass_matrix(*setup.mesh)) {
  for (std::size_t e = 0; e < setup.partition.labels.size(); ++e) {
    if (setup.partition.in_omega(e)) omega_elements_.push_back(e);
  }
  omega_areas_.resize(static_cast<Eigen::Index>(omega_elements_.size()));
  for (std::size_t i = 0; i < omega_elements_.size(); ++i) {
    omega_areas_[static_cast<Eigen::Index>(i)] = setup.mesh->area(omega_elements_[i]);
  }
}

Eigen::VectorXd ProbeOperators::forward(const Eigen::VectorXd& f) const {
  const TriMesh& mesh = *sys_.mesh();
  Eigen::VectorXd load = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(mesh.num_nodes()));
  for (std::size_t i = 0; i < omega_elements_.size(); ++i) {
    const std::size_t e = omega_elements_[i];
    const double share = f[static_cast<Eigen::Index>(i)] * mesh.area(e) / 3.0;
    for (int v : mesh.elements()[e]) load[v] += share;
  }
  const Eigen::VectorXd v = sys_.solve(load);
  Eigen::VectorXd trace(static_cast<Eigen::Index>(mesh.num_boundary_nodes()));
  for (std::size_t i = 0; i < mesh.num_boundary_nodes(); ++i) trace[static_cast<Eigen::Index>(i)] = v[mesh.boundary_nodes()[i]];
  return trace;
}

Eigen::VectorXd ProbeOperators::neumann(const Eigen::VectorXd& g) const {
  return sys_.solve(sys_.boundary_load(BoundaryTrace(sys_.mesh(), g)));
}

Eigen::VectorXd ProbeOperators::adjoint(const Eigen::VectorXd& g) const {
  const TriMesh& mesh = *sys_.mesh();
  const Eigen::VectorXd u = neumann(g);
  Eigen::VectorXd out(static_cast<Eigen::Index>(omega_elements_.size()));
  for (std::size_t i = 0; i < omega_elements_.size(); ++i) {
    const auto& el = mesh.elements()[omega_elements_[i]];
    out[static_cast<Eigen::Index>(i)] = (u[el[0]] + u[el[1]] + u[el[2]]) / 3.0;
  }
  return out;
}

double ProbeOperators::omega_inner(const Eigen::VectorXd& f, const Eigen::VectorXd& h) const {
  return f.cwiseProduct(omega_areas_).dot(h);
}

double ProbeOperators::boundary_inner(const Eigen::VectorXd& g, const Eigen::VectorXd& h) const {
  return g.dot(mass_ * h);
}

namespace {

struct SplitIntegrals {
  double inside = 0.0;   // int_{D_j} u^2
  double outside = 0.0;  // int_{omega \ D_j} u^2
};

SplitIntegrals split_integrals(const ProbingSetup& setup, int j, const Eigen::VectorXd& u) {
  const Eigen::VectorXd sq = element_mass_squares(*setup.mesh, u);
  SplitIntegrals out;
  for (std::size_t e = 0; e < setup.partition.labels.size(); ++e) {
    const int label = setup.partition.labels[e];
    if (label == j) out.inside += sq[static_cast<Eigen::Index>(e)];
    else if (label > 0) out.outside += sq[static_cast<Eigen::Index>(e)];
  }
  return out;
}

}  // namespace

double localization_certificate(const ProbingSetup& setup, int j, const Eigen::VectorXd& u) {
  const SplitIntegrals s = split_integrals(setup, j, u);
  return 0.5 * s.inside - (1.5 * setup.b / setup.a - 0.5) * s.outside;
}

double localization_functional(const ProbingSetup& setup, int j, const BoundaryTrace& g,
                               const PiecewiseConstantField& q) {
  const AssembledSystem sys = assemble(setup.mesh, setup.sigma, q);
  const SplitIntegrals s = split_integrals(setup, j, solve_neumann(sys, g).values);
  return s.inside - s.outside;
}

double adjoint_defect(const ProbeOperators& ops, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  Eigen::VectorXd f(static_cast<Eigen::Index>(ops.omega_elements().size()));
  Eigen::VectorXd g(ops.mass().rows());
  for (auto& v : f) v = unit(rng);
  for (auto& v : g) v = unit(rng);
  const double lhs = ops.boundary_inner(ops.forward(f), g);
  const double rhs = ops.omega_inner(f, ops.adjoint(g));
  return std::abs(lhs - rhs) / std::max(std::abs(lhs), std::abs(rhs));
}

LocalizedCurrent find_localized_current(const ProbingSetup& setup, int j, int k, int max_iter) {
  if (!(setup.certificate_target > 1.0)) throw InvalidInput("certificate target must exceed 1");
  const ProbeOperators ops(setup, eta_field(setup, j, k));
  if (adjoint_defect(ops, static_cast<std::uint64_t>(j * 1000 + k)) > 1e-12) {
    throw NumericalFailure("probe operators fail the adjoint consistency check");
  }
  const auto& omega = ops.omega_elements();
  Eigen::VectorXd target = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(omega.size()));
  for (std::size_t i = 0; i < omega.size(); ++i) {
    if (setup.partition.labels[omega[i]] == j) target[static_cast<Eigen::Index>(i)] = 3.0;
  }

  const auto nb = static_cast<Eigen::Index>(setup.mesh->num_boundary_nodes());
  LocalizedCurrent current;
  current.j = j;
  current.k = k;

  // CGLS for T g = 3 chi_{D_j} with T = A*, T^# = A.
  Eigen::VectorXd x = Eigen::VectorXd::Zero(nb);
  Eigen::VectorXd r = target;
  Eigen::VectorXd s = ops.forward(r);
  Eigen::VectorXd p = s;
  double gamma = ops.boundary_inner(s, s);
  current.residual_history.push_back(std::sqrt(ops.omega_inner(r, r)));

  double best_beta = -std::numeric_limits<double>::infinity();
  for (int it = 1; it <= max_iter; ++it) {
    const Eigen::VectorXd t = ops.adjoint(p);
    const double delta = ops.omega_inner(t, t);
    if (!(delta > 0.0) || !(gamma > 0.0)) break;
    const double alpha = gamma / delta;
    x += alpha * p;
    r -= alpha * t;
    current.residual_history.push_back(std::sqrt(ops.omega_inner(r, r)));

    const double beta = localization_certificate(setup, j, ops.neumann(x));
    best_beta = std::max(best_beta, beta);
    if (beta > 0.0) {
      // beta is quadratic in g: scale the iterate onto the certificate target.
      const double scale = std::sqrt(setup.certificate_target / beta);
      current.g = BoundaryTrace(setup.mesh, scale * x);
      current.raw_beta = beta;
      current.scale = scale;
      current.beta = localization_certificate(setup, j, ops.neumann(current.g.values));
      current.cg_iterations = it;
      current.norm_sq = ops.boundary_inner(current.g.values, current.g.values);
      if (!(current.beta > 1.0)) throw NumericalFailure("rescaled certificate does not exceed 1");
      return current;
    }

    s = ops.forward(r);
    const double gamma_next = ops.boundary_inner(s, s);
    p = s + (gamma_next / gamma) * p;
    gamma = gamma_next;
  }

  std::ostringstream os;
  os << "no localized current for (j, k) = (" << j << ", " << k << ") within " << max_iter
     << " CG iterations; best certificate " << best_beta;
  throw NumericalFailure(os.str());
}

double verify_localization(const ProbingSetup& setup, const LocalizedCurrent& current,
                           const PiecewiseConstantField& q) {
  require_same_mesh(q.mesh, setup.mesh, "verify_localization");
  double cell_value = std::numeric_limits<double>::quiet_NaN();
  for (std::size_t e = 0; e < setup.partition.labels.size(); ++e) {
    const int label = setup.partition.labels[e];
    const double v = q.values[static_cast<Eigen::Index>(e)];
    if (label == 0) {
      if (v != 0.0) throw InvalidInput("q must vanish outside omega");
      continue;
    }
    if (v < setup.a || v > setup.b) throw InvalidInput("q outside the admissible bounds [a, b]");
    if (label == current.j) {
      if (std::isnan(cell_value)) cell_value = v;
      else if (v != cell_value) throw InvalidInput("q is not constant on the probed cell");
    }
  }
  if (bracket_index(setup, cell_value) != current.k) {
    throw InvalidInput("localized current level k does not bracket q on the probed cell");
  }
  return localization_functional(setup, current.j, current.g, q);
}

PiecewiseConstantField cellwise_field(const ProbingSetup& setup, const std::vector<double>& cell_values) {
  if (static_cast<int>(cell_values.size()) != setup.partition.num_cells) throw InvalidInput("one value per cell required");
  for (const double v : cell_values)
    if (!(v >= setup.a && v <= setup.b)) throw InvalidInput("cell value outside [a, b]");
  Eigen::VectorXd values(static_cast<Eigen::Index>(setup.partition.labels.size()));
  for (std::size_t e = 0; e < setup.partition.labels.size(); ++e) {
    const int label = setup.partition.labels[e];
    values[static_cast<Eigen::Index>(e)] = label == 0 ? 0.0 : cell_values[static_cast<std::size_t>(label - 1)];
  }
  return {setup.mesh, std::move(values)};
}

LipschitzResult lipschitz_constant(const ProbingSetup& setup, int threads) {
  const int n = setup.partition.num_cells;
  const int levels = setup.K;
  LipschitzResult result;
  result.currents.resize(static_cast<std::size_t>(n) * levels);
  parallel_for(result.currents.size(), threads, [&](std::size_t index) {
    const int j = static_cast<int>(index) / levels + 1;
    const int k = static_cast<int>(index) % levels + 1;
    result.currents[index] = find_localized_current(setup, j, k, setup.max_iter);
  });
  const LipschitzResult constants = lipschitz_from_currents(result.currents);
  result.L = constants.L;
  result.stability_constant = constants.stability_constant;
  return result;
}

LipschitzResult lipschitz_from_currents(std::vector<LocalizedCurrent> currents) {
  if (currents.empty()) throw InvalidInput("no localized currents");
  double max_norm = 0.0;
  for (const auto& c : currents) {
    if (!(c.beta > 1.0)) throw InvalidInput("localized current without an accepted certificate");
    max_norm = std::max(max_norm, c.norm_sq);
  }
  LipschitzResult result;
  result.stability_constant = max_norm;
  result.L = 1.0 / max_norm;
  result.currents = std::move(currents);
  return result;
}

std::vector<StabilitySample> sample_stability(const ProbingSetup& setup, double stability_constant, int count,
                                              std::uint64_t seed, int threads) {
  if (count < 0) throw InvalidInput("sample count must be nonnegative");
  const auto n = static_cast<std::size_t>(setup.partition.num_cells);
  std::mt19937_64 rng(seed);
  auto uniform = [&] { return setup.a + (setup.b - setup.a) * static_cast<double>(rng() >> 11) * 0x1.0p-53; };
  std::vector<StabilitySample> samples(static_cast<std::size_t>(count));
  for (auto& s : samples) {
    do {
      s.q1.resize(n);
      s.q2.resize(n);
      for (auto& v : s.q1) v = uniform();
      for (auto& v : s.q2) v = uniform();
    } while (s.q1 == s.q2);
  }
  parallel_for(samples.size(), threads, [&](std::size_t i) {
    auto& s = samples[i];
    const auto q1 = cellwise_field(setup, s.q1);
    const auto q2 = cellwise_field(setup, s.q2);
    s.opnorm = opnorm_diff(build_ntd(setup.mesh, setup.sigma, q1, 1), build_ntd(setup.mesh, setup.sigma, q2, 1));
    s.max_diff = (q1.values - q2.values).cwiseAbs().maxCoeff();
    s.bound = stability_constant * s.opnorm;
    s.violated = s.max_diff > s.bound;
  });
  return samples;
}

void write_stability_csv(std::ostream& out, const std::vector<StabilitySample>& samples) {
  out << "pair,max_diff,opnorm,bound,violated\n" << std::setprecision(17);
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const auto& s = samples[i];
    out << i + 1 << ',' << s.max_diff << ',' << s.opnorm << ',' << s.bound << ',' << (s.violated ? 1 : 0) << '\n';
  }
}

void write_certificates_csv(std::ostream& out, const LipschitzResult& result) {
  out << "j,k,beta,raw_beta,scale,cg_iterations,norm_sq\n" << std::setprecision(17);
  for (const auto& c : result.currents) {
    out << c.j << ',' << c.k << ',' << c.beta << ',' << c.raw_beta << ',' << c.scale << ',' << c.cg_iterations << ',' << c.norm_sq << '\n';
  }
}

}  // namespace optitomo
