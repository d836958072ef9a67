#include "optitomo/ntd.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include <iomanip>
#include <ostream>

#include "optitomo/errors.hpp"
#include "optitomo/parallel.hpp"

namespace optitomo {
namespace {

void require_compatible(const NtDMatrix& a, const NtDMatrix& b) {
  if (a.lambda.rows() != b.lambda.rows() || a.lambda.cols() != b.lambda.cols()) {
    throw InvalidInput("NtD operators have different sizes");
  }
  if (a.mesh && b.mesh && a.mesh.get() != b.mesh.get()) throw InvalidInput("NtD operators on different meshes");
  if ((a.mass - b.mass).cwiseAbs().maxCoeff() > 1e-14 * a.mass.cwiseAbs().maxCoeff()) {
    throw InvalidInput("NtD operators use different boundary mass matrices");
  }
}

double weighted_integral(const Eigen::VectorXd& weights, const Eigen::VectorXd& integrals) {
  return weights.dot(integrals);
}

}  // namespace

NtDMatrix build_ntd(const AssembledSystem& sys, int threads) {
  const TriMesh& mesh = *sys.mesh();
  const auto nb = static_cast<Eigen::Index>(mesh.num_boundary_nodes());
  const auto& boundary = mesh.boundary_nodes();

  NtDMatrix ntd;
  ntd.mass = boundary_mass_matrix(mesh);
  ntd.mesh = sys.mesh();
  ntd.sigma = sys.sigma();
  ntd.q = sys.q();
  ntd.lambda.resize(nb, nb);

  // Column j is the trace of the Neumann solution for the j-th boundary hat,
  // whose load vector is column j of M scattered onto the boundary nodes.
  parallel_for(static_cast<std::size_t>(nb), threads, [&](std::size_t j) {
    Eigen::VectorXd load = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(mesh.num_nodes()));
    for (Eigen::Index i = 0; i < nb; ++i) load[boundary[static_cast<std::size_t>(i)]] = ntd.mass(i, static_cast<Eigen::Index>(j));
    const Eigen::VectorXd u = sys.solve(load);
    for (Eigen::Index i = 0; i < nb; ++i) ntd.lambda(i, static_cast<Eigen::Index>(j)) = u[boundary[static_cast<std::size_t>(i)]];
  });
  return ntd;
}

NtDMatrix build_ntd(const MeshPtr& mesh, const PiecewiseConstantField& sigma, const PiecewiseConstantField& q,
                    int threads) {
  return build_ntd(assemble(mesh, sigma, q), threads);
}

double m_symmetry_defect(const NtDMatrix& ntd) {
  const Eigen::MatrixXd ml = ntd.mass * ntd.lambda;
  return (ml - ml.transpose()).cwiseAbs().maxCoeff() / ml.cwiseAbs().maxCoeff();
}

double boundary_inner(const Eigen::VectorXd& g, const Eigen::VectorXd& h, const Eigen::MatrixXd& mass) {
  // Averaging both orders makes the result exactly symmetric in g and h.
  return 0.5 * (g.dot(mass * h) + h.dot(mass * g));
}

double boundary_inner(const BoundaryTrace& g, const BoundaryTrace& h, const Eigen::MatrixXd& mass) {
  require_same_mesh(g.mesh, h.mesh, "boundary_inner");
  return boundary_inner(g.values, h.values, mass);
}

Eigen::VectorXd difference_spectrum(const NtDMatrix& l1, const NtDMatrix& l2) {
  require_compatible(l1, l2);
  Eigen::MatrixXd d = l1.mass * (l1.lambda - l2.lambda);
  d = 0.5 * (d + d.transpose()).eval();
  // Reduce to a standard problem with the Cholesky factor of M.
  Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> solver(d, l1.mass, Eigen::EigenvaluesOnly | Eigen::Ax_lBx);
  if (solver.info() != Eigen::Success) throw NumericalFailure("generalised eigensolver failed");
  return solver.eigenvalues();
}

double opnorm_diff(const NtDMatrix& l1, const NtDMatrix& l2) {
  const Eigen::VectorXd eig = difference_spectrum(l1, l2);
  return std::max(std::abs(eig.minCoeff()), std::abs(eig.maxCoeff()));
}

double rayleigh_quotient(const NtDMatrix& ntd, const BoundaryTrace& g) {
  return boundary_inner(g.values, ntd.lambda * g.values, ntd.mass) / boundary_inner(g.values, g.values, ntd.mass);
}

AbsorptionGap monotonicity_gap_q(const PiecewiseConstantField& q1, const PiecewiseConstantField& q2,
                                 const PiecewiseConstantField& sigma, const BoundaryTrace& g) {
  const MeshPtr& mesh = sigma.mesh;
  require_same_mesh(q1.mesh, mesh, "monotonicity_gap_q");
  require_same_mesh(q2.mesh, mesh, "monotonicity_gap_q");
  const AssembledSystem sys1 = assemble(mesh, sigma, q1);
  const AssembledSystem sys2 = assemble(mesh, sigma, q2);
  const NodalField u1 = solve_neumann(sys1, g);
  const NodalField u2 = solve_neumann(sys2, g);
  const Eigen::MatrixXd mass = boundary_mass_matrix(*mesh);

  const Eigen::VectorXd u2_sq = element_mass_squares(*mesh, u2.values);
  const Eigen::VectorXd dq = q1.values - q2.values;

  // q2 - q2^2/q1 vanishes where both are zero (q supported on omega).
  Eigen::VectorXd lower_weight(q1.values.size());
  for (Eigen::Index e = 0; e < q1.values.size(); ++e) {
    const double a = q1.values[e], b = q2.values[e];
    if (a > 0.0) {
      lower_weight[e] = b - b * b / a;
    } else if (b == 0.0) {
      lower_weight[e] = 0.0;
    } else {
      throw InvalidInput("q1 vanishes where q2 does not");
    }
  }

  const Eigen::VectorXd trace_diff = restrict_to_boundary(u2).values - restrict_to_boundary(u1).values;
  return {weighted_integral(dq, u2_sq), boundary_inner(g.values, trace_diff, mass),
          weighted_integral(lower_weight, u2_sq)};
}

JointGap monotonicity_gap_joint(const PiecewiseConstantField& sigma1, const PiecewiseConstantField& q1,
                                const PiecewiseConstantField& sigma2, const PiecewiseConstantField& q2,
                                const BoundaryTrace& g) {
  const MeshPtr& mesh = sigma1.mesh;
  require_positive(q1, "q1");
  require_positive(q2, "q2");
  const AssembledSystem sys1 = assemble(mesh, sigma1, q1);
  const AssembledSystem sys2 = assemble(mesh, sigma2, q2);
  const NodalField u1 = solve_neumann(sys1, g);
  const NodalField u2 = solve_neumann(sys2, g);
  const Eigen::MatrixXd mass = boundary_mass_matrix(*mesh);

  const Eigen::VectorXd ds = sigma2.values - sigma1.values;
  const Eigen::VectorXd dq = q2.values - q1.values;
  const Eigen::VectorXd grad1 = element_gradient_squares(*mesh, u1.values);
  const Eigen::VectorXd grad2 = element_gradient_squares(*mesh, u2.values);
  const Eigen::VectorXd mass1 = element_mass_squares(*mesh, u1.values);
  const Eigen::VectorXd mass2 = element_mass_squares(*mesh, u2.values);

  const Eigen::VectorXd ws = sigma1.values.cwiseQuotient(sigma2.values).cwiseProduct(ds);
  const Eigen::VectorXd wq = q1.values.cwiseQuotient(q2.values).cwiseProduct(dq);

  const Eigen::VectorXd trace_diff = restrict_to_boundary(u1).values - restrict_to_boundary(u2).values;
  return {ds.dot(grad1) + dq.dot(mass1), boundary_inner(g.values, trace_diff, mass), ds.dot(grad2) + dq.dot(mass2),
          ws.dot(grad1) + wq.dot(mass1)};
}

double lambda_frechet_form(const PiecewiseConstantField& sigma, const PiecewiseConstantField& q,
                           const PiecewiseConstantField& d_sigma, const PiecewiseConstantField& d_q,
                           const BoundaryTrace& g, const BoundaryTrace& h) {
  const MeshPtr& mesh = sigma.mesh;
  const AssembledSystem sys = assemble(mesh, sigma, q);
  const NodalField ug = solve_neumann(sys, g);
  const NodalField uh = solve_neumann(sys, h);
  return -d_sigma.values.dot(element_gradient_products(*mesh, ug.values, uh.values)) -
         d_q.values.dot(element_mass_products(*mesh, ug.values, uh.values));
}

BoundaryTrace dirichlet_to_neumann(const AssembledSystem& sys, const BoundaryTrace& f) {
  const NodalField u = solve_dirichlet(sys, f);
  const Eigen::VectorXd flux = sys.matrix() * u.values;
  const TriMesh& mesh = *sys.mesh();
  Eigen::VectorXd boundary_flux(static_cast<Eigen::Index>(mesh.num_boundary_nodes()));
  for (std::size_t i = 0; i < mesh.num_boundary_nodes(); ++i) {
    boundary_flux[static_cast<Eigen::Index>(i)] = flux[mesh.boundary_nodes()[i]];
  }
  const Eigen::MatrixXd mass = boundary_mass_matrix(mesh);
  return {sys.mesh(), mass.llt().solve(boundary_flux)};
}

void write_ntd_csv(std::ostream& out, const NtDMatrix& ntd) {
  const Eigen::Index n = ntd.lambda.rows();
  out << "n_b," << n << '\n' << std::setprecision(17);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) out << (j ? "," : "") << ntd.lambda(i, j);
    out << '\n';
  }
}

}  // namespace optitomo
