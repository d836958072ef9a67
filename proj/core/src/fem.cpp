#include "optitomo/fem.hpp"

#include <Eigen/SparseCholesky>

#include <cmath>
#include <mutex>
#include <sstream>

#include "optitomo/errors.hpp"

namespace optitomo {
namespace {

using Solver = Eigen::SimplicialLDLT<SparseMatrix>;

// Gradients of the three barycentric coordinates on a triangle.
std::array<Eigen::Vector2d, 3> shape_gradients(const TriMesh& mesh, std::size_t e) {
  const auto& el = mesh.elements()[e];
  const Point2 p0 = mesh.nodes()[el[0]], p1 = mesh.nodes()[el[1]], p2 = mesh.nodes()[el[2]];
  const double twice_area = 2.0 * mesh.area(e);
  return {Eigen::Vector2d((p1.y - p2.y) / twice_area, (p2.x - p1.x) / twice_area),
          Eigen::Vector2d((p2.y - p0.y) / twice_area, (p0.x - p2.x) / twice_area),
          Eigen::Vector2d((p0.y - p1.y) / twice_area, (p1.x - p0.x) / twice_area)};
}

void check_residual(const SparseMatrix& a, const Eigen::VectorXd& x, const Eigen::VectorXd& rhs) {
  const double rhs_norm = rhs.norm();
  if (rhs_norm == 0.0) return;
  const double residual = (a * x - rhs).norm() / rhs_norm;
  if (!(residual <= 1e-8)) {
    std::ostringstream os;
    os << "linear solve failed: relative residual " << residual;
    throw NumericalFailure(os.str());
  }
}

}  // namespace

struct AssembledSystem::Factorizations {
  Solver full;
  std::once_flag interior_once;
  Solver interior;
  SparseMatrix interior_matrix;
  SparseMatrix interior_boundary;
  std::vector<int> interior_nodes;
};

AssembledSystem::AssembledSystem(PiecewiseConstantField sigma, PiecewiseConstantField q)
    : sigma_(std::move(sigma)), q_(std::move(q)), factors_(std::make_unique<Factorizations>()) {
  require_same_mesh(sigma_.mesh, q_.mesh, "assemble");
  require_positive(sigma_, "sigma");
  const TriMesh& mesh = *sigma_.mesh;
  bool any_positive = false;
  for (Eigen::Index e = 0; e < q_.values.size(); ++e) {
    if (q_.values[e] < 0.0) throw InvalidInput("q must be non-negative");
    if (q_.values[e] > 0.0) any_positive = true;
  }
  if (!any_positive) throw InvalidInput("q vanishes identically; the Neumann problem is singular");

  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(9 * mesh.num_elements());
  for (std::size_t e = 0; e < mesh.num_elements(); ++e) {
    const auto& el = mesh.elements()[e];
    const auto grads = shape_gradients(mesh, e);
    const double area = mesh.area(e);
    const double s = sigma_.values[static_cast<Eigen::Index>(e)];
    const double m = q_.values[static_cast<Eigen::Index>(e)] * area / 12.0;
    for (int i = 0; i < 3; ++i) {
      for (int j = 0; j < 3; ++j) {
        const double value = s * area * grads[i].dot(grads[j]) + m * (i == j ? 2.0 : 1.0);
        triplets.emplace_back(el[i], el[j], value);
      }
    }
  }
  const auto n = static_cast<Eigen::Index>(mesh.num_nodes());
  matrix_.resize(n, n);
  matrix_.setFromTriplets(triplets.begin(), triplets.end());
  matrix_.makeCompressed();

  factors_->full.compute(matrix_);
  if (factors_->full.info() != Eigen::Success) throw NumericalFailure("sparse LDL^T factorisation failed");
}

AssembledSystem::~AssembledSystem() = default;
AssembledSystem::AssembledSystem(AssembledSystem&&) noexcept = default;
AssembledSystem& AssembledSystem::operator=(AssembledSystem&&) noexcept = default;

Eigen::VectorXd AssembledSystem::boundary_load(const BoundaryTrace& g) const {
  require_same_mesh(g.mesh, mesh(), "boundary_load");
  const TriMesh& m = *mesh();
  Eigen::VectorXd load = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(m.num_nodes()));
  const auto& boundary = m.boundary_nodes();
  const std::size_t nb = boundary.size();
  for (std::size_t i = 0; i < nb; ++i) {
    const std::size_t j = (i + 1) % nb;
    const Point2 a = m.nodes()[boundary[i]], b = m.nodes()[boundary[j]];
    const double length = std::hypot(b.x - a.x, b.y - a.y);
    const double gi = g.values[static_cast<Eigen::Index>(i)], gj = g.values[static_cast<Eigen::Index>(j)];
    load[boundary[i]] += length / 6.0 * (2.0 * gi + gj);
    load[boundary[j]] += length / 6.0 * (gi + 2.0 * gj);
  }
  return load;
}

Eigen::VectorXd AssembledSystem::source_load(const PiecewiseConstantField& source) const {
  require_same_mesh(source.mesh, mesh(), "source_load");
  const TriMesh& m = *mesh();
  Eigen::VectorXd load = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(m.num_nodes()));
  for (std::size_t e = 0; e < m.num_elements(); ++e) {
    const double share = source.values[static_cast<Eigen::Index>(e)] * m.area(e) / 3.0;
    if (share == 0.0) continue;
    for (int v : m.elements()[e]) load[v] += share;
  }
  return load;
}

Eigen::VectorXd AssembledSystem::solve(const Eigen::VectorXd& rhs) const {
  Eigen::VectorXd x = factors_->full.solve(rhs);
  check_residual(matrix_, x, rhs);
  return x;
}

Eigen::MatrixXd AssembledSystem::solve(const Eigen::MatrixXd& rhs) const {
  Eigen::MatrixXd x = factors_->full.solve(rhs);
  for (Eigen::Index c = 0; c < rhs.cols(); ++c) check_residual(matrix_, x.col(c), rhs.col(c));
  return x;
}

Eigen::VectorXd AssembledSystem::solve_with_boundary_values(const Eigen::VectorXd& boundary_values) const {
  const TriMesh& m = *mesh();
  auto& f = *factors_;
  std::call_once(f.interior_once, [&] {
    std::vector<int> interior_index(m.num_nodes(), -1);
    for (std::size_t i = 0; i < m.num_nodes(); ++i) {
      if (m.boundary_position(static_cast<int>(i)) < 0) {
        interior_index[i] = static_cast<int>(f.interior_nodes.size());
        f.interior_nodes.push_back(static_cast<int>(i));
      }
    }
    const auto ni = static_cast<Eigen::Index>(f.interior_nodes.size());
    const auto nb = static_cast<Eigen::Index>(m.num_boundary_nodes());
    std::vector<Eigen::Triplet<double>> ii, ib;
    for (Eigen::Index col = 0; col < matrix_.outerSize(); ++col) {
      for (SparseMatrix::InnerIterator it(matrix_, col); it; ++it) {
        const int r = interior_index[static_cast<std::size_t>(it.row())];
        if (r < 0) continue;
        const int c = interior_index[static_cast<std::size_t>(it.col())];
        if (c >= 0) {
          ii.emplace_back(r, c, it.value());
        } else {
          ib.emplace_back(r, m.boundary_position(static_cast<int>(it.col())), it.value());
        }
      }
    }
    f.interior_matrix.resize(ni, ni);
    f.interior_matrix.setFromTriplets(ii.begin(), ii.end());
    f.interior_boundary.resize(ni, nb);
    f.interior_boundary.setFromTriplets(ib.begin(), ib.end());
    f.interior.compute(f.interior_matrix);
    if (f.interior.info() != Eigen::Success) throw NumericalFailure("interior factorisation failed");
  });

  const Eigen::VectorXd rhs = -(f.interior_boundary * boundary_values);
  Eigen::VectorXd interior = f.interior.solve(rhs);
  check_residual(f.interior_matrix, interior, rhs);

  Eigen::VectorXd u(static_cast<Eigen::Index>(m.num_nodes()));
  for (std::size_t k = 0; k < f.interior_nodes.size(); ++k) u[f.interior_nodes[k]] = interior[static_cast<Eigen::Index>(k)];
  const auto& boundary = m.boundary_nodes();
  for (std::size_t i = 0; i < boundary.size(); ++i) u[boundary[i]] = boundary_values[static_cast<Eigen::Index>(i)];
  return u;
}

AssembledSystem assemble(const MeshPtr& mesh, const PiecewiseConstantField& sigma, const PiecewiseConstantField& q) {
  require_same_mesh(mesh, sigma.mesh, "assemble");
  return AssembledSystem(sigma, q);
}

NodalField solve_neumann(const AssembledSystem& sys, const BoundaryTrace& g) {
  return {sys.mesh(), sys.solve(sys.boundary_load(g))};
}

NodalField solve_dirichlet(const AssembledSystem& sys, const BoundaryTrace& f) {
  require_same_mesh(f.mesh, sys.mesh(), "solve_dirichlet");
  return {sys.mesh(), sys.solve_with_boundary_values(f.values)};
}

NodalField solve_source(const AssembledSystem& sys, const PiecewiseConstantField& source) {
  return {sys.mesh(), sys.solve(sys.source_load(source))};
}

NodalField solve_source(const AssembledSystem& sys, const PiecewiseConstantField& source, const Partition& partition,
                        const std::vector<int>& support_labels) {
  Eigen::VectorXd masked = Eigen::VectorXd::Zero(source.values.size());
  for (std::size_t e = 0; e < partition.labels.size(); ++e) {
    for (int label : support_labels) {
      if (partition.labels[e] == label) masked[static_cast<Eigen::Index>(e)] = source.values[static_cast<Eigen::Index>(e)];
    }
  }
  return solve_source(sys, PiecewiseConstantField(source.mesh, std::move(masked)));
}

std::vector<Eigen::Vector2d> element_gradients(const NodalField& u) {
  const TriMesh& mesh = *u.mesh;
  std::vector<Eigen::Vector2d> out(mesh.num_elements());
  for (std::size_t e = 0; e < mesh.num_elements(); ++e) {
    const auto grads = shape_gradients(mesh, e);
    const auto& el = mesh.elements()[e];
    out[e] = u.values[el[0]] * grads[0] + u.values[el[1]] * grads[1] + u.values[el[2]] * grads[2];
  }
  return out;
}

Eigen::VectorXd element_mass_products(const TriMesh& mesh, const Eigen::VectorXd& u, const Eigen::VectorXd& v) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(mesh.num_elements()));
  for (std::size_t e = 0; e < mesh.num_elements(); ++e) {
    const auto& el = mesh.elements()[e];
    const double u0 = u[el[0]], u1 = u[el[1]], u2 = u[el[2]];
    const double v0 = v[el[0]], v1 = v[el[1]], v2 = v[el[2]];
    // int phi_i phi_j = |e| (1 + delta_ij) / 12
    out[static_cast<Eigen::Index>(e)] =
        mesh.area(e) / 12.0 * ((u0 * v0 + u1 * v1 + u2 * v2) + (u0 + u1 + u2) * (v0 + v1 + v2));
  }
  return out;
}

Eigen::VectorXd element_gradient_products(const TriMesh& mesh, const Eigen::VectorXd& u, const Eigen::VectorXd& v) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(mesh.num_elements()));
  for (std::size_t e = 0; e < mesh.num_elements(); ++e) {
    const auto grads = shape_gradients(mesh, e);
    const auto& el = mesh.elements()[e];
    const Eigen::Vector2d gu = u[el[0]] * grads[0] + u[el[1]] * grads[1] + u[el[2]] * grads[2];
    const Eigen::Vector2d gv = v[el[0]] * grads[0] + v[el[1]] * grads[1] + v[el[2]] * grads[2];
    out[static_cast<Eigen::Index>(e)] = mesh.area(e) * gu.dot(gv);
  }
  return out;
}

Eigen::VectorXd element_means(const TriMesh& mesh, const Eigen::VectorXd& u) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(mesh.num_elements()));
  for (std::size_t e = 0; e < mesh.num_elements(); ++e) {
    const auto& el = mesh.elements()[e];
    out[static_cast<Eigen::Index>(e)] = (u[el[0]] + u[el[1]] + u[el[2]]) / 3.0;
  }
  return out;
}

Eigen::MatrixXd boundary_mass_matrix(const TriMesh& mesh) {
  const std::size_t nb = mesh.num_boundary_nodes();
  Eigen::MatrixXd mass = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(nb), static_cast<Eigen::Index>(nb));
  const auto& boundary = mesh.boundary_nodes();
  for (std::size_t i = 0; i < nb; ++i) {
    const std::size_t j = (i + 1) % nb;
    const Point2 a = mesh.nodes()[boundary[i]], b = mesh.nodes()[boundary[j]];
    const double length = std::hypot(b.x - a.x, b.y - a.y);
    const auto ii = static_cast<Eigen::Index>(i), jj = static_cast<Eigen::Index>(j);
    mass(ii, ii) += length / 3.0;
    mass(jj, jj) += length / 3.0;
    mass(ii, jj) += length / 6.0;
    mass(jj, ii) += length / 6.0;
  }
  return mass;
}

double energy(const AssembledSystem& sys, const Eigen::VectorXd& u) { return u.dot(sys.matrix() * u); }

}  // namespace optitomo
