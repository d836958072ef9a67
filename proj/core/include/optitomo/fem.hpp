#pragma once

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include <memory>
#include <vector>

#include "optitomo/field.hpp"

namespace optitomo {

using SparseMatrix = Eigen::SparseMatrix<double>;

/// P1 system for -div(sigma grad u) + q u = 0 with piecewise-constant
/// coefficients. Element integrals are exact. The SPD matrix is factorised
/// once (sparse LDL^T) and reused for every right-hand side; the interior
/// block used by Dirichlet solves is factorised on first use. Solves are
/// const and may run concurrently.
///
/// q > 0 on a set of positive area makes the Neumann problem coercive, so no
/// mean-value gauge is imposed.
class AssembledSystem {
 public:
  AssembledSystem(PiecewiseConstantField sigma, PiecewiseConstantField q);
  ~AssembledSystem();
  AssembledSystem(AssembledSystem&&) noexcept;
  AssembledSystem& operator=(AssembledSystem&&) noexcept;

  const MeshPtr& mesh() const { return sigma_.mesh; }
  const PiecewiseConstantField& sigma() const { return sigma_; }
  const PiecewiseConstantField& q() const { return q_; }
  const SparseMatrix& matrix() const { return matrix_; }

  /// Load vector of the boundary functional w -> int_{dOmega} g w ds.
  Eigen::VectorXd boundary_load(const BoundaryTrace& g) const;
  /// Load vector of w -> int F w dx for a piecewise-constant F.
  Eigen::VectorXd source_load(const PiecewiseConstantField& source) const;

  /// Solves A x = rhs with the cached factorisation; throws NumericalFailure
  /// if the relative residual exceeds 1e-8.
  Eigen::VectorXd solve(const Eigen::VectorXd& rhs) const;
  Eigen::MatrixXd solve(const Eigen::MatrixXd& rhs) const;

  /// Interior unknowns for prescribed boundary values.
  Eigen::VectorXd solve_with_boundary_values(const Eigen::VectorXd& boundary_values) const;

 private:
  struct Factorizations;

  PiecewiseConstantField sigma_;
  PiecewiseConstantField q_;
  SparseMatrix matrix_;
  std::unique_ptr<Factorizations> factors_;
};

AssembledSystem assemble(const MeshPtr& mesh, const PiecewiseConstantField& sigma, const PiecewiseConstantField& q);

/// Weak Neumann problem: A u = boundary_load(g).
NodalField solve_neumann(const AssembledSystem& sys, const BoundaryTrace& g);

/// u = f on boundary nodes exactly, interior rows of A u vanish.
NodalField solve_dirichlet(const AssembledSystem& sys, const BoundaryTrace& f);

/// A v = source_load(F).
NodalField solve_source(const AssembledSystem& sys, const PiecewiseConstantField& source);

/// Same, with F masked to elements whose partition label is listed.
NodalField solve_source(const AssembledSystem& sys, const PiecewiseConstantField& source, const Partition& partition,
                        const std::vector<int>& support_labels);

/// Constant P1 gradient on every element.
std::vector<Eigen::Vector2d> element_gradients(const NodalField& u);

/// Per-element exact integrals of products of two P1 functions.
Eigen::VectorXd element_mass_products(const TriMesh& mesh, const Eigen::VectorXd& u, const Eigen::VectorXd& v);
/// Per-element int_e grad u . grad v.
Eigen::VectorXd element_gradient_products(const TriMesh& mesh, const Eigen::VectorXd& u, const Eigen::VectorXd& v);

inline Eigen::VectorXd element_mass_squares(const TriMesh& mesh, const Eigen::VectorXd& u) {
  return element_mass_products(mesh, u, u);
}
inline Eigen::VectorXd element_gradient_squares(const TriMesh& mesh, const Eigen::VectorXd& u) {
  return element_gradient_products(mesh, u, u);
}

/// Per-element mean of a P1 function (L2 projection onto P0).
Eigen::VectorXd element_means(const TriMesh& mesh, const Eigen::VectorXd& u);

/// Dense n_b x n_b boundary mass matrix of the piecewise-linear boundary
/// functions, in boundary order.
Eigen::MatrixXd boundary_mass_matrix(const TriMesh& mesh);

/// Energy u^T A u = int sigma |grad u|^2 + q u^2.
double energy(const AssembledSystem& sys, const Eigen::VectorXd& u);

}  // namespace optitomo
